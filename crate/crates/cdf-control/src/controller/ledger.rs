//! Time-indexed bookkeeping of realized supply values and kernel history.
//!
//! The cyclic window check and the accumulated budget share one summation
//! path, so recomputing either from raw records reproduces the value used
//! online bit for bit.

use crate::core::ComparisonFunction;
use crate::error::{Error, Result};
use crate::storage::SupplyRecord;

/// Contiguous per-step records of `l(x(k))` and realized supply values.
#[derive(Debug, Clone, Default)]
pub struct SupplyLedger {
    kernel_values: Vec<f64>,
    records: Vec<SupplyRecord>,
}

impl SupplyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers `l(x(k))`; times must arrive contiguously from zero.
    pub fn observe_kernel(&mut self, time: usize, kernel_value: f64) -> Result<()> {
        if time != self.kernel_values.len() {
            return Err(Error::InvalidInput(format!(
                "kernel history must be contiguous: expected time {}, got {time}",
                self.kernel_values.len()
            )));
        }
        self.kernel_values.push(kernel_value);
        Ok(())
    }

    /// Appends a realized supply record; times must arrive contiguously.
    pub fn record_supply(&mut self, record: SupplyRecord) -> Result<()> {
        if record.time != self.records.len() {
            return Err(Error::InvalidInput(format!(
                "supply records must be contiguous: expected time {}, got {}",
                self.records.len(),
                record.time
            )));
        }
        self.records.push(record);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[SupplyRecord] {
        &self.records
    }

    pub fn kernel_values(&self) -> &[f64] {
        &self.kernel_values
    }

    pub fn supply(&self, time: usize) -> Option<f64> {
        self.records.get(time).map(|r| r.s_value)
    }

    pub fn kernel_value(&self, time: usize) -> Option<f64> {
        self.kernel_values.get(time).copied()
    }

    /// Left-fold sum of supplies over an inclusive time range. All window
    /// arithmetic funnels through here.
    fn supply_sum(&self, from: usize, to_inclusive: usize) -> f64 {
        self.records[from..=to_inclusive].iter().map(|r| r.s_value).sum()
    }

    /// Margin of the cyclically negative supply window ending at `time`:
    /// `-rho(l(x(time-m+1))) - sum of s over the window`. Non-negative
    /// margin means the window passes.
    pub fn window_margin(&self, time: usize, m: usize, rho: &ComparisonFunction) -> Result<f64> {
        if m == 0 {
            return Err(Error::InvalidInput("window length must be at least 1".into()));
        }
        if time + 1 < m {
            return Err(Error::InsufficientHistory { time, needed: m });
        }
        let start = time + 1 - m;
        if self.records.len() <= time || self.kernel_values.len() <= start {
            return Err(Error::InsufficientHistory { time, needed: m });
        }
        let sum = self.supply_sum(start, time);
        Ok(-rho.value(self.kernel_values[start]) - sum)
    }

    /// The online window check: true iff the supplies over the window
    /// ending at `time` sum to no more than `-rho(l)` at the window start.
    /// The inequality is exact; supply values are computed, not measured.
    pub fn cyclic_window_holds(
        &self,
        time: usize,
        m: usize,
        rho: &ComparisonFunction,
    ) -> Result<bool> {
        Ok(self.window_margin(time, m, rho)? >= 0.0)
    }

    /// Accumulated supply budget available at `time >= m`:
    /// `-sum of s over the previous m-1 steps - rho(l(x(time-m+1)))`.
    pub fn supply_budget(&self, time: usize, m: usize, rho: &ComparisonFunction) -> Result<f64> {
        if m == 0 {
            return Err(Error::InvalidInput("cycle length must be at least 1".into()));
        }
        if time < m {
            return Err(Error::InsufficientHistory { time, needed: m });
        }
        let start = time + 1 - m;
        if self.kernel_values.len() <= start || self.records.len() < time {
            return Err(Error::InsufficientHistory { time, needed: m });
        }
        let past = if m == 1 { 0.0 } else { self.supply_sum(start, time - 1) };
        Ok(-past - rho.value(self.kernel_values[start]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::{InputVec, StateVec};

    fn rho() -> ComparisonFunction {
        ComparisonFunction::linear(0.99).unwrap()
    }

    fn push(ledger: &mut SupplyLedger, time: usize, l: f64, s: f64) {
        ledger.observe_kernel(time, l).unwrap();
        ledger
            .record_supply(SupplyRecord {
                time,
                s_value: s,
                tail_state: StateVec::zeros(1),
                tail_input: InputVec::zeros(1),
            })
            .unwrap();
    }

    #[test]
    fn equilibrium_window_passes_with_zero_margin() {
        let mut ledger = SupplyLedger::new();
        for k in 0..4 {
            push(&mut ledger, k, 0.0, 0.0);
        }
        assert!(ledger.cyclic_window_holds(3, 4, &rho()).unwrap());
        assert_eq!(ledger.window_margin(3, 4, &rho()).unwrap(), 0.0);
    }

    #[test]
    fn single_step_window_inequality_arithmetic() {
        // -0.5 <= -0.99 * 0.45 = -0.4455 holds; -0.4 does not.
        let mut ledger = SupplyLedger::new();
        push(&mut ledger, 0, 0.45, -0.5);
        assert!(ledger.cyclic_window_holds(0, 1, &rho()).unwrap());

        let mut ledger = SupplyLedger::new();
        push(&mut ledger, 0, 0.45, -0.4);
        assert!(!ledger.cyclic_window_holds(0, 1, &rho()).unwrap());
    }

    #[test]
    fn budget_reduces_to_rho_of_current_kernel_for_unit_cycle() {
        let mut ledger = SupplyLedger::new();
        push(&mut ledger, 0, 0.2, -0.1);
        push(&mut ledger, 1, 0.45, -0.2);
        let g = ledger.supply_budget(1, 1, &rho()).unwrap();
        assert!((g + 0.99 * 0.45).abs() < 1e-15);
    }

    #[test]
    fn budget_arithmetic_for_two_step_cycle() {
        // Gamma = -(-0.3) - 0.99*0.45 = -0.1455.
        let mut ledger = SupplyLedger::new();
        push(&mut ledger, 0, 0.0, 0.0);
        push(&mut ledger, 1, 0.45, -0.3);
        ledger.observe_kernel(2, 0.1).unwrap();
        let g = ledger.supply_budget(2, 2, &rho()).unwrap();
        assert!((g - (0.3 - 0.4455)).abs() < 1e-15);
    }

    #[test]
    fn equilibrium_budget_is_zero() {
        let mut ledger = SupplyLedger::new();
        push(&mut ledger, 0, 0.0, 0.0);
        push(&mut ledger, 1, 0.0, 0.0);
        assert_eq!(ledger.supply_budget(1, 1, &rho()).unwrap(), 0.0);
        push(&mut ledger, 2, 0.0, 0.0);
        assert_eq!(ledger.supply_budget(2, 2, &rho()).unwrap(), 0.0);
    }

    #[test]
    fn insufficient_history_is_an_error() {
        let mut ledger = SupplyLedger::new();
        push(&mut ledger, 0, 0.45, -0.5);
        assert!(matches!(
            ledger.cyclic_window_holds(0, 2, &rho()),
            Err(Error::InsufficientHistory { .. })
        ));
        assert!(matches!(
            ledger.supply_budget(0, 1, &rho()),
            Err(Error::InsufficientHistory { .. })
        ));
    }

    #[test]
    fn records_must_be_contiguous() {
        let mut ledger = SupplyLedger::new();
        push(&mut ledger, 0, 0.1, -0.1);
        let bad = SupplyRecord {
            time: 2,
            s_value: 0.0,
            tail_state: StateVec::zeros(1),
            tail_input: InputVec::zeros(1),
        };
        assert!(ledger.record_supply(bad).is_err());
        assert!(ledger.observe_kernel(5, 0.0).is_err());
    }
}
