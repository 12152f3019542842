//! Single-shooting finite-horizon nonlinear programs.
//!
//! Decision variables are the stacked inputs; states are eliminated by
//! rolling the model forward from the given initial state. Constraints are
//! input membership (handled by projection), state membership (augmented
//! Lagrangian) and at most one scalar terminal inequality (the supply
//! budget of the constrained scheme).

mod solver;

use std::sync::Arc;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::SystemModel;
use crate::storage::Kernel;

pub use solver::solve;

/// Objective over a rolled-out trajectory `[x(0), x(1), ..., x(L)]`.
///
/// Implementations expose per-state gradients so the solver can accumulate
/// the chain rule in reverse through the rollout.
pub trait Objective: Send + Sync {
    fn value(&self, states: &[DVector<f64>]) -> f64;
    /// Gradient of the objective with respect to `states[index]` alone.
    fn state_gradient(&self, states: &[DVector<f64>], index: usize) -> DVector<f64>;
}

/// Sum of a kernel over a selected subset of trajectory indices.
pub struct KernelSumObjective {
    kernel: Arc<dyn Kernel>,
    include: Vec<bool>,
}

impl KernelSumObjective {
    /// Includes indices `0..=last_included` of a trajectory with `len`
    /// entries (`len = L + 1`).
    pub fn prefix(kernel: Arc<dyn Kernel>, len: usize, last_included: usize) -> Self {
        let include = (0..len).map(|i| i <= last_included).collect();
        Self { kernel, include }
    }

    /// Includes exactly one trajectory index.
    pub fn single(kernel: Arc<dyn Kernel>, len: usize, index: usize) -> Self {
        let include = (0..len).map(|i| i == index).collect();
        Self { kernel, include }
    }
}

impl Objective for KernelSumObjective {
    fn value(&self, states: &[DVector<f64>]) -> f64 {
        states
            .iter()
            .zip(&self.include)
            .filter(|(_, inc)| **inc)
            .map(|(x, _)| self.kernel.eval(x))
            .sum()
    }

    fn state_gradient(&self, states: &[DVector<f64>], index: usize) -> DVector<f64> {
        if self.include[index] {
            self.kernel.gradient(&states[index])
        } else {
            DVector::zeros(states[index].len())
        }
    }
}

/// Scalar terminal inequality `g(x(L)) <= bound`.
pub struct TerminalInequality {
    pub function: Arc<dyn Kernel>,
    pub bound: f64,
}

/// A finite-horizon program over `horizon` inputs from a fixed initial
/// state. Input and state sets come from the model.
pub struct ShootingProblem {
    pub model: SystemModel,
    pub x0: DVector<f64>,
    pub horizon: usize,
    pub objective: Arc<dyn Objective>,
    pub terminal_ineq: Option<TerminalInequality>,
}

impl ShootingProblem {
    pub fn new(
        model: SystemModel,
        x0: DVector<f64>,
        horizon: usize,
        objective: Arc<dyn Objective>,
        terminal_ineq: Option<TerminalInequality>,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidInput("shooting horizon must be at least 1".into()));
        }
        if x0.len() != model.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: model.state_dim(),
                got: x0.len(),
                what: "shooting initial state",
            });
        }
        crate::core::ensure_finite(&x0, "shooting initial state")?;
        Ok(Self { model, x0, horizon, objective, terminal_ineq })
    }

    pub(crate) fn input_dim(&self) -> usize {
        self.model.input_dim()
    }

    pub(crate) fn decision_len(&self) -> usize {
        self.horizon * self.input_dim()
    }

    pub(crate) fn split_inputs(&self, z: &DVector<f64>) -> Vec<DVector<f64>> {
        let m = self.input_dim();
        (0..self.horizon).map(|t| z.rows(t * m, m).into_owned()).collect()
    }

    pub(crate) fn stack_inputs(&self, inputs: &[DVector<f64>]) -> DVector<f64> {
        let m = self.input_dim();
        let mut z = DVector::zeros(self.decision_len());
        for (t, u) in inputs.iter().enumerate() {
            z.rows_mut(t * m, m).copy_from(u);
        }
        z
    }

    /// Rollout from `x0`: returns `[x0, x1, ..., xL]`.
    pub(crate) fn trajectory(&self, inputs: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
        let mut states = Vec::with_capacity(inputs.len() + 1);
        states.push(self.x0.clone());
        for u in inputs {
            let next = self.model.step_raw(states.last().unwrap(), u)?;
            states.push(next);
        }
        Ok(states)
    }
}

/// Worst violation across input membership, successor-state membership and
/// the terminal inequality, measured in the sets' own norms.
pub fn check_feasible(problem: &ShootingProblem, inputs: &[DVector<f64>]) -> Result<(bool, f64)> {
    if inputs.len() != problem.horizon {
        return Err(Error::DimensionMismatch {
            expected: problem.horizon,
            got: inputs.len(),
            what: "input sequence",
        });
    }
    let mut worst = 0.0_f64;
    for u in inputs {
        worst = worst.max(problem.model.input_set().violation(u)?);
    }
    let states = problem.trajectory(inputs)?;
    for x in states.iter().skip(1) {
        worst = worst.max(problem.model.state_set().violation(x)?);
    }
    if let Some(term) = &problem.terminal_ineq {
        let g = term.function.eval(states.last().unwrap());
        worst = worst.max((g - term.bound).max(0.0));
    }
    let tol = problem.model.state_set().tol_feas();
    Ok((worst <= tol, worst))
}

/// Gradient of the bare objective (no constraint terms) with respect to the
/// stacked inputs, accumulated in reverse through the rollout.
pub fn evaluate_objective_gradient(
    problem: &ShootingProblem,
    inputs: &[DVector<f64>],
) -> Result<DVector<f64>> {
    if inputs.len() != problem.horizon {
        return Err(Error::DimensionMismatch {
            expected: problem.horizon,
            got: inputs.len(),
            what: "input sequence",
        });
    }
    let states = problem.trajectory(inputs)?;
    solver::reverse_gradient(problem, &states, inputs, |_x, _idx| None)
}

/// How a solve terminated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Stationary to tolerance and feasible.
    Optimal,
    /// Feasible and no worse than the warm start, but stationarity was not
    /// certified before an iteration cap.
    FeasibleImproved,
    /// Optimization stalled; the supplied feasible warm start is returned
    /// unchanged.
    WarmStartReturned,
    /// No iterate reached feasibility and no feasible warm start was given.
    Infeasible,
}

impl SolveStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleImproved => "feasible_improved",
            SolveStatus::WarmStartReturned => "warm_start_returned",
            SolveStatus::Infeasible => "infeasible",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "optimal" => Ok(SolveStatus::Optimal),
            "feasible_improved" => Ok(SolveStatus::FeasibleImproved),
            "warm_start_returned" => Ok(SolveStatus::WarmStartReturned),
            "infeasible" => Ok(SolveStatus::Infeasible),
            other => Err(Error::Parse { line: 0, detail: format!("unknown solve status {other:?}") }),
        }
    }
}

/// Solution of a shooting problem.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Input sequence, length `horizon`.
    pub inputs: Vec<DVector<f64>>,
    /// Successor states `[x(1), ..., x(L)]` under `inputs`.
    pub states: Vec<DVector<f64>>,
    pub objective_value: f64,
    pub status: SolveStatus,
    /// Inner iterations summed over all outer passes.
    pub iterations: usize,
    pub max_constraint_violation: f64,
}

/// Solver tuning knobs. The defaults are deliberate: stationarity is
/// measured relative to the first projected gradient of each subproblem so
/// the solver keeps resolving as the closed loop contracts toward the
/// origin across many orders of magnitude.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Relative stationarity tolerance on the projected-gradient norm.
    pub tol_stat: f64,
    /// Absolute feasibility tolerance.
    pub tol_feas: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub penalty_init: f64,
    pub penalty_growth: f64,
    pub multiplier_max: f64,
    /// Central-difference step for models without analytic Jacobians.
    pub fd_step: f64,
    pub lbfgs_memory: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_stat: 1e-8,
            tol_feas: 1e-8,
            max_outer: 30,
            max_inner: 500,
            penalty_init: 1.0,
            penalty_growth: 10.0,
            multiplier_max: 1e8,
            fd_step: crate::model::DEFAULT_FD_STEP,
            lbfgs_memory: 10,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol_stat", self.tol_stat),
            ("tol_feas", self.tol_feas),
            ("penalty_init", self.penalty_init),
            ("penalty_growth", self.penalty_growth),
            ("multiplier_max", self.multiplier_max),
            ("fd_step", self.fd_step),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("solver option {name} must be positive, got {v}")));
            }
        }
        if self.tol_feas <= 0.0 {
            return Err(Error::InvalidInput("tol_feas must be positive".into()));
        }
        if self.max_inner == 0 || self.max_outer == 0 {
            return Err(Error::InvalidInput("iteration caps must be at least 1".into()));
        }
        Ok(())
    }
}
