//! Discrete-time system models: the generic transition interface, the
//! two-generator benchmark and small synthetic test systems.

mod library;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::core::{ensure_finite, norm, InputVec, NormBallSet, StateVec};
use crate::error::{Error, Result};

pub use library::{
    double_integrator, registry, registered_model, scalar_linear, two_generator_benchmark,
    GENERATOR_A, GENERATOR_B1, GENERATOR_B2,
};

/// Central-difference step for Jacobians when no analytic ones are supplied.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// State-transition map `x(k+1) = f(x(k), u(k))` with optional analytic
/// Jacobians. Implementations must be deterministic and zero at zero.
pub trait Dynamics: Send + Sync {
    fn state_dim(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn eval(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64>;

    /// `(df/dx, df/du)` at `(x, u)`, when available in closed form.
    fn jacobians(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        None
    }
}

/// A named dynamical system together with its state and input sets.
#[derive(Clone)]
pub struct SystemModel {
    name: String,
    dynamics: Arc<dyn Dynamics>,
    state_set: NormBallSet,
    input_set: NormBallSet,
}

impl std::fmt::Debug for SystemModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SystemModel")
            .field("name", &self.name)
            .field("n", &self.state_dim())
            .field("m", &self.input_dim())
            .finish()
    }
}

impl SystemModel {
    /// Wraps dynamics and constraint sets, rejecting models whose transition
    /// is not zero at zero or whose set dimensions disagree.
    pub fn new(
        name: impl Into<String>,
        dynamics: Arc<dyn Dynamics>,
        state_set: NormBallSet,
        input_set: NormBallSet,
    ) -> Result<Self> {
        let n = dynamics.state_dim();
        let m = dynamics.input_dim();
        if state_set.dimension() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: state_set.dimension(),
                what: "state set dimension",
            });
        }
        if input_set.dimension() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: input_set.dimension(),
                what: "input set dimension",
            });
        }
        let at_origin = dynamics.eval(&DVector::zeros(n), &DVector::zeros(m));
        if at_origin.iter().any(|v| *v != 0.0) {
            return Err(Error::InvalidInput(format!(
                "model {:?} is not zero at zero: f(0,0) = {:?}",
                name.into(),
                at_origin.as_slice()
            )));
        }
        Ok(Self { name: name.into(), dynamics, state_set, input_set })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_dim(&self) -> usize {
        self.dynamics.state_dim()
    }

    pub fn input_dim(&self) -> usize {
        self.dynamics.input_dim()
    }

    pub fn state_set(&self) -> &NormBallSet {
        &self.state_set
    }

    pub fn input_set(&self) -> &NormBallSet {
        &self.input_set
    }

    /// Replaces both constraint sets (scenario overrides).
    pub fn with_sets(mut self, state_set: NormBallSet, input_set: NormBallSet) -> Result<Self> {
        if state_set.dimension() != self.state_dim() || input_set.dimension() != self.input_dim() {
            return Err(Error::InvalidInput("override sets have wrong dimensions".into()));
        }
        self.state_set = state_set;
        self.input_set = input_set;
        Ok(self)
    }

    fn check_dims(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<()> {
        if x.len() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.state_dim(),
                got: x.len(),
                what: "state",
            });
        }
        if u.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                got: u.len(),
                what: "input",
            });
        }
        Ok(())
    }

    /// One transition. No constraint check is performed here; constraints
    /// are the optimizer's job.
    pub fn step(&self, x: &StateVec, u: &InputVec) -> Result<StateVec> {
        let next = self.step_raw(x.as_vector(), u.as_vector())?;
        StateVec::from_vector(next)
    }

    pub(crate) fn step_raw(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dims(x, u)?;
        ensure_finite(x, "state")?;
        ensure_finite(u, "input")?;
        let next = self.dynamics.eval(x, u);
        if next.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow(format!(
                "transition of model {:?} produced a non-finite state",
                self.name
            )));
        }
        Ok(next)
    }

    /// Open-loop rollout: returns the successor sequence `[x(1), ..., x(L)]`
    /// for `L = inputs.len()`.
    pub fn rollout(&self, x0: &StateVec, inputs: &[InputVec]) -> Result<Vec<StateVec>> {
        if inputs.is_empty() {
            return Err(Error::InvalidInput("rollout needs at least one input".into()));
        }
        let raw = self.rollout_raw(
            x0.as_vector(),
            &inputs.iter().map(|u| u.as_vector().clone()).collect::<Vec<_>>(),
        )?;
        raw.into_iter().map(StateVec::from_vector).collect()
    }

    pub(crate) fn rollout_raw(
        &self,
        x0: &DVector<f64>,
        inputs: &[DVector<f64>],
    ) -> Result<Vec<DVector<f64>>> {
        let mut states = Vec::with_capacity(inputs.len());
        let mut current = x0.clone();
        for u in inputs {
            current = self.step_raw(&current, u)?;
            states.push(current.clone());
        }
        Ok(states)
    }

    /// `(df/dx, df/du)` at `(x, u)`: analytic when the dynamics provide
    /// them, otherwise central finite differences with step `h`.
    pub fn jacobians(&self, x: &DVector<f64>, u: &DVector<f64>, h: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        self.check_dims(x, u)?;
        if let Some(pair) = self.dynamics.jacobians(x, u) {
            return Ok(pair);
        }
        self.jacobians_fd(x, u, h)
    }

    /// Central-difference Jacobians, ignoring any analytic ones.
    pub fn jacobians_fd(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        h: f64,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidInput(format!("finite-difference step must be positive, got {h}")));
        }
        self.check_dims(x, u)?;
        let n = self.state_dim();
        let m = self.input_dim();
        let mut dfdx = DMatrix::zeros(n, n);
        let mut dfdu = DMatrix::zeros(n, m);
        let mut xp = x.clone();
        for j in 0..n {
            xp[j] = x[j] + h;
            let plus = self.step_raw(&xp, u)?;
            xp[j] = x[j] - h;
            let minus = self.step_raw(&xp, u)?;
            xp[j] = x[j];
            dfdx.set_column(j, &((plus - minus) / (2.0 * h)));
        }
        let mut up = u.clone();
        for j in 0..m {
            up[j] = u[j] + h;
            let plus = self.step_raw(x, &up)?;
            up[j] = u[j] - h;
            let minus = self.step_raw(x, &up)?;
            up[j] = u[j];
            dfdu.set_column(j, &((plus - minus) / (2.0 * h)));
        }
        if dfdx.iter().chain(dfdu.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericOverflow("finite-difference Jacobian is non-finite".into()));
        }
        Ok((dfdx, dfdu))
    }
}

/// Outcome of the sampled growth-bound check `||f(x, policy(x))|| <= c ||x||`.
///
/// Advisory: sampling can falsify the bound, never prove it.
#[derive(Debug, Clone)]
pub struct KBoundednessReport {
    /// Shell radii that were sampled, ascending.
    pub shell_radii: Vec<f64>,
    /// Largest `||f(x, policy(x))|| / ||x||` observed on each shell.
    pub max_ratio_profile: Vec<f64>,
    /// Tightest linear growth coefficient consistent with all samples.
    pub fitted_coeff: f64,
    /// States where the transition failed or returned non-finite values.
    pub violations: Vec<StateVec>,
    /// False when the ratio profile blows up toward the origin, which is
    /// incompatible with any linear class-K bound.
    pub bounded: bool,
}

/// Ratio-profile blow-up factor between the innermost and outermost shell
/// that flags the growth bound as falsified.
const RATIO_BLOWUP_FACTOR: f64 = 10.0;

/// Samples states on norm shells of the state set and fits the tightest
/// `sigma(s) = c*s` consistent with the closed-loop transition under
/// `policy`. Canonical basis directions are always included so that the
/// fitted coefficient is bounded below by the largest attained column
/// amplification.
pub fn check_k_boundedness<F>(
    model: &SystemModel,
    policy: F,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<KBoundednessReport>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    if samples == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let n = model.state_dim();
    let order = model.state_set().norm_order();
    let scale = model.state_set().radius() / 10.0;
    let shell_radii: Vec<f64> = [0.01, 0.1, 1.0, 5.0, 10.0].iter().map(|r| r * scale).collect();

    let mut profile = vec![0.0_f64; shell_radii.len()];
    let mut violations = Vec::new();
    let mut fitted = 0.0_f64;

    for (si, &radius) in shell_radii.iter().enumerate() {
        let mut directions: Vec<DVector<f64>> = (0..n)
            .map(|j| {
                let mut e = DVector::zeros(n);
                e[j] = 1.0;
                e
            })
            .collect();
        for _ in 0..samples {
            let d = DVector::from_fn(n, |_, _| rng.gen_range(-1.0_f64..1.0));
            if d.iter().all(|v| v.abs() < 1e-12) {
                continue;
            }
            directions.push(d);
        }
        for d in directions {
            let dn = norm(&d, order)?;
            let x = d * (radius / dn);
            let u = policy(&x);
            let next = match model.step_raw(&x, &u) {
                Ok(v) => v,
                Err(_) => {
                    violations.push(StateVec::from_vector(x)?);
                    continue;
                }
            };
            let xn = norm(&x, order)?;
            if xn == 0.0 {
                // Ratio undefined at the origin by definition.
                continue;
            }
            let ratio = norm(&next, order)? / xn;
            profile[si] = profile[si].max(ratio);
            fitted = fitted.max(ratio);
        }
    }

    let innermost = profile.first().copied().unwrap_or(0.0);
    let outermost = profile.last().copied().unwrap_or(0.0);
    let bounded =
        violations.is_empty() && (innermost <= RATIO_BLOWUP_FACTOR * outermost.max(f64::MIN_POSITIVE));

    Ok(KBoundednessReport {
        shell_radii,
        max_ratio_profile: profile,
        fitted_coeff: fitted,
        violations,
        bounded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core::NormOrder;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn generator() -> SystemModel {
        two_generator_benchmark().unwrap()
    }

    /// Independent matrix-vector oracle for the benchmark transition.
    fn generator_oracle(x: &[f64; 4], u: &[f64; 2]) -> [f64; 4] {
        let coupling = (x[0] - x[2]).sin();
        [
            x[0] + 31.4159 * x[1],
            0.999 * x[1] + 0.01 * u[0] - 0.005 * coupling,
            x[2] + 31.4159 * x[3],
            0.999 * x[3] + 0.01 * u[1] + 0.005 * coupling,
        ]
    }

    #[test]
    fn benchmark_step_matches_independent_evaluation() {
        let model = generator();
        let x = StateVec::new(vec![0.0, 0.15, 0.0, -0.15]).unwrap();
        let u = InputVec::zeros(2);
        let next = model.step(&x, &u).unwrap();
        let expected = generator_oracle(&[0.0, 0.15, 0.0, -0.15], &[0.0, 0.0]);
        for i in 0..4 {
            assert!((next[i] - expected[i]).abs() < 1e-15);
        }
        // Spec'd magnitudes of the zero-input step.
        assert!((next[0] - 4.712385).abs() < 1e-12);
        assert!((next[1] - 0.149850).abs() < 1e-12);
        assert!((next[2] + 4.712385).abs() < 1e-12);
        assert!((next[3] + 0.149850).abs() < 1e-12);
    }

    #[test]
    fn zero_maps_to_zero() {
        let model = generator();
        let next = model.step(&StateVec::zeros(4), &InputVec::zeros(2)).unwrap();
        assert!(next.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn scalar_test_system_arithmetic() {
        let model = scalar_linear().unwrap();
        let next = model
            .step(&StateVec::new(vec![1.0]).unwrap(), &InputVec::new(vec![0.25]).unwrap())
            .unwrap();
        assert_eq!(next[0], 0.75);
    }

    #[test]
    fn rollout_repeats_the_step_oracle() {
        let model = generator();
        let x0 = StateVec::new(vec![0.0, 0.15, 0.0, -0.15]).unwrap();
        let inputs = vec![InputVec::zeros(2), InputVec::zeros(2)];
        let states = model.rollout(&x0, &inputs).unwrap();
        assert_eq!(states.len(), 2);
        let first = generator_oracle(&[0.0, 0.15, 0.0, -0.15], &[0.0, 0.0]);
        for i in 0..4 {
            assert!((states[0][i] - first[i]).abs() < 1e-15);
        }
        let second = generator_oracle(&first, &[0.0, 0.0]);
        for i in 0..4 {
            assert!((states[1][i] - second[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn rollout_from_equilibrium_stays_at_equilibrium() {
        let model = generator();
        let states = model.rollout(&StateVec::zeros(4), &[InputVec::zeros(2)]).unwrap();
        assert_eq!(states.len(), 1);
        assert!(states[0].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn scalar_rollout_forced_arithmetic() {
        let model = scalar_linear().unwrap();
        let states = model
            .rollout(
                &StateVec::new(vec![1.0]).unwrap(),
                &[InputVec::new(vec![0.25]).unwrap(), InputVec::new(vec![0.0]).unwrap()],
            )
            .unwrap();
        assert_eq!(states[0][0], 0.75);
        assert_eq!(states[1][0], 0.375);
    }

    #[test]
    fn rollout_concatenation_property() {
        let model = generator();
        let x0 = StateVec::new(vec![0.1, 0.02, -0.3, 0.01]).unwrap();
        let a = vec![InputVec::new(vec![0.5, -0.2]).unwrap(), InputVec::new(vec![0.1, 0.0]).unwrap()];
        let b = vec![InputVec::new(vec![-0.3, 0.4]).unwrap()];
        let joined: Vec<InputVec> = a.iter().chain(b.iter()).cloned().collect();
        let full = model.rollout(&x0, &joined).unwrap();
        let head = model.rollout(&x0, &a).unwrap();
        let tail = model.rollout(head.last().unwrap(), &b).unwrap();
        let glued: Vec<StateVec> = head.into_iter().chain(tail).collect();
        assert_eq!(full, glued);
    }

    #[test]
    fn fd_jacobian_matches_analytic_linearization_at_origin() {
        let model = generator();
        let (dfdx, dfdu) = model
            .jacobians_fd(&DVector::zeros(4), &DVector::zeros(2), DEFAULT_FD_STEP)
            .unwrap();
        // d/dx sin(x1 - x3) at 0 is [1, 0, -1, 0]; analytic oracle.
        let mut expected = DMatrix::zeros(4, 4);
        for (i, row) in GENERATOR_A.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                expected[(i, j)] = *v;
            }
        }
        for i in 0..4 {
            expected[(i, 0)] += GENERATOR_B2[i];
            expected[(i, 2)] -= GENERATOR_B2[i];
        }
        assert!((dfdx - expected).abs().max() < 1e-5);

        let mut b1 = DMatrix::zeros(4, 2);
        for (i, row) in GENERATOR_B1.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                b1[(i, j)] = *v;
            }
        }
        // f is affine in u, so central differences are exact to roundoff.
        assert!((dfdu - b1).abs().max() < 1e-8);
    }

    #[test]
    fn fd_jacobian_of_linear_system_is_exact() {
        let model = scalar_linear().unwrap();
        let (dfdx, dfdu) = model
            .jacobians_fd(&DVector::from_vec(vec![0.7]), &DVector::from_vec(vec![-0.1]), 1e-6)
            .unwrap();
        assert!((dfdx[(0, 0)] - 0.5).abs() < 1e-9);
        assert!((dfdu[(0, 0)] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn analytic_jacobians_agree_with_finite_differences() {
        let model = generator();
        let x = DVector::from_vec(vec![1.2, -0.4, 0.3, 0.05]);
        let u = DVector::from_vec(vec![0.7, -1.1]);
        let (ax, au) = model.jacobians(&x, &u, DEFAULT_FD_STEP).unwrap();
        let (fx, fu) = model.jacobians_fd(&x, &u, DEFAULT_FD_STEP).unwrap();
        assert!((ax - fx).abs().max() < 1e-7);
        assert!((au - fu).abs().max() < 1e-9);
    }

    #[test]
    fn k_boundedness_accepts_the_benchmark() {
        let model = generator();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let report = check_k_boundedness(&model, |_| DVector::zeros(2), 200, &mut rng).unwrap();
        assert!(report.bounded);
        assert!(report.violations.is_empty());
        // Basis directions are always sampled, so the fit dominates the
        // amplification of the second column of A.
        let col2 = (31.4159_f64.powi(2) + 0.999_f64.powi(2)).sqrt();
        assert!(report.fitted_coeff >= col2 * 0.999);
    }

    #[test]
    fn k_boundedness_flags_discontinuity_at_origin() {
        struct Pathological;
        impl Dynamics for Pathological {
            fn state_dim(&self) -> usize {
                2
            }
            fn input_dim(&self) -> usize {
                1
            }
            fn eval(&self, x: &DVector<f64>, _u: &DVector<f64>) -> DVector<f64> {
                let n = x.norm();
                if n == 0.0 {
                    DVector::zeros(2)
                } else {
                    x / n
                }
            }
        }
        let model = SystemModel::new(
            "pathological",
            Arc::new(Pathological),
            NormBallSet::new(10.0, NormOrder::Two, 2).unwrap(),
            NormBallSet::new(1.0, NormOrder::Two, 1).unwrap(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let report = check_k_boundedness(&model, |_| DVector::zeros(1), 100, &mut rng).unwrap();
        assert!(!report.bounded);
    }

    #[test]
    fn model_not_zero_at_zero_is_rejected() {
        struct Offset;
        impl Dynamics for Offset {
            fn state_dim(&self) -> usize {
                1
            }
            fn input_dim(&self) -> usize {
                1
            }
            fn eval(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
                DVector::from_vec(vec![x[0] + u[0] + 1.0])
            }
        }
        let result = SystemModel::new(
            "offset",
            Arc::new(Offset),
            NormBallSet::new(1.0, NormOrder::Two, 1).unwrap(),
            NormBallSet::new(1.0, NormOrder::Two, 1).unwrap(),
        );
        assert!(result.is_err());
    }

    #[test]
    fn registry_resolves_all_names() {
        for name in registry() {
            let model = registered_model(name, None, None).unwrap();
            assert_eq!(model.name(), *name);
        }
        assert!(registered_model("no_such_model", None, None).is_err());
    }
}
