//! Positive definite kernel functions, the storage function built by
//! summing kernel values along a predicted trajectory, and the supply
//! values derived from tail states.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::core::{ComparisonFunction, InputVec, NormOrder, StateVec};
use crate::error::{Error, Result};

/// Scalar positive definite function of the state with an available
/// gradient. Shipped as quadratic forms; the trait leaves the family open.
pub trait Kernel: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &DVector<f64>) -> f64;
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;
}

/// `l(x) = x' Q x` with `Q` symmetric positive definite. Its class-K bounds
/// in the 2-norm are exact: `lambda_min(Q) s^2 <= l <= lambda_max(Q) s^2`.
#[derive(Debug, Clone)]
pub struct QuadraticKernel {
    q: DMatrix<f64>,
    lambda_min: f64,
    lambda_max: f64,
}

impl QuadraticKernel {
    /// Validates symmetry and positive definiteness via a Cholesky
    /// factorization attempt; failure rejects the kernel.
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != q.ncols() {
            return Err(Error::InvalidInput(format!(
                "kernel matrix must be square, got {}x{}",
                q.nrows(),
                q.ncols()
            )));
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("kernel matrix has non-finite entries".into()));
        }
        let asym = (&q - q.transpose()).abs().max();
        let scale = q.abs().max().max(1.0);
        if asym > 1e-12 * scale {
            return Err(Error::InvalidInput("kernel matrix is not symmetric".into()));
        }
        if nalgebra::linalg::Cholesky::new(q.clone()).is_none() {
            return Err(Error::InvalidInput("kernel matrix is not positive definite".into()));
        }
        let eigen = q.clone().symmetric_eigen();
        let lambda_min = eigen.eigenvalues.min();
        let lambda_max = eigen.eigenvalues.max();
        Ok(Self { q, lambda_min, lambda_max })
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// `alpha_1(s) = lambda_min(Q) s^2`.
    pub fn lower_bound(&self) -> ComparisonFunction {
        ComparisonFunction::power_law(self.lambda_min, 2.0)
            .expect("positive definite kernel has positive lambda_min")
    }

    /// `alpha_2(s) = lambda_max(Q) s^2`.
    pub fn upper_bound(&self) -> ComparisonFunction {
        ComparisonFunction::power_law(self.lambda_max, 2.0)
            .expect("positive definite kernel has positive lambda_max")
    }
}

impl Kernel for QuadraticKernel {
    fn dim(&self) -> usize {
        self.q.nrows()
    }

    fn eval(&self, x: &DVector<f64>) -> f64 {
        (x.transpose() * &self.q * x)[(0, 0)]
    }

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        // Q symmetric, so the gradient of x'Qx is 2Qx.
         2.0 * (&self.q * x)
    }
}

/// Kernel value of a state, with dimension and finiteness checks.
pub fn kernel_eval(kernel: &dyn Kernel, x: &StateVec) -> Result<f64> {
    if x.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim(),
            got: x.dim(),
            what: "kernel argument",
        });
    }
    let v = kernel.eval(x.as_vector());
    if !v.is_finite() {
        return Err(Error::NumericOverflow("kernel value is non-finite".into()));
    }
    Ok(v)
}

/// Storage value `V = sum of l(x(i))` over a horizon of `N` states along
/// with the per-stage kernel values.
#[derive(Debug, Clone, PartialEq)]
pub struct StorageValue {
    value: f64,
    horizon: usize,
    per_stage: Vec<f64>,
}

impl StorageValue {
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn per_stage(&self) -> &[f64] {
        &self.per_stage
    }
}

/// Sums the kernel along `states`, which must hold exactly `horizon >= 2`
/// entries starting at the current state.
pub fn storage_eval(kernel: &dyn Kernel, states: &[StateVec], horizon: usize) -> Result<StorageValue> {
    if horizon < 2 {
        return Err(Error::InvalidInput(format!(
            "storage horizon must be at least 2, got {horizon}"
        )));
    }
    if states.len() != horizon {
        return Err(Error::DimensionMismatch {
            expected: horizon,
            got: states.len(),
            what: "storage state sequence",
        });
    }
    let per_stage: Vec<f64> = states
        .iter()
        .map(|x| kernel_eval(kernel, x))
        .collect::<Result<_>>()?;
    let value = per_stage.iter().sum();
    Ok(StorageValue { value, horizon, per_stage })
}

/// Supply value `s = l(x_tail) - l(x_k)`. The sign is meaningful and
/// unconstrained here.
pub fn supply_eval(kernel: &dyn Kernel, x_k: &StateVec, x_tail: &StateVec) -> Result<f64> {
    Ok(kernel_eval(kernel, x_tail)? - kernel_eval(kernel, x_k)?)
}

/// Realized supply at one time step, together with the tail pair that
/// produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyRecord {
    pub time: usize,
    pub s_value: f64,
    pub tail_state: StateVec,
    pub tail_input: InputVec,
}

/// Outcome of checking the kernel's class-K bounds on sampled states.
#[derive(Debug, Clone)]
pub struct StorageBoundsReport {
    pub alpha1_coeff: f64,
    pub alpha2_coeff: f64,
    pub samples: usize,
    pub violations: usize,
}

impl StorageBoundsReport {
    pub fn ok(&self) -> bool {
        self.violations == 0
    }
}

/// For quadratic kernels the eigenvalue bounds are exact; sampling within
/// `radius` (2-norm) is a cross-check of the implementation, not of the
/// mathematics.
pub fn storage_bounds_check(
    kernel: &QuadraticKernel,
    radius: f64,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<StorageBoundsReport> {
    if samples == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    let n = kernel.dim();
    let alpha1 = kernel.lower_bound();
    let alpha2 = kernel.upper_bound();
    let mut violations = 0usize;
    for _ in 0..samples {
        let x = DVector::from_fn(n, |_, _| rng.gen_range(-radius..radius));
        let s = crate::core::norm(&x, NormOrder::Two)?;
        let l = kernel.eval(&x);
        // Tiny slack absorbs the roundoff between x'Qx and lambda*s^2.
        let slack = 1e-12 * (1.0 + l.abs());
        if l < alpha1.value(s) - slack || l > alpha2.value(s) + slack {
            violations += 1;
        }
    }
    Ok(StorageBoundsReport {
        alpha1_coeff: kernel.lambda_min(),
        alpha2_coeff: kernel.lambda_max(),
        samples,
        violations,
    })
}
