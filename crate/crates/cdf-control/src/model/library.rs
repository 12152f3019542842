//! Built-in models: the interconnected-generator benchmark and two small
//! synthetic systems used throughout the tests.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::core::{NormBallSet, NormOrder};
use crate::error::{Error, Result};
use crate::model::{Dynamics, SystemModel};

/// Forward-Euler swing dynamics of two coupled generators, 0.1 s sampling.
/// Odd state indices are angle deviations [rad], even ones frequency
/// deviations [rad/s]; the inputs drive the mechanical power.
pub const GENERATOR_A: [[f64; 4]; 4] = [
    [1.0, 31.4159, 0.0, 0.0],
    [0.0, 0.999, 0.0, 0.0],
    [0.0, 0.0, 1.0, 31.4159],
    [0.0, 0.0, 0.0, 0.999],
];

pub const GENERATOR_B1: [[f64; 2]; 4] = [
    [0.0, 0.0],
    [0.01, 0.0],
    [0.0, 0.0],
    [0.0, 0.01],
];

pub const GENERATOR_B2: [f64; 4] = [0.0, -0.005, 0.0, 0.005];

struct GeneratorDynamics {
    a: DMatrix<f64>,
    b1: DMatrix<f64>,
    b2: DVector<f64>,
}

impl GeneratorDynamics {
    fn new() -> Self {
        let a = DMatrix::from_fn(4, 4, |i, j| GENERATOR_A[i][j]);
        let b1 = DMatrix::from_fn(4, 2, |i, j| GENERATOR_B1[i][j]);
        let b2 = DVector::from_column_slice(&GENERATOR_B2);
        Self { a, b1, b2 }
    }
}

impl Dynamics for GeneratorDynamics {
    fn state_dim(&self) -> usize {
        4
    }

    fn input_dim(&self) -> usize {
        2
    }

    fn eval(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        // Angle deviations are in radians; the coupling is sin(x1 - x3).
        let coupling = (x[0] - x[2]).sin();
        &self.a * x + &self.b1 * u + &self.b2 * coupling
    }

    fn jacobians(&self, x: &DVector<f64>, _u: &DVector<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        let c = (x[0] - x[2]).cos();
        let mut dfdx = self.a.clone();
        for i in 0..4 {
            dfdx[(i, 0)] += self.b2[i] * c;
            dfdx[(i, 2)] -= self.b2[i] * c;
        }
        Some((dfdx, self.b1.clone()))
    }
}

/// The two-generator benchmark with its published constraint sets
/// `||x|| <= 10`, `||u|| <= 5` (infinity norm).
pub fn two_generator_benchmark() -> Result<SystemModel> {
    SystemModel::new(
        "generator2",
        Arc::new(GeneratorDynamics::new()),
        NormBallSet::new(10.0, NormOrder::Infinity, 4)?,
        NormBallSet::new(5.0, NormOrder::Infinity, 2)?,
    )
}

struct LinearDynamics {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl Dynamics for LinearDynamics {
    fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    fn eval(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b * u
    }

    fn jacobians(&self, _x: &DVector<f64>, _u: &DVector<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        Some((self.a.clone(), self.b.clone()))
    }
}

/// Scalar test system `x+ = 0.5 x + u`.
pub fn scalar_linear() -> Result<SystemModel> {
    SystemModel::new(
        "scalar_linear",
        Arc::new(LinearDynamics {
            a: DMatrix::from_vec(1, 1, vec![0.5]),
            b: DMatrix::from_vec(1, 1, vec![1.0]),
        }),
        NormBallSet::new(10.0, NormOrder::Infinity, 1)?,
        NormBallSet::new(5.0, NormOrder::Infinity, 1)?,
    )
}

/// Double integrator with unit sampling time, one input.
pub fn double_integrator() -> Result<SystemModel> {
    SystemModel::new(
        "double_integrator",
        Arc::new(LinearDynamics {
            a: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]),
            b: DMatrix::from_row_slice(2, 1, &[0.5, 1.0]),
        }),
        NormBallSet::new(10.0, NormOrder::Infinity, 2)?,
        NormBallSet::new(5.0, NormOrder::Infinity, 1)?,
    )
}

/// Names accepted by [`registered_model`].
pub fn registry() -> &'static [&'static str] {
    &["generator2", "scalar_linear", "double_integrator"]
}

/// Resolves a model by registry name, optionally overriding the constraint
/// set radii (the norm orders stay as registered).
pub fn registered_model(
    name: &str,
    state_radius: Option<f64>,
    input_radius: Option<f64>,
) -> Result<SystemModel> {
    let model = match name {
        "generator2" => two_generator_benchmark()?,
        "scalar_linear" => scalar_linear()?,
        "double_integrator" => double_integrator()?,
        other => {
            return Err(Error::Config(format!(
                "unknown model {other:?}; available: {}",
                registry().join(", ")
            )))
        }
    };
    if state_radius.is_none() && input_radius.is_none() {
        return Ok(model);
    }
    let state_set = match state_radius {
        Some(r) => NormBallSet::new(r, model.state_set().norm_order(), model.state_dim())?,
        None => model.state_set().clone(),
    };
    let input_set = match input_radius {
        Some(r) => NormBallSet::new(r, model.input_set().norm_order(), model.input_dim())?,
        None => model.input_set().clone(),
    };
    model.with_sets(state_set, input_set)
}
