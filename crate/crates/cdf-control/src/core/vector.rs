//! Finite-checked state and input vectors.

use std::ops::Deref;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Order of a p-norm. Constraint sets default to the infinity norm,
/// stability metrics to the 2-norm; both are configurable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormOrder {
    One,
    Two,
    Infinity,
}

impl NormOrder {
    pub fn as_str(&self) -> &'static str {
        match self {
            NormOrder::One => "1",
            NormOrder::Two => "2",
            NormOrder::Infinity => "inf",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(NormOrder::One),
            "2" => Ok(NormOrder::Two),
            "inf" | "Inf" | "INF" => Ok(NormOrder::Infinity),
            other => Err(Error::Config(format!(
                "unknown norm order {other:?}; expected \"1\", \"2\" or \"inf\""
            ))),
        }
    }
}

/// p-norm of a vector for p in {1, 2, inf}. Errors on non-finite entries.
pub fn norm(v: &DVector<f64>, order: NormOrder) -> Result<f64> {
    ensure_finite(v, "norm argument")?;
    Ok(norm_unchecked(v, order))
}

pub(crate) fn norm_unchecked(v: &DVector<f64>, order: NormOrder) -> f64 {
    match order {
        NormOrder::One => v.iter().map(|x| x.abs()).sum(),
        NormOrder::Two => v.norm(),
        NormOrder::Infinity => v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())),
    }
}

pub(crate) fn ensure_finite(v: &DVector<f64>, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} contains a non-finite entry")))
    }
}

macro_rules! finite_vector {
    ($name:ident, $what:literal) => {
        /// Real vector with a fixed dimension and all entries finite.
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(DVector<f64>);

        impl $name {
            pub fn new(entries: Vec<f64>) -> Result<Self> {
                Self::from_vector(DVector::from_vec(entries))
            }

            pub fn from_vector(v: DVector<f64>) -> Result<Self> {
                ensure_finite(&v, $what)?;
                Ok(Self(v))
            }

            pub fn zeros(dim: usize) -> Self {
                Self(DVector::zeros(dim))
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn as_vector(&self) -> &DVector<f64> {
                &self.0
            }

            pub fn into_vector(self) -> DVector<f64> {
                self.0
            }

            pub fn norm(&self, order: NormOrder) -> f64 {
                norm_unchecked(&self.0, order)
            }
        }

        impl Deref for $name {
            type Target = DVector<f64>;

            fn deref(&self) -> &Self::Target {
                &self.0
            }
        }
    };
}

finite_vector!(StateVec, "state vector");
finite_vector!(InputVec, "input vector");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_of_benchmark_initial_state() {
        let v = DVector::from_vec(vec![0.0, 0.15, 0.0, -0.15]);
        assert_eq!(norm(&v, NormOrder::Infinity).unwrap(), 0.15);
    }

    #[test]
    fn norm_of_zero_vector_is_zero() {
        let v = DVector::zeros(4);
        assert_eq!(norm(&v, NormOrder::Two).unwrap(), 0.0);
    }

    #[test]
    fn euclidean_norm_three_four_five() {
        let v = DVector::from_vec(vec![3.0, 4.0]);
        assert_eq!(norm(&v, NormOrder::Two).unwrap(), 5.0);
    }

    #[test]
    fn non_finite_entry_is_rejected() {
        let v = DVector::from_vec(vec![1.0, f64::NAN]);
        assert!(norm(&v, NormOrder::One).is_err());
        assert!(StateVec::from_vector(v).is_err());
    }

    #[test]
    fn state_vec_fixes_dimension_at_construction() {
        let x = StateVec::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(x.dim(), 3);
    }
}
