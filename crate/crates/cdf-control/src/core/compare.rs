//! Class-K comparison functions.
//!
//! The stability machinery only ever needs a small closed family: power laws
//! for kernel bounds, linear scalings for the supply contraction, and their
//! compositions. Keeping the family closed makes zero-at-zero and strict
//! monotonicity verifiable by construction instead of by sampling.

use crate::error::{Error, Result};

/// Continuous, strictly increasing function with value 0 at 0.
#[derive(Debug, Clone, PartialEq)]
pub enum ComparisonFunction {
    /// `s -> coeff * s^exponent` with `coeff > 0`, `exponent > 0`.
    PowerLaw { coeff: f64, exponent: f64 },
    /// `s -> gamma * s` with `gamma > 0`.
    LinearScaling { gamma: f64 },
    /// `s -> outer(inner(s))`.
    Composed(Box<ComparisonFunction>, Box<ComparisonFunction>),
}

impl ComparisonFunction {
    pub fn power_law(coeff: f64, exponent: f64) -> Result<Self> {
        if !(coeff.is_finite() && coeff > 0.0) {
            return Err(Error::InvalidInput(format!(
                "power law coefficient must be positive, got {coeff}"
            )));
        }
        if !(exponent.is_finite() && exponent > 0.0) {
            return Err(Error::InvalidInput(format!(
                "power law exponent must be positive, got {exponent}"
            )));
        }
        Ok(Self::PowerLaw { coeff, exponent })
    }

    pub fn linear(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidInput(format!(
                "linear scaling gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self::LinearScaling { gamma })
    }

    pub fn identity() -> Self {
        Self::LinearScaling { gamma: 1.0 }
    }

    pub fn compose(outer: Self, inner: Self) -> Self {
        Self::Composed(Box::new(outer), Box::new(inner))
    }

    pub fn value(&self, s: f64) -> f64 {
        match self {
            Self::PowerLaw { coeff, exponent } => coeff * s.powf(*exponent),
            Self::LinearScaling { gamma } => gamma * s,
            Self::Composed(outer, inner) => outer.value(inner.value(s)),
        }
    }

    /// True when `value(s) < s` is guaranteed for every `s > 0`, which is
    /// what the supply contraction requires of the scaling it is given.
    /// Only linear scalings with `gamma < 1` (and compositions of
    /// below-identity members) qualify globally.
    pub fn is_strict_contraction(&self) -> bool {
        match self {
            Self::LinearScaling { gamma } => *gamma < 1.0,
            Self::PowerLaw { coeff, exponent } => *exponent == 1.0 && *coeff < 1.0,
            Self::Composed(outer, inner) => {
                (outer.is_strict_contraction() && inner.is_below_or_identity())
                    || (outer.is_below_or_identity() && inner.is_strict_contraction())
            }
        }
    }

    fn is_below_or_identity(&self) -> bool {
        match self {
            Self::LinearScaling { gamma } => *gamma <= 1.0,
            Self::PowerLaw { coeff, exponent } => *exponent == 1.0 && *coeff <= 1.0,
            Self::Composed(outer, inner) => {
                outer.is_below_or_identity() && inner.is_below_or_identity()
            }
        }
    }
}
