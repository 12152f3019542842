//! Norm-ball constraint sets with the origin in their interior.

use nalgebra::DVector;

use crate::core::vector::{ensure_finite, norm_unchecked, NormOrder};
use crate::error::{Error, Result};

/// Absolute feasibility tolerance: double-precision solver output cannot
/// achieve exact boundary membership.
pub const DEFAULT_TOL_FEAS: f64 = 1e-8;

/// A ball `{ v : ||v|| <= radius }` in a fixed p-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct NormBallSet {
    radius: f64,
    norm_order: NormOrder,
    dimension: usize,
    tol_feas: f64,
}

impl NormBallSet {
    pub fn new(radius: f64, norm_order: NormOrder, dimension: usize) -> Result<Self> {
        Self::with_tolerance(radius, norm_order, dimension, DEFAULT_TOL_FEAS)
    }

    pub fn with_tolerance(
        radius: f64,
        norm_order: NormOrder,
        dimension: usize,
        tol_feas: f64,
    ) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidInput(format!(
                "norm ball radius must be positive and finite, got {radius}"
            )));
        }
        if dimension == 0 {
            return Err(Error::InvalidInput("norm ball dimension must be positive".into()));
        }
        if !(tol_feas.is_finite() && tol_feas >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "feasibility tolerance must be non-negative, got {tol_feas}"
            )));
        }
        Ok(Self { radius, norm_order, dimension, tol_feas })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn norm_order(&self) -> NormOrder {
        self.norm_order
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn tol_feas(&self) -> f64 {
        self.tol_feas
    }

    fn check_dim(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dimension {
            return Err(Error::DimensionMismatch {
                expected: self.dimension,
                got: v.len(),
                what: "norm ball membership",
            });
        }
        Ok(())
    }

    /// Membership up to the set's feasibility tolerance.
    pub fn contains(&self, v: &DVector<f64>) -> Result<bool> {
        Ok(self.violation(v)? <= self.tol_feas)
    }

    /// Excess of `||v||` over the radius, clamped at zero.
    pub fn violation(&self, v: &DVector<f64>) -> Result<f64> {
        self.check_dim(v)?;
        ensure_finite(v, "norm ball membership argument")?;
        Ok((norm_unchecked(v, self.norm_order) - self.radius).max(0.0))
    }

    /// Euclidean projection onto the set. Exact for the 2-norm (radial
    /// rescale) and the infinity norm (componentwise clamp); the 1-norm
    /// is not supported.
    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_dim(v)?;
        ensure_finite(v, "projection argument")?;
        match self.norm_order {
            NormOrder::Infinity => {
                Ok(v.map(|x| x.clamp(-self.radius, self.radius)))
            }
            NormOrder::Two => {
                let n = v.norm();
                if n <= self.radius {
                    Ok(v.clone())
                } else {
                    Ok(v * (self.radius / n))
                }
            }
            NormOrder::One => Err(Error::Unsupported(
                "projection onto a 1-norm ball is not supported".into(),
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball(radius: f64, order: NormOrder, dim: usize) -> NormBallSet {
        NormBallSet::new(radius, order, dim).unwrap()
    }

    #[test]
    fn benchmark_initial_state_is_in_the_state_set() {
        let state_set = ball(10.0, NormOrder::Infinity, 4);
        let x = DVector::from_vec(vec![0.0, 0.15, 0.0, -0.15]);
        assert!(state_set.contains(&x).unwrap());
    }

    #[test]
    fn point_beyond_tolerance_is_outside() {
        let input_set = ball(5.0, NormOrder::Infinity, 2);
        let u = DVector::from_vec(vec![5.1, 0.0]);
        assert!(!input_set.contains(&u).unwrap());
        assert!((input_set.violation(&u).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn origin_is_interior_to_any_ball() {
        for order in [NormOrder::One, NormOrder::Two, NormOrder::Infinity] {
            let s = ball(0.5, order, 3);
            assert!(s.contains(&DVector::zeros(3)).unwrap());
        }
    }

    #[test]
    fn infinity_projection_clamps_componentwise() {
        let s = ball(5.0, NormOrder::Infinity, 2);
        let p = s.project(&DVector::from_vec(vec![7.0, -6.0])).unwrap();
        assert_eq!(p, DVector::from_vec(vec![5.0, -5.0]));
    }

    #[test]
    fn euclidean_projection_rescales_radially() {
        let s = ball(5.0, NormOrder::Two, 2);
        let v = DVector::from_vec(vec![6.0, 8.0]);
        // Oracle: v * (r / ||v||).
        let expected = &v * (5.0 / v.norm());
        let p = s.project(&v).unwrap();
        assert!((p - expected).norm() < 1e-15);
    }

    #[test]
    fn projection_is_identity_on_members() {
        let s = ball(5.0, NormOrder::Infinity, 2);
        let v = DVector::from_vec(vec![1.0, 1.0]);
        assert_eq!(s.project(&v).unwrap(), v);
    }

    #[test]
    fn one_norm_projection_is_unsupported() {
        let s = ball(5.0, NormOrder::One, 2);
        assert!(matches!(
            s.project(&DVector::from_vec(vec![7.0, 0.0])),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let s = ball(1.0, NormOrder::Two, 3);
        assert!(s.contains(&DVector::zeros(2)).is_err());
    }

    #[test]
    fn zero_radius_is_rejected() {
        assert!(NormBallSet::new(0.0, NormOrder::Two, 2).is_err());
    }
}
