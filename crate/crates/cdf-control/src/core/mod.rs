//! Foundational numeric types shared by every other module: finite-checked
//! vectors, p-norms, norm-ball constraint sets and class-K comparison
//! functions.

mod compare;
mod set;
mod vector;

pub use compare::ComparisonFunction;
pub use set::{NormBallSet, DEFAULT_TOL_FEAS};
pub use vector::{norm, InputVec, NormOrder, StateVec};

pub(crate) use vector::ensure_finite;
