//! Stabilizing receding-horizon control of constrained discrete-time
//! nonlinear systems via control dissipation functions.
//!
//! A candidate storage function is built by summing a positive definite
//! kernel along predicted trajectories. Minimizing it in receding horizon
//! yields a dissipation inequality whose supply values are accumulated and
//! checked online against a cyclically negative bound; passing the check on
//! every window certifies asymptotic stability of the closed loop. The
//! crate ships the storage/supply machinery, a single-shooting NLP solver,
//! the closed-loop controllers, post-hoc certificate checks and a scenario
//! CLI around the interconnected-generator benchmark.

pub mod analysis;
pub mod cli;
pub mod controller;
pub mod core;
pub mod error;
pub mod model;
pub mod nlp;
pub mod storage;

pub use error::{Error, Result};
