//! Derivative-free optimization on the Stiefel manifold St(p, d).
//!
//! Iterates move by single Givens rotations, so every candidate stays exactly
//! orthonormal up to rounding. The search polls all `2 C(p,2)` plane rotations
//! at a common angle, accepts strict improvements, and shrinks the angle
//! geometrically once progress stalls.

// NaN must fail validation, so comparisons are written as `!(x > 0.0)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod error;
pub mod format;
pub mod metrics;
pub mod objectives;
pub mod rng;
pub mod stiefel;
pub mod synth;

pub use engine::{optimize, BooomConfig, BooomResult, RunTrace};
pub use error::{Error, Result};
pub use objectives::Objective;
pub use stiefel::{GivensMove, StiefelPoint};
