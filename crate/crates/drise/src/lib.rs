//! Robust recursive state estimation for linear time-varying systems with
//! unknown inputs, plus a vehicle simulation and Monte-Carlo benchmark
//! harness for comparing estimator variants under contaminated measurement
//! noise.
//!
//! The crate is organized around a small set of layers:
//!
//! - [`linalg`]: the dense-matrix primitives covariance propagation needs
//!   (symmetric PSD square roots, guarded SPD solves, PSD predicates).
//! - [`model`]: the LTV system description, belief state, and the
//!   ambiguity-set parameters of the robust update.
//! - [`filters`]: the estimator family (`kf`, `ise`, `dre`, `drise`) behind
//!   the [`filters::Estimator`] trait, selected by name at runtime.
//! - [`sim`]: a kinematic-bicycle vehicle scenario that generates shared
//!   trajectory records with contaminated measurement noise.
//! - [`bench`]: the Monte-Carlo benchmark runner, metrics, and CSV/JSON
//!   emission.

pub mod bench;
pub mod filters;
pub mod linalg;
pub mod model;
pub mod sim;

pub use filters::{create as create_estimator, Estimator, FilterError, ESTIMATOR_NAMES};
pub use model::{Belief, Dims, LtvModel, RobustParams, StepMatrices, StepOutput};
