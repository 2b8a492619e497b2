//! Filter engines behind a common single-step interface.
//!
//! Every estimator variant implements [`Estimator`] and is registered under a
//! short name (`kf`, `ise`, `dre`, `drise`), so benchmark configs and the CLI
//! select variants at runtime via [`create`].

use nalgebra::DVector;
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::model::{Belief, ModelError, RobustParams, StepMatrices, StepOutput};

pub mod drise;
pub mod ise;
pub mod kalman;
pub mod robust;

pub use drise::{
    drise_measurement_update, drise_step, drise_step_with_gains, estimate_unknown_input, predict,
    time_update, GainBundle, InputEstimate, Prediction,
};
pub use ise::ise_step;
pub use kalman::kf_step;
pub use robust::{i_min, psi_clamp, std_normal_cdf};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("assembled covariance {what} is not positive semidefinite")]
    CovarianceNotPsd { what: &'static str },
    #[error("shape mismatch: {context}")]
    Shape { context: String },
    #[error("estimator '{name}' requires an unknown-input channel (p >= 1)")]
    NoUnknownInputChannel { name: &'static str },
}

/// A recursive filter exposed as a pure single-step function: belief in,
/// belief out. Implementations hold only their parameters, so one instance
/// can serve any number of concurrent runs.
pub trait Estimator: Send + Sync {
    /// Registry name, also used in config files and CSV output.
    fn name(&self) -> &'static str;
    /// Whether this estimator produces unknown-input estimates.
    fn estimates_input(&self) -> bool;
    /// Advance the belief from `k-1` to `k` given the control applied at
    /// `k-1` and the measurement taken at `k`.
    fn step(
        &self,
        belief: &Belief,
        u: &DVector<f64>,
        y: &DVector<f64>,
        mats: &StepMatrices,
    ) -> Result<(StepOutput, Belief), FilterError>;
}

/// Standard Kalman filter; the unknown-input channel is ignored.
pub struct KalmanEstimator;

impl Estimator for KalmanEstimator {
    fn name(&self) -> &'static str {
        "kf"
    }
    fn estimates_input(&self) -> bool {
        false
    }
    fn step(
        &self,
        belief: &Belief,
        u: &DVector<f64>,
        y: &DVector<f64>,
        mats: &StepMatrices,
    ) -> Result<(StepOutput, Belief), FilterError> {
        kf_step(belief, u, y, mats)
    }
}

/// Classical input and state estimation.
pub struct InputStateEstimator;

impl Estimator for InputStateEstimator {
    fn name(&self) -> &'static str {
        "ise"
    }
    fn estimates_input(&self) -> bool {
        true
    }
    fn step(
        &self,
        belief: &Belief,
        u: &DVector<f64>,
        y: &DVector<f64>,
        mats: &StepMatrices,
    ) -> Result<(StepOutput, Belief), FilterError> {
        ise_step(belief, u, y, mats)
    }
}

/// Distributionally robust input and state estimation.
pub struct RobustEstimator {
    pub params: RobustParams,
}

impl Estimator for RobustEstimator {
    fn name(&self) -> &'static str {
        "drise"
    }
    fn estimates_input(&self) -> bool {
        true
    }
    fn step(
        &self,
        belief: &Belief,
        u: &DVector<f64>,
        y: &DVector<f64>,
        mats: &StepMatrices,
    ) -> Result<(StepOutput, Belief), FilterError> {
        drise_step(belief, u, y, mats, &self.params)
    }
}

/// Distributionally robust estimation without unknown inputs: the robust
/// step run with the input channel stripped from the model.
pub struct RobustNoInputEstimator {
    pub params: RobustParams,
}

impl Estimator for RobustNoInputEstimator {
    fn name(&self) -> &'static str {
        "dre"
    }
    fn estimates_input(&self) -> bool {
        false
    }
    fn step(
        &self,
        belief: &Belief,
        u: &DVector<f64>,
        y: &DVector<f64>,
        mats: &StepMatrices,
    ) -> Result<(StepOutput, Belief), FilterError> {
        let stripped = mats.without_unknown_input();
        drise_step(belief, u, y, &stripped, &self.params)
    }
}

/// Names accepted by [`create`], in canonical reporting order.
pub const ESTIMATOR_NAMES: [&str; 4] = ["kf", "ise", "dre", "drise"];

/// Instantiate an estimator by registry name. The robust variants take their
/// radii and clipping threshold from `params`; the classical ones ignore it.
pub fn create(name: &str, params: &RobustParams) -> Option<Box<dyn Estimator>> {
    match name {
        "kf" => Some(Box::new(KalmanEstimator)),
        "ise" => Some(Box::new(InputStateEstimator)),
        "dre" => Some(Box::new(RobustNoInputEstimator { params: *params })),
        "drise" => Some(Box::new(RobustEstimator { params: *params })),
        _ => None,
    }
}
