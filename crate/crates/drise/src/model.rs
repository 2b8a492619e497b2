//! System model, belief state, and robustness parameters.
//!
//! A filter run is driven by a linear time-varying system
//! `x_{k+1} = A_k x_k + B_k u_k + G_k d_k + w_k`, `y_k = C_k x_k + v_k`,
//! where `d_k` is an unknown input entering through `G_k`. The types here
//! carry the per-step matrices, the Gaussian belief passed between steps, and
//! the ambiguity-set radii that parameterize the robust measurement update.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{is_psd, LinalgError};

/// Relative singular-value threshold used when ranking `C_k G_{k-1}`.
pub const RANK_SV_RTOL: f64 = 1e-10;
/// PSD tolerance applied to user-supplied belief covariances.
pub const BELIEF_PSD_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("rank(C_k G_(k-1)) = {rank}, need {required}: unknown input is not observable through y_k")]
    RankDeficient { rank: usize, required: usize },
    #[error("invalid parameter {field}: {reason}")]
    InvalidParams {
        field: &'static str,
        reason: &'static str,
    },
    #[error("{what} must be positive semidefinite")]
    NotPsd { what: &'static str },
    #[error("{what} must be strictly positive definite")]
    NotPd { what: &'static str },
    #[error("{what} contains non-finite entries")]
    NonFinite { what: &'static str },
    #[error("shape mismatch in {context}: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        actual: (usize, usize),
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Problem dimensions: state `n`, known input `m`, unknown input `p`
/// (possibly 0), measurement `l`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub l: usize,
}

/// Matrices consumed by one filter step from `k-1` to `k`: the dynamics
/// `(A, B, G, Q)` are indexed at `k-1`, the measurement pair `(C, R)` at `k`.
#[derive(Debug, Clone)]
pub struct StepMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub q: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub r: DMatrix<f64>,
}

impl StepMatrices {
    pub fn dims(&self) -> Dims {
        Dims {
            n: self.a.nrows(),
            m: self.b.ncols(),
            p: self.g.ncols(),
            l: self.c.nrows(),
        }
    }

    /// The same step with the unknown-input channel removed (`p = 0`), which
    /// selects the no-input code path in the robust filter.
    pub fn without_unknown_input(&self) -> StepMatrices {
        StepMatrices {
            g: DMatrix::zeros(self.a.nrows(), 0),
            ..self.clone()
        }
    }

    /// Checks finiteness, dimensional consistency, `Q >= 0` and `R > 0`.
    pub fn validate(&self) -> Result<(), ModelError> {
        let d = self.dims();
        let shapes: [(&'static str, &DMatrix<f64>, (usize, usize)); 6] = [
            ("A", &self.a, (d.n, d.n)),
            ("B", &self.b, (d.n, d.m)),
            ("G", &self.g, (d.n, d.p)),
            ("Q", &self.q, (d.n, d.n)),
            ("C", &self.c, (d.l, d.n)),
            ("R", &self.r, (d.l, d.l)),
        ];
        for (name, m, expected) in shapes {
            if m.shape() != expected {
                return Err(ModelError::ShapeMismatch {
                    context: name,
                    expected,
                    actual: m.shape(),
                });
            }
            if m.iter().any(|v| !v.is_finite()) {
                return Err(ModelError::NonFinite { what: name });
            }
        }
        if !is_psd(&self.q, BELIEF_PSD_TOL) {
            return Err(ModelError::NotPsd { what: "Q" });
        }
        if !is_psd(&self.r, BELIEF_PSD_TOL) {
            return Err(ModelError::NotPd { what: "R" });
        }
        let min_r_eig = self.r.clone().symmetric_eigenvalues().min();
        if min_r_eig <= 0.0 {
            return Err(ModelError::NotPd { what: "R" });
        }
        Ok(())
    }
}

/// Provider of the time-indexed system matrices.
pub trait LtvModel {
    fn dims(&self) -> Dims;
    /// Matrices for the transition from `k-1` to `k`; `k >= 1`.
    fn step_matrices(&self, k: usize) -> StepMatrices;
}

/// Rank of a matrix by singular values, relative threshold `RANK_SV_RTOL`.
pub fn matrix_rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let largest = sv.max();
    if largest <= 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_SV_RTOL * largest).count()
}

/// Verifies `rank(C_k G_{k-1}) = p` at step `k`: the unknown input must be
/// observable through the current measurement for input estimation to be
/// well-posed.
pub fn check_rank_condition(model: &dyn LtvModel, k: usize) -> Result<(), ModelError> {
    let mats = model.step_matrices(k);
    check_rank_condition_mats(&mats.c, &mats.g)
}

/// Matrix-level form of the rank condition on `C_k` and `G_{k-1}`.
pub fn check_rank_condition_mats(c: &DMatrix<f64>, g: &DMatrix<f64>) -> Result<(), ModelError> {
    let p = g.ncols();
    if p == 0 {
        return Ok(());
    }
    let rank = matrix_rank(&(c * g));
    if rank < p {
        return Err(ModelError::RankDeficient { rank, required: p });
    }
    Ok(())
}

/// Ambiguity-set radii and contamination parameters for the robust update.
///
/// The recursion itself only consumes `theta2_x`, `theta2_v`, `epsilon`, and
/// `clip_k`; the `theta1_*` / `theta3_*` radii complete the moment-set
/// description and are validated but otherwise inert.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RobustParams {
    pub theta1_x: f64,
    pub theta2_x: f64,
    pub theta3_x: f64,
    pub theta1_v: f64,
    pub theta2_v: f64,
    pub theta3_v: f64,
    /// Contamination level: each measurement is an outlier with this probability.
    pub epsilon: f64,
    /// Clipping threshold applied to the normalized innovation.
    pub clip_k: f64,
}

/// Finite stand-in for an unbounded clipping threshold; normalized
/// innovations in any realizable scenario are orders of magnitude smaller,
/// so clipping never activates.
pub const CLIP_INACTIVE: f64 = 1e6;

impl Default for RobustParams {
    fn default() -> Self {
        // Huber's classic 1.345 for the clip level; moderate covariance inflation.
        Self {
            theta1_x: 0.0,
            theta2_x: 1.5,
            theta3_x: 1.0,
            theta1_v: 0.0,
            theta2_v: 1.5,
            theta3_v: 1.0,
            epsilon: 0.1,
            clip_k: 1.345,
        }
    }
}

impl RobustParams {
    /// Parameters at which the robust update coincides with the classical
    /// one: no inflation, no contamination, clipping inactive.
    pub fn nominal() -> Self {
        Self {
            theta1_x: 0.0,
            theta2_x: 1.0,
            theta3_x: 0.0,
            theta1_v: 0.0,
            theta2_v: 1.0,
            theta3_v: 0.0,
            epsilon: 0.0,
            clip_k: CLIP_INACTIVE,
        }
    }

    /// Validates the radii ordering `theta2 >= 1 >= theta1 >= 0`,
    /// `epsilon in [0, 1)`, and `clip_k > 0`, reporting the first violation.
    pub fn validate(&self) -> Result<(), ModelError> {
        let invalid = |field, reason| Err(ModelError::InvalidParams { field, reason });
        let finite: [(&'static str, f64); 8] = [
            ("theta1_x", self.theta1_x),
            ("theta2_x", self.theta2_x),
            ("theta3_x", self.theta3_x),
            ("theta1_v", self.theta1_v),
            ("theta2_v", self.theta2_v),
            ("theta3_v", self.theta3_v),
            ("epsilon", self.epsilon),
            ("clip_k", self.clip_k),
        ];
        for (field, value) in finite {
            if !value.is_finite() {
                return invalid(field, "must be finite");
            }
        }
        if self.theta1_x < 0.0 {
            return invalid("theta1_x", "must be >= 0");
        }
        if self.theta1_x > 1.0 {
            return invalid("theta1_x", "must be <= 1");
        }
        if self.theta2_x < 1.0 {
            return invalid("theta2_x", "must be >= 1");
        }
        if self.theta3_x < 0.0 {
            return invalid("theta3_x", "must be >= 0");
        }
        if self.theta1_v < 0.0 {
            return invalid("theta1_v", "must be >= 0");
        }
        if self.theta1_v > 1.0 {
            return invalid("theta1_v", "must be <= 1");
        }
        if self.theta2_v < 1.0 {
            return invalid("theta2_v", "must be >= 1");
        }
        if self.theta3_v < 0.0 {
            return invalid("theta3_v", "must be >= 0");
        }
        if self.epsilon < 0.0 {
            return invalid("epsilon", "must be >= 0");
        }
        if self.epsilon >= 1.0 {
            return invalid("epsilon", "must be < 1");
        }
        if self.clip_k <= 0.0 {
            return invalid("clip_k", "must be > 0");
        }
        Ok(())
    }
}

/// Convenience alias matching the operation name used elsewhere.
pub fn validate_params(params: &RobustParams) -> Result<(), ModelError> {
    params.validate()
}

/// Gaussian belief carried between filter steps.
///
/// `p_d` and `p_xd` describe the most recent unknown-input estimate (indexed
/// one step behind the state) and are informational outputs; the recursion
/// itself only feeds `x_hat` and `p_x` forward.
#[derive(Debug, Clone)]
pub struct Belief {
    pub x_hat: DVector<f64>,
    pub p_x: DMatrix<f64>,
    pub p_d: Option<DMatrix<f64>>,
    pub p_xd: Option<DMatrix<f64>>,
    /// Time index of the state estimate.
    pub k: usize,
}

impl Belief {
    /// Validating constructor for user-supplied beliefs. Requires `p_x` PSD
    /// and, when the input blocks are present, the joint block matrix
    /// `[[p_x, p_xd], [p_xd^T, p_d]]` PSD within `BELIEF_PSD_TOL`.
    pub fn new(
        x_hat: DVector<f64>,
        p_x: DMatrix<f64>,
        p_d: Option<DMatrix<f64>>,
        p_xd: Option<DMatrix<f64>>,
        k: usize,
    ) -> Result<Self, ModelError> {
        let n = x_hat.nrows();
        if x_hat.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite { what: "x_hat" });
        }
        if p_x.shape() != (n, n) {
            return Err(ModelError::ShapeMismatch {
                context: "p_x",
                expected: (n, n),
                actual: p_x.shape(),
            });
        }
        if !is_psd(&p_x, BELIEF_PSD_TOL) {
            return Err(ModelError::NotPsd { what: "p_x" });
        }
        match (&p_d, &p_xd) {
            (None, None) => {}
            (Some(pd), Some(pxd)) => {
                let p = pd.nrows();
                if pd.shape() != (p, p) {
                    return Err(ModelError::ShapeMismatch {
                        context: "p_d",
                        expected: (p, p),
                        actual: pd.shape(),
                    });
                }
                if pxd.shape() != (n, p) {
                    return Err(ModelError::ShapeMismatch {
                        context: "p_xd",
                        expected: (n, p),
                        actual: pxd.shape(),
                    });
                }
                if !is_psd(pd, BELIEF_PSD_TOL) {
                    return Err(ModelError::NotPsd { what: "p_d" });
                }
                let joint = joint_block(&p_x, pxd, pd);
                if !is_psd(&joint, BELIEF_PSD_TOL) {
                    return Err(ModelError::NotPsd {
                        what: "joint state/input covariance",
                    });
                }
            }
            _ => {
                return Err(ModelError::InvalidParams {
                    field: "p_d/p_xd",
                    reason: "must be both present or both absent",
                });
            }
        }
        Ok(Self {
            x_hat,
            p_x,
            p_d,
            p_xd,
            k,
        })
    }

    /// Belief from a state prior only. With `p >= 1` the cross covariance
    /// defaults to zero and the input prior to the diffuse `10 I`, so the
    /// filter starts uncommitted about the unknown input.
    pub fn from_state_prior(
        x_hat: DVector<f64>,
        p_x: DMatrix<f64>,
        p: usize,
    ) -> Result<Self, ModelError> {
        let n = x_hat.nrows();
        let (p_d, p_xd) = if p == 0 {
            (None, None)
        } else {
            (
                Some(DMatrix::identity(p, p) * 10.0),
                Some(DMatrix::zeros(n, p)),
            )
        };
        Self::new(x_hat, p_x, p_d, p_xd, 0)
    }

    /// Internal constructor for filter outputs. The state covariance has
    /// already been checked by the measurement update; `p_d`/`p_xd` refer to
    /// the input estimate one step behind and are not a joint covariance with
    /// `p_x`, so they are carried without the joint check.
    pub(crate) fn from_filter_output(
        x_hat: DVector<f64>,
        p_x: DMatrix<f64>,
        p_d: Option<DMatrix<f64>>,
        p_xd: Option<DMatrix<f64>>,
        k: usize,
    ) -> Self {
        Self {
            x_hat,
            p_x,
            p_d,
            p_xd,
            k,
        }
    }
}

fn joint_block(p_x: &DMatrix<f64>, p_xd: &DMatrix<f64>, p_d: &DMatrix<f64>) -> DMatrix<f64> {
    let n = p_x.nrows();
    let p = p_d.nrows();
    let mut joint = DMatrix::zeros(n + p, n + p);
    joint.view_mut((0, 0), (n, n)).copy_from(p_x);
    joint.view_mut((0, n), (n, p)).copy_from(p_xd);
    joint
        .view_mut((n, 0), (p, n))
        .copy_from(&p_xd.transpose());
    joint.view_mut((n, n), (p, p)).copy_from(p_d);
    joint
}

/// Per-step filter output: estimates, covariances, and innovation diagnostics.
#[derive(Debug, Clone)]
pub struct StepOutput {
    pub x_hat: DVector<f64>,
    pub p_x: DMatrix<f64>,
    pub d_hat: Option<DVector<f64>>,
    pub p_d: Option<DMatrix<f64>>,
    /// Innovation of the measurement update, `y_k - C_k x_hat_k^star`.
    pub innovation: DVector<f64>,
    pub innovation_cov: DMatrix<f64>,
    /// Per-component flags: true iff the normalized innovation exceeded the clip level.
    pub psi_activated: Vec<bool>,
}
