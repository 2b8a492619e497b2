//! Scalar machinery for the robust measurement update: the innovation clamp,
//! the standard normal CDF, and the worst-case covariance shrink factor.

use nalgebra::DVector;
use std::f64::consts::SQRT_2;

/// Standard normal CDF via the complementary error function.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// Worst-case fraction of the covariance reduction retained under
/// contamination level `epsilon` and clip threshold `clip_k`:
/// `(1 - epsilon) * (1 - 2 * Phi(-K))`. Lies in `(0, 1]` for
/// `epsilon in [0, 1)` and `clip_k > 0`.
pub fn i_min(epsilon: f64, clip_k: f64) -> f64 {
    (1.0 - epsilon) * (1.0 - 2.0 * std_normal_cdf(-clip_k))
}

/// Entry-wise clamp of the normalized innovation to `[-K, K]`. Odd,
/// 1-Lipschitz, the identity on the interior, and saturating outside.
pub fn psi_clamp(mu: &DVector<f64>, clip_k: f64) -> DVector<f64> {
    mu.map(|v| v.clamp(-clip_k, clip_k))
}
