//! Distributionally robust input and state estimation.
//!
//! One step runs four stages: prediction, unknown-input estimation, time
//! update, and a distributionally robust measurement update in which the
//! prior and measurement-noise covariances are inflated by the ambiguity
//! radii, the normalized innovation is clamped entry-wise, and the posterior
//! covariance keeps only the worst-case fraction of the usual reduction.
//!
//! With an unknown-input channel present, the innovation left after input
//! estimation is confined to a rank `l - p` subspace, so its covariance is
//! structurally singular whenever the two inflation radii coincide. All
//! innovation-covariance inverses therefore go through the clamped
//! eigendecomposition ([`PsdFactor`]), which acts as a pseudo-inverse on the
//! null directions; the innovation itself lies in the range subspace, so no
//! information is discarded.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{is_psd, symmetrize, PsdFactor};
use crate::model::{
    check_rank_condition_mats, Belief, RobustParams, StepMatrices, StepOutput,
};

use super::robust::{i_min, psi_clamp};
use super::FilterError;

/// PSD tolerance for the assembled covariances inside a step.
const STEP_PSD_TOL: f64 = 1e-8;

/// Output of the prediction stage.
#[derive(Debug, Clone)]
pub struct Prediction {
    pub x_minus: DVector<f64>,
    pub p_x_minus: DMatrix<f64>,
    /// Inverse innovation weighting `(C P^- C^T + R)^{-1}`.
    pub rtilde: DMatrix<f64>,
}

/// Output of the unknown-input estimation stage.
#[derive(Debug, Clone)]
pub struct InputEstimate {
    /// Unknown-input gain `M_k` with `M_k C_k G_{k-1} = I`.
    pub gain: DMatrix<f64>,
    pub d_hat: DVector<f64>,
    pub p_d: DMatrix<f64>,
    pub p_xd: DMatrix<f64>,
}

/// Gains assembled across one full step.
#[derive(Debug, Clone)]
pub struct GainBundle {
    /// `(C P^- C^T + R)^{-1}` from the prediction stage.
    pub rtilde: DMatrix<f64>,
    /// Unknown-input gain `M_k` (`p x l`; empty when `p = 0`).
    pub input_gain: DMatrix<f64>,
    /// Robust state gain `(Sigma^x C^T - G M Sigma^v) S^{-1/2}`.
    pub state_gain: DMatrix<f64>,
}

/// Measurement-update result before the input estimate is merged in.
#[derive(Debug, Clone)]
struct RobustUpdate {
    x_hat: DVector<f64>,
    p_x: DMatrix<f64>,
    innovation: DVector<f64>,
    innovation_cov: DMatrix<f64>,
    psi_activated: Vec<bool>,
    state_gain: DMatrix<f64>,
}

fn check_step_shapes(
    belief: &Belief,
    u: &DVector<f64>,
    y: &DVector<f64>,
    mats: &StepMatrices,
) -> Result<(), FilterError> {
    let d = mats.dims();
    if belief.x_hat.nrows() != d.n || belief.p_x.shape() != (d.n, d.n) {
        return Err(FilterError::Shape {
            context: format!(
                "belief has state dim {}, model expects {}",
                belief.x_hat.nrows(),
                d.n
            ),
        });
    }
    if u.nrows() != d.m {
        return Err(FilterError::Shape {
            context: format!("control input has dim {}, model expects {}", u.nrows(), d.m),
        });
    }
    if y.nrows() != d.l {
        return Err(FilterError::Shape {
            context: format!("measurement has dim {}, model expects {}", y.nrows(), d.l),
        });
    }
    Ok(())
}

/// Prediction stage: `x^- = A x + B u`, `P^- = A P A^T + Q`, and the inverse
/// innovation weighting `(C P^- C^T + R)^{-1}`.
pub fn predict(
    belief: &Belief,
    u: &DVector<f64>,
    mats: &StepMatrices,
) -> Result<Prediction, FilterError> {
    check_step_shapes(belief, u, &DVector::zeros(mats.c.nrows()), mats)?;
    let x_minus = &mats.a * &belief.x_hat + &mats.b * u;
    let p_x_minus = symmetrize(&(&mats.a * &belief.p_x * mats.a.transpose() + &mats.q));
    let innovation_prior = symmetrize(&(&mats.c * &p_x_minus * mats.c.transpose() + &mats.r));
    let rtilde = symmetrize(&crate::linalg::spd_solve(
        &innovation_prior,
        &DMatrix::identity(innovation_prior.nrows(), innovation_prior.nrows()),
    )?);
    Ok(Prediction {
        x_minus,
        p_x_minus,
        rtilde,
    })
}

/// Unknown-input estimation: gain `M_k`, estimate `d_hat_{k-1}`, and the
/// covariance blocks `P^d_{k-1}`, `P^{xd}_{k-1}`. Requires `p >= 1` and the
/// rank condition already verified.
pub fn estimate_unknown_input(
    prediction: &Prediction,
    y: &DVector<f64>,
    belief: &Belief,
    mats: &StepMatrices,
) -> Result<InputEstimate, FilterError> {
    let gc = &mats.c * &mats.g; // l x p
    let gct_rt = gc.transpose() * &prediction.rtilde; // p x l
    let normal = symmetrize(&(&gct_rt * &gc)); // G^T C^T Rt C G, p x p
    // positive definite whenever rank(C G) = p; a singular solve here is a
    // hard model fault, not something to paper over
    let p_d = symmetrize(&crate::linalg::spd_solve(
        &normal,
        &DMatrix::identity(normal.nrows(), normal.nrows()),
    )?);
    let gain = &p_d * &gct_rt; // M_k, p x l
    let d_hat = &gain * (y - &mats.c * &prediction.x_minus);
    let p_xd = -(&belief.p_x * mats.a.transpose() * mats.c.transpose() * gain.transpose());
    Ok(InputEstimate {
        gain,
        d_hat,
        p_d,
        p_xd,
    })
}

/// Time update: folds the input estimate into the prediction,
/// `x* = x^- + G d_hat`, with the seven-term covariance including the
/// process-noise cross terms `-G M C Q - Q C^T M^T G^T`.
pub fn time_update(
    prediction: &Prediction,
    input: &InputEstimate,
    belief: &Belief,
    mats: &StepMatrices,
) -> Result<(DVector<f64>, DMatrix<f64>), FilterError> {
    let x_star = &prediction.x_minus + &mats.g * &input.d_hat;
    let a_pxd_gt = &mats.a * &input.p_xd * mats.g.transpose();
    let gm = &mats.g * &input.gain; // n x l
    let gmcq = &gm * &mats.c * &mats.q;
    let p_x_star = symmetrize(
        &(&mats.a * &belief.p_x * mats.a.transpose()
            + &mats.q
            + &mats.g * &input.p_d * mats.g.transpose()
            + &a_pxd_gt
            + a_pxd_gt.transpose()
            - &gmcq
            - gmcq.transpose()),
    );
    if !is_psd(&p_x_star, STEP_PSD_TOL) {
        return Err(FilterError::CovarianceNotPsd { what: "P_x_star" });
    }
    Ok((x_star, p_x_star))
}

fn robust_measurement_update(
    x_star: &DVector<f64>,
    p_x_star: &DMatrix<f64>,
    input_gain: &DMatrix<f64>,
    y: &DVector<f64>,
    params: &RobustParams,
    mats: &StepMatrices,
) -> Result<RobustUpdate, FilterError> {
    let sigma_x = params.theta2_x * p_x_star;
    let sigma_v = params.theta2_v * &mats.r;
    let gm = &mats.g * input_gain; // n x l, zero when p = 0
    let c_gm_sv = &mats.c * &gm * &sigma_v;
    let innovation_cov = symmetrize(
        &(&mats.c * &sigma_x * mats.c.transpose() - &c_gm_sv - c_gm_sv.transpose() + &sigma_v),
    );
    let factor = PsdFactor::new(&innovation_cov).map_err(|err| match err {
        crate::linalg::LinalgError::NotPsd { .. } => {
            FilterError::CovarianceNotPsd { what: "S_k" }
        }
        other => FilterError::Linalg(other),
    })?;
    let innovation = y - &mats.c * x_star;
    let correction = &sigma_x * mats.c.transpose() - &gm * &sigma_v; // n x l
    let whitener = factor.pinv_sqrt();
    let state_gain = &correction * &whitener;
    let mu = &whitener * &innovation;
    let clipped = psi_clamp(&mu, params.clip_k);
    let x_hat = x_star + &state_gain * &clipped;
    let shrink = i_min(params.epsilon, params.clip_k);
    let p_x = symmetrize(&(&sigma_x - shrink * (&correction * factor.pinv() * correction.transpose())));
    let psi_activated = mu.iter().map(|v| v.abs() > params.clip_k).collect();
    Ok(RobustUpdate {
        x_hat,
        p_x,
        innovation,
        innovation_cov,
        psi_activated,
        state_gain,
    })
}

/// Distributionally robust measurement update on its own: inflates the
/// covariances by the `theta2` radii, clamps the whitened innovation, and
/// shrinks the covariance reduction to its worst-case fraction. Returns the
/// step output (without input-estimate fields) and the robust state gain.
pub fn drise_measurement_update(
    x_star: &DVector<f64>,
    p_x_star: &DMatrix<f64>,
    input_gain: &DMatrix<f64>,
    y: &DVector<f64>,
    params: &RobustParams,
    mats: &StepMatrices,
) -> Result<(StepOutput, DMatrix<f64>), FilterError> {
    params.validate()?;
    let update = robust_measurement_update(x_star, p_x_star, input_gain, y, params, mats)?;
    let output = StepOutput {
        x_hat: update.x_hat,
        p_x: update.p_x,
        d_hat: None,
        p_d: None,
        innovation: update.innovation,
        innovation_cov: update.innovation_cov,
        psi_activated: update.psi_activated,
    };
    Ok((output, update.state_gain))
}

/// One full robust step. With `p = 0` the input-estimation and time-update
/// stages are skipped (`x* = x^-`, `P* = P^-`) and the step degenerates to
/// the distributionally robust estimator without unknown inputs.
pub fn drise_step(
    belief: &Belief,
    u: &DVector<f64>,
    y: &DVector<f64>,
    mats: &StepMatrices,
    params: &RobustParams,
) -> Result<(StepOutput, Belief), FilterError> {
    let (output, belief, _) = drise_step_with_gains(belief, u, y, mats, params)?;
    Ok((output, belief))
}

/// [`drise_step`] variant that also returns the assembled [`GainBundle`].
pub fn drise_step_with_gains(
    belief: &Belief,
    u: &DVector<f64>,
    y: &DVector<f64>,
    mats: &StepMatrices,
    params: &RobustParams,
) -> Result<(StepOutput, Belief, GainBundle), FilterError> {
    params.validate()?;
    check_step_shapes(belief, u, y, mats)?;
    let dims = mats.dims();
    let prediction = predict(belief, u, mats)?;

    let (x_star, p_x_star, input) = if dims.p == 0 {
        (prediction.x_minus.clone(), prediction.p_x_minus.clone(), None)
    } else {
        check_rank_condition_mats(&mats.c, &mats.g)?;
        let input = estimate_unknown_input(&prediction, y, belief, mats)?;
        let (x_star, p_x_star) = time_update(&prediction, &input, belief, mats)?;
        (x_star, p_x_star, Some(input))
    };

    let input_gain = input
        .as_ref()
        .map(|i| i.gain.clone())
        .unwrap_or_else(|| DMatrix::zeros(0, dims.l));
    let update = robust_measurement_update(&x_star, &p_x_star, &input_gain, y, params, mats)?;

    let output = StepOutput {
        x_hat: update.x_hat.clone(),
        p_x: update.p_x.clone(),
        d_hat: input.as_ref().map(|i| i.d_hat.clone()),
        p_d: input.as_ref().map(|i| i.p_d.clone()),
        innovation: update.innovation,
        innovation_cov: update.innovation_cov,
        psi_activated: update.psi_activated,
    };
    let next = Belief::from_filter_output(
        update.x_hat,
        update.p_x,
        input.as_ref().map(|i| i.p_d.clone()),
        input.as_ref().map(|i| i.p_xd.clone()),
        belief.k + 1,
    );
    let gains = GainBundle {
        rtilde: prediction.rtilde,
        input_gain,
        state_gain: update.state_gain,
    };
    Ok((output, next, gains))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_mats(a: f64, b: f64, g: f64, q: f64, c: f64, r: f64) -> StepMatrices {
        StepMatrices {
            a: DMatrix::from_element(1, 1, a),
            b: DMatrix::from_element(1, 1, b),
            g: DMatrix::from_element(1, 1, g),
            q: DMatrix::from_element(1, 1, q),
            c: DMatrix::from_element(1, 1, c),
            r: DMatrix::from_element(1, 1, r),
        }
    }

    fn scalar_belief(x: f64, p: f64) -> Belief {
        Belief::new(
            DVector::from_element(1, x),
            DMatrix::from_element(1, 1, p),
            None,
            None,
            0,
        )
        .unwrap()
    }

    #[test]
    fn predict_scalar_oracle() {
        // lines 1-3 by hand: x- = 0, P- = 1 + 1 = 2, Rt = 1 / (2 + 1)
        let mats = scalar_mats(1.0, 0.0, 1.0, 1.0, 1.0, 1.0);
        let pred = predict(&scalar_belief(0.0, 1.0), &DVector::zeros(1), &mats).unwrap();
        assert_abs_diff_eq!(pred.x_minus[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pred.p_x_minus[(0, 0)], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(pred.rtilde[(0, 0)], 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn predict_identity_propagation() {
        let mats = StepMatrices {
            a: DMatrix::identity(2, 2),
            b: DMatrix::identity(2, 2),
            g: DMatrix::zeros(2, 0),
            q: DMatrix::zeros(2, 2),
            c: DMatrix::identity(2, 2),
            r: DMatrix::identity(2, 2),
        };
        let belief = Belief::new(
            DVector::zeros(2),
            DMatrix::identity(2, 2),
            None,
            None,
            0,
        )
        .unwrap();
        let pred = predict(&belief, &DVector::from_vec(vec![1.0, 2.0]), &mats).unwrap();
        assert_abs_diff_eq!(pred.x_minus, DVector::from_vec(vec![1.0, 2.0]), epsilon = 1e-14);
        assert_abs_diff_eq!(pred.p_x_minus, DMatrix::identity(2, 2), epsilon = 1e-14);
        assert_abs_diff_eq!(
            pred.rtilde,
            DMatrix::<f64>::identity(2, 2) * 0.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn predict_zero_dynamics_leaves_q() {
        let mats = scalar_mats(0.0, 0.0, 1.0, 0.7, 1.0, 1.0);
        let pred = predict(&scalar_belief(3.0, 5.0), &DVector::zeros(1), &mats).unwrap();
        assert_abs_diff_eq!(pred.p_x_minus[(0, 0)], 0.7, epsilon = 1e-14);
    }

    #[test]
    fn input_estimate_scalar_oracle() {
        // lines 5-7 by hand with Rt = 1/3: M = 1, d = 2, Pd = 3
        let mats = scalar_mats(1.0, 0.0, 1.0, 1.0, 1.0, 1.0);
        let prediction = Prediction {
            x_minus: DVector::from_element(1, 1.0),
            p_x_minus: DMatrix::from_element(1, 1, 2.0),
            rtilde: DMatrix::from_element(1, 1, 1.0 / 3.0),
        };
        let est = estimate_unknown_input(
            &prediction,
            &DVector::from_element(1, 3.0),
            &scalar_belief(0.0, 1.0),
            &mats,
        )
        .unwrap();
        assert_abs_diff_eq!(est.gain[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.d_hat[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.p_d[(0, 0)], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.p_xd[(0, 0)], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn input_estimate_zero_innovation_gives_zero() {
        let mats = scalar_mats(1.0, 0.0, 1.0, 1.0, 1.0, 1.0);
        let prediction = Prediction {
            x_minus: DVector::from_element(1, 4.0),
            p_x_minus: DMatrix::from_element(1, 1, 2.0),
            rtilde: DMatrix::from_element(1, 1, 1.0 / 3.0),
        };
        let est = estimate_unknown_input(
            &prediction,
            &DVector::from_element(1, 4.0),
            &scalar_belief(0.0, 1.0),
            &mats,
        )
        .unwrap();
        assert_abs_diff_eq!(est.d_hat[0], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn gain_identity_holds_on_wide_model() {
        // n = 3, p = 1, l = 2
        let mats = StepMatrices {
            a: DMatrix::from_row_slice(3, 3, &[0.9, 0.1, 0.0, 0.0, 0.8, 0.2, 0.1, 0.0, 0.7]),
            b: DMatrix::from_row_slice(3, 1, &[1.0, 0.0, 0.5]),
            g: DMatrix::from_row_slice(3, 1, &[0.4, 1.0, 0.0]),
            q: DMatrix::identity(3, 3) * 0.1,
            c: DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]),
            r: DMatrix::identity(2, 2) * 0.5,
        };
        let belief = Belief::from_state_prior(DVector::zeros(3), DMatrix::identity(3, 3), 1).unwrap();
        let pred = predict(&belief, &DVector::from_element(1, 0.3), &mats).unwrap();
        let est = estimate_unknown_input(
            &pred,
            &DVector::from_vec(vec![1.0, -0.5]),
            &belief,
            &mats,
        )
        .unwrap();
        let mcg = &est.gain * &mats.c * &mats.g;
        assert_abs_diff_eq!(mcg, DMatrix::identity(1, 1), epsilon = 1e-8);
    }

    #[test]
    fn time_update_scalar_chain() {
        // line 10 by hand: 1 + 1 + 3 - 1 - 1 - 1 - 1 = 1
        let mats = scalar_mats(1.0, 0.0, 1.0, 1.0, 1.0, 1.0);
        let prediction = Prediction {
            x_minus: DVector::from_element(1, 0.0),
            p_x_minus: DMatrix::from_element(1, 1, 2.0),
            rtilde: DMatrix::from_element(1, 1, 1.0 / 3.0),
        };
        let input = InputEstimate {
            gain: DMatrix::from_element(1, 1, 1.0),
            d_hat: DVector::from_element(1, 2.0),
            p_d: DMatrix::from_element(1, 1, 3.0),
            p_xd: DMatrix::from_element(1, 1, -1.0),
        };
        let (x_star, p_star) =
            time_update(&prediction, &input, &scalar_belief(0.0, 1.0), &mats).unwrap();
        assert_abs_diff_eq!(x_star[0], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(p_star[(0, 0)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn time_update_zero_g_reduces_to_prediction() {
        let mut mats = scalar_mats(1.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        mats.g = DMatrix::from_element(1, 1, 0.0);
        let prediction = Prediction {
            x_minus: DVector::from_element(1, 0.5),
            p_x_minus: DMatrix::from_element(1, 1, 2.0),
            rtilde: DMatrix::from_element(1, 1, 1.0 / 3.0),
        };
        let input = InputEstimate {
            gain: DMatrix::from_element(1, 1, 7.0),
            d_hat: DVector::from_element(1, 9.0),
            p_d: DMatrix::from_element(1, 1, 3.0),
            p_xd: DMatrix::from_element(1, 1, -1.0),
        };
        let (x_star, p_star) =
            time_update(&prediction, &input, &scalar_belief(0.0, 1.0), &mats).unwrap();
        // all G-bearing terms vanish: x* = x-, P* = A P A^T + Q
        assert_abs_diff_eq!(x_star[0], 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(p_star[(0, 0)], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn time_update_additivity() {
        let mats = StepMatrices {
            a: DMatrix::identity(2, 2),
            b: DMatrix::identity(2, 2),
            g: DMatrix::identity(2, 2),
            q: DMatrix::identity(2, 2),
            c: DMatrix::identity(2, 2),
            r: DMatrix::identity(2, 2),
        };
        let prediction = Prediction {
            x_minus: DVector::from_vec(vec![1.0, 2.0]),
            p_x_minus: DMatrix::identity(2, 2),
            rtilde: DMatrix::identity(2, 2),
        };
        let input = InputEstimate {
            gain: DMatrix::zeros(2, 2),
            d_hat: DVector::from_vec(vec![3.0, 4.0]),
            p_d: DMatrix::identity(2, 2),
            p_xd: DMatrix::zeros(2, 2),
        };
        let belief = Belief::from_state_prior(DVector::zeros(2), DMatrix::identity(2, 2), 2).unwrap();
        let (x_star, _) = time_update(&prediction, &input, &belief, &mats).unwrap();
        assert_abs_diff_eq!(x_star, DVector::from_vec(vec![4.0, 6.0]), epsilon = 1e-14);
    }

    #[test]
    fn measurement_update_zero_innovation_is_fixed_point() {
        let mats = scalar_mats(1.0, 0.0, 0.0, 1.0, 1.0, 1.0);
        let mats = StepMatrices {
            g: DMatrix::zeros(1, 0),
            ..mats
        };
        let x_star = DVector::from_element(1, 2.5);
        let p_star = DMatrix::from_element(1, 1, 1.5);
        let y = DVector::from_element(1, 2.5); // y = C x*, zero innovation
        let (out, _) = drise_measurement_update(
            &x_star,
            &p_star,
            &DMatrix::zeros(0, 1),
            &y,
            &RobustParams::default(),
            &mats,
        )
        .unwrap();
        assert_eq!(out.x_hat[0], 2.5);
        assert!(!out.psi_activated[0]);
    }

    #[test]
    fn measurement_update_contamination_only_widens_covariance() {
        let mats = StepMatrices {
            a: DMatrix::identity(2, 2),
            b: DMatrix::zeros(2, 1),
            g: DMatrix::zeros(2, 0),
            q: DMatrix::identity(2, 2),
            c: DMatrix::identity(2, 2),
            r: DMatrix::identity(2, 2) * 0.5,
        };
        let x_star = DVector::zeros(2);
        let p_star = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let y = DVector::from_vec(vec![0.4, -0.2]);
        let gain = DMatrix::zeros(0, 2);
        let base = RobustParams {
            epsilon: 0.0,
            clip_k: 40.0,
            ..RobustParams::nominal()
        };
        let contaminated = RobustParams {
            epsilon: 0.5,
            ..base
        };
        let (out0, _) =
            drise_measurement_update(&x_star, &p_star, &gain, &y, &base, &mats).unwrap();
        let (out5, _) =
            drise_measurement_update(&x_star, &p_star, &gain, &y, &contaminated, &mats).unwrap();
        // epsilon only scales the subtracted PSD term, so the difference is PSD
        // and the state estimate is untouched
        assert!(is_psd(&(&out5.p_x - &out0.p_x), 1e-10));
        assert_abs_diff_eq!(out5.x_hat, out0.x_hat, epsilon = 1e-14);
    }

    #[test]
    fn full_step_flags_clipped_components() {
        let mats = StepMatrices {
            a: DMatrix::identity(2, 2),
            b: DMatrix::zeros(2, 1),
            g: DMatrix::zeros(2, 0),
            q: DMatrix::identity(2, 2) * 0.01,
            c: DMatrix::identity(2, 2),
            r: DMatrix::identity(2, 2) * 0.01,
        };
        let belief = Belief::from_state_prior(DVector::zeros(2), DMatrix::identity(2, 2) * 0.01, 0)
            .unwrap();
        let params = RobustParams::default();
        // an outlier far outside the clip level in the first channel only
        let y = DVector::from_vec(vec![50.0, 0.0]);
        let (out, _) = drise_step(&belief, &DVector::zeros(1), &y, &mats, &params).unwrap();
        assert!(out.psi_activated[0]);
        assert!(!out.psi_activated[1]);
        // the clipped correction stays bounded by K * ||state gain column||
        assert!(out.x_hat[0] < 1.0);
    }
}
