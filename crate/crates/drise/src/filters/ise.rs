//! Classical input and state estimation.
//!
//! Deliberately a self-contained code path rather than the robust step with
//! limit parameters, so the equivalence between the two under nominal
//! parameters is a genuine cross-check. The measurement update is written in
//! gain form: `L_k = (P* C^T - G M R) (Rtilde*)^+` with the innovation matrix
//! `Rtilde* = C P* C^T - C G M R - R M^T G^T C^T + R`. After input estimation
//! the innovation is confined to a rank `l - p` subspace, so `Rtilde*` is
//! singular by construction and its pseudo-inverse is the appropriate
//! weighting.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{is_psd, spd_solve, symmetrize, PsdFactor};
use crate::model::{check_rank_condition_mats, Belief, StepMatrices, StepOutput};

use super::FilterError;

/// One classical input-and-state step. Requires an unknown-input channel.
pub fn ise_step(
    belief: &Belief,
    u: &DVector<f64>,
    y: &DVector<f64>,
    mats: &StepMatrices,
) -> Result<(StepOutput, Belief), FilterError> {
    let dims = mats.dims();
    if dims.p == 0 {
        return Err(FilterError::NoUnknownInputChannel { name: "ise" });
    }
    if belief.x_hat.nrows() != dims.n || u.nrows() != dims.m || y.nrows() != dims.l {
        return Err(FilterError::Shape {
            context: format!(
                "ise step: state {} / control {} / measurement {} vs dims {:?}",
                belief.x_hat.nrows(),
                u.nrows(),
                y.nrows(),
                dims
            ),
        });
    }
    check_rank_condition_mats(&mats.c, &mats.g)?;

    // prediction
    let x_minus = &mats.a * &belief.x_hat + &mats.b * u;
    let p_minus = symmetrize(&(&mats.a * &belief.p_x * mats.a.transpose() + &mats.q));
    let innovation_prior = symmetrize(&(&mats.c * &p_minus * mats.c.transpose() + &mats.r));
    let rtilde = symmetrize(&spd_solve(
        &innovation_prior,
        &DMatrix::identity(dims.l, dims.l),
    )?);

    // unknown input estimation
    let gc = &mats.c * &mats.g;
    let gct_rt = gc.transpose() * &rtilde;
    let normal = symmetrize(&(&gct_rt * &gc));
    let p_d = symmetrize(&spd_solve(&normal, &DMatrix::identity(dims.p, dims.p))?);
    let gain_m = &p_d * &gct_rt;
    let d_hat = &gain_m * (y - &mats.c * &x_minus);
    let p_xd = -(&belief.p_x * mats.a.transpose() * mats.c.transpose() * gain_m.transpose());

    // time update
    let x_star = &x_minus + &mats.g * &d_hat;
    let a_pxd_gt = &mats.a * &p_xd * mats.g.transpose();
    let gm = &mats.g * &gain_m;
    let gmcq = &gm * &mats.c * &mats.q;
    let p_star = symmetrize(
        &(&mats.a * &belief.p_x * mats.a.transpose()
            + &mats.q
            + &mats.g * &p_d * mats.g.transpose()
            + &a_pxd_gt
            + a_pxd_gt.transpose()
            - &gmcq
            - gmcq.transpose()),
    );
    if !is_psd(&p_star, 1e-8) {
        return Err(FilterError::CovarianceNotPsd { what: "P_x_star" });
    }

    // measurement update in gain form
    let gmr = &gm * &mats.r;
    let c_gmr = &mats.c * &gmr;
    let innovation_cov = symmetrize(
        &(&mats.c * &p_star * mats.c.transpose() - &c_gmr - c_gmr.transpose() + &mats.r),
    );
    let factor = PsdFactor::new(&innovation_cov).map_err(|err| match err {
        crate::linalg::LinalgError::NotPsd { .. } => {
            FilterError::CovarianceNotPsd { what: "Rtilde_star" }
        }
        other => FilterError::Linalg(other),
    })?;
    let innovation = y - &mats.c * &x_star;
    let gain_l = (&p_star * mats.c.transpose() - &gmr) * factor.pinv();
    let x_hat = &x_star + &gain_l * &innovation;
    let p_x = symmetrize(&(&p_star - &gain_l * &innovation_cov * gain_l.transpose()));

    let output = StepOutput {
        x_hat: x_hat.clone(),
        p_x: p_x.clone(),
        d_hat: Some(d_hat),
        p_d: Some(p_d.clone()),
        innovation,
        innovation_cov,
        psi_activated: vec![false; dims.l],
    };
    let next = Belief::from_filter_output(x_hat, p_x, Some(p_d), Some(p_xd), belief.k + 1);
    Ok((output, next))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scalar_mats() -> StepMatrices {
        StepMatrices {
            a: DMatrix::from_element(1, 1, 1.0),
            b: DMatrix::from_element(1, 1, 0.0),
            g: DMatrix::from_element(1, 1, 1.0),
            q: DMatrix::from_element(1, 1, 1.0),
            c: DMatrix::from_element(1, 1, 1.0),
            r: DMatrix::from_element(1, 1, 1.0),
        }
    }

    #[test]
    fn scalar_chain_oracle() {
        // the full step evaluated line by line on paper:
        // x- = 0, P- = 2, Rt = 1/3; M = 1, d = 3, Pd = 3, Pxd = -1;
        // x* = 3, P* = 1; Rtilde* = 0 (input estimation consumed the whole
        // innovation when p = l), s* = 0, L = 0; so x = 3, P = 1.
        let belief = Belief::from_state_prior(
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 1.0),
            1,
        )
        .unwrap();
        let (out, next) = ise_step(
            &belief,
            &DVector::zeros(1),
            &DVector::from_element(1, 3.0),
            &scalar_mats(),
        )
        .unwrap();
        assert_abs_diff_eq!(out.d_hat.as_ref().unwrap()[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.p_d.as_ref().unwrap()[(0, 0)], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.x_hat[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.p_x[(0, 0)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.innovation[0], 0.0, epsilon = 1e-12);
        assert_eq!(next.k, 1);
    }

    #[test]
    fn zero_innovation_leaves_time_update() {
        let mats = StepMatrices {
            a: DMatrix::identity(2, 2),
            b: DMatrix::zeros(2, 1),
            g: DMatrix::from_row_slice(2, 1, &[1.0, 0.0]),
            q: DMatrix::identity(2, 2) * 0.1,
            c: DMatrix::identity(2, 2),
            r: DMatrix::identity(2, 2) * 0.2,
        };
        let belief = Belief::from_state_prior(
            DVector::from_vec(vec![1.0, -1.0]),
            DMatrix::identity(2, 2),
            1,
        )
        .unwrap();
        // y = C x-, so d = 0 and the post-update innovation is zero as well
        let y = DVector::from_vec(vec![1.0, -1.0]);
        let (out, _) = ise_step(&belief, &DVector::zeros(1), &y, &mats).unwrap();
        assert_abs_diff_eq!(out.d_hat.as_ref().unwrap()[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out.x_hat, y, epsilon = 1e-12);
    }

    #[test]
    fn requires_unknown_input_channel() {
        let mut mats = scalar_mats();
        mats.g = DMatrix::zeros(1, 0);
        let belief = Belief::from_state_prior(
            DVector::zeros(1),
            DMatrix::from_element(1, 1, 1.0),
            0,
        )
        .unwrap();
        assert!(matches!(
            ise_step(
                &belief,
                &DVector::zeros(1),
                &DVector::zeros(1),
                &mats
            ),
            Err(FilterError::NoUnknownInputChannel { .. })
        ));
    }
}
