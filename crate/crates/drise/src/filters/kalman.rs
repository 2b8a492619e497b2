//! Standard Kalman filter baseline. Ignores the unknown-input channel
//! entirely; whatever `G d` injects into the dynamics shows up as unmodeled
//! disturbance.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{spd_solve, symmetrize};
use crate::model::{Belief, StepMatrices, StepOutput};

use super::FilterError;

/// One predict/update step with the Joseph-form covariance update.
pub fn kf_step(
    belief: &Belief,
    u: &DVector<f64>,
    y: &DVector<f64>,
    mats: &StepMatrices,
) -> Result<(StepOutput, Belief), FilterError> {
    let dims = mats.dims();
    if belief.x_hat.nrows() != dims.n || u.nrows() != dims.m || y.nrows() != dims.l {
        return Err(FilterError::Shape {
            context: format!(
                "kf step: state {} / control {} / measurement {} vs dims {:?}",
                belief.x_hat.nrows(),
                u.nrows(),
                y.nrows(),
                dims
            ),
        });
    }

    let x_minus = &mats.a * &belief.x_hat + &mats.b * u;
    let p_minus = symmetrize(&(&mats.a * &belief.p_x * mats.a.transpose() + &mats.q));
    let innovation_cov = symmetrize(&(&mats.c * &p_minus * mats.c.transpose() + &mats.r));
    // K = P- C^T S^{-1}, computed as (S^{-1} C P-)^T
    let gain = spd_solve(&innovation_cov, &(&mats.c * &p_minus))?.transpose();
    let innovation = y - &mats.c * &x_minus;
    let x_hat = &x_minus + &gain * &innovation;
    let i_kc = DMatrix::identity(dims.n, dims.n) - &gain * &mats.c;
    let p_x = symmetrize(
        &(&i_kc * &p_minus * i_kc.transpose() + &gain * &mats.r * gain.transpose()),
    );

    let output = StepOutput {
        x_hat: x_hat.clone(),
        p_x: p_x.clone(),
        d_hat: None,
        p_d: None,
        innovation,
        innovation_cov,
        psi_activated: vec![false; dims.l],
    };
    let next = Belief::from_filter_output(x_hat, p_x, None, None, belief.k + 1);
    Ok((output, next))
}
