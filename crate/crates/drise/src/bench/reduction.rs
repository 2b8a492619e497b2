//! Equivalence suite: under nominal parameters (no inflation, no
//! contamination, clipping inactive) the robust step must reproduce the
//! classical input-and-state step on models with an unknown-input channel,
//! and the Kalman step on models without one. Run over randomly generated
//! LTV systems; both recursions see identical data and identical priors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::filters::{drise_step, ise_step, kf_step};
use crate::linalg::sym_sqrt;
use crate::model::{
    check_rank_condition_mats, Belief, Dims, LtvModel, RobustParams, StepMatrices,
};
use crate::sim::stream_rng;

use super::BenchError;

const STREAM_MODEL: u64 = 11;
const STREAM_SIGNALS: u64 = 12;

/// Randomly generated LTV system: constant input/output maps, a transition
/// matrix that wobbles around a stable nominal, and PD noise covariances.
pub struct RandomLtvModel {
    dims: Dims,
    a0: DMatrix<f64>,
    a1: DMatrix<f64>,
    b: DMatrix<f64>,
    g: DMatrix<f64>,
    c: DMatrix<f64>,
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_spd(dim: usize, floor: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let l = random_matrix(dim, dim, rng);
    &l * l.transpose() + DMatrix::identity(dim, dim) * floor
}

impl RandomLtvModel {
    /// Draws a model with the requested dimensions. `C` and `G` are
    /// resampled until the rank condition holds (a few tries suffice for
    /// random matrices).
    pub fn generate(dims: Dims, seed: u64, index: u64) -> Result<Self, BenchError> {
        let mut rng = stream_rng(seed, STREAM_MODEL, index);
        let mut a0 = random_matrix(dims.n, dims.n, &mut rng);
        let spectral = a0.clone().singular_values().max();
        if spectral > 0.0 {
            a0 *= 0.9 / spectral;
        }
        let a1 = random_matrix(dims.n, dims.n, &mut rng) * 0.05;
        let b = random_matrix(dims.n, dims.m, &mut rng);
        let q = random_spd(dims.n, 0.05, &mut rng);
        let r = random_spd(dims.l, 0.1, &mut rng);
        let (mut c, mut g) = (
            random_matrix(dims.l, dims.n, &mut rng),
            random_matrix(dims.n, dims.p, &mut rng),
        );
        let mut tries = 0;
        while check_rank_condition_mats(&c, &g).is_err() {
            c = random_matrix(dims.l, dims.n, &mut rng);
            g = random_matrix(dims.n, dims.p, &mut rng);
            tries += 1;
            if tries > 100 {
                return Err(BenchError::InvalidConfig {
                    reason: format!("could not satisfy rank condition for dims {dims:?}"),
                });
            }
        }
        Ok(Self {
            dims,
            a0,
            a1,
            b,
            g,
            c,
            q,
            r,
        })
    }
}

impl LtvModel for RandomLtvModel {
    fn dims(&self) -> Dims {
        self.dims
    }
    fn step_matrices(&self, k: usize) -> StepMatrices {
        let phase = (0.3 * (k as f64)).sin();
        StepMatrices {
            a: &self.a0 + phase * &self.a1,
            b: self.b.clone(),
            g: self.g.clone(),
            q: self.q.clone(),
            c: self.c.clone(),
            r: self.r.clone(),
        }
    }
}

/// Synthetic data generated exactly by the LTV recursion.
pub struct LtvTrajectory {
    pub controls: Vec<DVector<f64>>,
    pub unknown_inputs: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
    pub states: Vec<DVector<f64>>,
}

/// Rolls a model forward with random controls, random unknown inputs, and
/// Gaussian noise. With `noisy = false` both noises are zero, which the
/// exactness tests rely on.
pub fn generate_trajectory(
    model: &dyn LtvModel,
    steps: usize,
    seed: u64,
    index: u64,
    noisy: bool,
) -> Result<LtvTrajectory, BenchError> {
    let dims = model.dims();
    let mut rng = stream_rng(seed, STREAM_SIGNALS, index);
    let first = model.step_matrices(1);
    let sqrt_q = sym_sqrt(&first.q).map_err(crate::filters::FilterError::from)?;
    let sqrt_r = sym_sqrt(&first.r).map_err(crate::filters::FilterError::from)?;

    let mut states = vec![DVector::from_fn(dims.n, |_, _| rng.random_range(-1.0..1.0))];
    let mut controls = Vec::with_capacity(steps);
    let mut unknown_inputs = Vec::with_capacity(steps);
    let mut measurements = Vec::with_capacity(steps);
    for k in 1..=steps {
        let mats = model.step_matrices(k);
        let u = DVector::from_fn(dims.m, |_, _| rng.random_range(-1.0..1.0));
        let d = DVector::from_fn(dims.p, |_, _| rng.random_range(-1.0..1.0));
        let (w, v) = if noisy {
            (
                &sqrt_q * DVector::from_fn(dims.n, |_, _| rng.sample(rand_distr::StandardNormal)),
                &sqrt_r * DVector::from_fn(dims.l, |_, _| rng.sample(rand_distr::StandardNormal)),
            )
        } else {
            (DVector::zeros(dims.n), DVector::zeros(dims.l))
        };
        let x_next = &mats.a * states.last().unwrap() + &mats.b * &u + &mats.g * &d + w;
        measurements.push(&mats.c * &x_next + v);
        states.push(x_next);
        controls.push(u);
        unknown_inputs.push(d);
    }
    Ok(LtvTrajectory {
        controls,
        unknown_inputs,
        measurements,
        states,
    })
}

/// Worst deviations observed across the suite.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ReductionReport {
    pub models: usize,
    pub steps_per_model: usize,
    pub tolerance: f64,
    /// Max abs deviation robust-vs-classical over x, d, P^x, P^d (p >= 1 models).
    pub max_dev_ise: f64,
    /// Max abs deviation robust-vs-Kalman over x, P^x (p = 0 models).
    pub max_dev_kf: f64,
}

impl ReductionReport {
    pub fn passed(&self) -> bool {
        self.max_dev_ise <= self.tolerance && self.max_dev_kf <= self.tolerance
    }
}

fn dims_for_case(index: usize) -> Dims {
    // cycles p through 0, 1, 2 and varies the rest deterministically
    let p = index % 3;
    let n = 2 + (index * 2 + 1) % 5; // 2..=6
    let l = (p.max(1) + index % 3).min(n + 1);
    let m = 1 + index % 2;
    Dims { n, m, p, l }
}

/// Runs the full equivalence suite and reports the worst deviations.
pub fn run_reduction_suite(
    models: usize,
    steps: usize,
    seed: u64,
    tolerance: f64,
) -> Result<ReductionReport, BenchError> {
    let nominal = RobustParams::nominal();
    let mut max_dev_ise = 0.0f64;
    let mut max_dev_kf = 0.0f64;

    for index in 0..models {
        let dims = dims_for_case(index);
        let model = RandomLtvModel::generate(dims, seed, index as u64)?;
        let data = generate_trajectory(&model, steps, seed, index as u64, true)?;

        let x0 = data.states[0].clone();
        let p0 = DMatrix::identity(dims.n, dims.n);
        let mut robust_belief = Belief::from_state_prior(x0.clone(), p0.clone(), dims.p)
            .map_err(crate::filters::FilterError::from)?;
        let mut classical_belief = robust_belief.clone();

        for k in 1..=steps {
            let mats = model.step_matrices(k);
            let u = &data.controls[k - 1];
            let y = &data.measurements[k - 1];
            let (robust_out, robust_next) =
                drise_step(&robust_belief, u, y, &mats, &nominal)?;
            if dims.p == 0 {
                let (kf_out, kf_next) = kf_step(&classical_belief, u, y, &mats)?;
                max_dev_kf = max_dev_kf
                    .max((&robust_out.x_hat - &kf_out.x_hat).amax())
                    .max((&robust_out.p_x - &kf_out.p_x).amax());
                classical_belief = kf_next;
            } else {
                let (ise_out, ise_next) = ise_step(&classical_belief, u, y, &mats)?;
                max_dev_ise = max_dev_ise
                    .max((&robust_out.x_hat - &ise_out.x_hat).amax())
                    .max((&robust_out.p_x - &ise_out.p_x).amax())
                    .max(
                        (robust_out.d_hat.as_ref().unwrap() - ise_out.d_hat.as_ref().unwrap())
                            .amax(),
                    )
                    .max(
                        (robust_out.p_d.as_ref().unwrap() - ise_out.p_d.as_ref().unwrap()).amax(),
                    );
                classical_belief = ise_next;
            }
            robust_belief = robust_next;
        }
    }

    Ok(ReductionReport {
        models,
        steps_per_model: steps,
        tolerance,
        max_dev_ise,
        max_dev_kf,
    })
}
