//! Drives one estimator over simulated data, either replaying a shared
//! open-loop record or co-simulating the closed control loop.

use nalgebra::DMatrix;

use crate::filters::Estimator;
use crate::model::{Belief, StepMatrices, StepOutput};
use crate::sim::{
    linearize_raw, sample_measurement_noise, simulate, stream_rng, unknown_input_signal,
    ControlPolicy, LinearizationPoint, Scenario, TrajectoryRecord, TruthModel,
};

use super::BenchError;

/// Initial belief for an estimator: input-estimating filters start with the
/// diffuse unknown-input prior, the others carry the state blocks only.
pub fn initial_belief(estimator: &dyn Estimator, scenario: &Scenario) -> Result<Belief, BenchError> {
    let p = if estimator.estimates_input() { 2 } else { 0 };
    Ok(Belief::from_state_prior(
        scenario.initial_estimate_vector(),
        scenario.initial_covariance(),
        p,
    )
    .map_err(crate::filters::FilterError::from)?)
}

fn step_matrices_for(
    record: &TrajectoryRecord,
    belief: &Belief,
    scenario: &Scenario,
    k: usize,
) -> StepMatrices {
    match scenario.linearization {
        LinearizationPoint::Truth => crate::model::LtvModel::step_matrices(record, k),
        LinearizationPoint::Estimate => {
            let (a, b) = linearize_raw(
                &belief.x_hat,
                record.control(k),
                &scenario.geometry,
                scenario.dt,
            );
            StepMatrices {
                a,
                b: b.clone(),
                g: b,
                q: record.q.clone(),
                c: DMatrix::identity(4, 4),
                r: record.r.clone(),
            }
        }
    }
}

/// Replays a recorded trajectory through one estimator and collects the
/// per-step outputs. Consumes only `(u, y)` from the record in
/// estimate-linearization mode; in truth mode it also consumes the recorded
/// Jacobians, identical for every estimator.
pub fn run_on_record(
    record: &TrajectoryRecord,
    estimator: &dyn Estimator,
    scenario: &Scenario,
) -> Result<Vec<StepOutput>, BenchError> {
    let mut belief = initial_belief(estimator, scenario)?;
    let mut outputs = Vec::with_capacity(record.horizon());
    for k in 1..=record.horizon() {
        let mats = step_matrices_for(record, &belief, scenario, k);
        let (output, next) = estimator.step(&belief, record.control(k), record.measurement(k), &mats)?;
        outputs.push(output);
        belief = next;
    }
    Ok(outputs)
}

/// A closed-loop run couples truth and filter: the control applied to the
/// true vehicle comes from the estimate, so the produced trajectory is
/// specific to the estimator in the loop.
pub struct ClosedLoopRun {
    pub record: TrajectoryRecord,
    pub outputs: Vec<StepOutput>,
}

const STREAM_PROCESS: u64 = 1;
const STREAM_MEASUREMENT: u64 = 2;

/// Co-simulates truth and filter under estimate-feedback control. Noise
/// streams are identical to the open-loop generator's, so two estimators in
/// the loop face the same disturbance realization even though their
/// trajectories diverge.
pub fn run_closed_loop(
    scenario: &Scenario,
    estimator: &dyn Estimator,
) -> Result<ClosedLoopRun, BenchError> {
    scenario.validate()?;
    let n = scenario.horizon;
    let seed = scenario.contamination.seed;
    let geom = scenario.geometry;
    let dt = scenario.dt;
    let q = scenario.process_noise_cov();
    let r = scenario.measurement_noise_cov();
    let sqrt_q = crate::linalg::sym_sqrt(&q).map_err(crate::sim::SimError::from)?;
    let c = DMatrix::<f64>::identity(4, 4);

    let mut belief = initial_belief(estimator, scenario)?;
    let mut x = scenario.initial_state.as_vector();

    let mut states = vec![x.clone()];
    let mut controls = Vec::with_capacity(n);
    let mut unknown_inputs = Vec::with_capacity(n);
    let mut measurements = Vec::with_capacity(n);
    let mut a_mats = Vec::with_capacity(n);
    let mut b_mats = Vec::with_capacity(n);
    let mut outputs = Vec::with_capacity(n);

    for k in 0..n {
        let u = scenario.control.feedback(&belief.x_hat, &geom, k)?;
        let (a_truth, b_truth) = linearize_raw(&x, &u, &geom, dt);
        let d = unknown_input_signal(k);
        let mut process_rng = stream_rng(seed, STREAM_PROCESS, k as u64);
        let w = &sqrt_q
            * nalgebra::DVector::from_fn(4, |_, _| {
                rand::Rng::sample(&mut process_rng, rand_distr::StandardNormal)
            });
        let x_next = match scenario.truth {
            TruthModel::Linearized => &a_truth * &x + &b_truth * (&u + &d) + &w,
            TruthModel::Nonlinear => {
                crate::sim::bicycle_step_raw(&x, &u, &d, &geom, dt) + &w
            }
        };
        let mut measurement_rng = stream_rng(seed, STREAM_MEASUREMENT, (k + 1) as u64);
        let noise = sample_measurement_noise(&r, &scenario.contamination, &mut measurement_rng)?;
        let y = &x_next + noise;

        let mats = match scenario.linearization {
            LinearizationPoint::Truth => StepMatrices {
                a: a_truth.clone(),
                b: b_truth.clone(),
                g: b_truth.clone(),
                q: q.clone(),
                c: c.clone(),
                r: r.clone(),
            },
            LinearizationPoint::Estimate => {
                let (a_est, b_est) = linearize_raw(&belief.x_hat, &u, &geom, dt);
                StepMatrices {
                    a: a_est,
                    b: b_est.clone(),
                    g: b_est,
                    q: q.clone(),
                    c: c.clone(),
                    r: r.clone(),
                }
            }
        };
        let (output, next) = estimator.step(&belief, &u, &y, &mats)?;
        outputs.push(output);
        belief = next;

        states.push(x_next.clone());
        controls.push(u);
        unknown_inputs.push(d);
        measurements.push(y);
        a_mats.push(a_truth);
        b_mats.push(b_truth);
        x = x_next;
    }

    Ok(ClosedLoopRun {
        record: TrajectoryRecord {
            dt,
            geometry: geom,
            states,
            controls,
            unknown_inputs,
            measurements,
            a_mats,
            b_mats,
            q,
            r,
        },
        outputs,
    })
}

/// Simulate-once convenience used by tests: record plus outputs of a single
/// estimator, open loop.
pub fn simulate_and_run(
    scenario: &Scenario,
    estimator: &dyn Estimator,
) -> Result<(TrajectoryRecord, Vec<StepOutput>), BenchError> {
    if matches!(scenario.control, ControlPolicy::PurePursuit { .. }) {
        let run = run_closed_loop(scenario, estimator)?;
        return Ok((run.record, run.outputs));
    }
    let record = simulate(scenario)?;
    let outputs = run_on_record(&record, estimator, scenario)?;
    Ok((record, outputs))
}
