//! Kinematic bicycle vehicle: state, geometry, the square-wave unknown-input
//! signal, the forward step, and its analytic linearization.
//!
//! The state vector ordering is `[x, y, heading, speed]`. Simulation and
//! filtering carry the heading unwrapped (accumulated), which keeps the
//! measurement equation linear; [`VehicleState`] wraps it into `(-pi, pi]`
//! for presentation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::SimError;

/// Front/rear axle distances from the center of gravity, in meters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct VehicleGeometry {
    pub l_f: f64,
    pub l_r: f64,
}

impl Default for VehicleGeometry {
    fn default() -> Self {
        Self { l_f: 1.2, l_r: 1.6 }
    }
}

impl VehicleGeometry {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.l_f > 0.0 && self.l_f.is_finite()) {
            return Err(SimError::InvalidScenario {
                field: "geometry.l_f",
                reason: "must be > 0",
            });
        }
        if !(self.l_r > 0.0 && self.l_r.is_finite()) {
            return Err(SimError::InvalidScenario {
                field: "geometry.l_r",
                reason: "must be > 0",
            });
        }
        Ok(())
    }
}

/// Planar vehicle pose and speed. `heading` is wrapped to `(-pi, pi]` at
/// construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct VehicleState {
    /// Position east, m.
    pub x: f64,
    /// Position north, m.
    pub y: f64,
    /// Heading, rad, in `(-pi, pi]`.
    pub heading: f64,
    /// Longitudinal speed, m/s.
    pub speed: f64,
}

impl VehicleState {
    pub fn new(x: f64, y: f64, heading: f64, speed: f64) -> Self {
        Self {
            x,
            y,
            heading: wrap_angle(heading),
            speed,
        }
    }

    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_vec(vec![self.x, self.y, self.heading, self.speed])
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(angle: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut r = (angle + PI).rem_euclid(two_pi);
    if r == 0.0 {
        r = two_pi;
    }
    r - PI
}

/// Slip angle from the steering angle:
/// `beta = arctan(l_r / (l_f + l_r) * tan(alpha))`. Defined for `|alpha| < pi/2`.
pub fn slip_angle(steering_alpha: f64, geom: &VehicleGeometry) -> Result<f64, SimError> {
    if !(steering_alpha.abs() < PI / 2.0) {
        return Err(SimError::DomainError {
            alpha: steering_alpha,
        });
    }
    let ratio = geom.l_r / (geom.l_f + geom.l_r);
    Ok((ratio * steering_alpha.tan()).atan())
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Square-wave unknown input `d_k = sign(sin(0.005 k)) * [1, 10]^T`,
/// with `sign(0) = 0`. The first component perturbs the slip channel, the
/// second the acceleration channel.
pub fn unknown_input_signal(k: usize) -> DVector<f64> {
    let s = sign((0.005 * k as f64).sin());
    DVector::from_vec(vec![s, 10.0 * s])
}

/// Euler step of the bicycle kinematics on the raw `[x, y, heading, speed]`
/// vector, heading left unwrapped. The unknown input enters through the
/// actuation channels: `beta_eff = beta + d1 * dt` and `a_eff = a + d2`.
pub fn bicycle_step_raw(
    state: &DVector<f64>,
    u: &DVector<f64>,
    d: &DVector<f64>,
    geom: &VehicleGeometry,
    dt: f64,
) -> DVector<f64> {
    let (x, y, heading, speed) = (state[0], state[1], state[2], state[3]);
    let beta_eff = u[0] + d[0] * dt;
    DVector::from_vec(vec![
        x + dt * speed * (heading + beta_eff).cos(),
        y + dt * speed * (heading + beta_eff).sin(),
        heading + dt * (speed / geom.l_r) * beta_eff.sin(),
        speed + dt * (u[1] + d[1]),
    ])
}

/// Euler step of the bicycle kinematics; see [`bicycle_step_raw`]. The
/// returned heading is wrapped to `(-pi, pi]`.
pub fn bicycle_step(
    state: &VehicleState,
    u: &DVector<f64>,
    d: &DVector<f64>,
    geom: &VehicleGeometry,
    dt: f64,
) -> VehicleState {
    VehicleState::from_vector(&bicycle_step_raw(&state.as_vector(), u, d, geom, dt))
}

/// Analytic Jacobians of the bicycle step about `(state, u, d = 0)`:
/// `A = I + dt * df/dstate`, `B = dt * df/du`. The unknown-input matrix of
/// the linearized model is taken equal to `B` (the input enters through the
/// actuation channels).
pub fn linearize_raw(
    state: &DVector<f64>,
    u: &DVector<f64>,
    geom: &VehicleGeometry,
    dt: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let heading = state[2];
    let speed = state[3];
    let beta = u[0];
    let course = heading + beta;
    let (sin_c, cos_c) = course.sin_cos();
    let (sin_b, cos_b) = beta.sin_cos();

    let mut a = DMatrix::identity(4, 4);
    a[(0, 2)] = -dt * speed * sin_c;
    a[(0, 3)] = dt * cos_c;
    a[(1, 2)] = dt * speed * cos_c;
    a[(1, 3)] = dt * sin_c;
    a[(2, 3)] = dt * sin_b / geom.l_r;

    let mut b = DMatrix::zeros(4, 2);
    b[(0, 0)] = -dt * speed * sin_c;
    b[(1, 0)] = dt * speed * cos_c;
    b[(2, 0)] = dt * (speed / geom.l_r) * cos_b;
    b[(3, 1)] = dt;

    (a, b)
}

/// [`linearize_raw`] on a [`VehicleState`].
pub fn linearize(
    state: &VehicleState,
    u: &DVector<f64>,
    geom: &VehicleGeometry,
    dt: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    linearize_raw(&state.as_vector(), u, geom, dt)
}
