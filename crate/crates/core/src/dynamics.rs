//! Quadrotor geometry and first-order kinematics.
//!
//! Attitude uses ZYX Euler angles `(roll, pitch, yaw)`. The body-to-inertial
//! rotation is `R_z(yaw) * R_y(pitch) * R_x(roll)`, and body rates map to Euler
//! angle rates through the angular transform `T(roll, pitch)`.
//!
//! The vehicle is driven through a collective-thrust-and-body-rates (CTBR)
//! interface. Thrust is a unitless channel in `[0, 3.5]`; the excess over the
//! hover thrust becomes a velocity along the body z-axis:
//!
//! ```text
//! velocity(k)   = R(attitude(k)) * (0, 0, thrust - hover_thrust)
//! position(k+1) = position(k) + velocity(k) * dt
//! attitude(k+1) = clamp(attitude(k) + T(roll, pitch) * body_rates * dt)
//! ```
//!
//! All arithmetic is `f64`.

use std::f64::consts::FRAC_PI_3;
use std::fmt;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lower bound of the collective thrust channel.
pub const THRUST_MIN: f64 = 0.0;
/// Upper bound of the collective thrust channel.
pub const THRUST_MAX: f64 = 3.5;
/// Symmetric bound on commanded body rates (rad/s).
pub const RATE_LIMIT: f64 = FRAC_PI_3;
/// Symmetric bound on each Euler angle (rad). The admissible set is the open
/// interval, so clamping lands just inside it.
pub const ATTITUDE_LIMIT: f64 = FRAC_PI_3;

const ATTITUDE_CLAMP: f64 = FRAC_PI_3 - 1e-9;
const SINGULARITY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

/// A proper rotation matrix (orthonormal, determinant +1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        RotationMatrix(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// Composition `self * rhs`.
    pub fn compose(&self, rhs: &RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

fn check_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Elemental rotation about one axis.
pub fn rot_elemental(axis: Axis, angle: f64) -> Result<RotationMatrix> {
    check_finite(&[angle], "rotation angle")?;
    let (s, c) = angle.sin_cos();
    #[rustfmt::skip]
    let m = match axis {
        Axis::X => Matrix3::new(
            1.0, 0.0, 0.0,
            0.0, c,   -s,
            0.0, s,   c,
        ),
        Axis::Y => Matrix3::new(
            c,   0.0, s,
            0.0, 1.0, 0.0,
            -s,  0.0, c,
        ),
        Axis::Z => Matrix3::new(
            c,   -s,  0.0,
            s,   c,   0.0,
            0.0, 0.0, 1.0,
        ),
    };
    Ok(RotationMatrix(m))
}

/// Body-to-inertial rotation `R_z(yaw) * R_y(pitch) * R_x(roll)`, evaluated
/// through its expanded closed form.
pub fn rot_zyx(roll: f64, pitch: f64, yaw: f64) -> Result<RotationMatrix> {
    check_finite(&[roll, pitch, yaw], "euler angles")?;
    Ok(RotationMatrix(rot_zyx_closed_form(roll, pitch, yaw)))
}

#[rustfmt::skip]
fn rot_zyx_closed_form(roll: f64, pitch: f64, yaw: f64) -> Matrix3<f64> {
    let (sf, cf) = roll.sin_cos();
    let (st, ct) = pitch.sin_cos();
    let (sp, cp) = yaw.sin_cos();
    Matrix3::new(
        ct * cp, sf * st * cp - cf * sp, cf * st * cp + sf * sp,
        ct * sp, sf * st * sp + cf * cp, cf * st * sp - sf * cp,
        -st,     sf * ct,                cf * ct,
    )
}

/// Maps body rates to Euler angle rates.
///
/// Fails when `|pitch|` is within `1e-6` of `pi/2`, where `tan` and `sec`
/// diverge.
pub fn angular_transform(roll: f64, pitch: f64) -> Result<Matrix3<f64>> {
    check_finite(&[roll, pitch], "euler angles")?;
    if pitch.abs() >= std::f64::consts::FRAC_PI_2 - SINGULARITY_MARGIN {
        return Err(Error::Singularity { pitch });
    }
    Ok(angular_transform_unchecked(roll, pitch))
}

#[rustfmt::skip]
fn angular_transform_unchecked(roll: f64, pitch: f64) -> Matrix3<f64> {
    let (sf, cf) = roll.sin_cos();
    let (tt, ct) = (pitch.tan(), pitch.cos());
    Matrix3::new(
        1.0, sf * tt,  cf * tt,
        0.0, cf,       -sf,
        0.0, sf / ct,  cf / ct,
    )
}

/// Full vehicle pose and rates at one control tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadrotorState {
    /// Inertial position (m).
    pub position: Vector3<f64>,
    /// Euler angles `(roll, pitch, yaw)` (rad).
    pub attitude: Vector3<f64>,
    /// Inertial velocity (m/s).
    pub velocity: Vector3<f64>,
    /// Body rates (rad/s).
    pub body_rates: Vector3<f64>,
}

impl QuadrotorState {
    /// Level, motionless vehicle at `position`.
    pub fn at_rest(position: Vector3<f64>) -> Self {
        QuadrotorState {
            position,
            attitude: Vector3::zeros(),
            velocity: Vector3::zeros(),
            body_rates: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.position, self.attitude, self.velocity, self.body_rates]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn attitude_in_bounds(&self) -> bool {
        self.attitude.iter().all(|a| a.abs() < ATTITUDE_LIMIT)
    }

    pub fn rotation(&self) -> RotationMatrix {
        RotationMatrix(rot_zyx_closed_form(
            self.attitude.x,
            self.attitude.y,
            self.attitude.z,
        ))
    }
}

/// The CTBR command `[thrust, roll_rate, pitch_rate, yaw_rate]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ControlCommand {
    pub thrust: f64,
    pub roll_rate: f64,
    pub pitch_rate: f64,
    pub yaw_rate: f64,
}

impl ControlCommand {
    pub fn to_array(self) -> [f64; 4] {
        [self.thrust, self.roll_rate, self.pitch_rate, self.yaw_rate]
    }

    pub fn rates(&self) -> Vector3<f64> {
        Vector3::new(self.roll_rate, self.pitch_rate, self.yaw_rate)
    }

    pub fn is_within_bounds(&self) -> bool {
        (THRUST_MIN..=THRUST_MAX).contains(&self.thrust)
            && [self.roll_rate, self.pitch_rate, self.yaw_rate]
                .iter()
                .all(|r| r.abs() <= RATE_LIMIT)
    }
}

/// Saturates a raw 4-channel command to the admissible box. The flag reports
/// whether any channel was clipped.
pub fn clamp_command(raw: [f64; 4]) -> Result<(ControlCommand, bool)> {
    check_finite(&raw, "raw command")?;
    let thrust = raw[0].clamp(THRUST_MIN, THRUST_MAX);
    let rates = [1, 2, 3].map(|i| raw[i].clamp(-RATE_LIMIT, RATE_LIMIT));
    let cmd = ControlCommand {
        thrust,
        roll_rate: rates[0],
        pitch_rate: rates[1],
        yaw_rate: rates[2],
    };
    let clipped = cmd.to_array() != raw;
    Ok((cmd, clipped))
}

/// Crash-detection box. Ground contact (`z < 0`) is reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Workspace {
    /// Bound on `|x|` and `|y|` (m).
    pub half_width_xy: f64,
    /// Bound on `z` (m).
    pub ceiling: f64,
}

impl Default for Workspace {
    fn default() -> Self {
        Workspace {
            half_width_xy: 3.0,
            ceiling: 3.0,
        }
    }
}

impl Workspace {
    pub fn classify(&self, position: &Vector3<f64>) -> Option<CrashCause> {
        if position.z < 0.0 {
            Some(CrashCause::Ground)
        } else if position.x.abs() > self.half_width_xy
            || position.y.abs() > self.half_width_xy
            || position.z > self.ceiling
        {
            Some(CrashCause::Workspace)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrashCause {
    Ground,
    Workspace,
}

impl fmt::Display for CrashCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrashCause::Ground => "ground",
            CrashCause::Workspace => "workspace",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicalParams {
    /// Rotor lift constant `k` (N s^2).
    pub lift_constant: f64,
    /// Rotor drag constant `b` (N m s^2).
    pub drag_constant: f64,
    /// Arm length `l` (m).
    pub arm_length: f64,
    /// Vehicle mass (kg).
    pub mass: f64,
    /// Gravitational acceleration (m/s^2).
    pub gravity: f64,
    /// Thrust channel value that produces zero vertical velocity.
    pub hover_thrust: f64,
    /// Control period (s).
    pub dt: f64,
    pub workspace: Workspace,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            lift_constant: 1e-5,
            drag_constant: 1e-6,
            arm_length: 0.15,
            mass: 0.75,
            gravity: 9.81,
            hover_thrust: 1.75,
            dt: 0.02,
            workspace: Workspace::default(),
        }
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lift_constant", self.lift_constant),
            ("drag_constant", self.drag_constant),
            ("arm_length", self.arm_length),
            ("mass", self.mass),
            ("gravity", self.gravity),
            ("hover_thrust", self.hover_thrust),
            ("dt", self.dt),
            ("workspace.half_width_xy", self.workspace.half_width_xy),
            ("workspace.ceiling", self.workspace.ceiling),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "physical parameter {name} must be positive, got {value}"
                )));
            }
        }
        if self.hover_thrust >= THRUST_MAX {
            return Err(Error::InvalidInput(format!(
                "hover_thrust must lie in (0, {THRUST_MAX}), got {}",
                self.hover_thrust
            )));
        }
        Ok(())
    }
}

/// Inertial velocity and Euler rates for a given body-frame velocity.
pub fn frame_velocities(
    state: &QuadrotorState,
    body_velocity: &Vector3<f64>,
) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let t = angular_transform(state.attitude.x, state.attitude.y)?;
    let r = rot_zyx(state.attitude.x, state.attitude.y, state.attitude.z)?;
    Ok((r.rotate(body_velocity), t * state.body_rates))
}

/// Net vertical force and body moments produced by four rotor speeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorForces {
    /// Net force along body z after subtracting weight (N).
    pub thrust_z: f64,
    pub roll_moment: f64,
    pub pitch_moment: f64,
    pub yaw_moment: f64,
}

/// Motor mixing for the X configuration. Rotor speeds are indexed front,
/// left, rear, right (`w1..w4`).
pub fn motor_mixing(speeds: [f64; 4], params: &PhysicalParams) -> Result<MotorForces> {
    check_finite(&speeds, "rotor speeds")?;
    if let Some(w) = speeds.iter().find(|w| **w < 0.0) {
        return Err(Error::InvalidInput(format!(
            "rotor speeds must be non-negative, got {w}"
        )));
    }
    let [w1, w2, w3, w4] = speeds.map(|w| w * w);
    let k = params.lift_constant;
    Ok(MotorForces {
        thrust_z: k * (w1 + w2 + w3 + w4) - params.mass * params.gravity,
        roll_moment: params.arm_length * k * (w2 - w4),
        pitch_moment: params.arm_length * k * (w1 - w3),
        yaw_moment: params.drag_constant * (w4 + w2 - w1 - w3),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub state: QuadrotorState,
    /// Per-axis flags for Euler angles that hit the attitude bound.
    pub attitude_clamped: [bool; 3],
    pub crash: Option<CrashCause>,
}

/// Advances the vehicle by one control period.
///
/// `cmd` must already be saturated (see [`clamp_command`]); `state` must have
/// its attitude inside the admissible box.
pub fn step(state: &QuadrotorState, cmd: &ControlCommand, params: &PhysicalParams) -> StepOutcome {
    debug_assert!(cmd.is_within_bounds(), "unclamped command {cmd:?}");
    debug_assert!(state.attitude_in_bounds(), "attitude out of bounds {state:?}");

    let dt = params.dt;
    let body_rates = cmd.rates();
    let euler_rates = angular_transform_unchecked(state.attitude.x, state.attitude.y) * body_rates;

    let mut attitude = state.attitude + euler_rates * dt;
    let mut attitude_clamped = [false; 3];
    for (angle, flag) in attitude.iter_mut().zip(attitude_clamped.iter_mut()) {
        if angle.abs() > ATTITUDE_CLAMP {
            *angle = angle.clamp(-ATTITUDE_CLAMP, ATTITUDE_CLAMP);
            *flag = true;
        }
    }

    let excess = Vector3::new(0.0, 0.0, cmd.thrust - params.hover_thrust);
    let velocity = state.rotation().rotate(&excess);
    let position = state.position + velocity * dt;

    let next = QuadrotorState {
        position,
        attitude,
        velocity,
        body_rates,
    };
    StepOutcome {
        state: next,
        attitude_clamped,
        crash: params.workspace.classify(&position),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6};

    fn hover_cmd(params: &PhysicalParams) -> ControlCommand {
        ControlCommand {
            thrust: params.hover_thrust,
            ..Default::default()
        }
    }

    #[test]
    fn elemental_zero_is_identity() {
        for axis in [Axis::X, Axis::Y, Axis::Z] {
            assert_eq!(rot_elemental(axis, 0.0).unwrap(), RotationMatrix::identity());
        }
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = rot_elemental(Axis::Z, FRAC_PI_2).unwrap();
        let expected = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_abs_diff_eq!(*r.matrix(), expected, epsilon = 1e-15);
    }

    #[test]
    fn elemental_y_entries() {
        let r = rot_elemental(Axis::Y, 0.3).unwrap();
        let (c, s) = (0.3f64.cos(), 0.3f64.sin());
        let m = r.matrix();
        assert_eq!(m[(0, 0)], c);
        assert_eq!(m[(0, 2)], s);
        assert_eq!(m[(2, 0)], -s);
        assert_eq!(m[(2, 2)], c);
        assert_eq!(m[(1, 1)], 1.0);
        assert_eq!(m[(0, 1)], 0.0);
    }

    #[test]
    fn non_finite_angles_rejected() {
        assert!(rot_elemental(Axis::X, f64::NAN).is_err());
        assert!(rot_zyx(0.0, f64::INFINITY, 0.0).is_err());
    }

    #[test]
    fn pure_yaw_collapses_to_elemental() {
        let r = rot_zyx(0.0, 0.0, 0.7).unwrap();
        let z = rot_elemental(Axis::Z, 0.7).unwrap();
        assert_abs_diff_eq!(*r.matrix(), *z.matrix(), epsilon = 1e-15);
    }

    #[test]
    fn angular_transform_identity_and_singularity() {
        assert_eq!(angular_transform(0.0, 0.0).unwrap(), Matrix3::identity());
        assert!(matches!(
            angular_transform(0.0, FRAC_PI_2 - 1e-9),
            Err(Error::Singularity { .. })
        ));
        assert!(angular_transform(0.0, -FRAC_PI_2).is_err());
    }

    #[test]
    fn angular_transform_scalar_oracle() {
        let (phi, theta) = (FRAC_PI_6, FRAC_PI_6);
        let t = angular_transform(phi, theta).unwrap();
        let expected = [
            [1.0, phi.sin() * theta.tan(), phi.cos() * theta.tan()],
            [0.0, phi.cos(), -phi.sin()],
            [0.0, phi.sin() / theta.cos(), phi.cos() / theta.cos()],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(t[(i, j)], expected[i][j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn frame_velocities_level_and_yawed() {
        let mut state = QuadrotorState::at_rest(Vector3::zeros());
        state.body_rates = Vector3::new(0.1, -0.2, 0.3);
        let (v, rates) = frame_velocities(&state, &Vector3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!(v, Vector3::new(0.0, 0.0, 1.0));
        assert_eq!(rates, state.body_rates);

        state.attitude = Vector3::new(0.0, 0.0, FRAC_PI_4);
        let (v, _) = frame_velocities(&state, &Vector3::new(1.0, 0.0, 0.0)).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert_abs_diff_eq!(v, Vector3::new(h, h, 0.0), epsilon = 1e-15);
    }

    #[test]
    fn motor_mixing_balance_and_roll_sign() {
        let params = PhysicalParams::default();
        let w = (params.mass * params.gravity / (4.0 * params.lift_constant)).sqrt();
        let f = motor_mixing([w; 4], &params).unwrap();
        assert_abs_diff_eq!(f.thrust_z, 0.0, epsilon = 1e-12);
        assert_eq!(f.roll_moment, 0.0);
        assert_eq!(f.pitch_moment, 0.0);
        assert_eq!(f.yaw_moment, 0.0);

        let f = motor_mixing([900.0, 950.0, 900.0, 850.0], &params).unwrap();
        assert!(f.roll_moment > 0.0);
        assert_eq!(f.pitch_moment, 0.0);
    }

    #[test]
    fn motor_mixing_rejects_negative_speed() {
        let params = PhysicalParams::default();
        assert!(matches!(
            motor_mixing([1.0, -1.0, 1.0, 1.0], &params),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn clamp_command_cases() {
        let (c, clipped) = clamp_command([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(c.to_array(), [1.0, 0.0, 0.0, 0.0]);
        assert!(!clipped);

        let (c, clipped) = clamp_command([5.0, 2.0, -2.0, 0.0]).unwrap();
        assert_eq!(c.to_array(), [3.5, FRAC_PI_3, -FRAC_PI_3, 0.0]);
        assert!(clipped);

        let (c, clipped) = clamp_command([-0.1, 0.1, 0.1, 0.1]).unwrap();
        assert_eq!(c.to_array(), [0.0, 0.1, 0.1, 0.1]);
        assert!(clipped);

        assert!(clamp_command([f64::NAN, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn equilibrium_is_exact_fixed_point() {
        let params = PhysicalParams::default();
        let state = QuadrotorState::at_rest(Vector3::new(0.3, -0.2, 1.1));
        let out = step(&state, &hover_cmd(&params), &params);
        assert_eq!(out.state, state);
        assert_eq!(out.crash, None);
        assert_eq!(out.attitude_clamped, [false; 3]);
    }

    #[test]
    fn excess_thrust_climbs() {
        let params = PhysicalParams::default();
        let state = QuadrotorState::at_rest(Vector3::new(0.0, 0.0, 1.0));
        let mut cmd = hover_cmd(&params);
        cmd.thrust += 1.0;
        let out = step(&state, &cmd, &params);
        assert_abs_diff_eq!(out.state.position.z, 1.0 + params.dt, epsilon = 1e-15);
        assert_eq!(out.state.position.x, 0.0);
        assert_eq!(out.state.position.y, 0.0);
    }

    #[test]
    fn yaw_rate_integrates() {
        let params = PhysicalParams::default();
        let state = QuadrotorState::at_rest(Vector3::new(0.0, 0.0, 1.0));
        let mut cmd = hover_cmd(&params);
        cmd.yaw_rate = 0.5;
        let out = step(&state, &cmd, &params);
        assert_abs_diff_eq!(out.state.attitude.z, 0.01, epsilon = 1e-15);
        assert_eq!(out.state.position, state.position);
    }

    #[test]
    fn attitude_clamps_without_crash() {
        let params = PhysicalParams::default();
        let mut state = QuadrotorState::at_rest(Vector3::new(0.0, 0.0, 1.0));
        state.attitude.x = ATTITUDE_CLAMP - 1e-4;
        let mut cmd = hover_cmd(&params);
        cmd.roll_rate = RATE_LIMIT;
        let out = step(&state, &cmd, &params);
        assert_eq!(out.attitude_clamped, [true, false, false]);
        assert!(out.state.attitude_in_bounds());
        assert_eq!(out.crash, None);
    }

    #[test]
    fn crash_classification() {
        let params = PhysicalParams::default();
        let state = QuadrotorState::at_rest(Vector3::new(0.0, 0.0, 0.001));
        let cmd = ControlCommand::default();
        assert_eq!(step(&state, &cmd, &params).crash, Some(CrashCause::Ground));

        let state = QuadrotorState::at_rest(Vector3::new(0.0, 0.0, 2.999));
        let cmd = ControlCommand {
            thrust: THRUST_MAX,
            ..Default::default()
        };
        assert_eq!(step(&state, &cmd, &params).crash, Some(CrashCause::Workspace));
    }

    #[test]
    fn default_params_are_valid() {
        PhysicalParams::default().validate().unwrap();
        let bad = PhysicalParams {
            hover_thrust: 3.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
