//! Discrete-time longitudinal platoon kinematics.
//!
//! Each vehicle is a first-order driveline behind a double integrator,
//! advanced with forward Euler at the control interval `T`. Geometry follows
//! the constant time-headway policy: the desired bumper-to-bumper gap grows
//! linearly with the follower's own speed.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One vehicle's longitudinal state at a control interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleKinematics {
    /// Position of the front bumper along the lane, m.
    pub p: f64,
    /// Velocity, m/s.
    pub v: f64,
    /// Realized acceleration, m/s².
    pub acc: f64,
}

impl VehicleKinematics {
    pub fn new(p: f64, v: f64, acc: f64) -> Self {
        Self { p, v, acc }
    }

    pub fn is_finite(&self) -> bool {
        self.p.is_finite() && self.v.is_finite() && self.acc.is_finite()
    }
}

/// Technical constraints and operational parameters of the platoon.
///
/// Homogeneous across vehicles; per-vehicle overrides would slot in here if a
/// heterogeneous platoon is ever needed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlatoonParams {
    /// Vehicle count (leader + followers).
    pub n: usize,
    /// Control interval length, s.
    pub t: f64,
    /// Driveline time constant, s.
    pub tau_drive: f64,
    /// Time gap of the headway policy, s.
    pub h: f64,
    /// Standstill distance, m.
    pub r: f64,
    /// Vehicle body length, m.
    pub l: f64,
    /// Acceleration limits, m/s².
    pub acc_min: f64,
    pub acc_max: f64,
    /// Control-input limits, m/s².
    pub a_min: f64,
    pub a_max: f64,
}

impl Default for PlatoonParams {
    fn default() -> Self {
        Self {
            n: 5,
            t: 0.05,
            tau_drive: 0.1,
            h: 1.0,
            r: 2.0,
            l: 4.5,
            acc_min: -4.3,
            acc_max: 2.9,
            a_min: -4.3,
            a_max: 2.9,
        }
    }
}

impl PlatoonParams {
    /// Validates the structural invariants.
    ///
    /// `t < tau_drive` keeps the acceleration-update coefficient `1 - t/tau`
    /// inside (0, 1), which the first-order driveline response requires.
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid(format!("need at least 2 vehicles, got {}", self.n)));
        }
        if !(self.t > 0.0 && self.t.is_finite()) {
            return Err(Error::invalid(format!("control interval must be positive, got {}", self.t)));
        }
        if !(self.tau_drive > self.t) {
            return Err(Error::invalid(format!(
                "driveline time constant {} must exceed control interval {}",
                self.tau_drive, self.t
            )));
        }
        if !(self.acc_min < 0.0 && 0.0 < self.acc_max) {
            return Err(Error::invalid("acceleration limits must straddle zero"));
        }
        if !(self.a_min < self.a_max) {
            return Err(Error::invalid("control-input limits must be ordered"));
        }
        if self.h < 0.0 || self.r < 0.0 || self.l <= 0.0 {
            return Err(Error::invalid("headway geometry must be non-negative"));
        }
        Ok(())
    }

    /// Clips a realized acceleration to the physical limits.
    pub fn clip_acc(&self, acc: f64) -> f64 {
        acc.clamp(self.acc_min, self.acc_max)
    }

    /// Clips a control input to the action-space limits.
    pub fn clip_action(&self, a: f64) -> f64 {
        a.clamp(self.a_min, self.a_max)
    }
}

/// A follower's view of its predecessor and itself, all sampled at the same
/// control interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DrivingObservation {
    /// Gap-keeping error, m.
    pub e_p: f64,
    /// Velocity error, m/s.
    pub e_v: f64,
    /// Own acceleration, m/s².
    pub acc_self: f64,
    /// Predecessor acceleration, m/s².
    pub acc_pred: f64,
}

impl DrivingObservation {
    pub fn is_finite(&self) -> bool {
        self.e_p.is_finite()
            && self.e_v.is_finite()
            && self.acc_self.is_finite()
            && self.acc_pred.is_finite()
    }
}

/// Advances one vehicle by one control interval under control input `a_cl`.
///
/// The update is p' = p + T·v, v' = v + T·acc, then the first-order driveline
/// acc' = (1 - T/τ)·acc + (T/τ)·a_cl clipped to the acceleration limits.
/// Clipping realized acceleration is physics saturation; the caller is
/// responsible for clipping `a_cl` into the action space first.
pub fn step_vehicle(
    kin: &VehicleKinematics,
    a_cl: f64,
    params: &PlatoonParams,
) -> Result<VehicleKinematics> {
    if !kin.is_finite() || !a_cl.is_finite() {
        return Err(Error::invalid("non-finite kinematics or control input"));
    }
    if a_cl < params.a_min || a_cl > params.a_max {
        return Err(Error::invalid(format!(
            "control input {a_cl} outside [{}, {}]",
            params.a_min, params.a_max
        )));
    }
    let ratio = params.t / params.tau_drive;
    Ok(VehicleKinematics {
        p: kin.p + params.t * kin.v,
        v: kin.v + params.t * kin.acc,
        acc: params.clip_acc((1.0 - ratio) * kin.acc + ratio * a_cl),
    })
}

/// Bumper-to-bumper distance. Negative values indicate collision and are
/// surfaced in metrics, not rejected here.
pub fn headway(p_pred: f64, p_self: f64, l_pred: f64) -> f64 {
    p_pred - p_self - l_pred
}

/// Desired headway under the constant time-headway policy: r + h·v.
pub fn desired_headway(v: f64, params: &PlatoonParams) -> f64 {
    params.r + params.h * v
}

/// Gap-keeping and velocity errors of a follower against its predecessor,
/// both kinematics sampled at the same interval.
pub fn tracking_errors(
    kin_pred: &VehicleKinematics,
    kin_self: &VehicleKinematics,
    params: &PlatoonParams,
) -> (f64, f64) {
    let e_p = headway(kin_pred.p, kin_self.p, params.l) - desired_headway(kin_self.v, params);
    let e_v = kin_pred.v - kin_self.v;
    (e_p, e_v)
}

/// Rate of change of acceleration implied by the driveline: (a_cl - acc)/τ.
pub fn jerk(acc: f64, a_cl: f64, tau_drive: f64) -> Result<f64> {
    if !(tau_drive > 0.0) {
        return Err(Error::invalid(format!("driveline constant must be positive, got {tau_drive}")));
    }
    Ok((a_cl - acc) / tau_drive)
}

/// Leader kinematics at interval `k + 1`, following a velocity profile.
///
/// `kin` is the leader state at interval `k`. Position is integrated with the
/// same Euler rule as followers; velocity comes straight from the profile and
/// the advertised acceleration is the clipped forward difference (zero at the
/// last sample, where no difference exists).
pub fn leader_step(
    kin: &VehicleKinematics,
    velocities: &[f64],
    k: usize,
    params: &PlatoonParams,
) -> Result<VehicleKinematics> {
    if k + 1 >= velocities.len() {
        return Err(Error::invalid(format!(
            "profile index {} out of range for profile of length {}",
            k + 1,
            velocities.len()
        )));
    }
    Ok(VehicleKinematics {
        p: kin.p + params.t * kin.v,
        v: velocities[k + 1],
        acc: profile_acc(velocities, k + 1, params),
    })
}

/// Leader kinematics at interval 0 for a given initial position.
pub fn leader_init(velocities: &[f64], p0: f64, params: &PlatoonParams) -> Result<VehicleKinematics> {
    if velocities.is_empty() {
        return Err(Error::invalid("empty leader profile"));
    }
    Ok(VehicleKinematics {
        p: p0,
        v: velocities[0],
        acc: profile_acc(velocities, 0, params),
    })
}

fn profile_acc(velocities: &[f64], k: usize, params: &PlatoonParams) -> f64 {
    if k + 1 < velocities.len() {
        params.clip_acc((velocities[k + 1] - velocities[k]) / params.t)
    } else {
        0.0
    }
}
