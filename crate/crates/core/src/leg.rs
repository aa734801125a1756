//! Stance leg length policy.
//!
//! After touchdown the leg holds its length. Once the CoM comes within
//! `d_trigger` of the foot it straightens toward `l_max` at constant
//! acceleration, braking symmetrically so it arrives at rest. At a fixed
//! fraction `beta` of the step it collapses at constant (negative)
//! acceleration. Length and rate are continuous through every switch; the
//! switches that depend only on the leg's own state are located exactly
//! inside a tick rather than snapped to tick boundaries.

use libm::sqrt;

use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegLengthParams {
    /// Nominal touchdown length of the first stance [m].
    pub l0: f64,
    pub l_max: f64,
    /// Straightening acceleration, positive [m/s^2].
    pub a_str: f64,
    /// Collapse acceleration, negative [m/s^2].
    pub a_cl: f64,
    /// Fraction of the step after which the leg collapses.
    pub beta: f64,
    /// Forward CoM-to-foot distance below which straightening starts [m].
    pub d_trigger: f64,
    /// When false the plant runs at constant nominal height.
    pub enabled: bool,
}

impl Default for LegLengthParams {
    fn default() -> Self {
        LegLengthParams {
            l0: 0.95,
            l_max: 1.0,
            a_str: 2.0,
            a_cl: -3.0,
            beta: 0.8,
            d_trigger: 0.05,
            enabled: true,
        }
    }
}

impl LegLengthParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l0 > 0.0) {
            return Err(Error::domain("l0", "l0 > 0", self.l0));
        }
        if !(self.l_max >= self.l0) {
            return Err(Error::domain("l_max", "l0 <= l_max", self.l_max));
        }
        if !(self.a_str > 0.0) {
            return Err(Error::domain("a_str", "a_str > 0", self.a_str));
        }
        if !(self.a_cl < 0.0) {
            return Err(Error::domain("a_cl", "a_cl < 0", self.a_cl));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::domain("beta", "0 < beta < 1", self.beta));
        }
        if !(self.d_trigger >= 0.0) {
            return Err(Error::domain("d_trigger", "d_trigger >= 0", self.d_trigger));
        }
        Ok(())
    }

    /// Collapse stops here.
    pub fn floor(&self) -> f64 {
        0.5 * self.l0
    }
}

/// Stages in the order they occur within one stance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LegStage {
    Hold,
    Straighten,
    MaxHold,
    Collapse,
}

impl LegStage {
    pub fn as_str(self) -> &'static str {
        match self {
            LegStage::Hold => "hold",
            LegStage::Straighten => "straighten",
            LegStage::MaxHold => "max_hold",
            LegStage::Collapse => "collapse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegLengthState {
    pub stage: LegStage,
    pub l: f64,
    pub l_dot: f64,
}

impl LegLengthState {
    /// Fresh stance at length `l`.
    pub fn touchdown(l: f64) -> Self {
        LegLengthState {
            stage: LegStage::Hold,
            l,
            l_dot: 0.0,
        }
    }

    /// Current second derivative of the length.
    pub fn acceleration(&self, params: &LegLengthParams) -> f64 {
        match self.stage {
            LegStage::Hold | LegStage::MaxHold => 0.0,
            LegStage::Straighten => {
                let gap = params.l_max - self.l;
                if self.l_dot > 0.0 && gap > 0.0 && self.l_dot * self.l_dot >= 2.0 * params.a_str * gap {
                    -self.l_dot * self.l_dot / (2.0 * gap)
                } else {
                    params.a_str
                }
            }
            LegStage::Collapse => {
                let gap = params.l_max - self.l;
                if self.l <= params.floor() && self.l_dot == 0.0 {
                    0.0
                } else if self.l_dot > 0.0 && gap > 0.0 && self.l_dot * self.l_dot >= -2.0 * params.a_cl * gap {
                    -self.l_dot * self.l_dot / (2.0 * gap)
                } else {
                    params.a_cl
                }
            }
        }
    }
}

/// Advances the policy by `dt`. `progress` is the fraction of the nominal
/// step elapsed and `com_to_foot` the forward distance the CoM still has
/// to travel to be over the foot, both at the start of the interval.
pub fn advance_leg(
    state: &LegLengthState,
    params: &LegLengthParams,
    progress: f64,
    com_to_foot: f64,
    dt: f64,
) -> LegLengthState {
    let mut s = *state;
    if progress >= params.beta {
        if s.stage != LegStage::Collapse {
            s.stage = LegStage::Collapse;
        }
    } else if s.stage == LegStage::Hold && com_to_foot < params.d_trigger {
        s.stage = LegStage::Straighten;
    }

    let mut remaining = dt;
    // At most three segments: accelerate, brake, hold.
    for _ in 0..4 {
        if remaining <= 0.0 {
            break;
        }
        match s.stage {
            LegStage::Hold | LegStage::MaxHold => {
                s.l_dot = 0.0;
                remaining = 0.0;
            }
            LegStage::Straighten => remaining = straighten(&mut s, params, remaining),
            LegStage::Collapse => remaining = collapse(&mut s, params, remaining),
        }
    }
    s
}

fn straighten(s: &mut LegLengthState, p: &LegLengthParams, mut dt: f64) -> f64 {
    let a = p.a_str;
    let gap = p.l_max - s.l;
    let v = s.l_dot;
    if gap <= 0.0 {
        s.l = p.l_max;
        s.l_dot = 0.0;
        s.stage = LegStage::MaxHold;
        return dt;
    }
    if !(v > 0.0 && v * v >= 2.0 * a * gap) {
        // Time until the stopping distance equals the remaining gap.
        let switch = (-2.0 * v + core::f64::consts::SQRT_2 * sqrt(v * v + 2.0 * a * gap)) / (2.0 * a);
        let t = switch.clamp(0.0, dt);
        s.l += v * t + 0.5 * a * t * t;
        s.l_dot = v + a * t;
        dt -= t;
        if switch >= dt + t || s.l_dot <= 0.0 {
            return 0.0;
        }
    }
    // Constant deceleration that stops exactly at l_max.
    let gap = p.l_max - s.l;
    let v = s.l_dot;
    if gap <= 0.0 {
        s.l = p.l_max;
        s.l_dot = 0.0;
        s.stage = LegStage::MaxHold;
        return dt;
    }
    let brake = v * v / (2.0 * gap);
    let arrive = 2.0 * gap / v;
    if arrive <= dt {
        s.l = p.l_max;
        s.l_dot = 0.0;
        s.stage = LegStage::MaxHold;
        return dt - arrive;
    }
    s.l += v * dt - 0.5 * brake * dt * dt;
    s.l_dot = v - brake * dt;
    0.0
}

fn collapse(s: &mut LegLengthState, p: &LegLengthParams, mut dt: f64) -> f64 {
    let a = p.a_cl;
    let floor = p.floor();
    // Still extending: brake harder if needed so the leg stops at l_max.
    let gap = p.l_max - s.l;
    let v = s.l_dot;
    if v > 0.0 && gap > 0.0 && v * v >= -2.0 * a * gap {
        let arrive = 2.0 * gap / v;
        if arrive > dt {
            let brake = v * v / (2.0 * gap);
            s.l += v * dt - 0.5 * brake * dt * dt;
            s.l_dot = v - brake * dt;
            return 0.0;
        }
        s.l = p.l_max;
        s.l_dot = 0.0;
        dt -= arrive;
    }
    if s.l <= floor && s.l_dot <= 0.0 {
        s.l = floor;
        s.l_dot = 0.0;
        return 0.0;
    }
    let next = s.l + s.l_dot * dt + 0.5 * a * dt * dt;
    if next > floor {
        s.l = next;
        s.l_dot += a * dt;
        return 0.0;
    }
    // 0.5 a t^2 + v t + (l - floor) = 0, first positive root.
    let (v, h) = (s.l_dot, s.l - floor);
    let disc = (v * v - 2.0 * a * h).max(0.0);
    let t = (-v - sqrt(disc)) / a;
    let t = t.clamp(0.0, dt);
    s.l = floor;
    s.l_dot = 0.0;
    dt - t
}

/// CoM height from the stance leg geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegHeight {
    pub z: f64,
    /// False when the leg cannot reach the CoM offset (overextension).
    pub valid: bool,
}

/// `z = sqrt(l^2 - |offset|^2)`, or `z_min` flagged invalid when the leg is
/// shorter than the horizontal offset.
pub fn height_from_leg(l: f64, offset: Vec2, z_min: f64) -> LegHeight {
    let h2 = l * l - offset.norm_sq();
    if h2 > 0.0 {
        LegHeight { z: sqrt(h2), valid: true }
    } else {
        LegHeight { z: z_min, valid: false }
    }
}
