//! CoM height from the stance leg.
//!
//! Horizontal motion follows the constant-height pendulum. The leg policy
//! sets the leg length, and the CoM height is whatever the leg geometry
//! then gives: `z = sqrt(l^2 - x^2 - y^2)`. Its rates follow from
//! differentiating that constraint along the horizontal flow.

use libm::sqrt;

use crate::alip::{AlipState, GaitParams};
use crate::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Height {
    pub z: f64,
    pub z_dot: f64,
    pub z_ddot: f64,
    /// False when the leg is too short for the horizontal offset.
    pub valid: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Leg {
    pub l: f64,
    pub l_dot: f64,
    pub l_ddot: f64,
}

/// Height of the CoM above the stance foot; the nominal height when the
/// leg policy is off.
pub(crate) fn height(s: &AlipState, gait: &GaitParams, cop: Vec2, leg: Option<Leg>, z_min: f64) -> Height {
    let Some(leg) = leg else {
        return Height { z: gait.height, z_dot: 0.0, z_ddot: 0.0, valid: true };
    };
    let h2 = leg.l * leg.l - s.x * s.x - s.y * s.y;
    if !(h2 > z_min * z_min) {
        return Height { z: z_min, z_dot: 0.0, z_ddot: 0.0, valid: false };
    }
    let z = sqrt(h2);
    let v = s.velocity(gait);
    let w2 = gait.gravity / gait.height;
    let acc = Vec2::new(w2 * (s.x - cop.x), w2 * (s.y - cop.y));
    let z_dot = (leg.l * leg.l_dot - s.x * v.x - s.y * v.y) / z;
    let z_ddot = (leg.l_dot * leg.l_dot + leg.l * leg.l_ddot
        - v.norm_sq()
        - s.x * acc.x
        - s.y * acc.y
        - z_dot * z_dot)
        / z;
    Height { z, z_dot, z_ddot, valid: true }
}
