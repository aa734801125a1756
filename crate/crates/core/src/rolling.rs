//! Heel-to-toe center of pressure schedule.
//!
//! After an initial heel hold the CoP follows a fixed fraction `alpha` of the
//! CoM offset from the ankle, clamped to the foot. Unclamped, this turns the
//! pendulum of height `dz` into one of height `dz / (1 - alpha)`.

use libm::sqrt;

use crate::alip::{natural_frequency, GaitParams};
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RollingContactParams {
    /// CoP offset as a fraction of the CoM offset.
    pub alpha: f64,
    /// Ankle to heel edge [m].
    pub heel_extent: f64,
    /// Ankle to toe edge [m].
    pub toe_extent: f64,
    /// Lateral CoP bound on either side of the ankle [m].
    pub half_width: f64,
    /// Fraction of the step the CoP stays on the heel.
    pub heel_hold_fraction: f64,
    pub enabled: bool,
}

impl Default for RollingContactParams {
    fn default() -> Self {
        RollingContactParams {
            alpha: 0.6,
            heel_extent: 0.08,
            toe_extent: 0.14,
            half_width: 0.04,
            heel_hold_fraction: 0.1,
            enabled: false,
        }
    }
}

impl RollingContactParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.alpha) {
            return Err(Error::domain("alpha", "0 <= alpha < 1", self.alpha));
        }
        if !(self.heel_extent > 0.0) {
            return Err(Error::domain("heel_extent", "heel_extent > 0", self.heel_extent));
        }
        if !(self.toe_extent > 0.0) {
            return Err(Error::domain("toe_extent", "toe_extent > 0", self.toe_extent));
        }
        if !(self.half_width >= 0.0) {
            return Err(Error::domain("half_width", "half_width >= 0", self.half_width));
        }
        if !(0.0..=1.0).contains(&self.heel_hold_fraction) {
            return Err(Error::domain(
                "heel_hold_fraction",
                "0 <= heel_hold_fraction <= 1",
                self.heel_hold_fraction,
            ));
        }
        Ok(())
    }

    /// Default foot with rolling switched on.
    pub fn enabled() -> Self {
        RollingContactParams {
            enabled: true,
            ..Self::default()
        }
    }

    pub fn disabled() -> Self {
        RollingContactParams {
            enabled: false,
            ..Self::default()
        }
    }
}

/// Desired CoP relative to the ankle, in the foot (heading) frame.
pub fn desired_cop(com_offset: Vec2, params: &RollingContactParams, stance_progress: f64) -> Vec2 {
    if !params.enabled {
        return Vec2::ZERO;
    }
    if stance_progress < params.heel_hold_fraction {
        return Vec2::new(-params.heel_extent, 0.0);
    }
    Vec2::new(
        (params.alpha * com_offset.x).clamp(-params.heel_extent, params.toe_extent),
        (params.alpha * com_offset.y).clamp(-params.half_width, params.half_width),
    )
}

/// `omega * sqrt(1 - alpha)` with rolling enabled, `omega` otherwise.
pub fn effective_frequency(params: &GaitParams, rc: &RollingContactParams) -> Result<f64> {
    if !(rc.alpha < 1.0) {
        return Err(Error::domain("alpha", "alpha < 1", rc.alpha));
    }
    let w = natural_frequency(params)?;
    Ok(if rc.enabled { w * sqrt(1.0 - rc.alpha) } else { w })
}
