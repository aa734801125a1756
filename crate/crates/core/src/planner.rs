//! Step placement from the predicted end-of-step ALIP state.
//!
//! The feedback places the next foot so that the new CoM offset is
//! `-k_p * L / (m dz)` of the momentum at touchdown. Choosing
//!
//! ```text
//!   k_p = (cosh(wT) - lambda) / (w sinh(wT))
//! ```
//!
//! makes the step-to-step map rank one with eigenvalues `{lambda, 0}`.
//! Speed and width offsets derived from capture point dynamics shift the
//! fixed point of that map to a walking gait.

use libm::{cosh, exp, sinh};

use crate::alip::{alip_propagate, natural_frequency, AlipState, GaitParams, Transition2};
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// `+1` for the left foot (positive lateral axis), `-1` for the right.
    pub fn lateral_sign(self) -> f64 {
        match self {
            Side::Left => 1.0,
            Side::Right => -1.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }
}

/// Capture-point offsets added to the feedback step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOffsets {
    /// Width offset `mu / (1 + e^{wT})` [m].
    pub width: f64,
    /// Speed offsets `-v T / (e^{wT} - 1)` per heading axis [m].
    pub speed: Vec2,
}

/// A touchdown target produced by the planner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootstepCommand {
    /// Touchdown point relative to the CoM at the touchdown instant [m].
    pub position: Vec2,
    /// CoM offset from the current stance foot predicted at touchdown [m].
    pub predicted_com: Vec2,
    /// Stance side once this foot lands.
    pub side: Side,
    /// Time until the scheduled touchdown [s].
    pub touchdown_time: f64,
    /// Set when the reach limit shortened the step.
    pub clamped: bool,
}

impl FootstepCommand {
    /// CoM offset from the new foot right after touchdown (the quantity the
    /// step law is written in).
    pub fn com_offset(&self) -> Vec2 {
        -self.position
    }

    /// New foot position relative to the current stance foot.
    pub fn step(&self) -> Vec2 {
        self.predicted_com + self.position
    }

    pub fn rotate(&self, angle: f64) -> FootstepCommand {
        FootstepCommand {
            position: self.position.rotate(angle),
            predicted_com: self.predicted_com.rotate(angle),
            ..*self
        }
    }
}

fn check_step_time(params: &GaitParams) -> Result<()> {
    if params.step_time > 0.0 && params.step_time.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("step_time", "T > 0", params.step_time))
    }
}

/// Feedback gain placing the nonzero closed-loop eigenvalue at `lambda` [s].
///
/// The gain has units of seconds: it multiplies the velocity-like quantity
/// `L / (m dz)`. See [`closed_loop_matrix`] for the map it shapes.
pub fn pole_placement_gain(params: &GaitParams) -> Result<f64> {
    check_step_time(params)?;
    let w = natural_frequency(params)?;
    let wt = w * params.step_time;
    Ok((cosh(wt) - params.lambda) / (w * sinh(wt)))
}

/// Step-to-step map of `(x_k, L_k)` at step starts under gain `k_p`.
pub fn closed_loop_matrix(params: &GaitParams, k_p: f64) -> Result<Transition2> {
    check_step_time(params)?;
    let w = natural_frequency(params)?;
    let wt = w * params.step_time;
    let (c, s) = (cosh(wt), sinh(wt));
    let k = params.momentum_scale();
    Ok(Transition2 {
        a11: -k_p * w * s,
        a12: -(k_p / k) * c,
        a21: k * w * s,
        a22: c,
    })
}

pub fn step_offsets(params: &GaitParams) -> Result<StepOffsets> {
    check_step_time(params)?;
    let w = natural_frequency(params)?;
    let e = exp(w * params.step_time);
    let t = params.step_time;
    Ok(StepOffsets {
        width: params.step_width / (1.0 + e),
        speed: params.velocity * (-t / (e - 1.0)),
    })
}

/// Step law with cached gain and offsets, plus a kinematic reach limit on
/// the commanded foot position relative to the CoM.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPlanner {
    params: GaitParams,
    gain: f64,
    offsets: StepOffsets,
    reach: f64,
}

impl StepPlanner {
    pub fn new(params: GaitParams, reach: f64) -> Result<Self> {
        params.validate()?;
        if !(reach > 0.0) {
            return Err(Error::domain("reach", "reach > 0", reach));
        }
        Ok(StepPlanner {
            gain: pole_placement_gain(&params)?,
            offsets: step_offsets(&params)?,
            params,
            reach,
        })
    }

    pub fn unbounded(params: GaitParams) -> Result<Self> {
        StepPlanner::new(params, f64::INFINITY)
    }

    pub fn params(&self) -> &GaitParams {
        &self.params
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn offsets(&self) -> StepOffsets {
        self.offsets
    }

    /// Touchdown command from the state predicted at touchdown. `stance_side`
    /// is the current stance foot; the command lands the other one.
    pub fn desired_touchdown(&self, end: &AlipState, stance_side: Side) -> FootstepCommand {
        let k = self.params.momentum_scale();
        let next = stance_side.opposite();
        // Velocity-like rates, u = x_dot at nominal height.
        let ux = end.ly / k;
        let uy = -end.lx / k;
        // Landing on the left puts the CoM on the foot's right, so the width
        // term enters the CoM offset with the sign opposite to the side.
        let com_offset = Vec2::new(
            -self.gain * ux - self.offsets.speed.x,
            -self.gain * uy - self.offsets.speed.y - next.lateral_sign() * self.offsets.width,
        );
        let mut position = -com_offset;
        let norm = position.norm();
        let clamped = norm > self.reach;
        if clamped {
            position = position * (self.reach / norm);
        }
        FootstepCommand {
            position,
            predicted_com: end.offset(),
            side: next,
            touchdown_time: 0.0,
            clamped,
        }
    }

    /// Re-plan during swing: predict to touchdown with the nominal model and
    /// apply the step law.
    pub fn update_during_swing(
        &self,
        current: &AlipState,
        time_remaining: f64,
        stance_side: Side,
    ) -> Result<FootstepCommand> {
        if !(0.0..=self.params.step_time).contains(&time_remaining) {
            return Err(Error::domain("time_remaining", "0 <= t <= T", time_remaining));
        }
        let end = alip_propagate(current, &self.params, time_remaining)?;
        let mut cmd = self.desired_touchdown(&end, stance_side);
        cmd.touchdown_time = time_remaining;
        Ok(cmd)
    }

    /// The step law written against the state at the start of the step,
    /// i.e. the full-step prediction composed with [`Self::desired_touchdown`].
    pub fn touchdown_from_step_start(&self, start: &AlipState, stance_side: Side) -> Result<FootstepCommand> {
        self.update_during_swing(start, self.params.step_time, stance_side)
    }

    /// One step of the ideal point-foot plant: flow for `T`, land on the
    /// commanded foot, carry momentum across the exchange.
    pub fn ideal_step(&self, start: &AlipState, stance_side: Side) -> Result<AlipState> {
        let end = alip_propagate(start, &self.params, self.params.step_time)?;
        let cmd = self.desired_touchdown(&end, stance_side);
        let c = cmd.com_offset();
        Ok(AlipState::new(c.x, c.y, end.lx, end.ly))
    }

    /// Start-of-step state of the ideal plant's periodic gait, for a step
    /// whose stance foot is `stance_side`. Forward motion is period one,
    /// lateral motion period two.
    pub fn ideal_periodic_start(&self, stance_side: Side) -> Result<AlipState> {
        let k = self.params.momentum_scale();
        // Closed-loop map in (position, u) coordinates.
        let m = closed_loop_matrix(&self.params, self.gain)?;
        let mu = Transition2 {
            a11: m.a11,
            a12: m.a12 * k,
            a21: m.a21 / k,
            a22: m.a22,
        };
        let fwd_offset = -self.offsets.speed.x;
        let (x, ux) = solve_fixed_point(&mu, (fwd_offset, 0.0));

        // Two steps: stance_side lands the opposite foot, then back.
        let lateral = |landing: Side| -self.offsets.speed.y - landing.lateral_sign() * self.offsets.width;
        let o1 = (lateral(stance_side.opposite()), 0.0);
        let o2 = (lateral(stance_side), 0.0);
        let mm = mu.mul(&mu);
        let mo1 = mu.apply(o1);
        let (y, uy) = solve_fixed_point(&mm, (mo1.0 + o2.0, mo1.1 + o2.1));
        Ok(AlipState::new(x, y, -uy * k, ux * k))
    }
}

/// Solves `s = M s + o`.
fn solve_fixed_point(m: &Transition2, o: (f64, f64)) -> (f64, f64) {
    let a = Transition2 {
        a11: 1.0 - m.a11,
        a12: -m.a12,
        a21: -m.a21,
        a22: 1.0 - m.a22,
    };
    let det = a.det();
    (
        (a.a22 * o.0 - a.a12 * o.1) / det,
        (-a.a21 * o.0 + a.a11 * o.1) / det,
    )
}

/// Unbounded step law from the predicted touchdown state.
pub fn desired_touchdown(end: &AlipState, params: &GaitParams, stance_side: Side) -> Result<FootstepCommand> {
    Ok(StepPlanner::unbounded(*params)?.desired_touchdown(end, stance_side))
}

/// Unbounded re-plan during swing.
pub fn update_touchdown_during_swing(
    current: &AlipState,
    params: &GaitParams,
    time_remaining: f64,
    stance_side: Side,
) -> Result<FootstepCommand> {
    StepPlanner::unbounded(*params)?.update_during_swing(current, time_remaining, stance_side)
}
