//! Hybrid closed-loop walking simulation.
//!
//! Within a step the stance dynamics are integrated with fixed-step RK4
//! while the planner re-targets the swing foot at the control rate. At
//! touchdown the feet swap instantly and the state is re-expressed about
//! the new ankle.

mod plant;
mod world;

use alloc::string::String;
use alloc::vec::Vec;

use libm::round;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use plant::Height;
pub use world::{apply_push, apply_terrain_drop, step_once, Fall, StepOutput, SwingFoot, WorldState};

use crate::alip::{AlipState, GaitParams};
use crate::leg::LegLengthParams;
use crate::metrics::{StrideRecord, WorkOptions};
use crate::planner::Side;
use crate::rolling::RollingContactParams;
use crate::{Error, Result, Vec2, Vec3};

/// How contact-point momentum is carried across a foot exchange.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MomentumTransfer {
    /// Keep `L` unchanged. At constant height this is also the exact
    /// transfer, since the CoM velocity is horizontal.
    #[default]
    Continuity,
    /// Shift `L` to the new foot with the full CoM velocity, including the
    /// vertical rate the leg policy adds.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum InitialCondition {
    /// Periodic start of the constant-height model at the initial command.
    #[default]
    Periodic,
    /// Explicit state about the first stance foot, world axes.
    State(AlipState),
}

/// Commanded motion from `start` until the next segment begins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocitySegment {
    pub start: f64,
    /// Heading-frame velocity [m/s].
    pub velocity: Vec2,
    /// Turn rate applied as a heading change of `yaw_rate * T` per step.
    pub yaw_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Push {
    pub time: f64,
    /// Momentum impulse `(dL_x, dL_y)` in world axes [kg m^2/s].
    pub impulse: Vec2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerrainDrop {
    /// The touchdown that ends this step lands on the lowered ground.
    pub step: usize,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScenarioSpec {
    pub name: String,
    pub velocity_profile: Vec<VelocitySegment>,
    pub pushes: Vec<Push>,
    pub terrain_drops: Vec<TerrainDrop>,
    /// Push times are shifted by a seeded uniform draw in `[-j, j]` [s].
    pub push_time_jitter: f64,
}

impl ScenarioSpec {
    /// Commanded velocity and yaw rate at absolute time `t`.
    pub fn command_at(&self, t: f64) -> (Vec2, f64) {
        self.velocity_profile
            .iter()
            .rev()
            .find(|s| s.start <= t)
            .map_or((Vec2::ZERO, 0.0), |s| (s.velocity, s.yaw_rate))
    }

    pub fn drop_at(&self, step: usize) -> f64 {
        self.terrain_drops.iter().filter(|d| d.step == step).map(|d| d.height).sum()
    }

    /// Applies the seeded jitter and sorts pushes by time.
    pub fn realize(&self, seed: u64) -> ScenarioSpec {
        let mut out = self.clone();
        if self.push_time_jitter > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for p in &mut out.pushes {
                let u = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                p.time = (p.time + (2.0 * u - 1.0) * self.push_time_jitter).max(0.0);
            }
        }
        out.push_time_jitter = 0.0;
        out.pushes.sort_by(|a, b| a.time.total_cmp(&b.time));
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub gait: GaitParams,
    pub leg: LegLengthParams,
    pub rolling: RollingContactParams,
    pub integrator_dt: f64,
    pub control_dt: f64,
    pub n_steps: usize,
    pub scenario: ScenarioSpec,
    pub seed: u64,
    /// Fall when a CoM offset component exceeds this fraction of `l_max`;
    /// also bounds the commanded step.
    pub reach_factor: f64,
    pub swing_clearance: f64,
    /// Swing foot speed when reaching for ground below the expected level.
    pub swing_descent_speed: f64,
    /// Touchdown later than `T` plus this fails the step [s].
    pub max_step_extension: f64,
    /// Overextended leg for longer than this is a fall [s].
    pub height_invalid_limit: f64,
    pub z_min: f64,
    pub momentum_transfer: MomentumTransfer,
    pub initial: InitialCondition,
    pub first_stance: Side,
    pub work: WorkOptions,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            gait: GaitParams::default(),
            leg: LegLengthParams::default(),
            rolling: RollingContactParams::default(),
            integrator_dt: 1e-4,
            control_dt: 2e-3,
            n_steps: 20,
            scenario: ScenarioSpec::default(),
            seed: 0,
            reach_factor: 0.9,
            swing_clearance: 0.05,
            swing_descent_speed: 0.5,
            max_step_extension: 0.2,
            height_invalid_limit: 0.02,
            z_min: 0.1,
            momentum_transfer: MomentumTransfer::Continuity,
            initial: InitialCondition::Periodic,
            first_stance: Side::Left,
            work: WorkOptions::default(),
        }
    }
}

fn ratio(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    let n = round(r);
    ((r - n).abs() < 1e-6 && n >= 1.0).then_some(n as usize)
}

impl SimConfig {
    /// Integration configuration of the constant-height, point-foot plant.
    pub fn ideal() -> Self {
        SimConfig {
            leg: LegLengthParams { enabled: false, ..LegLengthParams::default() },
            rolling: RollingContactParams::disabled(),
            ..SimConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.gait.validate()?;
        self.leg.validate()?;
        self.rolling.validate()?;
        let t = self.gait.step_time;
        let checks = [
            (self.integrator_dt > 0.0, "integrator_dt", "integrator_dt > 0", self.integrator_dt),
            (self.integrator_dt <= self.control_dt, "control_dt", "integrator_dt <= control_dt", self.control_dt),
            (self.control_dt <= t, "control_dt", "control_dt <= T", self.control_dt),
            (
                ratio(self.control_dt, self.integrator_dt).is_some(),
                "control_dt",
                "control_dt is a whole multiple of integrator_dt",
                self.control_dt,
            ),
            (ratio(t, self.control_dt).is_some(), "step_time", "T is a whole multiple of control_dt", t),
            (self.n_steps >= 1, "n_steps", "n_steps >= 1", self.n_steps as f64),
            (self.reach_factor > 0.0, "reach_factor", "reach_factor > 0", self.reach_factor),
            (self.swing_clearance >= 0.0, "swing_clearance", "swing_clearance >= 0", self.swing_clearance),
            (
                self.swing_descent_speed > 0.0,
                "swing_descent_speed",
                "swing_descent_speed > 0",
                self.swing_descent_speed,
            ),
            (
                self.max_step_extension >= 0.0,
                "max_step_extension",
                "max_step_extension >= 0",
                self.max_step_extension,
            ),
            (
                self.height_invalid_limit >= 0.0,
                "height_invalid_limit",
                "height_invalid_limit >= 0",
                self.height_invalid_limit,
            ),
            (self.z_min > 0.0, "z_min", "z_min > 0", self.z_min),
            (
                self.scenario.push_time_jitter >= 0.0,
                "push_time_jitter",
                "push_time_jitter >= 0",
                self.scenario.push_time_jitter,
            ),
        ];
        for (ok, what, constraint, value) in checks {
            if !ok {
                return Err(Error::domain(what, constraint, value));
            }
        }
        let horizon = self.n_steps as f64 * t;
        for p in &self.scenario.pushes {
            if !(p.time >= 0.0 && p.time <= horizon) {
                return Err(Error::domain("pushes.time", "0 <= t <= n_steps * T", p.time));
            }
            if !p.impulse.is_finite() {
                return Err(Error::domain("pushes.impulse", "finite", p.impulse.x + p.impulse.y));
            }
        }
        for d in &self.scenario.terrain_drops {
            if d.step >= self.n_steps {
                return Err(Error::domain("terrain_drops.step", "step < n_steps", d.step as f64));
            }
            if !(d.height >= 0.0) {
                return Err(Error::domain("terrain_drops.height", "drop >= 0", d.height));
            }
        }
        for s in &self.scenario.velocity_profile {
            if !(s.start >= 0.0 && s.start <= horizon) {
                return Err(Error::domain("velocity_profile.start", "0 <= t <= n_steps * T", s.start));
            }
            if !(s.velocity.is_finite() && s.yaw_rate.is_finite()) {
                return Err(Error::domain("velocity_profile", "finite", s.velocity.x));
            }
        }
        Ok(())
    }

    pub(crate) fn control_ticks(&self) -> usize {
        ratio(self.control_dt, self.integrator_dt).unwrap_or(1)
    }

    pub(crate) fn steps_per_control(&self) -> usize {
        ratio(self.gait.step_time, self.control_dt).unwrap_or(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FallReason {
    /// A CoM offset component left the reach bound.
    ReachExceeded { offset: Vec2 },
    /// The leg could not reach the CoM for too long.
    HeightInvalid { duration: f64 },
    /// The swing foot could not land within the allowed extension.
    TouchdownTimeout { extension: f64 },
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FallEvent {
    pub step_index: usize,
    pub time: f64,
    pub reason: FallReason,
    pub com: Vec3,
    pub stance_foot: Vec3,
}

impl core::fmt::Display for FallEvent {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "fall at step {} (t = {:.4} s): ", self.step_index, self.time)?;
        match self.reason {
            FallReason::ReachExceeded { offset } => {
                write!(f, "CoM offset ({:.3}, {:.3}) m beyond reach", offset.x, offset.y)
            }
            FallReason::HeightInvalid { duration } => {
                write!(f, "leg overextended for {duration:.3} s")
            }
            FallReason::TouchdownTimeout { extension } => {
                write!(f, "no touchdown {extension:.3} s after the nominal step time")
            }
            FallReason::NonFinite => write!(f, "non-finite state"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Event {
    Push { step_index: usize, time: f64, impulse: Vec2 },
    TerrainDrop { step_index: usize, height: f64 },
    Touchdown { step_index: usize, time: f64, foot: Vec3, side: Side, clamped: bool },
    Fall(FallEvent),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub records: Vec<StrideRecord>,
    pub events: Vec<Event>,
    pub fall: Option<FallEvent>,
    /// Start-of-step state of every step taken, plus the state after the
    /// last exchange.
    pub starts: Vec<WorldState>,
}

impl Run {
    pub fn completed(&self) -> bool {
        self.fall.is_none()
    }
}

/// Runs `config.n_steps` steps or until a fall. Deterministic: the only
/// randomness is the seeded push-time jitter.
pub fn run_scenario(config: &SimConfig) -> Result<Run> {
    config.validate()?;
    let mut cfg = config.clone();
    cfg.scenario = config.scenario.realize(config.seed);
    let mut world = WorldState::initial(&cfg)?;
    let mut run = Run {
        records: Vec::with_capacity(cfg.n_steps),
        events: Vec::new(),
        fall: None,
        starts: Vec::with_capacity(cfg.n_steps + 1),
    };
    for step in 0..cfg.n_steps {
        let drop = cfg.scenario.drop_at(step);
        if drop > 0.0 {
            world = apply_terrain_drop(&world, drop)?;
            run.events.push(Event::TerrainDrop { step_index: step, height: drop });
        }
        run.starts.push(world.clone());
        match step_once(&world, &cfg)? {
            Ok(out) => {
                run.events.extend(out.events.iter().copied());
                run.records.push(out.record);
                world = out.world;
            }
            Err(fall) => {
                run.events.extend(fall.events.iter().copied());
                run.events.push(Event::Fall(fall.event));
                run.records.push(fall.record);
                run.fall = Some(fall.event);
                return Ok(run);
            }
        }
    }
    run.starts.push(world);
    Ok(run)
}

#[cfg(test)]
mod tests;
