//! Experiments built from whole runs: steady-state gait statistics,
//! recovery from pushes and drops, and the rolling-contact comparison.

use alloc::vec;
use alloc::vec::Vec;

use libm::{cos, sin, sqrt};

use crate::alip::GaitParams;
use crate::metrics::{aggregate, StrideMetrics, Summary};
use crate::sim::{run_scenario, FallEvent, Push, Run, SimConfig, TerrainDrop, VelocitySegment, WorldState};
use crate::{Result, Vec2};

/// `cfg` with its velocity profile replaced by a constant forward speed.
pub fn at_speed(cfg: &SimConfig, speed: f64) -> SimConfig {
    let mut c = cfg.clone();
    c.scenario.velocity_profile = vec![VelocitySegment {
        start: 0.0,
        velocity: Vec2::new(speed, 0.0),
        yaw_rate: 0.0,
    }];
    c
}

/// A run plus statistics over its second half.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub run: Run,
    /// `None` when the run fell.
    pub summary: Option<Summary>,
}

impl SteadyState {
    pub fn fall(&self) -> Option<FallEvent> {
        self.run.fall
    }
}

pub fn steady_state(cfg: &SimConfig) -> Result<SteadyState> {
    let run = run_scenario(cfg)?;
    let summary = if run.completed() {
        let skip = run.records.len() / 2;
        Some(aggregate(&run.records[skip..], &cfg.gait, cfg.work)?)
    } else {
        None
    };
    Ok(SteadyState { run, summary })
}

/// Distance between two step-start states, with momenta converted to
/// velocities so both halves are in metres and metres per second.
pub fn state_distance(a: &WorldState, b: &WorldState, gait: &GaitParams) -> f64 {
    let k = gait.momentum_scale();
    let d = [
        a.alip.x - b.alip.x,
        a.alip.y - b.alip.y,
        (a.alip.lx - b.alip.lx) / k,
        (a.alip.ly - b.alip.ly) / k,
    ];
    sqrt(d.iter().map(|v| v * v).sum())
}

/// Size of a step-start state in the units of [`state_distance`].
pub fn state_norm(a: &WorldState, gait: &GaitParams) -> f64 {
    let k = gait.momentum_scale();
    let s = a.alip;
    sqrt(s.x * s.x + s.y * s.y + (s.lx / k) * (s.lx / k) + (s.ly / k) * (s.ly / k))
}

/// Unit impulse direction for `index` of `count` evenly spaced directions.
/// Index 0 is `+L_y`, which pushes the CoM forward.
pub fn push_direction(index: usize, count: usize) -> Vec2 {
    let a = core::f64::consts::TAU * index as f64 / count as f64;
    Vec2::new(-sin(a), cos(a))
}

/// Where and how pushes are applied in the push experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushProtocol {
    /// The push lands halfway through this step.
    pub step: usize,
    /// Steps simulated after the pushed one.
    pub horizon: usize,
    /// Bisection iterations.
    pub iterations: usize,
    /// First bracket guess [kg m^2/s]; doubled until a fall.
    pub initial_bound: f64,
}

impl Default for PushProtocol {
    fn default() -> Self {
        PushProtocol {
            step: 5,
            horizon: 10,
            iterations: 40,
            initial_bound: 50.0,
        }
    }
}

fn with_push(base: &SimConfig, protocol: &PushProtocol, impulse: Vec2) -> SimConfig {
    let mut c = base.clone();
    c.n_steps = protocol.step + 1 + protocol.horizon;
    c.scenario.pushes.push(Push {
        time: (protocol.step as f64 + 0.5) * c.gait.step_time,
        impulse,
    });
    c
}

/// Bisection bracket on the largest impulse that does not cause a fall.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpulseBound {
    /// Largest magnitude seen to recover [kg m^2/s].
    pub recoverable: f64,
    /// Smallest magnitude seen to fall; infinite if none did.
    pub falls: f64,
}

pub fn recoverable_impulse(base: &SimConfig, direction: Vec2, protocol: &PushProtocol) -> Result<ImpulseBound> {
    let survives = |m: f64| -> Result<bool> { Ok(run_scenario(&with_push(base, protocol, direction * m))?.completed()) };
    let mut lo = 0.0;
    let mut hi = protocol.initial_bound;
    while survives(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Ok(ImpulseBound { recoverable: lo, falls: f64::INFINITY });
        }
    }
    for _ in 0..protocol.iterations {
        let mid = 0.5 * (lo + hi);
        if survives(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ImpulseBound { recoverable: lo, falls: hi })
}

/// Deviation from the unpushed run at each step start after the push.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub fall: Option<FallEvent>,
    /// `deviation[k]` is measured `k` steps after the first touchdown that
    /// follows the push.
    pub deviation: Vec<f64>,
    /// Size of the unpushed step-start state at the same steps.
    pub orbit_norm: Vec<f64>,
}

impl Recovery {
    /// Deviation after `steps` steps as a fraction of the deviation the
    /// push left at the first touchdown.
    pub fn relative_to_push(&self, steps: usize) -> f64 {
        self.deviation[steps] / self.deviation[0]
    }

    /// Deviation after `steps` steps as a fraction of the orbit's size.
    pub fn relative_to_orbit(&self, steps: usize) -> f64 {
        self.deviation[steps] / self.orbit_norm[steps]
    }
}

fn compare_starts(base: &Run, other: &Run, from: usize, gait: &GaitParams) -> (Vec<f64>, Vec<f64>) {
    let n = base.starts.len().min(other.starts.len());
    (from..n)
        .map(|k| {
            (
                state_distance(&other.starts[k], &base.starts[k], gait),
                state_norm(&base.starts[k], gait),
            )
        })
        .unzip()
}

pub fn push_recovery(base: &SimConfig, impulse: Vec2, protocol: &PushProtocol) -> Result<Recovery> {
    let pushed = with_push(base, protocol, impulse);
    let mut plain = base.clone();
    plain.n_steps = pushed.n_steps;
    let a = run_scenario(&plain)?;
    let b = run_scenario(&pushed)?;
    let (deviation, orbit_norm) = compare_starts(&a, &b, protocol.step + 1, &base.gait);
    Ok(Recovery {
        fall: b.fall,
        deviation,
        orbit_norm,
    })
}

/// Deviation from the undisturbed run after a blind drop under the
/// touchdown that ends `step`. Index 0 is the start of the step the drop
/// lands on.
pub fn drop_recovery(base: &SimConfig, step: usize, height: f64) -> Result<Recovery> {
    let mut dropped = base.clone();
    dropped.scenario.terrain_drops.push(TerrainDrop { step, height });
    let a = run_scenario(base)?;
    let b = run_scenario(&dropped)?;
    let (deviation, orbit_norm) = compare_starts(&a, &b, step + 1, &base.gait);
    Ok(Recovery {
        fall: b.fall,
        deviation,
        orbit_norm,
    })
}

/// Median-stride work with rolling contact on and off.
#[derive(Debug, Clone, PartialEq)]
pub struct AbReport {
    pub with_rolling: StrideMetrics,
    pub without_rolling: StrideMetrics,
    pub speed_with: f64,
    pub speed_without: f64,
}

impl AbReport {
    /// Percent drop in positive work when rolling is enabled.
    pub fn positive_reduction(&self) -> f64 {
        100.0 * (self.without_rolling.positive_work - self.with_rolling.positive_work) / self.without_rolling.positive_work
    }

    /// Percent drop in the magnitude of negative work.
    pub fn negative_reduction(&self) -> f64 {
        let off = self.without_rolling.negative_work.abs();
        100.0 * (off - self.with_rolling.negative_work.abs()) / off
    }
}

/// Result of one arm of the comparison: statistics or the fall that
/// ended it.
pub type Arm = core::result::Result<Summary, FallEvent>;

pub fn ab_rolling_arms(cfg: &SimConfig) -> Result<(Arm, Arm)> {
    let arm = |enabled: bool| -> Result<Arm> {
        let mut c = cfg.clone();
        c.rolling.enabled = enabled;
        let s = steady_state(&c)?;
        Ok(match (s.summary, s.run.fall) {
            (Some(sum), _) => Ok(sum),
            (None, Some(f)) => Err(f),
            (None, None) => unreachable!("a run without statistics has fallen"),
        })
    };
    Ok((arm(true)?, arm(false)?))
}

/// Both arms must complete; `Err(fall)` reports the first that did not.
pub fn ab_rolling(cfg: &SimConfig) -> Result<core::result::Result<AbReport, FallEvent>> {
    let (on, off) = ab_rolling_arms(cfg)?;
    Ok(match (on, off) {
        (Ok(a), Ok(b)) => Ok(AbReport {
            with_rolling: *a.median(),
            without_rolling: *b.median(),
            speed_with: a.mean_forward_velocity,
            speed_without: b.mean_forward_velocity,
        }),
        (Err(f), _) | (_, Err(f)) => Err(f),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_are_unit_and_spread() {
        let d0 = push_direction(0, 8);
        assert!((d0.x).abs() < 1e-15 && (d0.y - 1.0).abs() < 1e-15);
        for i in 0..8 {
            assert!((push_direction(i, 8).norm() - 1.0).abs() < 1e-15);
        }
        let d2 = push_direction(2, 8);
        assert!((d2.x + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_push_leaves_no_deviation() {
        let cfg = SimConfig::default();
        let r = push_recovery(&cfg, Vec2::ZERO, &PushProtocol { horizon: 3, ..PushProtocol::default() }).unwrap();
        assert!(r.deviation.iter().all(|&d| d == 0.0));
        assert_eq!(r.deviation.len(), 4);
    }

    #[test]
    fn deviation_contracts_by_lambda() {
        let cfg = SimConfig::default();
        let r = push_recovery(&cfg, Vec2::new(0.0, 20.0), &PushProtocol::default()).unwrap();
        assert!(r.fall.is_none());
        for w in r.deviation[1..].windows(2) {
            assert!((w[1] / w[0] - cfg.gait.lambda).abs() < 0.02, "{:?}", r.deviation);
        }
    }

    #[test]
    fn bisection_brackets_a_fall() {
        let cfg = SimConfig::default();
        let p = PushProtocol { iterations: 12, ..PushProtocol::default() };
        let dir = push_direction(0, 8);
        let b = recoverable_impulse(&cfg, dir, &p).unwrap();
        assert!(b.recoverable > 0.0 && b.falls > b.recoverable);
        assert!(b.falls - b.recoverable < 1e-2 * b.falls);
        assert!(push_recovery(&cfg, dir * b.recoverable, &p).unwrap().fall.is_none());
        assert!(push_recovery(&cfg, dir * b.falls, &p).unwrap().fall.is_some());
    }

    #[test]
    fn identical_arms_with_zero_alpha_free_foot() {
        // alpha = 0 with no heel hold is a point foot.
        let mut cfg = at_speed(&SimConfig::default(), 0.5);
        cfg.rolling.alpha = 0.0;
        cfg.rolling.heel_hold_fraction = 0.0;
        let r = ab_rolling(&cfg).unwrap().unwrap();
        assert!(r.positive_reduction().abs() < 1e-9);
        assert!(r.negative_reduction().abs() < 1e-9);
    }
}
