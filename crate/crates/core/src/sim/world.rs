use alloc::boxed::Box;
use alloc::vec::Vec;

use libm::{round, sqrt};

use super::plant::{self, Height, Leg};
use super::{Event, FallEvent, FallReason, InitialCondition, MomentumTransfer, SimConfig};
use crate::alip::{alip_vector_field, AlipState};
use crate::leg::{advance_leg, LegLengthState};
use crate::metrics::{Annotation, Sample, StrideRecord};
use crate::ode::rk4_step;
use crate::planner::{FootstepCommand, Side, StepPlanner};
use crate::rolling::desired_cop;
use crate::{Error, Result, Vec2, Vec3};

/// Kinematic swing foot: a quintic blend from liftoff to the live target
/// with a quartic height bump.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwingFoot {
    pub liftoff: Vec3,
    pub position: Vec3,
    /// World touchdown target of the latest plan.
    pub target: Vec2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub step_index: usize,
    /// Absolute time [s].
    pub time: f64,
    pub time_in_step: f64,
    pub stance_foot: Vec3,
    pub stance_side: Side,
    /// CoM offset and momentum about the stance ankle, world axes.
    pub alip: AlipState,
    pub leg: LegLengthState,
    pub swing: SwingFoot,
    pub com: Vec3,
    pub com_velocity: Vec3,
    pub heading: f64,
    /// Ground height the swing foot will land on.
    pub next_ground: f64,
    /// Number of scenario pushes already applied.
    pub pushes_applied: usize,
}

impl WorldState {
    pub fn initial(cfg: &SimConfig) -> Result<WorldState> {
        let side = cfg.first_stance;
        let (v, _) = cfg.scenario.command_at(0.0);
        let alip = match cfg.initial {
            InitialCondition::Periodic => planner(cfg, v)?.ideal_periodic_start(side)?,
            InitialCondition::State(s) => s,
        };
        let leg = if cfg.leg.enabled {
            LegLengthState::touchdown(cfg.leg.l0)
        } else {
            LegLengthState::touchdown(sqrt(cfg.gait.height * cfg.gait.height + alip.offset().norm_sq()))
        };
        let liftoff = Vec3::new(0.0, -side.lateral_sign() * cfg.gait.step_width, 0.0);
        let mut w = WorldState {
            step_index: 0,
            time: 0.0,
            time_in_step: 0.0,
            stance_foot: Vec3::default(),
            stance_side: side,
            alip,
            leg,
            swing: SwingFoot { liftoff, position: liftoff, target: liftoff.planar() },
            com: Vec3::default(),
            com_velocity: Vec3::default(),
            heading: 0.0,
            next_ground: 0.0,
            pushes_applied: 0,
        };
        let h = w.refresh(cfg);
        if !h.valid {
            return Err(Error::domain("l0", "leg reaches the initial CoM offset", cfg.leg.l0));
        }
        Ok(w)
    }

    /// The state in the heading frame, where the planner works.
    pub fn heading_state(&self) -> AlipState {
        self.alip.rotate(-self.heading)
    }

    /// Recomputes the world CoM from the stance foot, the ALIP state and
    /// the leg.
    fn refresh(&mut self, cfg: &SimConfig) -> Height {
        let progress = self.time_in_step / cfg.gait.step_time;
        let cop = cop_world(&self.alip, cfg, self.heading, progress);
        let h = plant::height(&self.alip, &cfg.gait, cop, leg_of(cfg, &self.leg), cfg.z_min);
        let v = self.alip.velocity(&cfg.gait);
        self.com = Vec3::new(self.stance_foot.x + self.alip.x, self.stance_foot.y + self.alip.y, self.stance_foot.z + h.z);
        self.com_velocity = Vec3::new(v.x, v.y, h.z_dot);
        h
    }
}

/// Instantaneous momentum impulse about the stance ankle.
pub fn apply_push(world: &WorldState, impulse: Vec2, cfg: &SimConfig) -> WorldState {
    let mut w = world.clone();
    w.alip.lx += impulse.x;
    w.alip.ly += impulse.y;
    w.refresh(cfg);
    w
}

/// Lowers the ground under the next touchdown. The controller is not told.
pub fn apply_terrain_drop(world: &WorldState, drop: f64) -> Result<WorldState> {
    if !(drop >= 0.0) {
        return Err(Error::domain("drop", "drop >= 0", drop));
    }
    let mut w = world.clone();
    w.next_ground -= drop;
    Ok(w)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub world: WorldState,
    pub record: StrideRecord,
    pub events: Vec<Event>,
}

/// A failed step: the fall plus everything recorded up to it.
#[derive(Debug, Clone, PartialEq)]
pub struct Fall {
    pub event: FallEvent,
    pub record: StrideRecord,
    pub events: Vec<Event>,
}

fn planner(cfg: &SimConfig, velocity: Vec2) -> Result<StepPlanner> {
    StepPlanner::new(cfg.gait.with_velocity(velocity), cfg.reach_factor * cfg.leg.l_max)
}

fn leg_of(cfg: &SimConfig, leg: &LegLengthState) -> Option<Leg> {
    cfg.leg.enabled.then(|| Leg {
        l: leg.l,
        l_dot: leg.l_dot,
        l_ddot: leg.acceleration(&cfg.leg),
    })
}

fn cop_world(s: &AlipState, cfg: &SimConfig, heading: f64, progress: f64) -> Vec2 {
    let local = s.offset().rotate(-heading);
    desired_cop(local, &cfg.rolling, progress).rotate(heading)
}

fn quintic(t: f64) -> f64 {
    t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
}

struct Stepper<'a> {
    cfg: &'a SimConfig,
    step_start: f64,
    foot: Vec3,
    heading: f64,
    dir: Vec2,
    side: Side,
    t_beta: f64,
    t_heel: f64,
}

impl Stepper<'_> {
    /// Stance progress with the switch points pinned, so a stage that
    /// starts at a split point starts exactly there.
    fn pinned(&self, t: f64, t_switch: f64, fraction: f64) -> f64 {
        let p = t / self.cfg.gait.step_time;
        if t >= t_switch {
            p.max(fraction)
        } else {
            p.min(fraction * (1.0 - f64::EPSILON))
        }
    }

    fn leg_progress(&self, t: f64) -> f64 {
        self.pinned(t, self.t_beta, self.cfg.leg.beta)
    }

    fn rolling_progress(&self, t: f64) -> f64 {
        self.pinned(t, self.t_heel, self.cfg.rolling.heel_hold_fraction)
    }

    fn com_to_foot(&self, s: &AlipState) -> f64 {
        (-s.offset().dot(self.dir)).max(0.0)
    }

    fn cop(&self, s: &AlipState, t: f64) -> Vec2 {
        cop_world(s, self.cfg, self.heading, self.rolling_progress(t))
    }

    /// Advances over `[a, b]`; no CoP schedule or leg stage switch the
    /// stepper controls lies strictly inside.
    fn piece(&self, s: &mut AlipState, leg: &mut LegLengthState, a: f64, b: f64) {
        let len = b - a;
        if len <= 0.0 {
            return;
        }
        let cfg = self.cfg;
        if cfg.leg.enabled {
            *leg = advance_leg(leg, &cfg.leg, self.leg_progress(a), self.com_to_foot(s), len);
        }
        let rp = self.rolling_progress(a);
        let y = rk4_step(
            &mut |_, y: &[f64; 4]| {
                let st = AlipState::from_array(*y);
                let cop = cop_world(&st, cfg, self.heading, rp);
                alip_vector_field(&st, &cfg.gait, cop).to_array()
            },
            0.0,
            &s.to_array(),
            len,
        );
        *s = AlipState::from_array(y);
    }

    fn height(&self, s: &AlipState, leg: &LegLengthState, t: f64) -> Height {
        plant::height(s, &self.cfg.gait, self.cop(s, t), leg_of(self.cfg, leg), self.cfg.z_min)
    }

    fn swing_position(&self, liftoff: Vec3, target: Vec2, next_ground: f64, t: f64) -> Vec3 {
        let cfg = self.cfg;
        let big_t = cfg.gait.step_time;
        let tau = (t / big_t).min(1.0);
        let blend = quintic(tau);
        let planar = liftoff.planar() + (target - liftoff.planar()) * blend;
        let z = if t <= big_t {
            let bump = 16.0 * tau * tau * (1.0 - tau) * (1.0 - tau);
            liftoff.z + (self.foot.z - liftoff.z) * blend + cfg.swing_clearance * bump
        } else {
            (self.foot.z - cfg.swing_descent_speed * (t - big_t)).max(next_ground)
        };
        Vec3::from_planar(planar, z)
    }

    fn sample(&self, s: &AlipState, leg: &LegLengthState, t: f64, swing: Vec3, target: Vec2) -> Sample {
        let cfg = self.cfg;
        let h = self.height(s, leg, t);
        let v = s.velocity(&cfg.gait);
        let length = if cfg.leg.enabled { leg.l } else { sqrt(h.z * h.z + s.offset().norm_sq()) };
        Sample {
            t: self.step_start + t,
            time_in_step: t,
            com_offset: s.offset(),
            com: Vec3::new(self.foot.x + s.x, self.foot.y + s.y, self.foot.z + h.z),
            com_velocity: Vec3::new(v.x, v.y, h.z_dot),
            height_accel: h.z_ddot,
            cop_offset: self.cop(s, t),
            momentum: s.momentum(),
            leg_length: length,
            leg_rate: if cfg.leg.enabled { leg.l_dot } else { 0.0 },
            leg_stage: leg.stage,
            height: h.z,
            swing_foot: swing,
            target,
        }
    }

    fn command(&self, s: &AlipState, t: f64) -> Result<FootstepCommand> {
        let (v, _) = self.cfg.scenario.command_at(self.step_start + t);
        let big_t = self.cfg.gait.step_time;
        let local = s.rotate(-self.heading);
        let cmd = planner(self.cfg, v)?.update_during_swing(&local, (big_t - t).clamp(0.0, big_t), self.side)?;
        Ok(cmd.rotate(self.heading))
    }
}

/// Simulates from the current instant to the next touchdown.
///
/// The outer error is for invalid configuration; the inner one is a fall.
pub fn step_once(world: &WorldState, cfg: &SimConfig) -> Result<core::result::Result<StepOutput, Box<Fall>>> {
    let big_t = cfg.gait.step_time;
    let h = cfg.integrator_dt;
    let n_ctrl = cfg.control_ticks();
    let st = Stepper {
        cfg,
        step_start: world.time - world.time_in_step,
        foot: world.stance_foot,
        heading: world.heading,
        dir: Vec2::from_angle(world.heading),
        side: world.stance_side,
        t_beta: cfg.leg.beta * big_t,
        t_heel: cfg.rolling.heel_hold_fraction * big_t,
    };
    let drop = (world.stance_foot.z - world.next_ground).max(0.0);
    let t_land = big_t + drop / cfg.swing_descent_speed;
    let reach = cfg.reach_factor * cfg.leg.l_max;
    let pushes = &cfg.scenario.pushes;

    let mut s = world.alip;
    let mut leg = world.leg;
    let mut sub = round(world.time_in_step / h) as usize;
    let mut pushes_applied = world.pushes_applied;
    let mut invalid_time = 0.0;
    let mut invalid_total = 0.0;
    let mut samples = Vec::with_capacity(cfg.steps_per_control() + 2);
    let mut annotations = Vec::new();
    let mut events = Vec::new();
    if drop > 0.0 {
        annotations.push(Annotation::TerrainDrop { height: drop });
    }
    let liftoff = world.swing.liftoff;
    let mut target = world.swing.target;

    let record = |samples: Vec<Sample>, annotations: Vec<Annotation>, next: Vec3| StrideRecord {
        step_index: world.step_index,
        stance_side: world.stance_side,
        heading: world.heading,
        stance_foot: world.stance_foot,
        next_foot: next,
        samples,
        annotations,
    };

    loop {
        let t = sub as f64 * h;
        let tick = sub % n_ctrl == 0;
        if tick {
            let cmd = st.command(&s, t)?;
            target = st.foot.planar() + cmd.step();
            let swing = st.swing_position(liftoff, target, world.next_ground, t);
            samples.push(st.sample(&s, &leg, t, swing, target));
        }

        if t >= t_land - 1e-9 {
            let cmd = st.command(&s, t)?;
            let hgt = st.height(&s, &leg, t);
            let com = Vec3::new(st.foot.x + s.x, st.foot.y + s.y, st.foot.z + hgt.z);
            let new_foot = Vec3::from_planar(com.planar() + cmd.position, world.next_ground);
            let offset = -cmd.position;
            let z_new = com.z - world.next_ground;
            let l_td = sqrt(z_new * z_new + offset.norm_sq());
            let reachable = !cfg.leg.enabled || (z_new > 0.0 && l_td <= cfg.leg.l_max * (1.0 + 1e-12));
            if reachable {
                if !tick {
                    samples.push(st.sample(&s, &leg, t, new_foot, new_foot.planar()));
                }
                if let Some(last) = samples.last_mut() {
                    last.target = new_foot.planar();
                    last.swing_foot = new_foot;
                }
                if cmd.clamped {
                    annotations.push(Annotation::Clamped);
                }
                if t > big_t + 1e-9 {
                    annotations.push(Annotation::Extended { extra: t - big_t });
                }
                if invalid_total > 0.0 {
                    annotations.push(Annotation::HeightInvalid { duration: invalid_total });
                }
                let alip = match cfg.momentum_transfer {
                    MomentumTransfer::Continuity => AlipState::new(offset.x, offset.y, s.lx, s.ly),
                    MomentumTransfer::Exact => {
                        // L about the new foot = L about the old one minus
                        // d x m v, with the leg's vertical CoM velocity.
                        let d = Vec3::new(new_foot.x - st.foot.x, new_foot.y - st.foot.y, new_foot.z - st.foot.z);
                        let v = s.velocity(&cfg.gait);
                        let m = cfg.gait.mass;
                        AlipState::new(
                            offset.x,
                            offset.y,
                            s.lx - m * (d.y * hgt.z_dot - d.z * v.y),
                            s.ly - m * (d.z * v.x - d.x * hgt.z_dot),
                        )
                    }
                };
                let new_leg = if cfg.leg.enabled {
                    LegLengthState::touchdown(l_td)
                } else {
                    LegLengthState::touchdown(sqrt(cfg.gait.height * cfg.gait.height + offset.norm_sq()))
                };
                let (_, yaw) = cfg.scenario.command_at(st.step_start);
                let time = st.step_start + t;
                events.push(Event::Touchdown {
                    step_index: world.step_index,
                    time,
                    foot: new_foot,
                    side: cmd.side,
                    clamped: cmd.clamped,
                });
                let mut next = WorldState {
                    step_index: world.step_index + 1,
                    time,
                    time_in_step: 0.0,
                    stance_foot: new_foot,
                    stance_side: cmd.side,
                    alip,
                    leg: new_leg,
                    swing: SwingFoot { liftoff: st.foot, position: st.foot, target: st.foot.planar() },
                    com,
                    com_velocity: Vec3::default(),
                    heading: world.heading + yaw * big_t,
                    next_ground: new_foot.z,
                    pushes_applied,
                };
                next.refresh(cfg);
                if cfg.leg.enabled {
                    // The new leg was sized to this point; keep it bit-exact.
                    next.com.z = com.z;
                }
                return Ok(Ok(StepOutput { world: next, record: record(samples, annotations, new_foot), events }));
            }
            if t - big_t > cfg.max_step_extension {
                let reason = FallReason::TouchdownTimeout { extension: t - big_t };
                let f = fall(world, &st, &s, &leg, t, reason, record(samples, annotations, new_foot), events);
                return Ok(Err(f));
            }
        }

        // One integrator substep, split at pushes and schedule switches.
        let end = t + h;
        let mut a = t;
        while a < end {
            while pushes_applied < pushes.len() && pushes[pushes_applied].time - st.step_start <= a + 1e-12 {
                let p = pushes[pushes_applied];
                s.lx += p.impulse.x;
                s.ly += p.impulse.y;
                annotations.push(Annotation::Push { t: p.time, impulse: p.impulse });
                events.push(Event::Push { step_index: world.step_index, time: p.time, impulse: p.impulse });
                pushes_applied += 1;
            }
            let mut b = end;
            let mut cut = |c: f64| {
                if c > a + 1e-12 && c < b - 1e-12 {
                    b = c;
                }
            };
            if cfg.leg.enabled {
                cut(st.t_beta);
            }
            if cfg.rolling.enabled {
                cut(st.t_heel);
            }
            if let Some(p) = pushes.get(pushes_applied) {
                cut(p.time - st.step_start);
            }
            st.piece(&mut s, &mut leg, a, b);
            a = b;
        }
        sub += 1;

        let t = sub as f64 * h;
        let valid = st.height(&s, &leg, t).valid;
        if valid {
            invalid_time = 0.0;
        } else {
            invalid_time += h;
            invalid_total += h;
        }
        let local = s.offset().rotate(-st.heading);
        let reason = if !s.is_finite() || !leg.l.is_finite() {
            Some(FallReason::NonFinite)
        } else if local.x.abs() > reach || local.y.abs() > reach {
            Some(FallReason::ReachExceeded { offset: local })
        } else if invalid_time > cfg.height_invalid_limit {
            Some(FallReason::HeightInvalid { duration: invalid_time })
        } else {
            None
        };
        if let Some(reason) = reason {
            if s.is_finite() {
                let swing = st.swing_position(liftoff, target, world.next_ground, t);
                samples.push(st.sample(&s, &leg, t, swing, target));
            }
            let next = Vec3::from_planar(target, world.next_ground);
            let f = fall(world, &st, &s, &leg, t, reason, record(samples, annotations, next), events);
            return Ok(Err(f));
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn fall(
    world: &WorldState,
    st: &Stepper<'_>,
    s: &AlipState,
    leg: &LegLengthState,
    t: f64,
    reason: FallReason,
    record: StrideRecord,
    events: Vec<Event>,
) -> Box<Fall> {
    let z = if s.is_finite() { st.height(s, leg, t).z } else { f64::NAN };
    Box::new(Fall {
        event: FallEvent {
            step_index: world.step_index,
            time: st.step_start + t,
            reason,
            com: Vec3::new(st.foot.x + s.x, st.foot.y + s.y, st.foot.z + z),
            stance_foot: world.stance_foot,
        },
        record,
        events,
    })
}
