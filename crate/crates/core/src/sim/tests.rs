use super::*;
use crate::alip::alip_propagate;
use crate::planner::StepPlanner;

fn walking(v: f64, n_steps: usize) -> SimConfig {
    let mut c = SimConfig::default();
    c.n_steps = n_steps;
    c.scenario.velocity_profile = alloc::vec![VelocitySegment {
        start: 0.0,
        velocity: Vec2::new(v, 0.0),
        yaw_rate: 0.0,
    }];
    c
}

fn ideal(v: f64, lambda: f64, n_steps: usize) -> SimConfig {
    let mut c = walking(v, n_steps);
    c.leg = SimConfig::ideal().leg;
    c.rolling = SimConfig::ideal().rolling;
    c.gait.lambda = lambda;
    c
}

/// Distance between two step starts in position and velocity units.
fn state_error(a: &WorldState, b: &WorldState, g: &GaitParams) -> f64 {
    let k = g.momentum_scale();
    let d = [
        a.alip.x - b.alip.x,
        a.alip.y - b.alip.y,
        (a.alip.lx - b.alip.lx) / k,
        (a.alip.ly - b.alip.ly) / k,
    ];
    libm::sqrt(d.iter().map(|v| v * v).sum())
}

#[test]
fn ideal_step_matches_closed_form() {
    let cfg = ideal(0.5, 0.3, 1);
    let mut start = WorldState::initial(&cfg).unwrap();
    start.alip.ly *= 1.2;
    start.alip.x -= 0.03;
    let out = step_once(&start, &cfg).unwrap().unwrap();
    let planner = StepPlanner::unbounded(cfg.gait.with_velocity(Vec2::new(0.5, 0.0))).unwrap();
    let expect = planner.ideal_step(&start.alip, start.stance_side).unwrap();
    let end = alip_propagate(&start.alip, &cfg.gait, cfg.gait.step_time).unwrap();
    let got = out.world.alip;
    assert!((got.x - expect.x).abs() < 1e-8);
    assert!((got.y - expect.y).abs() < 1e-8);
    assert!((got.lx - end.lx).abs() < 1e-8 * end.lx.abs().max(1.0));
    assert!((got.ly - end.ly).abs() < 1e-8 * end.ly.abs().max(1.0));
}

#[test]
fn runs_are_deterministic() {
    let mut cfg = walking(0.6, 8);
    cfg.scenario.pushes = alloc::vec![Push { time: 1.3, impulse: Vec2::new(5.0, -10.0) }];
    cfg.scenario.push_time_jitter = 0.05;
    cfg.seed = 7;
    assert_eq!(run_scenario(&cfg).unwrap(), run_scenario(&cfg).unwrap());
}

#[test]
fn seed_moves_jittered_pushes() {
    let mut cfg = walking(0.0, 6);
    cfg.scenario.pushes = alloc::vec![Push { time: 1.0, impulse: Vec2::new(10.0, 0.0) }];
    cfg.scenario.push_time_jitter = 0.05;
    let a = cfg.scenario.realize(1).pushes[0].time;
    let b = cfg.scenario.realize(2).pushes[0].time;
    assert_ne!(a, b);
    assert!((a - 1.0).abs() <= 0.05 && (b - 1.0).abs() <= 0.05);
}

#[test]
fn stepping_in_place_is_period_two() {
    let cfg = walking(0.0, 12);
    let run = run_scenario(&cfg).unwrap();
    assert!(run.completed());
    for r in &run.records[4..] {
        let v = (r.next_foot.planar() - r.stance_foot.planar()).x / r.duration();
        assert!(v.abs() < 1e-3);
    }
    let g = &cfg.gait;
    assert!(state_error(&run.starts[10], &run.starts[8], g) < 1e-6);
    assert!(state_error(&run.starts[10], &run.starts[9], g) > 1e-2);
}

#[test]
fn forward_walking_converges() {
    let cfg = walking(0.7, 20);
    let run = run_scenario(&cfg).unwrap();
    assert!(run.completed());
    let s = crate::metrics::aggregate(&run.records[10..], &cfg.gait, cfg.work).unwrap();
    assert!((s.mean_forward_velocity / 0.7 - 1.0).abs() < 0.05);
}

#[test]
fn fixed_points_of_step_map() {
    for v in [0.3, 0.5, 0.7] {
        let cfg = walking(v, 40);
        let run = run_scenario(&cfg).unwrap();
        assert!(run.completed());
        let n = run.starts.len() - 1;
        let residual = state_error(&run.starts[n], &run.starts[n - 2], &cfg.gait);
        assert!(residual < 1e-8, "v = {v}: residual {residual:e}");
    }
}

#[test]
fn deadbeat_push_recovers_in_two_steps() {
    let base = ideal(0.0, 0.0, 8);
    let mut pushed = base.clone();
    pushed.scenario.pushes = alloc::vec![Push { time: 2.0 * 0.4 + 0.2, impulse: Vec2::new(8.0, 15.0) }];
    let a = run_scenario(&base).unwrap();
    let b = run_scenario(&pushed).unwrap();
    assert!(state_error(&a.starts[3], &b.starts[3], &base.gait) > 1e-2);
    for k in 4..8 {
        assert!(state_error(&a.starts[k], &b.starts[k], &base.gait) < 1e-6, "start {k}");
    }
}

#[test]
fn forward_push_moves_touchdown_forward() {
    let cfg = walking(0.0, 4);
    let w = WorldState::initial(&cfg).unwrap();
    let mid = w.clone();
    let pushed = apply_push(&mid, Vec2::new(0.0, 20.0), &cfg);
    let a = step_once(&mid, &cfg).unwrap().unwrap();
    let b = step_once(&pushed, &cfg).unwrap().unwrap();
    assert!(b.record.next_foot.x > a.record.next_foot.x + 0.05);
    assert_eq!(apply_push(&mid, Vec2::ZERO, &cfg), mid);
    assert_eq!(pushed.alip.ly, mid.alip.ly + 20.0);
    assert_eq!(pushed.alip.x, mid.alip.x);
}

#[test]
fn large_push_falls() {
    let mut cfg = walking(0.0, 12);
    cfg.scenario.pushes = alloc::vec![Push { time: 1.0, impulse: Vec2::new(0.0, 400.0) }];
    let run = run_scenario(&cfg).unwrap();
    let fall = run.fall.expect("fall");
    assert!(fall.step_index >= 2 && fall.step_index < 12);
    assert!(matches!(run.events.last(), Some(Event::Fall(_))));
}

#[test]
fn zero_drop_is_identity() {
    let cfg = walking(0.7, 3);
    let w = WorldState::initial(&cfg).unwrap();
    assert_eq!(apply_terrain_drop(&w, 0.0).unwrap(), w);
    assert!(apply_terrain_drop(&w, -0.01).is_err());
}

#[test]
fn small_drop_recovers_large_drop_falls() {
    let base = run_scenario(&walking(0.7, 20)).unwrap();
    let mut cfg = walking(0.7, 20);
    cfg.scenario.terrain_drops = alloc::vec![TerrainDrop { step: 8, height: 0.05 }];
    let run = run_scenario(&cfg).unwrap();
    assert!(run.completed());
    assert!(run.records[8].duration() > cfg.gait.step_time);
    assert!(state_error(&run.starts[16], &base.starts[16], &cfg.gait) < 1e-2);
    cfg.scenario.terrain_drops[0].height = 0.5;
    assert!(run_scenario(&cfg).unwrap().fall.is_some());
}

#[test]
fn turning_in_place_stays_put() {
    let mut cfg = walking(0.0, 20);
    cfg.scenario.velocity_profile[0].yaw_rate = 0.5;
    let run = run_scenario(&cfg).unwrap();
    assert!(run.completed());
    let heading = run.starts.last().unwrap().heading;
    assert!((heading - 0.5 * 0.4 * 20.0).abs() < 1e-12);
    let c0 = run.records[0].samples[0].com.planar();
    for r in &run.records {
        for s in &r.samples {
            assert!((s.com.planar() - c0).norm() < 0.05);
        }
    }
}

#[test]
fn energy_bookkeeping_per_stride() {
    let cfg = walking(0.5, 6);
    let run = run_scenario(&cfg).unwrap();
    for r in &run.records {
        let w = crate::metrics::stride_work_with(r, &cfg.gait, cfg.work).unwrap();
        let de = crate::metrics::kinetic_energy_change(r, &cfg.gait, cfg.work);
        assert!((w.0 + w.1 - de).abs() < 1e-6);
    }
}

#[test]
fn com_is_continuous_across_exchanges() {
    let run = run_scenario(&walking(0.7, 8)).unwrap();
    for pair in run.records.windows(2) {
        let a = pair[0].samples.last().unwrap();
        let b = pair[1].samples.first().unwrap();
        assert!((a.com.planar() - b.com.planar()).norm() < 1e-9);
        assert!((a.com.z - b.com.z).abs() < 1e-9);
        assert!((a.com_velocity.planar() - b.com_velocity.planar()).norm() < 1e-9);
    }
}

#[test]
fn single_step_run() {
    let run = run_scenario(&walking(0.3, 1)).unwrap();
    assert_eq!(run.records.len(), 1);
    assert_eq!(run.starts.len(), 2);
    assert!(run.events.iter().any(|e| matches!(e, Event::Touchdown { .. })));
}

#[test]
fn config_validation() {
    let ok = SimConfig::default();
    assert!(ok.validate().is_ok());
    let bad = [
        SimConfig { integrator_dt: 0.0, ..ok.clone() },
        SimConfig { control_dt: 3e-3, ..ok.clone() },
        SimConfig { control_dt: 1.5e-4, ..ok.clone() },
        SimConfig { n_steps: 0, ..ok.clone() },
        SimConfig {
            scenario: ScenarioSpec {
                terrain_drops: alloc::vec![TerrainDrop { step: 40, height: 0.05 }],
                ..ScenarioSpec::default()
            },
            ..ok.clone()
        },
    ];
    for c in bad {
        assert!(c.validate().is_err(), "{c:?}");
        assert!(run_scenario(&c).is_err());
    }
}
