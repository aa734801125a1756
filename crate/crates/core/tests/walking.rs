use proptest::prelude::*;
use quickster_core::analysis::{ab_rolling, at_speed, steady_state};
use quickster_core::SimConfig;

fn walk(speed: f64, n: usize) -> SimConfig {
    let mut cfg = at_speed(&SimConfig::default(), speed);
    cfg.n_steps = n;
    cfg
}

#[test]
fn steady_median_stride_is_typical() {
    let s = steady_state(&walk(0.7, 40)).unwrap().summary.unwrap();
    assert_eq!(s.strides.len(), 20);
    let med = s.median();
    assert!((med.positive_work - s.mean_positive_work).abs() <= 0.02 * s.mean_positive_work);
    assert!((med.negative_work - s.mean_negative_work).abs() <= 0.02 * s.mean_negative_work.abs());
}

#[test]
fn forward_speed_dips_then_recovers_within_a_stride() {
    let run = steady_state(&walk(0.7, 20)).unwrap().run;
    let r = &run.records[15];
    let v: Vec<f64> = r.samples.iter().map(|s| s.com_velocity.x).collect();
    let n = v.len();
    assert!(v[1] < v[0], "decelerates after touchdown");
    assert!(v[n - 1] > v[n - 2], "accelerates before liftoff");
    let slowest = (0..n).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    let at = &r.samples[slowest];
    assert!((at.com_offset.x - at.cop_offset.x).abs() < 0.02, "slowest where the CoM passes the CoP");
}

#[test]
fn rolling_comparison_is_repeatable() {
    let cfg = walk(0.7, 20);
    assert_eq!(ab_rolling(&cfg).unwrap(), ab_rolling(&cfg).unwrap());
}

#[test]
fn rolling_reduces_work_at_moderate_speed() {
    let r = ab_rolling(&walk(0.7, 20)).unwrap().unwrap();
    assert!(r.positive_reduction() > 0.0);
    assert!(r.negative_reduction() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn tracks_commanded_speed(speed in 0.1f64..1.4) {
        let s = steady_state(&walk(speed, 30)).unwrap();
        prop_assert!(s.fall().is_none());
        let sum = s.summary.unwrap();
        prop_assert!((sum.mean_forward_velocity - speed).abs() < 0.05 * speed);
        prop_assert!(sum.mean_lateral_velocity.abs() < 1e-3);
    }
}
