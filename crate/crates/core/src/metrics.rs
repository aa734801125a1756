//! Per-stride CoM energetics and gait statistics.
//!
//! Work is the integral of the positive and negative parts of the rate of
//! change of the CoM's forward kinetic energy. It is a CoM-level proxy, not
//! joint work: the reduced-order plant has no joints.

use alloc::vec::Vec;

use crate::alip::GaitParams;
use crate::leg::LegStage;
use crate::planner::Side;
use crate::{Error, Result, Vec2, Vec3};

/// One control-rate sample of the closed-loop state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Simulation time [s].
    pub t: f64,
    pub time_in_step: f64,
    /// CoM offset from the stance ankle, world axes [m].
    pub com_offset: Vec2,
    pub com: Vec3,
    pub com_velocity: Vec3,
    /// Height acceleration from the leg kinematics [m/s^2].
    pub height_accel: f64,
    /// CoP relative to the stance ankle, world axes [m].
    pub cop_offset: Vec2,
    /// Contact-point angular momentum `(L_x, L_y)`.
    pub momentum: Vec2,
    pub leg_length: f64,
    pub leg_rate: f64,
    pub leg_stage: LegStage,
    /// CoM height above the stance foot [m].
    pub height: f64,
    pub swing_foot: Vec3,
    /// World touchdown target of the current plan.
    pub target: Vec2,
}

impl Sample {
    fn rigid(&self, angle: f64, shift: Vec3) -> Sample {
        let rot3 = |v: Vec3| Vec3::from_planar(v.planar().rotate(angle), v.z);
        let move3 = |v: Vec3| {
            let r = rot3(v);
            Vec3::new(r.x + shift.x, r.y + shift.y, r.z + shift.z)
        };
        Sample {
            com_offset: self.com_offset.rotate(angle),
            com: move3(self.com),
            com_velocity: rot3(self.com_velocity),
            cop_offset: self.cop_offset.rotate(angle),
            momentum: self.momentum.rotate(angle),
            swing_foot: move3(self.swing_foot),
            target: self.target.rotate(angle) + shift.planar(),
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Annotation {
    Push { t: f64, impulse: Vec2 },
    TerrainDrop { height: f64 },
    /// The reach limit shortened the final touchdown command.
    Clamped,
    /// Touchdown happened this long after the nominal step time.
    Extended { extra: f64 },
    /// The leg could not reach the CoM for part of the step.
    HeightInvalid { duration: f64 },
}

/// Samples of one step, from touchdown of the stance foot to touchdown of
/// the next one (inclusive: the last sample is the pre-exchange state).
#[derive(Debug, Clone, PartialEq)]
pub struct StrideRecord {
    pub step_index: usize,
    pub stance_side: Side,
    pub heading: f64,
    pub stance_foot: Vec3,
    /// Where the swing foot landed, or the last target if the step failed.
    pub next_foot: Vec3,
    pub samples: Vec<Sample>,
    pub annotations: Vec<Annotation>,
}

impl StrideRecord {
    pub fn duration(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.t - a.t,
            _ => 0.0,
        }
    }

    pub fn forward_axis(&self) -> Vec2 {
        Vec2::from_angle(self.heading)
    }

    pub fn lateral_axis(&self) -> Vec2 {
        Vec2::from_angle(self.heading + core::f64::consts::FRAC_PI_2)
    }

    /// The same stride seen from a rotated and translated world frame.
    pub fn rigid_transform(&self, angle: f64, shift: Vec3) -> StrideRecord {
        let move3 = |v: Vec3| {
            let r = v.planar().rotate(angle);
            Vec3::new(r.x + shift.x, r.y + shift.y, v.z + shift.z)
        };
        StrideRecord {
            heading: self.heading + angle,
            stance_foot: move3(self.stance_foot),
            next_foot: move3(self.next_foot),
            samples: self.samples.iter().map(|s| s.rigid(angle, shift)).collect(),
            annotations: self
                .annotations
                .iter()
                .map(|a| match *a {
                    Annotation::Push { t, impulse } => Annotation::Push {
                        t,
                        impulse: impulse.rotate(angle),
                    },
                    other => other,
                })
                .collect(),
            ..self.clone()
        }
    }
}

/// Which velocity components count toward kinetic energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WorkOptions {
    /// Add the lateral component (diagnostic; off by default).
    pub include_lateral: bool,
}

fn kinetic_energy(record: &StrideRecord, mass: f64, opts: WorkOptions) -> Vec<f64> {
    let fwd = record.forward_axis();
    let lat = record.lateral_axis();
    record
        .samples
        .iter()
        .map(|s| {
            let v = s.com_velocity.planar();
            let vf = v.dot(fwd);
            let mut e = vf * vf;
            if opts.include_lateral {
                let vl = v.dot(lat);
                e += vl * vl;
            }
            0.5 * mass * e
        })
        .collect()
}

/// Rate of change of the forward kinetic energy [W]: central differences
/// inside, one-sided at both ends.
pub fn energy_rate_series(record: &StrideRecord, params: &GaitParams) -> Result<Vec<f64>> {
    energy_rate_series_with(record, params, WorkOptions::default())
}

pub fn energy_rate_series_with(record: &StrideRecord, params: &GaitParams, opts: WorkOptions) -> Result<Vec<f64>> {
    let n = record.samples.len();
    if n < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: n });
    }
    let e = kinetic_energy(record, params.mass, opts);
    let t: Vec<f64> = record.samples.iter().map(|s| s.t).collect();
    let mut rate = Vec::with_capacity(n);
    rate.push((e[1] - e[0]) / (t[1] - t[0]));
    for i in 1..n - 1 {
        rate.push((e[i + 1] - e[i - 1]) / (t[i + 1] - t[i - 1]));
    }
    rate.push((e[n - 1] - e[n - 2]) / (t[n - 1] - t[n - 2]));
    Ok(rate)
}

/// `(positive, negative)` work over the stride by trapezoidal quadrature of
/// the clipped energy rate.
pub fn stride_work(record: &StrideRecord, params: &GaitParams) -> Result<(f64, f64)> {
    stride_work_with(record, params, WorkOptions::default())
}

pub fn stride_work_with(record: &StrideRecord, params: &GaitParams, opts: WorkOptions) -> Result<(f64, f64)> {
    let rate = energy_rate_series_with(record, params, opts)?;
    let mut pos = 0.0;
    let mut neg = 0.0;
    for (w, s) in rate.windows(2).zip(record.samples.windows(2)) {
        let h = s[1].t - s[0].t;
        pos += 0.5 * h * (w[0].max(0.0) + w[1].max(0.0));
        neg += 0.5 * h * (w[0].min(0.0) + w[1].min(0.0));
    }
    Ok((pos, neg))
}

/// Net change of the forward kinetic energy over the stride.
pub fn kinetic_energy_change(record: &StrideRecord, params: &GaitParams, opts: WorkOptions) -> f64 {
    let e = kinetic_energy(record, params.mass, opts);
    match (e.first(), e.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrideMetrics {
    pub step_index: usize,
    pub positive_work: f64,
    pub negative_work: f64,
    pub avg_forward_velocity: f64,
    pub avg_lateral_velocity: f64,
    /// Lateral distance between stance and next foot [m].
    pub step_width: f64,
    /// Forward distance between stance and next foot [m].
    pub step_length: f64,
    pub max_abs_height_accel: f64,
    /// Forward extent of the CoP path within the foot [m].
    pub cop_travel: f64,
    pub duration: f64,
}

pub fn stride_metrics(record: &StrideRecord, params: &GaitParams, opts: WorkOptions) -> Result<StrideMetrics> {
    let (positive_work, negative_work) = stride_work_with(record, params, opts)?;
    let fwd = record.forward_axis();
    let lat = record.lateral_axis();
    let first = &record.samples[0];
    let last = &record.samples[record.samples.len() - 1];
    let duration = last.t - first.t;
    let travel = last.com.planar() - first.com.planar();
    let step = record.next_foot.planar() - record.stance_foot.planar();
    let mut max_acc: f64 = 0.0;
    let (mut cop_min, mut cop_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for s in &record.samples {
        max_acc = max_acc.max(s.height_accel.abs());
        let c = s.cop_offset.dot(fwd);
        cop_min = cop_min.min(c);
        cop_max = cop_max.max(c);
    }
    Ok(StrideMetrics {
        step_index: record.step_index,
        positive_work,
        negative_work,
        avg_forward_velocity: travel.dot(fwd) / duration,
        avg_lateral_velocity: travel.dot(lat) / duration,
        step_width: step.dot(lat).abs(),
        step_length: step.dot(fwd),
        max_abs_height_accel: max_acc,
        cop_travel: cop_max - cop_min,
        duration,
    })
}

/// Per-stride table plus summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub strides: Vec<StrideMetrics>,
    /// Index into `strides` of the median stride by positive work.
    pub median_index: usize,
    pub mean_positive_work: f64,
    pub mean_negative_work: f64,
    pub var_positive_work: f64,
    pub var_negative_work: f64,
    pub mean_forward_velocity: f64,
    pub mean_lateral_velocity: f64,
    pub max_abs_height_accel: f64,
}

impl Summary {
    pub fn median(&self) -> &StrideMetrics {
        &self.strides[self.median_index]
    }
}

pub fn aggregate(records: &[StrideRecord], params: &GaitParams, opts: WorkOptions) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::Empty);
    }
    let strides = records
        .iter()
        .map(|r| stride_metrics(r, params, opts))
        .collect::<Result<Vec<_>>>()?;
    let n = strides.len() as f64;
    let mean = |f: &dyn Fn(&StrideMetrics) -> f64| strides.iter().map(f).sum::<f64>() / n;
    let var = |f: &dyn Fn(&StrideMetrics) -> f64, m: f64| {
        strides.iter().map(|s| (f(s) - m) * (f(s) - m)).sum::<f64>() / n
    };
    let mean_pos = mean(&|s| s.positive_work);
    let mean_neg = mean(&|s| s.negative_work);

    let mut order: Vec<usize> = (0..strides.len()).collect();
    // Stable sort, so ties keep stride order.
    order.sort_by(|&a, &b| strides[a].positive_work.total_cmp(&strides[b].positive_work));
    let median_index = order[(order.len() - 1) / 2];

    Ok(Summary {
        median_index,
        mean_positive_work: mean_pos,
        mean_negative_work: mean_neg,
        var_positive_work: var(&|s| s.positive_work, mean_pos),
        var_negative_work: var(&|s| s.negative_work, mean_neg),
        mean_forward_velocity: mean(&|s| s.avg_forward_velocity),
        mean_lateral_velocity: mean(&|s| s.avg_lateral_velocity),
        max_abs_height_accel: strides.iter().map(|s| s.max_abs_height_accel).fold(0.0, f64::max),
        strides,
    })
}

/// Fraction of samples with `|z_ddot| < threshold`, and the largest value.
pub fn height_accel_fraction_below(records: &[StrideRecord], threshold: f64) -> (f64, f64) {
    let mut total = 0usize;
    let mut below = 0usize;
    let mut max: f64 = 0.0;
    for s in records.iter().flat_map(|r| r.samples.iter()) {
        total += 1;
        let a = s.height_accel.abs();
        if a < threshold {
            below += 1;
        }
        max = max.max(a);
    }
    if total == 0 {
        return (0.0, 0.0);
    }
    (below as f64 / total as f64, max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample(t: f64, vx: f64, x: f64) -> Sample {
        Sample {
            t,
            time_in_step: t,
            com_offset: Vec2::new(x, 0.0),
            com: Vec3::new(x, 0.0, 0.9),
            com_velocity: Vec3::new(vx, 0.0, 0.0),
            height_accel: 0.0,
            cop_offset: Vec2::ZERO,
            momentum: Vec2::ZERO,
            leg_length: 0.95,
            leg_rate: 0.0,
            leg_stage: LegStage::Hold,
            height: 0.9,
            swing_foot: Vec3::default(),
            target: Vec2::ZERO,
        }
    }

    fn record(samples: Vec<Sample>) -> StrideRecord {
        StrideRecord {
            step_index: 0,
            stance_side: Side::Left,
            heading: 0.0,
            stance_foot: Vec3::default(),
            next_foot: Vec3::new(0.3, -0.2, 0.0),
            samples,
            annotations: Vec::new(),
        }
    }

    fn params() -> GaitParams {
        GaitParams { mass: 2.0, ..GaitParams::default() }
    }

    fn profile(v: impl Fn(f64) -> f64, n: usize, dt: f64) -> StrideRecord {
        let mut x = 0.0;
        let samples = (0..=n)
            .map(|i| {
                let t = i as f64 * dt;
                let s = sample(t, v(t), x);
                x += v(t) * dt;
                s
            })
            .collect();
        record(samples)
    }

    #[test]
    fn constant_velocity_has_zero_rate_and_work() {
        let r = profile(|_| 0.7, 200, 0.002);
        assert!(energy_rate_series(&r, &params()).unwrap().iter().all(|&e| e == 0.0));
        assert_eq!(stride_work(&r, &params()).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn linear_velocity_rate_is_m_a2_t() {
        let a = 1.5;
        let r = profile(|t| a * t, 100, 0.01);
        let m = params().mass;
        let rate = energy_rate_series(&r, &params()).unwrap();
        for (i, e) in rate.iter().enumerate().skip(1).take(99) {
            let t = i as f64 * 0.01;
            assert!((e - m * a * a * t).abs() < 1e-9, "{i}: {e}");
        }
    }

    #[test]
    fn too_few_samples() {
        let r = profile(|_| 0.1, 1, 0.01);
        assert_eq!(
            energy_rate_series(&r, &params()),
            Err(Error::TooFewSamples { needed: 3, got: 2 })
        );
    }

    #[test]
    fn symmetric_dip_has_balanced_work() {
        // Decelerate then accelerate back to the starting speed.
        let r = profile(|t| 0.7 - 0.1 * libm::sin(core::f64::consts::PI * t / 0.4), 400, 0.001);
        let (pos, neg) = stride_work(&r, &params()).unwrap();
        assert!(pos > 0.0 && neg < 0.0);
        assert!((pos + neg).abs() < 1e-6 * pos, "{pos} {neg}");
    }

    #[test]
    fn aggregate_cases() {
        assert_eq!(aggregate(&[], &params(), WorkOptions::default()), Err(Error::Empty));
        let one = profile(|t| 0.7 - 0.1 * t, 100, 0.004);
        let s = aggregate(core::slice::from_ref(&one), &params(), WorkOptions::default()).unwrap();
        let m = stride_metrics(&one, &params(), WorkOptions::default()).unwrap();
        assert_eq!(*s.median(), m);
        assert_eq!(s.mean_positive_work, m.positive_work);
        assert_eq!(s.mean_negative_work, m.negative_work);
        let many = [one.clone(), one.clone(), one.clone(), one];
        let s = aggregate(&many, &params(), WorkOptions::default()).unwrap();
        assert_eq!(s.var_positive_work, 0.0);
        assert_eq!(s.var_negative_work, 0.0);
    }

    #[test]
    fn lateral_option_adds_energy() {
        let mut r = profile(|t| 0.5 + t, 50, 0.01);
        for (i, s) in r.samples.iter_mut().enumerate() {
            s.com_velocity.y = 0.01 * i as f64;
        }
        let (p0, _) = stride_work(&r, &params()).unwrap();
        let (p1, _) = stride_work_with(&r, &params(), WorkOptions { include_lateral: true }).unwrap();
        assert!(p1 > p0);
    }

    proptest! {
        #[test]
        fn work_sums_to_kinetic_energy_change(
            a in -2.0f64..2.0, b in -3.0f64..3.0, c in 0.2f64..1.5, n in 10usize..300,
        ) {
            let r = profile(|t| c + a * t + b * t * t, n, 0.4 / n as f64);
            let (pos, neg) = stride_work(&r, &params()).unwrap();
            let de = kinetic_energy_change(&r, &params(), WorkOptions::default());
            prop_assert!(pos >= 0.0 && neg <= 0.0);
            prop_assert!((pos + neg - de).abs() <= 1e-9 * (pos - neg).max(1e-9) + 1e-12);
        }

        #[test]
        fn metrics_are_frame_invariant(angle in -3.0f64..3.0, dx in -5.0f64..5.0, dy in -5.0f64..5.0) {
            let r = profile(|t| 0.6 + 0.3 * libm::sin(10.0 * t), 200, 0.002);
            let moved = r.rigid_transform(angle, Vec3::new(dx, dy, 0.3));
            let p = params();
            let a = stride_metrics(&r, &p, WorkOptions::default()).unwrap();
            let b = stride_metrics(&moved, &p, WorkOptions::default()).unwrap();
            let pairs = [
                (a.positive_work, b.positive_work),
                (a.negative_work, b.negative_work),
                (a.avg_forward_velocity, b.avg_forward_velocity),
                (a.avg_lateral_velocity, b.avg_lateral_velocity),
                (a.step_width, b.step_width),
                (a.step_length, b.step_length),
                (a.cop_travel, b.cop_travel),
            ];
            for (u, v) in pairs {
                prop_assert!((u - v).abs() < 1e-9, "{} vs {}", u, v);
            }
        }
    }
}
