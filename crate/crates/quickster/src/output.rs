//! CSV and JSON artifacts.
//!
//! Column order is fixed per schema version. Floats are written in
//! scientific notation with 17 significant digits, which reads back to the
//! same `f64`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use quickster_core::analysis::AbReport;
use quickster_core::metrics::{stride_metrics, Annotation, StrideMetrics};
use quickster_core::sim::{FallEvent, FallReason};
use quickster_core::{SimConfig, StrideRecord};
use serde::Serialize;

use crate::CliError;

/// Bumped whenever a column is added, removed or reordered.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const TRAJECTORY_COLUMNS: [&str; 26] = [
    "step",
    "side",
    "t",
    "time_in_step",
    "com_x",
    "com_y",
    "com_z",
    "com_vx",
    "com_vy",
    "com_vz",
    "height",
    "height_accel",
    "offset_x",
    "offset_y",
    "cop_x",
    "cop_y",
    "l_x",
    "l_y",
    "leg_length",
    "leg_rate",
    "leg_stage",
    "swing_x",
    "swing_y",
    "swing_z",
    "target_x",
    "target_y",
];

pub const STRIDE_COLUMNS: [&str; 14] = [
    "step",
    "side",
    "status",
    "duration",
    "positive_work",
    "negative_work",
    "avg_forward_velocity",
    "avg_lateral_velocity",
    "step_length",
    "step_width",
    "max_abs_height_accel",
    "cop_travel",
    "clamped",
    "annotations",
];

pub const SWEEP_COLUMNS: [&str; 13] = [
    "speed",
    "status",
    "fall_step",
    "mean_forward_velocity",
    "speed_error_pct",
    "median_step",
    "positive_work",
    "negative_work",
    "avg_forward_velocity",
    "step_length",
    "step_width",
    "max_abs_height_accel",
    "duration",
];

pub const AB_COLUMNS: [&str; 4] = ["metric", "rolling_on", "rolling_off", "reduction_pct"];

pub const PUSH_GRID_COLUMNS: [&str; 11] = [
    "direction",
    "angle",
    "unit_dlx",
    "unit_dly",
    "recoverable",
    "falls",
    "test_magnitude",
    "initial_deviation",
    "final_deviation",
    "relative_to_push",
    "relative_to_orbit",
];

pub fn f(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// Writes rows under a header; the file is built in memory and written in
/// one piece.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e.into_error(),
    })?;
    fs::write(path, bytes).map_err(io_err(path))
}

pub fn trajectory_rows(records: &[StrideRecord]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for r in records {
        for s in &r.samples {
            rows.push(vec![
                r.step_index.to_string(),
                r.stance_side.as_str().to_string(),
                f(s.t),
                f(s.time_in_step),
                f(s.com.x),
                f(s.com.y),
                f(s.com.z),
                f(s.com_velocity.x),
                f(s.com_velocity.y),
                f(s.com_velocity.z),
                f(s.height),
                f(s.height_accel),
                f(s.com_offset.x),
                f(s.com_offset.y),
                f(s.cop_offset.x),
                f(s.cop_offset.y),
                f(s.momentum.x),
                f(s.momentum.y),
                f(s.leg_length),
                f(s.leg_rate),
                s.leg_stage.as_str().to_string(),
                f(s.swing_foot.x),
                f(s.swing_foot.y),
                f(s.swing_foot.z),
                f(s.target.x),
                f(s.target.y),
            ]);
        }
    }
    rows
}

fn annotation_text(a: &Annotation) -> String {
    match a {
        Annotation::Push { t, impulse } => format!("push@{}:{}/{}", f(*t), f(impulse.x), f(impulse.y)),
        Annotation::TerrainDrop { height } => format!("drop:{}", f(*height)),
        Annotation::Clamped => "clamped".into(),
        Annotation::Extended { extra } => format!("extended:{}", f(*extra)),
        Annotation::HeightInvalid { duration } => format!("height_invalid:{}", f(*duration)),
    }
}

pub fn stride_rows(records: &[StrideRecord], cfg: &SimConfig, fall: Option<&FallEvent>) -> Vec<Vec<String>> {
    records
        .iter()
        .map(|r| {
            let fell = fall.is_some_and(|e| e.step_index == r.step_index);
            let status = if fell { "fell" } else { "complete" };
            let clamped = r.annotations.iter().any(|a| matches!(a, Annotation::Clamped));
            let notes: Vec<String> = r.annotations.iter().map(annotation_text).collect();
            let mut row = vec![r.step_index.to_string(), r.stance_side.as_str().into(), status.into(), f(r.duration())];
            match stride_metrics(r, &cfg.gait, cfg.work) {
                Ok(m) => row.extend([
                    f(m.positive_work),
                    f(m.negative_work),
                    f(m.avg_forward_velocity),
                    f(m.avg_lateral_velocity),
                    f(m.step_length),
                    f(m.step_width),
                    f(m.max_abs_height_accel),
                    f(m.cop_travel),
                ]),
                Err(_) => row.extend(std::iter::repeat_n(String::new(), 8)),
            }
            row.push(clamped.to_string());
            row.push(notes.join(";"));
            row
        })
        .collect()
}

pub fn metrics_columns(m: &StrideMetrics) -> [String; 8] {
    [
        m.step_index.to_string(),
        f(m.positive_work),
        f(m.negative_work),
        f(m.avg_forward_velocity),
        f(m.step_length),
        f(m.step_width),
        f(m.max_abs_height_accel),
        f(m.duration),
    ]
}

pub fn ab_rows(r: &AbReport) -> Vec<Vec<String>> {
    let (on, off) = (&r.with_rolling, &r.without_rolling);
    vec![
        vec!["positive_work".into(), f(on.positive_work), f(off.positive_work), f(r.positive_reduction())],
        vec!["negative_work".into(), f(on.negative_work), f(off.negative_work), f(r.negative_reduction())],
        vec!["mean_forward_velocity".into(), f(r.speed_with), f(r.speed_without), String::new()],
        vec!["median_step".into(), on.step_index.to_string(), off.step_index.to_string(), String::new()],
        vec![
            "max_abs_height_accel".into(),
            f(on.max_abs_height_accel),
            f(off.max_abs_height_accel),
            String::new(),
        ],
    ]
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FallJson {
    pub step_index: usize,
    pub time: f64,
    pub reason: String,
    pub detail: String,
}

impl From<&FallEvent> for FallJson {
    fn from(e: &FallEvent) -> Self {
        let reason = match e.reason {
            FallReason::ReachExceeded { .. } => "reach_exceeded",
            FallReason::HeightInvalid { .. } => "height_invalid",
            FallReason::TouchdownTimeout { .. } => "touchdown_timeout",
            FallReason::NonFinite => "non_finite",
        };
        FallJson {
            step_index: e.step_index,
            time: e.time,
            reason: reason.into(),
            detail: e.to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub core_version: String,
    pub csv_schema_version: u32,
    pub command: String,
    pub config_hash: String,
    pub scenario: String,
    pub seed: u64,
    pub files: Vec<PathBuf>,
    pub wall_time_s: f64,
    pub completed: bool,
    pub steps: usize,
    pub falls: Vec<FallJson>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &SimConfig) -> Self {
        RunManifest {
            artifact: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: quickster_core::VERSION.into(),
            csv_schema_version: CSV_SCHEMA_VERSION,
            command: command.into(),
            config_hash: crate::config::config_hash(cfg),
            scenario: cfg.scenario.name.clone(),
            seed: cfg.seed,
            files: Vec::new(),
            wall_time_s: 0.0,
            completed: true,
            steps: 0,
            falls: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(self).map_err(|e| CliError::Io {
            path: path.clone(),
            source: e.into(),
        })?;
        text.push('\n');
        let mut file = fs::File::create(&path).map_err(io_err(&path))?;
        file.write_all(text.as_bytes()).map_err(io_err(&path))?;
        Ok(path)
    }
}
