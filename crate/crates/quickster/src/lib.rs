//! File formats and commands for the `quickster` binary.
//!
//! Each command writes its CSV files and a `manifest.json` into an output
//! directory and reports the exit status the binary should use.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use quickster_core::analysis::{
    ab_rolling_arms, at_speed, push_direction, push_recovery, recoverable_impulse, steady_state, AbReport, PushProtocol,
};
use quickster_core::sim::run_scenario;
use quickster_core::SimConfig;
use rayon::prelude::*;

pub mod config;
pub mod output;

use config::{check, parse_config, ConfigError, Strictness};
use output::{f, write_csv, FallJson, RunManifest};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_FALL: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Model(#[from] quickster_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            _ => EXIT_CONFIG,
        }
    }
}

/// Command-line values that replace config entries.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub rolling: Option<bool>,
    pub lambda: Option<f64>,
    /// Constant forward speed for the whole run.
    pub speed: Option<f64>,
}

pub struct Loaded {
    pub config: SimConfig,
    pub warnings: Vec<String>,
}

/// Reads the config (defaults when `path` is `None`) and applies overrides.
pub fn load_config(path: Option<&Path>, strictness: Strictness, o: Overrides) -> Result<Loaded, CliError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|source| CliError::Io {
            path: p.to_path_buf(),
            source,
        })?,
        None => String::new(),
    };
    let parsed = parse_config(&text, strictness)?;
    let mut cfg = parsed.config;
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(r) = o.rolling {
        cfg.rolling.enabled = r;
    }
    if let Some(l) = o.lambda {
        cfg.gait.lambda = l;
    }
    if let Some(v) = o.speed {
        cfg = at_speed(&cfg, v);
    }
    check(&cfg)?;
    Ok(Loaded {
        config: cfg,
        warnings: parsed.warnings,
    })
}

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub manifest: RunManifest,
    pub exit_code: i32,
    /// Human-readable lines for standard output.
    pub report: Vec<String>,
}

fn prepare(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn finish(mut manifest: RunManifest, dir: &Path, started: Instant, report: Vec<String>) -> Result<Outcome, CliError> {
    manifest.wall_time_s = started.elapsed().as_secs_f64();
    manifest.write(dir)?;
    let exit_code = if manifest.completed { EXIT_OK } else { EXIT_FALL };
    Ok(Outcome {
        manifest,
        exit_code,
        report,
    })
}

/// One scenario: `trajectory.csv`, `strides.csv` and `manifest.json`.
pub fn cmd_run(cfg: &SimConfig, dir: &Path) -> Result<Outcome, CliError> {
    let started = Instant::now();
    prepare(dir)?;
    let run = run_scenario(cfg)?;
    write_csv(&dir.join("trajectory.csv"), &output::TRAJECTORY_COLUMNS, &output::trajectory_rows(&run.records))?;
    write_csv(
        &dir.join("strides.csv"),
        &output::STRIDE_COLUMNS,
        &output::stride_rows(&run.records, cfg, run.fall.as_ref()),
    )?;
    let mut m = RunManifest::new("run", cfg);
    m.files = vec!["trajectory.csv".into(), "strides.csv".into()];
    m.steps = run.records.len();
    m.completed = run.completed();
    m.falls = run.fall.iter().map(FallJson::from).collect();
    let report = match &run.fall {
        None => vec![format!("completed {} steps", run.records.len())],
        Some(e) => vec![e.to_string()],
    };
    finish(m, dir, started, report)
}

pub const DEFAULT_SPEEDS: [f64; 3] = [0.3, 0.5, 0.7];

/// Constant-speed runs, one `sweep.csv` row per speed with the median
/// steady-state stride. A fall marks its row and the sweep continues.
pub fn cmd_sweep(cfg: &SimConfig, speeds: &[f64], dir: &Path) -> Result<Outcome, CliError> {
    if speeds.is_empty() {
        return Err(CliError::Usage("sweep needs at least one speed".into()));
    }
    let started = Instant::now();
    prepare(dir)?;
    let results: Vec<_> = speeds
        .par_iter()
        .map(|&v| steady_state(&at_speed(cfg, v)).map(|s| (v, s)))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let mut report = Vec::new();
    let mut m = RunManifest::new("sweep", cfg);
    for (v, s) in &results {
        match (&s.summary, s.fall()) {
            (Some(sum), _) => {
                let med = sum.median();
                let err = 100.0 * (sum.mean_forward_velocity - v) / v;
                let mut row = vec![f(*v), "complete".into(), String::new(), f(sum.mean_forward_velocity), f(err)];
                row.extend(output::metrics_columns(med));
                rows.push(row);
                report.push(format!("v = {v:.3} m/s: mean {:.4} m/s ({err:+.2}%)", sum.mean_forward_velocity));
            }
            (None, fall) => {
                let e = fall.expect("run without statistics has fallen");
                let mut row = vec![f(*v), "fell".into(), e.step_index.to_string()];
                row.extend(std::iter::repeat_n(String::new(), output::SWEEP_COLUMNS.len() - 3));
                rows.push(row);
                report.push(format!("v = {v:.3} m/s: {e}"));
                m.completed = false;
                m.falls.push(FallJson::from(&e));
            }
        }
        m.steps += s.run.records.len();
    }
    write_csv(&dir.join("sweep.csv"), &output::SWEEP_COLUMNS, &rows)?;
    m.files = vec!["sweep.csv".into()];
    finish(m, dir, started, report)
}

/// The same scenario with rolling contact on and off, `ab_rolling.csv`.
pub fn cmd_ab_rolling(cfg: &SimConfig, dir: &Path) -> Result<Outcome, CliError> {
    let started = Instant::now();
    prepare(dir)?;
    let (on, off) = ab_rolling_arms(cfg)?;
    let mut m = RunManifest::new("ab-rolling", cfg);
    m.steps = 2 * cfg.n_steps;
    let mut report = Vec::new();
    match (on, off) {
        (Ok(a), Ok(b)) => {
            let r = AbReport {
                with_rolling: *a.median(),
                without_rolling: *b.median(),
                speed_with: a.mean_forward_velocity,
                speed_without: b.mean_forward_velocity,
            };
            write_csv(&dir.join("ab_rolling.csv"), &output::AB_COLUMNS, &output::ab_rows(&r))?;
            m.files = vec!["ab_rolling.csv".into()];
            report.push(format!(
                "positive work {:.4} -> {:.4} J ({:+.2}% reduction)",
                r.without_rolling.positive_work,
                r.with_rolling.positive_work,
                r.positive_reduction()
            ));
            report.push(format!(
                "negative work {:.4} -> {:.4} J ({:+.2}% reduction)",
                r.without_rolling.negative_work,
                r.with_rolling.negative_work,
                r.negative_reduction()
            ));
            report.push(format!("mean speed {:.4} -> {:.4} m/s", r.speed_without, r.speed_with));
        }
        (a, b) => {
            m.completed = false;
            for (arm, res) in [("rolling on", a), ("rolling off", b)] {
                if let Err(e) = res {
                    report.push(format!("{arm}: {e}"));
                    m.falls.push(FallJson::from(&e));
                }
            }
        }
    }
    finish(m, dir, started, report)
}

/// Push-grid settings beyond the push protocol itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushGrid {
    pub directions: usize,
    /// Test magnitude as a fraction of the recoverable bound.
    pub fraction: f64,
    /// Steps after the first post-push touchdown at which recovery is read.
    pub recovery_steps: usize,
    pub protocol: PushProtocol,
}

impl Default for PushGrid {
    fn default() -> Self {
        PushGrid {
            directions: 8,
            fraction: 0.5,
            recovery_steps: 4,
            protocol: PushProtocol::default(),
        }
    }
}

/// Bisects the largest recoverable impulse in each direction, then
/// measures recovery from `fraction` of it. Writes `push_grid.csv`.
pub fn cmd_push_grid(cfg: &SimConfig, grid: &PushGrid, dir: &Path) -> Result<Outcome, CliError> {
    if grid.directions == 0 {
        return Err(CliError::Usage("push-grid needs at least one direction".into()));
    }
    if grid.recovery_steps > grid.protocol.horizon {
        return Err(CliError::Usage("recovery steps exceed the simulated horizon".into()));
    }
    let started = Instant::now();
    prepare(dir)?;
    let rows: Vec<Vec<String>> = (0..grid.directions)
        .into_par_iter()
        .map(|i| -> Result<Vec<String>, CliError> {
            let d = push_direction(i, grid.directions);
            let bound = recoverable_impulse(cfg, d, &grid.protocol)?;
            let test = grid.fraction * bound.recoverable;
            let rec = push_recovery(cfg, d * test, &grid.protocol)?;
            let k = grid.recovery_steps;
            let angle = std::f64::consts::TAU * i as f64 / grid.directions as f64;
            let mut row = vec![i.to_string(), f(angle), f(d.x), f(d.y), f(bound.recoverable), f(bound.falls), f(test)];
            if rec.fall.is_none() {
                row.extend([
                    f(rec.deviation[0]),
                    f(rec.deviation[k]),
                    f(rec.relative_to_push(k)),
                    f(rec.relative_to_orbit(k)),
                ]);
            } else {
                row.extend(std::iter::repeat_n(String::new(), 4));
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    write_csv(&dir.join("push_grid.csv"), &output::PUSH_GRID_COLUMNS, &rows)?;
    let report = rows
        .iter()
        .map(|r| format!("direction {}: recoverable {} kg m^2/s", r[0], r[4]))
        .collect();
    let mut m = RunManifest::new("push-grid", cfg);
    m.files = vec!["push_grid.csv".into()];
    finish(m, dir, started, report)
}
