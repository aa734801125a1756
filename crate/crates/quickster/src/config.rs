//! Flat, dotted-key TOML configuration.
//!
//! Every key lives under one of the sections `gait`, `leg`, `rolling`,
//! `sim`, `scenario` and `metrics`, written either as `[gait]` tables or as
//! dotted keys (`gait.T = 0.4`). Missing keys take the library defaults, so
//! an empty document is in-place stepping with every default.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use quickster_core::sim::{InitialCondition, MomentumTransfer, Push, TerrainDrop, VelocitySegment};
use quickster_core::{AlipState, Error as CoreError, Side, SimConfig, Vec2};
use sha2::{Digest, Sha256};
use toml::{Table, Value};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("{path}: expected {expected}, found {found}")]
    Type {
        path: String,
        expected: &'static str,
        found: String,
    },
    #[error("{path} = {value} violates {constraint}")]
    Constraint {
        path: String,
        constraint: String,
        value: f64,
    },
    #[error("unknown key {0}")]
    Unknown(String),
}

impl ConfigError {
    pub fn path(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax(_) => None,
            ConfigError::Type { path, .. } | ConfigError::Constraint { path, .. } | ConfigError::Unknown(path) => {
                Some(path)
            }
        }
    }
}

/// Unknown keys fail in strict mode and come back as warnings otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parsed {
    pub config: SimConfig,
    pub warnings: Vec<String>,
}

type Res<T> = Result<T, ConfigError>;

fn type_name(v: &Value) -> String {
    v.type_str().to_string()
}

struct Reader<'a> {
    prefix: String,
    table: &'a Table,
    seen: BTreeSet<&'a str>,
}

impl<'a> Reader<'a> {
    fn new(prefix: impl Into<String>, table: &'a Table) -> Self {
        Reader {
            prefix: prefix.into(),
            table,
            seen: BTreeSet::new(),
        }
    }

    fn path(&self, key: &str) -> String {
        format!("{}.{key}", self.prefix)
    }

    fn get(&mut self, key: &'a str) -> Option<&'a Value> {
        let v = self.table.get(key)?;
        self.seen.insert(key);
        Some(v)
    }

    fn f64(&mut self, key: &'a str, target: &mut f64) -> Res<()> {
        if let Some(v) = self.get(key) {
            *target = match v {
                Value::Float(x) => *x,
                Value::Integer(i) => *i as f64,
                other => return Err(self.mismatch(key, "a number", other)),
            };
        }
        Ok(())
    }

    fn usize(&mut self, key: &'a str, target: &mut usize) -> Res<()> {
        if let Some(v) = self.get(key) {
            *target = match v {
                Value::Integer(i) if *i >= 0 => *i as usize,
                other => return Err(self.mismatch(key, "a non-negative integer", other)),
            };
        }
        Ok(())
    }

    fn u64(&mut self, key: &'a str, target: &mut u64) -> Res<()> {
        let mut n = *target as usize;
        self.usize(key, &mut n)?;
        *target = n as u64;
        Ok(())
    }

    fn bool(&mut self, key: &'a str, target: &mut bool) -> Res<()> {
        if let Some(v) = self.get(key) {
            *target = match v {
                Value::Boolean(b) => *b,
                other => return Err(self.mismatch(key, "a boolean", other)),
            };
        }
        Ok(())
    }

    fn str(&mut self, key: &'a str) -> Res<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(other) => Err(self.mismatch(key, "a string", other)),
        }
    }

    fn array(&mut self, key: &'a str) -> Res<Option<&'a Vec<Value>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => Ok(Some(a)),
            Some(other) => Err(self.mismatch(key, "an array", other)),
        }
    }

    fn mismatch(&self, key: &str, expected: &'static str, found: &Value) -> ConfigError {
        ConfigError::Type {
            path: self.path(key),
            expected,
            found: type_name(found),
        }
    }

    fn finish(self, strictness: Strictness, warnings: &mut Vec<String>) -> Res<()> {
        for key in self.table.keys() {
            if !self.seen.contains(key.as_str()) {
                let path = self.path(key);
                match strictness {
                    Strictness::Strict => return Err(ConfigError::Unknown(path)),
                    Strictness::Lenient => warnings.push(format!("ignoring unknown key {path}")),
                }
            }
        }
        Ok(())
    }
}

fn section<'a>(root: &'a Table, name: &str) -> Res<Option<&'a Table>> {
    match root.get(name) {
        None => Ok(None),
        Some(Value::Table(t)) => Ok(Some(t)),
        Some(other) => Err(ConfigError::Type {
            path: name.to_string(),
            expected: "a table of keys",
            found: type_name(other),
        }),
    }
}

fn items<'a>(parent: &str, key: &str, list: &'a [Value]) -> Res<Vec<(String, &'a Table)>> {
    list.iter()
        .enumerate()
        .map(|(i, v)| {
            let path = format!("{parent}.{key}[{i}]");
            match v {
                Value::Table(t) => Ok((path, t)),
                other => Err(ConfigError::Type {
                    path,
                    expected: "an inline table",
                    found: type_name(other),
                }),
            }
        })
        .collect()
}

const SECTIONS: [&str; 6] = ["gait", "leg", "rolling", "sim", "scenario", "metrics"];

/// Parses a config document. Values are checked against the model's
/// constraints after parsing.
pub fn parse_config(text: &str, strictness: Strictness) -> Res<Parsed> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Syntax(e.to_string()))?;
    let mut warnings = Vec::new();
    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            match strictness {
                Strictness::Strict => return Err(ConfigError::Unknown(key.clone())),
                Strictness::Lenient => warnings.push(format!("ignoring unknown key {key}")),
            }
        }
    }
    let empty = Table::new();
    let mut cfg = SimConfig::default();

    let mut r = Reader::new("gait", section(&root, "gait")?.unwrap_or(&empty));
    let g = &mut cfg.gait;
    r.f64("m", &mut g.mass)?;
    r.f64("g", &mut g.gravity)?;
    r.f64("dz", &mut g.height)?;
    r.f64("T", &mut g.step_time)?;
    r.f64("lambda", &mut g.lambda)?;
    r.f64("mu", &mut g.step_width)?;
    r.finish(strictness, &mut warnings)?;

    let mut r = Reader::new("leg", section(&root, "leg")?.unwrap_or(&empty));
    let l = &mut cfg.leg;
    r.bool("enabled", &mut l.enabled)?;
    r.f64("l0", &mut l.l0)?;
    r.f64("l_max", &mut l.l_max)?;
    r.f64("a_str", &mut l.a_str)?;
    r.f64("a_cl", &mut l.a_cl)?;
    r.f64("beta", &mut l.beta)?;
    r.f64("d_trigger", &mut l.d_trigger)?;
    r.finish(strictness, &mut warnings)?;

    let mut r = Reader::new("rolling", section(&root, "rolling")?.unwrap_or(&empty));
    let rc = &mut cfg.rolling;
    r.bool("enabled", &mut rc.enabled)?;
    r.f64("alpha", &mut rc.alpha)?;
    r.f64("heel_extent", &mut rc.heel_extent)?;
    r.f64("toe_extent", &mut rc.toe_extent)?;
    r.f64("half_width", &mut rc.half_width)?;
    r.f64("heel_hold_fraction", &mut rc.heel_hold_fraction)?;
    r.finish(strictness, &mut warnings)?;

    let mut r = Reader::new("sim", section(&root, "sim")?.unwrap_or(&empty));
    r.f64("integrator_dt", &mut cfg.integrator_dt)?;
    r.f64("control_dt", &mut cfg.control_dt)?;
    r.usize("n_steps", &mut cfg.n_steps)?;
    r.u64("seed", &mut cfg.seed)?;
    r.f64("reach_factor", &mut cfg.reach_factor)?;
    r.f64("swing_clearance", &mut cfg.swing_clearance)?;
    r.f64("swing_descent_speed", &mut cfg.swing_descent_speed)?;
    r.f64("max_step_extension", &mut cfg.max_step_extension)?;
    r.f64("height_invalid_limit", &mut cfg.height_invalid_limit)?;
    r.f64("z_min", &mut cfg.z_min)?;
    if let Some(s) = r.str("momentum_transfer")? {
        cfg.momentum_transfer = match s {
            "continuity" => MomentumTransfer::Continuity,
            "exact" => MomentumTransfer::Exact,
            _ => return Err(choice(r.path("momentum_transfer"), "continuity | exact", s)),
        };
    }
    if let Some(s) = r.str("first_stance")? {
        cfg.first_stance = match s {
            "left" => Side::Left,
            "right" => Side::Right,
            _ => return Err(choice(r.path("first_stance"), "left | right", s)),
        };
    }
    if let Some(a) = r.array("initial_state")? {
        let path = r.path("initial_state");
        let v: Vec<f64> = a.iter().filter_map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64))).collect();
        if v.len() != 4 || a.len() != 4 {
            return Err(ConfigError::Type {
                path,
                expected: "[x, y, L_x, L_y] numbers",
                found: format!("array of {}", a.len()),
            });
        }
        cfg.initial = InitialCondition::State(AlipState::new(v[0], v[1], v[2], v[3]));
    }
    r.finish(strictness, &mut warnings)?;

    let mut r = Reader::new("scenario", section(&root, "scenario")?.unwrap_or(&empty));
    let sc = &mut cfg.scenario;
    if let Some(name) = r.str("name")? {
        sc.name = name.to_string();
    }
    r.f64("push_time_jitter", &mut sc.push_time_jitter)?;
    if let Some(list) = r.array("velocity")? {
        for (path, t) in items("scenario", "velocity", list)? {
            let mut seg = VelocitySegment {
                start: 0.0,
                velocity: Vec2::ZERO,
                yaw_rate: 0.0,
            };
            let mut ir = Reader::new(path, t);
            ir.f64("start", &mut seg.start)?;
            ir.f64("vx", &mut seg.velocity.x)?;
            ir.f64("vy", &mut seg.velocity.y)?;
            ir.f64("yaw_rate", &mut seg.yaw_rate)?;
            ir.finish(strictness, &mut warnings)?;
            sc.velocity_profile.push(seg);
        }
    }
    if let Some(list) = r.array("pushes")? {
        for (path, t) in items("scenario", "pushes", list)? {
            let mut p = Push {
                time: 0.0,
                impulse: Vec2::ZERO,
            };
            let mut ir = Reader::new(path, t);
            ir.f64("time", &mut p.time)?;
            ir.f64("dlx", &mut p.impulse.x)?;
            ir.f64("dly", &mut p.impulse.y)?;
            ir.finish(strictness, &mut warnings)?;
            sc.pushes.push(p);
        }
    }
    if let Some(list) = r.array("drops")? {
        for (path, t) in items("scenario", "drops", list)? {
            let mut d = TerrainDrop { step: 0, height: 0.0 };
            let mut ir = Reader::new(path, t);
            ir.usize("step", &mut d.step)?;
            ir.f64("height", &mut d.height)?;
            ir.finish(strictness, &mut warnings)?;
            sc.terrain_drops.push(d);
        }
    }
    r.finish(strictness, &mut warnings)?;

    let mut r = Reader::new("metrics", section(&root, "metrics")?.unwrap_or(&empty));
    r.bool("include_lateral", &mut cfg.work.include_lateral)?;
    r.finish(strictness, &mut warnings)?;

    check(&cfg)?;
    Ok(Parsed { config: cfg, warnings })
}

fn choice(path: String, expected: &'static str, found: &str) -> ConfigError {
    ConfigError::Type {
        path,
        expected,
        found: format!("\"{found}\""),
    }
}

/// Config key of a quantity named by the core validators.
fn key_of(what: &str) -> String {
    let key = match what {
        "mass" => "gait.m",
        "gravity" => "gait.g",
        "height" => "gait.dz",
        "step_time" => "gait.T",
        "lambda" => "gait.lambda",
        "step_width" => "gait.mu",
        "l0" | "l_max" | "a_str" | "a_cl" | "beta" | "d_trigger" => return format!("leg.{what}"),
        "alpha" | "heel_extent" | "toe_extent" | "half_width" | "heel_hold_fraction" => {
            return format!("rolling.{what}")
        }
        "push_time_jitter" => "scenario.push_time_jitter",
        "pushes.time" => "scenario.pushes.time",
        "pushes.impulse" => "scenario.pushes.dlx/dly",
        "terrain_drops.step" => "scenario.drops.step",
        "terrain_drops.height" => "scenario.drops.height",
        "velocity_profile.start" => "scenario.velocity.start",
        "velocity_profile" => "scenario.velocity",
        other => return format!("sim.{other}"),
    };
    key.to_string()
}

/// Validates a config and names the offending key on failure.
pub fn check(cfg: &SimConfig) -> Res<()> {
    cfg.validate().map_err(|e| match e {
        CoreError::Domain { what, constraint, value } => ConfigError::Constraint {
            path: key_of(what),
            constraint: constraint.to_string(),
            value,
        },
        other => ConfigError::Syntax(other.to_string()),
    })
}

fn num(x: f64) -> String {
    // Debug formatting is the shortest string that reads back exactly.
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:?}")
    }
}

/// Canonical text of a config: every key, fixed order, exact floats.
pub fn serialize(cfg: &SimConfig) -> String {
    let mut o = String::new();
    let g = &cfg.gait;
    for (k, v) in [
        ("m", g.mass),
        ("g", g.gravity),
        ("dz", g.height),
        ("T", g.step_time),
        ("lambda", g.lambda),
        ("mu", g.step_width),
    ] {
        writeln!(o, "gait.{k} = {}", num(v)).unwrap();
    }
    let l = &cfg.leg;
    writeln!(o, "leg.enabled = {}", l.enabled).unwrap();
    for (k, v) in [
        ("l0", l.l0),
        ("l_max", l.l_max),
        ("a_str", l.a_str),
        ("a_cl", l.a_cl),
        ("beta", l.beta),
        ("d_trigger", l.d_trigger),
    ] {
        writeln!(o, "leg.{k} = {}", num(v)).unwrap();
    }
    let r = &cfg.rolling;
    writeln!(o, "rolling.enabled = {}", r.enabled).unwrap();
    for (k, v) in [
        ("alpha", r.alpha),
        ("heel_extent", r.heel_extent),
        ("toe_extent", r.toe_extent),
        ("half_width", r.half_width),
        ("heel_hold_fraction", r.heel_hold_fraction),
    ] {
        writeln!(o, "rolling.{k} = {}", num(v)).unwrap();
    }
    for (k, v) in [("integrator_dt", cfg.integrator_dt), ("control_dt", cfg.control_dt)] {
        writeln!(o, "sim.{k} = {}", num(v)).unwrap();
    }
    writeln!(o, "sim.n_steps = {}", cfg.n_steps).unwrap();
    writeln!(o, "sim.seed = {}", cfg.seed).unwrap();
    for (k, v) in [
        ("reach_factor", cfg.reach_factor),
        ("swing_clearance", cfg.swing_clearance),
        ("swing_descent_speed", cfg.swing_descent_speed),
        ("max_step_extension", cfg.max_step_extension),
        ("height_invalid_limit", cfg.height_invalid_limit),
        ("z_min", cfg.z_min),
    ] {
        writeln!(o, "sim.{k} = {}", num(v)).unwrap();
    }
    let mt = match cfg.momentum_transfer {
        MomentumTransfer::Continuity => "continuity",
        MomentumTransfer::Exact => "exact",
    };
    writeln!(o, "sim.momentum_transfer = \"{mt}\"").unwrap();
    writeln!(o, "sim.first_stance = \"{}\"", cfg.first_stance.as_str()).unwrap();
    if let InitialCondition::State(s) = cfg.initial {
        writeln!(o, "sim.initial_state = [{}, {}, {}, {}]", num(s.x), num(s.y), num(s.lx), num(s.ly)).unwrap();
    }
    let sc = &cfg.scenario;
    writeln!(o, "scenario.name = {}", Value::String(sc.name.clone())).unwrap();
    writeln!(o, "scenario.push_time_jitter = {}", num(sc.push_time_jitter)).unwrap();
    let list = |items: Vec<String>| format!("[{}]", items.join(", "));
    let v: Vec<String> = sc
        .velocity_profile
        .iter()
        .map(|s| {
            format!(
                "{{ start = {}, vx = {}, vy = {}, yaw_rate = {} }}",
                num(s.start),
                num(s.velocity.x),
                num(s.velocity.y),
                num(s.yaw_rate)
            )
        })
        .collect();
    writeln!(o, "scenario.velocity = {}", list(v)).unwrap();
    let p: Vec<String> = sc
        .pushes
        .iter()
        .map(|p| format!("{{ time = {}, dlx = {}, dly = {} }}", num(p.time), num(p.impulse.x), num(p.impulse.y)))
        .collect();
    writeln!(o, "scenario.pushes = {}", list(p)).unwrap();
    let d: Vec<String> = sc
        .terrain_drops
        .iter()
        .map(|d| format!("{{ step = {}, height = {} }}", d.step, num(d.height)))
        .collect();
    writeln!(o, "scenario.drops = {}", list(d)).unwrap();
    writeln!(o, "metrics.include_lateral = {}", cfg.work.include_lateral).unwrap();
    o
}

/// SHA-256 of the canonical text, hex encoded.
pub fn config_hash(cfg: &SimConfig) -> String {
    let digest = Sha256::digest(serialize(cfg).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
