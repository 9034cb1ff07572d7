//! Plain-text key/value configuration.
//!
//! ```text
//! # comments run to end of line
//! [model]
//! W.kind = quadratic
//! W.c = 1.0
//! V.fourier = [(0.5189, 2.3878), (0.2982, 1.6339)]
//!
//! [pulse]
//! tau = 100
//! kappa = 3
//!
//! [run]
//! command = sweep
//! rho_list = [8/13, 13/21]
//! tau_list = logspace(1, 8, 8)
//! output = sweep.csv
//! ```
//!
//! Outside any section keys must be fully qualified (`pulse.tau`, `run.output`,
//! `W.kind`, ...), which is also the layout of a bare model file.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::{DynamicsMode, IntegratorConfig};
use crate::error::{Error, Result};
use crate::numtheory::RhoInput;
use crate::potentials::{InteractionPotential, ModelSpec, PulseSpec, SitePotential};

use super::speed::SpeedSettings;

pub const DEFAULT_TAU: f64 = 100.0;
pub const DEFAULT_KAPPA: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Speed,
    Sweep,
    Bound,
    Cfrac,
    Verify,
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "simulate" => Command::Simulate,
            "speed" => Command::Speed,
            "sweep" => Command::Sweep,
            "bound" => Command::Bound,
            "cfrac" => Command::Cfrac,
            "verify" => Command::Verify,
            other => return Err(Error::Config(format!("unknown command `{other}`"))),
        })
    }
}

/// Everything one harness invocation needs.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub command: Command,
    pub model: ModelSpec,
    pub mode: DynamicsMode,
    pub rho_list: Vec<RhoInput>,
    pub tau_list: Vec<f64>,
    pub integrator: IntegratorConfig,
    pub speed: SpeedSettings,
    pub q_max: i64,
    pub grid_n: usize,
    pub workers: usize,
    pub periods: u64,
    pub samples_per_phase: usize,
    pub max_terms: usize,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub resume: Option<PathBuf>,
}

impl RunSpec {
    pub fn new(command: Command, model: ModelSpec) -> Self {
        RunSpec {
            command,
            model,
            mode: DynamicsMode::PulsatingPotential,
            rho_list: Vec::new(),
            tau_list: Vec::new(),
            integrator: default_integrator(),
            speed: SpeedSettings::default(),
            q_max: 233,
            grid_n: 4096,
            workers: 0,
            periods: 10,
            samples_per_phase: 16,
            max_terms: 40,
            output: None,
            summary: None,
            checkpoint: None,
            resume: None,
        }
    }

    /// Half periods to run: `tau_list` if given, else the model's own τ.
    pub fn taus(&self) -> Vec<f64> {
        if self.tau_list.is_empty() {
            vec![self.model.pulse.tau]
        } else {
            self.tau_list.clone()
        }
    }
}

/// Integrator settings used by the harness: the library default with the
/// settled-segment shortcut switched on.
pub fn default_integrator() -> IntegratorConfig {
    IntegratorConfig {
        settle_tol: 1e-11,
        ..IntegratorConfig::default()
    }
}

/// A parsed right-hand side.
#[derive(Clone, Debug, PartialEq)]
enum Value {
    Scalar(String),
    List(Vec<String>),
}

struct Entry {
    key: String,
    value: Value,
    line: usize,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Splits a bracketed list at top-level commas.
fn split_list(body: &str, line: usize) -> Result<Vec<String>> {
    let mut items = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for ch in body.chars() {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err(parse_error(line, "unbalanced `)`"));
                }
                cur.push(ch);
            }
            ',' if depth == 0 => {
                items.push(cur.trim().to_string());
                cur.clear();
            }
            _ => cur.push(ch),
        }
    }
    if depth != 0 {
        return Err(parse_error(line, "unbalanced `(`"));
    }
    if !cur.trim().is_empty() {
        items.push(cur.trim().to_string());
    }
    if items.iter().any(|s| s.is_empty()) {
        return Err(parse_error(line, "empty list item"));
    }
    Ok(items)
}

fn parse_value(raw: &str, line: usize) -> Result<Value> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(parse_error(line, "missing value"));
    }
    if let Some(rest) = raw.strip_prefix('[') {
        let body = rest
            .strip_suffix(']')
            .ok_or_else(|| parse_error(line, "list is missing its closing `]`"))?;
        return Ok(Value::List(split_list(body, line)?));
    }
    if let Some(args) = raw
        .strip_prefix("logspace(")
        .and_then(|r| r.strip_suffix(')'))
    {
        let parts = split_list(args, line)?;
        if parts.len() != 3 {
            return Err(parse_error(line, "logspace takes (start_exp, stop_exp, count)"));
        }
        let a: f64 = parse_num(&parts[0], line)?;
        let b: f64 = parse_num(&parts[1], line)?;
        let n: usize = parts[2]
            .parse()
            .map_err(|_| parse_error(line, format!("bad count `{}`", parts[2])))?;
        if n < 1 {
            return Err(parse_error(line, "logspace count must be at least 1"));
        }
        let items = (0..n)
            .map(|i| {
                let e = if n == 1 {
                    a
                } else {
                    a + (b - a) * i as f64 / (n - 1) as f64
                };
                format!("{:e}", 10f64.powf(e))
            })
            .collect();
        return Ok(Value::List(items));
    }
    let unquoted = raw
        .strip_prefix('"')
        .and_then(|r| r.strip_suffix('"'))
        .unwrap_or(raw);
    Ok(Value::Scalar(unquoted.to_string()))
}

fn parse_num<T: FromStr>(s: &str, line: usize) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_error(line, format!("cannot parse number `{}`", s.trim())))
}

fn tokenize(text: &str) -> Result<Vec<Entry>> {
    let mut section: Option<&'static str> = None;
    let mut entries = Vec::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            if !name.contains('=') {
                section = Some(match name.trim() {
                    "model" => "model",
                    "pulse" => "pulse",
                    "run" => "run",
                    other => {
                        return Err(parse_error(line, format!("unknown section `[{other}]`")))
                    }
                });
                continue;
            }
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| parse_error(line, format!("expected `key = value`, got `{content}`")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(parse_error(line, "missing key"));
        }
        let key = match section {
            Some("pulse") if !key.contains('.') => format!("pulse.{key}"),
            Some("run") if !key.contains('.') => format!("run.{key}"),
            _ => key.to_string(),
        };
        entries.push(Entry {
            key,
            value: parse_value(value, line)?,
            line,
        });
    }
    Ok(entries)
}

fn scalar(e: &Entry) -> Result<&str> {
    match &e.value {
        Value::Scalar(s) => Ok(s),
        Value::List(_) => Err(parse_error(e.line, format!("`{}` takes a single value", e.key))),
    }
}

fn list(e: &Entry) -> Result<&[String]> {
    match &e.value {
        Value::List(v) => Ok(v),
        Value::Scalar(_) => Err(parse_error(e.line, format!("`{}` takes a list `[...]`", e.key))),
    }
}

fn num<T: FromStr>(e: &Entry) -> Result<T> {
    parse_num(scalar(e)?, e.line)
}

fn fourier_pair(item: &str, line: usize) -> Result<(f64, f64)> {
    let body = item
        .trim()
        .strip_prefix('(')
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| parse_error(line, format!("expected `(amplitude, phase)`, got `{item}`")))?;
    let (a, b) = body
        .split_once(',')
        .ok_or_else(|| parse_error(line, format!("expected `(amplitude, phase)`, got `{item}`")))?;
    Ok((parse_num(a, line)?, parse_num(b, line)?))
}

#[derive(Default)]
struct ModelKeys {
    kind: Option<String>,
    c: Option<f64>,
    c2: Option<f64>,
    c4: Option<f64>,
    fourier: Option<Vec<(f64, f64)>>,
    tau: Option<f64>,
    kappa: Option<f64>,
}

impl ModelKeys {
    fn build(self) -> Result<ModelSpec> {
        let kind = self.kind.as_deref().unwrap_or("quadratic");
        let interaction = match kind {
            "quadratic" => {
                if self.c2.is_some() || self.c4.is_some() {
                    return Err(Error::Validation(
                        "W.c2 and W.c4 apply only to W.kind = quadratic_quartic".into(),
                    ));
                }
                InteractionPotential::quadratic(self.c.unwrap_or(1.0))?
            }
            "quadratic_quartic" => {
                if self.c.is_some() {
                    return Err(Error::Validation(
                        "W.c applies only to W.kind = quadratic".into(),
                    ));
                }
                InteractionPotential::quadratic_quartic(
                    self.c2.unwrap_or(1.0),
                    self.c4.unwrap_or(0.0),
                )?
            }
            other => return Err(Error::Validation(format!("unknown W.kind `{other}`"))),
        };
        let site = match self.fourier {
            Some(pairs) => SitePotential::from_pairs(&pairs)?,
            None => SitePotential::default_ratchet(),
        };
        let pulse = PulseSpec::new(
            self.tau.unwrap_or(DEFAULT_TAU),
            self.kappa.unwrap_or(DEFAULT_KAPPA),
        )?;
        ModelSpec::new(interaction, site, pulse)
    }
}

/// Applies one model key; returns false when the key is not a model key.
fn apply_model_key(m: &mut ModelKeys, e: &Entry) -> Result<bool> {
    match e.key.as_str() {
        "W.kind" => m.kind = Some(scalar(e)?.to_string()),
        "W.c" => m.c = Some(num(e)?),
        "W.c2" => m.c2 = Some(num(e)?),
        "W.c4" => m.c4 = Some(num(e)?),
        "V.fourier" => {
            m.fourier = Some(
                list(e)?
                    .iter()
                    .map(|item| fourier_pair(item, e.line))
                    .collect::<Result<_>>()?,
            )
        }
        "pulse.tau" => m.tau = Some(num(e)?),
        "pulse.kappa" => m.kappa = Some(num(e)?),
        _ => return Ok(false),
    }
    Ok(true)
}

/// Parses a model file; `run.*` keys are tolerated and ignored.
pub fn parse_model(text: &str) -> Result<ModelSpec> {
    let mut m = ModelKeys::default();
    for e in tokenize(text)? {
        if !apply_model_key(&mut m, &e)? && !e.key.starts_with("run.") {
            return Err(Error::UnknownKey {
                key: e.key,
                line: e.line,
            });
        }
    }
    m.build()
}

pub fn load_model(path: &Path) -> Result<ModelSpec> {
    parse_model(&std::fs::read_to_string(path)?)
}

fn path_value(e: &Entry, base: Option<&Path>) -> Result<PathBuf> {
    let p = PathBuf::from(scalar(e)?);
    Ok(match base {
        Some(dir) if p.is_relative() => dir.join(p),
        _ => p,
    })
}

/// Parses a full run configuration. Relative output paths resolve against `base`.
pub fn parse_config(text: &str, base: Option<&Path>) -> Result<RunSpec> {
    let entries = tokenize(text)?;
    let mut m = ModelKeys::default();
    let mut command = None;
    let mut run_entries = Vec::new();
    for e in entries {
        if apply_model_key(&mut m, &e)? {
            continue;
        }
        if e.key == "run.command" {
            command = Some(scalar(&e)?.parse::<Command>()?);
            continue;
        }
        if e.key.starts_with("run.") {
            run_entries.push(e);
            continue;
        }
        return Err(Error::UnknownKey {
            key: e.key,
            line: e.line,
        });
    }
    let command = command.ok_or_else(|| Error::Config("missing `command` in [run]".into()))?;
    let mut spec = RunSpec::new(command, m.build()?);
    for e in run_entries {
        let key = &e.key["run.".len()..];
        match key {
            "rho" => spec.rho_list = vec![scalar(&e)?.parse()?],
            "rho_list" => {
                spec.rho_list = list(&e)?
                    .iter()
                    .map(|s| s.parse())
                    .collect::<Result<_>>()?
            }
            "tau_list" => {
                spec.tau_list = list(&e)?
                    .iter()
                    .map(|s| parse_num(s, e.line))
                    .collect::<Result<_>>()?
            }
            "mode" => spec.mode = scalar(&e)?.parse()?,
            "dt_max" => spec.integrator.dt_max = num(&e)?,
            "safety" => spec.integrator.safety = num(&e)?,
            "settle_tol" => spec.integrator.settle_tol = num(&e)?,
            "max_steps" => spec.integrator.max_steps_per_segment = num(&e)?,
            "transient_periods" => spec.speed.transient_periods = num(&e)?,
            "max_periods" => spec.speed.max_periods = num(&e)?,
            "window" => spec.speed.window = num(&e)?,
            "speed_tol" => spec.speed.speed_tol = num(&e)?,
            "q_max" => spec.q_max = num(&e)?,
            "grid_n" => spec.grid_n = num(&e)?,
            "workers" => spec.workers = num(&e)?,
            "periods" => spec.periods = num(&e)?,
            "samples" => spec.samples_per_phase = num(&e)?,
            "max_terms" => spec.max_terms = num(&e)?,
            "output" => spec.output = Some(path_value(&e, base)?),
            "summary" => spec.summary = Some(path_value(&e, base)?),
            "checkpoint" => spec.checkpoint = Some(path_value(&e, base)?),
            "resume" => spec.resume = Some(path_value(&e, base)?),
            _ => {
                return Err(Error::UnknownKey {
                    key: e.key.clone(),
                    line: e.line,
                })
            }
        }
    }
    spec.integrator.validate()?;
    spec.speed.validate()?;
    if spec.tau_list.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::Config("tau_list entries must be positive".into()));
    }
    if spec.q_max < 1 {
        return Err(Error::Config("q_max must be at least 1".into()));
    }
    Ok(spec)
}

pub fn load_config(path: &Path) -> Result<RunSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, path.parent())
}
