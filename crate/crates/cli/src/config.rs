//! Run configuration: `[section]` headers, `key = value` lines, `#` comments,
//! comma-separated lists. Numbers may be written as fractions (`h = 1/64`).

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::ValueEnum;
use hesseig::grid::DomainDescriptor;
use hesseig::problem::{ProblemSpec, SolverParams};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },

    #[error("{key} ({origin}): {msg}")]
    Semantic { key: String, origin: String, msg: String },

    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
}

impl ConfigError {
    pub fn line(&self) -> Option<usize> {
        match self {
            ConfigError::Syntax { line, .. } => Some(*line),
            ConfigError::Semantic { origin, .. } => origin.strip_prefix("line ").and_then(|l| l.parse().ok()),
            ConfigError::Missing(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Eigen,
    Oracle,
    Sweep,
    Verify,
    Flow,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Eigen => "eigen",
            Mode::Oracle => "oracle",
            Mode::Sweep => "sweep",
            Mode::Verify => "verify",
            Mode::Flow => "flow",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Binary,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProblemBlock {
    pub n: usize,
    pub k: usize,
    pub s: f64,
    pub domain: DomainDescriptor,
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolverBlock {
    pub h: Option<f64>,
    pub jobs: usize,
    pub radial_tol: f64,
    #[serde(flatten)]
    pub params: SolverParams,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputBlock {
    pub dir: PathBuf,
    pub formats: Vec<Format>,
    pub snapshot: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowBlock {
    pub m: f64,
    pub p: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub problem: ProblemBlock,
    pub solver: SolverBlock,
    pub outputs: OutputBlock,
    pub flow: FlowBlock,
}

pub const DEFAULT_SWEEP: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

const KNOWN: &[&str] = &[
    "run.mode",
    "problem.n",
    "problem.k",
    "problem.s",
    "problem.domain",
    "problem.delta",
    "solver.h",
    "solver.jobs",
    "solver.radial_tol",
    "solver.picard_max",
    "solver.picard_tol",
    "solver.blowup_cap",
    "solver.doubling_window",
    "solver.ratio_window",
    "solver.lambda_tol",
    "solver.lambda_ceiling",
    "solver.inner_max",
    "solver.inner_tol",
    "solver.power_tol",
    "outputs.dir",
    "outputs.formats",
    "outputs.snapshot",
    "flow.m",
    "flow.p",
    "flow.t_end",
];

const REQUIRED: &[&str] = &["problem.n", "problem.k", "problem.s"];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: String,
}

/// Raw `section.key → value` pairs, before typing.
#[derive(Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut section: Option<String> = None;
        for (i, full) in text.lines().enumerate() {
            let line = i + 1;
            let body = full.split('#').next().unwrap_or("");
            let indent = body.len() - body.trim_start().len();
            let t = body.trim();
            if t.is_empty() {
                continue;
            }
            let syntax = |column: usize, msg: &str| ConfigError::Syntax { line, column, msg: msg.into() };
            if let Some(rest) = t.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(syntax(indent + t.len() + 1, "expected ']' to close the section header"));
                };
                let name = name.trim();
                if !is_ident(name) {
                    return Err(syntax(indent + 2, "section name must be letters, digits or '_'"));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some(eq) = t.find('=') else {
                return Err(syntax(indent + t.len() + 1, "expected '=' after the key"));
            };
            let key = t[..eq].trim();
            if !is_ident(key) {
                return Err(syntax(indent + 1, "key must be letters, digits or '_'"));
            }
            let value = t[eq + 1..].trim();
            if value.is_empty() {
                return Err(syntax(indent + eq + 2, "missing value"));
            }
            let Some(sec) = &section else {
                return Err(syntax(indent + 1, "key outside of any [section]"));
            };
            let full_key = format!("{sec}.{key}");
            let origin = format!("line {line}");
            if let Some(prev) = raw.entries.get(&full_key) {
                return Err(ConfigError::Semantic { key: full_key, origin, msg: format!("duplicate key, first set at {}", prev.origin) });
            }
            raw.entries.insert(full_key, Entry { value: value.to_string(), origin });
        }
        Ok(raw)
    }

    /// Applies a `section.key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let origin = format!("--set {assignment}");
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(ConfigError::Semantic { key: assignment.into(), origin, msg: "expected section.key=value".into() });
        };
        let (key, value) = (key.trim(), value.trim());
        match key.split_once('.') {
            Some((s, k)) if is_ident(s) && is_ident(k) && !value.is_empty() => {
                self.entries.insert(key.to_string(), Entry { value: value.to_string(), origin });
                Ok(())
            }
            _ => Err(ConfigError::Semantic { key: key.into(), origin, msg: "expected section.key=value".into() }),
        }
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        for (key, e) in &self.entries {
            if !KNOWN.contains(&key.as_str()) {
                return Err(ConfigError::Semantic { key: key.clone(), origin: e.origin.clone(), msg: "unknown key".into() });
            }
        }
        let missing: Vec<String> = REQUIRED.iter().filter(|k| !self.entries.contains_key(**k)).map(|k| k.to_string()).collect();
        if !missing.is_empty() {
            return Err(ConfigError::Missing(missing));
        }
        let d = SolverParams::default();
        let mode = self.get("run.mode", parse_mode)?;
        let n: usize = self.req("problem.n", parse_count)?;
        let k: usize = self.req("problem.k", parse_count)?;
        let s = self.req("problem.s", parse_number)?;
        let domain = self.get("problem.domain", parse_domain)?.unwrap_or(DomainDescriptor::Disk { radius: 1.0 });
        let delta = match self.get("problem.delta", |v| list(v, parse_number))? {
            Some(v) => v,
            None if mode == Some(Mode::Sweep) => DEFAULT_SWEEP.to_vec(),
            None => vec![0.0],
        };
        let params = SolverParams {
            picard_max: self.get("solver.picard_max", parse_count)?.unwrap_or(d.picard_max),
            picard_tol: self.get("solver.picard_tol", parse_positive)?.unwrap_or(d.picard_tol),
            blowup_cap: self.get("solver.blowup_cap", parse_positive)?.unwrap_or(d.blowup_cap),
            doubling_window: self.get("solver.doubling_window", parse_count)?.unwrap_or(d.doubling_window),
            ratio_window: self.get("solver.ratio_window", parse_count)?.unwrap_or(d.ratio_window),
            lambda_tol: self.get("solver.lambda_tol", parse_positive)?.unwrap_or(d.lambda_tol),
            lambda_ceiling: self.get("solver.lambda_ceiling", parse_positive)?.unwrap_or(d.lambda_ceiling),
            inner_max: self.get("solver.inner_max", parse_count)?.unwrap_or(d.inner_max),
            inner_tol: self.get("solver.inner_tol", parse_positive)?.unwrap_or(d.inner_tol),
            power_tol: self.get("solver.power_tol", parse_positive)?.unwrap_or(d.power_tol),
        };
        let cfg = RunConfig {
            mode,
            problem: ProblemBlock { n, k, s, domain, delta },
            solver: SolverBlock {
                h: self.get("solver.h", parse_positive)?,
                jobs: self.get("solver.jobs", parse_count)?.unwrap_or(1),
                radial_tol: self.get("solver.radial_tol", parse_positive)?.unwrap_or(1e-10),
                params,
            },
            outputs: OutputBlock {
                dir: self.get("outputs.dir", |v| Ok(PathBuf::from(v)))?.unwrap_or_else(|| PathBuf::from("out")),
                formats: self.get("outputs.formats", |v| list(v, parse_format))?.unwrap_or_else(|| vec![Format::Csv, Format::Json, Format::Binary]),
                snapshot: self.get("outputs.snapshot", |v| Ok(PathBuf::from(v)))?,
            },
            flow: FlowBlock {
                m: self.get("flow.m", parse_number)?.unwrap_or(10.0),
                p: self.get("flow.p", parse_number)?.unwrap_or(0.5),
                t_end: self.get("flow.t_end", parse_positive)?.unwrap_or(1.0),
            },
        };
        self.check(&cfg)?;
        Ok(cfg)
    }

    fn semantic(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        let origin = self.entries.get(key).map_or_else(|| "default".to_string(), |e| e.origin.clone());
        ConfigError::Semantic { key: key.into(), origin, msg: msg.into() }
    }

    fn get<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|msg| self.semantic(key, msg)),
        }
    }

    fn req<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        self.get(key, parse)?.ok_or_else(|| ConfigError::Missing(vec![key.into()]))
    }

    fn check(&self, c: &RunConfig) -> Result<(), ConfigError> {
        let p = &c.problem;
        if p.n == 0 {
            return Err(self.semantic("problem.n", "n must be at least 1"));
        }
        if p.k == 0 || p.k > p.n {
            return Err(self.semantic("problem.k", format!("need 1 <= k <= n, got k = {} with n = {}", p.k, p.n)));
        }
        let s0 = ProblemSpec::s0(p.n, p.k);
        if !(p.s > -s0) {
            return Err(self.semantic("problem.s", format!("s = {} violates s > -s0 with s0 = min(1, n/2k) = {s0}", p.s)));
        }
        if p.domain.validate().is_err() {
            return Err(self.semantic("problem.domain", "domain parameters must be positive"));
        }
        if p.delta.iter().any(|&d| !(d >= 0.0)) {
            return Err(self.semantic("problem.delta", "delta must be >= 0"));
        }
        if c.solver.jobs == 0 {
            return Err(self.semantic("solver.jobs", "jobs must be at least 1"));
        }
        if !(c.flow.m > 1.0) {
            return Err(self.semantic("flow.m", "M must exceed 1"));
        }
        if !(c.flow.p >= 0.0 && c.flow.p < p.k as f64) {
            return Err(self.semantic("flow.p", format!("p must lie in [0, k) = [0, {})", p.k)));
        }
        Ok(())
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    RawConfig::parse(text)?.resolve()
}

fn list<T>(v: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    v.split(',').map(|x| item(x.trim())).collect()
}

fn parse_number(v: &str) -> Result<f64, String> {
    let bad = || format!("expected a number, got '{v}'");
    let x = match v.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().map_err(|_| bad())? / b.trim().parse::<f64>().map_err(|_| bad())?,
        None => v.parse::<f64>().map_err(|_| bad())?,
    };
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad())
    }
}

fn parse_positive(v: &str) -> Result<f64, String> {
    let x = parse_number(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("expected a positive number, got '{v}'"))
    }
}

fn parse_count(v: &str) -> Result<usize, String> {
    v.parse().map_err(|_| format!("expected a nonnegative integer, got '{v}'"))
}

fn parse_mode(v: &str) -> Result<Mode, String> {
    Mode::from_str(v, true).map_err(|_| format!("unknown mode '{v}' (eigen, oracle, sweep, verify, flow)"))
}

fn parse_format(v: &str) -> Result<Format, String> {
    match v.to_ascii_lowercase().as_str() {
        "csv" => Ok(Format::Csv),
        "json" => Ok(Format::Json),
        "binary" => Ok(Format::Binary),
        _ => Err(format!("unknown format '{v}' (csv, json, binary)")),
    }
}

/// `disk(R)`, `ellipse(a, b)` or `square(L)` with L the side length.
fn parse_domain(v: &str) -> Result<DomainDescriptor, String> {
    let bad = || format!("expected disk(R), ellipse(a, b) or square(L), got '{v}'");
    let (name, rest) = v.split_once('(').ok_or_else(bad)?;
    let args = rest.trim().strip_suffix(')').ok_or_else(bad)?;
    let xs = list(args, parse_positive)?;
    match (name.trim().to_ascii_lowercase().as_str(), xs.as_slice()) {
        ("disk", [r]) => Ok(DomainDescriptor::Disk { radius: *r }),
        ("ellipse", [a, b]) => Ok(DomainDescriptor::Ellipse { a: *a, b: *b }),
        ("square", [l]) => Ok(DomainDescriptor::Square { side: *l }),
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_disk_config() {
        let c = parse_config("[problem]\nn = 2\nk = 1\ns = 0\n[solver]\nh = 1/64\n").unwrap();
        assert_eq!(c.problem.domain, DomainDescriptor::Disk { radius: 1.0 });
        assert_eq!(c.solver.h, Some(1.0 / 64.0));
        assert_eq!(c.problem.delta, vec![0.0]);
        assert_eq!(c.solver.params, SolverParams::default());
        assert_eq!(c.outputs.formats.len(), 3);
    }

    #[test]
    fn weight_exponent_bound() {
        let e = parse_config("[problem]\nn = 2\nk = 2\ns = -0.9\n").unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("problem.s") && msg.contains("line 4") && msg.contains("0.5"), "{msg}");
    }

    #[test]
    fn empty_lists_required_keys() {
        match parse_config("").unwrap_err() {
            ConfigError::Missing(keys) => assert_eq!(keys, ["problem.n", "problem.k", "problem.s"]),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn syntax_errors_have_positions() {
        let e = parse_config("[problem]\n  n 2\n").unwrap_err();
        assert!(matches!(e, ConfigError::Syntax { line: 2, column: 6, .. }), "{e:?}");
        let e = parse_config("n = 2\n").unwrap_err();
        assert!(matches!(e, ConfigError::Syntax { line: 1, column: 1, .. }), "{e:?}");
        let e = parse_config("[problem\n").unwrap_err();
        assert!(matches!(e, ConfigError::Syntax { line: 1, .. }), "{e:?}");
        let e = parse_config("[problem]\nn =\n").unwrap_err();
        assert!(matches!(e, ConfigError::Syntax { line: 2, column: 4, .. }), "{e:?}");
    }

    #[test]
    fn lists_domains_and_overrides() {
        let text = "[problem]\nn = 2 # plane\nk = 2\ns = -0.25\ndomain = ellipse(1.2, 1)\ndelta = 0.2, 0.1, 1/20\n[outputs]\nformats = csv, json\n";
        let mut raw = RawConfig::parse(text).unwrap();
        raw.set("solver.h=1/32").unwrap();
        raw.set("problem.s=0.5").unwrap();
        let c = raw.resolve().unwrap();
        assert_eq!(c.problem.domain, DomainDescriptor::Ellipse { a: 1.2, b: 1.0 });
        assert_eq!(c.problem.delta, vec![0.2, 0.1, 0.05]);
        assert_eq!(c.problem.s, 0.5);
        assert_eq!(c.solver.h, Some(1.0 / 32.0));
        assert_eq!(c.outputs.formats, vec![Format::Csv, Format::Json]);
        assert!(raw.set("nodot=1").is_err());
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        let e = parse_config("[problem]\nn = 2\nk = 1\ns = 0\ncolour = 3\n").unwrap_err();
        assert!(e.to_string().contains("problem.colour") && e.line() == Some(5), "{e}");
        let e = parse_config("[problem]\nn = 2\nn = 3\n").unwrap_err();
        assert!(e.to_string().contains("duplicate") && e.line() == Some(3), "{e}");
        let e = parse_config("[problem]\nn = 2\nk = 1\ns = 0\ndomain = triangle(1)\n").unwrap_err();
        assert!(e.to_string().contains("problem.domain"), "{e}");
    }

    #[test]
    fn sweep_default_deltas() {
        let c = parse_config("[run]\nmode = sweep\n[problem]\nn = 2\nk = 1\ns = -0.25\n").unwrap();
        assert_eq!(c.problem.delta, DEFAULT_SWEEP.to_vec());
    }
}
