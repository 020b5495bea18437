use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use hesseig::eigensolve::{eigen_residual, find_lambda_delta, sweep_delta_with, DEFAULT_BETA};
use hesseig::grid::{DomainDescriptor, Grid, GridField};
use hesseig::io::{field_to_csv, flow_to_csv, read_field_binary, sweep_to_csv, to_json, write_field_binary};
use hesseig::problem::ProblemSpec;
use hesseig::radial::{bessel_weighted_eigen, shoot_eigen};
use hesseig::variational::gradient_flow;
use hesseig::verify::{boundary_slope_check, estimate_norms, holder_probe, linearized_eigen};
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{ConfigError, Format, Mode, RunConfig};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{context}: {source}")]
    Solver { context: String, source: hesseig::error::Error },

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {source}", path.display())]
    Snapshot { path: PathBuf, source: hesseig::error::Error },
}

impl RunError {
    /// Machine-readable form printed on failure.
    pub fn to_json(&self, mode: Option<Mode>) -> Value {
        let (kind, extra) = match self {
            RunError::Config(e) => ("config", json!({ "line": e.line() })),
            RunError::Solver { context, source } => (source.kind(), json!({ "context": context })),
            RunError::Io { path, .. } => ("io", json!({ "path": path })),
            RunError::Snapshot { path, source } => (source.kind(), json!({ "path": path })),
        };
        let mut err = json!({ "kind": kind, "message": self.to_string(), "mode": mode.map(Mode::name) });
        if let (Value::Object(a), Value::Object(b)) = (&mut err, extra) {
            a.extend(b.into_iter().filter(|(_, v)| !v.is_null()));
        }
        json!({ "error": err })
    }
}

type Result<T> = std::result::Result<T, RunError>;

fn solver(context: impl Into<String>) -> impl FnOnce(hesseig::error::Error) -> RunError {
    let context = context.into();
    move |source| RunError::Solver { context, source }
}

struct Sink<'a> {
    dir: &'a Path,
    cfg: &'a RunConfig,
}

impl Sink<'_> {
    fn wants(&self, f: Format) -> bool {
        self.cfg.outputs.formats.contains(&f)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|source| RunError::Io { path: path.clone(), source })?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn csv(&self, name: &str, text: &str) -> Result<()> {
        if self.wants(Format::Csv) {
            self.write(name, text.as_bytes())?;
        }
        Ok(())
    }

    /// Every JSON report carries the resolved config.
    fn json(&self, name: &str, mut report: Value) -> Result<()> {
        if self.wants(Format::Json) {
            report["config"] = serde_json::to_value(self.cfg).expect("config serializes");
            let text = to_json(&report).map_err(solver("serializing report"))?;
            self.write(name, text.as_bytes())?;
        }
        Ok(())
    }

    fn field(&self, name: &str, f: &GridField) -> Result<()> {
        if self.wants(Format::Binary) {
            let mut buf = Vec::new();
            write_field_binary(f, &mut buf).map_err(solver("encoding field"))?;
            self.write(name, &buf)?;
        }
        Ok(())
    }
}

fn grid_spec(cfg: &RunConfig, mode: Mode, delta: f64) -> Result<ProblemSpec> {
    let p = &cfg.problem;
    let h = cfg.solver.h.ok_or_else(|| ConfigError::Semantic {
        key: "solver.h".into(),
        origin: "default".into(),
        msg: format!("grid spacing is required for mode {}", mode.name()),
    })?;
    let mut spec = ProblemSpec::new(p.n, p.k, p.s, delta, p.domain, h);
    spec.solver = cfg.solver.params.clone();
    spec.validate_grid().map_err(solver(format!("mode {}", mode.name())))?;
    Ok(spec)
}

fn single_delta(cfg: &RunConfig, mode: Mode) -> Result<f64> {
    match cfg.problem.delta.as_slice() {
        [d] => Ok(*d),
        _ => Err(ConfigError::Semantic {
            key: "problem.delta".into(),
            origin: "config".into(),
            msg: format!("mode {} takes a single delta; use sweep for a list", mode.name()),
        }
        .into()),
    }
}

fn read_snapshot(path: &Path) -> Result<GridField> {
    let file = fs::File::open(path).map_err(|source| RunError::Io { path: path.to_path_buf(), source })?;
    read_field_binary(std::io::BufReader::new(file)).map_err(|source| RunError::Snapshot { path: path.to_path_buf(), source })
}

pub fn run(cfg: &RunConfig, mode: Mode, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    let out = Sink { dir, cfg };
    match mode {
        Mode::Oracle => oracle(cfg, &out),
        Mode::Eigen => eigen(cfg, &out),
        Mode::Sweep => sweep(cfg, &out),
        Mode::Verify => verify(cfg, &out),
        Mode::Flow => flow(cfg, &out),
    }
}

fn oracle(cfg: &RunConfig, out: &Sink) -> Result<()> {
    let p = &cfg.problem;
    let DomainDescriptor::Disk { radius } = p.domain else {
        return Err(ConfigError::Semantic { key: "problem.domain".into(), origin: "config".into(), msg: "radial oracles need a disk".into() }.into());
    };
    let shot = shoot_eigen(p.n, p.k, p.s, radius, cfg.solver.radial_tol).map_err(solver("radial shooting"))?;
    let bessel = if p.k == 1 { Some(bessel_weighted_eigen(p.n, p.s, radius, cfg.solver.radial_tol).map_err(solver("Bessel oracle"))?) } else { None };
    let lambda1 = bessel.unwrap_or(shot.lambda1);
    println!("lambda1 ≈ {lambda1:.5}");
    out.json(
        "oracle.json",
        json!({
            "lambda1": lambda1,
            "method": if bessel.is_some() { "bessel" } else { "shooting" },
            "bessel": bessel,
            "shooting": {
                "lambda1": shot.lambda1,
                "bisection_width": shot.bisection_width,
                "bracket_monotone": shot.bracket_monotone,
                "origin_gradient_exponent": shot.origin_gradient_exponent,
            },
        }),
    )
}

fn eigen(cfg: &RunConfig, out: &Sink) -> Result<()> {
    let delta = single_delta(cfg, Mode::Eigen)?;
    let spec = grid_spec(cfg, Mode::Eigen, delta)?;
    let (lambda, res) = find_lambda_delta(&spec).map_err(solver(format!("find_lambda_delta at delta = {delta}")))?;
    let residual = eigen_residual(&res, &spec).map_err(solver("eigen residual"))?;
    println!("lambda_delta ≈ {lambda:.6}");
    out.csv("eigenfunction.csv", &field_to_csv(&res.field))?;
    out.field("eigenfunction.hgf", &res.field)?;
    out.json(
        "eigen.json",
        json!({
            "lambda": lambda,
            "delta": delta,
            "sup_norm_at_bracket": res.sup_norm_at_bracket,
            "residual": residual,
            "diagnostics": res.diagnostics,
        }),
    )
}

fn sweep(cfg: &RunConfig, out: &Sink) -> Result<()> {
    let deltas = &cfg.problem.delta;
    let base = grid_spec(cfg, Mode::Sweep, deltas[0])?;
    let failed: Mutex<Option<RunError>> = Mutex::new(None);
    // Per-row snapshots are written by whichever job finished the row.
    let rep = sweep_delta_with(&base, deltas, cfg.solver.jobs, |i, res| {
        if let Err(e) = out.field(&format!("eigenfunction_delta{i}.hgf"), &res.field) {
            failed.lock().unwrap().get_or_insert(e);
        }
    })
    .map_err(solver(format!("sweep over delta = {deltas:?}")))?;
    if let Some(e) = failed.into_inner().unwrap() {
        return Err(e);
    }
    println!("lambda1 ≈ {:.6} ({})", rep.lambda1, rep.extrapolation);
    out.csv("sweep.csv", &sweep_to_csv(&rep))?;
    out.json("sweep.json", serde_json::to_value(&rep).expect("report serializes"))
}

fn verify(cfg: &RunConfig, out: &Sink) -> Result<()> {
    let Some(path) = &cfg.outputs.snapshot else {
        return Err(ConfigError::Semantic { key: "outputs.snapshot".into(), origin: "default".into(), msg: "verify needs a field snapshot".into() }.into());
    };
    let field = read_snapshot(path)?;
    let p = &cfg.problem;
    let delta = single_delta(cfg, Mode::Verify)?;
    let mut spec = ProblemSpec::new(p.n, p.k, p.s, delta, field.domain, field.h);
    spec.solver = cfg.solver.params.clone();
    let estimates = estimate_norms(&field, &spec, DEFAULT_BETA).map_err(solver("estimate_norms"))?;
    let slope = boundary_slope_check(&field, &spec).map_err(solver("boundary_slope_check"))?;
    // These two depend on resolution and admissibility; record failures instead of aborting.
    let holder = match holder_probe(&field, &spec) {
        Ok(f) => json!(f),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let linearized = match linearized_eigen(&field, &spec) {
        Ok(l) => json!(l),
        Err(e) => json!({ "error": e.to_string() }),
    };
    println!("K = {:.6}, L = {:.6}, slope = {:.6}", estimates.k, estimates.l_beta, slope.min_ratio);
    out.json(
        "verify.json",
        json!({ "snapshot": path, "estimates": estimates, "slope": slope, "holder": holder, "linearized": linearized }),
    )
}

fn flow(cfg: &RunConfig, out: &Sink) -> Result<()> {
    let delta = single_delta(cfg, Mode::Flow)?;
    let spec = grid_spec(cfg, Mode::Flow, delta)?;
    let u0 = match &cfg.outputs.snapshot {
        Some(path) => read_snapshot(path)?,
        None => {
            // Convex, zero on the boundary: half the level function of a disk or ellipse.
            if let DomainDescriptor::Square { .. } = spec.domain {
                return Err(ConfigError::Semantic {
                    key: "outputs.snapshot".into(),
                    origin: "default".into(),
                    msg: "flow on a square needs an initial snapshot".into(),
                }
                .into());
            }
            let g = Grid::new(spec.domain, spec.h).map_err(solver("grid"))?;
            g.to_field(&g.from_fn(|x, y| 0.5 * spec.domain.level(x, y)))
        }
    };
    let f = &cfg.flow;
    let traj = gradient_flow(&u0, &spec, f.m, f.p, f.t_end).map_err(solver(format!("gradient flow to t = {}", f.t_end)))?;
    println!(
        "J: {:.6} -> {:.6}, residual {:.3e} -> {:.3e}",
        traj.records[0].j,
        traj.state.j,
        traj.initial_residual(),
        traj.terminal_residual()
    );
    out.csv("flow.csv", &flow_to_csv(&traj.records))?;
    out.field("flow_final.hgf", &traj.state.u)?;
    out.json(
        "flow.json",
        json!({
            "records": traj.records,
            "rejected_steps": traj.rejected_steps,
            "initial_residual": traj.initial_residual(),
            "terminal_residual": traj.terminal_residual(),
        }),
    )
}
