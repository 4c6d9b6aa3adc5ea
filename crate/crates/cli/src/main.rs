//! `p4cm`: solve, classify and cross-check Clarkson-McLeod solutions of the
//! fourth Painlevé equation from the command line.
//!
//! Tables go out as CSV (or JSON with `--format json`), reports as JSON.
//! Failures print `{code, message, context}` on stderr and exit with 2
//! (invalid input), 3 (numerical failure), 4 (verification failure) or 1
//! (I/O).

mod failure;
mod suites;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use failure::{ErrorBody, Invalid, VerificationFailed, EXIT_VALIDATION};
use p4cm_core::asymptotics::{classify, connection_data, h_asym, q_asym, ConnectionData, Regime};
use p4cm_core::fredholm::{fredholm_det, sigma_from_det, DetResult, KernelSpec, Quadrature, DEFAULT_DIFF_STEP, DEFAULT_NODES};
use p4cm_core::integrals::verify_total_integral;
use p4cm_core::io::{
    format_float, grid_count, trajectory_points, write_determinant_csv, write_json, write_trajectory_csv,
    PoleManifest,
};
use p4cm_core::painleve::{check_tol, solve, Params, Point, DEFAULT_SEED, DEFAULT_TOL, MIN_SEED};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use suites::{Suite, SuiteInputs};

#[derive(Debug, Parser)]
#[command(name = "p4cm", version, about = "Clarkson-McLeod solutions of Painlevé IV: integration, asymptotics and Fredholm determinants")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate q(x; alpha, kappa) down from the boundary condition at +infinity.
    Solve(SolveArgs),
    /// Regime and connection data of (alpha, kappa), or of a grid of them.
    Classify(ClassifyArgs),
    /// Tabulate the leading asymptotics of q and H.
    Asymptote(AsymptoteArgs),
    /// Tabulate det(I - gamma K) and optionally sigma = d/dx ln det.
    Fredholm(FredholmArgs),
    /// Check the total-integral identity for one (alpha, kappa).
    TotalIntegral(TotalIntegralArgs),
    /// Run a named verification suite and report every check.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct Output {
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Debug, Args)]
struct Tolerance {
    /// Integrator tolerance.
    #[arg(long, env = "P4CM_TOL", default_value_t = DEFAULT_TOL, allow_hyphen_values = true)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    kappa: f64,
    /// Seed point of the integration.
    #[arg(long, default_value_t = DEFAULT_SEED, allow_hyphen_values = true)]
    from: f64,
    /// Lower end of the integration.
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    /// Spacing of a uniform output grid; the integrator's own steps when omitted.
    #[arg(long, allow_hyphen_values = true)]
    step: Option<f64>,
    #[command(flatten)]
    tol: Tolerance,
    #[command(flatten)]
    out: Output,
}

/// Inclusive range `start:end:count` of evenly spaced values.
#[derive(Debug, Clone, Copy)]
struct Span {
    start: f64,
    end: f64,
    count: usize,
}

impl FromStr for Span {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(format!("expected start:end:count, got {s:?}"));
        };
        let number = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        let (start, end) = (number(a)?, number(b)?);
        let count: usize = n.trim().parse().map_err(|e| format!("{n:?}: {e}"))?;
        if !start.is_finite() || !end.is_finite() {
            return Err(format!("range ends must be finite, got {s:?}"));
        }
        if count == 0 || (count == 1 && start != end) {
            return Err(format!("count must be at least 1, and 1 only for a single value, got {s:?}"));
        }
        Ok(Span { start, end, count })
    }
}

impl Span {
    fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + (self.end - self.start) * i as f64 / last).collect()
    }
}

const MAX_GRID_CELLS: usize = 1_000_000;

#[derive(Debug, Args)]
struct ClassifyArgs {
    #[arg(long, allow_hyphen_values = true, required_unless_present = "grid")]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "grid")]
    kappa: Option<f64>,
    /// Classify every pair of --alphas x --kappas instead of a single point.
    #[arg(long, requires_all = ["alphas", "kappas"], conflicts_with_all = ["alpha", "kappa"])]
    grid: bool,
    /// Alpha values as start:end:count.
    #[arg(long, allow_hyphen_values = true)]
    alphas: Option<Span>,
    /// Kappa values as start:end:count.
    #[arg(long, allow_hyphen_values = true)]
    kappas: Option<Span>,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AsymptoteArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    kappa: f64,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    step: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct FredholmArgs {
    #[arg(long, allow_hyphen_values = true)]
    nu: f64,
    #[arg(long, allow_hyphen_values = true)]
    gamma: f64,
    #[arg(long, allow_hyphen_values = true)]
    from: f64,
    #[arg(long, allow_hyphen_values = true)]
    to: f64,
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    step: f64,
    /// Gauss-Legendre nodes of the Nyström discretisation.
    #[arg(long, default_value_t = DEFAULT_NODES)]
    nodes: usize,
    /// Also compute sigma = d/dx ln det.
    #[arg(long)]
    sigma: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Debug, Args)]
struct TotalIntegralArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    kappa: f64,
    /// Negative split point.
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    c: f64,
    /// Positive split point.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    d: f64,
    #[command(flatten)]
    tol: Tolerance,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    /// Kernel order for the sigma-det suite.
    #[arg(long, default_value_t = 1.3, allow_hyphen_values = true)]
    nu: f64,
    /// Kernel coupling for the sigma-det suite.
    #[arg(long, default_value_t = 0.1, allow_hyphen_values = true)]
    gamma: f64,
    #[command(flatten)]
    tol: Tolerance,
    /// Output file; standard output when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

fn invalid(message: impl Into<String>, context: Value) -> anyhow::Error {
    Invalid::new(message, context).into()
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite"), json!({ "flag": name, "value": v.to_string() })))
    }
}

fn tolerance(tol: f64) -> Result<f64> {
    check_tol(tol).map_err(|e| invalid(e.to_string(), json!({ "flag": "tol", "value": tol.to_string() })))?;
    Ok(tol)
}

/// The output file must be creatable: its directory exists and it is not a directory itself.
fn output_path(path: Option<&Path>) -> Result<()> {
    let Some(path) = path else { return Ok(()) };
    let context = json!({ "flag": "output", "value": path.display().to_string() });
    if path.is_dir() {
        return Err(invalid("output path is a directory", context));
    }
    let parent = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    if !parent.is_dir() {
        return Err(invalid("directory of the output path does not exist", context));
    }
    Ok(())
}

/// Evenly spaced points from `from` toward `to` (either direction) at spacing `step`.
fn uniform_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>> {
    let count = grid_count((to - from).abs(), step)
        .map_err(|e| invalid(e.to_string(), json!({ "from": from, "to": to, "step": step.to_string() })))?;
    let dir = (to - from).signum();
    Ok((0..count).map(|i| from + dir * i as f64 * step).collect())
}

fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).context("writing to standard output")
        }
    }
}

fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_json(&mut buf, value)?;
    Ok(buf)
}

/// `<dir>/<stem>.poles.json` next to a trajectory file.
fn manifest_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.poles.json"))
}

#[derive(Serialize)]
struct TrajectoryDocument<'a> {
    #[serde(flatten)]
    manifest: &'a PoleManifest,
    points: &'a [Point],
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    finite("alpha", args.alpha)?;
    finite("kappa", args.kappa)?;
    finite("from", args.from)?;
    finite("to", args.to)?;
    let tol = tolerance(args.tol.tol)?;
    if args.from < MIN_SEED {
        return Err(invalid(format!("from must be at least {MIN_SEED}"), json!({ "flag": "from", "value": args.from })));
    }
    if args.to >= args.from {
        return Err(invalid("to must lie below from", json!({ "from": args.from, "to": args.to })));
    }
    if let Some(step) = args.step {
        grid_count(args.from - args.to, step)
            .map_err(|e| invalid(e.to_string(), json!({ "flag": "step", "value": step.to_string() })))?;
    }
    output_path(args.out.output.as_deref())?;

    let params = Params::new(args.alpha, args.kappa)?;
    let traj = solve(params, args.from, args.to, tol)?;
    let points = trajectory_points(&traj, args.step)?;
    let manifest = PoleManifest::of(&traj);

    match args.out.format {
        Format::Json => emit(args.out.output.as_deref(), &json_bytes(&TrajectoryDocument { manifest: &manifest, points: &points })?),
        Format::Csv => {
            let mut table = Vec::new();
            write_trajectory_csv(&mut table, &points)?;
            match args.out.output.as_deref() {
                Some(path) => {
                    let poles = json_bytes(&manifest)?;
                    emit(Some(path), &table)?;
                    emit(Some(&manifest_path(path)), &poles)
                }
                // the manifest needs a file name of its own; use --format json on stdout to get both
                None => emit(None, &table),
            }
        }
    }
}

fn classification(alpha: f64, kappa: f64, data: &ConnectionData) -> Value {
    let mut map = Map::new();
    map.insert("alpha".into(), json!(alpha));
    map.insert("kappa".into(), json!(kappa));
    map.insert("regime".into(), json!(data.regime));
    map.insert("kappa_star".into(), json!(data.kappa_star));
    if let Some(rho) = data.rho {
        map.insert("rho".into(), json!({ "re": rho.re, "im": rho.im, "modulus": rho.norm() }));
    }
    match data.regime {
        Regime::Oscillatory => {
            map.insert("b1".into(), json!(data.b1));
            map.insert("psi1".into(), json!(data.psi1));
        }
        Regime::SingularOscillatory => {
            map.insert("b2".into(), json!(data.b2));
            map.insert("psi2".into(), json!(data.psi2));
        }
        Regime::HalfIntegerPositive => {
            map.insert("c_n".into(), json!(data.c_n));
        }
        Regime::Trivial | Regime::Separatrix => {}
    }
    Value::Object(map)
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    output_path(args.output.as_deref())?;
    let document = if args.grid {
        let (alphas, kappas) = (args.alphas.expect("required by clap").values(), args.kappas.expect("required by clap").values());
        let cells = alphas.len().saturating_mul(kappas.len());
        if cells > MAX_GRID_CELLS {
            return Err(invalid(format!("grid has {cells} cells, more than {MAX_GRID_CELLS}"), json!({ "cells": cells })));
        }
        let pairs: Vec<(f64, f64)> = alphas.iter().flat_map(|&a| kappas.iter().map(move |&k| (a, k))).collect();
        let rows: Vec<Value> = pairs
            .par_iter()
            .map(|&(a, k)| match connection_data(a, k) {
                Ok(data) => classification(a, k, &data),
                Err(e) => json!({ "alpha": a, "kappa": k, "regime": classify(a, k), "error": e.to_string() }),
            })
            .collect();
        Value::Array(rows)
    } else {
        let (alpha, kappa) = (args.alpha.expect("required by clap"), args.kappa.expect("required by clap"));
        finite("alpha", alpha)?;
        finite("kappa", kappa)?;
        classification(alpha, kappa, &connection_data(alpha, kappa)?)
    };
    emit(args.output.as_deref(), &json_bytes(&document)?)
}

#[derive(Serialize)]
struct AsymptoteRow {
    x: f64,
    q_asym: f64,
    h_asym: f64,
}

fn cmd_asymptote(args: AsymptoteArgs) -> Result<()> {
    for (name, v) in [("alpha", args.alpha), ("kappa", args.kappa), ("from", args.from), ("to", args.to)] {
        finite(name, v)?;
    }
    let xs = uniform_grid(args.from, args.to, args.step)?;
    output_path(args.out.output.as_deref())?;
    let data = connection_data(args.alpha, args.kappa)?;
    let mut rows = Vec::with_capacity(xs.len());
    for x in xs {
        let values = q_asym(x, &data, args.alpha, args.kappa).and_then(|q| Ok((q, h_asym(x, &data, args.alpha, args.kappa)?)));
        match values {
            Ok((q, h)) => rows.push(AsymptoteRow { x, q_asym: q, h_asym: h }),
            // the singular-oscillatory formula blows up where 2cos(phi) + 1 = 0
            Err(p4cm_core::Error::SingularDenominator { .. }) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    let bytes = match args.out.format {
        Format::Json => json_bytes(&rows)?,
        Format::Csv => {
            let mut text = String::from("x,q_asym,H_asym\n");
            for r in &rows {
                text.push_str(&format!("{},{},{}\n", format_float(r.x), format_float(r.q_asym), format_float(r.h_asym)));
            }
            text.into_bytes()
        }
    };
    emit(args.out.output.as_deref(), &bytes)
}

fn cmd_fredholm(args: FredholmArgs) -> Result<()> {
    for (name, v) in [("nu", args.nu), ("gamma", args.gamma), ("from", args.from), ("to", args.to)] {
        finite(name, v)?;
    }
    if args.nodes == 0 || args.nodes > 2000 {
        return Err(invalid("nodes must lie in [1, 2000]", json!({ "flag": "nodes", "value": args.nodes })));
    }
    let xs = uniform_grid(args.from, args.to, args.step)?;
    output_path(args.out.output.as_deref())?;
    let spec = KernelSpec::new(args.nu, args.gamma)?;
    let rows: Vec<DetResult> = xs
        .par_iter()
        .map(|&x| {
            let quad = Quadrature::new(args.nodes, 8f64.max(8.0 - x))?;
            if args.sigma {
                sigma_from_det(spec, x, &quad, DEFAULT_DIFF_STEP)
            } else {
                fredholm_det(spec, x, &quad)
            }
        })
        .collect::<p4cm_core::Result<_>>()?;
    let bytes = match args.out.format {
        Format::Json => json_bytes(&rows)?,
        Format::Csv => {
            let mut buf = Vec::new();
            write_determinant_csv(&mut buf, &rows)?;
            buf
        }
    };
    emit(args.out.output.as_deref(), &bytes)
}

fn cmd_total_integral(args: TotalIntegralArgs) -> Result<()> {
    for (name, v) in [("alpha", args.alpha), ("kappa", args.kappa), ("c", args.c), ("d", args.d)] {
        finite(name, v)?;
    }
    let tol = tolerance(args.tol.tol)?;
    let regime = classify(args.alpha, args.kappa);
    if !matches!(regime, Regime::Oscillatory | Regime::Separatrix) {
        return Err(invalid(
            "the total-integral identity is available for the oscillatory and separatrix regimes only",
            json!({ "alpha": args.alpha, "kappa": args.kappa, "regime": regime }),
        ));
    }
    if !(args.c < 0.0 && 0.0 < args.d && args.d < 8.0) {
        return Err(invalid("split points need c < 0 < d < 8", json!({ "c": args.c, "d": args.d })));
    }
    output_path(args.output.as_deref())?;
    let report = verify_total_integral(Params::new(args.alpha, args.kappa)?, args.c, args.d, tol)?;
    let document = json!({ "alpha": args.alpha, "kappa": args.kappa, "regime": regime, "c": args.c, "d": args.d, "report": report });
    emit(args.output.as_deref(), &json_bytes(&document)?)
}

fn cmd_verify(args: VerifyArgs) -> Result<()> {
    finite("nu", args.nu)?;
    finite("gamma", args.gamma)?;
    let tol = tolerance(args.tol.tol)?;
    output_path(args.output.as_deref())?;
    let report = suites::run(args.suite, SuiteInputs { tol, nu: args.nu, gamma: args.gamma })?;
    emit(args.output.as_deref(), &json_bytes(&report)?)?;
    if report.passed {
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
        Err(VerificationFailed { suite: report.suite, failed }.into())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Asymptote(a) => cmd_asymptote(a),
        Command::Fredholm(a) => cmd_fredholm(a),
        Command::TotalIntegral(a) => cmd_total_integral(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn report(body: &ErrorBody) -> ExitCode {
    let text = serde_json::to_string(body).unwrap_or_else(|_| format!("{{\"code\":{}}}", body.code));
    eprintln!("{text}");
    ExitCode::from(body.code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let message = e.render().to_string();
            let message = message.lines().next().unwrap_or_default().trim_start_matches("error: ").to_string();
            let context = json!({ "kind": e.kind().to_string(), "usage": e.render().to_string() });
            return report(&ErrorBody { code: EXIT_VALIDATION, message, context });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => report(&failure::classify(&err)),
    }
}
