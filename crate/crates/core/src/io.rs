//! Serialized forms of results: trajectory and determinant tables as CSV with
//! 17 significant digits, and JSON documents such as the pole manifest.

use crate::error::{Error, Result};
use crate::fredholm::DetResult;
use crate::painleve::{Point, PoleRecord, Trajectory, POLE_EXCLUSION};
use serde::Serialize;
use std::io::Write;

pub const TRAJECTORY_HEADER: [&str; 5] = ["x", "q", "dq", "H", "sigma"];
pub const DETERMINANT_HEADER: [&str; 4] = ["x", "det", "logdet", "sigma"];

/// Upper bound on the number of rows a uniform grid may produce.
pub const MAX_GRID_POINTS: usize = 10_000_000;

/// Seventeen significant digits: enough to round-trip any f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Trajectory points for output: the integrator's own samples, or a uniform
/// grid of spacing `step` from x_start down to x_end. Grid points within
/// POLE_EXCLUSION of a pole, or inside a pole detour, are skipped.
pub fn trajectory_points(traj: &Trajectory, step: Option<f64>) -> Result<Vec<Point>> {
    let Some(h) = step else {
        return traj.samples.iter().map(|s| traj.eval(s.x)).collect();
    };
    let count = grid_count(traj.x_start - traj.x_end, h)?;
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let x = traj.x_start - i as f64 * h;
        if traj.poles.iter().any(|p| (x - p.location).abs() < POLE_EXCLUSION) {
            continue;
        }
        match traj.eval(x) {
            Ok(p) => out.push(p),
            Err(Error::Pole(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Number of points of a grid with spacing `step` covering a span.
pub fn grid_count(span: f64, step: f64) -> Result<usize> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Domain(format!("grid step must be positive and finite, got {step}")));
    }
    if !(span >= 0.0 && span.is_finite()) {
        return Err(Error::Domain(format!("grid span must be non-negative and finite, got {span}")));
    }
    // tolerate rounding so that the far endpoint is included when it lies on the grid
    let n = (span / step * (1.0 + 1e-12)).floor();
    if n + 1.0 > MAX_GRID_POINTS as f64 {
        return Err(Error::Domain(format!("grid of step {step} over {span} exceeds {MAX_GRID_POINTS} points")));
    }
    Ok(n as usize + 1)
}

fn output_error(e: impl std::fmt::Display) -> Error {
    Error::Output(e.to_string())
}

/// Writes `x,q,dq,H,sigma` rows.
pub fn write_trajectory_csv<W: Write>(w: W, points: &[Point]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(TRAJECTORY_HEADER).map_err(output_error)?;
    for p in points {
        out.write_record([p.x, p.q, p.dq, p.hamiltonian, p.sigma].map(format_float)).map_err(output_error)?;
    }
    out.flush().map_err(output_error)
}

/// Writes `x,det,logdet,sigma` rows; sigma is left empty when not computed.
pub fn write_determinant_csv<W: Write>(w: W, rows: &[DetResult]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(DETERMINANT_HEADER).map_err(output_error)?;
    for r in rows {
        let sigma = r.sigma.map(format_float).unwrap_or_default();
        out.write_record([format_float(r.x), format_float(r.det), format_float(r.logdet), sigma])
            .map_err(output_error)?;
    }
    out.flush().map_err(output_error)
}

/// Poles of a trajectory with the data needed to interpret them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoleManifest {
    pub alpha: f64,
    pub kappa: f64,
    pub x_start: f64,
    pub x_end: f64,
    pub n_plus: usize,
    pub n_minus: usize,
    pub poles: Vec<PoleRecord>,
}

impl PoleManifest {
    pub fn of(traj: &Trajectory) -> Self {
        let (n_plus, n_minus) = traj.pole_counts();
        PoleManifest {
            alpha: traj.params.alpha,
            kappa: traj.params.kappa,
            x_start: traj.x_start,
            x_end: traj.x_end,
            n_plus,
            n_minus,
            poles: traj.poles.clone(),
        }
    }
}

/// Pretty-printed JSON followed by a newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value).map_err(output_error)?;
    w.write_all(b"\n").map_err(output_error)
}
