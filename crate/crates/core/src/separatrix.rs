//! The κ = κ* solution as a boundary-value problem.
//!
//! Along q ≈ -2x the linearised equation is ε'' ≈ 4x²ε, so any error made
//! while shooting from +∞ is amplified like e^{x²}. Instead the solution is
//! pinned at both ends: at X_R by the parabolic-cylinder log-derivative
//! (which fixes the recessive direction but not κ) and at X_L ≪ 0 by the
//! formal expansion `q = -2x + Σ_{k≥1} c_k x^{1-2k}`. Errors in either
//! boundary value decay into the interior, so the problem is well posed. It is
//! solved by multiple shooting in the root chart y = √q with Newton's method.
//! The value of κ is not imposed; `kappa_fit` recovers it from the solution
//! and serves as an independent check against κ*.

use crate::asymptotics::kappa_star;
use crate::error::{Error, Result};
use crate::ode::{drive, Control, Flow, System};
use crate::painleve::{integrate, root_chart_rhs, Node, Params, Trajectory, MIN_SEED};
use crate::specfun::{log_derivative_scaled, value_and_slope};
use std::f64::consts::SQRT_2;

/// Number of coefficients kept in the x → -∞ expansion.
const SERIES_TERMS: usize = 40;

/// Coefficients a_j of q = Σ_{j≥0} a_j x^{1-2j} (a₀ = -2, a₁ = -2α).
///
/// Each a_k is fixed by the x^{4-2k} coefficient of
/// `F(q) = 3q⁴/2 + 4xq³ + 2(x² - 2α)q² + q'²/2 - q q''`, in which a_k enters
/// linearly with factor -8.
pub fn series_coefficients(alpha: f64, terms: usize) -> Vec<f64> {
    let mut a = vec![0.0; terms.max(1)];
    a[0] = -2.0;
    for k in 1..terms {
        a[k] = residual_at_order(&a[..=k], alpha, k) / 8.0;
    }
    a
}

fn residual_at_order(a: &[f64], alpha: f64, k: usize) -> f64 {
    let n = a.len();
    let conv = |u: &[f64], v: &[f64], m: usize| -> f64 { (0..=m).map(|i| u[i] * v[m - i]).sum() };
    let s2: Vec<f64> = (0..n).map(|m| conv(a, a, m)).collect();
    let s3: Vec<f64> = (0..n).map(|m| conv(&s2, a, m)).collect();
    let s4: Vec<f64> = (0..n).map(|m| conv(&s3, a, m)).collect();
    let d1: Vec<f64> = (0..n).map(|j| a[j] * (1.0 - 2.0 * j as f64)).collect();
    let d2: Vec<f64> = (0..n).map(|j| d1[j] * (-2.0 * j as f64)).collect();
    let mut f = 1.5 * s4[k] + 4.0 * s3[k] + 2.0 * s2[k] - 4.0 * alpha * s2[k - 1];
    if k >= 2 {
        let m = k - 2;
        f += 0.5 * conv(&d1, &d1, m) - conv(a, &d2, m);
    }
    f
}

/// Partial sums of the expansion and its derivative at x < 0, stopped at the
/// smallest term.
pub fn series_q(alpha: f64, x: f64) -> (f64, f64) {
    let a = series_coefficients(alpha, SERIES_TERMS);
    let inv2 = 1.0 / (x * x);
    let (mut q, mut dq) = (0.0, 0.0);
    let mut power = x;
    let mut prev = f64::INFINITY;
    for (j, &c) in a.iter().enumerate() {
        let term = c * power;
        if j > 1 && term.abs() > prev {
            break;
        }
        q += term;
        dq += term * (1.0 - 2.0 * j as f64) / x;
        prev = term.abs();
        power *= inv2;
    }
    (q, dq)
}

/// ∫_{-∞}^{x} (q + 2t + 2α/t) dt from the expansion, x < 0.
pub fn negative_tail(alpha: f64, x: f64) -> f64 {
    let a = series_coefficients(alpha, SERIES_TERMS);
    let inv2 = 1.0 / (x * x);
    let mut power = inv2;
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for (k, &c) in a.iter().enumerate().skip(2) {
        let term = c * power / (2.0 - 2.0 * k as f64);
        if term.abs() > prev {
            break;
        }
        sum += term;
        prev = term.abs();
        power *= inv2;
    }
    sum
}

/// Result of the boundary-value solve.
#[derive(Debug, Clone)]
pub struct SeparatrixSolution {
    pub trajectory: Trajectory,
    /// q(X_R)/D²_{α-1/2}(√2 X_R) of the converged solution.
    pub kappa_fit: f64,
    pub x_left: f64,
    pub newton_iterations: usize,
}

/// Root chart plus its 2×2 variational matrix, q > 0.
struct Variational {
    alpha: f64,
    tol: f64,
}

impl System<f64, 6> for Variational {
    fn rhs(&mut self, x: f64, s: &[f64; 6]) -> Result<[f64; 6]> {
        let y = s[0];
        let y2 = y * y;
        let fy = 3.75 * y2 * y2 + 6.0 * x * y2 + (x * x - 2.0 * self.alpha);
        Ok([s[1], root_chart_rhs(x, y, 1.0, self.alpha), s[4], s[5], fy * s[2], fy * s[3]])
    }

    fn error_norm(&self, o: &[f64; 6], n: &[f64; 6], e: &[f64; 6]) -> f64 {
        let root = o[0].abs().max(o[1].abs()).max(n[0].abs()).max(n[1].abs()).max(1e-300);
        let var = (2..6).map(|i| o[i].abs().max(n[i].abs())).fold(1e-300, f64::max);
        let e1 = e[0].abs().max(e[1].abs()) / (self.tol * root);
        let e2 = (2..6).map(|i| e[i].abs()).fold(0.0, f64::max) / (self.tol * var);
        e1.max(e2)
    }
}

/// Plain root chart with node recording, q > 0.
struct Recorder {
    alpha: f64,
    tol: f64,
    nodes: Vec<Node>,
}

impl System<f64, 3> for Recorder {
    fn rhs(&mut self, x: f64, s: &[f64; 3]) -> Result<[f64; 3]> {
        Ok([s[1], root_chart_rhs(x, s[0], 1.0, self.alpha), s[0] * s[0]])
    }

    fn error_norm(&self, o: &[f64; 3], n: &[f64; 3], e: &[f64; 3]) -> f64 {
        let root = o[0].abs().max(o[1].abs()).max(n[0].abs()).max(n[1].abs()).max(1e-300);
        let e1 = e[0].abs().max(e[1].abs()) / (self.tol * root);
        e1.max(e[2].abs() / (self.tol * (1.0 + n[2].abs())))
    }

    fn accept(&mut self, x: f64, s: &[f64; 3], ds: &[f64; 3]) -> Result<Flow> {
        self.nodes.push(Node { x, y: s[0], dy: s[1], d2y: ds[1], sign: 1.0, integral: s[2] });
        Ok(Flow::Continue)
    }
}

fn shooting_grid(x_right: f64, x_left: f64) -> Vec<f64> {
    let mut grid = vec![x_right];
    let mut t = x_right;
    while t > x_left {
        let step = (2.5 / (2.0 * t.abs() + 1.0)).min(0.25);
        t = if t - step < x_left + 0.3 * step { x_left } else { t - step };
        grid.push(t);
    }
    grid
}

fn segment_flow(alpha: f64, tol: f64, from: f64, to: f64, y: f64, dy: f64) -> Result<[f64; 6]> {
    let mut sys = Variational { alpha, tol };
    let ctrl = Control { h_init: (to - from).abs() / 4.0, h_max: 0.1, h_min_rel: 1e-13, max_steps: 100_000 };
    let end = drive(&mut sys, from, [y, dy, 1.0, 0.0, 0.0, 1.0], to, ctrl)?;
    Ok(end.y)
}

/// Gaussian elimination with partial pivoting restricted to a band.
fn solve_banded(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, lower: usize, upper: usize) -> Result<Vec<f64>> {
    let n = b.len();
    let reach = lower + upper;
    for k in 0..n {
        let last_row = (k + lower).min(n - 1);
        let p = (k..=last_row)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).expect("finite"))
            .expect("non-empty pivot range");
        if a[p][k] == 0.0 {
            return Err(Error::NoConvergence("singular Newton matrix in the separatrix solve".into()));
        }
        a.swap(k, p);
        b.swap(k, p);
        let last_col = (k + reach).min(n - 1);
        for i in k + 1..=last_row {
            let f = a[i][k] / a[k][k];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(i);
            for (target, pivot) in lower[0][k..=last_col].iter_mut().zip(&upper[k][k..=last_col]) {
                *target -= f * pivot;
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let last_col = (k + reach).min(n - 1);
        let s: f64 = (k + 1..=last_col).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    Ok(x)
}

/// Solves for q(x; α, κ*) on [x_to, x_from] as a two-point problem.
pub fn solve_separatrix(params: Params, x_from: f64, x_to: f64, tol: f64) -> Result<SeparatrixSolution> {
    let alpha = params.alpha;
    let ks = kappa_star(alpha);
    if !(ks > 0.0) {
        return Err(Error::Domain(format!("separatrix solve needs kappa* > 0, got {ks} at alpha = {alpha}")));
    }
    if x_from < MIN_SEED || !(x_to < x_from) {
        return Err(Error::Domain(format!("need x_to < x_from and x_from >= {MIN_SEED}, got {x_from} -> {x_to}")));
    }
    let tol_inner = tol.min(1e-11);
    let x_left = (x_to - 2.5).min(-8.0);
    let grid = shooting_grid(x_from, x_left);
    let m = grid.len() - 1;
    let n = 2 * (m + 1);
    let slope_ratio = log_derivative_scaled(params.order(), x_from)?;
    let (q_left, _) = series_q(alpha, x_left);
    if !(q_left > 0.0) {
        return Err(Error::Domain(format!("expansion is not positive at X_L = {x_left}")));
    }
    let y_left = q_left.sqrt();

    // initial guess: shooting with κ* where it is still reliable, the expansion beyond
    let joint = -3.0;
    let shot = integrate(Params::new(alpha, ks)?, x_from, joint, 1e-10)?;
    let mut z = vec![0.0; n];
    for (i, &t) in grid.iter().enumerate() {
        let (q, dq) = if t >= joint {
            let p = shot.eval(t)?;
            (p.q, p.dq)
        } else {
            series_q(alpha, t)
        };
        let y = q.abs().sqrt().max(1e-300);
        z[2 * i] = y;
        z[2 * i + 1] = dq / (2.0 * y);
    }

    let mut iterations = 0;
    loop {
        iterations += 1;
        if iterations > 40 {
            return Err(Error::NoConvergence("separatrix Newton iteration did not settle".into()));
        }
        let mut jac = vec![vec![0.0; n]; n];
        let mut res = vec![0.0; n];
        res[0] = z[1] - slope_ratio * z[0];
        jac[0][0] = -slope_ratio;
        jac[0][1] = 1.0;
        for i in 0..m {
            let s = segment_flow(alpha, tol_inner, grid[i], grid[i + 1], z[2 * i], z[2 * i + 1])?;
            let (r, c) = (1 + 2 * i, 2 * i);
            res[r] = s[0] - z[c + 2];
            res[r + 1] = s[1] - z[c + 3];
            jac[r][c] = s[2];
            jac[r][c + 1] = s[3];
            jac[r + 1][c] = s[4];
            jac[r + 1][c + 1] = s[5];
            jac[r][c + 2] = -1.0;
            jac[r + 1][c + 3] = -1.0;
        }
        res[n - 1] = z[n - 2] - y_left;
        jac[n - 1][n - 2] = 1.0;
        let rhs: Vec<f64> = res.iter().map(|v| -v).collect();
        let delta = solve_banded(jac, rhs, 2, 2)?;
        let mut worst: f64 = 0.0;
        for i in 0..=m {
            let scale = z[2 * i].abs().max(z[2 * i + 1].abs()).max(1e-300);
            worst = worst.max(delta[2 * i].abs().max(delta[2 * i + 1].abs()) / scale);
            z[2 * i] += delta[2 * i];
            z[2 * i + 1] += delta[2 * i + 1];
        }
        if !worst.is_finite() {
            return Err(Error::NoConvergence("separatrix Newton step blew up".into()));
        }
        if worst < 1e-13 {
            break;
        }
    }

    let mut nodes: Vec<Node> = Vec::new();
    let mut running = 0.0;
    for i in 0..m {
        let (from, to) = (grid[i], grid[i + 1].max(x_to));
        if from <= x_to {
            break;
        }
        let mut rec = Recorder { alpha, tol: tol_inner, nodes: Vec::new() };
        let (y, dy) = (z[2 * i], z[2 * i + 1]);
        if nodes.is_empty() {
            rec.nodes.push(Node { x: from, y, dy, d2y: root_chart_rhs(from, y, 1.0, alpha), sign: 1.0, integral: 0.0 });
        }
        let ctrl = Control { h_init: (to - from).abs() / 4.0, h_max: 0.1, h_min_rel: 1e-13, max_steps: 100_000 };
        drive(&mut rec, from, [y, dy, running], to, ctrl)?;
        running = rec.nodes.last().map_or(running, |n| n.integral);
        nodes.extend(rec.nodes);
    }
    let (d, _) = value_and_slope(params.order(), SQRT_2 * x_from)?;
    let kappa_fit = z[0] * z[0] / (d * d);
    let x_end = nodes.last().map_or(x_to, |n| n.x);
    let trajectory = Trajectory::from_parts(params, vec![nodes], Vec::new(), x_from, x_end);
    Ok(SeparatrixSolution { trajectory, kappa_fit, x_left, newton_iterations: iterations })
}
