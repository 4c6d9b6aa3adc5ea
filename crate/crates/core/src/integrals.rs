//! Regularized total integrals of q over the real line: a fitted asymptotic
//! tail at -∞, principal values across the real poles, and the parabolic
//! cylinder tail at +∞.

use crate::asymptotics::{
    asymptotic_phase, classify, connection_data, total_integral_rhs_in, ConnectionData, IdentityForm, Regime,
};
use crate::error::{Error, Result};
use crate::painleve::{solve, Node, Params, Trajectory, DEFAULT_SEED};
use crate::quadrature::adaptive;
use crate::specfun::pcf_d;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::SQRT_2;

const SQRT_3: f64 = 1.732_050_807_568_877_2;
/// Default half-width of the symmetric window around each pole.
pub const DEFAULT_WINDOW: f64 = 0.1;
/// Smallest window before the principal value is abandoned.
pub const MIN_WINDOW: f64 = 1e-3;
/// RMS residual of the tail fit above which the tail is reported as unconverged.
pub const TAIL_FIT_TOL: f64 = 1e-3;
/// Length of the fitting window at the left end of the trajectory.
pub const TAIL_WINDOW: f64 = 10.0;
/// Where the left end of the trajectory is placed for the oscillatory regime.
pub const OSCILLATORY_END: f64 = -35.0;
/// Where the left end of the trajectory is placed for the separatrix.
pub const SEPARATRIX_END: f64 = -25.0;

const QUAD_ABS: f64 = 1e-11;
const QUAD_REL: f64 = 1e-11;

/// ∫_{-∞}^{c} of the regularized integrand, with the fitted part reported separately.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegativeTail {
    /// Total ∫_{-∞}^{c}.
    pub value: f64,
    /// Model estimate of ∫_{-∞}^{X}, X the left end of the trajectory.
    pub remainder: f64,
    /// RMS misfit of the remainder model on its fitting window.
    pub fit_residual: f64,
    pub x_end: f64,
}

impl NegativeTail {
    pub fn converged(&self) -> bool {
        self.fit_residual < TAIL_FIT_TOL
    }
}

/// Outcome of checking one total-integral identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralReport {
    pub lhs_exp: f64,
    pub rhs: f64,
    pub rel_error: f64,
    /// Right-hand side as printed in the theorem statement, for comparison.
    pub rhs_printed: f64,
    pub rel_error_printed: f64,
    pub n_plus: usize,
    pub n_minus: usize,
    pub c: f64,
    pub d: f64,
    pub tail_neg: NegativeTail,
    pub principal_value: f64,
    pub tail_pos: f64,
}

fn regularizer(regime: Regime, alpha: f64, t: f64) -> Result<f64> {
    match regime {
        Regime::Oscillatory => Ok(2.0 * t / 3.0 - 2.0 * alpha / t),
        Regime::Separatrix => Ok(2.0 * t + 2.0 * alpha / t),
        other => Err(Error::Domain(format!("no regularized tail in regime {other:?}"))),
    }
}

/// ∫_a^b of the regularizer, a < b < 0.
fn regularizer_integral(regime: Regime, alpha: f64, a: f64, b: f64) -> Result<f64> {
    let log = (b / a).ln();
    match regime {
        Regime::Oscillatory => Ok((b * b - a * a) / 3.0 - 2.0 * alpha * log),
        Regime::Separatrix => Ok(b * b - a * a + 2.0 * alpha * log),
        other => Err(Error::Domain(format!("no regularized tail in regime {other:?}"))),
    }
}

/// ∫_{-∞}^{x} v(t) e^{imφ(t)} dt for v = 1 or v = 1/t, by two integrations by parts.
fn oscillatory_tail(x: f64, data: &ConnectionData, harmonic: f64, inverse_power: bool) -> Complex64 {
    let b = data.b1 * data.b1;
    let dphi = harmonic * (2.0 * x / SQRT_3 - 2.0 * b / (SQRT_3 * x));
    let d2phi = harmonic * (2.0 / SQRT_3 + 2.0 * b / (SQRT_3 * x * x));
    let (v, dv) = if inverse_power { (1.0 / x, -1.0 / (x * x)) } else { (1.0, 0.0) };
    // d/dt (v/φ')
    let ratio_prime = dv / dphi - v * d2phi / (dphi * dphi);
    let e = Complex64::from_polar(1.0, harmonic * asymptotic_phase(x, data));
    e * Complex64::new(ratio_prime / dphi, -v / dphi)
}

/// Least-squares fit of `basis` to the samples; returns (coefficients, RMS residual).
fn fit(ts: &[f64], values: &[f64], basis: &dyn Fn(f64) -> Vec<f64>) -> Result<(Vec<f64>, f64)> {
    let rows: Vec<Vec<f64>> = ts.iter().map(|&t| basis(t)).collect();
    let k = rows[0].len();
    let a = DMatrix::from_fn(ts.len(), k, |i, j| rows[i][j]);
    let y = DVector::from_column_slice(values);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::NoConvergence(format!("tail fit failed: {e}")))?;
    let resid = (&a * &coef - &y).norm() / (ts.len() as f64).sqrt();
    Ok((coef.iter().copied().collect(), resid))
}

/// ∫_{-∞}^{c} of q + 2t/3 - 2α/t (oscillatory) or q + 2t + 2α/t (separatrix).
///
/// The trajectory is integrated by quadrature on (X, c), X its left end; the
/// remainder on (-∞, X) comes from a least-squares fit on (X, X + 10) of a
/// model with known tail integrals: oscillatory harmonics of the asymptotic
/// phase plus 1/t² for the oscillatory regime, odd inverse powers for the
/// separatrix.
pub fn regularized_tail_neg(traj: &Trajectory, c: f64, regime: Regime) -> Result<NegativeTail> {
    let alpha = traj.params.alpha;
    let x_end = traj.x_end;
    if !(c < 0.0 && c > x_end + TAIL_WINDOW) {
        return Err(Error::Domain(format!("c = {c} must be negative and above {}", x_end + TAIL_WINDOW)));
    }
    if let Some(p) = traj.poles.iter().find(|p| p.location <= c) {
        return Err(Error::Domain(format!("pole at {} lies below c = {c}", p.location)));
    }
    let integrand = |t: f64| -> Result<f64> { Ok(traj.q(t)? + regularizer(regime, alpha, t)?) };
    let q_part = adaptive(|t| traj.q(t), x_end, c, QUAD_ABS, QUAD_REL)?;
    let body = q_part + regularizer_integral(regime, alpha, x_end, c)?;

    let n = 400;
    let ts: Vec<f64> = (0..n).map(|i| x_end + TAIL_WINDOW * i as f64 / (n - 1) as f64).collect();
    let values = ts.iter().map(|&t| integrand(t)).collect::<Result<Vec<f64>>>()?;
    let (remainder, fit_residual) = match regime {
        Regime::Oscillatory => {
            let data = connection_data(alpha, traj.params.kappa)?;
            let basis = |t: f64| {
                let phi = asymptotic_phase(t, &data);
                let (s1, c1) = phi.sin_cos();
                let (s2, c2) = (2.0 * phi).sin_cos();
                vec![s1, c1, s1 / t, c1 / t, s2 / t, c2 / t, 1.0 / (t * t)]
            };
            let (coef, resid) = fit(&ts, &values, &basis)?;
            let terms = [
                oscillatory_tail(x_end, &data, 1.0, false),
                oscillatory_tail(x_end, &data, 1.0, true),
                oscillatory_tail(x_end, &data, 2.0, true),
            ];
            let mut tail = -coef[6] / x_end;
            for (k, term) in terms.iter().enumerate() {
                tail += coef[2 * k] * term.im + coef[2 * k + 1] * term.re;
            }
            (tail, resid)
        }
        _ => {
            let basis = |t: f64| vec![t.powi(-3), t.powi(-5)];
            let (coef, resid) = fit(&ts, &values, &basis)?;
            // ∫_{-∞}^{X} t^{-k} = X^{1-k}/(1-k)
            (coef[0] * x_end.powi(-2) / -2.0 + coef[1] * x_end.powi(-4) / -4.0, resid)
        }
    };
    Ok(NegativeTail { value: body + remainder, remainder, fit_residual, x_end })
}

/// Takeoff and landing nodes bracketing pole `i`.
fn pole_gap(traj: &Trajectory, i: usize) -> Result<(&Node, &Node)> {
    let segs = traj.segments();
    if segs.len() != traj.poles.len() + 1 {
        return Err(Error::Inconsistent(format!(
            "{} segments for {} poles",
            segs.len(),
            traj.poles.len()
        )));
    }
    let above = segs[i].last().ok_or_else(|| Error::Inconsistent("empty segment".into()))?;
    let below = segs[i + 1].first().ok_or_else(|| Error::Inconsistent("empty segment".into()))?;
    Ok((above, below))
}

/// ∫ over [lo.x, hi.x] of the quintic Hermite interpolant of g = q - r/(t - x0).
fn gap_integral(lo: &Node, hi: &Node, x0: f64, r: f64) -> f64 {
    let g = |n: &Node| {
        let tau = n.x - x0;
        (n.q() - r / tau, n.dq() + r / (tau * tau), n.d2q() - 2.0 * r / (tau * tau * tau))
    };
    let (a, b) = (g(lo), g(hi));
    let h = hi.x - lo.x;
    h * (0.5 * (a.0 + b.0) + h * (a.1 - b.1) / 10.0 + h * h * (a.2 + b.2) / 120.0)
}

/// P.V. ∫_c^d q: plain quadrature between poles and, on a symmetric window of
/// half-width δ around each pole, quadrature of q - r/(t - x₀).
pub fn principal_value_mid(traj: &Trajectory, c: f64, d: f64, window: f64) -> Result<f64> {
    if !(c < d) {
        return Err(Error::Domain(format!("need c < d, got ({c}, {d})")));
    }
    let mut poles: Vec<(usize, f64, f64)> = traj
        .poles
        .iter()
        .enumerate()
        .map(|(i, p)| (i, p.location, p.residue as f64))
        .collect();
    if let Some(&(_, x, _)) = poles.iter().find(|p| p.1 <= c || p.1 >= d) {
        return Err(Error::Domain(format!("pole at {x} is not inside ({c}, {d})")));
    }
    poles.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut delta = window;
    let fits = |delta: f64| {
        let mut edges = vec![c];
        edges.extend(poles.iter().map(|p| p.1));
        edges.push(d);
        edges.windows(2).all(|w| w[1] - w[0] > 2.0 * delta)
    };
    while !fits(delta) {
        delta *= 0.5;
        if delta < MIN_WINDOW {
            return Err(Error::Domain(format!("poles too close for a principal-value window of {MIN_WINDOW}")));
        }
    }
    let mut total = 0.0;
    let mut left = c;
    for &(i, x0, r) in &poles {
        total += adaptive(|t| traj.q(t), left, x0 - delta, QUAD_ABS, QUAD_REL)?;
        let (above, below) = pole_gap(traj, i)?;
        if above.x >= x0 + delta || below.x <= x0 - delta {
            return Err(Error::Domain(format!("window {delta} is narrower than the pole detour at {x0}")));
        }
        let g = |t: f64| -> Result<f64> { Ok(traj.q(t)? - r / (t - x0)) };
        total += adaptive(g, x0 - delta, below.x, QUAD_ABS, QUAD_REL)?;
        total += gap_integral(below, above, x0, r);
        total += adaptive(g, above.x, x0 + delta, QUAD_ABS, QUAD_REL)?;
        left = x0 + delta;
    }
    total += adaptive(|t| traj.q(t), left, d, QUAD_ABS, QUAD_REL)?;
    Ok(total)
}

/// ∫_d^∞ q: quadrature on (d, x_start) plus ∫ κD²_{α-1/2}(√2t) beyond x_start.
pub fn tail_pos(traj: &Trajectory, d: f64) -> Result<f64> {
    let params = traj.params;
    if let Some(p) = traj.poles.iter().find(|p| p.location >= d) {
        return Err(Error::Domain(format!("pole at {} lies above d = {d}", p.location)));
    }
    if params.kappa == 0.0 {
        return Ok(0.0);
    }
    let body = adaptive(|t| traj.q(t), d, traj.x_start, QUAD_ABS, QUAD_REL)?;
    let mu = params.order();
    let seed = |t: f64| -> Result<f64> {
        let v = pcf_d(mu, SQRT_2 * t)?;
        Ok(params.kappa * v * v)
    };
    // e^{-t²} falls by e^{-2·x_start·w} over a stretch of width w
    let width = 40.0 / traj.x_start.max(1.0);
    let beyond = adaptive(seed, traj.x_start, traj.x_start + width, 1e-300, 1e-13)?;
    Ok(body + beyond)
}

/// Evaluates both sides of the total-integral identity for (α, κ).
pub fn verify_total_integral(params: Params, c: f64, d: f64, tol: f64) -> Result<IntegralReport> {
    let regime = classify(params.alpha, params.kappa);
    let x_end = match regime {
        Regime::Oscillatory => OSCILLATORY_END,
        Regime::Separatrix => SEPARATRIX_END,
        other => return Err(Error::Domain(format!("no total-integral identity in regime {other:?}"))),
    };
    if !(c < 0.0 && 0.0 < d && d < DEFAULT_SEED) {
        return Err(Error::Domain(format!("need c < 0 < d < {DEFAULT_SEED}, got ({c}, {d})")));
    }
    let traj = solve(params, DEFAULT_SEED, x_end, tol)?;
    report_for(&traj, regime, c, d)
}

/// (-1)^{N+ - N-}·exp(total): each real pole contributes a factor -1 to the
/// product of exponentials.
pub fn signed_exp(total: f64, n_plus: usize, n_minus: usize) -> f64 {
    let sign = if (n_plus + n_minus).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * total.exp()
}

/// Assembles the identity from an existing trajectory.
pub fn report_for(traj: &Trajectory, regime: Regime, c: f64, d: f64) -> Result<IntegralReport> {
    let params = traj.params;
    let tail_neg = regularized_tail_neg(traj, c, regime)?;
    let principal_value = principal_value_mid(traj, c, d, DEFAULT_WINDOW)?;
    let tail_pos = tail_pos(traj, d)?;
    let (n_plus, n_minus) = traj.pole_counts();
    let lhs_exp = signed_exp(tail_neg.value + principal_value + tail_pos, n_plus, n_minus);
    let rhs_of = |form| total_integral_rhs_in(form, params.alpha, params.kappa, c, n_plus as i64, n_minus as i64);
    let rhs = rhs_of(IdentityForm::Derived)?;
    let rhs_printed = rhs_of(IdentityForm::Printed)?;
    Ok(IntegralReport {
        lhs_exp,
        rhs,
        rel_error: (lhs_exp - rhs).abs() / rhs.abs(),
        rhs_printed,
        rel_error_printed: (lhs_exp - rhs_printed).abs() / rhs_printed.abs(),
        n_plus,
        n_minus,
        c,
        d,
        tail_neg,
        principal_value,
        tail_pos,
    })
}
