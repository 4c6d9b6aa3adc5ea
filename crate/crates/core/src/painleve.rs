//! Pole-aware integration of PIV,
//! `q'' = q'^2/(2q) + 3q^3/2 + 4xq^2 + 2(x^2 - 2α)q`,
//! from parabolic-cylinder data at large positive x down the real axis.
//!
//! With β = 0 every real zero of q is a double zero, so `q = s·y²` with a fixed
//! sign s between poles and `y'' = 3y^5/4 + 2sxy^3 + (x^2 - 2α)y` is regular at
//! the zeros. Poles are simple with residue ±1. When |q| climbs past
//! [`CHART_SWITCH`]·(1 + |x|) the pole ahead is located from the reciprocal
//! chart w = 1/q and the solution is carried across it along a semicircle in
//! the lower half plane; integrating along the upper semicircle as well gives
//! the residue and the pole location by contour integrals. The real part of
//! ∫q along the lower arc is exactly the principal value across the pole.

use crate::error::{Error, Result};
use crate::ode::{drive, Control, Flow, System};
use crate::specfun::{erfc, value_and_slope};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// |q| / (1 + |x|) at which the pole detour is started.
pub const CHART_SWITCH: f64 = 50.0;
/// Samples closer than this to a pole are not reported.
pub const POLE_EXCLUSION: f64 = 1e-2;
pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_SEED: f64 = 8.0;
/// Lowest seed point accepted by [`integrate`]; below it the neglected
/// nonlinear part of the boundary behaviour exceeds double precision.
pub const MIN_SEED: f64 = 6.0;
/// A fitted residue must be this close to ±1.
pub const RESIDUE_SLACK: f64 = 0.05;

/// (α, κ) selecting a Clarkson-McLeod solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub alpha: f64,
    pub kappa: f64,
    /// α + 1/2 is a positive integer.
    pub half_integer_pos: bool,
    /// 1/2 - α is a positive integer.
    pub half_integer_neg: bool,
}

fn is_positive_integer(v: f64) -> bool {
    v >= 1.0 && v == v.round()
}

impl Params {
    pub fn new(alpha: f64, kappa: f64) -> Result<Self> {
        if !alpha.is_finite() || !kappa.is_finite() {
            return Err(Error::Domain(format!("alpha and kappa must be finite, got ({alpha}, {kappa})")));
        }
        Ok(Params {
            alpha,
            kappa,
            half_integer_pos: is_positive_integer(alpha + 0.5),
            half_integer_neg: is_positive_integer(0.5 - alpha),
        })
    }

    /// n with α = n + 1/2, when α + 1/2 is a positive integer.
    pub fn half_integer_index(&self) -> Option<u32> {
        self.half_integer_pos.then(|| (self.alpha - 0.5).round() as u32)
    }

    /// Order of the parabolic cylinder function in the boundary condition.
    pub fn order(&self) -> f64 {
        self.alpha - 0.5
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    /// u = q
    Direct,
    /// u = 1/q
    Inverse,
}

/// A point of the solution in either chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub chart: Chart,
    pub u: f64,
    pub du: f64,
}

impl State {
    /// The same point expressed in the other chart.
    pub fn switch_chart(&self) -> Result<State> {
        if self.u == 0.0 {
            return Err(Error::Pole(format!("cannot invert u = 0 at x = {}", self.x)));
        }
        let chart = match self.chart {
            Chart::Direct => Chart::Inverse,
            Chart::Inverse => Chart::Direct,
        };
        Ok(State { x: self.x, chart, u: 1.0 / self.u, du: -self.du / (self.u * self.u) })
    }
}

/// A real pole crossed during integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleRecord {
    pub location: f64,
    pub residue: i32,
    /// Residue from the contour integral, before rounding.
    pub fitted_residue: f64,
}

/// (x, q, q') at an output point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub x: f64,
    pub q: f64,
    pub dq: f64,
}

/// Integrator node in the root chart, q = sign·y².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub x: f64,
    pub y: f64,
    pub dy: f64,
    pub d2y: f64,
    pub sign: f64,
    /// ∫_{x_start}^{x} q, principal value across poles.
    pub integral: f64,
}

impl Node {
    pub fn q(&self) -> f64 {
        self.sign * self.y * self.y
    }
    pub fn dq(&self) -> f64 {
        2.0 * self.sign * self.y * self.dy
    }
    pub fn d2q(&self) -> f64 {
        2.0 * self.sign * (self.dy * self.dy + self.y * self.d2y)
    }
}

/// Solution values at a point, with the Hamiltonian and σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub q: f64,
    pub dq: f64,
    pub hamiltonian: f64,
    pub sigma: f64,
}

/// Immutable record of one integration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub params: Params,
    /// Ordered in the direction of integration; pole neighbourhoods removed.
    pub samples: Vec<Sample>,
    pub poles: Vec<PoleRecord>,
    pub x_start: f64,
    pub x_end: f64,
    /// Pole-free pieces, each ordered by decreasing x.
    segments: Vec<Vec<Node>>,
}

/// Right-hand side of PIV solved for q''.
pub fn piv_rhs(x: f64, q: f64, dq: f64, alpha: f64) -> Result<f64> {
    if q == 0.0 {
        return Err(Error::Pole(format!("q'^2/(2q) is singular at q = 0 (x = {x})")));
    }
    Ok(dq * dq / (2.0 * q) + 1.5 * q * q * q + 4.0 * x * q * q + 2.0 * (x * x - 2.0 * alpha) * q)
}

/// Tolerance on |w'^2 - 1| at w = 0 for a simple pole of residue ±1.
const REGULARITY_TOL: f64 = 1e-3;

/// w'' for w = 1/q: `3(w'^2 - 1)/(2w) - 4x - 2(x^2 - 2α)w`.
///
/// At w = 0 the first term takes its limiting value; substituting the local
/// expansion w = ±ε + x₀ε² + ... gives w''(x₀) = 2x₀.
pub fn inverse_chart_rhs(x: f64, w: f64, dw: f64, alpha: f64) -> Result<f64> {
    let gap = dw * dw - 1.0;
    if w.abs() < 1e-12 {
        if gap.abs() > REGULARITY_TOL {
            return Err(Error::IrregularPole {
                x,
                detail: format!("w = 0 with w' = {dw}; a simple pole needs w' = ±1"),
            });
        }
        return Ok(2.0 * x - 2.0 * (x * x - 2.0 * alpha) * w);
    }
    Ok(1.5 * gap / w - 4.0 * x - 2.0 * (x * x - 2.0 * alpha) * w)
}

/// y'' in the root chart q = s·y².
pub fn root_chart_rhs(x: f64, y: f64, sign: f64, alpha: f64) -> f64 {
    let y2 = y * y;
    y * (0.75 * y2 * y2 + 2.0 * sign * x * y2 + (x * x - 2.0 * alpha))
}

fn root_chart_rhs_c(z: Complex64, y: Complex64, sign: f64, alpha: f64) -> Complex64 {
    let y2 = y * y;
    y * (y2 * y2 * 0.75 + z * y2 * (2.0 * sign) + (z * z - 2.0 * alpha))
}

/// H = q³/4 + xq² + (x² - 2α)q - q'²/(4q).
pub fn hamiltonian(q: f64, dq: f64, x: f64, alpha: f64) -> Result<f64> {
    if q == 0.0 {
        return Err(Error::Pole(format!("H has a pole where q = 0 (x = {x})")));
    }
    Ok(polynomial_part(q, x, alpha) - dq * dq / (4.0 * q))
}

fn polynomial_part(q: f64, x: f64, alpha: f64) -> f64 {
    q * (0.25 * q * q + x * q + (x * x - 2.0 * alpha))
}

/// σ_{α+1/2} = (q - H)/2.
pub fn sigma_from_q(q: f64, dq: f64, x: f64, alpha: f64) -> Result<f64> {
    Ok(0.5 * (q - hamiltonian(q, dq, x, alpha)?))
}

/// q = -(σ'' + 2xσ' - 2σ)/(2σ' + 4α + 2), the inverse of [`sigma_from_q`].
pub fn q_from_sigma(sigma: f64, dsigma: f64, d2sigma: f64, x: f64, alpha: f64) -> Result<f64> {
    let den = 2.0 * dsigma + 4.0 * alpha + 2.0;
    if den == 0.0 {
        return Err(Error::Pole(format!("2σ' + 4α + 2 vanishes at x = {x}")));
    }
    Ok(-(d2sigma + 2.0 * x * dsigma - 2.0 * sigma) / den)
}

/// q(x; 1/2, κ) = 2κ e^{-x²} / (2 - κ√π erfc(x)).
pub fn exact_half(x: f64, kappa: f64) -> Result<f64> {
    let (den, scale) = exact_half_denominator(x, kappa);
    if den.abs() <= 4.0 * f64::EPSILON * scale {
        return Err(Error::Pole(format!("2 - kappa*sqrt(pi)*erfc(x) vanishes at x = {x}")));
    }
    Ok(2.0 * kappa * (-x * x).exp() / den)
}

/// Derivative of [`exact_half`] in x.
pub fn exact_half_deriv(x: f64, kappa: f64) -> Result<f64> {
    let q = exact_half(x, kappa)?;
    // den' = 2κ e^{-x²}, so q' = -2x q - q²
    Ok(-2.0 * x * q - q * q)
}

/// Denominator 2 - κ√π erfc(x) and the size of the terms that cancel in it.
pub(crate) fn exact_half_denominator(x: f64, kappa: f64) -> (f64, f64) {
    let mut k = kappa * PI.sqrt();
    // κ = 1/√π is not representable; within the separatrix tolerance take it exactly
    if (k - 1.0).abs() <= crate::asymptotics::SEPARATRIX_TOL {
        k = 1.0;
    }
    if x >= 0.0 {
        let t = k * erfc(x);
        (2.0 - t, 2f64.max(t.abs()))
    } else {
        // erfc(x) = 2 - erfc(-x) keeps the κ = 1/√π cancellation exact
        let (a, b) = (2.0 * (1.0 - k), k * erfc(-x));
        (a + b, a.abs().max(b.abs()))
    }
}

/// Boundary data q = κD²_{α-1/2}(√2 x₀), q' = 2√2 κ D D'.
pub fn seed_at_plus_infinity(params: Params, x0: f64) -> Result<State> {
    let (y, dy, sign) = seed_root(params, x0)?;
    Ok(State { x: x0, chart: Chart::Direct, u: sign * y * y, du: 2.0 * sign * y * dy })
}

fn seed_root(params: Params, x0: f64) -> Result<(f64, f64, f64)> {
    if !x0.is_finite() {
        return Err(Error::Domain(format!("seed point must be finite, got {x0}")));
    }
    if params.kappa == 0.0 {
        return Ok((0.0, 0.0, 1.0));
    }
    let (d, dd) = value_and_slope(params.order(), SQRT_2 * x0)?;
    let amp = params.kappa.abs().sqrt();
    let y = amp * d;
    let q = params.kappa * d * d;
    if q.abs() < 1e-300 {
        return Err(Error::SeedUnderflow { x0, q: q.abs() });
    }
    Ok((y, amp * SQRT_2 * dd, params.kappa.signum()))
}

/// Accepted range of integrator tolerances.
pub const MIN_TOL: f64 = 1e-12;
pub const MAX_TOL: f64 = 1e-4;

/// Rejects tolerances outside [MIN_TOL, MAX_TOL].
pub fn check_tol(tol: f64) -> Result<()> {
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(Error::Domain(format!("tol must lie in [{MIN_TOL:e}, {MAX_TOL:e}], got {tol}")));
    }
    Ok(())
}

/// Real root-chart system carrying [y, y', ∫q].
struct AxisSystem {
    alpha: f64,
    sign: f64,
    tol: f64,
    nodes: Vec<Node>,
    trigger: bool,
}

impl AxisSystem {
    fn q_of(&self, y: &[f64; 3]) -> (f64, f64) {
        (self.sign * y[0] * y[0], 2.0 * self.sign * y[0] * y[1])
    }
}

impl System<f64, 3> for AxisSystem {
    fn rhs(&mut self, x: f64, y: &[f64; 3]) -> Result<[f64; 3]> {
        Ok([y[1], root_chart_rhs(x, y[0], self.sign, self.alpha), self.sign * y[0] * y[0]])
    }

    fn error_norm(&self, y_old: &[f64; 3], y_new: &[f64; 3], err: &[f64; 3]) -> f64 {
        let scale = y_old[0]
            .abs()
            .max(y_new[0].abs())
            .max(y_old[1].abs())
            .max(y_new[1].abs())
            .max(1e-300);
        let e_root = err[0].abs().max(err[1].abs()) / (self.tol * scale);
        let e_int = err[2].abs() / (self.tol * (1.0 + y_new[2].abs()));
        e_root.max(e_int)
    }

    fn max_step(&self, x: f64, y: &[f64; 3], _dy: &[f64; 3]) -> f64 {
        let (q, dq) = self.q_of(y);
        if q.abs() > 1.0 + x.abs() && dq != 0.0 {
            0.25 * (q / dq).abs()
        } else {
            f64::INFINITY
        }
    }

    fn accept(&mut self, x: f64, y: &[f64; 3], dy: &[f64; 3]) -> Result<Flow> {
        self.nodes.push(Node { x, y: y[0], dy: y[1], d2y: dy[1], sign: self.sign, integral: y[2] });
        let (q, dq) = self.q_of(y);
        if q.abs() >= CHART_SWITCH * (1.0 + x.abs()) && pole_offset(x, q, dq, self.alpha)? < 0.0 {
            self.trigger = true;
            return Ok(Flow::Stop);
        }
        Ok(Flow::Continue)
    }
}

/// Signed distance to the nearest zero of w = 1/q from a quadratic model.
fn pole_offset(x: f64, q: f64, dq: f64, alpha: f64) -> Result<f64> {
    let w = 1.0 / q;
    let dw = -dq / (q * q);
    if dw == 0.0 {
        return Ok(f64::INFINITY);
    }
    let d2w = inverse_chart_rhs(x, w, dw, alpha)?;
    let mut d = -w / dw;
    for _ in 0..3 {
        d = -(w + 0.5 * d2w * d * d) / dw;
    }
    Ok(d)
}

/// Complex root-chart system on the circle z = c + R e^{iθ}, carrying
/// [y, y', ∫q dz, ∫(z - c) q dz].
struct ArcSystem {
    alpha: f64,
    sign: f64,
    centre: f64,
    radius: f64,
    tol: f64,
}

impl ArcSystem {
    fn z(&self, theta: f64) -> (Complex64, Complex64) {
        let e = Complex64::from_polar(1.0, theta);
        (self.centre + e * self.radius, Complex64::new(0.0, self.radius) * e)
    }
}

impl System<Complex64, 4> for ArcSystem {
    fn rhs(&mut self, theta: f64, y: &[Complex64; 4]) -> Result<[Complex64; 4]> {
        let (z, dz) = self.z(theta);
        let q = y[0] * y[0] * self.sign;
        Ok([
            y[1] * dz,
            root_chart_rhs_c(z, y[0], self.sign, self.alpha) * dz,
            q * dz,
            (z - self.centre) * q * dz,
        ])
    }

    fn error_norm(&self, o: &[Complex64; 4], n: &[Complex64; 4], err: &[Complex64; 4]) -> f64 {
        let scale = o[0].norm().max(n[0].norm()).max(o[1].norm()).max(n[1].norm()).max(1e-300);
        let e_root = err[0].norm().max(err[1].norm()) / (self.tol * scale);
        let e_int = err[2].norm().max(err[3].norm()) / (self.tol * (1.0 + n[2].norm()));
        e_root.max(e_int)
    }
}

struct Crossing {
    record: PoleRecord,
    landing: Node,
}

fn cross_pole(alpha: f64, sign: f64, tol: f64, at: &Node) -> Result<Crossing> {
    let (q, dq) = (at.q(), at.dq());
    let d = pole_offset(at.x, q, dq, alpha)?;
    let radius = d.abs();
    let centre = at.x + d;
    let mut sys = ArcSystem { alpha, sign, centre, radius, tol: tol.min(1e-10) };
    let start = [
        Complex64::new(at.y, 0.0),
        Complex64::new(at.dy, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
    ];
    let ctrl = Control { h_init: 0.02, h_max: 0.1, h_min_rel: 1e-12, max_steps: 200_000 };
    let lower = drive(&mut sys, 0.0, start, -PI, ctrl)?;
    let upper = drive(&mut sys, 0.0, start, PI, ctrl)?;
    let loop_q = upper.y[2] - lower.y[2];
    let loop_zq = upper.y[3] - lower.y[3];
    let fitted = loop_q / Complex64::new(0.0, 2.0 * PI);
    let residue = if fitted.re >= 0.0 { 1 } else { -1 };
    if (fitted - residue as f64).norm() > RESIDUE_SLACK {
        return Err(Error::IrregularPole {
            x: centre,
            detail: format!("contour residue {fitted} is not within {RESIDUE_SLACK} of ±1"),
        });
    }
    let location = centre + (loop_zq / loop_q).re;

    let (y_b, dy_b) = (lower.y[0], lower.y[1]);
    let q_b = y_b * y_b * sign;
    let dq_b = y_b * dy_b * (2.0 * sign);
    if q_b.im.abs() > 1e-6 * q_b.norm() {
        return Err(Error::IrregularPole {
            x: centre,
            detail: format!("q is not real after the detour: {q_b}"),
        });
    }
    let new_sign = if q_b.re >= 0.0 { 1.0 } else { -1.0 };
    let y_new = q_b.re.abs().sqrt();
    let dy_new = dq_b.re / (2.0 * new_sign * y_new);
    let x_b = centre - radius;
    let landing = Node {
        x: x_b,
        y: y_new,
        dy: dy_new,
        d2y: root_chart_rhs(x_b, y_new, new_sign, alpha),
        sign: new_sign,
        integral: at.integral + lower.y[2].re,
    };
    Ok(Crossing {
        record: PoleRecord { location, residue, fitted_residue: fitted.re },
        landing,
    })
}

/// Integrates the (α, κ) solution from the seed point `x_from` down to `x_to`.
///
/// Poles met on the way are crossed and logged. This is plain shooting; near
/// κ = κ* the solution is exponentially unstable as x → -∞ and [`solve`]
/// should be used instead.
pub fn integrate(params: Params, x_from: f64, x_to: f64, tol: f64) -> Result<Trajectory> {
    check_tol(tol)?;
    if !(x_to < x_from) || !x_to.is_finite() {
        return Err(Error::Domain(format!("integration runs downward: need x_to < x_from, got {x_from} -> {x_to}")));
    }
    if x_from < MIN_SEED {
        return Err(Error::Domain(format!("seed point x_from = {x_from} is below {MIN_SEED}")));
    }
    if params.kappa == 0.0 {
        return Ok(trivial_trajectory(params, x_from, x_to));
    }
    let (y0, dy0, sign0) = seed_root(params, x_from)?;
    let mut segments: Vec<Vec<Node>> = Vec::new();
    let mut poles = Vec::new();
    let mut start = Node {
        x: x_from,
        y: y0,
        dy: dy0,
        d2y: root_chart_rhs(x_from, y0, sign0, params.alpha),
        sign: sign0,
        integral: 0.0,
    };
    let mut h = 1e-2;
    loop {
        let mut sys = AxisSystem {
            alpha: params.alpha,
            sign: start.sign,
            tol,
            nodes: vec![start],
            trigger: false,
        };
        let ctrl = Control { h_init: h, h_max: 0.1, h_min_rel: 1e-13, max_steps: 5_000_000 };
        let end = drive(&mut sys, start.x, [start.y, start.dy, start.integral], x_to, ctrl)?;
        h = end.h;
        let last = *sys.nodes.last().expect("segment has its start node");
        segments.push(sys.nodes);
        if !sys.trigger {
            break;
        }
        let crossing = cross_pole(params.alpha, last.sign, tol, &last)?;
        poles.push(crossing.record);
        start = crossing.landing;
        if start.x <= x_to {
            segments.push(vec![start]);
            break;
        }
        h = h.min(0.5 * (last.x - start.x));
    }
    let x_end = segments.last().and_then(|s| s.last()).map_or(x_to, |n| n.x);
    Ok(Trajectory::from_parts(params, segments, poles, x_from, x_end))
}

fn trivial_trajectory(params: Params, x_from: f64, x_to: f64) -> Trajectory {
    let n = ((x_from - x_to) / 0.05).ceil().max(1.0) as usize;
    let nodes = (0..=n)
        .map(|i| Node {
            x: if i == n { x_to } else { x_from - (x_from - x_to) * i as f64 / n as f64 },
            y: 0.0,
            dy: 0.0,
            d2y: 0.0,
            sign: 1.0,
            integral: 0.0,
        })
        .collect();
    Trajectory::from_parts(params, vec![nodes], Vec::new(), x_from, x_to)
}

/// Solves for q(x; α, κ) on [x_to, x_from].
///
/// At κ = κ* (with κ* > 0) and x_to well into the negative axis, forward
/// shooting amplifies rounding like e^{x²}; the solution is then found as a
/// boundary-value problem pinned to its x → -∞ expansion. Everything else is
/// integrated directly.
pub fn solve(params: Params, x_from: f64, x_to: f64, tol: f64) -> Result<Trajectory> {
    let kappa_star = crate::asymptotics::kappa_star(params.alpha);
    let on_separatrix = kappa_star > 0.0
        && (params.kappa - kappa_star).abs() <= crate::asymptotics::SEPARATRIX_TOL * kappa_star.max(1.0);
    if on_separatrix && x_to < -2.0 {
        return Ok(crate::separatrix::solve_separatrix(params, x_from, x_to, tol)?.trajectory);
    }
    integrate(params, x_from, x_to, tol)
}

fn hermite5(x0: f64, x1: f64, a: (f64, f64, f64), b: (f64, f64, f64), x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let (t4, t5) = (t3 * t, t3 * t2);
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 0.5 * (t3 - 2.0 * t4 + t5);
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let d0 = -30.0 * t2 + 60.0 * t3 - 30.0 * t4;
    let d1 = 1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4;
    let d2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4);
    let d3 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4);
    let d4 = -12.0 * t2 + 28.0 * t3 - 15.0 * t4;
    let d5 = 30.0 * t2 - 60.0 * t3 + 30.0 * t4;
    let f = a.0 * h0 + h * a.1 * h1 + h * h * a.2 * h2 + b.0 * h5 + h * b.1 * h4 + h * h * b.2 * h3;
    let df = (a.0 * d0 + h * a.1 * d1 + h * h * a.2 * d2 + b.0 * d5 + h * b.1 * d4 + h * h * b.2 * d3) / h;
    (f, df)
}

impl Trajectory {
    pub(crate) fn from_parts(
        params: Params,
        segments: Vec<Vec<Node>>,
        poles: Vec<PoleRecord>,
        x_start: f64,
        x_end: f64,
    ) -> Trajectory {
        let mut samples = Vec::new();
        for node in segments.iter().flatten() {
            if poles.iter().any(|p| (node.x - p.location).abs() < POLE_EXCLUSION) {
                continue;
            }
            if samples.last().is_some_and(|s: &Sample| s.x <= node.x) {
                continue;
            }
            samples.push(Sample { x: node.x, q: node.q(), dq: node.dq() });
        }
        Trajectory { params, samples, poles, x_start, x_end, segments }
    }

    /// Pole-free pieces of the integration, each ordered by decreasing x.
    pub fn segments(&self) -> &[Vec<Node>] {
        &self.segments
    }

    /// Number of poles with residue +1 and -1.
    pub fn pole_counts(&self) -> (usize, usize) {
        let plus = self.poles.iter().filter(|p| p.residue > 0).count();
        (plus, self.poles.len() - plus)
    }

    fn locate(&self, x: f64) -> Result<(&Node, &Node)> {
        for seg in &self.segments {
            let (hi, lo) = (seg[0].x, seg[seg.len() - 1].x);
            if x > hi || x < lo {
                continue;
            }
            if seg.len() == 1 {
                return Ok((&seg[0], &seg[0]));
            }
            let k = seg.partition_point(|n| n.x > x).clamp(1, seg.len() - 1);
            return Ok((&seg[k - 1], &seg[k]));
        }
        if self.poles.iter().any(|p| (x - p.location).abs() < 0.1) && x <= self.x_start && x >= self.x_end {
            return Err(Error::Pole(format!("x = {x} lies inside a pole detour")));
        }
        Err(Error::OutOfRange(format!(
            "x = {x} is outside the trajectory [{}, {}]",
            self.x_end, self.x_start
        )))
    }

    /// Root-chart values (y, y', sign) at x.
    fn root_at(&self, x: f64) -> Result<(f64, f64, f64)> {
        let (a, b) = self.locate(x)?;
        if a.x == b.x {
            return Ok((a.y, a.dy, a.sign));
        }
        let (y, dy) = hermite5(a.x, b.x, (a.y, a.dy, a.d2y), (b.y, b.dy, b.d2y), x);
        Ok((y, dy, a.sign))
    }

    /// q, q', H and σ at x.
    pub fn eval(&self, x: f64) -> Result<Point> {
        let (y, dy, sign) = self.root_at(x)?;
        let q = sign * y * y;
        let dq = 2.0 * sign * y * dy;
        // q'^2/(4q) = sign·y'^2 stays finite through double zeros of q
        let h = polynomial_part(q, x, self.params.alpha) - sign * dy * dy;
        Ok(Point { x, q, dq, hamiltonian: h, sigma: 0.5 * (q - h) })
    }

    pub fn q(&self, x: f64) -> Result<f64> {
        Ok(self.eval(x)?.q)
    }

    /// ∫_{x_start}^{x} q, taking principal values across poles.
    pub fn integral(&self, x: f64) -> Result<f64> {
        let (a, b) = self.locate(x)?;
        if a.x == b.x {
            return Ok(a.integral);
        }
        let (v, _) = hermite5(a.x, b.x, (a.integral, a.q(), a.dq()), (b.integral, b.q(), b.dq()), x);
        Ok(v)
    }

    /// Nodes in integration order.
    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.segments.iter().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rhs_direct_substitution() {
        assert_eq!(piv_rhs(0.0, 1.0, 0.0, 0.0).unwrap(), 1.5);
        assert!(piv_rhs(0.0, 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn rhs_odd_symmetry() {
        let a = piv_rhs(1.0, 0.7, 0.2, 0.3).unwrap();
        let b = piv_rhs(-1.0, -0.7, 0.2, 0.3).unwrap();
        assert_relative_eq!(a, -b, max_relative = 1e-14);
    }

    #[test]
    fn rhs_on_closed_form() {
        let (x, kappa, h) = (0.0, 0.3, 1e-3);
        let q = exact_half(x, kappa).unwrap();
        let dq = exact_half_deriv(x, kappa).unwrap();
        // q'' from differentiating q' = -2xq - q²
        let d2q = -2.0 * q - 2.0 * x * dq - 2.0 * q * dq;
        assert!((piv_rhs(x, q, dq, 0.5).unwrap() - d2q).abs() < 1e-9);
        let fd = (exact_half(x + h, kappa).unwrap() - 2.0 * q + exact_half(x - h, kappa).unwrap()) / (h * h);
        assert!((fd - d2q).abs() < 1e-5);
    }

    #[test]
    fn inverse_chart_limit_is_finite() {
        assert_eq!(inverse_chart_rhs(2.0, 0.0, 1.0, 0.0).unwrap(), 4.0);
        assert!(inverse_chart_rhs(2.0, 0.0, 1.5, 0.0).is_err());
    }

    #[test]
    fn inverse_chart_matches_direct_chart() {
        let (x, alpha) = (0.7, 0.3);
        for &(q, dq) in &[(5.0, 2.0), (-12.0, 30.0), (20.0, -150.0)] {
            let d2q = piv_rhs(x, q, dq, alpha).unwrap();
            let w = 1.0 / q;
            let dw = -dq / (q * q);
            let expected = -d2q / (q * q) + 2.0 * dq * dq / (q * q * q);
            let got = inverse_chart_rhs(x, w, dw, alpha).unwrap();
            assert!((got - expected).abs() < 1e-8 * expected.abs().max(1.0));
        }
    }

    #[test]
    fn root_chart_reproduces_piv() {
        let (x, alpha, sign, y, dy) = (-1.3, 0.25, -1.0, 0.8, 0.4);
        let q = sign * y * y;
        let dq = 2.0 * sign * y * dy;
        let d2y = root_chart_rhs(x, y, sign, alpha);
        let d2q = 2.0 * sign * (dy * dy + y * d2y);
        assert_relative_eq!(d2q, piv_rhs(x, q, dq, alpha).unwrap(), max_relative = 1e-13);
    }

    #[test]
    fn hamiltonian_and_sigma_values() {
        assert_eq!(hamiltonian(1.0, 0.0, 0.0, 0.0).unwrap(), 0.25);
        assert_eq!(sigma_from_q(1.0, 0.0, 0.0, 0.0).unwrap(), 0.375);
        assert!(hamiltonian(0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn sigma_round_trip_on_closed_form() {
        let (alpha, kappa) = (0.5, 0.3);
        for x in [-1.0, 0.0, 0.7] {
            let q = exact_half(x, kappa).unwrap();
            let dq = exact_half_deriv(x, kappa).unwrap();
            let d2q = piv_rhs(x, q, dq, alpha).unwrap();
            // σ' = (q' - H')/2 with H' = q² + 2xq
            let s = sigma_from_q(q, dq, x, alpha).unwrap();
            let ds = 0.5 * (dq - q * q - 2.0 * x * q);
            let d2s = 0.5 * (d2q - 2.0 * q * dq - 2.0 * q - 2.0 * x * dq);
            assert_relative_eq!(q_from_sigma(s, ds, d2s, x, alpha).unwrap(), q, max_relative = 1e-12);
        }
    }

    #[test]
    fn closed_form_values() {
        let want = 0.6 / (2.0 - 0.3 * PI.sqrt());
        assert_relative_eq!(exact_half(0.0, 0.3).unwrap(), want, max_relative = 1e-15);
        assert!((want - 0.408_646).abs() < 1e-6);
        assert_eq!(exact_half(-3.0, 0.0).unwrap(), 0.0);
        let ratio = exact_half(-15.0, 1.0 / PI.sqrt()).unwrap() / 30.0;
        assert!((ratio - 1.0).abs() < 1e-2);
        assert!(exact_half(0.0, 2.0 / PI.sqrt()).is_err());
    }

    #[test]
    fn seed_values() {
        let p = Params::new(0.5, 0.3).unwrap();
        let s = seed_at_plus_infinity(p, 5.0).unwrap();
        assert_relative_eq!(s.u, 0.3 * (-25f64).exp(), max_relative = 1e-12);
        let z = seed_at_plus_infinity(Params::new(0.5, 0.0).unwrap(), 5.0).unwrap();
        assert_eq!((z.u, z.du), (0.0, 0.0));
    }

    #[test]
    fn params_flags() {
        let p = Params::new(1.5, 0.1).unwrap();
        assert!(p.half_integer_pos && !p.half_integer_neg);
        assert_eq!(p.half_integer_index(), Some(1));
        let m = Params::new(-0.5, 0.1).unwrap();
        assert!(!m.half_integer_pos && m.half_integer_neg);
        let g = Params::new(0.25, 0.1).unwrap();
        assert!(!g.half_integer_pos && !g.half_integer_neg);
        assert!(Params::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn chart_round_trip() {
        let s = State { x: 1.0, chart: Chart::Direct, u: 4.0, du: -2.0 };
        let back = s.switch_chart().unwrap().switch_chart().unwrap();
        assert_relative_eq!(back.u, s.u);
        assert_relative_eq!(back.du, s.du);
    }

    #[test]
    fn quintic_hermite_is_exact_on_quintics() {
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(3) - 0.3 * x.powi(5);
        let dp = |x: f64| -2.0 + 1.5 * x * x - 1.5 * x.powi(4);
        let d2p = |x: f64| 3.0 * x - 6.0 * x.powi(3);
        let (a, b) = (0.3, -0.9);
        let (f, df) = hermite5(a, b, (p(a), dp(a), d2p(a)), (p(b), dp(b), d2p(b)), -0.2);
        assert_relative_eq!(f, p(-0.2), max_relative = 1e-13);
        assert_relative_eq!(df, dp(-0.2), max_relative = 1e-12);
    }

    #[test]
    fn trivial_solution_is_zero() {
        let t = integrate(Params::new(0.5, 0.0).unwrap(), 8.0, -5.0, 1e-9).unwrap();
        assert!(t.samples.iter().all(|s| s.q == 0.0));
        assert!(t.poles.is_empty());
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = Params::new(0.5, 0.3).unwrap();
        assert!(integrate(p, 8.0, 9.0, 1e-9).is_err());
        assert!(integrate(p, 8.0, -1.0, 1e-2).is_err());
        assert!(integrate(p, 4.0, -1.0, 1e-9).is_err());
    }
}
