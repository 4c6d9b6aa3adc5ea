//! Closed-form side of the theory: the threshold κ*, the monodromy datum ρ,
//! regime classification, connection formulas, and the leading asymptotics of
//! q and H at ±∞, plus the right-hand sides of the total-integral identities.

use crate::error::{Error, Result};
use crate::specfun::{arg_gamma, cos_pi, gamma, rgamma, sin_pi};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative distance from κ* treated as κ = κ*.
pub const SEPARATRIX_TOL: f64 = 1e-12;
/// |2cos φ + 1| below this counts as sitting on a singularity of the
/// singular-oscillatory asymptotics.
pub const SINGULAR_GUARD: f64 = 1e-6;

const SQRT_3: f64 = 1.732_050_807_568_877_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Trivial,
    Oscillatory,
    Separatrix,
    SingularOscillatory,
    HalfIntegerPositive,
}

/// Regime and connection parameters of one (α, κ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionData {
    pub rho: Option<Complex64>,
    pub kappa_star: f64,
    pub regime: Regime,
    pub b1: f64,
    pub psi1: f64,
    pub b2: f64,
    pub psi2: f64,
    pub c_n: Option<f64>,
}

fn is_positive_integer(v: f64) -> bool {
    v >= 1.0 && v == v.round()
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// κ* = 1/(√π Γ(α + 1/2)); zero when 1/2 - α is a positive integer.
pub fn kappa_star(alpha: f64) -> f64 {
    rgamma(alpha + 0.5) / PI.sqrt()
}

/// ρ = 1 - 2π^{3/2} κ e^{-iπα} / Γ(1/2 - α).
pub fn rho_from_kappa(alpha: f64, kappa: f64) -> Result<Complex64> {
    if is_positive_integer(alpha + 0.5) {
        return Err(Error::Domain(format!(
            "Gamma(1/2 - alpha) has a pole at alpha = {alpha}; use the half-integer formulas"
        )));
    }
    let scale = 2.0 * PI.powf(1.5) * kappa * rgamma(0.5 - alpha);
    Ok(Complex64::new(1.0 - scale * cos_pi(alpha), scale * sin_pi(alpha)))
}

/// Which x → -∞ behaviour (α, κ) falls into.
pub fn classify(alpha: f64, kappa: f64) -> Regime {
    if kappa == 0.0 {
        return Regime::Trivial;
    }
    if is_positive_integer(alpha + 0.5) {
        return Regime::HalfIntegerPositive;
    }
    if is_positive_integer(0.5 - alpha) {
        return Regime::SingularOscillatory;
    }
    let ks = kappa_star(alpha);
    if (kappa - ks).abs() <= SEPARATRIX_TOL * ks.abs().max(1.0) {
        return Regime::Separatrix;
    }
    if kappa * (kappa - ks) < 0.0 {
        Regime::Oscillatory
    } else {
        Regime::SingularOscillatory
    }
}

/// (b₁, ψ₁) for the oscillatory regime.
pub fn connection_osc(alpha: f64, kappa: f64) -> Result<(f64, f64)> {
    let rho = rho_from_kappa(alpha, kappa)?;
    let m2 = rho.norm_sqr();
    if !(m2 < 1.0) {
        return Err(Error::Domain(format!("oscillatory connection needs |rho| < 1, got {}", m2.sqrt())));
    }
    let b1_sq = -(SQRT_3 / (2.0 * PI)) * (1.0 - m2).ln();
    if b1_sq == 0.0 {
        return Ok((0.0, 0.0));
    }
    let b1 = b1_sq.sqrt();
    let psi1 = -PI / 4.0 - 2.0 * PI * alpha / 3.0 - arg_gamma(Complex64::new(0.0, -b1_sq / SQRT_3))? - rho.arg();
    Ok((b1, psi1))
}

/// (b₂, ψ₂) for the singular-oscillatory regime.
pub fn connection_sing(alpha: f64, kappa: f64) -> Result<(f64, f64)> {
    let rho = rho_from_kappa(alpha, kappa)?;
    let m2 = rho.norm_sqr();
    if !(m2 > 1.0) {
        return Err(Error::Domain(format!("singular connection needs |rho| > 1, got {}", m2.sqrt())));
    }
    let b2 = -(SQRT_3 / (2.0 * PI)) * (m2 - 1.0).ln();
    let psi2 = -2.0 * PI * alpha / 3.0 - arg_gamma(Complex64::new(0.5, -b2 / SQRT_3))? - rho.arg();
    Ok((b2, psi2))
}

/// Amplitude c_n = κ/(1 - √π n! κ) of the half-integer case α = n + 1/2.
pub fn half_integer_amplitude(n: u32, kappa: f64) -> Result<f64> {
    let den = 1.0 - PI.sqrt() * factorial(n) * kappa;
    if den.abs() <= SEPARATRIX_TOL {
        return Err(Error::Pole(format!("c_{n} diverges at kappa = kappa* = {kappa}")));
    }
    Ok(kappa / den)
}

/// Everything [`q_asym`] and [`h_asym`] need for (α, κ).
pub fn connection_data(alpha: f64, kappa: f64) -> Result<ConnectionData> {
    if !alpha.is_finite() || !kappa.is_finite() {
        return Err(Error::Domain(format!("alpha and kappa must be finite, got ({alpha}, {kappa})")));
    }
    let regime = classify(alpha, kappa);
    let rho = rho_from_kappa(alpha, kappa).ok();
    let mut data = ConnectionData {
        rho,
        kappa_star: kappa_star(alpha),
        regime,
        b1: 0.0,
        psi1: 0.0,
        b2: 0.0,
        psi2: 0.0,
        c_n: None,
    };
    match regime {
        Regime::Oscillatory => (data.b1, data.psi1) = connection_osc(alpha, kappa)?,
        Regime::SingularOscillatory => (data.b2, data.psi2) = connection_sing(alpha, kappa)?,
        Regime::HalfIntegerPositive => {
            let n = (alpha - 0.5).round() as u32;
            data.c_n = half_integer_amplitude(n, kappa).ok();
        }
        Regime::Trivial | Regime::Separatrix => {}
    }
    Ok(data)
}

fn phase(x: f64, amplitude_term: f64, psi: f64) -> f64 {
    x * x / SQRT_3 - amplitude_term / SQRT_3 * (2.0 * SQRT_3 * x * x).ln() + psi
}

/// Phase φ of the oscillatory (b₁²) or singular (b₂) asymptotics.
pub fn asymptotic_phase(x: f64, data: &ConnectionData) -> f64 {
    match data.regime {
        Regime::SingularOscillatory => phase(x, data.b2, data.psi2),
        _ => phase(x, data.b1 * data.b1, data.psi1),
    }
}

/// κ 2^{α-1/2} x^{2α-1} e^{-x²}.
fn plus_infinity_term(x: f64, alpha: f64, amplitude: f64) -> f64 {
    let n = 2.0 * alpha - 1.0;
    let power = if n == n.round() { x.powi(n as i32) } else { x.powf(n) };
    amplitude * 2f64.powf(alpha - 0.5) * power * (-x * x).exp()
}

fn singular_denominator(x: f64, phi: f64) -> Result<f64> {
    let den = 2.0 * phi.cos() + 1.0;
    if den.abs() < SINGULAR_GUARD {
        return Err(Error::SingularDenominator { x, denominator: den.abs() });
    }
    Ok(den)
}

/// Leading asymptotic value of q(x; α, κ) for |x| large.
pub fn q_asym(x: f64, data: &ConnectionData, alpha: f64, kappa: f64) -> Result<f64> {
    if data.regime == Regime::Trivial {
        return Ok(0.0);
    }
    if x > 0.0 {
        return Ok(plus_infinity_term(x, alpha, kappa));
    }
    match data.regime {
        Regime::Oscillatory => {
            let phi = asymptotic_phase(x, data);
            Ok(-2.0 * x / 3.0 + 2.0 * 6f64.sqrt() * data.b1 / 3.0 * phi.sin())
        }
        Regime::Separatrix => Ok(-2.0 * x),
        Regime::SingularOscillatory => {
            let phi = asymptotic_phase(x, data);
            Ok(-2.0 * x / 3.0 + 2.0 * x / singular_denominator(x, phi)?)
        }
        Regime::HalfIntegerPositive => half_integer_branch(data, alpha, kappa, |c| {
            plus_infinity_term(x, alpha, c)
        }, -2.0 * x),
        Regime::Trivial => Ok(0.0),
    }
}

fn half_integer_branch(
    data: &ConnectionData,
    alpha: f64,
    kappa: f64,
    below: impl Fn(f64) -> f64,
    at_threshold: f64,
) -> Result<f64> {
    let ks = data.kappa_star;
    if (kappa - ks).abs() <= SEPARATRIX_TOL * ks.max(1.0) {
        return Ok(at_threshold);
    }
    match data.c_n {
        Some(c) if kappa * (kappa - ks) < 0.0 => Ok(below(c)),
        _ => Err(Error::Domain(format!(
            "no x -> -infinity asymptotics for alpha = {alpha}, kappa = {kappa} > kappa*: the solution has a real pole"
        ))),
    }
}

/// Leading asymptotic value of the Hamiltonian H(x; α, κ) for |x| large.
pub fn h_asym(x: f64, data: &ConnectionData, alpha: f64, kappa: f64) -> Result<f64> {
    if data.regime == Regime::Trivial {
        return Ok(0.0);
    }
    if x > 0.0 {
        return Ok(-plus_infinity_term(x, alpha, kappa));
    }
    let cubic = -8.0 * x * x * x / 27.0;
    match data.regime {
        Regime::Oscillatory => {
            let phi = asymptotic_phase(x, data);
            let b1 = data.b1;
            Ok(cubic + 4.0 / 3.0 * (alpha + b1 * b1) * x - 2.0 * 2f64.sqrt() * b1 / 3.0 * phi.cos())
        }
        Regime::Separatrix => Ok(4.0 * alpha * x),
        Regime::SingularOscillatory => {
            let phi = asymptotic_phase(x, data);
            let den = singular_denominator(x, phi)?;
            Ok(cubic + 4.0 / 3.0 * (alpha + data.b2) * x + 4.0 / SQRT_3 * x * phi.sin() / den)
        }
        Regime::HalfIntegerPositive => half_integer_branch(data, alpha, kappa, |c| {
            -plus_infinity_term(x, alpha, c)
        }, 4.0 * alpha * x),
        Regime::Trivial => Ok(0.0),
    }
}

/// Points of [x_lo, x_hi] (x_hi < 0) where 2cos φ(x) + 1 = 0 in the
/// singular-oscillatory asymptotics, in increasing order.
pub fn predicted_singularities(data: &ConnectionData, x_lo: f64, x_hi: f64) -> Result<Vec<f64>> {
    if data.regime != Regime::SingularOscillatory {
        return Err(Error::Domain("predicted singularities need the singular-oscillatory regime".into()));
    }
    if !(x_lo < x_hi && x_hi < 0.0) {
        return Err(Error::Domain(format!("need x_lo < x_hi < 0, got [{x_lo}, {x_hi}]")));
    }
    if x_hi * x_hi <= data.b2.abs() {
        return Err(Error::Domain(format!("phase is not monotone up to x_hi = {x_hi}")));
    }
    let phi = |x: f64| asymptotic_phase(x, data);
    // φ decreases as x increases on x < -√|b₂|
    let (p_lo, p_hi) = (phi(x_lo), phi(x_hi));
    let mut out = Vec::new();
    let k_min = ((p_hi - 2.0 * PI / 3.0) / (2.0 * PI)).floor() as i64 - 1;
    let k_max = ((p_lo + 2.0 * PI / 3.0) / (2.0 * PI)).ceil() as i64 + 1;
    for k in k_min..=k_max {
        for base in [2.0 * PI / 3.0, 4.0 * PI / 3.0] {
            let target = base + 2.0 * PI * k as f64;
            if !(target <= p_lo && target >= p_hi) {
                continue;
            }
            let (mut a, mut b) = (x_lo, x_hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if phi(m) > target {
                    a = m;
                } else {
                    b = m;
                }
                if b - a < 1e-15 * a.abs().max(1.0) {
                    break;
                }
            }
            out.push(0.5 * (a + b));
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite roots"));
    Ok(out)
}

/// How the right-hand side of the total-integral identity is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentityForm {
    /// As obtained from the x → -∞ limits of the Lax-pair solution: the
    /// oscillatory constant carries 2^{α-1/2} and the separatrix one
    /// e^{c²}|c|^{2α}. These are the forms whose c-dependence cancels that of
    /// the regularized integrals.
    Derived,
    /// As stated in the theorem: 2^{1/2-α} and e^{-c²}|c|^{-2α} respectively.
    Printed,
}

/// Right-hand side of the total-integral identity.
///
/// Oscillatory regime: `(-1)^{N₊-N₋} √π e^{c²/3} |c|^{-2α} 3^{2α} (1-ρ)e^{iπα}
/// / (2^{α-1/2} Γ(1/2-α) (1-|ρ|²)^{2/3})`; separatrix: `(-1)^{N₊-N₋} √π
/// e^{c²} |c|^{2α} 2^{1/2+α} / Γ(1/2+α)`. See [`IdentityForm`] for the
/// printed variant.
pub fn total_integral_rhs(alpha: f64, kappa: f64, c: f64, n_plus: i64, n_minus: i64) -> Result<f64> {
    total_integral_rhs_in(IdentityForm::Derived, alpha, kappa, c, n_plus, n_minus)
}

/// [`total_integral_rhs`] in a chosen [`IdentityForm`].
pub fn total_integral_rhs_in(
    form: IdentityForm,
    alpha: f64,
    kappa: f64,
    c: f64,
    n_plus: i64,
    n_minus: i64,
) -> Result<f64> {
    if !(c < 0.0) {
        return Err(Error::Domain(format!("c must be negative, got {c}")));
    }
    if (alpha - 0.5) == (alpha - 0.5).round() {
        return Err(Error::Domain(format!("total integrals need alpha - 1/2 not an integer, got {alpha}")));
    }
    let sign = if (n_plus - n_minus).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
    let common = sign * PI.sqrt();
    let abs_c = c.abs();
    match classify(alpha, kappa) {
        Regime::Oscillatory => {
            let rho = rho_from_kappa(alpha, kappa)?;
            let twisted = (1.0 - rho) * Complex64::from_polar(1.0, PI * alpha);
            if twisted.im.abs() > 1e-10 * twisted.norm().max(1.0) {
                return Err(Error::Inconsistent(format!(
                    "(1 - rho) e^(i pi alpha) = {twisted} should be real"
                )));
            }
            let m2 = rho.norm_sqr();
            let two_power = match form {
                IdentityForm::Derived => 2f64.powf(alpha - 0.5),
                IdentityForm::Printed => 2f64.powf(0.5 - alpha),
            };
            Ok(common * (c * c / 3.0).exp() * abs_c.powf(-2.0 * alpha) * 3f64.powf(2.0 * alpha) * twisted.re
                / (two_power * gamma(0.5 - alpha)? * (1.0 - m2).powf(2.0 / 3.0)))
        }
        Regime::Separatrix => {
            let c_factor = match form {
                IdentityForm::Derived => (c * c).exp() * abs_c.powf(2.0 * alpha),
                IdentityForm::Printed => (-c * c).exp() * abs_c.powf(-2.0 * alpha),
            };
            Ok(common * c_factor * 2f64.powf(0.5 + alpha) * rgamma(0.5 + alpha))
        }
        Regime::Trivial => Err(Error::Domain("the trivial solution has no total-integral identity".into())),
        other => Err(Error::Domain(format!("no total-integral identity in regime {other:?}"))),
    }
}
