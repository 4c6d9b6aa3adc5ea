//! Real-order parabolic cylinder functions D_ν(s) for real s.
//!
//! D_ν is the solution of Weber's equation `D'' = (s²/4 - ν - 1/2) D` that is
//! recessive as s → +∞. Evaluation uses two regimes:
//!
//! * for s ≥ [`ASYMPTOTIC_FROM`] the large-argument series
//!   `s^ν e^{-s²/4} Σ (-1)^k (-ν)_{2k} / (k! (2s²)^k)`;
//! * below that, the value and slope at `ASYMPTOTIC_FROM` are carried inward by
//!   local Taylor expansions of Weber's equation (the coefficients obey a
//!   three-term recurrence, so each step is exact up to truncation).
//!
//! Going inward the recessive solution grows relative to every other solution,
//! so the continuation is stable. For negative arguments we write
//! `D_ν(-x) = cos(πν) D_ν(x) + W(x)`, where W is the dominant solution fixed by
//! the closed-form values of D_ν and D'_ν at the origin; W is continued outward
//! (again the stable direction) or taken from its own asymptotic series. At
//! integer ν the coefficient of W vanishes exactly, which keeps the Hermite
//! parity D_n(-x) = (-1)^n D_n(x) intact to rounding.

use super::gamma::{cos_pi, rgamma, sin_pi};
use crate::error::{Error, Result};
use std::f64::consts::{PI, SQRT_2};

/// Arguments at or above this use the asymptotic series directly.
pub const ASYMPTOTIC_FROM: f64 = 10.0;

const LN_MAX: f64 = 709.0;

/// D_ν and D_{ν-1} at a common argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcfValue {
    pub d_nu: f64,
    pub d_nu_m1: f64,
    pub order: f64,
    pub argument: f64,
}

impl PcfValue {
    /// D'_ν from `D'_ν = -(s/2) D_ν + ν D_{ν-1}`.
    pub fn derivative(&self) -> f64 {
        -0.5 * self.argument * self.d_nu + self.order * self.d_nu_m1
    }
}

/// D_ν(s).
pub fn pcf_d(nu: f64, s: f64) -> Result<f64> {
    Ok(value_and_slope(nu, s)?.0)
}

/// D'_ν(s) = -(s/2) D_ν(s) + ν D_{ν-1}(s).
pub fn pcf_d_deriv(nu: f64, s: f64) -> Result<f64> {
    Ok(pcf_pair(nu, s)?.derivative())
}

/// D_ν(s) together with D_{ν-1}(s).
pub fn pcf_pair(nu: f64, s: f64) -> Result<PcfValue> {
    let d_nu = pcf_d(nu, s)?;
    let d_nu_m1 = pcf_d(nu - 1.0, s)?;
    Ok(PcfValue { d_nu, d_nu_m1, order: nu, argument: s })
}

/// D_ν(s) and its derivative, both taken from the Weber continuation.
pub fn value_and_slope(nu: f64, s: f64) -> Result<(f64, f64)> {
    if !nu.is_finite() || !s.is_finite() {
        return Err(Error::Domain(format!("D_nu needs finite inputs, got nu={nu}, s={s}")));
    }
    let (v, dv) = if s >= 0.0 {
        recessive(nu, s)
    } else {
        let x = -s;
        let (d, dd) = recessive(nu, x);
        let (w, dw) = dominant_companion(nu, x)?;
        let c = cos_pi(nu);
        (c * d + w, -(c * dd + dw))
    };
    if !v.is_finite() || !dv.is_finite() {
        return Err(Error::OutOfRange(format!("D_{nu}({s}) is not representable in binary64")));
    }
    Ok((v, dv))
}

/// D_ν(0) = 2^{ν/2} √π / Γ((1-ν)/2).
pub fn value_at_origin(nu: f64) -> f64 {
    2f64.powf(0.5 * nu) * PI.sqrt() * rgamma(0.5 * (1.0 - nu))
}

/// D'_ν(0) = -2^{(ν+1)/2} √π / Γ(-ν/2).
pub fn slope_at_origin(nu: f64) -> f64 {
    -(2f64.powf(0.5 * (nu + 1.0))) * PI.sqrt() * rgamma(-0.5 * nu)
}

fn asymptotic_from(nu: f64) -> f64 {
    ASYMPTOTIC_FROM.max(2.0 * (nu.abs() + 1.0).sqrt() + 6.0)
}

/// Sum of Σ_k (-1)^k (-ν)_{2k} / (k! (2x²)^k) and its x-derivative.
fn recessive_series(nu: f64, x: f64) -> (f64, f64) {
    let z = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut dsum = 0.0;
    let mut prev_abs = f64::INFINITY;
    for k in 0..200 {
        let kf = k as f64;
        let next = -term * (-nu + 2.0 * kf) * (-nu + 2.0 * kf + 1.0) * z / (kf + 1.0);
        let next_abs = next.abs();
        if next_abs > prev_abs || next == 0.0 {
            break;
        }
        sum += next;
        // d/dx of c x^{-2(k+1)}
        dsum += next * (-2.0 * (kf + 1.0)) / x;
        if next_abs < 1e-18 * sum.abs() {
            break;
        }
        prev_abs = next_abs;
        term = next;
    }
    (sum, dsum)
}

fn recessive_asymptotic(nu: f64, x: f64) -> (f64, f64) {
    let (sum, dsum) = recessive_series(nu, x);
    let envelope = (-0.25 * x * x + nu * x.ln()).exp();
    let value = envelope * sum;
    let slope = envelope * ((nu / x - 0.5 * x) * sum + dsum);
    (value, slope)
}

/// D_ν(x) and D'_ν(x) for x ≥ 0.
fn recessive(nu: f64, x: f64) -> (f64, f64) {
    let start = asymptotic_from(nu);
    if x >= start {
        return recessive_asymptotic(nu, x);
    }
    let (y, dy) = recessive_asymptotic(nu, start);
    weber_propagate(nu, start, y, dy, x)
}

/// W(x) = D_ν(-x) - cos(πν) D_ν(x) and its derivative, for x ≥ 0.
fn dominant_companion(nu: f64, x: f64) -> Result<(f64, f64)> {
    let inv_gamma = rgamma(-nu);
    if inv_gamma == 0.0 {
        return Ok((0.0, 0.0));
    }
    let start = asymptotic_from(nu);
    if x <= start {
        // 1 - cos πν = 2 sin²(πν/2), 1 + cos πν = 2 cos²(πν/2)
        let sh = sin_pi(0.5 * nu);
        let ch = cos_pi(0.5 * nu);
        let w0 = 2.0 * sh * sh * value_at_origin(nu);
        let dw0 = -2.0 * ch * ch * slope_at_origin(nu);
        return Ok(weber_propagate(nu, 0.0, w0, dw0, x));
    }
    // √(2π)/Γ(-ν) e^{x²/4} x^{-ν-1} Σ (ν+1)_{2k} / (k! (2x²)^k)
    let z = 1.0 / (2.0 * x * x);
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut dsum = 0.0;
    let mut prev_abs = f64::INFINITY;
    for k in 0..200 {
        let kf = k as f64;
        let next = term * (nu + 1.0 + 2.0 * kf) * (nu + 2.0 + 2.0 * kf) * z / (kf + 1.0);
        let next_abs = next.abs();
        if next_abs > prev_abs || next == 0.0 {
            break;
        }
        sum += next;
        dsum += next * (-2.0 * (kf + 1.0)) / x;
        if next_abs < 1e-18 * sum.abs() {
            break;
        }
        prev_abs = next_abs;
        term = next;
    }
    let log_env = 0.25 * x * x - (nu + 1.0) * x.ln() + (2.0 * PI).sqrt().ln() + inv_gamma.abs().ln();
    if log_env + sum.abs().ln() > LN_MAX {
        return Err(Error::OutOfRange(format!(
            "D_{nu}({}) overflows binary64 (e^{{s²/4}} growth)",
            -x
        )));
    }
    let envelope = log_env.exp() * inv_gamma.signum();
    let value = envelope * sum;
    let slope = envelope * ((0.5 * x - (nu + 1.0) / x) * sum + dsum);
    Ok((value, slope))
}

/// Carries (y, y') of a Weber solution from `from` to `to` by Taylor steps.
pub(crate) fn weber_propagate(nu: f64, from: f64, mut y: f64, mut dy: f64, to: f64) -> (f64, f64) {
    let mut c = from;
    let dir = if to >= from { 1.0 } else { -1.0 };
    while (to - c) * dir > 0.0 {
        let h_max = (2.0 / (1.0 + 0.5 * c.abs())).min(0.5);
        let h = dir * h_max.min((to - c).abs());
        let (ny, ndy) = weber_taylor_step(nu, c, y, dy, h);
        y = ny;
        dy = ndy;
        c = if (to - (c + h)) * dir <= 0.0 { to } else { c + h };
    }
    (y, dy)
}

/// One Taylor step for y'' = (s²/4 - ν - 1/2) y about s = c.
fn weber_taylor_step(nu: f64, c: f64, y: f64, dy: f64, h: f64) -> (f64, f64) {
    let p0 = 0.25 * c * c - nu - 0.5;
    let p1 = 0.5 * c;
    let p2 = 0.25;
    // b_k = a_k h^k, with (k+2)(k+1) a_{k+2} = p0 a_k + p1 a_{k-1} + p2 a_{k-2}
    let (mut bm2, mut bm1, mut b0, mut b1) = (0.0, 0.0, y, dy * h);
    let mut value = b0 + b1;
    let mut slope_h = b1;
    let mut quiet = 0;
    for k in 0..400usize {
        let kf = k as f64;
        let next = h * h * (p0 * b0 + p1 * h * bm1 + p2 * h * h * bm2) / ((kf + 2.0) * (kf + 1.0));
        value += next;
        slope_h += (kf + 2.0) * next;
        if next.abs() <= 1e-18 * (value.abs() + slope_h.abs()) {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
        bm2 = bm1;
        bm1 = b0;
        b0 = b1;
        b1 = next;
    }
    (value, slope_h / h)
}

/// √2 D'_μ(√2 x) / D_μ(√2 x): logarithmic derivative of D_μ(√2 x) in x.
pub fn log_derivative_scaled(mu: f64, x: f64) -> Result<f64> {
    let (d, dd) = value_and_slope(mu, SQRT_2 * x)?;
    if d == 0.0 {
        return Err(Error::Domain(format!("D_{mu}(√2·{x}) vanishes")));
    }
    Ok(SQRT_2 * dd / d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Monic Hermite polynomials from π_{k+1} = t π_k - (k/2) π_{k-1}.
    fn monic_hermite(n: usize, t: f64) -> f64 {
        let (mut p0, mut p1) = (1.0, t);
        if n == 0 {
            return p0;
        }
        for k in 1..n {
            let p2 = t * p1 - 0.5 * k as f64 * p0;
            p0 = p1;
            p1 = p2;
        }
        p1
    }

    #[test]
    fn elementary_values() {
        assert_relative_eq!(pcf_d(0.0, 0.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(pcf_d(1.0, 2.0).unwrap(), 2.0 * (-1.0f64).exp(), max_relative = 1e-13);
        assert_relative_eq!(pcf_d(1.0, 2.0).unwrap(), 0.735_758_882_342_884_7, max_relative = 1e-13);
        assert!(pcf_d_deriv(0.0, 0.0).unwrap().abs() < 1e-15);
        assert_relative_eq!(pcf_d_deriv(1.0, 0.0).unwrap(), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn leading_asymptotic_at_thirty() {
        let (nu, s) = (0.25f64, 30.0f64);
        let lead = s.powf(nu) * (-s * s / 4.0).exp();
        let rel = (pcf_d(nu, s).unwrap() - lead).abs() / lead;
        assert!(rel < 1e-3, "rel = {rel}");
    }

    #[test]
    fn minus_one_order_matches_erfc_form() {
        // D_{-1}(s) = e^{s²/4} √(π/2) erfc(s/√2)
        for &s in &[-6.0f64, -2.5, -0.3, 0.0, 0.7, 3.0, 7.5, 12.0] {
            let expected = (s * s / 4.0).exp()
                * (PI / 2.0).sqrt()
                * libm::erfc(s / SQRT_2);
            assert_relative_eq!(pcf_d(-1.0, s).unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn finite_difference_derivative() {
        let (nu, s, h) = (0.3, 1.7, 1e-4);
        let fd = (pcf_d(nu, s + h).unwrap() - pcf_d(nu, s - h).unwrap()) / (2.0 * h);
        assert!((pcf_d_deriv(nu, s).unwrap() - fd).abs() < 1e-8);
    }

    #[test]
    fn continuation_reaches_origin_values() {
        for &nu in &[-2.7, -1.0, -0.4, 0.0, 0.3, 1.0, 1.5, 2.9] {
            let (d, dd) = value_and_slope(nu, 0.0).unwrap();
            let scale = 1.0 + value_at_origin(nu).abs();
            assert!((d - value_at_origin(nu)).abs() < 1e-13 * scale, "nu = {nu}");
            let scale = 1.0 + slope_at_origin(nu).abs();
            assert!((dd - slope_at_origin(nu)).abs() < 1e-13 * scale, "nu = {nu}");
        }
    }

    #[test]
    fn companion_regimes_agree() {
        // Taylor continuation of W out to the switch point versus the asymptotic series.
        for &nu in &[-2.5, -0.6, 0.4, 1.3, 2.2] {
            let start = asymptotic_from(nu);
            let inside = dominant_companion(nu, start - 1e-12).unwrap();
            let outside = dominant_companion(nu, start + 1e-12).unwrap();
            assert_relative_eq!(inside.0, outside.0, max_relative = 1e-10);
            assert_relative_eq!(inside.1, outside.1, max_relative = 1e-10);
        }
    }

    #[test]
    fn hermite_reduction() {
        for n in 0..=5usize {
            for i in 0..=80 {
                let x = -4.0 + 0.1 * i as f64;
                let expected = (-0.5 * x * x).exp() * 2f64.powf(0.5 * n as f64) * monic_hermite(n, x);
                let got = pcf_d(n as f64, SQRT_2 * x).unwrap();
                let scale = expected.abs().max((-0.5 * x * x).exp() * 1e-3);
                assert!((got - expected).abs() <= 1e-10 * scale, "n={n} x={x} got={got} want={expected}");
            }
        }
    }

    #[test]
    fn overflow_is_signalled() {
        assert!(matches!(pcf_d(0.3, -60.0), Err(Error::OutOfRange(_))));
        // integer orders stay finite: D_2(-60) = D_2(60)
        assert!(pcf_d(2.0, -60.0).unwrap().is_finite());
        // deep positive side underflows gracefully
        assert!(pcf_d(0.3, 80.0).unwrap() >= 0.0);
    }

    #[test]
    fn weber_residual_on_grid() {
        // Richardson-combined second differences at h and h/2
        let second_diff = |nu: f64, s: f64, h: f64| {
            (pcf_d(nu, s + h).unwrap() - 2.0 * pcf_d(nu, s).unwrap() + pcf_d(nu, s - h).unwrap()) / (h * h)
        };
        let h = 2e-3;
        for i in 0..=12 {
            let nu = -3.0 + 0.5 * i as f64;
            for j in 0..=16 {
                let s = -8.0 + j as f64;
                let d = pcf_d(nu, s).unwrap();
                let second = (4.0 * second_diff(nu, s, 0.5 * h) - second_diff(nu, s, h)) / 3.0;
                let residual = second - (0.25 * s * s - nu - 0.5) * d;
                let scale = d.abs().max((-0.25 * s * s).exp());
                assert!(residual.abs() < 1e-6 * scale, "nu={nu} s={s} residual={residual}");
            }
        }
    }

    #[test]
    fn three_term_recurrence_on_grid() {
        for i in 0..=12 {
            let nu = -3.0 + 0.5 * i as f64 + 0.13;
            for j in 0..=16 {
                let s = -8.0 + j as f64 + 0.21;
                let up = pcf_d(nu + 1.0, s).unwrap();
                let mid = pcf_d(nu, s).unwrap();
                let down = pcf_d(nu - 1.0, s).unwrap();
                let scale = up.abs().max((s * mid).abs()).max((nu * down).abs());
                assert!((up - s * mid + nu * down).abs() < 1e-10 * scale, "nu={nu} s={s}");
            }
        }
    }
}
