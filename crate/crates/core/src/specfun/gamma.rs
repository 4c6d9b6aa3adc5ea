//! Gamma function family: real Γ and 1/Γ, and the principal branch of ln Γ(z)
//! for complex z.
//!
//! Both are built on the same scheme: shift the argument upward with the
//! recurrence Γ(z+1) = zΓ(z) until Re z ≥ [`SHIFT_TARGET`], then sum the
//! Stirling series. Logarithms of the shift factors are accumulated one by one
//! so the imaginary part of ln Γ stays on the branch continued from the
//! positive real axis.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

const SHIFT_TARGET: f64 = 12.0;
const HALF_LN_TWO_PI: f64 = 0.918_938_533_204_672_8;

/// B_{2n} / (2n (2n-1)) for n = 1..=10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
    43867.0 / 244_188.0,
    -174_611.0 / 125_400.0,
];

/// sin(πx) with exact zeros at the integers.
pub fn sin_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    let r = x - 2.0 * (x / 2.0).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    // r in (-1, 1); fold onto [-1/2, 1/2]
    if r > 0.5 {
        (PI * (1.0 - r)).sin()
    } else if r < -0.5 {
        -(PI * (1.0 + r)).sin()
    } else {
        (PI * r).sin()
    }
}

/// cos(πx) with exact zeros at the half-integers.
pub fn cos_pi(x: f64) -> f64 {
    if !x.is_finite() {
        return f64::NAN;
    }
    sin_pi(x + 0.5)
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

fn stirling_real(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut series = 0.0;
    let mut p = inv;
    for c in STIRLING {
        series += c * p;
        p *= inv2;
    }
    (x - 0.5) * x.ln() - x + HALF_LN_TWO_PI + series
}

fn stirling_complex(z: Complex64) -> Complex64 {
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut p = inv;
    for c in STIRLING {
        series += p * c;
        p *= inv2;
    }
    (z - 0.5) * z.ln() - z + HALF_LN_TWO_PI + series
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("ln_gamma needs x > 0, got {x}")));
    }
    let mut shifted = x;
    let mut log_prod = 0.0;
    while shifted < SHIFT_TARGET {
        log_prod += shifted.ln();
        shifted += 1.0;
    }
    Ok(stirling_real(shifted) - log_prod)
}

/// Γ(x) for real x; errors at the poles x ∈ {0, -1, -2, ...}.
pub fn gamma(x: f64) -> Result<f64> {
    if is_nonpositive_integer(x) {
        return Err(Error::Pole(format!("Gamma has a pole at {x}")));
    }
    if x < 0.5 {
        // reflection
        let g = gamma(1.0 - x)?;
        return Ok(PI / (sin_pi(x) * g));
    }
    let mut shifted = x;
    let mut prod = 1.0;
    while shifted < SHIFT_TARGET {
        prod *= shifted;
        shifted += 1.0;
    }
    Ok(stirling_real(shifted).exp() / prod)
}

/// 1/Γ(x), returning exactly zero at the poles of Γ.
pub fn rgamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        return 0.0;
    }
    if x < 0.5 {
        let g = gamma(1.0 - x).expect("1 - x > 1/2 is never a pole");
        return sin_pi(x) * g / PI;
    }
    1.0 / gamma(x).expect("x >= 1/2 is never a pole")
}

/// Principal branch of ln Γ(z).
///
/// The imaginary part is arg Γ(z) continued from the positive real axis; it is
/// not reduced to (-π, π].
pub fn log_gamma_complex(z: Complex64) -> Result<Complex64> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if z.im == 0.0 && is_nonpositive_integer(z.re) {
        return Err(Error::Pole(format!("Gamma has a pole at {}", z.re)));
    }
    let mut w = z;
    let mut log_prod = Complex64::new(0.0, 0.0);
    while w.re < SHIFT_TARGET {
        log_prod += w.ln();
        w += 1.0;
    }
    Ok(stirling_complex(w) - log_prod)
}

/// arg Γ(z) on the continuous branch used by [`log_gamma_complex`].
pub fn arg_gamma(z: Complex64) -> Result<f64> {
    Ok(log_gamma_complex(z)?.im)
}
