//! Dormand-Prince 5(4) with PI step-size control.
//!
//! The stepper is generic over the scalar type so the same code drives real
//! integration along the axis and complex integration along contour detours
//! (the independent variable is always a real parameter). The caller supplies
//! the error norm, an optional step cap and an acceptance hook through the
//! [`System`] trait.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::ops::{Add, Mul, Sub};

/// Scalars the stepper can carry.
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// What the driver should do after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// An ODE y' = f(t, y) together with its error metric and step hooks.
pub trait System<T: Scalar, const N: usize> {
    fn rhs(&mut self, t: f64, y: &[T; N]) -> Result<[T; N]>;

    /// Scaled error of a trial step; the step is accepted when this is ≤ 1.
    fn error_norm(&self, y_old: &[T; N], y_new: &[T; N], err: &[T; N]) -> f64;

    /// Largest step the system will allow from (t, y).
    fn max_step(&self, _t: f64, _y: &[T; N], _dy: &[T; N]) -> f64 {
        f64::INFINITY
    }

    /// Called after each accepted step with the new point and its derivative.
    fn accept(&mut self, _t: f64, _y: &[T; N], _dy: &[T; N]) -> Result<Flow> {
        Ok(Flow::Continue)
    }
}

/// Where the driver stopped.
#[derive(Debug, Clone, Copy)]
pub struct Endpoint<T: Scalar, const N: usize> {
    pub t: f64,
    pub y: [T; N],
    pub dy: [T; N],
    /// Step size the controller would try next.
    pub h: f64,
    /// True when the system asked to stop before `t_end`.
    pub stopped: bool,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth minus fourth order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn combine<T: Scalar, const N: usize>(y: &[T; N], h: f64, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = T::zero();
        for (c, k) in terms {
            acc = acc + k[i] * *c;
        }
        *o = *o + acc * h;
    }
    out
}

fn weighted<T: Scalar, const N: usize>(h: f64, terms: &[(f64, &[T; N])]) -> [T; N] {
    let mut out = [T::zero(); N];
    for (i, o) in out.iter_mut().enumerate() {
        for (c, k) in terms {
            *o = *o + k[i] * *c;
        }
        *o = *o * h;
    }
    out
}

/// One Dormand-Prince trial step; returns (y_new, f(t+h, y_new), error estimate).
pub fn dopri_step<T: Scalar, const N: usize, S: System<T, N>>(
    sys: &mut S,
    t: f64,
    y: &[T; N],
    k1: &[T; N],
    h: f64,
) -> Result<([T; N], [T; N], [T; N])> {
    let k2 = sys.rhs(t + C2 * h, &combine(y, h, &[(A21, k1)]))?;
    let k3 = sys.rhs(t + C3 * h, &combine(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = sys.rhs(t + C4 * h, &combine(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = sys.rhs(
        t + C5 * h,
        &combine(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
    )?;
    let k6 = sys.rhs(
        t + h,
        &combine(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    )?;
    let y_new = combine(y, h, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
    let k7 = sys.rhs(t + h, &y_new)?;
    let err = weighted(h, &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
    Ok((y_new, k7, err))
}

/// Controller settings.
#[derive(Debug, Clone, Copy)]
pub struct Control {
    /// First trial step magnitude.
    pub h_init: f64,
    /// Largest step magnitude.
    pub h_max: f64,
    /// Relative floor: the run aborts when |h| < h_min_rel·max(1, |t|).
    pub h_min_rel: f64,
    /// Cap on the number of trial steps.
    pub max_steps: usize,
}

impl Default for Control {
    fn default() -> Self {
        Control { h_init: 1e-3, h_max: 0.1, h_min_rel: 1e-13, max_steps: 2_000_000 }
    }
}

/// Integrates from t0 to t_end (either direction) with PI step control.
pub fn drive<T: Scalar, const N: usize, S: System<T, N>>(
    sys: &mut S,
    t0: f64,
    y0: [T; N],
    t_end: f64,
    ctrl: Control,
) -> Result<Endpoint<T, N>> {
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut t = t0;
    let mut y = y0;
    let mut dy = sys.rhs(t, &y)?;
    let mut h_abs = ctrl.h_init.min(ctrl.h_max);
    let mut err_prev: f64 = 1e-4;
    let mut steps = 0usize;
    const SAFETY: f64 = 0.9;
    const BETA: f64 = 0.04;
    const ALPHA: f64 = 0.2 - 0.75 * BETA;

    while (t_end - t) * dir > 0.0 {
        steps += 1;
        if steps > ctrl.max_steps {
            return Err(Error::NoConvergence(format!("step budget exhausted at t = {t}")));
        }
        let cap = sys.max_step(t, &y, &dy).min(ctrl.h_max);
        h_abs = h_abs.min(cap);
        let remaining = (t_end - t).abs();
        let last = h_abs >= remaining;
        let h = if last { remaining * dir } else { h_abs * dir };
        if h_abs < ctrl.h_min_rel * t.abs().max(1.0) {
            return Err(Error::StepCollapse { x: t, h: h_abs });
        }
        let trial = dopri_step(sys, t, &y, &dy, h);
        let (y_new, dy_new, err) = match trial {
            Ok(v) => v,
            Err(e @ Error::IrregularPole { .. }) => return Err(e),
            Err(_) => {
                h_abs *= 0.25;
                continue;
            }
        };
        let e = sys.error_norm(&y, &y_new, &err);
        if !e.is_finite() || e > 1.0 {
            let shrink = if e.is_finite() { (SAFETY * e.powf(-0.2)).max(0.1) } else { 0.1 };
            h_abs = h.abs() * shrink;
            continue;
        }
        t = if last { t_end } else { t + h };
        y = y_new;
        dy = dy_new;
        let factor = if e == 0.0 {
            5.0
        } else {
            (SAFETY * e.powf(-ALPHA) * err_prev.powf(BETA)).clamp(0.2, 5.0)
        };
        err_prev = e.max(1e-4);
        h_abs = h.abs() * factor;
        if sys.accept(t, &y, &dy)? == Flow::Stop {
            return Ok(Endpoint { t, y, dy, h: h_abs, stopped: true });
        }
    }
    Ok(Endpoint { t, y, dy, h: h_abs, stopped: false })
}
