//! Nyström Fredholm determinants of the parabolic-cylinder integrable operator
//! on (0, ∞), the σ function obtained by differentiating their logarithm, and the
//! Hermite kernel that the operator reduces to at integer order.

use crate::error::{Error, Result};
use crate::painleve::Params;
use crate::quadrature::mapped_rule;
use crate::specfun::{gamma, pcf_pair};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, SQRT_2};

/// Below this separation the kernel switches to its diagonal limit.
pub const DIAG_EPS: f64 = 1e-6;
pub const DEFAULT_NODES: usize = 80;
/// Largest admissible γ·K on the diagonal at the truncation point.
pub const TAIL_TOL: f64 = 1e-12;

/// Order ν and coupling γ of the kernel γ·K_{ν,x}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub nu: f64,
    pub gamma: f64,
}

impl KernelSpec {
    pub fn new(nu: f64, gamma: f64) -> Result<Self> {
        if !nu.is_finite() || !gamma.is_finite() {
            return Err(Error::Domain(format!("kernel needs finite (nu, gamma), got ({nu}, {gamma})")));
        }
        Ok(KernelSpec { nu, gamma })
    }

    /// The kernel whose σ belongs to the PIV solution with these parameters:
    /// ν = α + 1/2 and γ = κ/√2.
    pub fn from_params(params: &Params) -> Self {
        KernelSpec { nu: params.alpha + 0.5, gamma: params.kappa / SQRT_2 }
    }

    /// PIV parameters (α, κ) matching this kernel.
    pub fn params(&self) -> Result<Params> {
        Params::new(self.nu - 0.5, SQRT_2 * self.gamma)
    }

    /// γ* = 1/(√(2π)·Γ(ν)), the coupling at which the kernel is a projection for integer ν.
    pub fn critical_gamma(nu: f64) -> f64 {
        crate::asymptotics::kappa_star(nu - 0.5) / SQRT_2
    }
}

/// A Gauss-Legendre rule on the truncated half line (0, L).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub truncation: f64,
    pub size: usize,
}

impl Quadrature {
    pub fn new(size: usize, truncation: f64) -> Result<Self> {
        if size == 0 || !(truncation > 0.0 && truncation.is_finite()) {
            return Err(Error::Domain(format!("quadrature needs m ≥ 1 and L > 0, got m={size}, L={truncation}")));
        }
        let (nodes, weights) = mapped_rule(size, 0.0, truncation);
        Ok(Quadrature { nodes, weights, truncation, size })
    }

    /// Default rule at x: m = 80 nodes on (0, max(8, 8 - x)).
    pub fn for_point(x: f64) -> Self {
        Quadrature::new(DEFAULT_NODES, 8f64.max(8.0 - x)).expect("default quadrature is valid")
    }
}

/// Determinant of I - γK_{ν,x}, optionally with σ = d/dx ln det.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetResult {
    pub x: f64,
    pub logdet: f64,
    pub det: f64,
    pub sigma: Option<f64>,
}

fn off_diagonal(nu_a: (f64, f64), nu_b: (f64, f64), lam: f64, mu: f64) -> f64 {
    (nu_a.0 * nu_b.1 - nu_a.1 * nu_b.0) / (lam - mu)
}

fn diagonal(nu: f64, a: f64, d: (f64, f64)) -> f64 {
    SQRT_2 * (d.0 * d.0 + nu * d.1 * d.1 - a * d.0 * d.1)
}

/// K_{ν,x}(λ, μ) (without the coupling γ).
pub fn kernel_eval(spec: KernelSpec, x: f64, lam: f64, mu: f64) -> Result<f64> {
    if lam < 0.0 || mu < 0.0 {
        return Err(Error::Domain(format!("kernel lives on (0, ∞), got λ={lam}, μ={mu}")));
    }
    let a = SQRT_2 * (lam + x);
    let pa = pcf_pair(spec.nu, a)?;
    if (lam - mu).abs() < DIAG_EPS {
        return Ok(diagonal(spec.nu, a, (pa.d_nu, pa.d_nu_m1)));
    }
    let pb = pcf_pair(spec.nu, SQRT_2 * (mu + x))?;
    Ok(off_diagonal((pa.d_nu, pa.d_nu_m1), (pb.d_nu, pb.d_nu_m1), lam, mu))
}

/// ln det(I - γK_{ν,x}) by LU factorisation of the symmetrised Nyström matrix.
pub fn fredholm_det(spec: KernelSpec, x: f64, quad: &Quadrature) -> Result<DetResult> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("x must be finite, got {x}")));
    }
    let m = quad.size;
    if spec.gamma == 0.0 {
        return Ok(DetResult { x, logdet: 0.0, det: 1.0, sigma: None });
    }
    let tail = spec.gamma * kernel_eval(spec, x, quad.truncation, quad.truncation)?;
    if tail.abs() > TAIL_TOL {
        return Err(Error::Domain(format!(
            "truncation L = {} too short at x = {x}: γK(L, L) = {tail:e}",
            quad.truncation
        )));
    }
    let mut d = Vec::with_capacity(m);
    for &lam in &quad.nodes {
        let p = pcf_pair(spec.nu, SQRT_2 * (lam + x))?;
        d.push((p.d_nu, p.d_nu_m1));
    }
    let root_w: Vec<f64> = quad.weights.iter().map(|w| w.sqrt()).collect();
    let a = DMatrix::from_fn(m, m, |i, j| {
        let k = if i == j || (quad.nodes[i] - quad.nodes[j]).abs() < DIAG_EPS {
            diagonal(spec.nu, SQRT_2 * (quad.nodes[i] + x), d[i])
        } else {
            off_diagonal(d[i], d[j], quad.nodes[i], quad.nodes[j])
        };
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - spec.gamma * root_w[i] * root_w[j] * k
    });
    let lu = a.lu();
    let mut sign = lu.p().determinant::<f64>();
    let mut logdet = 0.0;
    for u in lu.u().diagonal().iter() {
        if *u == 0.0 {
            return Err(Error::NonPositiveDeterminant { x, det: 0.0 });
        }
        sign *= u.signum();
        logdet += u.abs().ln();
    }
    let det = logdet.exp();
    if sign < 0.0 {
        return Err(Error::NonPositiveDeterminant { x, det: -det });
    }
    Ok(DetResult { x, logdet, det, sigma: None })
}

/// Default step for [`sigma_from_det`].
pub const DEFAULT_DIFF_STEP: f64 = 5e-3;

/// σ(x) = d/dx ln det(I - γK_{ν,x}) by Richardson-extrapolated central differences.
pub fn sigma_from_det(spec: KernelSpec, x: f64, quad: &Quadrature, h: f64) -> Result<DetResult> {
    if !(1e-5..=1e-2).contains(&h) {
        return Err(Error::Domain(format!("difference step must lie in [1e-5, 1e-2], got {h}")));
    }
    let base = fredholm_det(spec, x, quad)?;
    let logdet = |t: f64| fredholm_det(spec, t, quad).map(|r| r.logdet);
    let central = |h: f64| -> Result<f64> { Ok((logdet(x + h)? - logdet(x - h)?) / (2.0 * h)) };
    let coarse = central(h)?;
    let fine = central(0.5 * h)?;
    Ok(DetResult { sigma: Some((4.0 * fine - coarse) / 3.0), ..base })
}

/// Monic Hermite polynomials π_0..=π_n at t, from π_{k+1} = tπ_k - (k/2)π_{k-1}.
pub fn monic_hermite(n: usize, t: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n >= 1 {
        p.push(t);
    }
    for k in 1..n {
        p.push(t * p[k] - 0.5 * k as f64 * p[k - 1]);
    }
    p
}

/// The GUE Hermite kernel K_{n,x}(λ, μ) with weight e^{-t²}.
pub fn hermite_kernel(n: usize, x: f64, lam: f64, mu: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("Hermite kernel needs n ≥ 1".into()));
    }
    let (s, t) = (lam + x, mu + x);
    let norm = 2f64.powi(n as i32 - 1) / (PI.sqrt() * gamma(n as f64)?);
    let weight = (-0.5 * (s * s + t * t)).exp();
    let ps = monic_hermite(n, s);
    let bracket = if (lam - mu).abs() < DIAG_EPS {
        // π_k' = kπ_{k-1}
        let pm2 = if n >= 2 { ps[n - 2] } else { 0.0 };
        n as f64 * ps[n - 1] * ps[n - 1] - (n as f64 - 1.0) * pm2 * ps[n]
    } else {
        let pt = monic_hermite(n, t);
        (ps[n] * pt[n - 1] - ps[n - 1] * pt[n]) / (lam - mu)
    };
    Ok(weight * norm * bracket)
}
