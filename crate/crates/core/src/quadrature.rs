//! Gauss-Legendre rules and an adaptive Gauss-Kronrod integrator.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Nodes and weights of the m-point Gauss-Legendre rule on [-1, 1], nodes ascending.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        // Tricomi's initial guess, then Newton on the three-term recurrence
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(m, x);
                dp = d;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[m - 1 - i] = x;
        weights[i] = w;
        weights[m - 1 - i] = w;
    }
    if m % 2 == 1 {
        nodes[m / 2] = 0.0;
    }
    (nodes, weights)
}

/// P_m(x) and P_m'(x).
fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// The m-point Gauss-Legendre rule mapped affinely onto [a, b].
pub fn mapped_rule(m: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_legendre(m);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    (t.iter().map(|t| mid + half * t).collect(), w.iter().map(|w| half * w).collect())
}

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// weights of the embedded 7-point Gauss rule (nodes are the odd Kronrod nodes)
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point Gauss rule.
fn gk15<F: FnMut(f64) -> Result<f64>>(f: &mut F, a: f64, b: f64) -> Result<(f64, f64)> {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let centre = f(mid)?;
    let mut kronrod = KRONROD_WEIGHTS[7] * centre;
    let mut gauss = GAUSS_WEIGHTS[3] * centre;
    for i in 0..7 {
        let dx = half * KRONROD_NODES[i];
        let pair = f(mid - dx)? + f(mid + dx)?;
        kronrod += KRONROD_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += GAUSS_WEIGHTS[i / 2] * pair;
        }
    }
    Ok((kronrod * half, ((kronrod - gauss) * half).abs()))
}

/// ∫_a^b f by globally adaptive bisection with a 7/15 Gauss-Kronrod pair.
///
/// Stops when the summed error estimate is below `abs_tol + rel_tol·|I|`.
pub fn adaptive<F: FnMut(f64) -> Result<f64>>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    const MAX_INTERVALS: usize = 2000;
    let first = gk15(&mut f, a, b)?;
    let mut pieces = vec![(a, b, first.0, first.1)];
    loop {
        let total: f64 = pieces.iter().map(|p| p.2).sum();
        let error: f64 = pieces.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if pieces.len() >= MAX_INTERVALS {
            return Err(Error::NoConvergence(format!(
                "adaptive quadrature on [{a}, {b}]: error estimate {error:e} after {MAX_INTERVALS} intervals"
            )));
        }
        let (k, _) = pieces
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = pieces.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let left = gk15(&mut f, lo, mid)?;
        let right = gk15(&mut f, mid, hi)?;
        pieces.push((lo, mid, left.0, left.1));
        pieces.push((mid, hi, right.0, right.1));
    }
}
