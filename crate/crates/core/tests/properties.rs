//! Randomized invariants of the special functions, kernels and connection data.

use num_complex::Complex64;
use p4cm_core::asymptotics::{
    asymptotic_phase, classify, connection_data, kappa_star, predicted_singularities, rho_from_kappa,
    Regime,
};
use p4cm_core::fredholm::{hermite_kernel, kernel_eval, KernelSpec};
use p4cm_core::quadrature::mapped_rule;
use p4cm_core::specfun::{erfc, log_gamma_complex, pcf_d};
use proptest::prelude::*;
use std::f64::consts::PI;

fn not_half_integer(alpha: f64) -> bool {
    let v = alpha - 0.5;
    (v - v.round()).abs() > 1e-3
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn three_term_recurrence(nu in -3.0..3.0f64, s in -8.0..8.0f64) {
        let (d, up, down) = (pcf_d(nu, s).unwrap(), pcf_d(nu + 1.0, s).unwrap(), pcf_d(nu - 1.0, s).unwrap());
        let scale = [up, s * d, nu * down, d, down].iter().fold(f64::MIN_POSITIVE, |m, v| m.max(v.abs()));
        prop_assert!((up - s * d + nu * down).abs() / scale < 1e-10);
    }

    #[test]
    fn erfc_is_decreasing_and_reflects(a in -6.0..6.0f64, gap in 1e-3..2.0f64) {
        prop_assert!(erfc(a) > erfc(a + gap));
        prop_assert!((erfc(a) + erfc(-a) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn gamma_on_the_imaginary_axis(t in 0.05..6.0f64) {
        let lg = log_gamma_complex(Complex64::new(0.0, t)).unwrap();
        let expected = PI / (t * (PI * t).sinh());
        prop_assert!(((2.0 * lg.re).exp() / expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_gamma_shift(re in 0.1..5.0f64, im in -5.0..5.0f64) {
        let z = Complex64::new(re, im);
        let lhs = log_gamma_complex(z + 1.0).unwrap();
        let rhs = log_gamma_complex(z).unwrap() + z.ln();
        prop_assert!((lhs.re - rhs.re).abs() < 1e-11);
        // the imaginary parts agree modulo 2π
        let turns = (lhs.im - rhs.im) / (2.0 * PI);
        prop_assert!((turns - turns.round()).abs() < 1e-11);
    }

    #[test]
    fn kernel_is_symmetric(nu in 0.2..3.0f64, x in -1.0..2.0f64, lam in 0.0..5.0f64, mu in 0.0..5.0f64) {
        let spec = KernelSpec::new(nu, 0.1).unwrap();
        let a = kernel_eval(spec, x, lam, mu).unwrap();
        let b = kernel_eval(spec, x, mu, lam).unwrap();
        prop_assert!((a - b).abs() <= 1e-13 * a.abs().max(1e-300));
    }

    #[test]
    fn critical_kernel_is_the_hermite_kernel(n in 1usize..=3, x in -1.0..1.0f64, lam in 0.0..4.0f64, mu in 0.0..4.0f64) {
        let nu = n as f64;
        let spec = KernelSpec::new(nu, KernelSpec::critical_gamma(nu)).unwrap();
        let scaled = spec.gamma * kernel_eval(spec, x, lam, mu).unwrap();
        let hermite = hermite_kernel(n, x, lam, mu).unwrap();
        let envelope = (-0.5 * ((x + lam).powi(2) + (x + mu).powi(2))).exp();
        prop_assert!((scaled - hermite).abs() < 1e-10 * hermite.abs().max(envelope));
    }

    #[test]
    fn monodromy_modulus_matches_the_regime(alpha in -2.0..2.0f64, kappa in -1.0..2.0f64) {
        prop_assume!(not_half_integer(alpha));
        let k_star = kappa_star(alpha);
        prop_assume!((kappa - k_star).abs() > 1e-6 && kappa.abs() > 1e-6);
        let modulus = rho_from_kappa(alpha, kappa).unwrap().norm();
        let below = kappa * (kappa - k_star) < 0.0;
        prop_assert_eq!(modulus < 1.0, below);
        let expected = if below { Regime::Oscillatory } else { Regime::SingularOscillatory };
        prop_assert_eq!(classify(alpha, kappa), expected);
    }

    #[test]
    fn critical_kappa_has_unit_modulus(alpha in -2.0..2.0f64) {
        prop_assume!(not_half_integer(alpha));
        let rho = rho_from_kappa(alpha, kappa_star(alpha)).unwrap();
        prop_assert!((rho.norm() - 1.0).abs() < 1e-10);
        prop_assert_eq!(classify(alpha, kappa_star(alpha)), Regime::Separatrix);
    }

    #[test]
    fn predicted_singularities_solve_the_denominator(alpha in -0.4..0.4f64, excess in 0.05..1.0f64) {
        let kappa = kappa_star(alpha) + excess;
        let data = connection_data(alpha, kappa).unwrap();
        prop_assume!(data.regime == Regime::SingularOscillatory);
        for x in predicted_singularities(&data, -12.0, -6.0).unwrap() {
            let phi = asymptotic_phase(x, &data);
            prop_assert!((2.0 * phi.cos() + 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn mapped_gauss_rule_is_exact_for_low_degree(coeffs in proptest::collection::vec(-2.0..2.0f64, 9), a in -3.0..0.0f64, width in 0.1..6.0f64) {
        let b = a + width;
        let (nodes, weights) = mapped_rule(5, a, b);
        let p = |t: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
        let antiderivative = |t: f64| coeffs.iter().enumerate().map(|(k, c)| c * t.powi(k as i32 + 1) / (k + 1) as f64).sum::<f64>();
        let rule: f64 = nodes.iter().zip(&weights).map(|(t, w)| w * p(*t)).sum();
        let exact = antiderivative(b) - antiderivative(a);
        prop_assert!((rule - exact).abs() < 1e-12 * exact.abs().max(1.0) * width.max(1.0).powi(8));
    }
}
