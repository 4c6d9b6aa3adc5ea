//! Trajectories against the closed-form asymptotics in each regime, with the
//! connection parameters taken from the formulas rather than fitted.

use p4cm_core::asymptotics::{
    classify, connection_data, h_asym, kappa_star, predicted_singularities, q_asym, Regime,
};
use p4cm_core::painleve::{solve, Params, Trajectory, DEFAULT_SEED, DEFAULT_TOL};
use std::f64::consts::PI;

fn grid(from: f64, to: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((to - from) / step).round() as usize;
    (0..=n).map(move |i| from + (to - from) * i as f64 / n as f64)
}

fn trajectory(alpha: f64, kappa: f64, x_to: f64) -> Trajectory {
    solve(Params::new(alpha, kappa).unwrap(), DEFAULT_SEED, x_to, DEFAULT_TOL).unwrap()
}

#[test]
fn oscillatory_solutions_follow_the_connection_formula() {
    for (alpha, kappa) in [(0.0, 1.0 / (4.0 * PI)), (0.25, 0.5 * kappa_star(0.25))] {
        assert_eq!(classify(alpha, kappa), Regime::Oscillatory);
        let data = connection_data(alpha, kappa).unwrap();
        let traj = trajectory(alpha, kappa, -30.0);
        assert!(traj.poles.is_empty());
        for x in grid(-30.0, -15.0, 0.05) {
            let dq = traj.q(x).unwrap() - q_asym(x, &data, alpha, kappa).unwrap();
            let dh = traj.eval(x).unwrap().hamiltonian - h_asym(x, &data, alpha, kappa).unwrap();
            assert!(dq.abs() * x.abs() < 5.0, "({alpha},{kappa}) x={x} dq={dq}");
            assert!(dh.abs() * x.abs() < 5.0, "({alpha},{kappa}) x={x} dH={dh}");
        }
    }
}

#[test]
fn oscillatory_error_decays_like_one_over_x() {
    // the O(1/x) remainder shrinks: the worst deviation on [-30,-25] is well
    // below the one on [-12,-10]
    let (alpha, kappa) = (0.25, 0.1);
    let data = connection_data(alpha, kappa).unwrap();
    let traj = trajectory(alpha, kappa, -30.0);
    let worst = |a: f64, b: f64| {
        grid(a, b, 0.01)
            .map(|x| (traj.q(x).unwrap() - q_asym(x, &data, alpha, kappa).unwrap()).abs())
            .fold(0.0, f64::max)
    };
    assert!(worst(-30.0, -25.0) < 0.6 * worst(-12.0, -10.0));
}

#[test]
fn separatrix_grows_like_minus_two_x() {
    for alpha in [0.0, 0.25] {
        let kappa = kappa_star(alpha);
        let data = connection_data(alpha, kappa).unwrap();
        let traj = trajectory(alpha, kappa, -25.0);
        for x in grid(-25.0, -10.0, 0.05) {
            let ratio = traj.q(x).unwrap() / (-2.0 * x);
            assert!((ratio - 1.0).abs() * x.abs() < 0.3, "alpha={alpha} x={x} ratio={ratio}");
            let dh = traj.eval(x).unwrap().hamiltonian - h_asym(x, &data, alpha, kappa).unwrap();
            assert!(dh.abs() * x.abs() < 5.0, "alpha={alpha} x={x} dH={dh}");
        }
    }
}

#[test]
fn singular_poles_match_the_predicted_singularities() {
    for (alpha, kappa) in [(0.0, 2.0 / PI), (-0.5, 0.2)] {
        assert_eq!(classify(alpha, kappa), Regime::SingularOscillatory);
        let data = connection_data(alpha, kappa).unwrap();
        let traj = trajectory(alpha, kappa, -14.0);
        let predicted = predicted_singularities(&data, -14.0, -8.0).unwrap();
        let found: Vec<f64> = traj.poles.iter().map(|p| p.location).filter(|x| (-13.95..=-8.05).contains(x)).collect();
        assert!(!found.is_empty());
        for f in &found {
            let miss = predicted.iter().map(|p| (p - f).abs()).fold(f64::INFINITY, f64::min);
            assert!(miss < 0.05, "({alpha},{kappa}) pole at {f} misses prediction by {miss}");
        }
        // one predicted singularity per detected pole, apart from the edges
        assert!((found.len() as i64 - predicted.len() as i64).abs() <= 1);
        for x in grid(-14.0, -8.0, 0.01) {
            if predicted.iter().any(|p| (p - x).abs() <= 0.3) {
                continue;
            }
            let dq = traj.q(x).unwrap() - q_asym(x, &data, alpha, kappa).unwrap();
            let dh = traj.eval(x).unwrap().hamiltonian - h_asym(x, &data, alpha, kappa).unwrap();
            assert!(dq.abs() * x.abs() < 10.0, "({alpha},{kappa}) x={x} dq={dq}");
            assert!(dh.abs() * x.abs() < 10.0, "({alpha},{kappa}) x={x} dH={dh}");
        }
    }
}

#[test]
fn poles_alternate_in_residue() {
    let traj = trajectory(0.0, 2.0 / PI, -14.0);
    for pair in traj.poles.windows(2) {
        assert_eq!(pair[0].residue, -pair[1].residue, "{pair:?}");
    }
}

#[test]
fn right_tail_hamiltonian_leading_term_converges() {
    // H / H_leading - 1 = O(x^-2): the ratio improves from x=5 to x=7
    for (alpha, kappa) in [(0.25, 0.1), (0.0, 2.0 / PI), (-0.5, 0.2)] {
        let data = connection_data(alpha, kappa).unwrap();
        let traj = trajectory(alpha, kappa, 0.0);
        let rel = |x: f64| traj.eval(x).unwrap().hamiltonian / h_asym(x, &data, alpha, kappa).unwrap() - 1.0;
        let (r5, r7) = (rel(5.0), rel(7.0));
        assert!(r7.abs() < r5.abs());
        // x² · rel is roughly constant
        let (s5, s7) = (25.0 * r5, 49.0 * r7);
        assert!((s5 / s7 - 1.0).abs() < 0.25, "({alpha},{kappa}): {s5} vs {s7}");
    }
}

#[test]
fn half_integer_order_decays_with_the_modified_amplitude() {
    let (alpha, kappa) = (1.5, 0.2);
    assert_eq!(classify(alpha, kappa), Regime::HalfIntegerPositive);
    let data = connection_data(alpha, kappa).unwrap();
    let traj = trajectory(alpha, kappa, 0.0);
    for x in [5.0, 6.0, 7.0] {
        let ratio = traj.q(x).unwrap() / q_asym(x, &data, alpha, kappa).unwrap();
        // κ·D_1(√2x) against the leading c_n term: relative gap O(x^-2)
        assert!((ratio - 1.0).abs() < 3.0 / (x * x), "x={x} ratio={ratio}");
    }
}

#[test]
fn evaluators_are_bitwise_reproducible() {
    let data = connection_data(0.0, 2.0 / PI).unwrap();
    let a: Vec<u64> = grid(-20.0, -10.0, 0.37).filter_map(|x| q_asym(x, &data, 0.0, 2.0 / PI).ok()).map(f64::to_bits).collect();
    let b: Vec<u64> = grid(-20.0, -10.0, 0.37).filter_map(|x| q_asym(x, &data, 0.0, 2.0 / PI).ok()).map(f64::to_bits).collect();
    assert_eq!(a, b);
    assert_eq!(connection_data(0.0, 2.0 / PI).unwrap(), data);
}
