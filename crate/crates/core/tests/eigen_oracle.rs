use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use terrace_core::model::{PeriodicCoefficient, TrigSeries};
use terrace_core::stationary::principal_eigenvalue;

// Dense symmetric assembly of the same periodic three-point operator, built
// from the coefficient directly.
fn dense_top(a: &PeriodicCoefficient, g: &[f64]) -> f64 {
    let n = g.len();
    let dx = a.period() / n as f64;
    let node = |i: usize| a.eval((i % n) as f64 * dx);
    let face = |i: usize| {
        let (l, r) = (node(i), node(i + 1));
        2.0 * l * r / (l + r) / (dx * dx)
    };
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let left = face(i + n - 1);
        let right = face(i);
        m[(i, i)] += g[i] - left - right;
        m[(i, (i + 1) % n)] += right;
        m[(i, (i + n - 1) % n)] += left;
    }
    SymmetricEigen::new(m).eigenvalues.iter().fold(f64::NEG_INFINITY, |x, v| x.max(*v))
}

#[test]
fn constant_potential_is_exact() {
    let a = PeriodicCoefficient::constant(2.0, 1.7).unwrap();
    for c in [-3.0, 0.0, 0.25, 5.0] {
        let e = principal_eigenvalue(&a, &vec![c; 64], 1e-13, 10_000).unwrap();
        assert!((e.mu - c).abs() <= 1e-12, "mu {} vs {c}", e.mu);
        assert!(e.phi.iter().all(|v| (v - 1.0).abs() <= 1e-12));
    }
}

#[test]
fn sinusoidal_potential_matches_dense_solve() {
    let a = PeriodicCoefficient::series(1.0, TrigSeries::from_flat(&[1.0, 0.3, 0.0]).unwrap()).unwrap();
    // four times the default fifty nodes per period
    let n = 200;
    let g: Vec<f64> = (0..n).map(|i| 0.5 + (2.0 * PI * i as f64 / n as f64).sin()).collect();
    let e = principal_eigenvalue(&a, &g, 1e-12, 100_000).unwrap();
    let want = dense_top(&a, &g);
    assert!((e.mu - want).abs() <= 1e-8, "mu {} vs dense {want}", e.mu);
    assert!(e.phi.iter().all(|v| *v > 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_potentials_match_dense_solve(
        g in prop::collection::vec(-4.0f64..4.0, 24..60),
        a1 in -0.4f64..0.4,
    ) {
        let a = PeriodicCoefficient::series(1.0, TrigSeries::from_flat(&[1.0, a1, 0.1]).unwrap()).unwrap();
        let e = principal_eigenvalue(&a, &g, 1e-11, 100_000).unwrap();
        let want = dense_top(&a, &g);
        prop_assert!((e.mu - want).abs() <= 1e-8 * (1.0 + want.abs()), "mu {} vs {}", e.mu, want);
        prop_assert!(e.phi.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn eigenvalue_is_monotone_in_the_potential(
        g in prop::collection::vec(-2.0f64..2.0, 32),
        bump in prop::collection::vec(0.0f64..1.0, 32),
    ) {
        let a = PeriodicCoefficient::constant(1.0, 1.0).unwrap();
        let h: Vec<f64> = g.iter().zip(&bump).map(|(x, y)| x + y).collect();
        let mg = principal_eigenvalue(&a, &g, 1e-11, 100_000).unwrap().mu;
        let mh = principal_eigenvalue(&a, &h, 1e-11, 100_000).unwrap().mu;
        prop_assert!(mh >= mg - 1e-9);
        let gmin = g.iter().cloned().fold(f64::INFINITY, f64::min);
        let gmax = g.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(mg >= gmin - 1e-9 && mg <= gmax + 1e-9);
    }
}
