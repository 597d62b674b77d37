mod common;

use common::{beta, gamma, negbin};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use tablerecon::distributions::{log_binomial_pmf, log_negbin_pmf};
use tablerecon::oracle::{exact_n1_joint, exact_n_single_row, pmf_statistics, N1PriorOracle};

/// Generalized Gauss-Laguerre rule for `∫ x^alpha e^{-x} f(x) dx` by the
/// Golub-Welsch eigenvalue method.
fn gauss_laguerre(nodes: usize, alpha: f64) -> Vec<(f64, f64)> {
    let mut jacobi = DMatrix::<f64>::zeros(nodes, nodes);
    for i in 0..nodes {
        let fi = i as f64;
        jacobi[(i, i)] = 2.0 * fi + 1.0 + alpha;
        if i + 1 < nodes {
            let off = ((fi + 1.0) * (fi + 1.0 + alpha)).sqrt();
            jacobi[(i, i + 1)] = off;
            jacobi[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    let mu0 = libm::tgamma(alpha + 1.0);
    (0..nodes).map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2))).collect()
}

#[test]
fn laguerre_rule_integrates_gamma_moments() {
    // ∫ x^{1.5} e^{-x} x^k dx = Γ(2.5 + k).
    let rule = gauss_laguerre(64, 1.5);
    for k in 0..10 {
        let got: f64 = rule.iter().map(|&(x, w)| w * x.powi(k)).sum();
        let want = libm::tgamma(2.5 + k as f64);
        assert!((got / want - 1.0).abs() < 1e-11, "k={k}");
    }
}

#[test]
fn poisson_gamma_mixture_matches_quadrature() {
    let (tp, fp, total) = (3, 2, 20);
    let (a, b) = (2.0, 0.5);
    let flat = beta(1.0, 1.0);
    let mixture = exact_n1_joint(tp, fp, total, &flat, &flat, &N1PriorOracle::PoissonGammaMixture(gamma(a, b))).unwrap();

    // With x = (b + 1) λ the Gamma(a, b) prior times the Poisson e^{-λ} is
    // x^{a-1} e^{-x} up to a constant, leaving a polynomial for the rule.
    let rule = gauss_laguerre(64, a - 1.0);
    let scale = b + 1.0;
    let mut weights = vec![0.0; mixture.probs().len()];
    for &(x, w) in &rule {
        let lambda = x / scale;
        let fixed = exact_n1_joint(tp, fp, total, &flat, &flat, &N1PriorOracle::PoissonFixed(lambda)).unwrap();
        // The rule supplies e^{-x} = e^{-bλ} e^{-λ} and the Poisson pmf holds another e^{-λ}.
        let common_factor = (fixed.log_norm() + lambda).exp();
        for (slot, p) in weights.iter_mut().zip(fixed.probs()) {
            *slot += w * common_factor * p;
        }
    }
    let total_weight: f64 = weights.iter().sum();
    for (i, (&got, &want)) in weights.iter().zip(mixture.probs()).enumerate() {
        let got = got / total_weight;
        assert!((got - want).abs() < 1e-8, "n1 = {}: {got} vs {want}", mixture.start() + i as u64);
    }
}

/// p(n) ∝ NB(n) ∫ Bin(y; n, p) dp on a 2,001-point trapezoid grid.
fn grid_pmf(y: u64, pstar: f64, r: f64, cap: u64) -> Vec<f64> {
    let nb = negbin(pstar, r);
    let points = 2001;
    let h = 1.0 / (points - 1) as f64;
    let w: Vec<f64> = (y..=cap)
        .map(|n| {
            let integral: f64 = (0..points)
                .map(|i| {
                    let p = i as f64 * h;
                    let edge = if i == 0 || i + 1 == points { 0.5 } else { 1.0 };
                    edge * log_binomial_pmf(y, n, p).exp()
                })
                .sum::<f64>()
                * h;
            integral * log_negbin_pmf(n, &nb).exp()
        })
        .collect();
    let z: f64 = w.iter().sum();
    w.into_iter().map(|v| v / z).collect()
}

#[test]
fn single_row_matches_two_dimensional_grid() {
    for &(y, pstar, r, cap) in &[(0, 0.5, 1.0, 60), (3, 0.2, 2.5, 120), (10, 0.1, 4.0, 200), (7, 0.05, 0.8, 150)] {
        let exact = exact_n_single_row(y, &beta(1.0, 1.0), &negbin(pstar, r), Some(cap)).unwrap();
        let grid = grid_pmf(y, pstar, r, cap);
        for (i, (&a, &b)) in exact.probs().iter().zip(&grid).enumerate() {
            assert!((a - b).abs() < 5e-4, "y={y} n={}: {a} vs {b}", y + i as u64);
        }
    }
}

#[test]
fn negbin_fixed_joint_starts_at_tp() {
    let pmf = exact_n1_joint(71, 28, 182, &beta(1.0, 1.0), &beta(1.0, 1.0), &N1PriorOracle::NegBinFixed(negbin(0.3, 20.0)))
        .unwrap();
    assert_eq!(pmf.start(), 71);
    assert_eq!(pmf.end(), 154);
    let zero_tp = exact_n1_joint(0, 5, 10, &beta(1.0, 1.0), &beta(1.0, 1.0), &N1PriorOracle::NegBinFixed(negbin(0.3, 2.0)))
        .unwrap();
    assert_eq!(zero_tp.start(), 0);
    let uniform = exact_n1_joint(0, 5, 10, &beta(1.0, 1.0), &beta(1.0, 1.0), &N1PriorOracle::Uniform).unwrap();
    assert_eq!(uniform.start(), 1);
}

#[test]
fn known_upper_bound_ends_support() {
    let pmf = exact_n_single_row(28, &beta(2.0, 5.0), &negbin(0.02, 1.4), Some(182)).unwrap();
    assert_eq!(pmf.end(), 182);
    let s = pmf_statistics(&pmf);
    assert!(s.q975 <= 182 && s.q025 >= 28);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_pmfs_are_normalized(
        tp in 0_u64..40, fp in 0_u64..40, extra in 2_u64..200,
        a1 in 0.1_f64..5.0, b1 in 0.1_f64..5.0, a2 in 0.1_f64..5.0, b2 in 0.1_f64..5.0,
        which in 0_usize..4, lambda in 0.5_f64..300.0, p3 in 0.01_f64..0.99, r in 0.05_f64..50.0,
    ) {
        let total = tp + fp + extra;
        let prior = match which {
            0 => N1PriorOracle::Uniform,
            1 => N1PriorOracle::PoissonFixed(lambda),
            2 => N1PriorOracle::PoissonGammaMixture(gamma(r, p3)),
            _ => N1PriorOracle::NegBinFixed(negbin(p3, r)),
        };
        let pmf = exact_n1_joint(tp, fp, total, &beta(a1, b1), &beta(a2, b2), &prior).unwrap();
        let sum: f64 = pmf.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(pmf.probs().iter().all(|&p| p >= 0.0));
        let mean: f64 = pmf.probs().iter().enumerate().map(|(i, p)| (pmf.start() + i as u64) as f64 * p).sum();
        prop_assert!((pmf_statistics(&pmf).mean - mean).abs() < 1e-12 * mean.max(1.0));
    }

    #[test]
    fn single_row_pmfs_are_normalized(
        y in 0_u64..100, a in 0.2_f64..5.0, b in 0.2_f64..5.0,
        pstar in 0.02_f64..0.95, r in 0.1_f64..60.0, bounded in any::<bool>(), slack in 0_u64..300,
    ) {
        let upper = bounded.then_some(y + slack);
        let pmf = exact_n_single_row(y, &beta(a, b), &negbin(pstar, r), upper).unwrap();
        let sum: f64 = pmf.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert_eq!(pmf.start(), y);
        if let Some(ub) = upper {
            prop_assert_eq!(pmf.end(), ub);
        }
    }
}
