mod common;

use common::{beta, gamma, negbin, settings};
use proptest::prelude::*;
use tablerecon::diagnostics::summarize;
use tablerecon::samplers::{CountUpdate, JointInit, N1Prior, Truncation};
use tablerecon::{derive_quantities, fit_joint, fit_single_row, FitSpec, JointSpec, SingleRowSpec};

fn model3_breast_mri() -> JointSpec {
    let mut spec = JointSpec::new(
        71,
        28,
        182,
        beta(1.0, 0.1),
        beta(0.1, 1.0),
        N1Prior::TruncNegBin { p3_prior: beta(0.1, 0.5), r_prior: gamma(0.1, 0.01) },
    );
    spec.init = JointInit { n1: Some(80), r: 20.0, p1: 0.5, p2: 0.5, p3: 0.5, ..Default::default() };
    spec
}

fn diseased_row() -> SingleRowSpec {
    SingleRowSpec::new(71, beta(2.0, 1.0), beta(1.0, 1.0), gamma(1.0, 0.1))
}

#[test]
fn identical_seed_gives_identical_draws() {
    let spec = model3_breast_mri();
    let mcmc = settings(2, 2_000, 77);
    let mut a = fit_joint(&spec, &mcmc).unwrap();
    let mut b = fit_joint(&spec, &mcmc).unwrap();
    a.meta.elapsed = None;
    b.meta.elapsed = None;
    assert_eq!(a, b);

    let mut c = fit_joint(&spec, &settings(2, 2_000, 78)).unwrap();
    c.meta = a.meta.clone();
    assert_ne!(a, c);

    let row = diseased_row();
    let mut a = fit_single_row(&row, &mcmc).unwrap();
    let mut b = fit_single_row(&row, &mcmc).unwrap();
    a.meta.elapsed = None;
    b.meta.elapsed = None;
    assert_eq!(a, b);
}

#[test]
fn chains_use_distinct_streams() {
    let draws = fit_joint(&model3_breast_mri(), &settings(2, 1_000, 5)).unwrap();
    let n1 = draws.column("n1").unwrap();
    assert_ne!(n1[0], n1[1]);
}

#[test]
fn joint_sd_not_larger_than_open_single_row() {
    let joint = summarize(&fit_joint(&model3_breast_mri(), &settings(4, 20_000, 31)).unwrap()).unwrap();
    let row = summarize(&fit_single_row(&diseased_row(), &settings(4, 20_000, 32)).unwrap()).unwrap();
    let (a, b) = (joint.get("n1").unwrap().sd, row.get("n").unwrap().sd);
    assert!(a <= b, "joint sd {a} > single-row sd {b}");
}

fn n1_prior(kind: u8) -> N1Prior {
    match kind {
        0 => N1Prior::Uniform,
        1 => N1Prior::TruncPoisson { lambda_prior: gamma(2.0, 0.1) },
        2 => N1Prior::TruncNegBin { p3_prior: beta(1.0, 1.0), r_prior: gamma(1.0, 0.1) },
        3 => N1Prior::PoissonFixed { lambda: 12.0 },
        _ => N1Prior::NegBinFixed(negbin(0.4, 5.0)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn joint_draws_respect_support(
        total in 2u64..60,
        tp_frac in 0.0f64..1.0,
        fp_frac in 0.0f64..1.0,
        kind in 0u8..5,
        normalized in any::<bool>(),
        conditional in any::<bool>(),
        seed in 0u64..1000,
    ) {
        let tp = ((total - 1) as f64 * tp_frac) as u64;
        let fp = ((total - 1 - tp) as f64 * fp_frac) as u64;
        let mut spec = JointSpec::new(tp, fp, total, beta(1.0, 1.0), beta(1.0, 1.0), n1_prior(kind));
        if normalized {
            spec.truncation = Truncation::Normalized;
        }
        if conditional {
            spec.count_update = CountUpdate::Conditional;
        }
        prop_assume!(spec.validate().is_ok());
        let (lo, hi) = spec.support().unwrap();
        let draws = fit_joint(&spec, &settings(2, 200, seed)).unwrap();
        let draws = derive_quantities(draws, FitSpec::Joint(&spec)).unwrap();
        let n1 = draws.pooled_counts("n1").unwrap();
        let n2 = draws.pooled_counts("n2").unwrap();
        let fn_ = draws.pooled_counts("fn").unwrap();
        let tn = draws.pooled_counts("tn").unwrap();
        for i in 0..n1.len() {
            prop_assert!(n1[i] >= lo.max(tp) && n1[i] <= hi);
            prop_assert_eq!(n1[i] + n2[i], total);
            prop_assert_eq!(fn_[i] + tp, n1[i]);
            prop_assert_eq!(tn[i] + fp, n2[i]);
        }
    }

    #[test]
    fn single_row_draws_respect_support(
        y in 0u64..40,
        extra in proptest::option::of(0u64..40),
        normalized in any::<bool>(),
        conditional in any::<bool>(),
        seed in 0u64..1000,
    ) {
        let mut spec = SingleRowSpec::new(y, beta(2.0, 1.0), beta(1.0, 1.0), gamma(1.0, 0.1));
        spec.upper_bound = extra.map(|e| y + e);
        spec.init.n = y + extra.unwrap_or(5) / 2;
        if normalized {
            spec.truncation = Truncation::Normalized;
        }
        if conditional {
            spec.count_update = CountUpdate::Conditional;
        }
        let draws = fit_single_row(&spec, &settings(2, 200, seed)).unwrap();
        for n in draws.pooled_counts("n").unwrap() {
            prop_assert!(n >= y);
            if let Some(upper) = spec.upper_bound {
                prop_assert!(n <= upper);
            }
        }
    }
}
