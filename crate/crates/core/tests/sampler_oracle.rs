//! Sampled marginals of the latent count against exact posteriors.

mod common;

use common::{beta, gamma, hierarchy, negbin, settings};
use tablerecon::oracle::{exact_n1_joint, exact_n_single_row, ExactPmf, N1PriorOracle};
use tablerecon::samplers::{CountUpdate, JointInit, N1Prior};
use tablerecon::{fit_joint, fit_single_row, JointSpec, SingleRowSpec};

const DRAWS_PER_CHAIN: u64 = 50_000;
const TV_LIMIT: f64 = 0.02;

fn joint_tv(spec: &JointSpec, exact: &ExactPmf, per_chain: u64, seed: u64) -> f64 {
    let draws = fit_joint(spec, &settings(4, per_chain, seed)).unwrap();
    exact.total_variation(&draws.pooled_counts("n1").unwrap())
}

fn single_row_tv(spec: &SingleRowSpec, exact: &ExactPmf, per_chain: u64, seed: u64) -> f64 {
    let draws = fit_single_row(spec, &settings(4, per_chain, seed)).unwrap();
    exact.total_variation(&draws.pooled_counts("n").unwrap())
}

#[test]
fn model1_case1_both_updates() {
    let flat = beta(1.0, 1.0);
    let exact = exact_n1_joint(71, 28, 182, &flat, &flat, &N1PriorOracle::Uniform).unwrap();
    let mut spec = JointSpec::new(71, 28, 182, flat, flat, N1Prior::Uniform);
    let tv = joint_tv(&spec, &exact, DRAWS_PER_CHAIN, 1);
    assert!(tv < TV_LIMIT, "collapsed: {tv}");
    spec.count_update = CountUpdate::Conditional;
    let tv = joint_tv(&spec, &exact, DRAWS_PER_CHAIN, 2);
    assert!(tv < TV_LIMIT, "conditional: {tv}");
}

#[test]
fn model1_case2() {
    let flat = beta(1.0, 1.0);
    let exact = exact_n1_joint(105, 17, 620, &flat, &flat, &N1PriorOracle::Uniform).unwrap();
    let spec = JointSpec::new(105, 17, 620, flat, flat, N1Prior::Uniform);
    let tv = joint_tv(&spec, &exact, DRAWS_PER_CHAIN, 3);
    assert!(tv < TV_LIMIT, "{tv}");
}

#[test]
fn tv_shrinks_with_four_times_the_draws() {
    let flat = beta(1.0, 1.0);
    let exact = exact_n1_joint(71, 28, 182, &flat, &flat, &N1PriorOracle::Uniform).unwrap();
    let spec = JointSpec::new(71, 28, 182, flat, flat, N1Prior::Uniform);
    let small = joint_tv(&spec, &exact, DRAWS_PER_CHAIN, 4);
    let large = joint_tv(&spec, &exact, 4 * DRAWS_PER_CHAIN, 4);
    assert!(large < small, "{large} >= {small}");
}

#[test]
fn model2_poisson_priors() {
    let flat = beta(1.0, 1.0);
    let lambda_prior = gamma(2.0, 0.02);
    let exact = exact_n1_joint(71, 28, 182, &flat, &flat, &N1PriorOracle::PoissonGammaMixture(lambda_prior)).unwrap();
    let spec = JointSpec::new(71, 28, 182, flat, flat, N1Prior::TruncPoisson { lambda_prior });
    let tv = joint_tv(&spec, &exact, DRAWS_PER_CHAIN, 5);
    assert!(tv < TV_LIMIT, "hierarchical: {tv}");

    let exact = exact_n1_joint(71, 28, 182, &flat, &flat, &N1PriorOracle::PoissonFixed(75.0)).unwrap();
    let spec = JointSpec::new(71, 28, 182, flat, flat, N1Prior::PoissonFixed { lambda: 75.0 });
    let tv = joint_tv(&spec, &exact, DRAWS_PER_CHAIN, 6);
    assert!(tv < TV_LIMIT, "fixed: {tv}");
}

#[test]
fn model3_fixed_reduction() {
    let (p1, p2) = (beta(1.0, 0.1), beta(0.1, 1.0));
    let nb = negbin(0.3, 30.0);
    let exact = exact_n1_joint(71, 28, 182, &p1, &p2, &N1PriorOracle::NegBinFixed(nb)).unwrap();
    let spec = JointSpec::new(71, 28, 182, p1, p2, N1Prior::NegBinFixed(nb));
    let tv = joint_tv(&spec, &exact, DRAWS_PER_CHAIN, 7);
    assert!(tv < TV_LIMIT, "{tv}");
}

#[test]
fn model3_full_hierarchy() {
    let (p1, p2, p3, r) = (beta(1.0, 0.1), beta(0.1, 1.0), beta(0.1, 0.5), gamma(0.1, 0.01));
    let exact = hierarchy::joint_negbin(71, 28, 182, &p1, &p2, &p3, &r);
    let mut spec = JointSpec::new(71, 28, 182, p1, p2, N1Prior::TruncNegBin { p3_prior: p3, r_prior: r });
    spec.init = JointInit { n1: Some(80), r: 20.0, p1: 0.5, p2: 0.5, p3: 0.5, ..Default::default() };
    let tv = joint_tv(&spec, &exact, DRAWS_PER_CHAIN, 8);
    assert!(tv < TV_LIMIT, "{tv}");
}

#[test]
fn single_row_fixed_reductions() {
    let p = beta(2.0, 1.0);
    let nb = negbin(0.178, 17.0);
    for (upper, seed) in [(None, 9), (Some(182), 10)] {
        let exact = exact_n_single_row(71, &p, &nb, upper).unwrap();
        let mut spec = SingleRowSpec::fixed(71, p, nb);
        spec.upper_bound = upper;
        let tv = single_row_tv(&spec, &exact, DRAWS_PER_CHAIN, seed);
        assert!(tv < TV_LIMIT, "upper {upper:?}: {tv}");
        spec.count_update = CountUpdate::Conditional;
        let tv = single_row_tv(&spec, &exact, DRAWS_PER_CHAIN, seed + 100);
        assert!(tv < TV_LIMIT, "conditional, upper {upper:?}: {tv}");
    }
    let p = beta(2.0, 5.0);
    let nb = negbin(0.02, 1.4);
    let exact = exact_n_single_row(28, &p, &nb, Some(182)).unwrap();
    let tv = single_row_tv(&SingleRowSpec::fixed(28, p, nb).with_upper_bound(182), &exact, DRAWS_PER_CHAIN, 11);
    assert!(tv < TV_LIMIT, "non-diseased: {tv}");
}

#[test]
fn single_row_full_hierarchy_known_total() {
    let (p, pstar, lambda) = (beta(2.0, 1.0), beta(1.0, 1.0), gamma(1.0, 0.1));
    let exact = hierarchy::single_row(71, &p, &pstar, &lambda, Some(182));
    let mut spec = SingleRowSpec::new(71, p, pstar, lambda).with_upper_bound(182);
    spec.init.pstar = 0.5;
    let tv = single_row_tv(&spec, &exact, DRAWS_PER_CHAIN, 12);
    assert!(tv < TV_LIMIT, "{tv}");
}

#[test]
fn single_row_full_hierarchy_open_support() {
    let (p, pstar, lambda) = (beta(2.0, 1.0), beta(1.0, 1.0), gamma(1.0, 0.1));
    let exact = hierarchy::single_row(71, &p, &pstar, &lambda, None);
    let spec = SingleRowSpec::new(71, p, pstar, lambda);
    let tv = single_row_tv(&spec, &exact, DRAWS_PER_CHAIN, 13);
    assert!(tv < TV_LIMIT, "{tv}");
}
