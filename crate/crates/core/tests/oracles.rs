use coopetition::equilibrium::{solve_r_t, solve_r_x};
use coopetition::oracle::{
    agrees_with, best_response_check, mc_expected_payment, mc_expected_payoff, quadratic_r_t,
    quadratic_r_x, CertifyOptions, ProfileSample,
};
use coopetition::provider::{expected_payment, expected_payoff};
use coopetition::{EquilibriumStrategy, Execution, MarketConfig, TypeDistribution};
use proptest::prelude::*;

fn uniform_pair(eta: f64) -> MarketConfig {
    MarketConfig::new(
        2,
        TypeDistribution::uniform(50.0, 200.0).unwrap(),
        eta,
        0.4,
        300.0,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn bisection_matches_quadratic_above_r_min(eta in 0.01f64..0.99, t in 0.0f64..0.999) {
        let m = uniform_pair(eta);
        let c = 50.0 + 150.0 * t;
        let err = (solve_r_t(&m, c).unwrap() - quadratic_r_t(&m, c).unwrap()).abs();
        prop_assert!(err < 1e-6, "c = {c}, err = {err:e}");
    }

    #[test]
    fn bisection_matches_quadratic_below_r_min(eta in 0.01f64..0.99, t in 0.001f64..0.999) {
        let m = uniform_pair(eta);
        let c = m.low_bound() + (50.0 - m.low_bound()) * t;
        let err = (solve_r_x(&m, c).unwrap() - quadratic_r_x(&m, c).unwrap()).abs();
        prop_assert!(err < 1e-6, "c = {c}, err = {err:e}");
    }
}

#[test]
fn uniform_market_closed_forms_match_simulation() {
    let m = MarketConfig::new(
        3,
        TypeDistribution::uniform(50.0, 200.0).unwrap(),
        0.5,
        0.3,
        250.0,
    )
    .unwrap();
    let sample = ProfileSample::draw(&m, 300_000, 21, Execution::Parallel);
    for c in [20.0, 45.0, 70.0, 140.0, 230.0] {
        let p = mc_expected_payoff(&m, c, &sample, Execution::Parallel).unwrap();
        let q = mc_expected_payment(&m, c, &sample, Execution::Parallel).unwrap();
        assert!(
            agrees_with(expected_payoff(&m, c).unwrap(), &p, m.r_lte),
            "payoff at c = {c}: {p:?}"
        );
        assert!(
            agrees_with(expected_payment(&m, c).unwrap(), &q, m.r_lte),
            "payment at c = {c}: {q:?}"
        );
    }
}

#[test]
fn uniform_pair_equilibrium_is_certified() {
    let m = uniform_pair(0.3);
    let opts = CertifyOptions {
        n_types: 30,
        n_bids: 51,
        samples: 30_000,
        seed: 9,
        exec: Execution::Parallel,
    };
    for c in [35.0, 45.0, 100.0, 180.0] {
        let s = EquilibriumStrategy::new(&m, c).unwrap();
        let rep = best_response_check(&m, c, |r| s.bid(r), &opts).unwrap();
        assert!(rep.certified, "c = {c}: {:?}", rep.worst);
    }
}

#[test]
fn lowering_the_threshold_is_detected() {
    let m = uniform_pair(0.3);
    let c = 100.0;
    let s = EquilibriumStrategy::new(&m, c).unwrap();
    let r_t = s.r_t.unwrap();
    let cut = c + 0.5 * (r_t - c);
    let wrong = |r: f64| {
        if r > cut {
            coopetition::Bid::Abstain
        } else {
            s.bid(r)
        }
    };
    let opts = CertifyOptions {
        samples: 30_000,
        ..CertifyOptions::default()
    };
    let rep = best_response_check(&m, c, wrong, &opts).unwrap();
    assert!(!rep.certified);
    assert!(rep.into_result().is_err());
}
