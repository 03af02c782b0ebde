use coopetition::provider::{expected_payoff, linspace, optimize_reserve, SearchMethod};
use coopetition::{classify_regime, MarketConfig, RegimeKind, TypeDistribution};
use proptest::prelude::*;

fn market(k: usize, uniform: bool, eta: f64, delta: f64, r: f64) -> MarketConfig {
    let d = if uniform {
        TypeDistribution::uniform(50.0, 200.0).unwrap()
    } else {
        TypeDistribution::truncated_normal(125.0, 50.0, 50.0, 200.0).unwrap()
    };
    MarketConfig::new(k, d, eta, delta, r).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn optimum_beats_a_grid(k in 2usize..6, uniform in any::<bool>(), eta in 0.05f64..0.95,
                            delta in 0.1f64..0.9, r in 20.0f64..400.0) {
        let m = market(k, uniform, eta, delta, r);
        let o = optimize_reserve(&m).unwrap();
        prop_assert!(o.expected_payoff >= m.competition_payoff() - 1e-9);
        let hi = m.r_max().max(m.r_lte);
        for c in linspace(0.0, hi, 120) {
            let v = expected_payoff(&m, c).unwrap();
            prop_assert!(v <= o.expected_payoff + 1e-6 * m.r_lte, "c = {c}: {v} > {}", o.expected_payoff);
        }
    }

    #[test]
    fn regimes_tile_the_half_line(k in 2usize..8, eta in 0.0f64..1.0, c in 0.0f64..400.0) {
        let m = market(k, false, eta, 0.4, 100.0);
        let g = classify_regime(&m, c);
        prop_assert!(g.contains(c));
        let expected = if c <= m.low_bound() {
            RegimeKind::Low
        } else if c < 50.0 {
            RegimeKind::Mid
        } else if c < 200.0 {
            RegimeKind::Standard
        } else {
            RegimeKind::High
        };
        prop_assert_eq!(g.kind, expected);
    }
}

#[test]
fn optimum_moves_up_with_throughput() {
    let mut prev = 0.0;
    for r in (70..=400).step_by(15) {
        let o = optimize_reserve(&market(4, false, 0.3, 0.4, r as f64)).unwrap();
        assert!(o.c_star >= prev, "R = {r}");
        assert_ne!(o.method, SearchMethod::Grid);
        prev = o.c_star;
    }
}
