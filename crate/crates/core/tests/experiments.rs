use coopetition::multi_lte::{self, MultiMarketConfig, MultiOptimizeOptions};
use coopetition::simulation::{run_experiment, run_sweep, ExperimentConfig, Sweep};
use coopetition::{Execution, MarketConfig, TypeDistribution};

fn tn() -> TypeDistribution {
    TypeDistribution::truncated_normal(125.0, 50.0, 50.0, 200.0).unwrap()
}

fn experiment(r: f64, reps: usize) -> ExperimentConfig {
    ExperimentConfig {
        market: MarketConfig::new(4, tn(), 0.3, 0.4, r).unwrap(),
        replications: reps,
        master_seed: 11,
        sweep: None,
    }
}

#[test]
fn summaries_do_not_depend_on_execution() {
    let x = experiment(250.0, 3000);
    let a = run_experiment(&x, Execution::Parallel).unwrap();
    let b = run_experiment(&x, Execution::Sequential).unwrap();
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.replications, b.replications);
}

#[test]
fn centralized_welfare_dominates_both_schemes() {
    let rep = run_experiment(&experiment(200.0, 5000), Execution::Parallel).unwrap();
    for r in &rep.replications {
        assert!(r.welfare_max >= r.welfare_auction - 1e-9, "rep {}", r.rep);
        assert!(r.welfare_max >= r.welfare_bench - 1e-9, "rep {}", r.rep);
    }
}

#[test]
fn gains_grow_with_throughput() {
    let x = ExperimentConfig {
        sweep: Some(Sweep {
            r_lte: (0..9).map(|i| 50.0 + 40.0 * i as f64).collect(),
            ..Sweep::default()
        }),
        ..experiment(100.0, 5000)
    };
    let reports = run_sweep(&x, Execution::Parallel).unwrap();
    for w in reports.windows(2) {
        let (a, b) = (&w[0].summary, &w[1].summary);
        assert!(
            b.mean_rho_lte.mean >= a.mean_rho_lte.mean - b.mean_rho_lte.half_width_95,
            "rho_lte falls from R = {} to R = {}",
            w[0].market.r_lte,
            w[1].market.r_lte
        );
        assert!(
            b.mean_rho_apo.mean >= a.mean_rho_apo.mean - b.mean_rho_apo.half_width_95,
            "rho_apo falls from R = {} to R = {}",
            w[0].market.r_lte,
            w[1].market.r_lte
        );
    }
}

#[test]
fn below_the_cooperation_threshold_nothing_changes() {
    let rep = run_experiment(&experiment(60.0, 500), Execution::Parallel).unwrap();
    assert_eq!(rep.optimal.case, 1);
    assert_eq!(rep.summary.cooperation_rate, 0.0);
    assert_eq!(rep.summary.mean_rho_lte.mean, 0.0);
    // Both schemes then pick a random channel to share, independently.
    let apo = rep.summary.mean_rho_apo;
    assert!(apo.mean.abs() <= 3.0 * apo.std_error, "{apo:?}");
}

#[test]
fn multi_provider_runs_are_reproducible() {
    let m = MultiMarketConfig {
        k_s: 2,
        k_a: 3,
        dist: tn(),
        eta_apo: 0.3,
        delta_lte: 0.4,
        theta_lte: 0.8,
        r_lte: 300.0,
    };
    let opts = MultiOptimizeOptions {
        samples: 20_000,
        ..Default::default()
    };
    let a = multi_lte::run_multi_market(&m, 2000, 5, &opts, Execution::Parallel).unwrap();
    let b = multi_lte::run_multi_market(&m, 2000, 5, &opts, Execution::Sequential).unwrap();
    assert_eq!(a.optimal, b.optimal);
    assert_eq!(a.replications, b.replications);
    let (lo, hi) = multi_lte::search_interval(&m);
    assert!(a.optimal.c_star >= lo && a.optimal.c_star <= hi);
    assert!(a.summary.lte_auction.mean >= m.delta_lte * m.r_lte);
}
