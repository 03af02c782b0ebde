//! Monte Carlo comparison of the auction against random coexistence.
//!
//! Replication `i` owns `RngStream(master_seed, i)` and draws, in order:
//! the `k` APO types, one unit for the auction's tie-break or channel pick,
//! and one unit for the benchmark's channel pick. Results are therefore
//! identical for any thread count.

use serde::{Deserialize, Serialize};

use crate::auction::{self, AuctionOutcome, BidProfile, Mode};
use crate::equilibrium::EquilibriumStrategy;
use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::market::{Bid, MarketConfig};
use crate::numeric::MeanEstimate;
use crate::provider::{optimize_reserve, OptimalReserve};
use crate::rng::RngStream;

/// Desk-scale replication count.
pub const DEFAULT_REPLICATIONS: usize = 5_000;
/// Replication count used for the published figures.
pub const FULL_REPLICATIONS: usize = 20_000;

/// Parameter grid; an empty list keeps the base market's value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sweep {
    pub r_lte: Vec<f64>,
    pub k: Vec<usize>,
    pub delta_lte: Vec<f64>,
    pub eta_apo: Vec<f64>,
    /// Explicit `[delta_lte, eta_apo]` pairs; when non-empty they replace
    /// the product of the two lists above.
    pub discounts: Vec<[f64; 2]>,
}

pub(crate) fn or_base<T: Copy>(v: &[T], base: T) -> Vec<T> {
    if v.is_empty() {
        vec![base]
    } else {
        v.to_vec()
    }
}

/// `[delta_lte, eta_apo]` combinations of a sweep.
pub(crate) fn discount_pairs(
    pairs: &[[f64; 2]],
    delta: &[f64],
    eta: &[f64],
    base: [f64; 2],
) -> Vec<[f64; 2]> {
    if !pairs.is_empty() {
        return pairs.to_vec();
    }
    let etas = or_base(eta, base[1]);
    or_base(delta, base[0])
        .into_iter()
        .flat_map(|d| etas.iter().map(move |&e| [d, e]))
        .collect()
}

impl Sweep {
    /// Cartesian product in the order `r_lte`, `k`, then discount pairs
    /// (`delta_lte` outer, `eta_apo` inner); the last varies fastest.
    pub fn markets(&self, base: &MarketConfig) -> Result<Vec<MarketConfig>> {
        let pairs = discount_pairs(
            &self.discounts,
            &self.delta_lte,
            &self.eta_apo,
            [base.delta_lte, base.eta_apo],
        );
        let mut out = Vec::new();
        for &r_lte in &or_base(&self.r_lte, base.r_lte) {
            for &k in &or_base(&self.k, base.k) {
                for &[delta_lte, eta_apo] in &pairs {
                    out.push(MarketConfig::new(k, base.dist, eta_apo, delta_lte, r_lte)?);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub market: MarketConfig,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

fn default_replications() -> usize {
    DEFAULT_REPLICATIONS
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        if self.replications == 0 {
            return Err(Error::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Payoffs of one scheme in one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeResult {
    pub lte: f64,
    pub apo: Vec<f64>,
    pub welfare: f64,
}

impl SchemeResult {
    fn new(lte: f64, apo: Vec<f64>) -> Self {
        let welfare = lte + apo.iter().sum::<f64>();
        Self { lte, apo, welfare }
    }

    pub fn apo_total(&self) -> f64 {
        self.apo.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationResult {
    pub rep: u64,
    pub types: Vec<f64>,
    pub bids: Vec<Bid>,
    pub outcome: AuctionOutcome,
    pub auction_lte: f64,
    pub auction_apo_total: f64,
    pub bench_lte: f64,
    pub bench_apo_total: f64,
    pub bench_channel: usize,
    pub welfare_auction: f64,
    pub welfare_bench: f64,
    pub welfare_max: f64,
    pub rho_lte: f64,
    pub rho_apo: f64,
}

/// Auction round for given types; consumes one draw.
pub fn auction_with_types(
    cfg: &MarketConfig,
    strategy: &EquilibriumStrategy,
    types: &[f64],
    rng: &mut RngStream,
) -> Result<(SchemeResult, AuctionOutcome, Vec<Bid>)> {
    let bids = strategy.bids(types);
    let profile = BidProfile::new(bids.clone(), strategy.c)?;
    let outcome = auction::resolve(&profile, strategy.c, rng);
    let p = auction::payoffs(&outcome, types, cfg);
    Ok((SchemeResult::new(p.lte, p.apo), outcome, bids))
}

/// Samples `k` types from `rng`, then plays the auction round.
pub fn run_auction_replication(
    cfg: &MarketConfig,
    strategy: &EquilibriumStrategy,
    rng: &mut RngStream,
) -> Result<(SchemeResult, AuctionOutcome, Vec<Bid>, Vec<f64>)> {
    let types: Vec<f64> = (0..cfg.k).map(|_| cfg.dist.sample(rng)).collect();
    let (res, outcome, bids) = auction_with_types(cfg, strategy, &types, rng)?;
    Ok((res, outcome, bids, types))
}

/// Random coexistence: the LTE shares a uniformly chosen channel. Consumes
/// one draw; returns the payoffs and the chosen channel.
pub fn run_benchmark_replication(
    cfg: &MarketConfig,
    types: &[f64],
    rng: &mut RngStream,
) -> (SchemeResult, usize) {
    let channel = rng.pick(types.len());
    let apo = types
        .iter()
        .enumerate()
        .map(|(i, &r)| if i == channel { cfg.eta_apo * r } else { r })
        .collect();
    (SchemeResult::new(cfg.competition_payoff(), apo), channel)
}

/// Best welfare a central planner can reach: leave the LTE idle, give it
/// one APO's channel exclusively, or let it share one channel.
pub fn social_welfare_max(cfg: &MarketConfig, types: &[f64]) -> f64 {
    let total: f64 = types.iter().sum();
    let mut best = total;
    for &r in types {
        best = best.max(cfg.r_lte + total - r);
        best = best.max(cfg.competition_payoff() + cfg.eta_apo * r + total - r);
    }
    best
}

/// Both schemes on the same types. `rng` must be positioned after the
/// type draws.
pub fn compare_with_types(
    cfg: &MarketConfig,
    strategy: &EquilibriumStrategy,
    rep: u64,
    types: Vec<f64>,
    rng: &mut RngStream,
) -> Result<ReplicationResult> {
    let (a, outcome, bids) = auction_with_types(cfg, strategy, &types, rng)?;
    let (b, bench_channel) = run_benchmark_replication(cfg, &types, rng);
    let (a_apo, b_apo) = (a.apo_total(), b.apo_total());
    Ok(ReplicationResult {
        rep,
        welfare_max: social_welfare_max(cfg, &types),
        types,
        bids,
        outcome,
        auction_lte: a.lte,
        auction_apo_total: a_apo,
        bench_lte: b.lte,
        bench_apo_total: b_apo,
        bench_channel,
        welfare_auction: a.welfare,
        welfare_bench: b.welfare,
        rho_lte: (a.lte - b.lte) / b.lte,
        rho_apo: (a_apo - b_apo) / b_apo,
    })
}

pub fn run_replication(
    cfg: &MarketConfig,
    strategy: &EquilibriumStrategy,
    master_seed: u64,
    rep: u64,
) -> Result<ReplicationResult> {
    let mut rng = RngStream::new(master_seed, rep);
    let types: Vec<f64> = (0..cfg.k).map(|_| cfg.dist.sample(&mut rng)).collect();
    compare_with_types(cfg, strategy, rep, types, &mut rng)
}

/// Mean with standard error and 95% half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metric {
    pub mean: f64,
    pub std_error: f64,
    pub half_width_95: f64,
}

impl Metric {
    pub fn from_samples(xs: &[f64]) -> Self {
        let m = MeanEstimate::from_samples(xs);
        Self {
            mean: m.mean,
            std_error: m.std_error,
            half_width_95: m.half_width_95(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsSummary {
    pub replications: usize,
    pub mean_rho_lte: Metric,
    pub mean_rho_apo: Metric,
    pub lte_auction: Metric,
    pub lte_bench: Metric,
    pub apo_auction: Metric,
    pub apo_bench: Metric,
    pub welfare_auction: Metric,
    pub welfare_bench: Metric,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub welfare_max: Option<Metric>,
    pub cooperation_rate: f64,
}

/// Column extractor for summaries, shared with the multi-LTE experiments.
pub(crate) struct Columns {
    pub rho_lte: Vec<f64>,
    pub rho_apo: Vec<f64>,
    pub lte_a: Vec<f64>,
    pub lte_b: Vec<f64>,
    pub apo_a: Vec<f64>,
    pub apo_b: Vec<f64>,
    pub w_a: Vec<f64>,
    pub w_b: Vec<f64>,
    pub w_max: Option<Vec<f64>>,
    pub cooperations: usize,
}

impl Columns {
    pub fn summarize(&self) -> MetricsSummary {
        let n = self.rho_lte.len();
        MetricsSummary {
            replications: n,
            mean_rho_lte: Metric::from_samples(&self.rho_lte),
            mean_rho_apo: Metric::from_samples(&self.rho_apo),
            lte_auction: Metric::from_samples(&self.lte_a),
            lte_bench: Metric::from_samples(&self.lte_b),
            apo_auction: Metric::from_samples(&self.apo_a),
            apo_bench: Metric::from_samples(&self.apo_b),
            welfare_auction: Metric::from_samples(&self.w_a),
            welfare_bench: Metric::from_samples(&self.w_b),
            welfare_max: self.w_max.as_deref().map(Metric::from_samples),
            cooperation_rate: self.cooperations as f64 / n.max(1) as f64,
        }
    }
}

pub fn summarize(reps: &[ReplicationResult]) -> MetricsSummary {
    let col = |f: fn(&ReplicationResult) -> f64| reps.iter().map(f).collect::<Vec<_>>();
    Columns {
        rho_lte: col(|r| r.rho_lte),
        rho_apo: col(|r| r.rho_apo),
        lte_a: col(|r| r.auction_lte),
        lte_b: col(|r| r.bench_lte),
        apo_a: col(|r| r.auction_apo_total),
        apo_b: col(|r| r.bench_apo_total),
        w_a: col(|r| r.welfare_auction),
        w_b: col(|r| r.welfare_bench),
        w_max: Some(col(|r| r.welfare_max)),
        cooperations: reps
            .iter()
            .filter(|r| r.outcome.mode == Mode::Cooperation)
            .count(),
    }
    .summarize()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub market: MarketConfig,
    pub optimal: OptimalReserve,
    pub strategy: EquilibriumStrategy,
    pub summary: MetricsSummary,
    #[serde(skip)]
    pub replications: Vec<ReplicationResult>,
}

/// Runs `replications` rounds at a fixed strategy.
pub fn run_replications(
    cfg: &MarketConfig,
    strategy: &EquilibriumStrategy,
    replications: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<Vec<ReplicationResult>> {
    try_map_indexed(replications, exec, |i| {
        run_replication(cfg, strategy, master_seed, i as u64)
    })
}

/// Optimizes the reserve rate for `xcfg.market` and simulates both schemes.
/// Ignores `xcfg.sweep`; see [`run_sweep`].
pub fn run_experiment(xcfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    xcfg.validate()?;
    run_market(&xcfg.market, xcfg.replications, xcfg.master_seed, exec)
}

fn run_market(
    cfg: &MarketConfig,
    replications: usize,
    master_seed: u64,
    exec: Execution,
) -> Result<ExperimentReport> {
    let optimal = optimize_reserve(cfg)?;
    let strategy = EquilibriumStrategy::new(cfg, optimal.c_star)?;
    let reps = run_replications(cfg, &strategy, replications, master_seed, exec)?;
    Ok(ExperimentReport {
        market: *cfg,
        optimal,
        strategy,
        summary: summarize(&reps),
        replications: reps,
    })
}

/// One report per grid point of `xcfg.sweep` (or the base market alone).
/// Every grid point reuses `master_seed`, so points share their type draws.
pub fn run_sweep(xcfg: &ExperimentConfig, exec: Execution) -> Result<Vec<ExperimentReport>> {
    xcfg.validate()?;
    let markets = match &xcfg.sweep {
        Some(s) => s.markets(&xcfg.market)?,
        None => vec![xcfg.market],
    };
    markets
        .iter()
        .map(|m| run_market(m, xcfg.replications, xcfg.master_seed, exec))
        .collect()
}
