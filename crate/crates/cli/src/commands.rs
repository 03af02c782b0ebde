use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, ValueEnum};
use coopetition::auction::{expected_apo_payoff, lte_payoff, resolve_with_unit};
use coopetition::equilibrium::StrategySegment;
use coopetition::multi_lte::{
    self, MultiMarketConfig, MultiOptimalReserve, MultiOptimizeOptions, MultiReplicationResult,
    Origin, TypeSample,
};
use coopetition::numeric::deepest_dip;
use coopetition::oracle::{best_response_check, CertificationReport, CertifyOptions, Mutation};
use coopetition::provider::{linspace, payoff_curve, OptimalReserve};
use coopetition::simulation::{
    self, ExperimentConfig, MetricsSummary, ReplicationResult, FULL_REPLICATIONS,
};
use coopetition::{
    optimize_reserve, BidProfile, EquilibriumStrategy, Error, Execution, MarketConfig, Mode,
    RegimeKind,
};
use serde::Serialize;

use crate::config::{ConfigError, Market, RunConfig};
use crate::output::{bid, csv_writer, num, to_json, write_json};

/// Where the run configuration comes from.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled configuration (appendixK, fig4, ..., fig13).
    #[arg(long)]
    pub preset: Option<String>,
}

impl Source {
    pub fn load(&self) -> Result<RunConfig> {
        match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::from_path(p),
            (None, Some(n)) => RunConfig::preset(n),
            (None, None) => Err(ConfigError("give --config or --preset".into()).into()),
        }
    }
}

#[derive(Debug, Args)]
pub struct EquilibriumArgs {
    #[command(flatten)]
    pub source: Source,
    /// Reserve rate; defaults to the configuration's `c`, then to the
    /// optimal reserve rate.
    #[arg(long)]
    pub c: Option<f64>,
    /// Comma-separated APO types to resolve one auction for.
    #[arg(long, value_delimiter = ',')]
    pub types: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub c_min: Option<f64>,
    #[arg(long)]
    pub c_max: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Type draws per point for several-provider markets.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writes the unimodality report as JSON.
    #[arg(long)]
    pub guard_out: Option<PathBuf>,
    /// Fails (exit 3) when the curve has an interior dip beyond tolerance.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub source: Source,
    /// Type draws for several-provider markets.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Fails (exit 3) instead of falling back to grid search when the
    /// payoff curve is not unimodal.
    #[arg(long)]
    pub strict: bool,
    /// One CSV row per market.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: Source,
    /// Replications per market; overrides the configuration (default 5000).
    #[arg(long)]
    pub replications: Option<usize>,
    /// Master seed; replication `i` uses stream `i` of it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use the published replication count (20000).
    #[arg(long, conflicts_with = "replications")]
    pub full: bool,
    /// Type draws for the reserve-rate search in several-provider markets.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    /// Per-replication CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One CSV row per market with the summary metrics.
    #[arg(long)]
    pub points: Option<PathBuf>,
    /// JSON summary; stdout when absent.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MutationArg {
    AbstainAboveReserve,
    NeverAbstain,
    AlwaysAbstain,
}

impl From<MutationArg> for Mutation {
    fn from(m: MutationArg) -> Self {
        match m {
            MutationArg::AbstainAboveReserve => Mutation::AbstainAboveReserve,
            MutationArg::NeverAbstain => Mutation::NeverAbstain,
            MutationArg::AlwaysAbstain => Mutation::AlwaysAbstain,
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long)]
    pub c: Option<f64>,
    /// Own types checked, evenly spaced over the support.
    #[arg(long, default_value_t = 50)]
    pub n_types: usize,
    /// Numeric deviations, evenly spaced over [0, c].
    #[arg(long, default_value_t = 101)]
    pub n_bids: usize,
    /// Opponent profiles.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Certify a deliberately wrong strategy instead of the equilibrium.
    #[arg(long, value_enum)]
    pub mutation: Option<MutationArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn reserve_rate(
    explicit: Option<f64>,
    cfg: &RunConfig,
    market: &MarketConfig,
) -> Result<(f64, Option<OptimalReserve>)> {
    match explicit.or(cfg.c) {
        Some(c) => Ok((c, None)),
        None => {
            let o = optimize_reserve(market)?;
            Ok((o.c_star, Some(o)))
        }
    }
}

#[derive(Serialize)]
struct ForcedOutcome {
    mode: Mode,
    /// APOs tied at the lowest bid; one of them wins at random.
    candidates: Vec<usize>,
    r_pay: f64,
    lte_payoff: f64,
    apo_expected: Vec<f64>,
}

#[derive(Serialize)]
struct EquilibriumReport {
    regime: RegimeKind,
    c: f64,
    regime_interval: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    r_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_x: Option<f64>,
    breakpoints: Vec<StrategySegment>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimal: Option<OptimalReserve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    types: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    bids: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outcome: Option<ForcedOutcome>,
}

pub fn equilibrium(args: &EquilibriumArgs) -> Result<()> {
    let cfg = args.source.load()?;
    let market = cfg.single()?;
    let (c, optimal) = reserve_rate(args.c, &cfg, market)?;
    let s = EquilibriumStrategy::new(market, c)?;
    let mut report = EquilibriumReport {
        regime: s.kind(),
        c,
        regime_interval: [s.regime.lo, s.regime.hi],
        r_t: s.r_t,
        r_x: s.r_x,
        breakpoints: s.segments(),
        optimal,
        types: None,
        bids: None,
        outcome: None,
    };
    if !args.types.is_empty() {
        if args.types.len() != market.k {
            return Err(ConfigError(format!(
                "--types needs {} values, got {}",
                market.k,
                args.types.len()
            ))
            .into());
        }
        let bids = s.bids(&args.types);
        let profile = BidProfile::new(bids.clone(), c)?;
        let o = resolve_with_unit(&profile, c, 0.0);
        report.outcome = Some(ForcedOutcome {
            mode: o.mode,
            candidates: profile.minimum().map(|(_, at)| at).unwrap_or_default(),
            r_pay: o.r_pay,
            lte_payoff: lte_payoff(&o, market),
            apo_expected: (0..market.k)
                .map(|i| expected_apo_payoff(i, &profile, &args.types, c, market))
                .collect(),
        });
        report.bids = Some(bids.into_iter().map(bid).collect());
        report.types = Some(args.types.clone());
    }
    write_json(&to_json(&report)?, args.out.as_deref())
}

#[derive(Serialize)]
struct GuardReport {
    points: usize,
    c_min: f64,
    c_max: f64,
    unimodal: bool,
    dip: f64,
    dip_at: f64,
    tolerance: f64,
    /// Three standard errors of the paired difference at the dip (Monte
    /// Carlo curves only).
    noise: f64,
    argmax: f64,
    max_payoff: f64,
}

fn curve_grid(
    args: &CurveArgs,
    cfg: &RunConfig,
    lo: f64,
    hi: f64,
    steps: usize,
) -> Result<Vec<f64>> {
    let c_min = args.c_min.or(cfg.curve.map(|c| c.c_min)).unwrap_or(lo);
    let c_max = args.c_max.or(cfg.curve.map(|c| c.c_max)).unwrap_or(hi);
    let steps = args.steps.or(cfg.curve.map(|c| c.steps)).unwrap_or(steps);
    if steps < 2 || c_min.is_nan() || c_max.is_nan() || c_min >= c_max || c_min < 0.0 {
        return Err(ConfigError("curve needs steps >= 2 and 0 <= c_min < c_max".into()).into());
    }
    Ok(linspace(c_min, c_max, steps))
}

fn guard(
    cs: &[f64],
    values: &[f64],
    r_lte: f64,
    noise_at: impl Fn(usize) -> Result<f64>,
) -> Result<GuardReport> {
    let (at, dip) = deepest_dip(values);
    let noise = if dip > 0.0 { noise_at(at)? } else { 0.0 };
    let tolerance = 1e-4 * r_lte;
    let best = (0..values.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(0);
    Ok(GuardReport {
        points: cs.len(),
        c_min: cs[0],
        c_max: cs[cs.len() - 1],
        unimodal: dip <= tolerance + noise,
        dip,
        dip_at: cs[at],
        tolerance,
        noise,
        argmax: cs[best],
        max_payoff: values[best],
    })
}

fn finish_guard(g: GuardReport, args: &CurveArgs) -> Result<()> {
    if let Some(p) = &args.guard_out {
        write_json(&to_json(&g)?, Some(p))?;
    }
    if args.strict && !g.unimodal {
        return Err(Error::NonUnimodal {
            lo: g.c_min,
            hi: g.c_max,
            at: g.dip_at,
            dip: g.dip,
        }
        .into());
    }
    Ok(())
}

pub fn payoff_curve_cmd(args: &CurveArgs, exec: Execution) -> Result<()> {
    let cfg = args.source.load()?;
    match cfg.market() {
        Market::Single(m) => single_curve(args, &cfg, m, exec),
        Market::Multi(m) => multi_curve(args, &cfg, m, exec),
    }
}

fn single_curve(
    args: &CurveArgs,
    cfg: &RunConfig,
    m: &MarketConfig,
    exec: Execution,
) -> Result<()> {
    let cs = curve_grid(
        args,
        cfg,
        0.0,
        m.r_max().max(m.r_lte.min(2.0 * m.r_max())),
        400,
    )?;
    let points = payoff_curve(m, &cs, exec)?;
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["c", "expected_payoff", "regime", "expected_payment"])?;
    for p in &points {
        w.write_record([
            num(p.c),
            num(p.expected_payoff),
            p.regime.kind.as_str().into(),
            num(p.expected_payment),
        ])?;
    }
    w.flush()?;
    let values: Vec<f64> = points.iter().map(|p| p.expected_payoff).collect();
    let g = guard(&cs, &values, m.r_lte, |_| Ok(0.0))?;
    finish_guard(g, args)
}

fn multi_curve(
    args: &CurveArgs,
    cfg: &RunConfig,
    m: &MultiMarketConfig,
    exec: Execution,
) -> Result<()> {
    let (lo, hi) = multi_lte::search_interval(m);
    let cs = curve_grid(args, cfg, 0.0, hi.max(lo), 200)?;
    let seed = args.seed.or(cfg.master_seed).unwrap_or(0);
    let sample = TypeSample::draw(&m.dist, m.n(), args.samples.div_ceil(2).max(2), seed, exec);
    let est = coopetition::exec::try_map_indexed(cs.len(), exec, |i| {
        multi_lte::expected_payoff_multi_on(m, &sample, cs[i])
    })?;
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["c", "expected_payoff", "std_error", "regime"])?;
    for (c, e) in cs.iter().zip(&est) {
        w.write_record([
            num(*c),
            num(e.mean),
            num(e.std_error),
            multi_lte::alone_regime(m, *c).as_str().into(),
        ])?;
    }
    w.flush()?;
    let values: Vec<f64> = est.iter().map(|e| e.mean).collect();
    let g = guard(&cs, &values, m.r_lte, |_| {
        Ok(multi_lte::noisy_dip(m, &sample, &cs, &values)?.2)
    })?;
    finish_guard(g, args)
}

#[derive(Serialize)]
struct SingleOptimum {
    k: usize,
    r_lte: f64,
    delta_lte: f64,
    eta_apo: f64,
    #[serde(flatten)]
    optimal: OptimalReserve,
    regime: RegimeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_x: Option<f64>,
}

fn single_optimum(m: &MarketConfig, strict: bool) -> Result<SingleOptimum> {
    let opts = coopetition::provider::OptimizeOptions {
        strict,
        ..Default::default()
    };
    let optimal = coopetition::provider::optimize_reserve_with(m, &opts)?;
    let s = EquilibriumStrategy::new(m, optimal.c_star)?;
    Ok(SingleOptimum {
        k: m.k,
        r_lte: m.r_lte,
        delta_lte: m.delta_lte,
        eta_apo: m.eta_apo,
        optimal,
        regime: s.kind(),
        r_t: s.r_t,
        r_x: s.r_x,
    })
}

#[derive(Serialize)]
struct MultiOptimum {
    k_s: usize,
    k_a: usize,
    r_lte: f64,
    delta_lte: f64,
    eta_apo: f64,
    theta_lte: f64,
    #[serde(flatten)]
    optimal: MultiOptimalReserve,
    alone_regime: RegimeKind,
    shared_cutoff: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    r_x: Option<f64>,
}

fn multi_optimum(m: &MultiMarketConfig, optimal: MultiOptimalReserve) -> Result<MultiOptimum> {
    let s = multi_lte::MultiStrategy::new(m, optimal.c_star)?;
    Ok(MultiOptimum {
        k_s: m.k_s,
        k_a: m.k_a,
        r_lte: m.r_lte,
        delta_lte: m.delta_lte,
        eta_apo: m.eta_apo,
        theta_lte: m.theta_lte,
        optimal,
        alone_regime: s.alone.kind(),
        shared_cutoff: s.shared_cutoff,
        r_t: s.alone.r_t,
        r_x: s.alone.r_x,
    })
}

fn multi_options(samples: usize, seed: u64, strict: bool) -> MultiOptimizeOptions {
    MultiOptimizeOptions {
        samples,
        seed,
        strict,
        ..Default::default()
    }
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn optimize(args: &OptimizeArgs, exec: Execution) -> Result<()> {
    let cfg = args.source.load()?;
    let doc = match cfg.market() {
        Market::Single(base) => {
            let markets = match &cfg.sweep {
                Some(s) => s.markets(base)?,
                None => vec![*base],
            };
            let rows = markets
                .iter()
                .map(|m| single_optimum(m, args.strict))
                .collect::<Result<Vec<_>>>()?;
            if let Some(p) = &args.csv {
                let mut w = csv_writer(Some(p))?;
                w.write_record([
                    "k",
                    "r_lte",
                    "delta_lte",
                    "eta_apo",
                    "c_star",
                    "expected_payoff",
                    "case",
                    "method",
                    "regime",
                    "r_t",
                    "r_x",
                ])?;
                for r in &rows {
                    w.write_record([
                        r.k.to_string(),
                        num(r.r_lte),
                        num(r.delta_lte),
                        num(r.eta_apo),
                        num(r.optimal.c_star),
                        num(r.optimal.expected_payoff),
                        r.optimal.case.to_string(),
                        to_json(&r.optimal.method)?
                            .as_str()
                            .unwrap_or_default()
                            .to_string(),
                        r.regime.as_str().into(),
                        opt_num(r.r_t),
                        opt_num(r.r_x),
                    ])?;
                }
                w.flush()?;
            }
            if cfg.sweep.is_some() {
                to_json(&rows)?
            } else {
                to_json(&rows[0])?
            }
        }
        Market::Multi(base) => {
            let markets = match &cfg.multi_sweep {
                Some(s) => s.markets(base)?,
                None => vec![*base],
            };
            let seed = args.seed.or(cfg.master_seed).unwrap_or(0);
            let opts = multi_options(args.samples, seed, args.strict);
            let rows = markets
                .iter()
                .map(|m| multi_optimum(m, multi_lte::optimize_reserve_multi(m, &opts, exec)?))
                .collect::<Result<Vec<_>>>()?;
            if let Some(p) = &args.csv {
                let mut w = csv_writer(Some(p))?;
                w.write_record([
                    "k_s",
                    "k_a",
                    "r_lte",
                    "delta_lte",
                    "eta_apo",
                    "theta_lte",
                    "c_star",
                    "expected_payoff",
                    "std_error",
                    "alone_regime",
                ])?;
                for r in &rows {
                    w.write_record([
                        r.k_s.to_string(),
                        r.k_a.to_string(),
                        num(r.r_lte),
                        num(r.delta_lte),
                        num(r.eta_apo),
                        num(r.theta_lte),
                        num(r.optimal.c_star),
                        num(r.optimal.expected_payoff),
                        num(r.optimal.std_error),
                        r.alone_regime.as_str().into(),
                    ])?;
                }
                w.flush()?;
            }
            if cfg.multi_sweep.is_some() {
                to_json(&rows)?
            } else {
                to_json(&rows[0])?
            }
        }
    };
    write_json(&doc, args.out.as_deref())
}

fn replications(args: &SimulateArgs, cfg: &RunConfig) -> usize {
    if args.full {
        FULL_REPLICATIONS
    } else {
        args.replications.unwrap_or_else(|| cfg.replications())
    }
}

#[derive(Serialize)]
struct SinglePoint {
    k: usize,
    r_lte: f64,
    delta_lte: f64,
    eta_apo: f64,
    c_star: f64,
    summary: MetricsSummary,
}

#[derive(Serialize)]
struct Identity {
    /// Cooperative replications won by a shared APO.
    shared_wins: usize,
    max_abs_gap: f64,
    tolerance: f64,
    holds: bool,
}

#[derive(Serialize)]
struct MultiPoint {
    k_s: usize,
    k_a: usize,
    r_lte: f64,
    delta_lte: f64,
    eta_apo: f64,
    theta_lte: f64,
    c_star: f64,
    summary: MetricsSummary,
    identity: Identity,
}

const POINT_HEADER: [&str; 15] = [
    "rho_lte",
    "rho_lte_hw",
    "rho_apo",
    "rho_apo_hw",
    "lte_auction",
    "lte_bench",
    "apo_auction",
    "apo_bench",
    "welfare_auction",
    "welfare_bench",
    "welfare_max",
    "cooperation_rate",
    "rho_lte_se",
    "rho_apo_se",
    "replications",
];

fn point_metrics(s: &MetricsSummary) -> Vec<String> {
    vec![
        num(s.mean_rho_lte.mean),
        num(s.mean_rho_lte.half_width_95),
        num(s.mean_rho_apo.mean),
        num(s.mean_rho_apo.half_width_95),
        num(s.lte_auction.mean),
        num(s.lte_bench.mean),
        num(s.apo_auction.mean),
        num(s.apo_bench.mean),
        num(s.welfare_auction.mean),
        num(s.welfare_bench.mean),
        s.welfare_max.map(|m| num(m.mean)).unwrap_or_default(),
        num(s.cooperation_rate),
        num(s.mean_rho_lte.std_error),
        num(s.mean_rho_apo.std_error),
        s.replications.to_string(),
    ]
}

fn padded<T>(xs: &[T], width: usize, f: impl Fn(&T) -> String) -> Vec<String> {
    let mut v: Vec<String> = xs.iter().map(f).collect();
    v.resize(width, String::new());
    v
}

fn numbered(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}

fn single_rep_row(point: usize, width: usize, r: &ReplicationResult) -> Vec<String> {
    let mut row = vec![point.to_string(), r.rep.to_string()];
    row.extend(padded(&r.types, width, |&x| num(x)));
    row.extend(padded(&r.bids, width, |&b| bid(b)));
    row.extend([
        r.outcome.mode.as_str().to_string(),
        r.outcome
            .winner
            .map(|w| (w + 1).to_string())
            .unwrap_or_default(),
        num(r.outcome.r_pay),
        num(r.auction_lte),
        num(r.bench_lte),
        num(r.auction_apo_total),
        num(r.bench_apo_total),
        num(r.welfare_auction),
        num(r.welfare_bench),
        num(r.welfare_max),
    ]);
    row
}

fn multi_rep_row(
    point: usize,
    width: usize,
    m: &MultiMarketConfig,
    r: &MultiReplicationResult,
) -> Vec<String> {
    let mut row = vec![point.to_string(), r.rep.to_string()];
    row.extend(padded(&r.types, width, |&x| num(x)));
    row.extend(padded(&r.bids, width, |&b| bid(b)));
    row.extend([
        r.outcome.mode.as_str().to_string(),
        r.outcome
            .winner
            .map(|w| (w + 1).to_string())
            .unwrap_or_default(),
        match r.outcome.winner_origin {
            Some(Origin::Shared) => "S".into(),
            Some(Origin::Alone) => "A".into(),
            None => String::new(),
        },
        num(r.outcome.r_pay),
        num(r.outcome.price),
        num(r.auction_lte),
        num(r.bench_lte),
        num(r.auction_apo_total),
        num(r.bench_apo_total),
        num(r.auction_lte + r.auction_apo_total),
        num(r.bench_lte + r.bench_apo_total),
        r.payment_identity_gap(m)
            .map(|g| format!("{g:e}"))
            .unwrap_or_default(),
    ]);
    row
}

pub fn simulate(args: &SimulateArgs, exec: Execution) -> Result<()> {
    let cfg = args.source.load()?;
    match cfg.market() {
        Market::Single(base) => simulate_single(args, &cfg, base, exec),
        Market::Multi(base) => simulate_multi(args, &cfg, base, exec),
    }
}

fn simulate_single(
    args: &SimulateArgs,
    cfg: &RunConfig,
    base: &MarketConfig,
    exec: Execution,
) -> Result<()> {
    let markets = match &cfg.sweep {
        Some(s) => s.markets(base)?,
        None => vec![*base],
    };
    let reps = replications(args, cfg);
    let seed = args.seed.unwrap_or_else(|| cfg.master_seed());
    let width = markets.iter().map(|m| m.k).max().unwrap_or(0);
    let mut rep_csv = match &args.out {
        Some(p) => {
            let mut w = csv_writer(Some(p))?;
            let mut h = vec!["point".to_string(), "rep".into()];
            h.extend(numbered("r", width));
            h.extend(numbered("b", width));
            h.extend(
                [
                    "mode", "winner", "r_pay", "pi_a_lte", "pi_b_lte", "pi_a_apo", "pi_b_apo",
                    "w_a", "w_b", "w_max",
                ]
                .map(String::from),
            );
            w.write_record(&h)?;
            Some(w)
        }
        None => None,
    };
    let mut points = Vec::with_capacity(markets.len());
    for (i, m) in markets.iter().enumerate() {
        let x = ExperimentConfig {
            market: *m,
            replications: reps,
            master_seed: seed,
            sweep: None,
        };
        let report = simulation::run_experiment(&x, exec)?;
        if let Some(w) = rep_csv.as_mut() {
            for r in &report.replications {
                w.write_record(single_rep_row(i, width, r))?;
            }
        }
        points.push(SinglePoint {
            k: m.k,
            r_lte: m.r_lte,
            delta_lte: m.delta_lte,
            eta_apo: m.eta_apo,
            c_star: report.optimal.c_star,
            summary: report.summary,
        });
    }
    if let Some(w) = rep_csv.as_mut() {
        w.flush()?;
    }
    if let Some(p) = &args.points {
        let mut w = csv_writer(Some(p))?;
        let mut h: Vec<String> = ["point", "k", "r_lte", "delta_lte", "eta_apo", "c_star"]
            .map(String::from)
            .to_vec();
        h.extend(POINT_HEADER.map(String::from));
        w.write_record(&h)?;
        for (i, p) in points.iter().enumerate() {
            let mut row = vec![
                i.to_string(),
                p.k.to_string(),
                num(p.r_lte),
                num(p.delta_lte),
                num(p.eta_apo),
                num(p.c_star),
            ];
            row.extend(point_metrics(&p.summary));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    let doc = if cfg.sweep.is_some() {
        to_json(&points)?
    } else {
        to_json(&points[0])?
    };
    write_json(&doc, args.summary.as_deref())
}

/// Largest rounding error tolerated in the shared-winner payment identity.
fn identity_tolerance(m: &MultiMarketConfig) -> f64 {
    8.0 * f64::EPSILON * m.r_lte
}

fn simulate_multi(
    args: &SimulateArgs,
    cfg: &RunConfig,
    base: &MultiMarketConfig,
    exec: Execution,
) -> Result<()> {
    let markets = match &cfg.multi_sweep {
        Some(s) => s.markets(base)?,
        None => vec![*base],
    };
    let reps = replications(args, cfg);
    let seed = args.seed.unwrap_or_else(|| cfg.master_seed());
    let opts = multi_options(args.samples, seed, false);
    let width = markets.iter().map(|m| m.n()).max().unwrap_or(0);
    let mut rep_csv = match &args.out {
        Some(p) => {
            let mut w = csv_writer(Some(p))?;
            let mut h = vec!["point".to_string(), "rep".into()];
            h.extend(numbered("r", width));
            h.extend(numbered("b", width));
            h.extend(
                [
                    "mode",
                    "winner",
                    "winner_origin",
                    "r_pay",
                    "price",
                    "pi_a_lte",
                    "pi_b_lte",
                    "pi_a_apo",
                    "pi_b_apo",
                    "w_a",
                    "w_b",
                    "identity_gap",
                ]
                .map(String::from),
            );
            w.write_record(&h)?;
            Some(w)
        }
        None => None,
    };
    let mut points = Vec::with_capacity(markets.len());
    for (i, m) in markets.iter().enumerate() {
        let report = multi_lte::run_multi_market(m, reps, seed, &opts, exec)?;
        if let Some(w) = rep_csv.as_mut() {
            for r in &report.replications {
                w.write_record(multi_rep_row(i, width, m, r))?;
            }
        }
        let gaps: Vec<f64> = report
            .replications
            .iter()
            .filter_map(|r| r.payment_identity_gap(m))
            .collect();
        let max_abs_gap = gaps.iter().fold(0.0f64, |a, g| a.max(g.abs()));
        let tolerance = identity_tolerance(m);
        points.push(MultiPoint {
            k_s: m.k_s,
            k_a: m.k_a,
            r_lte: m.r_lte,
            delta_lte: m.delta_lte,
            eta_apo: m.eta_apo,
            theta_lte: m.theta_lte,
            c_star: report.optimal.c_star,
            summary: report.summary,
            identity: Identity {
                shared_wins: gaps.len(),
                max_abs_gap,
                tolerance,
                holds: max_abs_gap <= tolerance,
            },
        });
    }
    if let Some(w) = rep_csv.as_mut() {
        w.flush()?;
    }
    if let Some(p) = &args.points {
        let mut w = csv_writer(Some(p))?;
        let mut h: Vec<String> = [
            "point",
            "k_s",
            "k_a",
            "r_lte",
            "delta_lte",
            "eta_apo",
            "theta_lte",
            "c_star",
        ]
        .map(String::from)
        .to_vec();
        h.extend(POINT_HEADER.map(String::from));
        w.write_record(&h)?;
        for (i, p) in points.iter().enumerate() {
            let mut row = vec![
                i.to_string(),
                p.k_s.to_string(),
                p.k_a.to_string(),
                num(p.r_lte),
                num(p.delta_lte),
                num(p.eta_apo),
                num(p.theta_lte),
                num(p.c_star),
            ];
            row.extend(point_metrics(&p.summary));
            w.write_record(&row)?;
        }
        w.flush()?;
    }
    let doc = if cfg.multi_sweep.is_some() {
        to_json(&points)?
    } else {
        to_json(&points[0])?
    };
    write_json(&doc, args.summary.as_deref())
}

#[derive(Serialize)]
struct VerifyReport {
    c: f64,
    regime: RegimeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    mutation: Option<String>,
    samples: usize,
    seed: u64,
    #[serde(flatten)]
    report: CertificationReport,
}

pub fn verify(args: &VerifyArgs, exec: Execution) -> Result<()> {
    let cfg = args.source.load()?;
    let market = cfg.single()?;
    let (c, _) = reserve_rate(args.c, &cfg, market)?;
    let s = EquilibriumStrategy::new(market, c)?;
    let opts = CertifyOptions {
        n_types: args.n_types,
        n_bids: args.n_bids,
        samples: args.samples,
        seed: args.seed,
        exec,
    };
    let report = match args.mutation {
        Some(m) => best_response_check(market, c, Mutation::from(m).apply(&s), &opts)?,
        None => best_response_check(market, c, |r| s.bid(r), &opts)?,
    };
    let doc = VerifyReport {
        c,
        regime: s.kind(),
        mutation: args
            .mutation
            .and_then(|m| m.to_possible_value())
            .map(|v| v.get_name().to_string()),
        samples: args.samples,
        seed: args.seed,
        report: report.clone(),
    };
    write_json(&to_json(&doc)?, args.out.as_deref())?;
    report.into_result()?;
    Ok(())
}
