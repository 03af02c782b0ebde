//! Auction run by one of several LTE providers.
//!
//! APOs `0..k_s` share their channels with other LTE providers; APOs
//! `k_s..k_s + k_a` occupy their channels alone. Taking a shared channel
//! gives the auctioneer only `theta * r_lte`, so a shared APO's raw bid is
//! normalized by adding `(1 - theta) * r_lte` before the usual second-price
//! comparison, and subtracted again from its payment. In competition mode
//! the auctioneer only ever shares an alone APO's channel.
//!
//! The expected payoff has no closed form here and is estimated by Monte
//! Carlo over a fixed, antithetic sample of types so that the estimate is a
//! smooth deterministic function of the reserve rate.

use serde::{Deserialize, Serialize};

use crate::auction::Mode;
use crate::distribution::TypeDistribution;
use crate::equilibrium::{EquilibriumStrategy, RegimeKind};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, try_map_indexed, Execution};
use crate::market::{check_unit_interval, Bid, MarketConfig};
use crate::numeric::{deepest_dip, golden_section_max, MeanEstimate};
use crate::provider::linspace;
use crate::rng::{pick_index, RngStream};
use crate::simulation::{discount_pairs, or_base, Columns, MetricsSummary};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MultiSpec", into = "MultiSpec")]
pub struct MultiMarketConfig {
    /// APOs sharing a channel with another LTE provider.
    pub k_s: usize,
    /// APOs alone on their channel.
    pub k_a: usize,
    pub dist: TypeDistribution,
    pub eta_apo: f64,
    pub delta_lte: f64,
    /// Rate discount of two LTE providers sharing a channel.
    pub theta_lte: f64,
    pub r_lte: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiSpec {
    k_s: usize,
    k_a: usize,
    dist: TypeDistribution,
    eta_apo: f64,
    delta_lte: f64,
    theta_lte: f64,
    r_lte: f64,
}

impl TryFrom<MultiSpec> for MultiMarketConfig {
    type Error = Error;

    fn try_from(s: MultiSpec) -> Result<Self> {
        let cfg = MultiMarketConfig {
            k_s: s.k_s,
            k_a: s.k_a,
            dist: s.dist,
            eta_apo: s.eta_apo,
            delta_lte: s.delta_lte,
            theta_lte: s.theta_lte,
            r_lte: s.r_lte,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<MultiMarketConfig> for MultiSpec {
    fn from(m: MultiMarketConfig) -> Self {
        MultiSpec {
            k_s: m.k_s,
            k_a: m.k_a,
            dist: m.dist,
            eta_apo: m.eta_apo,
            delta_lte: m.delta_lte,
            theta_lte: m.theta_lte,
            r_lte: m.r_lte,
        }
    }
}

impl MultiMarketConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_s < 2 || self.k_a < 2 {
            return Err(Error::InvalidConfig(format!(
                "need k_s >= 2 and k_a >= 2, got k_s = {}, k_a = {}",
                self.k_s, self.k_a
            )));
        }
        check_unit_interval("theta_lte", self.theta_lte)?;
        self.alone_market().validate()
    }

    pub fn n(&self) -> usize {
        self.k_s + self.k_a
    }

    /// Single-provider market of the alone APOs; their equilibrium is the
    /// single-provider one with `k = k_a`.
    pub fn alone_market(&self) -> MarketConfig {
        MarketConfig {
            k: self.k_a,
            dist: self.dist,
            eta_apo: self.eta_apo,
            delta_lte: self.delta_lte,
            r_lte: self.r_lte,
        }
    }

    /// `(1 - theta) * r_lte`, the virtual-bid offset of shared APOs.
    pub fn shift(&self) -> f64 {
        (1.0 - self.theta_lte) * self.r_lte
    }

    pub fn origin(&self, i: usize) -> Origin {
        if i < self.k_s {
            Origin::Shared
        } else {
            Origin::Alone
        }
    }

    pub fn origins(&self) -> Vec<Origin> {
        (0..self.n()).map(|i| self.origin(i)).collect()
    }

    pub fn competition_payoff(&self) -> f64 {
        self.delta_lte * self.r_lte
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    /// Shares its channel with another LTE provider.
    #[serde(rename = "S")]
    Shared,
    /// Alone on its channel.
    #[serde(rename = "A")]
    Alone,
}

/// A bid after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirtualBid {
    pub bid: Bid,
    pub origin: Origin,
}

/// Normalizes a raw bid; shared APOs may request at most
/// `c - (1 - theta) r_lte`.
pub fn virtual_bid(
    raw: Bid,
    origin: Origin,
    cfg: &MultiMarketConfig,
    c: f64,
) -> Result<VirtualBid> {
    let bid = match (raw, origin) {
        (Bid::Abstain, _) => Bid::Abstain,
        (Bid::Rate(v), Origin::Alone) => {
            if !(v >= 0.0 && v <= c) {
                return Err(Error::InfeasibleBid(format!(
                    "alone APO bid {v} outside [0, {c}]"
                )));
            }
            Bid::Rate(v)
        }
        (Bid::Rate(v), Origin::Shared) => {
            let cap = c - cfg.shift();
            if !(v >= 0.0 && v <= cap) {
                return Err(Error::InfeasibleBid(format!(
                    "shared APO bid {v} outside [0, {cap}]"
                )));
            }
            Bid::Rate(v + cfg.shift())
        }
    };
    Ok(VirtualBid { bid, origin })
}

/// Equilibrium strategies of both populations at one reserve rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiStrategy {
    pub c: f64,
    /// Highest shared type that still bids.
    pub shared_cutoff: f64,
    pub alone: EquilibriumStrategy,
    #[serde(skip)]
    shift: f64,
    #[serde(skip)]
    eta: f64,
}

impl MultiStrategy {
    pub fn new(cfg: &MultiMarketConfig, c: f64) -> Result<Self> {
        Ok(Self {
            c,
            shared_cutoff: (c - cfg.shift()) / cfg.eta_apo,
            alone: EquilibriumStrategy::new(&cfg.alone_market(), c)?,
            shift: cfg.shift(),
            eta: cfg.eta_apo,
        })
    }

    /// Shared APO: virtual bid `eta r + (1 - theta) r_lte` up to the cutoff
    /// type, abstain above it.
    pub fn bid_s(&self, r: f64) -> VirtualBid {
        let bid = if self.c >= self.shift && r <= self.shared_cutoff {
            Bid::Rate((self.eta * r + self.shift).min(self.c))
        } else {
            Bid::Abstain
        };
        VirtualBid {
            bid,
            origin: Origin::Shared,
        }
    }

    /// Alone APO: the single-provider equilibrium with `k = k_a`.
    pub fn bid_a(&self, r: f64) -> VirtualBid {
        VirtualBid {
            bid: self.alone.bid(r),
            origin: Origin::Alone,
        }
    }

    /// Bids for types ordered shared first, then alone.
    pub fn bids(&self, cfg: &MultiMarketConfig, types: &[f64]) -> Vec<VirtualBid> {
        types
            .iter()
            .enumerate()
            .map(|(i, &r)| match cfg.origin(i) {
                Origin::Shared => self.bid_s(r),
                Origin::Alone => self.bid_a(r),
            })
            .collect()
    }
}

pub fn bid_s(cfg: &MultiMarketConfig, c: f64, r: f64) -> Result<VirtualBid> {
    Ok(MultiStrategy::new(cfg, c)?.bid_s(r))
}

pub fn bid_a(cfg: &MultiMarketConfig, c: f64, r: f64) -> Result<VirtualBid> {
    Ok(MultiStrategy::new(cfg, c)?.bid_a(r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiOutcome {
    pub mode: Mode,
    pub winner: Option<usize>,
    pub winner_origin: Option<Origin>,
    pub channel: usize,
    /// Rate allocated to the winner's users.
    pub r_pay: f64,
    /// Virtual price that sets the payment (0 in competition).
    pub price: f64,
}

fn check_profile(vbids: &[VirtualBid], cfg: &MultiMarketConfig, c: f64) -> Result<()> {
    if vbids.len() != cfg.n() {
        return Err(Error::InvalidProfile(format!(
            "expected {} bids, got {}",
            cfg.n(),
            vbids.len()
        )));
    }
    for (i, vb) in vbids.iter().enumerate() {
        if vb.origin != cfg.origin(i) {
            return Err(Error::InvalidProfile(format!(
                "bid {i} has the wrong origin"
            )));
        }
        if let Bid::Rate(v) = vb.bid {
            let lo = if vb.origin == Origin::Shared {
                cfg.shift()
            } else {
                0.0
            };
            if !(v >= lo && v <= c) {
                return Err(Error::InvalidProfile(format!(
                    "virtual bid {v} of APO {i} outside [{lo}, {c}]"
                )));
            }
        }
    }
    Ok(())
}

/// Resolves the auction on virtual bids, consuming exactly one draw.
pub fn resolve_multi(
    vbids: &[VirtualBid],
    cfg: &MultiMarketConfig,
    c: f64,
    rng: &mut RngStream,
) -> Result<MultiOutcome> {
    resolve_multi_with_unit(vbids, cfg, c, rng.next_unit())
}

pub fn resolve_multi_with_unit(
    vbids: &[VirtualBid],
    cfg: &MultiMarketConfig,
    c: f64,
    u: f64,
) -> Result<MultiOutcome> {
    check_profile(vbids, cfg, c)?;
    let min = vbids
        .iter()
        .filter_map(|v| v.bid.rate())
        .fold(f64::INFINITY, f64::min);
    if min == f64::INFINITY {
        return Ok(MultiOutcome {
            mode: Mode::Competition,
            winner: None,
            winner_origin: None,
            channel: cfg.k_s + pick_index(u, cfg.k_a),
            r_pay: 0.0,
            price: 0.0,
        });
    }
    let at_min: Vec<usize> = (0..vbids.len())
        .filter(|&i| vbids[i].bid == Bid::Rate(min))
        .collect();
    let (winner, price) = if at_min.len() == 1 {
        let i = at_min[0];
        let others = vbids
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .filter_map(|(_, v)| v.bid.rate())
            .fold(f64::INFINITY, f64::min);
        (i, c.min(others))
    } else {
        (at_min[pick_index(u, at_min.len())], min)
    };
    let origin = vbids[winner].origin;
    let r_pay = match origin {
        Origin::Shared => price - cfg.shift(),
        Origin::Alone => price,
    };
    Ok(MultiOutcome {
        mode: Mode::Cooperation,
        winner: Some(winner),
        winner_origin: Some(origin),
        channel: winner,
        r_pay,
        price,
    })
}

/// Auctioneer's realized payoff. A shared winner leaves it `theta r_lte`
/// before paying.
pub fn lte_payoff_multi(outcome: &MultiOutcome, cfg: &MultiMarketConfig) -> f64 {
    match (outcome.mode, outcome.winner_origin) {
        (Mode::Cooperation, Some(Origin::Shared)) => cfg.theta_lte * cfg.r_lte - outcome.r_pay,
        (Mode::Cooperation, _) => cfg.r_lte - outcome.r_pay,
        (Mode::Competition, _) => cfg.competition_payoff(),
    }
}

/// Realized APO payoffs. Shared APOs keep `eta r` unless they win; alone
/// APOs follow the single-provider rule with competition over alone
/// channels only.
pub fn apo_payoffs_multi(
    outcome: &MultiOutcome,
    types: &[f64],
    origins: &[Origin],
    cfg: &MultiMarketConfig,
) -> Vec<f64> {
    types
        .iter()
        .zip(origins)
        .enumerate()
        .map(|(i, (&r, &o))| {
            if outcome.mode == Mode::Cooperation && outcome.winner == Some(i) {
                return outcome.r_pay;
            }
            match o {
                Origin::Shared => cfg.eta_apo * r,
                Origin::Alone if outcome.mode == Mode::Competition && outcome.channel == i => {
                    cfg.eta_apo * r
                }
                Origin::Alone => r,
            }
        })
        .collect()
}

/// Random coexistence on an alone channel; consumes one draw.
pub fn benchmark_multi(
    cfg: &MultiMarketConfig,
    types: &[f64],
    rng: &mut RngStream,
) -> (f64, Vec<f64>, usize) {
    let channel = cfg.k_s + rng.pick(cfg.k_a);
    let apo = types
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            if i < cfg.k_s || i == channel {
                cfg.eta_apo * r
            } else {
                r
            }
        })
        .collect();
    (cfg.competition_payoff(), apo, channel)
}

/// Common random numbers for the expected-payoff estimator: `pairs`
/// antithetic pairs of type vectors and tie-break units.
#[derive(Debug, Clone)]
pub struct TypeSample {
    n_apo: usize,
    /// Row-major, `2 * pairs` rows of `n_apo` types.
    types: Vec<f64>,
    ties: Vec<f64>,
}

impl TypeSample {
    /// Pair `j` draws its uniforms from `RngStream(seed, j)`; its second
    /// member uses `1 - u` for every uniform.
    pub fn draw(
        dist: &TypeDistribution,
        n_apo: usize,
        pairs: usize,
        seed: u64,
        exec: Execution,
    ) -> Self {
        let rows: Vec<(Vec<f64>, f64, Vec<f64>, f64)> = map_indexed(pairs, exec, |j| {
            let mut rng = RngStream::new(seed, j as u64);
            let us: Vec<f64> = (0..n_apo).map(|_| rng.next_unit()).collect();
            let t = rng.next_unit();
            let a = us.iter().map(|&u| dist.inverse_cdf(u)).collect();
            let b = us.iter().map(|&u| dist.inverse_cdf(1.0 - u)).collect();
            (a, t, b, 1.0 - t)
        });
        let mut types = Vec::with_capacity(2 * pairs * n_apo);
        let mut ties = Vec::with_capacity(2 * pairs);
        for (a, ta, b, tb) in rows {
            types.extend(a);
            ties.push(ta);
            types.extend(b);
            ties.push(tb);
        }
        Self { n_apo, types, ties }
    }

    pub fn pairs(&self) -> usize {
        self.ties.len() / 2
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.types[i * self.n_apo..(i + 1) * self.n_apo]
    }
}

/// Antithetic-pair averages of the auctioneer's payoff at `c`; their mean
/// is the expected payoff estimate and they are i.i.d. across pairs.
pub fn payoff_pair_samples(
    cfg: &MultiMarketConfig,
    sample: &TypeSample,
    c: f64,
) -> Result<Vec<f64>> {
    if sample.n_apo != cfg.n() {
        return Err(Error::InvalidConfig(
            "type sample has the wrong number of APOs".into(),
        ));
    }
    let s = MultiStrategy::new(cfg, c)?;
    let mut out = Vec::with_capacity(sample.pairs());
    let mut vb = Vec::with_capacity(cfg.n());
    for j in 0..sample.pairs() {
        let mut acc = 0.0;
        for i in [2 * j, 2 * j + 1] {
            vb.clear();
            vb.extend(s.bids(cfg, sample.row(i)));
            let o = resolve_multi_with_unit(&vb, cfg, c, sample.ties[i])?;
            acc += lte_payoff_multi(&o, cfg);
        }
        out.push(0.5 * acc);
    }
    Ok(out)
}

pub fn expected_payoff_multi_on(
    cfg: &MultiMarketConfig,
    sample: &TypeSample,
    c: f64,
) -> Result<MeanEstimate> {
    Ok(MeanEstimate::from_samples(&payoff_pair_samples(
        cfg, sample, c,
    )?))
}

/// Expected auctioneer payoff from `samples` type draws (rounded up to an
/// even number).
pub fn expected_payoff_multi(
    cfg: &MultiMarketConfig,
    c: f64,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<MeanEstimate> {
    let sample = TypeSample::draw(&cfg.dist, cfg.n(), samples.div_ceil(2), seed, exec);
    expected_payoff_multi_on(cfg, &sample, c)
}

/// Reserve rates worth searching. Below the lower end every type abstains;
/// above the upper end either the capacity constraint binds or the
/// strategies no longer change with `c`.
pub fn search_interval(cfg: &MultiMarketConfig) -> (f64, f64) {
    let a = cfg.alone_market();
    let (r, shift) = (cfg.r_lte, cfg.shift());
    let lo = a.low_bound().min(shift + cfg.eta_apo * cfg.r_min());
    let saturation = cfg.r_max().max(cfg.eta_apo * cfg.r_max() + shift);
    let hi = if r >= cfg.r_max() {
        saturation
    } else {
        // Alone APOs bid up to c once any of them bids, so c <= r_lte; with
        // only shared APOs bidding, their payments stay within r_lte up to
        // (2 - theta) r_lte.
        r.max(a.low_bound().min((2.0 - cfg.theta_lte) * r))
    };
    (lo, hi)
}

impl MultiMarketConfig {
    pub fn r_min(&self) -> f64 {
        self.dist.r_min()
    }

    pub fn r_max(&self) -> f64 {
        self.dist.r_max()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiOptimizeOptions {
    /// Type draws for the payoff estimate.
    pub samples: usize,
    pub seed: u64,
    pub guard_points: usize,
    /// Dip tolerance relative to `r_lte`, on top of three standard errors
    /// of the paired difference.
    pub guard_tol_rel: f64,
    pub fallback_points: usize,
    pub width_rel: f64,
    /// Points of the final grid around the golden-section optimum.
    pub polish_points: usize,
    pub strict: bool,
}

impl Default for MultiOptimizeOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0,
            guard_points: 200,
            guard_tol_rel: 1e-4,
            fallback_points: 2000,
            width_rel: 1e-4,
            polish_points: 21,
            strict: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MultiOptimalReserve {
    pub c_star: f64,
    pub interval: Option<[f64; 2]>,
    pub expected_payoff: f64,
    pub std_error: f64,
    pub search: [f64; 2],
    pub method: crate::provider::SearchMethod,
    pub guard_dip: f64,
    /// Three standard errors of the paired difference at the dip.
    pub guard_noise: f64,
}

/// Deepest dip of a Monte Carlo curve on common random numbers, and three
/// standard errors of the difference between the dip and the smaller of
/// the maxima on either side.
pub fn noisy_dip(
    cfg: &MultiMarketConfig,
    sample: &TypeSample,
    cs: &[f64],
    values: &[f64],
) -> Result<(usize, f64, f64)> {
    let (at, dip) = deepest_dip(values);
    if dip == 0.0 {
        return Ok((at, 0.0, 0.0));
    }
    let left = (0..at)
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(at);
    let right = (at + 1..values.len())
        .max_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap_or(at);
    let side = if values[left] <= values[right] {
        left
    } else {
        right
    };
    let d = payoff_pair_samples(cfg, sample, cs[at])?;
    let s = payoff_pair_samples(cfg, sample, cs[side])?;
    let diff: Vec<f64> = s.iter().zip(&d).map(|(a, b)| a - b).collect();
    Ok((at, dip, 3.0 * MeanEstimate::from_samples(&diff).std_error))
}

pub fn optimize_reserve_multi(
    cfg: &MultiMarketConfig,
    opts: &MultiOptimizeOptions,
    exec: Execution,
) -> Result<MultiOptimalReserve> {
    cfg.validate()?;
    let (lo, hi) = search_interval(cfg);
    let sample = TypeSample::draw(
        &cfg.dist,
        cfg.n(),
        opts.samples.div_ceil(2).max(1),
        opts.seed,
        exec,
    );
    let eval = |c: f64| expected_payoff_multi_on(cfg, &sample, c);
    if hi <= lo {
        return Ok(MultiOptimalReserve {
            c_star: 0.0,
            interval: Some([0.0, lo]),
            expected_payoff: cfg.competition_payoff(),
            std_error: 0.0,
            search: [lo, hi],
            method: crate::provider::SearchMethod::Indifferent,
            guard_dip: 0.0,
            guard_noise: 0.0,
        });
    }
    let grid = linspace(lo, hi, opts.guard_points.max(3));
    let values: Vec<f64> = try_map_indexed(grid.len(), exec, |i| eval(grid[i]).map(|m| m.mean))?;
    let (at, dip, noise) = noisy_dip(cfg, &sample, &grid, &values)?;
    let width = opts.width_rel * cfg.r_max();
    let unimodal = dip <= opts.guard_tol_rel * cfg.r_lte + noise;

    let (bracket, method) = if unimodal {
        let g = golden_section_max(|c| eval(c).map(|m| m.mean), lo, hi, width)?;
        (
            (g.x - 10.0 * width, g.x + 10.0 * width),
            crate::provider::SearchMethod::Golden,
        )
    } else if opts.strict {
        return Err(Error::NonUnimodal {
            lo,
            hi,
            at: grid[at],
            dip,
        });
    } else {
        let fine = linspace(lo, hi, opts.fallback_points.max(3));
        let vals: Vec<f64> = try_map_indexed(fine.len(), exec, |i| eval(fine[i]).map(|m| m.mean))?;
        let best = (0..fine.len())
            .max_by(|&a, &b| vals[a].total_cmp(&vals[b]))
            .unwrap_or(0);
        let step = (hi - lo) / (fine.len() - 1) as f64;
        (
            (fine[best] - step, fine[best] + step),
            crate::provider::SearchMethod::Grid,
        )
    };
    let polish = linspace(
        bracket.0.max(lo),
        bracket.1.min(hi),
        opts.polish_points.max(2),
    );
    let mut best: Option<(f64, MeanEstimate)> = None;
    for c in polish {
        let m = eval(c)?;
        if best.is_none_or(|(_, b)| m.mean > b.mean) {
            best = Some((c, m));
        }
    }
    let (c_star, m) = best.expect("polish grid is non-empty");
    Ok(MultiOptimalReserve {
        c_star,
        interval: None,
        expected_payoff: m.mean,
        std_error: m.std_error,
        search: [lo, hi],
        method,
        guard_dip: dip,
        guard_noise: noise,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiExperimentConfig {
    pub market: MultiMarketConfig,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<MultiSweep>,
}

fn default_replications() -> usize {
    crate::simulation::DEFAULT_REPLICATIONS
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MultiSweep {
    pub r_lte: Vec<f64>,
    pub delta_lte: Vec<f64>,
    pub eta_apo: Vec<f64>,
    pub theta_lte: Vec<f64>,
    /// Explicit `[delta_lte, eta_apo]` pairs, as in the single-provider sweep.
    pub discounts: Vec<[f64; 2]>,
}

impl MultiSweep {
    /// Cartesian product in the order `r_lte`, discount pairs, `theta_lte`.
    pub fn markets(&self, base: &MultiMarketConfig) -> Result<Vec<MultiMarketConfig>> {
        let pairs = discount_pairs(
            &self.discounts,
            &self.delta_lte,
            &self.eta_apo,
            [base.delta_lte, base.eta_apo],
        );
        let mut out = Vec::new();
        for &r_lte in &or_base(&self.r_lte, base.r_lte) {
            for &[delta_lte, eta_apo] in &pairs {
                for &theta_lte in &or_base(&self.theta_lte, base.theta_lte) {
                    let m = MultiMarketConfig {
                        r_lte,
                        delta_lte,
                        eta_apo,
                        theta_lte,
                        ..*base
                    };
                    m.validate()?;
                    out.push(m);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiReplicationResult {
    pub rep: u64,
    pub types: Vec<f64>,
    pub bids: Vec<Bid>,
    pub outcome: MultiOutcome,
    pub auction_lte: f64,
    pub auction_apo_total: f64,
    pub bench_lte: f64,
    pub bench_apo_total: f64,
    pub bench_channel: usize,
    pub rho_lte: f64,
    pub rho_apo: f64,
}

impl MultiReplicationResult {
    /// `(theta r_lte - r_pay) - (r_lte - price)` for a shared winner.
    pub fn payment_identity_gap(&self, cfg: &MultiMarketConfig) -> Option<f64> {
        match self.outcome.winner_origin {
            Some(Origin::Shared) => Some(self.auction_lte - (cfg.r_lte - self.outcome.price)),
            _ => None,
        }
    }
}

/// One replication; the stream draws the `n` types, the auction unit and
/// the benchmark unit, in that order.
pub fn run_multi_replication(
    cfg: &MultiMarketConfig,
    s: &MultiStrategy,
    master_seed: u64,
    rep: u64,
) -> Result<MultiReplicationResult> {
    let mut rng = RngStream::new(master_seed, rep);
    let types: Vec<f64> = (0..cfg.n()).map(|_| cfg.dist.sample(&mut rng)).collect();
    let vb = s.bids(cfg, &types);
    let outcome = resolve_multi(&vb, cfg, s.c, &mut rng)?;
    let apo = apo_payoffs_multi(&outcome, &types, &cfg.origins(), cfg);
    let lte = lte_payoff_multi(&outcome, cfg);
    let (b_lte, b_apo, bench_channel) = benchmark_multi(cfg, &types, &mut rng);
    let (a_tot, b_tot): (f64, f64) = (apo.iter().sum(), b_apo.iter().sum());
    Ok(MultiReplicationResult {
        rep,
        bids: vb.iter().map(|v| v.bid).collect(),
        types,
        outcome,
        auction_lte: lte,
        auction_apo_total: a_tot,
        bench_lte: b_lte,
        bench_apo_total: b_tot,
        bench_channel,
        rho_lte: (lte - b_lte) / b_lte,
        rho_apo: (a_tot - b_tot) / b_tot,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultiExperimentReport {
    pub market: MultiMarketConfig,
    pub optimal: MultiOptimalReserve,
    pub strategy: MultiStrategy,
    pub summary: MetricsSummary,
    #[serde(skip)]
    pub replications: Vec<MultiReplicationResult>,
}

pub fn summarize_multi(reps: &[MultiReplicationResult]) -> MetricsSummary {
    let col = |f: fn(&MultiReplicationResult) -> f64| reps.iter().map(f).collect::<Vec<_>>();
    Columns {
        rho_lte: col(|r| r.rho_lte),
        rho_apo: col(|r| r.rho_apo),
        lte_a: col(|r| r.auction_lte),
        lte_b: col(|r| r.bench_lte),
        apo_a: col(|r| r.auction_apo_total),
        apo_b: col(|r| r.bench_apo_total),
        w_a: col(|r| r.auction_lte + r.auction_apo_total),
        w_b: col(|r| r.bench_lte + r.bench_apo_total),
        w_max: None,
        cooperations: reps
            .iter()
            .filter(|r| r.outcome.mode == Mode::Cooperation)
            .count(),
    }
    .summarize()
}

pub fn run_multi_market(
    cfg: &MultiMarketConfig,
    replications: usize,
    master_seed: u64,
    opts: &MultiOptimizeOptions,
    exec: Execution,
) -> Result<MultiExperimentReport> {
    if replications == 0 {
        return Err(Error::InvalidConfig(
            "replications must be at least 1".into(),
        ));
    }
    let optimal = optimize_reserve_multi(cfg, opts, exec)?;
    let strategy = MultiStrategy::new(cfg, optimal.c_star)?;
    let reps = try_map_indexed(replications, exec, |i| {
        run_multi_replication(cfg, &strategy, master_seed, i as u64)
    })?;
    Ok(MultiExperimentReport {
        market: *cfg,
        optimal,
        strategy,
        summary: summarize_multi(&reps),
        replications: reps,
    })
}

pub fn run_multi_experiment(
    x: &MultiExperimentConfig,
    opts: &MultiOptimizeOptions,
    exec: Execution,
) -> Result<Vec<MultiExperimentReport>> {
    x.market.validate()?;
    let markets = match &x.sweep {
        Some(s) => s.markets(&x.market)?,
        None => vec![x.market],
    };
    markets
        .iter()
        .map(|m| run_multi_market(m, x.replications, x.master_seed, opts, exec))
        .collect()
}

/// Regime of the alone APOs' strategy at `c`.
pub fn alone_regime(cfg: &MultiMarketConfig, c: f64) -> RegimeKind {
    crate::equilibrium::classify_regime(&cfg.alone_market(), c).kind
}
