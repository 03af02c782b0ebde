//! Independent checks of the solver: closed-form thresholds for uniform
//! types with two APOs, a brute-force best-response certifier, and Monte
//! Carlo estimates of the provider's expected payoff and payment.

use serde::Serialize;

use crate::auction::{lte_payoff, resolve_with_unit, BidProfile};
use crate::equilibrium::{EquilibriumStrategy, RegimeKind};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::market::{Bid, MarketConfig};
use crate::numeric::MeanEstimate;
use crate::provider::linspace;
use crate::rng::RngStream;

/// Slack allowed when checking that a root lies in its interval.
const ROOT_SLACK_REL: f64 = 1e-12;

fn require_uniform_pair(cfg: &MarketConfig) -> Result<()> {
    if cfg.k != 2 || !cfg.dist.is_uniform() {
        return Err(Error::InvalidConfig(
            "closed-form thresholds need k = 2 and uniform types".into(),
        ));
    }
    Ok(())
}

/// Real roots of `a x^2 + b x + c0`, computed without cancellation.
fn quadratic_roots(a: f64, b: f64, c0: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { vec![] } else { vec![-c0 / b] };
    }
    let disc = b * b - 4.0 * a * c0;
    if disc < 0.0 {
        return vec![];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / a, c0 / q]
}

fn root_in(roots: Vec<f64>, lo: f64, hi: f64, open_lo: bool) -> Result<f64> {
    let slack = ROOT_SLACK_REL * hi.abs().max(1.0);
    roots
        .into_iter()
        .find(|&x| {
            let above = if open_lo { x > lo } else { x >= lo - slack };
            above && x <= hi + slack
        })
        .map(|x| x.clamp(lo, hi))
        .ok_or(Error::NoRootInInterval { lo, hi })
}

/// Cooperation threshold for two uniform APOs: the root in `(c, r_max]` of
/// `(eta/2) r^2 - ((1+eta)/2) r_max r + r_max c - c^2/2`.
pub fn quadratic_r_t(cfg: &MarketConfig, c: f64) -> Result<f64> {
    require_uniform_pair(cfg)?;
    let (eta, b) = (cfg.eta_apo, cfg.r_max());
    let roots = quadratic_roots(0.5 * eta, -0.5 * (1.0 + eta) * b, b * c - 0.5 * c * c);
    root_in(roots, c, b, true)
}

/// Abstention threshold for two uniform APOs: the root in `[r_min, r_max]`
/// of `(eta/2) r^2 + (r_min/2 - c/2 - ((1+eta)/2) r_max) r + r_max c - c r_min/2`.
pub fn quadratic_r_x(cfg: &MarketConfig, c: f64) -> Result<f64> {
    require_uniform_pair(cfg)?;
    let (eta, a, b) = (cfg.eta_apo, cfg.r_min(), cfg.r_max());
    let roots = quadratic_roots(
        0.5 * eta,
        0.5 * (a - c) - 0.5 * (1.0 + eta) * b,
        b * c - 0.5 * c * a,
    );
    root_in(roots, a, b, false)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    /// Own types checked, evenly spaced over the support.
    pub n_types: usize,
    /// Numeric deviations, evenly spaced over `[0, c]`; abstaining is
    /// always tried as well.
    pub n_bids: usize,
    /// Opponent type profiles.
    pub samples: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            n_types: 50,
            n_bids: 101,
            samples: 100_000,
            seed: 0,
            exec: Execution::Parallel,
        }
    }
}

/// The most profitable deviation found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub r: f64,
    pub prescribed: Bid,
    pub deviation: Bid,
    pub gain: f64,
    pub std_error: f64,
    /// Gain above which the deviation counts as profitable.
    pub threshold: f64,
}

impl Deviation {
    pub fn is_profitable(&self) -> bool {
        self.gain > self.threshold
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub certified: bool,
    /// Deviation with the largest gain relative to its threshold.
    pub worst: Option<Deviation>,
    pub types_checked: usize,
    pub bids_checked: usize,
}

impl CertificationReport {
    pub fn into_result(self) -> Result<Self> {
        match self.worst {
            Some(d) if d.is_profitable() => Err(Error::CertificationFailed {
                r: d.r,
                deviation: d.deviation.to_string(),
                gain: d.gain,
                threshold: d.threshold,
            }),
            _ => Ok(self),
        }
    }
}

/// What one APO sees of its opponents in one sampled profile: the lowest
/// numeric bid (infinite if all abstain) and how many bid it.
#[derive(Debug, Clone, Copy)]
struct OpponentSummary {
    min: f64,
    at_min: u32,
}

/// Expected payoff of bidding `x` with type `r`, averaged over the tie-break
/// and, when everyone abstains, the channel the provider picks.
#[inline]
fn own_payoff(x: Bid, r: f64, c: f64, factor: f64, s: OpponentSummary) -> f64 {
    match x {
        Bid::Abstain => {
            if s.min.is_infinite() {
                factor * r
            } else {
                r
            }
        }
        Bid::Rate(x) => {
            if x < s.min {
                c.min(s.min)
            } else if x == s.min {
                let n = s.at_min as f64;
                (s.min + n * r) / (n + 1.0)
            } else {
                r
            }
        }
    }
}

fn opponent_summaries<S>(
    cfg: &MarketConfig,
    strategy: &S,
    opts: &CertifyOptions,
) -> Vec<OpponentSummary>
where
    S: Fn(f64) -> Bid + Sync,
{
    map_indexed(opts.samples, opts.exec, |i| {
        let mut rng = RngStream::new(opts.seed, i as u64);
        let mut s = OpponentSummary {
            min: f64::INFINITY,
            at_min: 0,
        };
        for _ in 1..cfg.k {
            if let Bid::Rate(v) = strategy(cfg.dist.sample(&mut rng)) {
                if v < s.min {
                    s = OpponentSummary { min: v, at_min: 1 };
                } else if v == s.min {
                    s.at_min += 1;
                }
            }
        }
        s
    })
}

/// Checks that `strategy` is a best response to itself at reserve `c`: for
/// each checked type no deviation gains more than three standard errors of
/// the paired payoff difference (plus `1e-9 r_max`).
pub fn best_response_check<S>(
    cfg: &MarketConfig,
    c: f64,
    strategy: S,
    opts: &CertifyOptions,
) -> Result<CertificationReport>
where
    S: Fn(f64) -> Bid + Sync,
{
    cfg.validate()?;
    if opts.samples < 2 || opts.n_types == 0 || opts.n_bids < 2 {
        return Err(Error::InvalidConfig(
            "certification needs samples >= 2, n_types >= 1, n_bids >= 2".into(),
        ));
    }
    let summaries = opponent_summaries(cfg, &strategy, opts);
    let factor = cfg.coexistence_factor();
    let floor = 1e-9 * cfg.r_max();
    let types = if opts.n_types == 1 {
        vec![cfg.r_min()]
    } else {
        linspace(cfg.r_min(), cfg.r_max(), opts.n_types)
    };
    let mut candidates: Vec<Bid> = linspace(0.0, c, opts.n_bids)
        .into_iter()
        .map(Bid::Rate)
        .collect();
    candidates.push(Bid::Abstain);
    let n = summaries.len() as f64;

    let per_type: Vec<Option<Deviation>> = map_indexed(types.len(), opts.exec, |ti| {
        let r = types[ti];
        let prescribed = strategy(r);
        let base: Vec<f64> = summaries
            .iter()
            .map(|&s| own_payoff(prescribed, r, c, factor, s))
            .collect();
        let mut worst: Option<Deviation> = None;
        for &x in &candidates {
            if x == prescribed {
                continue;
            }
            let (mut sum, mut sq) = (0.0, 0.0);
            for (s, b) in summaries.iter().zip(&base) {
                let d = own_payoff(x, r, c, factor, *s) - b;
                sum += d;
                sq += d * d;
            }
            let gain = sum / n;
            let var = ((sq - sum * sum / n) / (n - 1.0)).max(0.0);
            let std_error = (var / n).sqrt();
            let dev = Deviation {
                r,
                prescribed,
                deviation: x,
                gain,
                std_error,
                threshold: 3.0 * std_error + floor,
            };
            if worst.is_none_or(|w| dev.gain - dev.threshold > w.gain - w.threshold) {
                worst = Some(dev);
            }
        }
        worst
    });
    let worst = per_type
        .into_iter()
        .flatten()
        .max_by(|a, b| (a.gain - a.threshold).total_cmp(&(b.gain - b.threshold)));
    Ok(CertificationReport {
        certified: worst.is_none_or(|w| !w.is_profitable()),
        worst,
        types_checked: types.len(),
        bids_checked: candidates.len(),
    })
}

/// Deliberately wrong strategies the certifier must reject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    /// Types above the reserve abstain instead of bidding it.
    AbstainAboveReserve,
    /// Types above the reserve always bid it, never abstaining.
    NeverAbstain,
    /// With the reserve below every type, everyone abstains.
    AlwaysAbstain,
}

impl Mutation {
    pub const ALL: [Mutation; 3] = [
        Mutation::AbstainAboveReserve,
        Mutation::NeverAbstain,
        Mutation::AlwaysAbstain,
    ];

    /// Regime in which the mutation differs from the equilibrium.
    pub fn regime(self) -> RegimeKind {
        match self {
            Mutation::AbstainAboveReserve | Mutation::NeverAbstain => RegimeKind::Standard,
            Mutation::AlwaysAbstain => RegimeKind::Mid,
        }
    }

    pub fn apply(self, s: &EquilibriumStrategy) -> impl Fn(f64) -> Bid + Sync + '_ {
        move |r| match self {
            Mutation::AbstainAboveReserve if r > s.c => Bid::Abstain,
            Mutation::NeverAbstain if r > s.c => Bid::Rate(s.c),
            Mutation::AlwaysAbstain => Bid::Abstain,
            _ => s.bid(r),
        }
    }
}

/// Common random numbers for Monte Carlo payoff estimates: `n` type
/// profiles of `k` APOs plus a tie-break unit each.
#[derive(Debug, Clone)]
pub struct ProfileSample {
    k: usize,
    types: Vec<f64>,
    units: Vec<f64>,
}

const CHUNK: usize = 4096;

impl ProfileSample {
    /// Chunk `j` of 4096 profiles draws from `RngStream(seed, j)`.
    pub fn draw(cfg: &MarketConfig, n: usize, seed: u64, exec: Execution) -> Self {
        let chunks = n.div_ceil(CHUNK);
        let parts: Vec<(Vec<f64>, Vec<f64>)> = map_indexed(chunks, exec, |j| {
            let len = CHUNK.min(n - j * CHUNK);
            let mut rng = RngStream::new(seed, j as u64);
            let mut types = Vec::with_capacity(len * cfg.k);
            let mut units = Vec::with_capacity(len);
            for _ in 0..len {
                types.extend((0..cfg.k).map(|_| cfg.dist.sample(&mut rng)));
                units.push(rng.next_unit());
            }
            (types, units)
        });
        let mut out = Self {
            k: cfg.k,
            types: Vec::with_capacity(n * cfg.k),
            units: Vec::with_capacity(n),
        };
        for (t, u) in parts {
            out.types.extend(t);
            out.units.extend(u);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }
}

fn mc_outcomes(
    cfg: &MarketConfig,
    c: f64,
    sample: &ProfileSample,
    exec: Execution,
) -> Result<Vec<(f64, f64)>> {
    if sample.k != cfg.k {
        return Err(Error::InvalidConfig(format!(
            "sample has {} APOs, market {}",
            sample.k, cfg.k
        )));
    }
    let s = EquilibriumStrategy::new(cfg, c)?;
    let chunks = sample.len().div_ceil(CHUNK);
    let parts: Vec<Result<Vec<(f64, f64)>>> = map_indexed(chunks, exec, |j| {
        let range = j * CHUNK..((j + 1) * CHUNK).min(sample.len());
        range
            .map(|i| {
                let bids = s.bids(&sample.types[i * cfg.k..(i + 1) * cfg.k]);
                let o = resolve_with_unit(&BidProfile::new(bids, c)?, c, sample.units[i]);
                Ok((lte_payoff(&o, cfg), o.r_pay))
            })
            .collect()
    });
    let mut out = Vec::with_capacity(sample.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Monte Carlo estimate of the provider's expected payoff at reserve `c`.
pub fn mc_expected_payoff(
    cfg: &MarketConfig,
    c: f64,
    sample: &ProfileSample,
    exec: Execution,
) -> Result<MeanEstimate> {
    let v: Vec<f64> = mc_outcomes(cfg, c, sample, exec)?
        .into_iter()
        .map(|p| p.0)
        .collect();
    Ok(MeanEstimate::from_samples(&v))
}

/// Monte Carlo estimate of the expected rate paid to the winner.
pub fn mc_expected_payment(
    cfg: &MarketConfig,
    c: f64,
    sample: &ProfileSample,
    exec: Execution,
) -> Result<MeanEstimate> {
    let v: Vec<f64> = mc_outcomes(cfg, c, sample, exec)?
        .into_iter()
        .map(|p| p.1)
        .collect();
    Ok(MeanEstimate::from_samples(&v))
}

/// Whether a closed-form value agrees with an estimate: within three
/// standard errors, or `1e-9 scale` when the estimate has no variance.
pub fn agrees_with(exact: f64, est: &MeanEstimate, scale: f64) -> bool {
    (exact - est.mean).abs() <= (3.0 * est.std_error).max(1e-9 * scale)
}
