//! Symmetric Bayesian Nash equilibrium bidding for a given reserve rate.
//!
//! The reserve rate `c` falls into one of four regimes, with
//! `L = (k - 1 + eta) / k * r_min`:
//!
//! | regime   | reserve rates      | equilibrium bid                                   |
//! |----------|--------------------|---------------------------------------------------|
//! | Low      | `[0, L]`           | `N` for every type                                |
//! | Mid      | `(L, r_min)`       | `c` if `r <= r_x(c)`, else `N`                    |
//! | Standard | `[r_min, r_max)`   | `r` if `r <= c`, `c` if `r <= r_t(c)`, else `N`   |
//! | High     | `[r_max, inf)`     | `r`                                               |
//!
//! The thresholds `r_t` and `r_x` are the unique roots of the indifference
//! equations below. Uniqueness is checked by a dense sign scan; if the
//! equation has several roots the equilibrium is not unique and the engine
//! refuses with [`Error::AssumptionViolated`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{Bid, MarketConfig};
use crate::numeric::{bisect, scan_sign_changes, SignScan};

/// Grid cells used to bracket (and count) threshold roots.
pub const SCAN_POINTS: usize = 10_000;
/// Root tolerance, relative to `r_max`, for both the bracket width and the
/// residual.
pub const ROOT_TOL_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    Low,
    Mid,
    Standard,
    High,
}

impl RegimeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeKind::Low => "low",
            RegimeKind::Mid => "mid",
            RegimeKind::Standard => "standard",
            RegimeKind::High => "high",
        }
    }
}

/// The regime containing a reserve rate, with its bounds. Low is closed,
/// Mid open, Standard and High closed on the left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReserveRegime {
    pub kind: RegimeKind,
    pub lo: f64,
    pub hi: f64,
}

impl ReserveRegime {
    pub fn contains(&self, c: f64) -> bool {
        match self.kind {
            RegimeKind::Low => c >= self.lo && c <= self.hi,
            RegimeKind::Mid => c > self.lo && c < self.hi,
            RegimeKind::Standard => c >= self.lo && c < self.hi,
            RegimeKind::High => c >= self.lo,
        }
    }
}

pub fn classify_regime(cfg: &MarketConfig, c: f64) -> ReserveRegime {
    let l = cfg.low_bound();
    let (r_min, r_max) = (cfg.r_min(), cfg.r_max());
    if c <= l {
        ReserveRegime {
            kind: RegimeKind::Low,
            lo: 0.0,
            hi: l,
        }
    } else if c < r_min {
        ReserveRegime {
            kind: RegimeKind::Mid,
            lo: l,
            hi: r_min,
        }
    } else if c < r_max {
        ReserveRegime {
            kind: RegimeKind::Standard,
            lo: r_min,
            hi: r_max,
        }
    } else {
        ReserveRegime {
            kind: RegimeKind::High,
            lo: r_max,
            hi: f64::INFINITY,
        }
    }
}

/// Shared form of both indifference equations, written in terms of
/// `a = P(opponent bids c)` and `b = P(opponent abstains)`:
///
/// `sum_{n=1}^{k-1} C(k-1, n) a^n b^(k-1-n) (c - r)/(n + 1) + b^(k-1) (c - f r)`
///
/// where `f` is the coexistence factor. A type-`r` APO is indifferent
/// between bidding `c` and abstaining exactly where this vanishes.
fn indifference(k: usize, factor: f64, a: f64, b: f64, c: f64, r: f64) -> f64 {
    let m = k - 1;
    // Terms built incrementally: binom(m, n) a^n b^(m-n).
    let mut b_pows = vec![1.0; m + 1];
    for i in 1..=m {
        b_pows[i] = b_pows[i - 1] * b;
    }
    let mut sum = 0.0;
    let mut binom = 1.0;
    let mut a_pow = 1.0;
    for n in 1..=m {
        binom = binom * (m - n + 1) as f64 / n as f64;
        a_pow *= a;
        sum += binom * a_pow * b_pows[m - n] / (n + 1) as f64;
    }
    sum * (c - r) + b_pows[m] * (c - factor * r)
}

/// Residual of the Standard-regime threshold equation at type `r`.
/// Positive at `r = c`, negative at `r = r_max`.
pub fn rt_residual(cfg: &MarketConfig, c: f64, r: f64) -> f64 {
    let (fr, fc) = (cfg.dist.cdf(r), cfg.dist.cdf(c));
    indifference(cfg.k, cfg.coexistence_factor(), fr - fc, 1.0 - fr, c, r)
}

/// Residual of the Mid-regime threshold equation at type `r`.
/// Equals `c - L` at `r = r_min`.
pub fn rx_residual(cfg: &MarketConfig, c: f64, r: f64) -> f64 {
    let fr = cfg.dist.cdf(r);
    indifference(cfg.k, cfg.coexistence_factor(), fr, 1.0 - fr, c, r)
}

/// Counts roots of the relevant threshold equation on a grid of
/// [`SCAN_POINTS`] cells: `(c, r_max)` for Standard, `(r_min, r_max)` for Mid.
pub fn check_assumption1(cfg: &MarketConfig, c: f64) -> Result<SignScan> {
    match classify_regime(cfg, c).kind {
        RegimeKind::Standard => Ok(scan_sign_changes(
            |r| rt_residual(cfg, c, r),
            c,
            cfg.r_max(),
            SCAN_POINTS,
        )),
        RegimeKind::Mid => Ok(scan_sign_changes(
            |r| rx_residual(cfg, c, r),
            cfg.r_min(),
            cfg.r_max(),
            SCAN_POINTS,
        )),
        kind => Err(Error::InvalidConfig(format!(
            "reserve rate {c} is in the {} regime, which has no threshold",
            kind.as_str()
        ))),
    }
}

fn root_from_scan<F: Fn(f64) -> f64>(
    cfg: &MarketConfig,
    c: f64,
    scan: SignScan,
    f: F,
) -> Result<f64> {
    if !(scan.f_lo > 0.0 && scan.f_hi < 0.0) {
        return Err(Error::NoBracket {
            lo: scan.lo,
            hi: scan.hi,
            f_lo: scan.f_lo,
            f_hi: scan.f_hi,
        });
    }
    if scan.count() != 1 {
        return Err(Error::AssumptionViolated {
            c,
            roots: scan.count(),
        });
    }
    let (a, b) = scan.brackets[0];
    if a == b {
        return Ok(a);
    }
    let tol = ROOT_TOL_REL * cfg.r_max();
    Ok(bisect(f, a, b, tol, tol))
}

/// The unique `r_t(c)` in `(c, r_max)` for a Standard-regime reserve rate.
pub fn solve_r_t(cfg: &MarketConfig, c: f64) -> Result<f64> {
    require_kind(cfg, c, RegimeKind::Standard)?;
    let scan = check_assumption1(cfg, c)?;
    root_from_scan(cfg, c, scan, |r| rt_residual(cfg, c, r))
}

/// The unique `r_x(c)` in `(r_min, r_max)` for a Mid-regime reserve rate.
pub fn solve_r_x(cfg: &MarketConfig, c: f64) -> Result<f64> {
    require_kind(cfg, c, RegimeKind::Mid)?;
    let scan = check_assumption1(cfg, c)?;
    root_from_scan(cfg, c, scan, |r| rx_residual(cfg, c, r))
}

fn require_kind(cfg: &MarketConfig, c: f64, kind: RegimeKind) -> Result<()> {
    let got = classify_regime(cfg, c).kind;
    if got == kind {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "reserve rate {c} is in the {} regime, expected {}",
            got.as_str(),
            kind.as_str()
        )))
    }
}

/// What a type band does in equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BidAction {
    /// Bid the own type.
    Truthful,
    /// Bid the reserve rate.
    Reserve,
    Abstain,
}

/// Types in `[lo, hi]` (left end exclusive except for the first segment)
/// take `action`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrategySegment {
    pub lo: f64,
    pub hi: f64,
    pub action: BidAction,
}

/// The equilibrium bid function at a fixed reserve rate. Thresholds are
/// solved once at construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquilibriumStrategy {
    pub regime: ReserveRegime,
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_x: Option<f64>,
    #[serde(skip)]
    r_min: f64,
    #[serde(skip)]
    r_max: f64,
}

impl EquilibriumStrategy {
    pub fn new(cfg: &MarketConfig, c: f64) -> Result<Self> {
        if !(c >= 0.0 && c.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "reserve rate must be finite and >= 0, got {c}"
            )));
        }
        let regime = classify_regime(cfg, c);
        let (r_t, r_x) = match regime.kind {
            RegimeKind::Standard => (Some(solve_r_t(cfg, c)?), None),
            RegimeKind::Mid => (None, Some(solve_r_x(cfg, c)?)),
            RegimeKind::Low | RegimeKind::High => (None, None),
        };
        Ok(Self {
            regime,
            c,
            r_t,
            r_x,
            r_min: cfg.r_min(),
            r_max: cfg.r_max(),
        })
    }

    pub fn kind(&self) -> RegimeKind {
        self.regime.kind
    }

    /// Equilibrium bid of type `r`. Boundary types take the lower band's
    /// action (`r = r_t` bids `c`, `r = r_x` bids `c`).
    pub fn bid(&self, r: f64) -> Bid {
        let c = self.c;
        match self.regime.kind {
            RegimeKind::Low => Bid::Abstain,
            RegimeKind::Mid => {
                if r <= self.r_x.unwrap_or(f64::NEG_INFINITY) {
                    Bid::Rate(c)
                } else {
                    Bid::Abstain
                }
            }
            RegimeKind::Standard => {
                if r <= c {
                    Bid::Rate(r)
                } else if r <= self.r_t.unwrap_or(f64::NEG_INFINITY) {
                    Bid::Rate(c)
                } else {
                    Bid::Abstain
                }
            }
            RegimeKind::High => Bid::Rate(r),
        }
    }

    /// Bids of a whole type vector.
    pub fn bids(&self, types: &[f64]) -> Vec<Bid> {
        types.iter().map(|&r| self.bid(r)).collect()
    }

    /// The strategy as bands over `[r_min, r_max]`.
    pub fn segments(&self) -> Vec<StrategySegment> {
        let (lo, hi) = (self.r_min, self.r_max);
        let seg = |lo, hi, action| StrategySegment { lo, hi, action };
        match self.regime.kind {
            RegimeKind::Low => vec![seg(lo, hi, BidAction::Abstain)],
            RegimeKind::Mid => {
                let rx = self.r_x.unwrap_or(lo);
                vec![
                    seg(lo, rx, BidAction::Reserve),
                    seg(rx, hi, BidAction::Abstain),
                ]
            }
            RegimeKind::Standard => {
                let rt = self.r_t.unwrap_or(self.c);
                vec![
                    seg(lo, self.c, BidAction::Truthful),
                    seg(self.c, rt, BidAction::Reserve),
                    seg(rt, hi, BidAction::Abstain),
                ]
            }
            RegimeKind::High => vec![seg(lo, hi, BidAction::Truthful)],
        }
    }

    /// Largest rate any type bids, `None` when every type abstains.
    pub fn max_bid(&self) -> Option<f64> {
        match self.regime.kind {
            RegimeKind::Low => None,
            RegimeKind::Mid | RegimeKind::Standard => Some(self.c),
            RegimeKind::High => Some(self.r_max),
        }
    }
}

/// Equilibrium bid of a single type (solves the threshold on every call;
/// build an [`EquilibriumStrategy`] to bid many types).
pub fn bid(cfg: &MarketConfig, c: f64, r: f64) -> Result<Bid> {
    Ok(EquilibriumStrategy::new(cfg, c)?.bid(r))
}
