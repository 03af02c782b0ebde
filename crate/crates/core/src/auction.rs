//! Resolution of one sealed-bid round: winner, payment and payoffs.
//!
//! The lowest rate request wins and is paid the lower of the reserve rate
//! and the best competing request. Exact ties are broken uniformly at
//! random; if everybody abstains the LTE shares a random channel instead.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::market::{Bid, MarketConfig};
use crate::rng::{pick_index, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// No APO cooperates; the LTE shares one channel.
    Competition,
    /// The LTE takes the winner's channel and serves its users.
    Cooperation,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Competition => "competition",
            Mode::Cooperation => "cooperation",
        }
    }
}

/// Validated bids, one per APO, for a known reserve rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BidProfile {
    bids: Vec<Bid>,
}

impl BidProfile {
    pub fn new(bids: Vec<Bid>, c: f64) -> Result<Self> {
        if bids.len() < 2 {
            return Err(Error::InvalidProfile(format!(
                "need at least 2 bids, got {}",
                bids.len()
            )));
        }
        for (i, b) in bids.iter().enumerate() {
            if let Bid::Rate(v) = *b {
                if !(v >= 0.0 && v <= c) {
                    return Err(Error::InvalidProfile(format!(
                        "bid {v} of APO {i} is outside [0, {c}]"
                    )));
                }
            }
        }
        Ok(Self { bids })
    }

    pub fn bids(&self) -> &[Bid] {
        &self.bids
    }

    pub fn len(&self) -> usize {
        self.bids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bids.is_empty()
    }

    /// Lowest requested rate and the APOs requesting it, `None` if all abstain.
    pub fn minimum(&self) -> Option<(f64, Vec<usize>)> {
        let min = self
            .bids
            .iter()
            .filter_map(|b| b.rate())
            .fold(f64::INFINITY, f64::min);
        if min == f64::INFINITY {
            return None;
        }
        let at_min = (0..self.bids.len())
            .filter(|&i| self.bids[i] == Bid::Rate(min))
            .collect();
        Some((min, at_min))
    }

    /// Lowest requested rate among everyone except `k` (`+inf` if none).
    pub fn min_excluding(&self, k: usize) -> f64 {
        self.bids
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .filter_map(|(_, b)| b.rate())
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuctionOutcome {
    pub mode: Mode,
    pub winner: Option<usize>,
    /// Channel the LTE accesses: the winner's, or the shared one.
    pub channel: usize,
    /// Rate the LTE allocates to the winner's users (0 in competition).
    pub r_pay: f64,
}

/// Resolves the auction, consuming exactly one draw from `rng` whatever the
/// outcome (tie-break or channel choice).
pub fn resolve(profile: &BidProfile, c: f64, rng: &mut RngStream) -> AuctionOutcome {
    resolve_with_unit(profile, c, rng.next_unit())
}

/// [`resolve`] with the random draw supplied explicitly.
pub fn resolve_with_unit(profile: &BidProfile, c: f64, u: f64) -> AuctionOutcome {
    match profile.minimum() {
        None => AuctionOutcome {
            mode: Mode::Competition,
            winner: None,
            channel: pick_index(u, profile.len()),
            r_pay: 0.0,
        },
        Some((min, at_min)) => {
            let (winner, r_pay) = if at_min.len() == 1 {
                let i = at_min[0];
                (i, c.min(profile.min_excluding(i)))
            } else {
                (at_min[pick_index(u, at_min.len())], min)
            };
            AuctionOutcome {
                mode: Mode::Cooperation,
                winner: Some(winner),
                channel: winner,
                r_pay,
            }
        }
    }
}

/// Realized payoffs of one round.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffVector {
    pub lte: f64,
    pub apo: Vec<f64>,
}

pub fn lte_payoff(outcome: &AuctionOutcome, cfg: &MarketConfig) -> f64 {
    match outcome.mode {
        Mode::Cooperation => cfg.r_lte - outcome.r_pay,
        Mode::Competition => cfg.competition_payoff(),
    }
}

/// Rates the APOs' users actually receive: the winner is paid `r_pay`, the
/// APO sharing its channel with the LTE keeps `eta * r`, everyone else `r`.
pub fn realized_apo_payoffs(
    outcome: &AuctionOutcome,
    types: &[f64],
    cfg: &MarketConfig,
) -> Vec<f64> {
    types
        .iter()
        .enumerate()
        .map(|(i, &r)| match outcome.mode {
            Mode::Cooperation if outcome.winner == Some(i) => outcome.r_pay,
            Mode::Competition if outcome.channel == i => cfg.eta_apo * r,
            _ => r,
        })
        .collect()
}

pub fn payoffs(outcome: &AuctionOutcome, types: &[f64], cfg: &MarketConfig) -> PayoffVector {
    PayoffVector {
        lte: lte_payoff(outcome, cfg),
        apo: realized_apo_payoffs(outcome, types, cfg),
    }
}

/// APO `k`'s payoff averaged over the tie-break and channel draws.
pub fn expected_apo_payoff(
    k: usize,
    profile: &BidProfile,
    types: &[f64],
    c: f64,
    cfg: &MarketConfig,
) -> f64 {
    let r = types[k];
    match profile.minimum() {
        None => cfg.coexistence_factor() * r,
        Some((min, at_min)) => {
            if !at_min.contains(&k) {
                return r;
            }
            let m = at_min.len() as f64;
            let pay = if at_min.len() == 1 {
                c.min(profile.min_excluding(k))
            } else {
                min
            };
            pay / m + (m - 1.0) / m * r
        }
    }
}
