//! Market parameters and the bid type shared by every module.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::distribution::TypeDistribution;
use crate::error::{Error, Result};

/// One LTE provider facing `k` access-point owners with i.i.d. types.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarketSpec", into = "MarketSpec")]
pub struct MarketConfig {
    pub k: usize,
    pub dist: TypeDistribution,
    /// Rate discount of the APO whose channel the LTE shares.
    pub eta_apo: f64,
    /// Rate discount of the LTE provider when it shares a channel.
    pub delta_lte: f64,
    /// LTE throughput on an exclusive channel (Mbps).
    pub r_lte: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MarketSpec {
    k: usize,
    dist: TypeDistribution,
    eta_apo: f64,
    delta_lte: f64,
    r_lte: f64,
}

impl TryFrom<MarketSpec> for MarketConfig {
    type Error = Error;

    fn try_from(s: MarketSpec) -> Result<Self> {
        MarketConfig::new(s.k, s.dist, s.eta_apo, s.delta_lte, s.r_lte)
    }
}

impl From<MarketConfig> for MarketSpec {
    fn from(m: MarketConfig) -> Self {
        MarketSpec {
            k: m.k,
            dist: m.dist,
            eta_apo: m.eta_apo,
            delta_lte: m.delta_lte,
            r_lte: m.r_lte,
        }
    }
}

pub(crate) fn check_unit_interval(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "{name} must lie in (0, 1), got {v}"
        )))
    }
}

impl MarketConfig {
    pub fn new(
        k: usize,
        dist: TypeDistribution,
        eta_apo: f64,
        delta_lte: f64,
        r_lte: f64,
    ) -> Result<Self> {
        let cfg = Self {
            k,
            dist,
            eta_apo,
            delta_lte,
            r_lte,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::InvalidConfig(format!(
                "need k >= 2 APOs, got {}",
                self.k
            )));
        }
        check_unit_interval("eta_apo", self.eta_apo)?;
        check_unit_interval("delta_lte", self.delta_lte)?;
        if !(self.r_lte > 0.0 && self.r_lte.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "r_lte must be positive, got {}",
                self.r_lte
            )));
        }
        Ok(())
    }

    /// `(k - 1 + eta) / k`: an APO's expected share of its own rate when
    /// the LTE picks one of the `k` channels at random.
    pub fn coexistence_factor(&self) -> f64 {
        (self.k as f64 - 1.0 + self.eta_apo) / self.k as f64
    }

    /// Upper end of the reserve rates at which every type abstains.
    pub fn low_bound(&self) -> f64 {
        self.coexistence_factor() * self.dist.r_min()
    }

    pub fn r_min(&self) -> f64 {
        self.dist.r_min()
    }

    pub fn r_max(&self) -> f64 {
        self.dist.r_max()
    }

    /// LTE payoff when no APO cooperates.
    pub fn competition_payoff(&self) -> f64 {
        self.delta_lte * self.r_lte
    }

    pub fn with_r_lte(mut self, r_lte: f64) -> Result<Self> {
        self.r_lte = r_lte;
        self.validate()?;
        Ok(self)
    }
}

/// A sealed bid: a requested rate, or the abstention symbol `N`.
///
/// Abstain compares above every rate. Serialized as a JSON number or the
/// string `"N"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bid {
    Rate(f64),
    Abstain,
}

impl Bid {
    pub fn rate(self) -> Option<f64> {
        match self {
            Bid::Rate(v) => Some(v),
            Bid::Abstain => None,
        }
    }

    pub fn is_abstain(self) -> bool {
        matches!(self, Bid::Abstain)
    }

    /// Abstain maps to `+inf`, for ordering only.
    pub fn sort_key(self) -> f64 {
        self.rate().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Bid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bid::Rate(v) => write!(f, "{v}"),
            Bid::Abstain => f.write_str("N"),
        }
    }
}

impl Serialize for Bid {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Bid::Rate(v) => s.serialize_f64(*v),
            Bid::Abstain => s.serialize_str("N"),
        }
    }
}

impl<'de> Deserialize<'de> for Bid {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct BidVisitor;

        impl Visitor<'_> for BidVisitor {
            type Value = Bid;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a non-negative rate or \"N\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Bid, E> {
                if v >= 0.0 && v.is_finite() {
                    Ok(Bid::Rate(v))
                } else {
                    Err(E::custom(format!(
                        "bid rate must be finite and >= 0, got {v}"
                    )))
                }
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Bid, E> {
                Ok(Bid::Rate(v as f64))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Bid, E> {
                self.visit_f64(v as f64)
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Bid, E> {
                if v == "N" {
                    Ok(Bid::Abstain)
                } else {
                    Err(E::custom(format!("unknown bid symbol {v:?}")))
                }
            }
        }

        d.deserialize_any(BidVisitor)
    }
}
