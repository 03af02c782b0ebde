use thiserror::Error;

/// Errors raised by the auction engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The threshold equation does not have exactly one root on its interval,
    /// so the symmetric equilibrium is not uniquely determined.
    #[error("uniqueness assumption violated at reserve rate {c}: found {roots} roots of the threshold equation")]
    AssumptionViolated { c: f64, roots: usize },

    #[error("threshold residual does not change sign on [{lo}, {hi}] (values {f_lo:e}, {f_hi:e})")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("quadratic has no root inside ({lo}, {hi})")]
    NoRootInInterval { lo: f64, hi: f64 },

    #[error("invalid bid profile: {0}")]
    InvalidProfile(String),

    #[error("infeasible bid: {0}")]
    InfeasibleBid(String),

    #[error("payoff curve is not unimodal on ({lo}, {hi}]: dip of {dip:e} at c = {at}")]
    NonUnimodal { lo: f64, hi: f64, at: f64, dip: f64 },

    #[error("best-response certification failed: type {r} gains {gain:e} (> {threshold:e}) by bidding {deviation}")]
    CertificationFailed {
        r: f64,
        deviation: String,
        gain: f64,
        threshold: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Stable snake_case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidDistribution(_) => "invalid_distribution",
            Error::InvalidConfig(_) => "invalid_config",
            Error::AssumptionViolated { .. } => "assumption_violated",
            Error::NoBracket { .. } => "no_bracket",
            Error::NoRootInInterval { .. } => "no_root_in_interval",
            Error::InvalidProfile(_) => "invalid_profile",
            Error::InfeasibleBid(_) => "infeasible_bid",
            Error::NonUnimodal { .. } => "non_unimodal",
            Error::CertificationFailed { .. } => "certification_failed",
        }
    }
}
