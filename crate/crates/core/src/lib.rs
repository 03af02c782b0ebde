//! Equilibrium bidding, reserve-rate optimization and Monte Carlo
//! experiments for a second-price reverse auction in which an LTE provider
//! buys exclusive access to one Wi-Fi access point owner's (APO's) channel,
//! paying by serving that APO's users at an agreed rate.
//!
//! Rates are `f64` Mbps throughout. Start from [`MarketConfig`], build an
//! [`EquilibriumStrategy`] for a reserve rate, or let
//! [`provider::optimize_reserve`] pick the rate and
//! [`simulation::run_experiment`] compare the auction against random
//! coexistence.

pub mod auction;
pub mod distribution;
pub mod equilibrium;
pub mod error;
pub mod exec;
pub mod market;
pub mod multi_lte;
pub mod numeric;
pub mod oracle;
pub mod provider;
pub mod rng;
pub mod simulation;

pub use auction::{AuctionOutcome, BidProfile, Mode};
pub use distribution::{DistributionSpec, TypeDistribution};
pub use equilibrium::{classify_regime, EquilibriumStrategy, RegimeKind, ReserveRegime};
pub use error::{Error, Result};
pub use exec::Execution;
pub use market::{Bid, MarketConfig};
pub use provider::{optimize_reserve, OptimalReserve};
pub use rng::RngStream;
