//! Generic numerical routines: bracketing root search, composite Simpson
//! quadrature, golden-section search and summary statistics.

pub mod golden;
pub mod quadrature;
pub mod roots;
pub mod stats;

pub use golden::{golden_section_max, GoldenResult};
pub use quadrature::{simpson, simpson_refined, Quadrature};
pub use roots::{bisect, scan_sign_changes, SignScan};
pub use stats::{deepest_dip, pairwise_sum, MeanEstimate};
