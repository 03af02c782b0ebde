//! The common prior over access-point throughput types.
//!
//! Two laws are supported on `[r_min, r_max]`: uniform and a normal
//! distribution truncated to the support. Sampling is by inverse-CDF
//! transform of a single uniform draw so that each draw consumes exactly one
//! value from its [`RngStream`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect;
use crate::rng::RngStream;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
/// Absolute tolerance (Mbps) of the bisection inverse CDF.
pub const INVERSE_CDF_TOL: f64 = 1e-12;

/// JSON form: `{"kind":"uniform"|"truncated_normal","r_min":..,"r_max":..,"mu":..,"sigma":..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DistributionSpec {
    Uniform {
        r_min: f64,
        r_max: f64,
    },
    TruncatedNormal {
        r_min: f64,
        r_max: f64,
        mu: f64,
        sigma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Law {
    Uniform,
    TruncatedNormal {
        mu: f64,
        sigma: f64,
        /// Standard normal CDF at the lower truncation point.
        phi_lo: f64,
        /// Normal mass inside the support.
        mass: f64,
    },
}

/// Validated type distribution. Immutable and `Sync`; share freely.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionSpec", into = "DistributionSpec")]
pub struct TypeDistribution {
    r_min: f64,
    r_max: f64,
    law: Law,
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * libm::exp(-0.5 * z * z)
}

fn check_support(r_min: f64, r_max: f64) -> Result<()> {
    if !(r_min.is_finite() && r_max.is_finite()) {
        return Err(Error::InvalidDistribution(
            "support bounds must be finite".into(),
        ));
    }
    if r_min < 0.0 || r_min >= r_max {
        return Err(Error::InvalidDistribution(format!(
            "need 0 <= r_min < r_max, got [{r_min}, {r_max}]"
        )));
    }
    Ok(())
}

impl TypeDistribution {
    pub fn uniform(r_min: f64, r_max: f64) -> Result<Self> {
        check_support(r_min, r_max)?;
        Ok(Self {
            r_min,
            r_max,
            law: Law::Uniform,
        })
    }

    /// Normal(`mu`, `sigma`^2) truncated to `[r_min, r_max]`.
    pub fn truncated_normal(mu: f64, sigma: f64, r_min: f64, r_max: f64) -> Result<Self> {
        check_support(r_min, r_max)?;
        if !(sigma.is_finite() && sigma > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "need finite mu and sigma > 0, got mu = {mu}, sigma = {sigma}"
            )));
        }
        let phi_lo = std_normal_cdf((r_min - mu) / sigma);
        let mass = std_normal_cdf((r_max - mu) / sigma) - phi_lo;
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::InvalidDistribution(
                "normal law puts no mass on the support".into(),
            ));
        }
        Ok(Self {
            r_min,
            r_max,
            law: Law::TruncatedNormal {
                mu,
                sigma,
                phi_lo,
                mass,
            },
        })
    }

    pub fn from_spec(spec: DistributionSpec) -> Result<Self> {
        match spec {
            DistributionSpec::Uniform { r_min, r_max } => Self::uniform(r_min, r_max),
            DistributionSpec::TruncatedNormal {
                r_min,
                r_max,
                mu,
                sigma,
            } => Self::truncated_normal(mu, sigma, r_min, r_max),
        }
    }

    pub fn spec(&self) -> DistributionSpec {
        match self.law {
            Law::Uniform => DistributionSpec::Uniform {
                r_min: self.r_min,
                r_max: self.r_max,
            },
            Law::TruncatedNormal { mu, sigma, .. } => DistributionSpec::TruncatedNormal {
                r_min: self.r_min,
                r_max: self.r_max,
                mu,
                sigma,
            },
        }
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.law, Law::Uniform)
    }

    /// Density; zero outside the support.
    pub fn pdf(&self, r: f64) -> f64 {
        if r < self.r_min || r > self.r_max {
            return 0.0;
        }
        match self.law {
            Law::Uniform => 1.0 / (self.r_max - self.r_min),
            Law::TruncatedNormal {
                mu, sigma, mass, ..
            } => std_normal_pdf((r - mu) / sigma) / (sigma * mass),
        }
    }

    /// Distribution function, clamped to 0 below and 1 above the support.
    pub fn cdf(&self, r: f64) -> f64 {
        if r <= self.r_min {
            return 0.0;
        }
        if r >= self.r_max {
            return 1.0;
        }
        let p = match self.law {
            Law::Uniform => (r - self.r_min) / (self.r_max - self.r_min),
            Law::TruncatedNormal {
                mu,
                sigma,
                phi_lo,
                mass,
            } => (std_normal_cdf((r - mu) / sigma) - phi_lo) / mass,
        };
        p.clamp(0.0, 1.0)
    }

    /// Quantile function. Uniform is closed form; the truncated normal is
    /// inverted by bisection on [`cdf`](Self::cdf) to [`INVERSE_CDF_TOL`].
    pub fn inverse_cdf(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return self.r_min;
        }
        if p >= 1.0 {
            return self.r_max;
        }
        match self.law {
            Law::Uniform => self.r_min + p * (self.r_max - self.r_min),
            Law::TruncatedNormal { .. } => bisect(
                |r| self.cdf(r) - p,
                self.r_min,
                self.r_max,
                INVERSE_CDF_TOL,
                f64::INFINITY,
            ),
        }
    }

    /// One draw from the law, consuming exactly one uniform from `rng`.
    pub fn sample(&self, rng: &mut RngStream) -> f64 {
        self.inverse_cdf(rng.next_unit())
    }
}

impl TryFrom<DistributionSpec> for TypeDistribution {
    type Error = Error;

    fn try_from(spec: DistributionSpec) -> Result<Self> {
        Self::from_spec(spec)
    }
}

impl From<TypeDistribution> for DistributionSpec {
    fn from(d: TypeDistribution) -> Self {
        d.spec()
    }
}
