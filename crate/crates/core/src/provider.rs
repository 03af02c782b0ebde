//! The LTE provider's expected payoff as a function of the reserve rate,
//! and the payoff-maximizing reserve rate.

use std::collections::HashMap;

use serde::Serialize;

use crate::equilibrium::{classify_regime, EquilibriumStrategy, RegimeKind, ReserveRegime};
use crate::error::{Error, Result};
use crate::exec::{try_map_indexed, Execution};
use crate::market::MarketConfig;
use crate::numeric::{deepest_dip, golden_section_max, simpson_refined};

/// Initial Simpson panel count for the payment integral.
pub const QUAD_PANELS: usize = 2048;
/// Quadrature budget relative to `r_lte`.
pub const QUAD_TOL_REL: f64 = 1e-8;
const QUAD_MAX_PANELS: usize = 1 << 18;

/// `k (k-1) int_{r_min}^{upper} r f(r) F(r) (1 - F(r))^(k-2) dr`: the expected
/// second-lowest type restricted to second-lowest types below `upper`.
fn second_order_integral(cfg: &MarketConfig, upper: f64) -> f64 {
    let (r_min, k) = (cfg.r_min(), cfg.k);
    if upper <= r_min {
        return 0.0;
    }
    let d = &cfg.dist;
    let integrand = |r: f64| {
        let fr = d.cdf(r);
        r * d.pdf(r) * fr * (1.0 - fr).powi(k as i32 - 2)
    };
    let q = simpson_refined(
        integrand,
        r_min,
        upper,
        QUAD_PANELS,
        QUAD_TOL_REL * cfg.r_lte,
        QUAD_MAX_PANELS,
    );
    (k * (k - 1)) as f64 * q.value
}

/// Expected payment (rate allocated to the winner) under `strategy`.
fn payment_for(cfg: &MarketConfig, s: &EquilibriumStrategy) -> f64 {
    let k = cfg.k as i32;
    let c = s.c;
    match s.kind() {
        RegimeKind::Low => 0.0,
        RegimeKind::Mid => {
            let none = (1.0 - cfg.dist.cdf(s.r_x.unwrap_or(cfg.r_min()))).powi(k);
            c * (1.0 - none)
        }
        RegimeKind::Standard => {
            let fc = cfg.dist.cdf(c);
            let ft = cfg.dist.cdf(s.r_t.unwrap_or(c));
            second_order_integral(cfg, c)
                + cfg.k as f64 * c * fc * (1.0 - fc).powi(k - 1)
                + c * ((1.0 - fc).powi(k) - (1.0 - ft).powi(k))
        }
        RegimeKind::High => second_order_integral(cfg, cfg.r_max()),
    }
}

fn payoff_for(cfg: &MarketConfig, s: &EquilibriumStrategy) -> f64 {
    let k = cfg.k as i32;
    let (r, dr) = (cfg.r_lte, cfg.competition_payoff());
    match s.kind() {
        RegimeKind::Low => dr,
        RegimeKind::Mid => {
            let p = (1.0 - cfg.dist.cdf(s.r_x.unwrap_or(cfg.r_min()))).powi(k);
            p * dr + (1.0 - p) * (r - s.c)
        }
        RegimeKind::Standard => {
            let q = (1.0 - cfg.dist.cdf(s.r_t.unwrap_or(s.c))).powi(k);
            q * dr + (1.0 - q) * r - payment_for(cfg, s)
        }
        RegimeKind::High => r - payment_for(cfg, s),
    }
}

/// Expected rate the LTE allocates to the winning APO's users.
pub fn expected_payment(cfg: &MarketConfig, c: f64) -> Result<f64> {
    Ok(payment_for(cfg, &EquilibriumStrategy::new(cfg, c)?))
}

/// Expected LTE payoff at reserve rate `c`, with APOs bidding in equilibrium.
pub fn expected_payoff(cfg: &MarketConfig, c: f64) -> Result<f64> {
    Ok(payoff_for(cfg, &EquilibriumStrategy::new(cfg, c)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffCurvePoint {
    pub c: f64,
    pub expected_payoff: f64,
    pub regime: ReserveRegime,
    pub expected_payment: f64,
}

pub fn curve_point(cfg: &MarketConfig, c: f64) -> Result<PayoffCurvePoint> {
    let s = EquilibriumStrategy::new(cfg, c)?;
    Ok(PayoffCurvePoint {
        c,
        expected_payoff: payoff_for(cfg, &s),
        regime: s.regime,
        expected_payment: payment_for(cfg, &s),
    })
}

/// Payoff curve at the given reserve rates, in input order.
pub fn payoff_curve(
    cfg: &MarketConfig,
    cs: &[f64],
    exec: Execution,
) -> Result<Vec<PayoffCurvePoint>> {
    try_map_indexed(cs.len(), exec, |i| curve_point(cfg, cs[i]))
}

/// `steps` equally spaced reserve rates from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| {
                if i + 1 == n {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    /// Small LTE throughput: every reserve rate up to `L` is optimal.
    Indifferent,
    /// Golden-section search after a passing unimodality scan.
    Golden,
    /// Dense grid search, used when the unimodality scan found a dip.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeOptions {
    /// Points of the unimodality scan that precedes golden-section search.
    pub guard_points: usize,
    /// Largest dip (relative to `r_lte`) the scan tolerates.
    pub guard_tol_rel: f64,
    /// Grid size for the fallback search.
    pub fallback_points: usize,
    /// Golden-section stopping width relative to `r_max`.
    pub width_rel: f64,
    /// Fail with [`Error::NonUnimodal`] instead of falling back to the grid.
    pub strict: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            guard_points: 200,
            guard_tol_rel: 1e-6,
            fallback_points: 2000,
            width_rel: 1e-4,
            strict: false,
        }
    }
}

/// Optimal reserve rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimalReserve {
    pub c_star: f64,
    /// Set of optimal reserve rates when the optimum is not unique.
    pub interval: Option<[f64; 2]>,
    pub expected_payoff: f64,
    /// 1: throughput too small to cooperate; 2: search up to `r_lte`;
    /// 3: search up to `r_max`.
    pub case: u8,
    /// Interval that was searched (left end excluded in theory, included
    /// numerically since the payoff is continuous there).
    pub search: [f64; 2],
    pub method: SearchMethod,
    /// Deepest dip found by the unimodality scan.
    pub guard_dip: f64,
}

/// Smallest throughput at which cooperating can beat coexistence.
pub fn cooperation_threshold(cfg: &MarketConfig) -> f64 {
    cfg.low_bound() / (1.0 - cfg.delta_lte)
}

pub fn optimize_reserve(cfg: &MarketConfig) -> Result<OptimalReserve> {
    optimize_reserve_with(cfg, &OptimizeOptions::default())
}

pub fn optimize_reserve_with(cfg: &MarketConfig, opts: &OptimizeOptions) -> Result<OptimalReserve> {
    let l = cfg.low_bound();
    let r = cfg.r_lte;
    if r <= cooperation_threshold(cfg) {
        return Ok(OptimalReserve {
            c_star: 0.0,
            interval: Some([0.0, l]),
            expected_payoff: cfg.competition_payoff(),
            case: 1,
            search: [0.0, l],
            method: SearchMethod::Indifferent,
            guard_dip: 0.0,
        });
    }
    let (case, hi) = if r <= cfg.r_max() {
        (2, r)
    } else {
        (3, cfg.r_max())
    };

    let mut cache: HashMap<u64, f64> = HashMap::new();
    let mut eval = |c: f64| -> Result<f64> {
        if let Some(&v) = cache.get(&c.to_bits()) {
            return Ok(v);
        }
        let v = expected_payoff(cfg, c)?;
        cache.insert(c.to_bits(), v);
        Ok(v)
    };

    let grid = linspace(l, hi, opts.guard_points.max(3));
    let values = grid.iter().map(|&c| eval(c)).collect::<Result<Vec<_>>>()?;
    let (at, dip) = deepest_dip(&values);
    let width = opts.width_rel * cfg.r_max();

    let (c_star, payoff, method) = if dip <= opts.guard_tol_rel * r {
        let g = golden_section_max(&mut eval, l, hi, width)?;
        (g.x, g.value, SearchMethod::Golden)
    } else if opts.strict {
        return Err(Error::NonUnimodal {
            lo: l,
            hi,
            at: grid[at],
            dip,
        });
    } else {
        let fine = linspace(l, hi, opts.fallback_points.max(3));
        let mut best = (fine[0], f64::NEG_INFINITY, 0);
        for (i, &c) in fine.iter().enumerate() {
            let v = eval(c)?;
            if v > best.1 {
                best = (c, v, i);
            }
        }
        let lo_b = fine[best.2.saturating_sub(1)];
        let hi_b = fine[(best.2 + 1).min(fine.len() - 1)];
        let g = golden_section_max(&mut eval, lo_b, hi_b, width)?;
        if g.value >= best.1 {
            (g.x, g.value, SearchMethod::Grid)
        } else {
            (best.0, best.1, SearchMethod::Grid)
        }
    };

    Ok(OptimalReserve {
        c_star,
        interval: None,
        expected_payoff: payoff,
        case,
        search: [l, hi],
        method,
        guard_dip: dip,
    })
}

/// Regime of the optimal reserve rate.
pub fn optimal_regime(cfg: &MarketConfig, opt: &OptimalReserve) -> ReserveRegime {
    classify_regime(cfg, opt.c_star)
}
