//! Run configuration files and the bundled presets.

use std::fmt;
use std::path::Path;

use coopetition::multi_lte::{MultiMarketConfig, MultiSweep};
use coopetition::simulation::{Sweep, DEFAULT_REPLICATIONS};
use coopetition::MarketConfig;
use serde::Deserialize;

/// Configuration problems; these exit with status 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn config_err(msg: impl Into<String>) -> anyhow::Error {
    ConfigError(msg.into()).into()
}

pub const PRESETS: &[(&str, &str)] = &[
    ("appendixK", include_str!("../presets/appendixK.json")),
    ("fig4", include_str!("../presets/fig4.json")),
    ("fig5", include_str!("../presets/fig5.json")),
    ("fig6", include_str!("../presets/fig6.json")),
    ("fig7", include_str!("../presets/fig7.json")),
    ("fig8", include_str!("../presets/fig8.json")),
    ("fig9", include_str!("../presets/fig9.json")),
    ("fig10", include_str!("../presets/fig10.json")),
    ("fig11", include_str!("../presets/fig11.json")),
    ("fig12", include_str!("../presets/fig12.json")),
    ("fig13", include_str!("../presets/fig13.json")),
];

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub c_min: f64,
    pub c_max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub description: Option<String>,
    #[serde(default)]
    pub market: Option<MarketConfig>,
    #[serde(default)]
    pub multi_market: Option<MultiMarketConfig>,
    #[serde(default)]
    pub replications: Option<usize>,
    #[serde(default)]
    pub master_seed: Option<u64>,
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub multi_sweep: Option<MultiSweep>,
    #[serde(default)]
    pub curve: Option<CurveSpec>,
    /// Reserve rate for `equilibrium` and `verify`.
    #[serde(default)]
    pub c: Option<f64>,
}

/// The market block of a run configuration.
pub enum Market<'a> {
    Single(&'a MarketConfig),
    Multi(&'a MultiMarketConfig),
}

impl RunConfig {
    pub fn parse(text: &str, origin: &str) -> anyhow::Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| config_err(format!("{origin}: {e}")))?;
        cfg.check()
            .map_err(|e| config_err(format!("{origin}: {e}")))?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn preset(name: &str) -> anyhow::Result<Self> {
        let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            let names: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
            config_err(format!(
                "unknown preset {name:?}; available: {}",
                names.join(", ")
            ))
        })?;
        Self::parse(text, name)
    }

    fn check(&self) -> Result<(), String> {
        match (&self.market, &self.multi_market) {
            (Some(_), Some(_)) => return Err("give either market or multi_market, not both".into()),
            (None, None) => return Err("missing market or multi_market block".into()),
            (Some(_), None) if self.multi_sweep.is_some() => {
                return Err("multi_sweep needs a multi_market block".into())
            }
            (None, Some(_)) if self.sweep.is_some() => {
                return Err("sweep needs a market block".into())
            }
            _ => {}
        }
        if self.replications == Some(0) {
            return Err("replications must be at least 1".into());
        }
        if let Some(c) = &self.curve {
            if c.steps < 2 || c.c_min.is_nan() || c.c_max.is_nan() || c.c_min >= c.c_max {
                return Err("curve needs steps >= 2 and c_min < c_max".into());
            }
        }
        Ok(())
    }

    pub fn market(&self) -> Market<'_> {
        match (&self.market, &self.multi_market) {
            (Some(m), _) => Market::Single(m),
            (None, Some(m)) => Market::Multi(m),
            (None, None) => unreachable!("checked at load time"),
        }
    }

    pub fn single(&self) -> anyhow::Result<&MarketConfig> {
        self.market
            .as_ref()
            .ok_or_else(|| config_err("this command needs a single-provider market block"))
    }

    pub fn multi(&self) -> anyhow::Result<&MultiMarketConfig> {
        self.multi_market
            .as_ref()
            .ok_or_else(|| config_err("this command needs a multi_market block"))
    }

    pub fn replications(&self) -> usize {
        self.replications.unwrap_or(DEFAULT_REPLICATIONS)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed.unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_load() {
        for (name, _) in PRESETS {
            let cfg = RunConfig::preset(name).unwrap();
            assert!(cfg.description.is_some(), "{name}");
        }
        assert!(matches!(
            RunConfig::preset("fig11").unwrap().market(),
            Market::Multi(_)
        ));
    }

    #[test]
    fn rejects_bad_blocks() {
        let m = r#""market":{"k":4,"dist":{"kind":"uniform","r_min":50,"r_max":200},"eta_apo":0.3,"delta_lte":0.4,"r_lte":95}"#;
        assert!(RunConfig::parse(&format!("{{{m}}}"), "t").is_ok());
        assert!(RunConfig::parse("{}", "t").is_err());
        assert!(RunConfig::parse(&format!("{{{m},\"seed\":1}}"), "t").is_err());
        assert!(RunConfig::parse(&format!("{{{m},\"multi_sweep\":{{}}}}"), "t").is_err());
        assert!(RunConfig::parse(&format!("{{{m},\"replications\":0}}"), "t").is_err());
        let e = RunConfig::preset("fig99").unwrap_err();
        assert!(e.downcast_ref::<ConfigError>().is_some());
    }
}
