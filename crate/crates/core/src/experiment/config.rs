//! JSON experiment configuration with strict parsing and documented defaults.
//!
//! | key                     | default                         |
//! |-------------------------|---------------------------------|
//! | `k`                     | 10                              |
//! | `window`                | 5 (pool size N = window · k)    |
//! | `cfair.epsilon`         | 0.1                             |
//! | `cfair.target_outcome`  | mean baseline slate outcome     |
//! | `pfair.tau`             | p / (p + q)                     |
//! | `auction.total_budget`  | 100                             |
//! | `auction.reserve_price` | 0                               |
//! | `auction.placement`     | `merged`                        |
//! | `weights.*`             | 1                               |
//! | `generator.*`           | see [`GeneratorConfig`]         |
//!
//! `scenario` and `seeds` are required, as are `cfair.lambda_c`,
//! `pfair.lambda_p` and `auction.k_auction` whenever their section is needed.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::auction::Placement;
use crate::error::{Error, Result};
use crate::marketplace::GeneratorConfig;
use crate::metrics::SystemWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Baseline,
    CFair,
    PFairGroup,
    PFairAuction,
    CpDecoupled,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::Baseline,
        Scenario::CFair,
        Scenario::PFairGroup,
        Scenario::PFairAuction,
        Scenario::CpDecoupled,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Baseline => "baseline",
            Scenario::CFair => "c_fair",
            Scenario::PFairGroup => "p_fair_group",
            Scenario::PFairAuction => "p_fair_auction",
            Scenario::CpDecoupled => "cp_decoupled",
        }
    }

    pub fn uses_cfair(self) -> bool {
        matches!(self, Scenario::CFair | Scenario::CpDecoupled)
    }

    pub fn uses_auction(self) -> bool {
        matches!(self, Scenario::PFairAuction | Scenario::CpDecoupled)
    }
}

fn default_epsilon() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CFairSettings {
    pub lambda_c: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Fixed target; when absent each seed uses its baseline mean slate outcome.
    #[serde(default)]
    pub target_outcome: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PFairSettings {
    pub lambda_p: f64,
    #[serde(default)]
    pub tau: Option<f64>,
}

fn default_budget() -> f64 {
    100.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuctionSettings {
    #[serde(default = "default_budget")]
    pub total_budget: f64,
    pub k_auction: usize,
    #[serde(default)]
    pub reserve_price: f64,
    #[serde(default)]
    pub placement: Placement,
}

fn default_k() -> usize {
    10
}
fn default_window() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub generator: GeneratorConfig,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub cfair: Option<CFairSettings>,
    #[serde(default)]
    pub pfair: Option<PFairSettings>,
    #[serde(default)]
    pub auction: Option<AuctionSettings>,
    #[serde(default)]
    pub weights: SystemWeights,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Parses, resolves defaults and validates a JSON config document.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|err| {
        let mut path = err.path().to_string();
        let message = err.inner().to_string();
        // Unknown keys already end the path; missing ones stop at the parent.
        if let Some(name) = message
            .strip_prefix("missing field `")
            .and_then(|rest| rest.split('`').next())
        {
            path = if path == "." {
                name.to_string()
            } else {
                format!("{path}.{name}")
            };
        }
        Error::config(path, message)
    })?;
    config.resolve();
    config.validate()?;
    Ok(config)
}

fn check(ok: bool, path: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message()))
    }
}

fn unit(path: &str, v: f64) -> Result<()> {
    check((0.0..=1.0).contains(&v), path, || {
        format!("{v} outside [0,1]")
    })
}

impl ExperimentConfig {
    /// Minimal config for `scenario` with every other value at its default.
    pub fn new(scenario: Scenario, seeds: Vec<u64>) -> Self {
        let mut config = Self {
            scenario,
            seeds,
            generator: GeneratorConfig::default(),
            k: default_k(),
            window: default_window(),
            cfair: None,
            pfair: None,
            auction: None,
            weights: SystemWeights::default(),
            output_dir: None,
        };
        config.resolve();
        config
    }

    /// Fills defaults that depend on other fields.
    pub fn resolve(&mut self) {
        let p = self.generator.n_protected_providers();
        let share = p as f64 / self.generator.n_providers.max(1) as f64;
        if let Some(pfair) = &mut self.pfair {
            pfair.tau.get_or_insert(share);
        }
    }

    pub fn pool_size(&self) -> usize {
        self.k * self.window
    }

    pub fn validate(&self) -> Result<()> {
        check(!self.seeds.is_empty(), "seeds", || {
            "at least one seed required".into()
        })?;
        check(self.k >= 1, "k", || "must be >= 1".into())?;
        check(self.window >= 1, "window", || "must be >= 1".into())?;
        let g = &self.generator;
        g.validate("generator")?;

        let pc = g.n_protected_consumers();
        check(pc >= 1 && pc < g.n_consumers, "generator.rho_c", || {
            format!(
                "{pc} of {} consumers protected; both groups must be non-empty",
                g.n_consumers
            )
        })?;
        let pp = g.n_protected_providers();
        check(pp >= 1 && pp < g.n_providers, "generator.rho_p", || {
            format!(
                "{pp} of {} providers protected; both classes must be non-empty",
                g.n_providers
            )
        })?;
        let scorable = g.n_items - (g.interactions_per_consumer - g.n_test_per_consumer());
        check(self.k <= scorable, "k", || {
            format!(
                "k = {} exceeds the {scorable} items left after removing train positives",
                self.k
            )
        })?;

        let w = &self.weights;
        for (name, v) in [
            ("weights.consumer", w.consumer),
            ("weights.parity", w.parity),
            ("weights.provider", w.provider),
        ] {
            check(v.is_finite() && v >= 0.0, name, || {
                format!("{v} must be >= 0")
            })?;
        }

        if let Some(c) = &self.cfair {
            check(
                c.lambda_c.is_finite() && c.lambda_c >= 0.0,
                "cfair.lambda_c",
                || format!("{} must be >= 0", c.lambda_c),
            )?;
            check((0.0..1.0).contains(&c.epsilon), "cfair.epsilon", || {
                format!("{} outside [0,1)", c.epsilon)
            })?;
            if let Some(t) = c.target_outcome {
                unit("cfair.target_outcome", t)?;
            }
        }
        if let Some(p) = &self.pfair {
            unit("pfair.lambda_p", p.lambda_p)?;
            if let Some(tau) = p.tau {
                unit("pfair.tau", tau)?;
            }
        }
        if let Some(a) = &self.auction {
            check(
                a.total_budget.is_finite() && a.total_budget > 0.0,
                "auction.total_budget",
                || format!("{} must be > 0", a.total_budget),
            )?;
            check(a.k_auction <= self.k, "auction.k_auction", || {
                format!("{} exceeds k = {}", a.k_auction, self.k)
            })?;
            check(
                a.reserve_price.is_finite() && a.reserve_price >= 0.0,
                "auction.reserve_price",
                || format!("{} must be >= 0", a.reserve_price),
            )?;
        }

        let name = self.scenario.as_str();
        if self.scenario.uses_cfair() && self.cfair.is_none() {
            return Err(Error::config(
                "cfair",
                format!("section required by scenario {name}"),
            ));
        }
        if self.scenario == Scenario::PFairGroup && self.pfair.is_none() {
            return Err(Error::config(
                "pfair",
                format!("section required by scenario {name}"),
            ));
        }
        if self.scenario.uses_auction() && self.auction.is_none() {
            return Err(Error::config(
                "auction",
                format!("section required by scenario {name}"),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn err_path(text: &str) -> String {
        match parse_config(text).unwrap_err() {
            Error::Config { path, .. } => path,
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn minimal_document_gets_defaults() {
        let c = parse_config(r#"{"scenario":"baseline","seeds":[1]}"#).unwrap();
        assert_eq!(c.k, 10);
        assert_eq!(c.window, 5);
        assert_eq!(c.pool_size(), 50);
        assert_eq!(c.generator, GeneratorConfig::default());
        assert_eq!(c.weights, SystemWeights::default());
        assert!(c.cfair.is_none() && c.auction.is_none());
    }

    #[test]
    fn section_defaults() {
        let c = parse_config(
            r#"{"scenario":"cp_decoupled","seeds":[1],
                "cfair":{"lambda_c":0.5},
                "pfair":{"lambda_p":0.2},
                "auction":{"k_auction":2}}"#,
        )
        .unwrap();
        let a = c.auction.unwrap();
        assert_eq!(
            (a.total_budget, a.reserve_price, a.placement),
            (100.0, 0.0, Placement::Merged)
        );
        assert_eq!(c.cfair.unwrap().epsilon, 0.1);
        assert_eq!(c.cfair.unwrap().target_outcome, None);
        // 5 of 50 providers protected
        assert_eq!(c.pfair.unwrap().tau, Some(0.1));
    }

    #[test]
    fn bad_scenario_names_key() {
        assert_eq!(err_path(r#"{"scenario":"x","seeds":[1]}"#), "scenario");
    }

    #[test]
    fn epsilon_range_names_key() {
        let text = r#"{"scenario":"c_fair","seeds":[1],"cfair":{"lambda_c":1,"epsilon":1.5}}"#;
        assert_eq!(err_path(text), "cfair.epsilon");
    }

    #[test]
    fn unknown_and_missing_keys() {
        assert_eq!(
            err_path(r#"{"scenario":"baseline","seeds":[1],"sedes":[2]}"#),
            "sedes"
        );
        assert_eq!(
            err_path(r#"{"scenario":"baseline","seeds":[1],"generator":{"n_item":3}}"#),
            "generator.n_item"
        );
        assert_eq!(err_path(r#"{"seeds":[1]}"#), "scenario");
        assert_eq!(
            err_path(r#"{"scenario":"c_fair","seeds":[1],"cfair":{}}"#),
            "cfair.lambda_c"
        );
        assert_eq!(
            err_path(r#"{"scenario":"baseline","seeds":[1],"generator":{"seed":3}}"#),
            "generator.seed"
        );
    }

    #[test]
    fn scenario_section_mismatch() {
        assert_eq!(
            err_path(r#"{"scenario":"p_fair_auction","seeds":[1]}"#),
            "auction"
        );
        assert_eq!(
            err_path(r#"{"scenario":"cp_decoupled","seeds":[1],"auction":{"k_auction":1}}"#),
            "cfair"
        );
    }

    #[test]
    fn range_checks() {
        assert_eq!(err_path(r#"{"scenario":"baseline","seeds":[]}"#), "seeds");
        assert_eq!(
            err_path(r#"{"scenario":"p_fair_auction","seeds":[1],"auction":{"k_auction":11}}"#),
            "auction.k_auction"
        );
        assert_eq!(
            err_path(r#"{"scenario":"baseline","seeds":[1],"generator":{"rho_c":0}}"#),
            "generator.rho_c"
        );
        assert_eq!(
            err_path(r#"{"scenario":"baseline","seeds":[1],"generator":{"rho_p":1.2}}"#),
            "generator.rho_p"
        );
        assert_eq!(
            err_path(r#"{"scenario":"baseline","seeds":[1],"generator":{"n_items":25},"k":10}"#),
            "k"
        );
    }
}
