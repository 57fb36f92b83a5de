//! Scenario orchestration over seeds.

use rayon::prelude::*;

use super::config::{ExperimentConfig, Scenario};
use crate::auction::{AuctionConfig, AuctionLedger, AuctionMarket, ProviderAgent};
use crate::error::{Error, Result};
use crate::marketplace::{generate, Marketplace};
use crate::metrics::{evaluate, MetricsReport};
use crate::recommender::{item_similarity, score, top_k, Slate};
use crate::rerank::{rerank_cfair, rerank_pfair_group, CFairConfig, GroupState, PFairGroupConfig};

/// Everything one replication produced.
#[derive(Debug, Clone)]
pub struct SeedRun {
    pub seed: u64,
    pub market: Marketplace,
    /// Unmodified top-k slates, one per consumer in id order.
    pub base_slates: Vec<Slate>,
    /// Slates actually served under the scenario.
    pub slates: Vec<Slate>,
    pub report: MetricsReport,
    /// C-fair target used for this seed, when the scenario re-ranks for consumers.
    pub cfair_target: Option<f64>,
    pub ledger: Option<AuctionLedger>,
    pub agents: Option<Vec<ProviderAgent>>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub scenario: Scenario,
    pub runs: Vec<SeedRun>,
    /// Across-seed mean of each scalar metric, in [`MetricsReport::SCALAR_NAMES`] order.
    pub mean: Vec<f64>,
    /// Across-seed sample standard deviation (0 for a single seed).
    pub std: Vec<f64>,
}

/// Base slates for every consumer in ascending id order.
pub fn base_slates(market: &Marketplace, k: usize, pool_size: usize) -> Result<Vec<Slate>> {
    let sim = item_similarity(market)?;
    market
        .consumers()
        .iter()
        .map(|c| top_k(c.id, &score(c.id, market, &sim), k, pool_size))
        .collect()
}

fn mean_slate_outcome(slates: &[Slate], market: &Marketplace) -> f64 {
    slates.iter().map(|s| s.mean_outcome(market)).sum::<f64>() / slates.len().max(1) as f64
}

/// Runs the configured scenario on an already-built marketplace.
pub fn run_on_market(config: &ExperimentConfig, seed: u64, market: Marketplace) -> Result<SeedRun> {
    let base = base_slates(&market, config.k, config.pool_size())?;
    let scenario = config.scenario;

    let mut cfair_target = None;
    let mut slates = if scenario.uses_cfair() {
        let settings = config
            .cfair
            .ok_or_else(|| Error::config("cfair", "section required"))?;
        let target = settings
            .target_outcome
            .unwrap_or_else(|| mean_slate_outcome(&base, &market));
        cfair_target = Some(target);
        let cfg = CFairConfig {
            lambda_c: settings.lambda_c,
            epsilon: settings.epsilon,
            target_outcome: target,
        };
        let mut state = GroupState::default();
        base.iter()
            .map(|s| {
                let protected = market.consumers()[s.consumer_id].protected;
                rerank_cfair(s, protected, &market, &cfg, &mut state)
            })
            .collect()
    } else if scenario == Scenario::PFairGroup {
        let settings = config
            .pfair
            .ok_or_else(|| Error::config("pfair", "section required"))?;
        let cfg = PFairGroupConfig {
            lambda_p: settings.lambda_p,
            tau: settings
                .tau
                .unwrap_or(market.n_protected_providers() as f64 / market.providers().len() as f64),
        };
        base.iter()
            .map(|s| rerank_pfair_group(s, &cfg, &market))
            .collect()
    } else {
        base.clone()
    };

    let mut ledger = None;
    let mut agents = None;
    if scenario.uses_auction() {
        let settings = config
            .auction
            .ok_or_else(|| Error::config("auction", "section required"))?;
        let cfg = AuctionConfig {
            total_budget: settings.total_budget,
            k_auction: settings.k_auction,
            horizon: slates.len(),
            reserve_price: settings.reserve_price,
            placement: settings.placement,
        };
        let mut auction = AuctionMarket::new(cfg, market.providers())?;
        slates = slates
            .iter()
            .enumerate()
            .map(|(idx, s)| auction.fill_slate(s, &market, idx + 1))
            .collect();
        ledger = Some(auction.ledger);
        agents = Some(auction.agents);
    }

    let report = evaluate(&slates, &market, &config.weights)?;
    Ok(SeedRun {
        seed,
        market,
        base_slates: base,
        slates,
        report,
        cfair_target,
        ledger,
        agents,
    })
}

pub fn run_seed(config: &ExperimentConfig, seed: u64) -> Result<SeedRun> {
    let mut generator = config.generator.clone();
    generator.seed = seed;
    run_on_market(config, seed, generate(&generator)?)
}

/// Runs every seed (concurrently) and aggregates scalar metrics.
pub fn run_scenario(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let runs: Vec<SeedRun> = config
        .seeds
        .par_iter()
        .map(|&seed| run_seed(config, seed))
        .collect::<Result<_>>()?;
    Ok(aggregate(config.scenario, runs))
}

pub fn aggregate(scenario: Scenario, runs: Vec<SeedRun>) -> RunResult {
    let n = runs.len();
    let width = MetricsReport::SCALAR_NAMES.len();
    let mut mean = vec![0.0; width];
    let mut std = vec![0.0; width];
    for (m, col) in mean.iter_mut().zip(0..width) {
        *m = runs.iter().map(|r| r.report.scalars()[col]).sum::<f64>() / n.max(1) as f64;
    }
    if n > 1 {
        for (s, col) in std.iter_mut().zip(0..width) {
            let ss: f64 = runs
                .iter()
                .map(|r| (r.report.scalars()[col] - mean[col]).powi(2))
                .sum();
            *s = (ss / (n - 1) as f64).sqrt();
        }
    }
    RunResult {
        scenario,
        runs,
        mean,
        std,
    }
}
