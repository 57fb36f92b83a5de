//! Score-level fairness re-rankers.
//!
//! Both re-rankers greedily pick `k` items from the slate's candidate pool and
//! then present the selection in base-score order, so fairness pressure
//! changes slate membership but never the relative order of what is shown.

use serde::{Deserialize, Serialize};

use crate::marketplace::Marketplace;
use crate::recommender::{by_score, ScoredCandidate, Slate};

/// Maximum number of times the C-fair pressure is halved before falling back to the base slate.
pub const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CFairConfig {
    pub lambda_c: f64,
    /// Maximum tolerated per-slate rank-quality loss.
    pub epsilon: f64,
    /// Mean slate outcome both consumer groups are pulled toward.
    pub target_outcome: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PFairGroupConfig {
    pub lambda_p: f64,
    /// Target protected-provider share per slate.
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GroupStats {
    pub mean: f64,
    pub count: usize,
}

/// Running mean slate outcome per consumer group.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GroupState {
    pub protected: GroupStats,
    pub unprotected: GroupStats,
}

impl GroupState {
    pub fn group(&self, protected: bool) -> GroupStats {
        if protected {
            self.protected
        } else {
            self.unprotected
        }
    }

    pub fn record(&mut self, protected: bool, slate_mean: f64) {
        let g = if protected {
            &mut self.protected
        } else {
            &mut self.unprotected
        };
        g.mean = (g.mean * g.count as f64 + slate_mean) / (g.count + 1) as f64;
        g.count += 1;
    }
}

fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

fn dcg(entries: &[ScoredCandidate]) -> f64 {
    entries
        .iter()
        .enumerate()
        .map(|(r, e)| e.base_score * discount(r + 1))
        .sum()
}

/// DCG of `reranked` over DCG of `base`, both with base score as gain. 1.0 when the base DCG is zero.
pub fn rank_quality(reranked: &Slate, base: &Slate) -> f64 {
    let ideal = dcg(&base.entries);
    if ideal == 0.0 {
        return 1.0;
    }
    dcg(&reranked.entries) / ideal
}

/// Greedy argmax over the unpicked pool; ties go to the earlier pool position.
fn greedy_select<F>(pool: &[ScoredCandidate], k: usize, mut objective: F) -> Vec<ScoredCandidate>
where
    F: FnMut(&ScoredCandidate, &[ScoredCandidate]) -> f64,
{
    let mut picked = vec![false; pool.len()];
    let mut chosen: Vec<ScoredCandidate> = Vec::with_capacity(k);
    while chosen.len() < k {
        let mut best: Option<(usize, f64)> = None;
        for (idx, cand) in pool.iter().enumerate() {
            if picked[idx] {
                continue;
            }
            let value = objective(cand, &chosen);
            if best.is_none_or(|(_, b)| value > b) {
                best = Some((idx, value));
            }
        }
        let Some((idx, _)) = best else { break };
        picked[idx] = true;
        chosen.push(pool[idx]);
    }
    chosen.sort_by(by_score);
    chosen
}

/// Group mean that would result from serving a slate whose items so far sum to
/// `sum` over `n` items. With nothing selected the group is taken at its
/// current mean, or at the target when it has never been served.
fn prospective_mean(stats: GroupStats, sum: f64, n: usize, target: f64) -> f64 {
    if n == 0 {
        return if stats.count == 0 { target } else { stats.mean };
    }
    let slate_mean = sum / n as f64;
    (stats.mean * stats.count as f64 + slate_mean) / (stats.count + 1) as f64
}

fn cfair_selection(
    slate: &Slate,
    market: &Marketplace,
    stats: GroupStats,
    lambda: f64,
    target: f64,
) -> Vec<ScoredCandidate> {
    let items = market.items();
    let k = slate.k();
    greedy_select(&slate.pool, k, |cand, chosen| {
        let sum: f64 = chosen.iter().map(|c| items[c.item_id].outcome).sum();
        let current = (prospective_mean(stats, sum, chosen.len(), target) - target).abs();
        let updated = prospective_mean(
            stats,
            sum + items[cand.item_id].outcome,
            chosen.len() + 1,
            target,
        );
        let gain = current - (updated - target).abs();
        cand.quality + lambda * gain
    })
}

/// C-fair outcome-parity re-ranking with an accuracy floor.
///
/// Selects `k` pool items maximizing `quality + λ·gain`, where `gain` is the
/// reduction in the consumer group's distance to the target mean outcome.
/// If the result's [`rank_quality`] falls below `1 − ε`, λ is halved and
/// selection repeats; after [`MAX_HALVINGS`] the base slate is served. The
/// served slate's mean outcome is recorded in `state`.
pub fn rerank_cfair(
    slate: &Slate,
    consumer_protected: bool,
    market: &Marketplace,
    config: &CFairConfig,
    state: &mut GroupState,
) -> Slate {
    let stats = state.group(consumer_protected);
    let floor = 1.0 - config.epsilon;
    let mut served = slate.clone();
    if config.lambda_c > 0.0 && slate.pool.len() >= slate.k() {
        let mut lambda = config.lambda_c;
        for _ in 0..=MAX_HALVINGS {
            let candidate = Slate {
                entries: cfair_selection(slate, market, stats, lambda, config.target_outcome),
                ..slate.clone()
            };
            if rank_quality(&candidate, slate) >= floor {
                served = candidate;
                break;
            }
            lambda /= 2.0;
        }
    }
    state.record(consumer_protected, served.mean_outcome(market));
    served
}

/// Group P-fair re-ranking toward a protected-provider share of `tau`.
///
/// Greedy objective `(1 − λ)·quality + λ·coverage_gain`, where a protected
/// candidate's coverage gain is `max(0, τ − share)` for the current protected
/// share of the partial slate (0 when empty) and unprotected candidates gain 0.
pub fn rerank_pfair_group(slate: &Slate, config: &PFairGroupConfig, market: &Marketplace) -> Slate {
    if config.lambda_p == 0.0 || slate.pool.len() < slate.k() {
        return slate.clone();
    }
    let lambda = config.lambda_p;
    let entries = greedy_select(&slate.pool, slate.k(), |cand, chosen| {
        let coverage_gain = if market.item_is_protected(cand.item_id) {
            let share = if chosen.is_empty() {
                0.0
            } else {
                chosen
                    .iter()
                    .filter(|c| market.item_is_protected(c.item_id))
                    .count() as f64
                    / chosen.len() as f64
            };
            (config.tau - share).max(0.0)
        } else {
            0.0
        };
        (1.0 - lambda) * cand.quality + lambda * coverage_gain
    });
    Slate {
        entries,
        ..slate.clone()
    }
}
