//! Stakeholder utilities and fairness measures over a set of served slates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketplace::Marketplace;
use crate::recommender::Slate;

/// Rank discount shared by NDCG and exposure; `rank` is 1-based.
pub fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// Binary-relevance NDCG@k with the ideal truncated at `min(|relevant|, k)`.
/// `None` when `relevant` is empty.
pub fn ndcg_at_k(ranked: &[usize], relevant: &[usize]) -> Option<f64> {
    if relevant.is_empty() {
        return None;
    }
    let dcg: f64 = ranked
        .iter()
        .enumerate()
        .filter(|(_, item)| relevant.contains(item))
        .map(|(r, _)| discount(r + 1))
        .sum();
    let ideal: f64 = (1..=relevant.len().min(ranked.len())).map(discount).sum();
    Some(if ideal > 0.0 { dcg / ideal } else { 0.0 })
}

/// `|mean slate outcome over protected consumers − mean over the rest|`.
pub fn statistical_parity_difference(slates: &[Slate], market: &Marketplace) -> Result<f64> {
    let mut sums = [0.0; 2];
    let mut counts = [0usize; 2];
    for slate in slates {
        let g = market.consumers()[slate.consumer_id].protected as usize;
        sums[g] += slate.mean_outcome(market);
        counts[g] += 1;
    }
    if counts.contains(&0) {
        return Err(Error::Metric(format!(
            "statistical parity needs both consumer groups (protected {}, unprotected {})",
            counts[1], counts[0]
        )));
    }
    Ok((sums[1] / counts[1] as f64 - sums[0] / counts[0] as f64).abs())
}

/// Share of slate items whose provider is protected.
pub fn list_diversity(slate: &Slate, market: &Marketplace) -> f64 {
    if slate.entries.is_empty() {
        return 0.0;
    }
    let protected = slate
        .entries
        .iter()
        .filter(|e| market.item_is_protected(e.item_id))
        .count();
    protected as f64 / slate.entries.len() as f64
}

/// Gini coefficient of a non-negative vector; 0 for all-equal (or all-zero) input.
pub fn gini(values: &[f64]) -> f64 {
    let n = values.len();
    let total: f64 = values.iter().sum();
    if n < 2 || total <= 0.0 {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let weighted: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, x)| (2.0 * (i + 1) as f64 - n as f64 - 1.0) * x)
        .sum();
    weighted / (n as f64 * total)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exposure {
    /// Rank-discounted appearances per provider, indexed by provider id.
    pub per_provider: Vec<f64>,
    /// Per-capita protected exposure over per-capita unprotected exposure.
    pub protected_ratio: f64,
    pub coverage: f64,
    pub coverage_protected: f64,
    pub coverage_unprotected: f64,
    pub gini: f64,
}

/// Provider exposure over all slates, with the derived parity and coverage figures.
///
/// Conventions for degenerate inputs: a class with no providers has coverage 0;
/// the ratio is 1 when either class is empty or both per-capita exposures are
/// 0, and infinite when only the unprotected class has zero exposure.
pub fn exposure(slates: &[Slate], market: &Marketplace) -> Exposure {
    let providers = market.providers();
    let mut per_provider = vec![0.0; providers.len()];
    for slate in slates {
        for (r, e) in slate.entries.iter().enumerate() {
            per_provider[market.items()[e.item_id].provider_id] += discount(r + 1);
        }
    }
    let mut totals = [0.0; 2];
    let mut sizes = [0usize; 2];
    let mut covered = [0usize; 2];
    for (p, &x) in providers.iter().zip(&per_provider) {
        let g = p.protected as usize;
        totals[g] += x;
        sizes[g] += 1;
        covered[g] += (x > 0.0) as usize;
    }
    let share = |c: usize, n: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    let protected_ratio = if sizes.contains(&0) {
        1.0
    } else {
        let prot = totals[1] / sizes[1] as f64;
        let other = totals[0] / sizes[0] as f64;
        match (prot > 0.0, other > 0.0) {
            (false, false) => 1.0,
            (true, false) => f64::INFINITY,
            _ => prot / other,
        }
    };
    Exposure {
        protected_ratio,
        coverage: share(covered[0] + covered[1], providers.len()),
        coverage_protected: share(covered[1], sizes[1]),
        coverage_unprotected: share(covered[0], sizes[0]),
        gini: gini(&per_provider),
        per_provider,
    }
}

fn weight_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemWeights {
    #[serde(default = "weight_one")]
    pub consumer: f64,
    #[serde(default = "weight_one")]
    pub parity: f64,
    #[serde(default = "weight_one")]
    pub provider: f64,
}

impl Default for SystemWeights {
    fn default() -> Self {
        Self {
            consumer: 1.0,
            parity: 1.0,
            provider: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub ndcg_mean: f64,
    pub spd: f64,
    pub protected_exposure_ratio: f64,
    pub catalog_coverage: f64,
    pub catalog_coverage_protected: f64,
    pub catalog_coverage_unprotected: f64,
    pub mean_list_diversity: f64,
    pub gini_exposure: f64,
    pub provider_exposure: Vec<f64>,
    pub system_utility: f64,
}

impl MetricsReport {
    /// Scalar metrics in `metrics.csv` column order.
    pub const SCALAR_NAMES: [&'static str; 9] = [
        "ndcg_mean",
        "spd",
        "protected_exposure_ratio",
        "catalog_coverage",
        "catalog_coverage_protected",
        "catalog_coverage_unprotected",
        "mean_list_diversity",
        "gini_exposure",
        "system_utility",
    ];

    pub fn scalars(&self) -> [f64; 9] {
        [
            self.ndcg_mean,
            self.spd,
            self.protected_exposure_ratio,
            self.catalog_coverage,
            self.catalog_coverage_protected,
            self.catalog_coverage_unprotected,
            self.mean_list_diversity,
            self.gini_exposure,
            self.system_utility,
        ]
    }
}

/// `w_c·ndcg − w_p·spd − w_v·|1 − ratio|`, with the ratio clamped to [0, 2].
pub fn system_utility(report: &MetricsReport, weights: &SystemWeights) -> f64 {
    let ratio = report.protected_exposure_ratio.clamp(0.0, 2.0);
    weights.consumer * report.ndcg_mean
        - weights.parity * report.spd
        - weights.provider * (1.0 - ratio).abs()
}

/// Full report for one run's served slates.
pub fn evaluate(
    slates: &[Slate],
    market: &Marketplace,
    weights: &SystemWeights,
) -> Result<MetricsReport> {
    let ndcgs: Vec<f64> = slates
        .iter()
        .filter_map(|s| ndcg_at_k(&s.item_ids(), market.test_items(s.consumer_id)))
        .collect();
    let ndcg_mean = if ndcgs.is_empty() {
        0.0
    } else {
        ndcgs.iter().sum::<f64>() / ndcgs.len() as f64
    };
    let mean_list_diversity = if slates.is_empty() {
        0.0
    } else {
        slates
            .iter()
            .map(|s| list_diversity(s, market))
            .sum::<f64>()
            / slates.len() as f64
    };
    let exp = exposure(slates, market);
    let mut report = MetricsReport {
        ndcg_mean,
        spd: statistical_parity_difference(slates, market)?,
        protected_exposure_ratio: exp.protected_ratio,
        catalog_coverage: exp.coverage,
        catalog_coverage_protected: exp.coverage_protected,
        catalog_coverage_unprotected: exp.coverage_unprotected,
        mean_list_diversity,
        gini_exposure: exp.gini,
        provider_exposure: exp.per_provider,
        system_utility: 0.0,
    };
    report.system_utility = system_utility(&report, weights);
    Ok(report)
}
