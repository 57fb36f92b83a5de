//! Item-kNN baseline: cosine item similarity, score aggregation and top-k slates.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::marketplace::Marketplace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScoredCandidate {
    pub item_id: usize,
    pub base_score: f64,
    /// `base_score` min-max normalized within the candidate pool.
    pub quality: f64,
}

/// Ordered top-k list for one consumer together with the top-N pool it was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Slate {
    pub consumer_id: usize,
    pub entries: Vec<ScoredCandidate>,
    pub pool: Vec<ScoredCandidate>,
}

impl Slate {
    pub fn k(&self) -> usize {
        self.entries.len()
    }

    pub fn item_ids(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.item_id).collect()
    }

    /// Mean outcome of the slate's items.
    pub fn mean_outcome(&self, market: &Marketplace) -> f64 {
        if self.entries.is_empty() {
            return 0.0;
        }
        let items = market.items();
        self.entries
            .iter()
            .map(|e| items[e.item_id].outcome)
            .sum::<f64>()
            / self.entries.len() as f64
    }
}

/// Presentation order: descending base score, ascending item id.
pub fn by_score(a: &ScoredCandidate, b: &ScoredCandidate) -> Ordering {
    b.base_score
        .total_cmp(&a.base_score)
        .then(a.item_id.cmp(&b.item_id))
}

/// Dense symmetric cosine similarity between item columns of the binary train matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemSimilarity {
    n: usize,
    values: Vec<f64>,
    popularity: Vec<usize>,
}

impl ItemSimilarity {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn n_items(&self) -> usize {
        self.n
    }

    /// Train interaction count per item.
    pub fn popularity(&self) -> &[usize] {
        &self.popularity
    }
}

pub fn item_similarity(market: &Marketplace) -> Result<ItemSimilarity> {
    if market.n_train_interactions() == 0 {
        return Err(Error::Recommender("no train interactions".into()));
    }
    let n = market.items().len();
    let mut co = vec![0u32; n * n];
    let mut popularity = vec![0usize; n];
    for c in 0..market.consumers().len() {
        let train = market.train_items(c);
        for &i in train {
            popularity[i] += 1;
            for &j in train {
                co[i * n + j] += 1;
            }
        }
    }
    let norms: Vec<f64> = popularity.iter().map(|&p| (p as f64).sqrt()).collect();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            values[i * n + j] = if i == j {
                1.0
            } else if co[i * n + j] == 0 {
                0.0
            } else {
                co[i * n + j] as f64 / (norms[i] * norms[j])
            };
        }
    }
    Ok(ItemSimilarity {
        n,
        values,
        popularity,
    })
}

/// Base score for every item outside the consumer's train set, ascending item id.
///
/// `score(c, i) = Σ_{j ∈ train(c)} sim(i, j)`; consumers with no train
/// positives get item popularity instead.
pub fn score(consumer_id: usize, market: &Marketplace, sim: &ItemSimilarity) -> Vec<(usize, f64)> {
    let train = market.train_items(consumer_id);
    let n = sim.n_items();
    if train.is_empty() {
        return sim
            .popularity()
            .iter()
            .enumerate()
            .map(|(i, &p)| (i, p as f64))
            .collect();
    }
    let mut totals = vec![0.0; n];
    for &j in train {
        for (t, s) in totals.iter_mut().zip(sim.row(j)) {
            *t += s;
        }
    }
    totals
        .into_iter()
        .enumerate()
        .filter(|(i, _)| train.binary_search(i).is_err())
        .collect()
}

/// Builds the slate: pool is the top `pool_size` scores (clamped to the number
/// of scorable items), entries its first `k`.
pub fn top_k(
    consumer_id: usize,
    scores: &[(usize, f64)],
    k: usize,
    pool_size: usize,
) -> Result<Slate> {
    if scores.len() < k {
        return Err(Error::Recommender(format!(
            "consumer {consumer_id} has {} scorable items, fewer than k = {k}",
            scores.len()
        )));
    }
    let mut ranked: Vec<ScoredCandidate> = scores
        .iter()
        .map(|&(item_id, base_score)| ScoredCandidate {
            item_id,
            base_score,
            quality: 0.0,
        })
        .collect();
    ranked.sort_by(by_score);
    ranked.truncate(pool_size.max(k));
    normalize_quality(&mut ranked);
    let entries = ranked[..k].to_vec();
    Ok(Slate {
        consumer_id,
        entries,
        pool: ranked,
    })
}

fn normalize_quality(pool: &mut [ScoredCandidate]) {
    let max = pool
        .iter()
        .map(|c| c.base_score)
        .fold(f64::NEG_INFINITY, f64::max);
    let min = pool
        .iter()
        .map(|c| c.base_score)
        .fold(f64::INFINITY, f64::min);
    let range = max - min;
    for c in pool.iter_mut() {
        c.quality = if range > 0.0 {
            (c.base_score - min) / range
        } else {
            1.0
        };
    }
}
