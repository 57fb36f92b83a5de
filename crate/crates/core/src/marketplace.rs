//! Marketplace domain model and the seeded synthetic generator.
//!
//! Random stream consumption order for [`generate`] (all from one
//! [`SplitMix64`] seeded with `config.seed`):
//!
//! 1. consumer latent vectors, consumer-major, `d` normals each;
//! 2. item latent vectors, item-major, `d` normals each (the Box–Muller spare
//!    carries over from step 1);
//! 3. one uniform per item for its outcome, in item id order;
//! 4. per consumer in id order: one uniform per weighted draw without
//!    replacement, then a Fisher–Yates shuffle of the drawn items (one
//!    `next_index` per swap) whose leading `n_test` entries become test
//!    interactions.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::{fmt_real, write_atomic};
use crate::rng::{NormalSampler, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Consumer {
    pub id: usize,
    pub protected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Provider {
    pub id: usize,
    pub protected: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Item {
    pub id: usize,
    pub provider_id: usize,
    /// Normalized outcome variable (e.g. salary) in [0, 1].
    pub outcome: f64,
}

/// Consumers, providers, items and a disjoint train/test split of implicit positives.
#[derive(Debug, Clone, PartialEq)]
pub struct Marketplace {
    consumers: Vec<Consumer>,
    providers: Vec<Provider>,
    items: Vec<Item>,
    train: Vec<Vec<usize>>,
    test: Vec<Vec<usize>>,
}

impl Marketplace {
    /// Assembles a marketplace from explicit parts, checking every referential invariant.
    ///
    /// Interactions are `(consumer_id, item_id)` pairs; duplicates within a split are merged.
    pub fn from_parts(
        consumers: Vec<Consumer>,
        providers: Vec<Provider>,
        items: Vec<Item>,
        train: &[(usize, usize)],
        test: &[(usize, usize)],
    ) -> Result<Self> {
        let bad = |m: String| Error::Generator(m);
        for (idx, c) in consumers.iter().enumerate() {
            if c.id != idx {
                return Err(bad(format!(
                    "consumer ids must be contiguous, found {} at {idx}",
                    c.id
                )));
            }
        }
        for (idx, p) in providers.iter().enumerate() {
            if p.id != idx {
                return Err(bad(format!(
                    "provider ids must be contiguous, found {} at {idx}",
                    p.id
                )));
            }
        }
        for (idx, it) in items.iter().enumerate() {
            if it.id != idx {
                return Err(bad(format!(
                    "item ids must be contiguous, found {} at {idx}",
                    it.id
                )));
            }
            if it.provider_id >= providers.len() {
                return Err(bad(format!(
                    "item {idx} references unknown provider {}",
                    it.provider_id
                )));
            }
            if !(0.0..=1.0).contains(&it.outcome) {
                return Err(bad(format!(
                    "item {idx} outcome {} outside [0,1]",
                    it.outcome
                )));
            }
        }
        let group = |pairs: &[(usize, usize)], split: &str| -> Result<Vec<Vec<usize>>> {
            let mut by_consumer = vec![Vec::new(); consumers.len()];
            for &(c, i) in pairs {
                if c >= consumers.len() || i >= items.len() {
                    return Err(bad(format!(
                        "{split} interaction ({c},{i}) references unknown id"
                    )));
                }
                by_consumer[c].push(i);
            }
            for list in &mut by_consumer {
                list.sort_unstable();
                list.dedup();
            }
            Ok(by_consumer)
        };
        let train = group(train, "train")?;
        let test = group(test, "test")?;
        for (c, (tr, te)) in train.iter().zip(&test).enumerate() {
            if let Some(i) = te.iter().find(|i| tr.binary_search(i).is_ok()) {
                return Err(bad(format!(
                    "interaction ({c},{i}) is in both train and test"
                )));
            }
        }
        Ok(Self {
            consumers,
            providers,
            items,
            train,
            test,
        })
    }

    pub fn consumers(&self) -> &[Consumer] {
        &self.consumers
    }

    pub fn providers(&self) -> &[Provider] {
        &self.providers
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    /// Train positives of consumer `c`, ascending item id.
    pub fn train_items(&self, c: usize) -> &[usize] {
        &self.train[c]
    }

    /// Held-out positives of consumer `c`, ascending item id.
    pub fn test_items(&self, c: usize) -> &[usize] {
        &self.test[c]
    }

    pub fn item_is_protected(&self, item: usize) -> bool {
        self.providers[self.items[item].provider_id].protected
    }

    pub fn n_protected_providers(&self) -> usize {
        self.providers.iter().filter(|p| p.protected).count()
    }

    pub fn n_train_interactions(&self) -> usize {
        self.train.iter().map(Vec::len).sum()
    }

    /// Writes `consumers.csv`, `providers.csv`, `items.csv` and `interactions.csv` into `dir`.
    pub fn export_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let mut consumers = String::from("id,protected\n");
        for c in &self.consumers {
            let _ = writeln!(consumers, "{},{}", c.id, c.protected as u8);
        }
        let mut providers = String::from("id,protected\n");
        for p in &self.providers {
            let _ = writeln!(providers, "{},{}", p.id, p.protected as u8);
        }
        let mut items = String::from("id,provider_id,outcome\n");
        for it in &self.items {
            let _ = writeln!(
                items,
                "{},{},{}",
                it.id,
                it.provider_id,
                fmt_real(it.outcome)
            );
        }
        let mut interactions = String::from("consumer_id,item_id,split\n");
        for c in 0..self.consumers.len() {
            for i in &self.train[c] {
                let _ = writeln!(interactions, "{c},{i},train");
            }
            for i in &self.test[c] {
                let _ = writeln!(interactions, "{c},{i},test");
            }
        }

        write_atomic(&dir.join("consumers.csv"), &consumers)?;
        write_atomic(&dir.join("providers.csv"), &providers)?;
        write_atomic(&dir.join("items.csv"), &items)?;
        write_atomic(&dir.join("interactions.csv"), &interactions)
    }
}

fn default_rho_c() -> f64 {
    0.5
}
fn default_rho_p() -> f64 {
    0.1
}
fn default_latent_dim() -> usize {
    8
}
fn default_bias_beta() -> f64 {
    2.0
}
fn default_provider_bias() -> f64 {
    1.0
}
fn default_interactions() -> usize {
    20
}
fn default_holdout() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    #[serde(default = "default_n_consumers")]
    pub n_consumers: usize,
    #[serde(default = "default_n_providers")]
    pub n_providers: usize,
    #[serde(default = "default_n_items")]
    pub n_items: usize,
    /// Fraction of consumers in the protected class.
    #[serde(default = "default_rho_c")]
    pub rho_c: f64,
    /// Fraction of providers in the protected class.
    #[serde(default = "default_rho_p")]
    pub rho_p: f64,
    #[serde(default = "default_latent_dim")]
    pub latent_dim: usize,
    /// Outcome-weighted click bias applied to unprotected consumers only.
    #[serde(default = "default_bias_beta")]
    pub bias_beta: f64,
    /// Log-weight penalty on items of protected providers, applied to every consumer.
    #[serde(default = "default_provider_bias")]
    pub provider_bias: f64,
    #[serde(default = "default_interactions")]
    pub interactions_per_consumer: usize,
    #[serde(default = "default_holdout")]
    pub test_holdout: f64,
    /// Set per replication from the experiment's seed list.
    #[serde(skip)]
    pub seed: u64,
}

fn default_n_consumers() -> usize {
    500
}
fn default_n_providers() -> usize {
    50
}
fn default_n_items() -> usize {
    1000
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_consumers: default_n_consumers(),
            n_providers: default_n_providers(),
            n_items: default_n_items(),
            rho_c: default_rho_c(),
            rho_p: default_rho_p(),
            latent_dim: default_latent_dim(),
            bias_beta: default_bias_beta(),
            provider_bias: default_provider_bias(),
            interactions_per_consumer: default_interactions(),
            test_holdout: default_holdout(),
            seed: 0,
        }
    }
}

/// `⌈fraction · n⌉`, tolerant of representation error such as `0.3 * 10 = 3.0000000000000004`.
pub fn protected_count(fraction: f64, n: usize) -> usize {
    let exact = fraction * n as f64;
    let count = (exact - 1e-9).ceil().max(0.0) as usize;
    count.min(n)
}

impl GeneratorConfig {
    /// Checks the invariants; errors carry the key path relative to `prefix`.
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_string()
            } else {
                format!("{prefix}.{k}")
            }
        };
        for (name, v) in [
            ("n_consumers", self.n_consumers),
            ("n_providers", self.n_providers),
            ("n_items", self.n_items),
            ("latent_dim", self.latent_dim),
            ("interactions_per_consumer", self.interactions_per_consumer),
        ] {
            if v == 0 {
                return Err(Error::config(key(name), "must be >= 1"));
            }
        }
        for (name, v) in [("rho_c", self.rho_c), ("rho_p", self.rho_p)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::config(key(name), format!("{v} outside [0,1]")));
            }
        }
        for (name, v) in [
            ("bias_beta", self.bias_beta),
            ("provider_bias", self.provider_bias),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(
                    key(name),
                    format!("{v} must be finite and >= 0"),
                ));
            }
        }
        if !(self.test_holdout > 0.0 && self.test_holdout < 1.0) {
            return Err(Error::config(
                key("test_holdout"),
                format!("{} outside (0,1)", self.test_holdout),
            ));
        }
        if self.interactions_per_consumer > self.n_items {
            return Err(Error::config(
                key("interactions_per_consumer"),
                format!(
                    "{} exceeds n_items {}; cannot sample without replacement",
                    self.interactions_per_consumer, self.n_items
                ),
            ));
        }
        Ok(())
    }

    pub fn n_protected_consumers(&self) -> usize {
        protected_count(self.rho_c, self.n_consumers)
    }

    pub fn n_protected_providers(&self) -> usize {
        protected_count(self.rho_p, self.n_providers)
    }

    /// Held-out positives per consumer: `round(holdout · m)` clamped to `[1, m-1]`, or 0 when m = 1.
    pub fn n_test_per_consumer(&self) -> usize {
        let m = self.interactions_per_consumer;
        if m < 2 {
            return 0;
        }
        ((self.test_holdout * m as f64).round() as usize).clamp(1, m - 1)
    }
}

/// Generates a biased synthetic marketplace; a pure function of `config`.
pub fn generate(config: &GeneratorConfig) -> Result<Marketplace> {
    config.validate("generator")?;
    let d = config.latent_dim;
    let n_prot_c = config.n_protected_consumers();
    let n_prot_p = config.n_protected_providers();

    let consumers: Vec<Consumer> = (0..config.n_consumers)
        .map(|id| Consumer {
            id,
            protected: id < n_prot_c,
        })
        .collect();
    let providers: Vec<Provider> = (0..config.n_providers)
        .map(|id| Provider {
            id,
            protected: id < n_prot_p,
        })
        .collect();

    let mut rng = SplitMix64::new(config.seed);
    let mut normal = NormalSampler::new();
    let consumer_vecs: Vec<f64> = (0..config.n_consumers * d)
        .map(|_| normal.sample(&mut rng))
        .collect();
    let item_vecs: Vec<f64> = (0..config.n_items * d)
        .map(|_| normal.sample(&mut rng))
        .collect();

    let items: Vec<Item> = (0..config.n_items)
        .map(|id| Item {
            id,
            provider_id: id % config.n_providers,
            outcome: rng.next_f64(),
        })
        .collect();

    let m = config.interactions_per_consumer;
    let n_test = config.n_test_per_consumer();
    let mut train = Vec::with_capacity(config.n_consumers * (m - n_test));
    let mut test = Vec::with_capacity(config.n_consumers * n_test);
    let mut weights = vec![0.0; config.n_items];

    for consumer in &consumers {
        let u = &consumer_vecs[consumer.id * d..(consumer.id + 1) * d];
        let beta = if consumer.protected {
            0.0
        } else {
            config.bias_beta
        };
        for (w, item) in weights.iter_mut().zip(&items) {
            let v = &item_vecs[item.id * d..(item.id + 1) * d];
            let affinity: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
            let penalty = if providers[item.provider_id].protected {
                config.provider_bias
            } else {
                0.0
            };
            *w = (affinity + beta * item.outcome - penalty).exp();
        }

        let mut drawn = Vec::with_capacity(m);
        for _ in 0..m {
            let total: f64 = weights.iter().sum();
            let target = rng.next_f64() * total;
            let mut cumulative = 0.0;
            let mut chosen = None;
            for (i, &w) in weights.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                cumulative += w;
                chosen = Some(i);
                if cumulative > target {
                    break;
                }
            }
            let chosen = chosen.ok_or_else(|| {
                Error::Generator(format!(
                    "consumer {} ran out of sampleable items",
                    consumer.id
                ))
            })?;
            weights[chosen] = 0.0;
            drawn.push(chosen);
        }

        for i in (1..drawn.len()).rev() {
            let j = rng.next_index(i + 1);
            drawn.swap(i, j);
        }
        let (held, kept) = drawn.split_at(n_test);
        test.extend(held.iter().map(|&i| (consumer.id, i)));
        train.extend(kept.iter().map(|&i| (consumer.id, i)));
    }

    Marketplace::from_parts(consumers, providers, items, &train, &test)
}
