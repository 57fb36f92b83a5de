//! Budgeted second-price market for individual provider fairness.
//!
//! Each provider is represented by an agent holding a fixed budget of
//! artificial currency, split so both provider classes have equal aggregate
//! purchasing power. For every slate request, `k_auction` slots are sold one
//! at a time in sealed-bid second-price auctions. Agents bid
//! `quality · remaining_budget / remaining_opportunities`, which draws budgets
//! down evenly over the horizon.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marketplace::{Marketplace, Provider};
use crate::output::fmt_real;
use crate::recommender::{by_score, ScoredCandidate, Slate};

/// Where auction-won items appear in the served slate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Merged with organic items by base score.
    #[default]
    Merged,
    /// Ahead of organic items, in the order they were won.
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuctionConfig {
    pub total_budget: f64,
    pub k_auction: usize,
    /// Number of opportunities (slate requests) in the run.
    pub horizon: usize,
    pub reserve_price: f64,
    pub placement: Placement,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProviderAgent {
    pub provider_id: usize,
    pub initial_budget: f64,
    pub remaining_budget: f64,
    pub wins: usize,
    pub spend: f64,
}

impl ProviderAgent {
    pub fn new(provider_id: usize, budget: f64) -> Self {
        Self {
            provider_id,
            initial_budget: budget,
            remaining_budget: budget,
            wins: 0,
            spend: 0.0,
        }
    }

    fn pay(&mut self, price: f64) {
        self.remaining_budget -= price;
        self.spend += price;
        self.wins += 1;
    }
}

/// Purchasing parity: `(B / 2p, B / 2q)` per protected and per other provider.
pub fn purchasing_parity(total_budget: f64, p: usize, q: usize) -> Result<(f64, f64)> {
    if !(total_budget.is_finite() && total_budget > 0.0) {
        return Err(Error::Auction(format!(
            "total budget {total_budget} must be > 0"
        )));
    }
    if p == 0 || q == 0 {
        return Err(Error::Auction(format!(
            "purchasing parity needs both provider classes (p = {p}, q = {q})"
        )));
    }
    Ok((total_budget / (2 * p) as f64, total_budget / (2 * q) as f64))
}

/// One agent per provider, funded by [`purchasing_parity`].
pub fn allocate_budgets(total_budget: f64, providers: &[Provider]) -> Result<Vec<ProviderAgent>> {
    let p = providers.iter().filter(|p| p.protected).count();
    let (protected, other) = purchasing_parity(total_budget, p, providers.len() - p)?;
    Ok(providers
        .iter()
        .map(|pr| ProviderAgent::new(pr.id, if pr.protected { protected } else { other }))
        .collect())
}

/// `quality · remaining / opportunities_remaining`, capped at the remaining budget.
/// `None` (abstain) when the budget is exhausted.
pub fn compute_bid(
    agent: &ProviderAgent,
    best_quality: f64,
    opportunities_remaining: usize,
) -> Option<f64> {
    if agent.remaining_budget <= 0.0 {
        return None;
    }
    let r = opportunities_remaining.max(1) as f64;
    Some((best_quality * agent.remaining_budget / r).min(agent.remaining_budget))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sale {
    pub winner: usize,
    pub price: f64,
}

/// Sealed-bid second-price auction over `(provider_id, bid)` pairs.
///
/// Bids below `reserve` do not qualify. The highest qualifying bid wins, ties
/// to the lowest provider id, and pays the larger of the reserve and the
/// highest other qualifying bid.
pub fn run_auction(bids: &[(usize, f64)], reserve: f64) -> Option<Sale> {
    let mut best: Option<(usize, f64)> = None;
    let mut second = f64::NEG_INFINITY;
    for &(provider, bid) in bids.iter().filter(|(_, b)| *b >= reserve) {
        match best {
            Some((bp, bb)) if bid < bb || (bid == bb && provider > bp) => {
                second = second.max(bid);
            }
            Some((_, bb)) => {
                second = second.max(bb);
                best = Some((provider, bid));
            }
            None => best = Some((provider, bid)),
        }
    }
    best.map(|(winner, _)| Sale {
        winner,
        price: second.max(reserve),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bid {
    pub provider_id: usize,
    pub amount: f64,
    /// The agent's best unplaced pool item, placed if it wins.
    pub item_id: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEntry {
    /// Opportunity index, 1-based.
    pub t: usize,
    /// Auction slot within the opportunity, 0-based.
    pub slot: usize,
    pub bids: Vec<Bid>,
    pub winner: Option<usize>,
    pub price: f64,
    pub item_placed: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AuctionLedger {
    pub entries: Vec<LedgerEntry>,
}

impl AuctionLedger {
    pub const CSV_HEADER: &'static str = "t,slot,provider_id,bid,won,price,item_id";

    /// One row per bid; `price` is what the row's provider paid (0 unless it won).
    pub fn csv_rows(&self, out: &mut String) {
        for e in &self.entries {
            for b in &e.bids {
                let won = e.winner == Some(b.provider_id);
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    e.t,
                    e.slot,
                    b.provider_id,
                    fmt_real(b.amount),
                    won as u8,
                    fmt_real(if won { e.price } else { 0.0 }),
                    b.item_id
                );
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        self.csv_rows(&mut out);
        out
    }
}

/// Agents, configuration and the running ledger for one simulated period.
#[derive(Debug, Clone)]
pub struct AuctionMarket {
    pub config: AuctionConfig,
    pub agents: Vec<ProviderAgent>,
    pub ledger: AuctionLedger,
}

impl AuctionMarket {
    pub fn new(config: AuctionConfig, providers: &[Provider]) -> Result<Self> {
        if config.horizon == 0 {
            return Err(Error::Auction("horizon must be >= 1".into()));
        }
        if !(config.reserve_price.is_finite() && config.reserve_price >= 0.0) {
            return Err(Error::Auction(format!(
                "reserve {} must be >= 0",
                config.reserve_price
            )));
        }
        Ok(Self {
            config,
            agents: allocate_budgets(config.total_budget, providers)?,
            ledger: AuctionLedger::default(),
        })
    }

    /// Market with explicitly funded agents (ids must equal positions).
    pub fn with_agents(config: AuctionConfig, agents: Vec<ProviderAgent>) -> Self {
        Self {
            config,
            agents,
            ledger: AuctionLedger::default(),
        }
    }

    pub fn total_initial(&self) -> f64 {
        self.agents.iter().map(|a| a.initial_budget).sum()
    }

    /// Serves opportunity `t` (1-based): auctions `k_auction` slots over the
    /// slate's pool, then fills the rest in the slate's own order followed by
    /// the remaining pool.
    pub fn fill_slate(&mut self, slate: &Slate, market: &Marketplace, t: usize) -> Slate {
        let k = slate.k();
        let k_auction = self.config.k_auction.min(k);
        let items = market.items();
        let mut placed: Vec<ScoredCandidate> = Vec::with_capacity(k);
        let mut is_placed = vec![false; slate.pool.len()];

        for slot in 0..k_auction {
            let remaining_opps =
                (self.config.horizon.saturating_sub(t) + 1) * self.config.k_auction - slot;
            let mut bids = Vec::new();
            for agent in &self.agents {
                let best = slate
                    .pool
                    .iter()
                    .enumerate()
                    .filter(|(idx, c)| {
                        !is_placed[*idx] && items[c.item_id].provider_id == agent.provider_id
                    })
                    .fold(
                        None::<(usize, &ScoredCandidate)>,
                        |acc, (idx, c)| match acc {
                            Some((_, b)) if b.quality >= c.quality => acc,
                            _ => Some((idx, c)),
                        },
                    );
                let Some((_, cand)) = best else { continue };
                if let Some(amount) = compute_bid(agent, cand.quality, remaining_opps) {
                    bids.push(Bid {
                        provider_id: agent.provider_id,
                        amount,
                        item_id: cand.item_id,
                    });
                }
            }
            let pairs: Vec<(usize, f64)> = bids.iter().map(|b| (b.provider_id, b.amount)).collect();
            let sale = run_auction(&pairs, self.config.reserve_price);
            let mut entry = LedgerEntry {
                t,
                slot,
                bids,
                winner: None,
                price: 0.0,
                item_placed: None,
            };
            if let Some(sale) = sale {
                let item = entry
                    .bids
                    .iter()
                    .find(|b| b.provider_id == sale.winner)
                    .map(|b| b.item_id)
                    .expect("winner placed a bid");
                let idx = slate
                    .pool
                    .iter()
                    .position(|c| c.item_id == item)
                    .expect("item in pool");
                is_placed[idx] = true;
                placed.push(slate.pool[idx]);
                self.agents[sale.winner].pay(sale.price);
                entry.winner = Some(sale.winner);
                entry.price = sale.price;
                entry.item_placed = Some(item);
            }
            self.ledger.entries.push(entry);
        }

        let organic = slate.entries.iter().chain(slate.pool.iter());
        for cand in organic {
            if placed.len() == k {
                break;
            }
            if !placed.iter().any(|p| p.item_id == cand.item_id) {
                placed.push(*cand);
            }
        }

        if self.config.placement == Placement::Merged {
            placed.sort_by(by_score);
        }
        Slate {
            entries: placed,
            ..slate.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marketplace::{Consumer, Item};
    use crate::recommender::top_k;

    fn providers(prot: &[bool]) -> Vec<Provider> {
        prot.iter()
            .enumerate()
            .map(|(id, &p)| Provider { id, protected: p })
            .collect()
    }

    #[test]
    fn parity_examples() {
        let (a, b) = purchasing_parity(100.0, 5, 45).unwrap();
        assert_eq!(a, 10.0);
        assert_eq!(b, 100.0 / 90.0);
        assert_eq!(purchasing_parity(2.0, 1, 1).unwrap(), (1.0, 1.0));
        let agents = allocate_budgets(
            60.0,
            &providers(&[[true; 3].as_slice(), &[false; 10]].concat()),
        )
        .unwrap();
        let prot: f64 = agents[..3].iter().map(|a| a.initial_budget).sum();
        let rest: f64 = agents[3..].iter().map(|a| a.initial_budget).sum();
        assert_eq!(agents[0].initial_budget, 10.0);
        assert_eq!(agents[5].initial_budget, 3.0);
        assert!((prot - 30.0).abs() < 1e-12 && (rest - 30.0).abs() < 1e-12);
    }

    #[test]
    fn parity_needs_both_classes() {
        assert!(purchasing_parity(10.0, 0, 3).is_err());
        assert!(purchasing_parity(10.0, 3, 0).is_err());
        assert!(purchasing_parity(0.0, 1, 1).is_err());
    }

    #[test]
    fn bid_formula() {
        let mut a = ProviderAgent::new(0, 10.0);
        assert_eq!(compute_bid(&a, 0.8, 4), Some(2.0));
        assert_eq!(compute_bid(&a, 0.0, 4), Some(0.0));
        a.remaining_budget = 0.0;
        assert_eq!(compute_bid(&a, 0.8, 4), None);
    }

    #[test]
    fn bid_strictly_increasing_in_budget() {
        let mut last = -1.0;
        for b in 1..50 {
            let a = ProviderAgent::new(0, b as f64 * 0.37);
            let bid = compute_bid(&a, 0.6, 7).unwrap();
            assert!(bid > last);
            last = bid;
        }
    }

    #[test]
    fn second_price_examples() {
        let s = run_auction(&[(0, 5.0), (1, 3.0), (2, 2.0)], 0.0).unwrap();
        assert_eq!((s.winner, s.price), (0, 3.0));
        let s = run_auction(&[(0, 5.0)], 0.0).unwrap();
        assert_eq!((s.winner, s.price), (0, 0.0));
        let s = run_auction(&[(1, 4.0), (0, 4.0)], 0.0).unwrap();
        assert_eq!((s.winner, s.price), (0, 4.0));
        assert_eq!(run_auction(&[], 0.0), None);
        assert_eq!(run_auction(&[(0, 0.0)], 0.5), None);
        let s = run_auction(&[(0, 1.0), (1, 0.2)], 0.5).unwrap();
        assert_eq!((s.winner, s.price), (0, 0.5));
    }

    fn toy_market(n_items: usize, n_providers: usize) -> Marketplace {
        let consumers = vec![Consumer {
            id: 0,
            protected: false,
        }];
        let items = (0..n_items)
            .map(|id| Item {
                id,
                provider_id: id % n_providers,
                outcome: 0.5,
            })
            .collect();
        Marketplace::from_parts(
            consumers,
            providers(&vec![false; n_providers]),
            items,
            &[],
            &[],
        )
        .unwrap()
    }

    fn config(k_auction: usize, horizon: usize) -> AuctionConfig {
        AuctionConfig {
            total_budget: 10.0,
            k_auction,
            horizon,
            reserve_price: 0.0,
            placement: Placement::Merged,
        }
    }

    #[test]
    fn zero_auction_slots_is_identity() {
        let m = toy_market(6, 2);
        let s = top_k(
            0,
            &[(0, 6.0), (1, 5.0), (2, 4.0), (3, 3.0), (4, 2.0), (5, 1.0)],
            3,
            6,
        )
        .unwrap();
        let agents = vec![ProviderAgent::new(0, 5.0), ProviderAgent::new(1, 5.0)];
        let mut mkt = AuctionMarket::with_agents(config(0, 3), agents.clone());
        assert_eq!(mkt.fill_slate(&s, &m, 1), s);
        assert!(mkt.ledger.entries.is_empty());
        assert_eq!(mkt.agents, agents);
    }

    #[test]
    fn lone_bidder_pays_reserve() {
        // provider 1 owns only item 5, at the bottom of the pool
        let consumers = vec![Consumer {
            id: 0,
            protected: false,
        }];
        let items = (0..6)
            .map(|id| Item {
                id,
                provider_id: usize::from(id == 5),
                outcome: 0.5,
            })
            .collect();
        let m = Marketplace::from_parts(consumers, providers(&[false, false]), items, &[], &[])
            .unwrap();
        let s = top_k(
            0,
            &[(0, 6.0), (1, 5.0), (2, 4.0), (3, 3.0), (4, 2.0), (5, 1.0)],
            2,
            6,
        )
        .unwrap();
        let agents = vec![ProviderAgent::new(0, 0.0), ProviderAgent::new(1, 5.0)];
        let mut mkt = AuctionMarket::with_agents(config(1, 4), agents);
        for t in 1..=4 {
            let out = mkt.fill_slate(&s, &m, t);
            assert_eq!(out.item_ids(), vec![0, 5]);
        }
        assert_eq!(mkt.agents[1].remaining_budget, 5.0);
        assert_eq!(mkt.agents[1].wins, 4);
        assert!(mkt
            .ledger
            .entries
            .iter()
            .all(|e| e.price == 0.0 && e.winner == Some(1)));
    }

    #[test]
    fn top_placement_pins_won_items() {
        let consumers = vec![Consumer {
            id: 0,
            protected: false,
        }];
        let items = (0..4)
            .map(|id| Item {
                id,
                provider_id: usize::from(id == 3),
                outcome: 0.5,
            })
            .collect();
        let m = Marketplace::from_parts(consumers, providers(&[false, false]), items, &[], &[])
            .unwrap();
        let s = top_k(0, &[(0, 4.0), (1, 3.0), (2, 2.0), (3, 1.0)], 2, 4).unwrap();
        let agents = vec![ProviderAgent::new(0, 0.0), ProviderAgent::new(1, 5.0)];
        let mut cfg = config(1, 1);
        cfg.placement = Placement::Top;
        let out = AuctionMarket::with_agents(cfg, agents).fill_slate(&s, &m, 1);
        assert_eq!(out.item_ids(), vec![3, 0]);
    }

    #[test]
    fn ledger_csv_one_row_per_bid() {
        let ledger = AuctionLedger {
            entries: vec![LedgerEntry {
                t: 1,
                slot: 0,
                bids: vec![
                    Bid {
                        provider_id: 0,
                        amount: 2.0,
                        item_id: 4,
                    },
                    Bid {
                        provider_id: 1,
                        amount: 1.5,
                        item_id: 7,
                    },
                ],
                winner: Some(0),
                price: 1.5,
                item_placed: Some(4),
            }],
        };
        assert_eq!(
            ledger.to_csv(),
            "t,slot,provider_id,bid,won,price,item_id\n\
             1,0,0,2.000000,1,1.500000,4\n\
             1,0,1,1.500000,0,0.000000,7\n"
        );
    }
}
