//! Deterministic simulator of a multisided recommendation platform.
//!
//! A seeded generator builds a marketplace of consumers, providers and items
//! with behavioral bias. An item-kNN recommender produces personalized slates,
//! and fairness interventions modify them:
//!
//! * [`rerank::rerank_cfair`] pushes each consumer group's mean slate outcome
//!   toward a common target under a hard accuracy floor;
//! * [`rerank::rerank_pfair_group`] raises the protected-provider share of each slate;
//! * [`auction`] runs a budgeted second-price market in which provider agents
//!   buy slate slots, with budgets split by purchasing parity.
//!
//! [`experiment`] composes these into scenarios and [`metrics`] scores them.

pub mod auction;
pub mod error;
pub mod experiment;
pub mod marketplace;
pub mod metrics;
pub mod output;
pub mod recommender;
pub mod rerank;
pub mod rng;

pub use error::{Error, Result};
