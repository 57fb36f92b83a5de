//! Configuration, scenario orchestration and serialized outputs.
//!
//! One run serves one slate per consumer in ascending consumer id order; that
//! ordered stream is also the auction's opportunity sequence, so the horizon
//! equals the number of consumers.

mod config;
mod outputs;
mod runner;

pub use config::{
    parse_config, AuctionSettings, CFairSettings, ExperimentConfig, PFairSettings, Scenario,
};
pub use outputs::{
    auction_log_csv, manifest_json, metrics_csv, metrics_summary_csv, provider_exposure_csv,
    render_outputs, slates_csv, write_outputs,
};
pub use runner::{
    aggregate, base_slates, run_on_market, run_scenario, run_seed, RunResult, SeedRun,
};
