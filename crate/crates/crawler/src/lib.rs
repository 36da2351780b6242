//! Scheduled collection of query suggestions.
//!
//! A [`CrawlTarget`] names a suggestion endpoint, the queries to send to it
//! and the local times of day to do so. [`run_schedule`] visits each slot,
//! fetches every query through a [`Fetcher`] and appends one row per
//! suggestion to a [`Sink`] in the suggestion log format read by
//! `rankstab_core::ingestion`.

mod clock;
mod config;
mod fetch;
mod run;
mod sink;
mod target;

use std::path::PathBuf;

use thiserror::Error;

pub use clock::{Clock, ManualClock, SystemClock};
pub use config::{load_config, CrawlConfig, CrawlPlan, RetryConfig, TargetConfig};
pub use fetch::{fetch_suggestions, parse_payload, CrawlResult, FetchError, Fetcher, HttpFetcher};
pub use run::{
    plan_slots, records_for, run_schedule, CrawlSettings, FetchFailure, PlannedSlot, RetryPolicy,
    RunSummary,
};
pub use sink::{CsvFileSink, MemorySink, Sink};
pub use target::{CrawlTarget, PayloadFormat, Schedule, QUERY_PLACEHOLDER};

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("invalid crawl target: {0}")]
    InvalidTarget(String),
    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("config: {0}")]
    ConfigSyntax(String),
    #[error("cannot write {}: {reason}", path.display())]
    Sink { path: PathBuf, reason: String },
}
