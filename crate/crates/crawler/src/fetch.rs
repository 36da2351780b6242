use std::collections::BTreeSet;
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde_json::Value;
use thiserror::Error;

use crate::target::{CrawlTarget, PayloadFormat};

/// One successful call to a suggestion endpoint.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrawlResult {
    pub query: String,
    pub fetched_at: DateTime<Utc>,
    /// Distinct, non-empty suggestions in the order the endpoint returned them.
    pub suggestions: Vec<String>,
    pub http_status: u16,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FetchError {
    #[error("request to {url} failed: {reason}")]
    Network { url: String, reason: String },
    #[error("{url} answered with status {status}")]
    Status { url: String, status: u16 },
    #[error("unusable payload from {url}: {reason}")]
    Payload { url: String, reason: String },
}

impl FetchError {
    /// Whether another attempt could plausibly succeed.
    pub fn is_retryable(&self) -> bool {
        match self {
            FetchError::Network { .. } => true,
            FetchError::Status { status, .. } => *status >= 500 || *status == 429 || *status == 408,
            FetchError::Payload { .. } => false,
        }
    }
}

/// Something that can perform one suggestion request.
pub trait Fetcher: Sync {
    fn fetch(
        &self,
        target: &CrawlTarget,
        query: &str,
        at: DateTime<Utc>,
    ) -> Result<CrawlResult, FetchError>;
}

/// Blocking HTTP client for suggestion endpoints.
pub struct HttpFetcher {
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

impl Default for HttpFetcher {
    fn default() -> Self {
        Self::new(Duration::from_secs(20))
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(
        &self,
        target: &CrawlTarget,
        query: &str,
        at: DateTime<Utc>,
    ) -> Result<CrawlResult, FetchError> {
        fetch_suggestions(&self.agent, target, query, at)
    }
}

/// Performs a single GET for `query` and parses the suggestion list.
pub fn fetch_suggestions(
    agent: &ureq::Agent,
    target: &CrawlTarget,
    query: &str,
    at: DateTime<Utc>,
) -> Result<CrawlResult, FetchError> {
    let url = target.url_for(query);
    let mut request = agent.get(&url);
    for (name, value) in &target.headers {
        request = request.header(name.as_str(), value.as_str());
    }
    let network = |e: ureq::Error| FetchError::Network {
        url: url.clone(),
        reason: e.to_string(),
    };
    let mut response = request.call().map_err(network)?;
    let status = response.status().as_u16();
    if !response.status().is_success() {
        return Err(FetchError::Status { url, status });
    }
    let body = response.body_mut().read_to_string().map_err(network)?;
    let suggestions =
        parse_payload(&body, &target.payload).map_err(|reason| FetchError::Payload {
            url: url.clone(),
            reason,
        })?;
    Ok(CrawlResult {
        query: query.to_string(),
        fetched_at: at,
        suggestions,
        http_status: status,
    })
}

/// Extracts the suggestion strings from a JSON response body.
///
/// Terms are trimmed; empty terms and repeats of earlier terms are dropped.
pub fn parse_payload(body: &str, format: &PayloadFormat) -> Result<Vec<String>, String> {
    let json: Value = serde_json::from_str(body).map_err(|e| format!("invalid JSON: {e}"))?;
    let items = json
        .pointer(&format.suggestions_pointer)
        .ok_or_else(|| format!("nothing at {}", format.suggestions_pointer))?
        .as_array()
        .ok_or_else(|| format!("{} is not an array", format.suggestions_pointer))?;

    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let value = match &format.item_pointer {
            Some(ptr) => item
                .pointer(ptr)
                .ok_or_else(|| format!("element {i} has nothing at {ptr}"))?,
            None => item,
        };
        let term = value
            .as_str()
            .ok_or_else(|| format!("element {i} is not a string"))?
            .trim();
        if term.is_empty() {
            log::debug!("dropping empty suggestion at index {i}");
            continue;
        }
        if seen.insert(term) {
            out.push(term.to_string());
        } else {
            log::debug!("dropping repeated suggestion {term:?}");
        }
    }
    Ok(out)
}
