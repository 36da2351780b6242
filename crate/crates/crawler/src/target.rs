use std::collections::BTreeSet;

use chrono::{DateTime, Duration, NaiveTime, TimeZone, Utc};
use chrono_tz::Tz;
use percent_encoding::{utf8_percent_encode, NON_ALPHANUMERIC};

use crate::CrawlError;

/// Placeholder in an endpoint template that receives the encoded query.
pub const QUERY_PLACEHOLDER: &str = "{query}";

/// Local times of day at which a target is crawled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    times: Vec<NaiveTime>,
    timezone: Tz,
}

impl Schedule {
    pub fn new(mut times: Vec<NaiveTime>, timezone: Tz) -> Result<Self, CrawlError> {
        if times.is_empty() {
            return Err(CrawlError::InvalidTarget("schedule has no times".into()));
        }
        times.sort();
        times.dedup();
        Ok(Self { times, timezone })
    }

    /// 05:00 and 17:00 Berlin time.
    pub fn twice_daily() -> Self {
        let at = |h| NaiveTime::from_hms_opt(h, 0, 0).expect("valid time");
        Self {
            times: vec![at(5), at(17)],
            timezone: chrono_tz::Europe::Berlin,
        }
    }

    pub fn times(&self) -> &[NaiveTime] {
        &self.times
    }

    pub fn timezone(&self) -> Tz {
        self.timezone
    }

    /// First slot at or after `ts`.
    pub fn next_at_or_after(&self, ts: DateTime<Utc>) -> DateTime<Utc> {
        let mut date = ts.with_timezone(&self.timezone).date_naive() - Duration::days(1);
        loop {
            let candidate = self
                .times
                .iter()
                .filter_map(|t| {
                    self.timezone
                        .from_local_datetime(&date.and_time(*t))
                        .earliest()
                })
                .map(|local| local.with_timezone(&Utc))
                .find(|slot| *slot >= ts);
            if let Some(slot) = candidate {
                return slot;
            }
            date += Duration::days(1);
        }
    }
}

/// Where the suggestion strings sit in an endpoint's JSON response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayloadFormat {
    /// JSON pointer to the array of suggestions.
    pub suggestions_pointer: String,
    /// JSON pointer applied to each array element; `None` when the elements
    /// are plain strings.
    pub item_pointer: Option<String>,
}

impl Default for PayloadFormat {
    /// The `[query, [suggestion, ...], ...]` shape of the common suggest APIs.
    fn default() -> Self {
        Self {
            suggestions_pointer: "/1".into(),
            item_pointer: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrawlTarget {
    pub source: String,
    endpoint: String,
    pub queries: Vec<String>,
    pub schedule: Schedule,
    pub headers: Vec<(String, String)>,
    pub payload: PayloadFormat,
}

impl CrawlTarget {
    pub fn new(
        source: impl Into<String>,
        endpoint: impl Into<String>,
        queries: Vec<String>,
        schedule: Schedule,
    ) -> Result<Self, CrawlError> {
        let source = source.into();
        let endpoint = endpoint.into();
        if source.trim().is_empty() {
            return Err(CrawlError::InvalidTarget("source name is empty".into()));
        }
        let placeholders = endpoint.matches(QUERY_PLACEHOLDER).count();
        if placeholders != 1 {
            return Err(CrawlError::InvalidTarget(format!(
                "endpoint must contain {QUERY_PLACEHOLDER} exactly once, found {placeholders}"
            )));
        }
        let mut seen = BTreeSet::new();
        for q in &queries {
            if q.trim().is_empty() || q.trim() != q {
                return Err(CrawlError::InvalidTarget(format!(
                    "query {q:?} is empty or has surrounding whitespace"
                )));
            }
            if !seen.insert(q) {
                return Err(CrawlError::InvalidTarget(format!(
                    "query {q:?} listed twice"
                )));
            }
        }
        Ok(Self {
            source,
            endpoint,
            queries,
            schedule,
            headers: Vec::new(),
            payload: PayloadFormat::default(),
        })
    }

    pub fn with_header(mut self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.headers.push((name.into(), value.into()));
        self
    }

    pub fn with_payload(mut self, payload: PayloadFormat) -> Self {
        self.payload = payload;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    /// Endpoint with `query` percent-encoded into the placeholder.
    pub fn url_for(&self, query: &str) -> String {
        let encoded = utf8_percent_encode(query, NON_ALPHANUMERIC).to_string();
        self.endpoint.replacen(QUERY_PLACEHOLDER, &encoded, 1)
    }
}
