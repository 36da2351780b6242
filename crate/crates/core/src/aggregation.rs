//! Collapses the result lists of many requests into one "typical" list.
//!
//! A URL survives if the share of lists containing it is strictly greater
//! than the presence threshold. Survivors are ordered by their mean rank,
//! averaged over the lists that contain them, with ties broken by URL.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use num_rational::Ratio;
use thiserror::Error;

use crate::rbo::Ranking;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregationError {
    #[error("request batch for {query:?} at {timepoint} contains no result lists")]
    EmptyBatch {
        query: String,
        timepoint: DateTime<Utc>,
    },
    #[error("presence threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(String),
}

/// The ranked organic URLs returned to one request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultList {
    pub request_id: String,
    pub timestamp: DateTime<Utc>,
    pub ranked_urls: Ranking,
}

/// Every result list observed for one query in one collection round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RequestBatch {
    query: String,
    timepoint: DateTime<Utc>,
    lists: Vec<ResultList>,
}

impl RequestBatch {
    pub fn new(
        query: impl Into<String>,
        timepoint: DateTime<Utc>,
        lists: Vec<ResultList>,
    ) -> Result<Self, AggregationError> {
        let query = query.into();
        if lists.is_empty() {
            return Err(AggregationError::EmptyBatch { query, timepoint });
        }
        Ok(Self {
            query,
            timepoint,
            lists,
        })
    }

    pub fn query(&self) -> &str {
        &self.query
    }

    pub fn timepoint(&self) -> DateTime<Utc> {
        self.timepoint
    }

    pub fn lists(&self) -> &[ResultList] {
        &self.lists
    }
}

/// Presence threshold, held as an exact fraction so that "more than a
/// third" excludes a URL seen in exactly one list out of three.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AggregationPolicy {
    presence_threshold: Ratio<u64>,
}

impl AggregationPolicy {
    pub fn new(presence_threshold: Ratio<u64>) -> Result<Self, AggregationError> {
        if *presence_threshold.numer() == 0 || presence_threshold > Ratio::from_integer(1) {
            return Err(AggregationError::InvalidThreshold(
                presence_threshold.to_string(),
            ));
        }
        Ok(Self { presence_threshold })
    }

    pub fn from_fraction(numer: u64, denom: u64) -> Result<Self, AggregationError> {
        if denom == 0 {
            return Err(AggregationError::InvalidThreshold(format!(
                "{numer}/{denom}"
            )));
        }
        Self::new(Ratio::new(numer, denom))
    }

    pub fn presence_threshold(&self) -> Ratio<u64> {
        self.presence_threshold
    }

    /// True if `present` out of `total` lists strictly exceeds the threshold.
    pub fn admits(&self, present: usize, total: usize) -> bool {
        let numer = u128::from(*self.presence_threshold.numer());
        let denom = u128::from(*self.presence_threshold.denom());
        (present as u128) * denom > numer * (total as u128)
    }
}

impl Default for AggregationPolicy {
    fn default() -> Self {
        Self {
            presence_threshold: Ratio::new(1, 3),
        }
    }
}

impl fmt::Display for AggregationPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.presence_threshold)
    }
}

/// Accepts `n/d` fractions and plain decimals such as `0.5`; both are read exactly.
impl FromStr for AggregationPolicy {
    type Err = AggregationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let invalid = || AggregationError::InvalidThreshold(s.to_string());
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse::<u64>().map_err(|_| invalid())?;
            let d = d.trim().parse::<u64>().map_err(|_| invalid())?;
            return Self::from_fraction(n, d).map_err(|_| invalid());
        }
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        if frac_part.len() > 18
            || !int_part.chars().all(|c| c.is_ascii_digit())
            || !frac_part.chars().all(|c| c.is_ascii_digit())
            || (int_part.is_empty() && frac_part.is_empty())
        {
            return Err(invalid());
        }
        let denom = 10u64.pow(frac_part.len() as u32);
        let int_val: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| invalid())?
        };
        let frac_val: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| invalid())?
        };
        let numer = int_val
            .checked_mul(denom)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(invalid)?;
        Self::from_fraction(numer, denom).map_err(|_| invalid())
    }
}

#[derive(Default)]
struct Tally {
    present: usize,
    rank_sum: usize,
}

/// Builds the aggregated ranking for one batch.
pub fn aggregate(batch: &RequestBatch, policy: &AggregationPolicy) -> Ranking {
    let total = batch.lists.len();
    let mut tallies: HashMap<&str, Tally> = HashMap::new();
    for list in &batch.lists {
        for (idx, url) in list.ranked_urls.iter().enumerate() {
            let tally = tallies.entry(url.as_str()).or_default();
            tally.present += 1;
            tally.rank_sum += idx + 1;
        }
    }

    let mut survivors: Vec<(&str, Tally)> = tallies
        .into_iter()
        .filter(|(_, t)| policy.admits(t.present, total))
        .collect();
    // Mean ranks compared by cross-multiplication, so no rounding is involved.
    survivors.sort_by(|(url_a, a), (url_b, b)| {
        let lhs = a.rank_sum as u128 * b.present as u128;
        let rhs = b.rank_sum as u128 * a.present as u128;
        lhs.cmp(&rhs).then_with(|| url_a.cmp(url_b))
    });

    let urls = survivors
        .into_iter()
        .map(|(url, _)| url.to_string())
        .collect();
    Ranking::new(urls).expect("aggregated URLs are distinct")
}

/// Mean rank of `url` over the lists that contain it, if any do.
pub fn mean_rank(batch: &RequestBatch, url: &str) -> Option<Ratio<u64>> {
    let (present, sum) = batch
        .lists
        .iter()
        .filter_map(|l| l.ranked_urls.iter().position(|u| u == url))
        .fold((0u64, 0u64), |(n, s), idx| (n + 1, s + idx as u64 + 1));
    (present > 0).then(|| Ratio::new(sum, present))
}
