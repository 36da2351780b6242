//! The search-result log. Column names come from a [`ColumnMapping`];
//! ranks are 1-based.

use std::collections::{BTreeMap, HashSet};
use std::io::Read;

use chrono::{DateTime, Utc};
use serde::Deserialize;

use super::{
    csv_reader, parse_timestamp, IngestError, IssueLog, ParseOptions, Parsed, QueryAliasMap,
};
use crate::aggregation::{RequestBatch, ResultList};
use crate::rbo::Ranking;

/// Header names of the semantic fields in a result log.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnMapping {
    pub request_id: String,
    pub query: String,
    pub timestamp: String,
    pub rank: String,
    pub url: String,
    pub result_type: String,
    pub country: String,
    pub keyboard: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            request_id: "request_id".into(),
            query: "query".into(),
            timestamp: "timestamp".into(),
            rank: "rank".into(),
            url: "url".into(),
            result_type: "result_type".into(),
            country: "country".into(),
            keyboard: "keyboard".into(),
        }
    }
}

impl ColumnMapping {
    fn fields(&self) -> [(&'static str, &str); 8] {
        [
            ("request_id", &self.request_id),
            ("query", &self.query),
            ("timestamp", &self.timestamp),
            ("rank", &self.rank),
            ("url", &self.url),
            ("result_type", &self.result_type),
            ("country", &self.country),
            ("keyboard", &self.keyboard),
        ]
    }
}

/// Row filters. `None` disables a filter; all comparisons ignore case.
///
/// The defaults (`organic`, `DE`, `de`) are the values of the normalised
/// schema; exports with other spellings override them in the config.
#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CleaningPolicy {
    pub organic_only: bool,
    /// Value of the result-type column that marks an organic result.
    pub organic_label: String,
    pub country: Option<String>,
    pub keyboard: Option<String>,
}

impl Default for CleaningPolicy {
    fn default() -> Self {
        Self {
            organic_only: true,
            organic_label: "organic".into(),
            country: Some("DE".into()),
            keyboard: Some("de".into()),
        }
    }
}

impl CleaningPolicy {
    /// Keeps every row.
    pub fn permissive() -> Self {
        Self {
            organic_only: false,
            country: None,
            keyboard: None,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ResultType {
    Organic,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultRecord {
    pub request_id: String,
    pub query: String,
    pub timestamp: DateTime<Utc>,
    pub rank: u32,
    pub url: String,
    pub result_type: ResultType,
    pub country: String,
    pub keyboard: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ResultStats {
    pub rows: usize,
    pub malformed: usize,
    pub out_of_window: usize,
    pub non_organic: usize,
    pub wrong_country: usize,
    pub wrong_keyboard: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResultLog {
    pub records: Vec<ResultRecord>,
    pub stats: ResultStats,
}

fn same(a: &str, b: &str) -> bool {
    a.trim().eq_ignore_ascii_case(b.trim())
}

/// Row-level parse of a result log, applying the cleaning filters.
pub fn parse_result_records<R: Read>(
    input: R,
    columns: &ColumnMapping,
    cleaning: &CleaningPolicy,
    opts: &ParseOptions,
) -> Result<Parsed<ResultLog>, IngestError> {
    let mut reader = csv_reader(input, opts.delimiter);
    let header = reader
        .headers()
        .map_err(|source| IngestError::Csv { line: 1, source })?
        .clone();
    let mut idx = [0usize; 8];
    for (slot, (field, column)) in idx.iter_mut().zip(columns.fields()) {
        *slot =
            header
                .iter()
                .position(|h| h == column)
                .ok_or_else(|| IngestError::MissingColumn {
                    field,
                    column: column.to_string(),
                })?;
    }
    let [i_req, i_query, i_ts, i_rank, i_url, i_type, i_country, i_keyboard] = idx;

    let mut log = IssueLog::new(opts.mode);
    let mut out = ResultLog::default();
    for row in reader.records() {
        out.stats.rows += 1;
        let row = match row {
            Ok(row) => row,
            Err(err) => {
                out.stats.malformed += 1;
                log.malformed(err.position().map_or(0, |p| p.line()), err.to_string())?;
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let parsed = (|| -> Result<ResultRecord, String> {
            let get = |i: usize, name: &str| -> Result<&str, String> {
                row.get(i)
                    .map(str::trim)
                    .filter(|v| !v.is_empty())
                    .ok_or_else(|| format!("missing `{name}`"))
            };
            let rank = get(i_rank, "rank")?;
            let rank = rank
                .parse::<u32>()
                .ok()
                .filter(|r| *r >= 1)
                .ok_or_else(|| format!("invalid rank {rank:?}"))?;
            let result_type = if same(get(i_type, "result_type")?, &cleaning.organic_label) {
                ResultType::Organic
            } else {
                ResultType::Other
            };
            Ok(ResultRecord {
                request_id: get(i_req, "request_id")?.to_string(),
                query: get(i_query, "query")?.to_string(),
                timestamp: parse_timestamp(get(i_ts, "timestamp")?, &opts.timezone)?,
                rank,
                url: get(i_url, "url")?.to_string(),
                result_type,
                country: row.get(i_country).unwrap_or("").trim().to_string(),
                keyboard: row.get(i_keyboard).unwrap_or("").trim().to_string(),
            })
        })();
        let record = match parsed {
            Ok(r) => r,
            Err(reason) => {
                out.stats.malformed += 1;
                log.malformed(line, reason)?;
                continue;
            }
        };

        let stats = &mut out.stats;
        if !opts.in_window(record.timestamp) {
            stats.out_of_window += 1;
        } else if cleaning.organic_only && record.result_type != ResultType::Organic {
            stats.non_organic += 1;
        } else if cleaning
            .country
            .as_deref()
            .is_some_and(|c| !same(c, &record.country))
        {
            stats.wrong_country += 1;
        } else if cleaning
            .keyboard
            .as_deref()
            .is_some_and(|k| !same(k, &record.keyboard))
        {
            stats.wrong_keyboard += 1;
        } else {
            stats.kept += 1;
            out.records.push(record);
        }
    }
    Ok(log.finish(out))
}

/// Groups rows into result lists by request id, then lists into batches by
/// (canonical query, collection round).
///
/// A request whose ranks skip values is kept and reported; repeated ranks
/// within a request are fatal.
pub fn batches_from_records(
    records: &[ResultRecord],
    aliases: &QueryAliasMap,
    opts: &ParseOptions,
) -> Result<Parsed<Vec<RequestBatch>>, IngestError> {
    let mut log = IssueLog::new(opts.mode);

    let mut requests: BTreeMap<&str, Vec<&ResultRecord>> = BTreeMap::new();
    for r in records {
        requests.entry(r.request_id.as_str()).or_default().push(r);
    }

    let mut grouped: BTreeMap<(&str, DateTime<Utc>), Vec<ResultList>> = BTreeMap::new();
    for (request_id, mut rows) in requests {
        let query = aliases.canonical(&rows[0].query);
        if rows.iter().any(|r| aliases.canonical(&r.query) != query) {
            let msg = format!("request {request_id:?} mixes several queries");
            if log.strict() {
                return Err(IngestError::Invalid(msg));
            }
            log.note(None, format!("{msg}; dropped"));
            continue;
        }
        rows.sort_by_key(|r| r.rank);
        if let Some(w) = rows.windows(2).find(|w| w[0].rank == w[1].rank) {
            return Err(IngestError::DuplicateRank {
                request_id: request_id.to_string(),
                rank: w[0].rank,
            });
        }
        if rows
            .iter()
            .enumerate()
            .any(|(i, r)| r.rank as usize != i + 1)
        {
            log.note(
                None,
                format!("request {request_id:?} has gaps in its ranks"),
            );
        }

        let mut seen = HashSet::new();
        let mut urls = Vec::with_capacity(rows.len());
        for r in &rows {
            if seen.insert(r.url.as_str()) {
                urls.push(r.url.clone());
            } else {
                let msg = format!("request {request_id:?} lists {:?} twice", r.url);
                if log.strict() {
                    return Err(IngestError::Invalid(msg));
                }
                log.note(None, format!("{msg}; kept the higher rank"));
            }
        }

        let timestamp = rows
            .iter()
            .map(|r| r.timestamp)
            .min()
            .expect("non-empty request");
        let Some(round) = opts.binning.round_of(timestamp) else {
            log.note(
                None,
                format!("request {request_id:?} at {timestamp} is not near any scheduled round"),
            );
            continue;
        };
        grouped.entry((query, round)).or_default().push(ResultList {
            request_id: request_id.to_string(),
            timestamp,
            ranked_urls: Ranking::new(urls).expect("urls deduplicated above"),
        });
    }

    let batches = grouped
        .into_iter()
        .map(|((query, round), lists)| {
            RequestBatch::new(query, round, lists).expect("groups are non-empty")
        })
        .collect();
    Ok(log.finish(batches))
}

/// Parses a result log straight into request batches.
pub fn parse_results<R: Read>(
    input: R,
    aliases: &QueryAliasMap,
    columns: &ColumnMapping,
    cleaning: &CleaningPolicy,
    opts: &ParseOptions,
) -> Result<Parsed<Vec<RequestBatch>>, IngestError> {
    let rows = parse_result_records(input, columns, cleaning, opts)?;
    let mut batches = batches_from_records(&rows.items.records, aliases, opts)?;
    let mut issues = rows.issues;
    issues.append(&mut batches.issues);
    Ok(Parsed {
        items: batches.items,
        issues,
    })
}
