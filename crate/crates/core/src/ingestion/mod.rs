//! Parsing and normalisation of the suggestion and result logs.
//!
//! Both logs are delimiter-separated text with a header row. Row-level
//! parsing yields normalised records; the grouping functions then build
//! [`RankedSnapshot`](crate::RankedSnapshot)s and
//! [`RequestBatch`](crate::RequestBatch)es. Local timestamps are read in the
//! configured zone and stored as UTC.

mod aliases;
mod results;
mod rounds;
mod suggestions;

pub use aliases::{AliasError, QueryAliasMap, MISSING_MARKER};
pub use results::{
    batches_from_records, parse_result_records, parse_results, CleaningPolicy, ColumnMapping,
    ResultLog, ResultRecord, ResultStats, ResultType,
};
pub use rounds::{bin_rounds, BinningPolicy};
pub use suggestions::{
    parse_suggestion_records, parse_suggestions, snapshots_from_records, write_snapshots,
    write_suggestion_records, SuggestionLog, SuggestionRecord, SuggestionStats, SUGGESTION_HEADER,
};

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use chrono_tz::Tz;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Malformed rows abort the parse.
    Strict,
    /// Malformed rows are reported and skipped.
    #[default]
    Lenient,
}

/// Inclusive range of local calendar dates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DateWindow {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl DateWindow {
    pub fn new(from: NaiveDate, to: NaiveDate) -> Self {
        Self { from, to }
    }

    /// 4 August to 30 September 2017, the federal-election observation period.
    pub fn election_2017() -> Self {
        Self {
            from: NaiveDate::from_ymd_opt(2017, 8, 4).expect("valid date"),
            to: NaiveDate::from_ymd_opt(2017, 9, 30).expect("valid date"),
        }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.from <= date && date <= self.to
    }
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub delimiter: u8,
    pub mode: ParseMode,
    /// Zone that naive timestamps in the input are written in.
    pub timezone: Tz,
    /// Rows whose local date falls outside are dropped. `None` keeps everything.
    pub date_window: Option<DateWindow>,
    pub binning: BinningPolicy,
}

impl ParseOptions {
    pub fn suggestions() -> Self {
        Self {
            delimiter: b',',
            mode: ParseMode::Lenient,
            timezone: chrono_tz::Europe::Berlin,
            date_window: Some(DateWindow::election_2017()),
            binning: BinningPolicy::twice_daily(),
        }
    }

    pub fn results() -> Self {
        Self {
            binning: BinningPolicy::six_daily(),
            ..Self::suggestions()
        }
    }

    pub fn strict(mut self) -> Self {
        self.mode = ParseMode::Strict;
        self
    }

    pub fn without_date_window(mut self) -> Self {
        self.date_window = None;
        self
    }

    pub(crate) fn in_window(&self, ts: DateTime<Utc>) -> bool {
        self.date_window
            .is_none_or(|w| w.contains(ts.with_timezone(&self.timezone).date_naive()))
    }
}

/// A problem with one input row that was skipped or repaired in lenient mode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowIssue {
    /// 1-based line number in the input, when the issue concerns one row.
    pub line: Option<u64>,
    pub message: String,
}

impl std::fmt::Display for RowIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Parse output together with the issues met along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub items: T,
    pub issues: Vec<RowIssue>,
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Csv {
        line: u64,
        #[source]
        source: csv::Error,
    },
    #[error("unexpected header {found:?}, expected {expected:?}")]
    Header { expected: String, found: String },
    #[error("column {column:?} for field `{field}` not found in header")]
    MissingColumn { field: &'static str, column: String },
    #[error("line {line}: {reason}")]
    Malformed { line: u64, reason: String },
    #[error("duplicate position {position} for {source_name:?}/{query:?} fetched at {date}")]
    DuplicatePosition {
        source_name: String,
        query: String,
        date: DateTime<Utc>,
        position: u32,
    },
    #[error("duplicate rank {rank} in request {request_id:?}")]
    DuplicateRank { request_id: String, rank: u32 },
    #[error("{0}")]
    Invalid(String),
}

pub(crate) struct IssueLog {
    mode: ParseMode,
    issues: Vec<RowIssue>,
}

impl IssueLog {
    pub(crate) fn new(mode: ParseMode) -> Self {
        Self {
            mode,
            issues: Vec::new(),
        }
    }

    /// A malformed row: fatal in strict mode, recorded otherwise.
    pub(crate) fn malformed(&mut self, line: u64, reason: String) -> Result<(), IngestError> {
        match self.mode {
            ParseMode::Strict => Err(IngestError::Malformed { line, reason }),
            ParseMode::Lenient => {
                self.note(Some(line), reason);
                Ok(())
            }
        }
    }

    /// A non-fatal observation, recorded in both modes.
    pub(crate) fn note(&mut self, line: Option<u64>, message: String) {
        let issue = RowIssue { line, message };
        log::warn!("{issue}");
        self.issues.push(issue);
    }

    pub(crate) fn strict(&self) -> bool {
        self.mode == ParseMode::Strict
    }

    pub(crate) fn finish<T>(self, items: T) -> Parsed<T> {
        Parsed {
            items,
            issues: self.issues,
        }
    }
}

const NAIVE_FORMATS: [&str; 2] = ["%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M:%S%.f"];

/// Parses an ISO-8601 timestamp with a space or `T` separator. Naive values
/// are read in `tz`; values with an explicit offset keep it.
pub fn parse_timestamp(text: &str, tz: &Tz) -> Result<DateTime<Utc>, String> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Ok(dt.with_timezone(&Utc));
    }
    let naive = NAIVE_FORMATS
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(text, fmt).ok())
        .ok_or_else(|| format!("unparseable timestamp {text:?}"))?;
    tz.from_local_datetime(&naive)
        .earliest()
        .map(|dt| dt.with_timezone(&Utc))
        .ok_or_else(|| format!("timestamp {text:?} does not exist in {tz}"))
}

/// Formats an instant as a naive local timestamp, `YYYY-MM-DD HH:MM:SS`.
pub fn format_timestamp(ts: DateTime<Utc>, tz: &Tz) -> String {
    ts.with_timezone(tz).format("%Y-%m-%d %H:%M:%S").to_string()
}

pub(crate) fn csv_reader<R: std::io::Read>(input: R, delimiter: u8) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::Headers)
        .from_reader(input)
}
