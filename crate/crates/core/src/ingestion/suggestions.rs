//! The suggestion log: `source,queryterm,date,suggestterm,position`, with
//! 0-based positions.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use chrono::{DateTime, Utc};
use chrono_tz::Tz;

use super::{
    csv_reader, format_timestamp, parse_timestamp, IngestError, IssueLog, ParseOptions, Parsed,
    QueryAliasMap,
};
use crate::rbo::Ranking;
use crate::timeseries::{RankedSnapshot, SourceKind};

pub const SUGGESTION_HEADER: [&str; 5] = ["source", "queryterm", "date", "suggestterm", "position"];

/// One row of the suggestion log.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SuggestionRecord {
    pub source: String,
    pub queryterm: String,
    pub date: DateTime<Utc>,
    pub suggestterm: String,
    pub position: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SuggestionStats {
    /// Data rows read, excluding the header.
    pub rows: usize,
    pub malformed: usize,
    pub out_of_window: usize,
    pub kept: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SuggestionLog {
    pub records: Vec<SuggestionRecord>,
    pub stats: SuggestionStats,
}

/// Row-level parse: validates the header, converts timestamps to UTC and
/// drops rows outside the date window.
pub fn parse_suggestion_records<R: Read>(
    input: R,
    opts: &ParseOptions,
) -> Result<Parsed<SuggestionLog>, IngestError> {
    let mut reader = csv_reader(input, opts.delimiter);
    let header = reader
        .headers()
        .map_err(|source| IngestError::Csv { line: 1, source })?
        .clone();
    let found: Vec<&str> = header.iter().collect();
    if found != SUGGESTION_HEADER {
        return Err(IngestError::Header {
            expected: SUGGESTION_HEADER.join(","),
            found: found.join(","),
        });
    }

    let mut log = IssueLog::new(opts.mode);
    let mut out = SuggestionLog::default();
    for row in reader.records() {
        out.stats.rows += 1;
        let row = match row {
            Ok(row) => row,
            Err(err) => {
                let line = err.position().map_or(0, |p| p.line());
                out.stats.malformed += 1;
                log.malformed(line, err.to_string())?;
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        match parse_row(&row, &opts.timezone) {
            Ok(record) => {
                if opts.in_window(record.date) {
                    out.stats.kept += 1;
                    out.records.push(record);
                } else {
                    out.stats.out_of_window += 1;
                }
            }
            Err(reason) => {
                out.stats.malformed += 1;
                log.malformed(line, reason)?;
            }
        }
    }
    Ok(log.finish(out))
}

fn parse_row(row: &csv::StringRecord, tz: &Tz) -> Result<SuggestionRecord, String> {
    if row.len() != SUGGESTION_HEADER.len() {
        return Err(format!(
            "expected {} fields, found {}",
            SUGGESTION_HEADER.len(),
            row.len()
        ));
    }
    let field = |idx: usize| -> Result<&str, String> {
        let value = row[idx].trim();
        if value.is_empty() {
            Err(format!("empty `{}`", SUGGESTION_HEADER[idx]))
        } else {
            Ok(value)
        }
    };
    let position = field(4)?
        .parse::<u32>()
        .map_err(|_| format!("invalid position {:?}", &row[4]))?;
    Ok(SuggestionRecord {
        source: field(0)?.to_string(),
        queryterm: field(1)?.to_string(),
        date: parse_timestamp(field(2)?, tz)?,
        suggestterm: field(3)?.to_string(),
        position,
    })
}

/// Groups records into one snapshot per (source, canonical query, round).
///
/// Each fetch (same source, query and timestamp) must have distinct
/// positions. When a round holds more than one fetch the earliest is kept.
pub fn snapshots_from_records(
    records: &[SuggestionRecord],
    aliases: &QueryAliasMap,
    opts: &ParseOptions,
) -> Result<Parsed<Vec<RankedSnapshot>>, IngestError> {
    let mut log = IssueLog::new(opts.mode);

    let mut fetches: BTreeMap<(&str, &str, DateTime<Utc>), Vec<(u32, &str)>> = BTreeMap::new();
    for r in records {
        fetches
            .entry((r.source.as_str(), aliases.canonical(&r.queryterm), r.date))
            .or_default()
            .push((r.position, r.suggestterm.as_str()));
    }

    let mut rounds: BTreeMap<(&str, &str, DateTime<Utc>), (DateTime<Utc>, Ranking)> =
        BTreeMap::new();
    for ((source, query, date), mut rows) in fetches {
        rows.sort_by_key(|(pos, _)| *pos);
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(IngestError::DuplicatePosition {
                source_name: source.to_string(),
                query: query.to_string(),
                date,
                position: w[0].0,
            });
        }
        let gapless = rows
            .iter()
            .enumerate()
            .all(|(i, (pos, _))| *pos as usize == i);
        if !gapless {
            let msg = format!("{source}/{query} fetched at {date}: positions are not 0..n-1");
            if log.strict() {
                return Err(IngestError::Invalid(msg));
            }
            log.note(None, msg);
        }

        let mut seen = BTreeSet::new();
        let mut terms = Vec::with_capacity(rows.len());
        for (_, term) in rows {
            if seen.insert(term) {
                terms.push(term.to_string());
            } else {
                let msg =
                    format!("{source}/{query} fetched at {date}: repeated suggestion {term:?}");
                if log.strict() {
                    return Err(IngestError::Invalid(msg));
                }
                log.note(None, format!("{msg}, later copy dropped"));
            }
        }

        let Some(round) = opts.binning.round_of(date) else {
            log.note(
                None,
                format!("{source}/{query} fetched at {date} is not near any scheduled round"),
            );
            continue;
        };
        let ranking = Ranking::new(terms).expect("terms deduplicated above");
        match rounds.get(&(source, query, round)) {
            Some((kept, _)) => log.note(
                None,
                format!(
                    "{source}/{query}: fetch at {date} shares round {round} with {kept}; kept the earlier"
                ),
            ),
            None => {
                rounds.insert((source, query, round), (date, ranking));
            }
        }
    }

    let snapshots = rounds
        .into_iter()
        .map(|((source, query, round), (_, ranking))| RankedSnapshot {
            query: query.to_string(),
            source: source.to_string(),
            kind: SourceKind::Suggestions,
            timepoint: round,
            ranking,
        })
        .collect();
    Ok(log.finish(snapshots))
}

/// Parses a suggestion log straight into snapshots.
pub fn parse_suggestions<R: Read>(
    input: R,
    aliases: &QueryAliasMap,
    opts: &ParseOptions,
) -> Result<Parsed<Vec<RankedSnapshot>>, IngestError> {
    let rows = parse_suggestion_records(input, opts)?;
    let mut snapshots = snapshots_from_records(&rows.items.records, aliases, opts)?;
    let mut issues = rows.issues;
    issues.append(&mut snapshots.issues);
    Ok(Parsed {
        items: snapshots.items,
        issues,
    })
}

/// Writes records in the suggestion log format, timestamps in local time of `tz`.
pub fn write_suggestion_records<W: Write>(
    records: &[SuggestionRecord],
    writer: W,
    tz: &Tz,
    include_header: bool,
) -> Result<(), IngestError> {
    let mut out = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    let csv_err = |source: csv::Error| IngestError::Csv { line: 0, source };
    if include_header {
        out.write_record(SUGGESTION_HEADER).map_err(csv_err)?;
    }
    for r in records {
        out.write_record([
            r.source.as_str(),
            r.queryterm.as_str(),
            &format_timestamp(r.date, tz),
            r.suggestterm.as_str(),
            &r.position.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes snapshots back out as a suggestion log, one fetch per snapshot
/// stamped with the round's anchor time.
pub fn write_snapshots<W: Write>(
    snapshots: &[RankedSnapshot],
    writer: W,
    tz: &Tz,
) -> Result<(), IngestError> {
    let records: Vec<SuggestionRecord> = snapshots
        .iter()
        .flat_map(|s| {
            s.ranking
                .iter()
                .enumerate()
                .map(|(pos, term)| SuggestionRecord {
                    source: s.source.clone(),
                    queryterm: s.query.clone(),
                    date: s.timepoint,
                    suggestterm: term.clone(),
                    position: pos as u32,
                })
        })
        .collect();
    write_suggestion_records(&records, writer, tz, true)
}
