use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use clap::Args;
use rankstab_core::ingestion::{ResultStats, SuggestionStats, MISSING_MARKER};
use rankstab_core::{pooled_observations_per_day, SourceKind};

use crate::inputs::{InputArgs, Loaded};
use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub input: InputArgs,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceCounts {
    pub rows: usize,
    pub fetches: usize,
    pub unique_terms: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cadence {
    pub rounds_per_day: Option<f64>,
    pub first: Option<DateTime<Utc>>,
    pub last: Option<DateTime<Utc>>,
}

/// Rounds covered per query and source kind. `None` marks a query declared
/// missing from the suggestion data.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Coverage {
    pub suggestions: Option<usize>,
    pub results: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub suggestion_stats: SuggestionStats,
    pub suggestion_sources: BTreeMap<String, SourceCounts>,
    pub suggestion_fetches: usize,
    pub suggestion_snapshots: usize,
    pub unique_suggestion_terms: usize,
    pub result_stats: ResultStats,
    pub requests: usize,
    pub unique_result_lists: usize,
    pub result_rounds: usize,
    pub coverage: BTreeMap<String, Coverage>,
    pub cadence: BTreeMap<SourceKind, Cadence>,
}

impl Report {
    pub fn from_loaded(loaded: &Loaded) -> Self {
        let mut report = Report {
            suggestion_stats: loaded.suggestion_stats,
            result_stats: loaded.result_stats,
            suggestion_snapshots: loaded.snapshots.len(),
            result_rounds: loaded.batches.len(),
            ..Report::default()
        };

        let mut fetches: BTreeSet<(&str, &str, DateTime<Utc>)> = BTreeSet::new();
        let mut terms: BTreeSet<&str> = BTreeSet::new();
        let mut per_source: BTreeMap<
            &str,
            (usize, BTreeSet<(&str, DateTime<Utc>)>, BTreeSet<&str>),
        > = BTreeMap::new();
        for r in &loaded.suggestion_records {
            fetches.insert((&r.source, &r.queryterm, r.date));
            terms.insert(&r.suggestterm);
            let entry = per_source.entry(&r.source).or_default();
            entry.0 += 1;
            entry.1.insert((&r.queryterm, r.date));
            entry.2.insert(&r.suggestterm);
        }
        report.suggestion_fetches = fetches.len();
        report.unique_suggestion_terms = terms.len();
        report.suggestion_sources = per_source
            .into_iter()
            .map(|(source, (rows, f, t))| {
                (
                    source.to_string(),
                    SourceCounts {
                        rows,
                        fetches: f.len(),
                        unique_terms: t.len(),
                    },
                )
            })
            .collect();

        let mut lists: BTreeSet<(&str, &[String])> = BTreeSet::new();
        for batch in &loaded.batches {
            for list in batch.lists() {
                report.requests += 1;
                lists.insert((batch.query(), list.ranked_urls.items()));
            }
        }
        report.unique_result_lists = lists.len();

        // Every query seen or named in the alias map.
        let mut coverage: BTreeMap<String, Coverage> = BTreeMap::new();
        for key in loaded.aliases.configured_keys() {
            coverage.entry(key.to_string()).or_default();
        }
        let mut suggestion_rounds: BTreeMap<&str, usize> = BTreeMap::new();
        for s in &loaded.snapshots {
            *suggestion_rounds.entry(&s.query).or_default() += 1;
            coverage.entry(s.query.clone()).or_default();
        }
        for b in &loaded.batches {
            coverage.entry(b.query().to_string()).or_default().results += 1;
        }
        for (query, c) in coverage.iter_mut() {
            let rounds = suggestion_rounds.get(query.as_str()).copied().unwrap_or(0);
            c.suggestions = if rounds == 0 && loaded.aliases.is_missing(query) {
                None
            } else {
                Some(rounds)
            };
        }
        report.coverage = coverage;

        let mut timepoints: BTreeMap<SourceKind, BTreeMap<&str, Vec<DateTime<Utc>>>> =
            BTreeMap::new();
        for s in &loaded.snapshots {
            timepoints
                .entry(SourceKind::Suggestions)
                .or_default()
                .entry(&s.query)
                .or_default()
                .push(s.timepoint);
        }
        for b in &loaded.batches {
            timepoints
                .entry(SourceKind::Results)
                .or_default()
                .entry(b.query())
                .or_default()
                .push(b.timepoint());
        }
        for kind in [SourceKind::Suggestions, SourceKind::Results] {
            let streams = timepoints.remove(&kind).unwrap_or_default();
            let all = streams.values().flatten();
            report.cadence.insert(
                kind,
                Cadence {
                    rounds_per_day: pooled_observations_per_day(
                        streams.values().map(Vec::as_slice),
                    ),
                    first: all.clone().min().copied(),
                    last: all.max().copied(),
                },
            );
        }
        report
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &self.suggestion_stats;
        writeln!(f, "suggestions")?;
        writeln!(f, "  rows read: {}", s.rows)?;
        writeln!(f, "  malformed rows: {}", s.malformed)?;
        writeln!(f, "  rows outside date window: {}", s.out_of_window)?;
        writeln!(f, "  rows kept: {}", s.kept)?;
        writeln!(f, "  fetches: {}", self.suggestion_fetches)?;
        writeln!(f, "  snapshots: {}", self.suggestion_snapshots)?;
        writeln!(
            f,
            "  unique suggestion terms: {}",
            self.unique_suggestion_terms
        )?;
        for (source, c) in &self.suggestion_sources {
            writeln!(
                f,
                "  source {source}: {} rows, {} fetches, {} unique terms",
                c.rows, c.fetches, c.unique_terms
            )?;
        }

        let r = &self.result_stats;
        writeln!(f, "results")?;
        writeln!(f, "  rows read: {}", r.rows)?;
        writeln!(f, "  malformed rows: {}", r.malformed)?;
        writeln!(f, "  rows outside date window: {}", r.out_of_window)?;
        writeln!(f, "  non-organic rows: {}", r.non_organic)?;
        writeln!(f, "  rows from other countries: {}", r.wrong_country)?;
        writeln!(
            f,
            "  rows with other keyboard layouts: {}",
            r.wrong_keyboard
        )?;
        writeln!(f, "  rows kept: {}", r.kept)?;
        writeln!(f, "  requests: {}", self.requests)?;
        writeln!(f, "  unique result lists: {}", self.unique_result_lists)?;
        writeln!(f, "  rounds: {}", self.result_rounds)?;

        writeln!(f, "coverage (rounds per query)")?;
        let width = self
            .coverage
            .keys()
            .map(|q| q.chars().count())
            .max()
            .unwrap_or(5)
            .max(5);
        writeln!(
            f,
            "  {:<width$}  {:>11}  {:>7}",
            "query", "suggestions", "results"
        )?;
        for (query, c) in &self.coverage {
            let sugg = c
                .suggestions
                .map_or(MISSING_MARKER.to_string(), |n| n.to_string());
            writeln!(f, "  {query:<width$}  {sugg:>11}  {:>7}", c.results)?;
        }

        writeln!(f, "cadence")?;
        for (kind, c) in &self.cadence {
            match (c.rounds_per_day, c.first, c.last) {
                (Some(rate), Some(first), Some(last)) => writeln!(
                    f,
                    "  {}: {rate:.2} rounds/day, {} to {}",
                    kind.as_str(),
                    first.format("%Y-%m-%d %H:%M UTC"),
                    last.format("%Y-%m-%d %H:%M UTC")
                )?,
                _ => writeln!(f, "  {}: n/a", kind.as_str())?,
            }
        }
        Ok(())
    }
}

pub fn run(args: &ReportArgs) -> Result<Report, CliError> {
    let loaded = args.input.load()?;
    Ok(Report::from_loaded(&loaded))
}
