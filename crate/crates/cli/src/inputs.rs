//! Loading of the suggestion and result logs shared by `analyze` and `report`.

use std::fs::File;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use chrono_tz::Tz;
use clap::Args;
use rankstab_core::ingestion::{
    batches_from_records, parse_result_records, parse_suggestion_records, snapshots_from_records,
    CleaningPolicy, ColumnMapping, DateWindow, ParseOptions, QueryAliasMap, ResultRecord,
    ResultStats, RowIssue, SuggestionRecord, SuggestionStats,
};
use rankstab_core::{RankedSnapshot, RequestBatch};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Suggestion log in the `source,queryterm,date,suggestterm,position` format.
    #[arg(long = "suggestions", value_name = "FILE")]
    pub suggestions: Vec<PathBuf>,
    /// Result log; its columns are named in the `--columns` file.
    #[arg(long = "results", value_name = "FILE")]
    pub results: Vec<PathBuf>,
    /// TOML file with `[columns]` and `[cleaning]` tables for the result logs.
    #[arg(long, value_name = "FILE")]
    pub columns: Option<PathBuf>,
    /// Query alias map with `raw = canonical` and `key = MISSING` lines.
    #[arg(long, value_name = "FILE")]
    pub aliases: Option<PathBuf>,
    /// First local date to keep.
    #[arg(long, value_name = "YYYY-MM-DD", default_value = "2017-08-04")]
    pub from: NaiveDate,
    /// Last local date to keep.
    #[arg(long, value_name = "YYYY-MM-DD", default_value = "2017-09-30")]
    pub to: NaiveDate,
    /// Zone that the timestamps in the logs are written in.
    #[arg(long, value_name = "TZ", default_value = "Europe/Berlin")]
    pub timezone: Tz,
    /// Fail on the first malformed row instead of skipping it.
    #[arg(long)]
    pub strict: bool,
}

/// Contents of the `--columns` file.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResultSourceConfig {
    /// Engine name recorded for the result streams.
    pub source: String,
    pub delimiter: char,
    pub columns: ColumnMapping,
    pub cleaning: CleaningPolicy,
}

impl Default for ResultSourceConfig {
    fn default() -> Self {
        Self {
            source: "google".into(),
            delimiter: ',',
            columns: ColumnMapping::default(),
            cleaning: CleaningPolicy::default(),
        }
    }
}

impl ResultSourceConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let config: Self = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e.message())))?;
        if !config.delimiter.is_ascii() {
            return Err(CliError::Config(format!(
                "{}: field `delimiter` must be a single ASCII character",
                path.display()
            )));
        }
        Ok(config)
    }
}

/// Everything read from the input files, after cleaning and alias mapping.
#[derive(Debug, Default)]
pub struct Loaded {
    pub aliases: QueryAliasMap,
    pub result_source: String,
    pub suggestion_records: Vec<SuggestionRecord>,
    pub suggestion_stats: SuggestionStats,
    pub snapshots: Vec<RankedSnapshot>,
    pub result_records: Vec<ResultRecord>,
    pub result_stats: ResultStats,
    pub batches: Vec<RequestBatch>,
    pub issues: usize,
}

impl InputArgs {
    fn options(&self, base: ParseOptions) -> Result<ParseOptions, CliError> {
        if self.from > self.to {
            return Err(CliError::Config(format!(
                "--from {} is after --to {}",
                self.from, self.to
            )));
        }
        let mut opts = ParseOptions {
            timezone: self.timezone,
            date_window: Some(DateWindow::new(self.from, self.to)),
            ..base
        };
        opts.binning = opts.binning.with_timezone(self.timezone);
        Ok(if self.strict { opts.strict() } else { opts })
    }

    pub fn load_aliases(&self) -> Result<QueryAliasMap, CliError> {
        let Some(path) = &self.aliases else {
            return Ok(QueryAliasMap::new());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        text.parse()
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn load(&self) -> Result<Loaded, CliError> {
        let suggestion_opts = self.options(ParseOptions::suggestions())?;
        let result_config = match &self.columns {
            Some(path) => ResultSourceConfig::load(path)?,
            None => ResultSourceConfig::default(),
        };
        let mut result_opts = self.options(ParseOptions::results())?;
        result_opts.delimiter = result_config.delimiter as u8;

        let mut loaded = Loaded {
            aliases: self.load_aliases()?,
            result_source: result_config.source.clone(),
            ..Loaded::default()
        };

        for path in &self.suggestions {
            let parsed = parse_suggestion_records(open(path)?, &suggestion_opts)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            loaded.issues += report_issues(path, &parsed.issues);
            let stats = parsed.items.stats;
            let total = &mut loaded.suggestion_stats;
            total.rows += stats.rows;
            total.malformed += stats.malformed;
            total.out_of_window += stats.out_of_window;
            total.kept += stats.kept;
            loaded.suggestion_records.extend(parsed.items.records);
        }
        let snapshots = snapshots_from_records(
            &loaded.suggestion_records,
            &loaded.aliases,
            &suggestion_opts,
        )
        .map_err(|e| CliError::Input(format!("suggestions: {e}")))?;
        loaded.issues += report_issues(Path::new("suggestions"), &snapshots.issues);
        loaded.snapshots = snapshots.items;

        for path in &self.results {
            let parsed = parse_result_records(
                open(path)?,
                &result_config.columns,
                &result_config.cleaning,
                &result_opts,
            )
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            loaded.issues += report_issues(path, &parsed.issues);
            let s = parsed.items.stats;
            let total = &mut loaded.result_stats;
            total.rows += s.rows;
            total.malformed += s.malformed;
            total.out_of_window += s.out_of_window;
            total.non_organic += s.non_organic;
            total.wrong_country += s.wrong_country;
            total.wrong_keyboard += s.wrong_keyboard;
            total.kept += s.kept;
            loaded.result_records.extend(parsed.items.records);
        }
        let batches = batches_from_records(&loaded.result_records, &loaded.aliases, &result_opts)
            .map_err(|e| CliError::Input(format!("results: {e}")))?;
        loaded.issues += report_issues(Path::new("results"), &batches.issues);
        loaded.batches = batches.items;
        Ok(loaded)
    }
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

const SHOWN_ISSUES: usize = 20;

fn report_issues(path: &Path, issues: &[RowIssue]) -> usize {
    for issue in issues.iter().take(SHOWN_ISSUES) {
        log::warn!("{}: {issue}", path.display());
    }
    if issues.len() > SHOWN_ISSUES {
        log::warn!(
            "{}: {} more issue(s) not shown",
            path.display(),
            issues.len() - SHOWN_ISSUES
        );
    }
    issues.len()
}
