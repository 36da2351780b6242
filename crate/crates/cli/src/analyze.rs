use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use clap::{Args, ValueEnum};
use rankstab_core::{
    aggregate, fixed_reference_series, moving_average, pooled_observations_per_day,
    successive_series, AggregationPolicy, ComparisonMode, Params, RankedSnapshot, Series,
    SmoothingPolicy, SourceKind,
};
use rayon::prelude::*;

use crate::inputs::{InputArgs, Loaded};
use crate::svg::{render_grid, Panel, PanelLine, REFERENCE_LEVEL};
use crate::CliError;

pub const CSV_HEADER: &str = "timepoint,rbo_min,rbo_res,rbo_ext,rbo_ext_smoothed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Successive,
    Fixed,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<ComparisonMode> {
        match self {
            ModeArg::Successive => vec![ComparisonMode::Successive],
            ModeArg::Fixed => vec![ComparisonMode::Fixed],
            ModeArg::Both => vec![ComparisonMode::Successive, ComparisonMode::Fixed],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Svg,
    Both,
}

impl FormatArg {
    fn csv(self) -> bool {
        matches!(self, FormatArg::Csv | FormatArg::Both)
    }

    fn svg(self) -> bool {
        matches!(self, FormatArg::Svg | FormatArg::Both)
    }
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Compare each list with the previous one, with the earliest one, or both.
    #[arg(long, value_enum, default_value = "both")]
    pub mode: ModeArg,
    /// RBO persistence.
    #[arg(long, default_value_t = 0.85)]
    pub p: f64,
    /// Moving-average window in days, converted to a point count from each
    /// source kind's observed cadence.
    #[arg(long, default_value_t = 3.0)]
    pub window_days: f64,
    /// A URL survives aggregation when it appears in more than this share of
    /// a round's requests. Accepts `n/d` or a decimal.
    #[arg(long, default_value = "1/3")]
    pub threshold: String,
    #[arg(long, value_enum, default_value = "both")]
    pub format: FormatArg,
    #[arg(long, default_value = "rankstab-out")]
    pub out_dir: PathBuf,
}

/// Validated analysis parameters.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub modes: Vec<ComparisonMode>,
    pub params: Params,
    pub window_days: f64,
    pub aggregation: AggregationPolicy,
    pub format: FormatArg,
}

impl AnalyzeArgs {
    pub fn config(&self) -> Result<AnalysisConfig, CliError> {
        let params = Params::new(self.p).map_err(|e| CliError::Config(format!("--p: {e}")))?;
        if !(self.window_days.is_finite() && self.window_days > 0.0) {
            return Err(CliError::Config(format!(
                "--window-days must be positive, got {}",
                self.window_days
            )));
        }
        let aggregation: AggregationPolicy = self
            .threshold
            .parse()
            .map_err(|e| CliError::Config(format!("--threshold: {e}")))?;
        if self.input.suggestions.is_empty() && self.input.results.is_empty() {
            return Err(CliError::Config(
                "nothing to analyze: pass --suggestions and/or --results".into(),
            ));
        }
        Ok(AnalysisConfig {
            modes: self.mode.modes(),
            params,
            window_days: self.window_days,
            aggregation,
            format: self.format,
        })
    }
}

/// One (source kind, source, query) stream of snapshots in time order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct StreamKey {
    pub kind: SourceKind,
    pub source: String,
    pub query: String,
}

/// Raw and smoothed series of one stream under one comparison mode.
#[derive(Debug, Clone)]
pub struct SeriesOutput {
    pub key: StreamKey,
    pub mode: ComparisonMode,
    pub window: usize,
    pub raw: Series,
    pub smoothed: Series,
}

/// Collects snapshots per stream; result batches are aggregated first.
pub fn streams(
    loaded: &Loaded,
    policy: &AggregationPolicy,
) -> BTreeMap<StreamKey, Vec<RankedSnapshot>> {
    let aggregated: Vec<RankedSnapshot> = loaded
        .batches
        .par_iter()
        .map(|batch| RankedSnapshot {
            query: batch.query().to_string(),
            source: loaded.result_source.clone(),
            kind: SourceKind::Results,
            timepoint: batch.timepoint(),
            ranking: aggregate(batch, policy),
        })
        .collect();

    let mut out: BTreeMap<StreamKey, Vec<RankedSnapshot>> = BTreeMap::new();
    for snap in loaded.snapshots.iter().cloned().chain(aggregated) {
        let key = StreamKey {
            kind: snap.kind,
            source: snap.source.clone(),
            query: snap.query.clone(),
        };
        out.entry(key).or_default().push(snap);
    }
    for snaps in out.values_mut() {
        snaps.sort_by_key(|s| s.timepoint);
    }
    out
}

/// Smoothing window per source kind from the cadence of all its streams.
pub fn windows(
    streams: &BTreeMap<StreamKey, Vec<RankedSnapshot>>,
    window_days: f64,
) -> BTreeMap<SourceKind, SmoothingPolicy> {
    let mut timepoints: BTreeMap<SourceKind, Vec<Vec<DateTime<Utc>>>> = BTreeMap::new();
    for (key, snaps) in streams {
        timepoints
            .entry(key.kind)
            .or_default()
            .push(snaps.iter().map(|s| s.timepoint).collect());
    }
    timepoints
        .into_iter()
        .map(|(kind, streams)| {
            let per_day = pooled_observations_per_day(streams.iter().map(Vec::as_slice));
            (kind, SmoothingPolicy::from_cadence(window_days, per_day))
        })
        .collect()
}

/// Computes every series. The result order is the stream order, then the
/// mode order, whatever order the parallel work finishes in.
pub fn compute(
    streams: &BTreeMap<StreamKey, Vec<RankedSnapshot>>,
    config: &AnalysisConfig,
) -> Vec<SeriesOutput> {
    let windows = windows(streams, config.window_days);
    let jobs: Vec<(&StreamKey, &Vec<RankedSnapshot>, ComparisonMode)> = streams
        .iter()
        .filter(|(key, snaps)| {
            let enough = snaps.len() >= 2;
            if !enough {
                log::warn!(
                    "{} {} {:?}: {} snapshot(s), no series",
                    key.kind.as_str(),
                    key.source,
                    key.query,
                    snaps.len()
                );
            }
            enough
        })
        .flat_map(|(key, snaps)| config.modes.iter().map(move |m| (key, snaps, *m)))
        .collect();

    jobs.into_par_iter()
        .map(|(key, snaps, mode)| {
            let raw = match mode {
                ComparisonMode::Successive => successive_series(snaps, &config.params),
                ComparisonMode::Fixed => fixed_reference_series(snaps, &config.params),
            }
            .expect("streams are grouped, sorted and have at least two snapshots");
            let policy = windows[&key.kind];
            let smoothed = moving_average(&raw, &policy);
            SeriesOutput {
                key: key.clone(),
                mode,
                window: policy.window(),
                raw,
                smoothed,
            }
        })
        .collect()
}

/// CSV body for one series, six decimals, timepoints in UTC.
pub fn series_csv(out: &SeriesOutput) -> String {
    let mut text = String::with_capacity(64 * (out.raw.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for (raw, smooth) in out.raw.points.iter().zip(&out.smoothed.points) {
        let _ = writeln!(
            text,
            "{},{:.6},{:.6},{:.6},{:.6}",
            raw.timepoint.to_rfc3339_opts(SecondsFormat::Secs, true),
            raw.rbo.min,
            raw.rbo.res,
            raw.rbo.ext,
            smooth.value
        );
    }
    text
}

/// File-name-safe form of a query: letters and digits kept, runs of
/// anything else collapsed to `-`.
pub fn slug(text: &str) -> String {
    let mut out = String::new();
    for c in text.trim().chars().flat_map(char::to_lowercase) {
        if c.is_alphanumeric() {
            out.push(c);
        } else if !out.ends_with('-') {
            out.push('-');
        }
    }
    let out = out.trim_matches('-').to_string();
    if out.is_empty() {
        "query".into()
    } else {
        out
    }
}

/// Output file name per series: `{mode}_{kind}_{source}_{query}.csv`.
/// Queries whose slugs collide get a numeric suffix in stream order.
pub fn csv_names(outputs: &[SeriesOutput]) -> Vec<String> {
    let mut taken: BTreeMap<String, usize> = BTreeMap::new();
    let mut by_stream: BTreeMap<(&StreamKey, ComparisonMode), String> = BTreeMap::new();
    outputs
        .iter()
        .map(|o| {
            by_stream
                .entry((&o.key, o.mode))
                .or_insert_with(|| {
                    let base = format!(
                        "{}_{}_{}_{}",
                        o.mode.as_str(),
                        o.key.kind.as_str(),
                        slug(&o.key.source),
                        slug(&o.key.query)
                    );
                    let n = taken.entry(base.clone()).or_insert(0);
                    *n += 1;
                    if *n == 1 {
                        format!("{base}.csv")
                    } else {
                        format!("{base}-{n}.csv")
                    }
                })
                .clone()
        })
        .collect()
}

/// One panel per query, each with a line per (kind, source) stream.
pub fn panels(
    outputs: &[SeriesOutput],
    mode: ComparisonMode,
    missing: &BTreeSet<&str>,
) -> Vec<Panel> {
    let mut by_query: BTreeMap<&str, Vec<&SeriesOutput>> = BTreeMap::new();
    for o in outputs.iter().filter(|o| o.mode == mode) {
        by_query.entry(o.key.query.as_str()).or_default().push(o);
    }
    by_query
        .into_iter()
        .map(|(query, series)| Panel {
            title: query.to_string(),
            flagged: missing.contains(query),
            lines: series
                .into_iter()
                .map(|o| PanelLine {
                    label: format!(
                        "{} ({}, n = {})",
                        o.key.kind.as_str(),
                        o.key.source,
                        o.window
                    ),
                    class: o.key.kind.as_str().to_string(),
                    points: o
                        .smoothed
                        .points
                        .iter()
                        .map(|p| (p.timepoint, p.value))
                        .collect(),
                })
                .collect(),
        })
        .collect()
}

/// Files written so far; removed again unless the run completes.
struct Written {
    paths: Vec<PathBuf>,
    committed: bool,
}

impl Written {
    fn write(&mut self, path: PathBuf, contents: &str) -> Result<(), CliError> {
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        self.paths.push(path);
        Ok(())
    }
}

impl Drop for Written {
    fn drop(&mut self) {
        if !self.committed {
            for path in &self.paths {
                let _ = std::fs::remove_file(path);
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct AnalyzeSummary {
    pub files: Vec<PathBuf>,
    pub series: usize,
    pub windows: Vec<(SourceKind, usize)>,
}

pub fn run(args: &AnalyzeArgs) -> Result<AnalyzeSummary, CliError> {
    let config = args.config()?;
    let loaded = args.input.load()?;
    let streams = streams(&loaded, &config.aggregation);
    let outputs = compute(&streams, &config);
    write_outputs(&args.out_dir, &outputs, &config, &loaded)
}

fn write_outputs(
    out_dir: &Path,
    outputs: &[SeriesOutput],
    config: &AnalysisConfig,
    loaded: &Loaded,
) -> Result<AnalyzeSummary, CliError> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", out_dir.display())))?;
    let mut written = Written {
        paths: Vec::new(),
        committed: false,
    };

    if config.format.csv() {
        let bodies: Vec<String> = outputs.par_iter().map(series_csv).collect();
        for (name, body) in csv_names(outputs).into_iter().zip(&bodies) {
            written.write(out_dir.join(name), body)?;
        }
    }
    if config.format.svg() {
        let missing: BTreeSet<&str> = loaded.aliases.missing().collect();
        for mode in &config.modes {
            let panels = panels(outputs, *mode, &missing);
            if panels.is_empty() {
                continue;
            }
            let title = match mode {
                ComparisonMode::Successive => "RBO with the previous time-point",
                ComparisonMode::Fixed => "RBO with the earliest time-point",
            };
            let svg = render_grid(title, &panels, REFERENCE_LEVEL);
            written.write(out_dir.join(format!("{}.svg", mode.as_str())), &svg)?;
        }
    }

    let mut windows: BTreeMap<SourceKind, usize> = BTreeMap::new();
    for o in outputs {
        windows.insert(o.key.kind, o.window);
    }
    written.committed = true;
    Ok(AnalyzeSummary {
        files: std::mem::take(&mut written.paths),
        series: outputs.len(),
        windows: windows.into_iter().collect(),
    })
}
