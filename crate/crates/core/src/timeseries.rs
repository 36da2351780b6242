//! Per-query stability series and their moving-average smoothing.

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use thiserror::Error;

use crate::rbo::{rbo, Ranking, RboParams, RboResult};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SourceKind {
    Results,
    Suggestions,
}

impl SourceKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SourceKind::Results => "results",
            SourceKind::Suggestions => "suggestions",
        }
    }
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// What each snapshot is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComparisonMode {
    /// The immediately preceding snapshot.
    Successive,
    /// The earliest snapshot of the stream.
    Fixed,
}

impl ComparisonMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ComparisonMode::Successive => "successive",
            ComparisonMode::Fixed => "fixed",
        }
    }
}

impl fmt::Display for ComparisonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComparisonMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "successive" => Ok(Self::Successive),
            "fixed" => Ok(Self::Fixed),
            other => Err(format!("unknown comparison mode {other:?}")),
        }
    }
}

/// One observed ranking of a (query, source) stream at one collection round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedSnapshot {
    pub query: String,
    /// Engine or dataset name, e.g. `google`.
    pub source: String,
    pub kind: SourceKind,
    pub timepoint: DateTime<Utc>,
    pub ranking: Ranking,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesPoint<T> {
    pub timepoint: DateTime<Utc>,
    pub rbo: RboResult<T>,
    /// The plotted value: `rbo.ext` for raw series, the window mean after smoothing.
    pub value: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilitySeries<T> {
    pub query: String,
    pub source: String,
    pub kind: SourceKind,
    pub mode: ComparisonMode,
    pub points: Vec<SeriesPoint<T>>,
}

impl<T: Scalar> StabilitySeries<T> {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn values(&self) -> Vec<T> {
        self.points.iter().map(|p| p.value).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SeriesError {
    #[error("a stability series needs at least 2 snapshots, got {0}")]
    TooFewSnapshots(usize),
    #[error("snapshot {index} belongs to a different stream than snapshot 0")]
    MixedStreams { index: usize },
    #[error("snapshot {index} does not come strictly after its predecessor")]
    NotIncreasing { index: usize },
    #[error("smoothing window must be at least 1")]
    ZeroWindow,
}

fn validate(snapshots: &[RankedSnapshot]) -> Result<(), SeriesError> {
    if snapshots.len() < 2 {
        return Err(SeriesError::TooFewSnapshots(snapshots.len()));
    }
    let head = &snapshots[0];
    for (index, pair) in snapshots.windows(2).enumerate() {
        let next = &pair[1];
        if next.query != head.query || next.source != head.source || next.kind != head.kind {
            return Err(SeriesError::MixedStreams { index: index + 1 });
        }
        if next.timepoint <= pair[0].timepoint {
            return Err(SeriesError::NotIncreasing { index: index + 1 });
        }
    }
    Ok(())
}

fn build<T: Scalar>(
    snapshots: &[RankedSnapshot],
    mode: ComparisonMode,
    params: &RboParams<T>,
) -> Result<StabilitySeries<T>, SeriesError> {
    validate(snapshots)?;
    let points = (1..snapshots.len())
        .map(|i| {
            let reference = match mode {
                ComparisonMode::Successive => &snapshots[i - 1],
                ComparisonMode::Fixed => &snapshots[0],
            };
            let sim = rbo(&snapshots[i].ranking, &reference.ranking, params);
            SeriesPoint {
                timepoint: snapshots[i].timepoint,
                rbo: sim,
                value: sim.ext,
            }
        })
        .collect();
    let head = &snapshots[0];
    Ok(StabilitySeries {
        query: head.query.clone(),
        source: head.source.clone(),
        kind: head.kind,
        mode,
        points,
    })
}

/// Compares every snapshot with the one before it; one point per snapshot after the first.
pub fn successive_series<T: Scalar>(
    snapshots: &[RankedSnapshot],
    params: &RboParams<T>,
) -> Result<StabilitySeries<T>, SeriesError> {
    build(snapshots, ComparisonMode::Successive, params)
}

/// Compares every later snapshot with the earliest one, which is not itself a point.
pub fn fixed_reference_series<T: Scalar>(
    snapshots: &[RankedSnapshot],
    params: &RboParams<T>,
) -> Result<StabilitySeries<T>, SeriesError> {
    build(snapshots, ComparisonMode::Fixed, params)
}

/// Window length of a trailing moving average, counted in observations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmoothingPolicy {
    window: NonZeroUsize,
}

impl SmoothingPolicy {
    pub fn new(window: usize) -> Result<Self, SeriesError> {
        NonZeroUsize::new(window)
            .map(|window| Self { window })
            .ok_or(SeriesError::ZeroWindow)
    }

    pub fn window(&self) -> usize {
        self.window.get()
    }

    /// Converts a window in days to a count using the median gap between
    /// consecutive timepoints. Fewer than two timepoints give a window of 1.
    pub fn from_days(days: f64, timepoints: &[DateTime<Utc>]) -> Self {
        Self::from_cadence(days, observations_per_day(timepoints))
    }

    /// Converts a window in days to a count at `per_day` observations a day,
    /// rounding to the nearest count of at least 1.
    pub fn from_cadence(days: f64, per_day: Option<f64>) -> Self {
        let window = per_day
            .map(|per_day| (days * per_day).round())
            .filter(|w| w.is_finite() && *w >= 1.0)
            .map(|w| w as usize)
            .unwrap_or(1);
        Self::new(window).expect("window is at least 1")
    }
}

/// Observed cadence, from the median gap between consecutive timepoints.
pub fn observations_per_day(timepoints: &[DateTime<Utc>]) -> Option<f64> {
    pooled_observations_per_day([timepoints])
}

/// Cadence shared by several streams: the median is taken over the gaps
/// of all streams together.
pub fn pooled_observations_per_day<'a>(
    streams: impl IntoIterator<Item = &'a [DateTime<Utc>]>,
) -> Option<f64> {
    let mut gaps: Vec<i64> = streams
        .into_iter()
        .flat_map(|ts| ts.windows(2).map(|w| (w[1] - w[0]).num_seconds()))
        .filter(|g| *g > 0)
        .collect();
    if gaps.is_empty() {
        return None;
    }
    gaps.sort_unstable();
    let mid = gaps.len() / 2;
    let median = if gaps.len().is_multiple_of(2) {
        (gaps[mid - 1] + gaps[mid]) as f64 / 2.0
    } else {
        gaps[mid] as f64
    };
    Some(86_400.0 / median)
}

/// Trailing moving average over `policy.window()` points; the first points
/// average over however many observations exist so far.
pub fn moving_average<T: Scalar>(
    series: &StabilitySeries<T>,
    policy: &SmoothingPolicy,
) -> StabilitySeries<T> {
    let window = policy.window();
    let points = series
        .points
        .iter()
        .enumerate()
        .map(|(i, point)| {
            let slice = &series.points[(i + 1).saturating_sub(window)..=i];
            let (sum, lo, hi) = slice.iter().fold(
                (T::zero(), T::infinity(), T::neg_infinity()),
                |(sum, lo, hi), p| (sum + p.value, lo.min(p.value), hi.max(p.value)),
            );
            let mean = (sum / T::from_count(slice.len())).max(lo).min(hi);
            SeriesPoint {
                value: mean,
                ..*point
            }
        })
        .collect();
    StabilitySeries {
        points,
        ..series.clone()
    }
}
