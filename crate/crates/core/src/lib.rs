//! Ranking-stability analysis for search result lists and query suggestions.
//!
//! The numeric kernels ([`rbo`], [`timeseries`]) are generic over the float
//! type through [`Scalar`]; the aliases below pin them to `f64`, which is what
//! the pipeline and the command-line tool use.
//!
//! ```
//! use rankstab_core::{rbo, Params, Ranking};
//!
//! let before = Ranking::new(vec!["a", "b", "c"]).unwrap();
//! let after = Ranking::new(vec!["b", "a", "c"]).unwrap();
//! let sim = rbo(&before, &after, &Params::default());
//! assert!(sim.min <= sim.ext && sim.ext <= sim.min + sim.res);
//! ```

pub mod aggregation;
pub mod ingestion;
pub mod rbo;
pub mod scalar;
pub mod timeseries;

pub use aggregation::{aggregate, AggregationError, AggregationPolicy, RequestBatch, ResultList};
pub use rbo::{
    expected_depth, overlap_at_depth, prefix_weight, rbo, Ranking, RankingError, RboError,
    RboParams, RboResult,
};
pub use scalar::Scalar;
pub use timeseries::{
    fixed_reference_series, moving_average, observations_per_day, pooled_observations_per_day,
    successive_series, ComparisonMode, RankedSnapshot, SeriesError, SeriesPoint, SmoothingPolicy,
    SourceKind, StabilitySeries,
};

/// Persistence parameter in double precision.
pub type Params = RboParams<f64>;
/// Persistence parameter in single precision.
pub type Params32 = RboParams<f32>;
/// RBO decomposition in double precision.
pub type Rbo = RboResult<f64>;
/// RBO decomposition in single precision.
pub type Rbo32 = RboResult<f32>;
/// Stability series in double precision.
pub type Series = StabilitySeries<f64>;
/// Stability series in single precision.
pub type Series32 = StabilitySeries<f32>;
