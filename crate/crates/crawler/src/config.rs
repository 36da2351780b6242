use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chrono::{Duration, NaiveTime};
use chrono_tz::Tz;
use serde::Deserialize;

use crate::run::{CrawlSettings, RetryPolicy};
use crate::target::{CrawlTarget, PayloadFormat, Schedule};
use crate::CrawlError;

/// On-disk crawler configuration.
///
/// ```toml
/// output = "suggestions.csv"
/// timezone = "Europe/Berlin"
/// politeness_delay_secs = 2
///
/// [retry]
/// attempts = 3
/// initial_backoff_secs = 5
///
/// [[target]]
/// source = "google"
/// endpoint = "https://suggestqueries.google.com/complete/search?client=firefox&hl=de&q={query}"
/// queries = ["Angela Merkel", "Martin Schulz"]
/// schedule = ["05:00", "17:00"]
///
/// [target.headers]
/// "Accept-Language" = "de-DE"
/// ```
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrawlConfig {
    pub output: Option<PathBuf>,
    #[serde(default = "default_timezone")]
    pub timezone: String,
    #[serde(default = "default_politeness")]
    pub politeness_delay_secs: f64,
    #[serde(default = "default_missed_after")]
    pub missed_after_secs: f64,
    #[serde(default)]
    pub retry: RetryConfig,
    #[serde(rename = "target", default)]
    pub targets: Vec<TargetConfig>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RetryConfig {
    #[serde(default = "default_attempts")]
    pub attempts: u32,
    #[serde(default = "default_backoff")]
    pub initial_backoff_secs: f64,
}

impl Default for RetryConfig {
    fn default() -> Self {
        Self {
            attempts: default_attempts(),
            initial_backoff_secs: default_backoff(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub source: String,
    pub endpoint: String,
    pub queries: Vec<String>,
    pub schedule: Vec<String>,
    /// Overrides the top-level zone for this target's schedule.
    pub timezone: Option<String>,
    #[serde(default)]
    pub headers: BTreeMap<String, String>,
    #[serde(default = "default_suggestions_pointer")]
    pub suggestions_pointer: String,
    pub item_pointer: Option<String>,
}

fn default_timezone() -> String {
    "Europe/Berlin".into()
}
fn default_politeness() -> f64 {
    2.0
}
fn default_missed_after() -> f64 {
    1800.0
}
fn default_attempts() -> u32 {
    3
}
fn default_backoff() -> f64 {
    5.0
}
fn default_suggestions_pointer() -> String {
    "/1".into()
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> CrawlError {
    CrawlError::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

fn seconds(field: &str, secs: f64) -> Result<Duration, CrawlError> {
    if !secs.is_finite() || secs < 0.0 {
        return Err(invalid(
            field,
            format!("must be a non-negative number of seconds, got {secs}"),
        ));
    }
    Ok(Duration::milliseconds((secs * 1000.0).round() as i64))
}

fn timezone(field: &str, name: &str) -> Result<Tz, CrawlError> {
    name.parse()
        .map_err(|_| invalid(field, format!("unknown time zone {name:?}")))
}

/// Validated crawler setup.
#[derive(Debug, Clone)]
pub struct CrawlPlan {
    pub output: Option<PathBuf>,
    /// Zone the output timestamps are written in.
    pub timezone: Tz,
    pub settings: CrawlSettings,
    pub targets: Vec<CrawlTarget>,
}

impl CrawlConfig {
    pub fn from_toml(text: &str) -> Result<Self, CrawlError> {
        toml::from_str(text).map_err(|e| CrawlError::ConfigSyntax(e.message().to_string()))
    }

    pub fn validate(&self) -> Result<CrawlPlan, CrawlError> {
        let tz = timezone("timezone", &self.timezone)?;
        if self.retry.attempts == 0 {
            return Err(invalid("retry.attempts", "must be at least 1"));
        }
        let settings = CrawlSettings {
            politeness_delay: seconds("politeness_delay_secs", self.politeness_delay_secs)?,
            retry: RetryPolicy {
                attempts: self.retry.attempts,
                initial_backoff: seconds(
                    "retry.initial_backoff_secs",
                    self.retry.initial_backoff_secs,
                )?,
            },
            missed_after: seconds("missed_after_secs", self.missed_after_secs)?,
            max_slots: None,
        };
        if self.targets.is_empty() {
            return Err(invalid("target", "at least one [[target]] is required"));
        }

        let mut sources = BTreeSet::new();
        let mut targets = Vec::with_capacity(self.targets.len());
        for (i, t) in self.targets.iter().enumerate() {
            let field = |name: &str| format!("target[{i}].{name}");
            if !sources.insert(t.source.as_str()) {
                return Err(invalid(
                    field("source"),
                    format!("{:?} is used by another target", t.source),
                ));
            }
            if t.queries.is_empty() {
                return Err(invalid(field("queries"), "must not be empty"));
            }
            let target_tz = match &t.timezone {
                Some(name) => timezone(&field("timezone"), name)?,
                None => tz,
            };
            let times = t
                .schedule
                .iter()
                .map(|s| {
                    NaiveTime::parse_from_str(s, "%H:%M")
                        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M:%S"))
                        .map_err(|_| invalid(field("schedule"), format!("{s:?} is not HH:MM")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let schedule = Schedule::new(times, target_tz)
                .map_err(|e| invalid(field("schedule"), e.to_string()))?;
            for (name, ptr) in [
                ("suggestions_pointer", Some(&t.suggestions_pointer)),
                ("item_pointer", t.item_pointer.as_ref()),
            ] {
                if let Some(ptr) = ptr {
                    if !ptr.is_empty() && !ptr.starts_with('/') {
                        return Err(invalid(
                            field(name),
                            format!("{ptr:?} is not a JSON pointer"),
                        ));
                    }
                }
            }
            let mut target = CrawlTarget::new(&t.source, &t.endpoint, t.queries.clone(), schedule)
                .map_err(|e| {
                    let name = match &e {
                        CrawlError::InvalidTarget(m) if m.starts_with("endpoint") => "endpoint",
                        CrawlError::InvalidTarget(m) if m.starts_with("source") => "source",
                        _ => "queries",
                    };
                    invalid(field(name), e.to_string())
                })?
                .with_payload(PayloadFormat {
                    suggestions_pointer: t.suggestions_pointer.clone(),
                    item_pointer: t.item_pointer.clone(),
                });
            for (k, v) in &t.headers {
                target = target.with_header(k, v);
            }
            targets.push(target);
        }
        Ok(CrawlPlan {
            output: self.output.clone(),
            timezone: tz,
            settings,
            targets,
        })
    }
}

/// Parses and validates a TOML crawler configuration.
pub fn load_config(text: &str) -> Result<CrawlPlan, CrawlError> {
    CrawlConfig::from_toml(text)?.validate()
}
