use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;

use chrono::{DateTime, Duration, Utc};
use rankstab_core::ingestion::SuggestionRecord;

use crate::clock::Clock;
use crate::fetch::{CrawlResult, FetchError, Fetcher};
use crate::sink::Sink;
use crate::target::CrawlTarget;
use crate::CrawlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    /// Total tries per (slot, query), including the first.
    pub attempts: u32,
    /// Wait before the second try; doubles after every further failure.
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff: Duration::seconds(5),
        }
    }
}

impl RetryPolicy {
    fn backoff(&self, failed_attempts: u32) -> Duration {
        self.initial_backoff * 2i32.pow(failed_attempts.saturating_sub(1).min(16))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrawlSettings {
    /// Pause between consecutive requests to the same source.
    pub politeness_delay: Duration,
    pub retry: RetryPolicy,
    /// A slot reached later than this is skipped instead of fetched.
    pub missed_after: Duration,
    /// Stop after this many slots have been reached, fetched or skipped.
    pub max_slots: Option<usize>,
}

impl Default for CrawlSettings {
    fn default() -> Self {
        Self {
            politeness_delay: Duration::seconds(2),
            retry: RetryPolicy::default(),
            missed_after: Duration::minutes(30),
            max_slots: None,
        }
    }
}

/// A (slot, query) pair that produced no rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchFailure {
    pub slot: DateTime<Utc>,
    pub source: String,
    pub query: String,
    pub attempts: u32,
    pub error: FetchError,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub slots_run: Vec<DateTime<Utc>>,
    pub slots_missed: Vec<DateTime<Utc>>,
    pub fetches: usize,
    pub rows_written: usize,
    pub failures: Vec<FetchFailure>,
    /// Whether the run ended because the stop flag was raised.
    pub interrupted: bool,
}

/// One upcoming slot and the targets due at it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlannedSlot {
    pub at: DateTime<Utc>,
    pub targets: Vec<usize>,
}

fn next_slot(targets: &[CrawlTarget], cursor: DateTime<Utc>) -> Option<PlannedSlot> {
    let times: Vec<DateTime<Utc>> = targets
        .iter()
        .map(|t| t.schedule.next_at_or_after(cursor))
        .collect();
    let at = *times.iter().min()?;
    let targets = (0..targets.len()).filter(|&i| times[i] == at).collect();
    Some(PlannedSlot { at, targets })
}

/// The next `count` slots at or after `from`.
pub fn plan_slots(targets: &[CrawlTarget], from: DateTime<Utc>, count: usize) -> Vec<PlannedSlot> {
    let mut out = Vec::with_capacity(count);
    let mut cursor = from;
    while out.len() < count {
        let Some(slot) = next_slot(targets, cursor) else {
            break;
        };
        cursor = slot.at + Duration::seconds(1);
        out.push(slot);
    }
    out
}

/// Rows for one fetch, positions `0..n-1` in returned order.
pub fn records_for(source: &str, result: &CrawlResult) -> Vec<SuggestionRecord> {
    result
        .suggestions
        .iter()
        .enumerate()
        .map(|(pos, term)| SuggestionRecord {
            source: source.to_string(),
            queryterm: result.query.clone(),
            date: result.fetched_at,
            suggestterm: term.clone(),
            position: pos as u32,
        })
        .collect()
}

/// Fetches with retries. Returns the last error and the number of tries on failure.
fn fetch_with_retry(
    fetcher: &dyn Fetcher,
    target: &CrawlTarget,
    query: &str,
    clock: &dyn Clock,
    retry: &RetryPolicy,
    stop: &AtomicBool,
) -> Result<CrawlResult, (FetchError, u32)> {
    let attempts = retry.attempts.max(1);
    let mut tried = 0;
    loop {
        tried += 1;
        match fetcher.fetch(target, query, clock.now()) {
            Ok(result) => return Ok(result),
            Err(err) if err.is_retryable() && tried < attempts => {
                log::warn!(
                    "{} {query:?}: {err}; attempt {tried} of {attempts}",
                    target.source
                );
                if !clock.sleep(retry.backoff(tried), stop) {
                    return Err((err, tried));
                }
            }
            Err(err) => return Err((err, tried)),
        }
    }
}

enum Outcome {
    Fetched { source: String, result: CrawlResult },
    Failed(FetchFailure),
}

/// Crawls every due target at each scheduled slot until `stop` is raised
/// or `settings.max_slots` slots have been reached.
///
/// Slots that already lie in the past when the run starts are not fetched.
/// A slot reached more than `missed_after` late is logged and skipped. A
/// query that fails every retry is recorded and the rest of the slot goes
/// on; a sink failure ends the run with an error.
pub fn run_schedule(
    targets: &[CrawlTarget],
    settings: &CrawlSettings,
    fetcher: &dyn Fetcher,
    sink: &mut dyn Sink,
    clock: &dyn Clock,
    stop: &AtomicBool,
) -> Result<RunSummary, CrawlError> {
    let mut summary = RunSummary::default();
    let mut cursor = clock.now();
    let mut reached = 0usize;
    loop {
        if settings.max_slots.is_some_and(|max| reached >= max) {
            break;
        }
        let Some(slot) = next_slot(targets, cursor) else {
            break;
        };
        if !clock.sleep_until(slot.at, stop) {
            summary.interrupted = true;
            break;
        }
        reached += 1;
        cursor = slot.at + Duration::seconds(1);
        let late = clock.now() - slot.at;
        if late > settings.missed_after {
            log::warn!(
                "slot {} reached {}s late; skipped",
                slot.at,
                late.num_seconds()
            );
            summary.slots_missed.push(slot.at);
            continue;
        }
        log::info!("slot {}: {} target(s)", slot.at, slot.targets.len());
        run_slot(
            targets,
            &slot,
            settings,
            fetcher,
            sink,
            clock,
            stop,
            &mut summary,
        )?;
        summary.slots_run.push(slot.at);
        if stop.load(Ordering::SeqCst) {
            summary.interrupted = true;
            break;
        }
    }
    Ok(summary)
}

#[allow(clippy::too_many_arguments)]
fn run_slot(
    targets: &[CrawlTarget],
    slot: &PlannedSlot,
    settings: &CrawlSettings,
    fetcher: &dyn Fetcher,
    sink: &mut dyn Sink,
    clock: &dyn Clock,
    stop: &AtomicBool,
    summary: &mut RunSummary,
) -> Result<(), CrawlError> {
    // Set when the sink fails so that workers stop issuing requests.
    let abort = AtomicBool::new(false);
    let halted = || stop.load(Ordering::SeqCst) || abort.load(Ordering::SeqCst);
    let (tx, rx) = mpsc::channel::<Outcome>();

    std::thread::scope(|scope| {
        // One worker per target; requests within a target run one at a time.
        for &idx in &slot.targets {
            let target = &targets[idx];
            let tx = tx.clone();
            let halted = &halted;
            scope.spawn(move || {
                for (i, query) in target.queries.iter().enumerate() {
                    if halted() {
                        break;
                    }
                    if i > 0 && !clock.sleep(settings.politeness_delay, stop) {
                        break;
                    }
                    let outcome = match fetch_with_retry(
                        fetcher,
                        target,
                        query,
                        clock,
                        &settings.retry,
                        stop,
                    ) {
                        Ok(result) => Outcome::Fetched {
                            source: target.source.clone(),
                            result,
                        },
                        Err((error, attempts)) => Outcome::Failed(FetchFailure {
                            slot: slot.at,
                            source: target.source.clone(),
                            query: query.clone(),
                            attempts,
                            error,
                        }),
                    };
                    if tx.send(outcome).is_err() {
                        break;
                    }
                }
            });
        }
        drop(tx);

        // Single writer: every append goes through this loop.
        for outcome in rx {
            match outcome {
                Outcome::Fetched { source, result } => {
                    let rows = records_for(&source, &result);
                    if let Err(err) = sink.append(&rows) {
                        abort.store(true, Ordering::SeqCst);
                        return Err(err);
                    }
                    summary.fetches += 1;
                    summary.rows_written += rows.len();
                }
                Outcome::Failed(failure) => {
                    log::error!(
                        "{} {:?} at slot {}: giving up after {} attempt(s): {}",
                        failure.source,
                        failure.query,
                        failure.slot,
                        failure.attempts,
                        failure.error
                    );
                    summary.failures.push(failure);
                }
            }
        }
        Ok(())
    })
}
