use std::path::PathBuf;
use std::sync::atomic::AtomicBool;

use clap::Args;
use rankstab_crawler::{
    load_config, plan_slots, run_schedule, Clock, CrawlError, CrawlPlan, CsvFileSink, HttpFetcher,
    RunSummary, SystemClock,
};

use crate::CliError;

#[derive(Debug, Clone, Args)]
pub struct CrawlArgs {
    /// TOML file with targets, schedules and retry settings.
    #[arg(long, value_name = "FILE")]
    pub config: PathBuf,
    /// Suggestion log to append to; overrides `output` in the config.
    #[arg(long, value_name = "FILE")]
    pub output: Option<PathBuf>,
    /// Directory for `suggestions.csv` when no output file is configured.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Print the upcoming slots and queries without fetching anything.
    #[arg(long)]
    pub dry_run: bool,
    /// Stop after this many slots. Dry runs list this many (default 4).
    #[arg(long, value_name = "N")]
    pub max_slots: Option<usize>,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 20)]
    pub timeout_secs: u64,
}

fn config_error(err: CrawlError) -> CliError {
    CliError::Config(err.to_string())
}

impl CrawlArgs {
    pub fn plan(&self) -> Result<CrawlPlan, CliError> {
        let text = std::fs::read_to_string(&self.config)
            .map_err(|e| CliError::Config(format!("{}: {e}", self.config.display())))?;
        let mut plan = load_config(&text).map_err(|e| match e {
            CrawlError::Config { .. } | CrawlError::ConfigSyntax(_) => {
                CliError::Config(format!("{}: {e}", self.config.display()))
            }
            other => config_error(other),
        })?;
        plan.settings.max_slots = self.max_slots;
        Ok(plan)
    }

    fn output_path(&self, plan: &CrawlPlan) -> PathBuf {
        self.output
            .clone()
            .or_else(|| plan.output.clone())
            .unwrap_or_else(|| {
                self.out_dir
                    .clone()
                    .unwrap_or_else(|| PathBuf::from("."))
                    .join("suggestions.csv")
            })
    }
}

/// Human-readable list of the next slots.
pub fn dry_run(args: &CrawlArgs, clock: &dyn Clock) -> Result<String, CliError> {
    let plan = args.plan()?;
    let slots = plan_slots(&plan.targets, clock.now(), args.max_slots.unwrap_or(4));
    let mut out = format!("would append to {}\n", args.output_path(&plan).display());
    for slot in slots {
        let local = slot.at.with_timezone(&plan.timezone);
        out.push_str(&format!("{}\n", local.format("%Y-%m-%d %H:%M:%S %Z")));
        for &i in &slot.targets {
            let t = &plan.targets[i];
            out.push_str(&format!("  {}: {}\n", t.source, t.queries.join(", ")));
        }
    }
    Ok(out)
}

pub fn run(args: &CrawlArgs, stop: &AtomicBool) -> Result<RunSummary, CliError> {
    let plan = args.plan()?;
    let path = args.output_path(&plan);
    let mut sink =
        CsvFileSink::open(&path, plan.timezone).map_err(|e| CliError::Runtime(e.to_string()))?;
    let fetcher = HttpFetcher::new(std::time::Duration::from_secs(args.timeout_secs));
    log::info!("appending to {}", path.display());
    run_schedule(
        &plan.targets,
        &plan.settings,
        &fetcher,
        &mut sink,
        &SystemClock,
        stop,
    )
    .map_err(|e| CliError::Runtime(e.to_string()))
}
