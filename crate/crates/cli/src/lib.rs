//! The `rankstab` command line: `analyze` turns suggestion and result logs
//! into RBO stability series (CSV and SVG), `report` summarises what the
//! logs contain, and `crawl` collects new suggestions on a schedule.

pub mod analyze;
pub mod crawl;
mod error;
pub mod inputs;
pub mod report;
pub mod svg;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use clap::{Parser, Subcommand};

pub use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "rankstab",
    version,
    about = "Stability of ranked search results and query suggestions over time"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute RBO stability series and write CSV tables and SVG plots.
    Analyze(analyze::AnalyzeArgs),
    /// Collect query suggestions on a schedule.
    Crawl(crawl::CrawlArgs),
    /// Print record counts, coverage and cadence of the input logs.
    Report(report::ReportArgs),
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => {
            let summary = analyze::run(&args)?;
            for (kind, window) in &summary.windows {
                println!("{} smoothing window: {window} points", kind.as_str());
            }
            println!(
                "{} series, {} file(s) written to {}",
                summary.series,
                summary.files.len(),
                args.out_dir.display()
            );
        }
        Command::Report(args) => {
            print!("{}", report::run(&args)?);
        }
        Command::Crawl(args) => {
            if args.dry_run {
                print!("{}", crawl::dry_run(&args, &rankstab_crawler::SystemClock)?);
                return Ok(());
            }
            let stop = Arc::new(AtomicBool::new(false));
            let flag = Arc::clone(&stop);
            ctrlc::set_handler(move || {
                log::warn!("interrupt received; finishing the current request");
                flag.store(true, Ordering::SeqCst);
            })
            .map_err(|e| CliError::Runtime(format!("cannot install interrupt handler: {e}")))?;
            let summary = crawl::run(&args, &stop)?;
            println!(
                "{} slot(s) crawled, {} skipped, {} rows written, {} failed fetch(es){}",
                summary.slots_run.len(),
                summary.slots_missed.len(),
                summary.rows_written,
                summary.failures.len(),
                if summary.interrupted {
                    ", interrupted"
                } else {
                    ""
                }
            );
        }
    }
    Ok(())
}
