use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono_tz::Tz;
use rankstab_core::ingestion::{write_suggestion_records, IngestError, SuggestionRecord};

use crate::CrawlError;

/// Append-only store for crawled suggestion rows.
pub trait Sink {
    /// Appends all rows of one fetch, or none of them.
    fn append(&mut self, records: &[SuggestionRecord]) -> Result<(), CrawlError>;
}

/// Rows kept in memory, mainly for tests and dry runs.
#[derive(Debug, Default, Clone)]
pub struct MemorySink {
    pub records: Vec<SuggestionRecord>,
}

impl Sink for MemorySink {
    fn append(&mut self, records: &[SuggestionRecord]) -> Result<(), CrawlError> {
        self.records.extend_from_slice(records);
        Ok(())
    }
}

/// Suggestion log on disk. The header is written when the file is new or
/// empty; existing rows are never touched.
#[derive(Debug)]
pub struct CsvFileSink {
    path: PathBuf,
    file: File,
    timezone: Tz,
}

impl CsvFileSink {
    pub fn open(path: impl AsRef<Path>, timezone: Tz) -> Result<Self, CrawlError> {
        let path = path.as_ref().to_path_buf();
        let sink_err = |e: std::io::Error| CrawlError::Sink {
            path: path.clone(),
            reason: e.to_string(),
        };
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(sink_err)?;
        if file.metadata().map_err(sink_err)?.len() == 0 {
            let mut header = Vec::new();
            write_suggestion_records(&[], &mut header, &timezone, true).map_err(|e| {
                CrawlError::Sink {
                    path: path.clone(),
                    reason: e.to_string(),
                }
            })?;
            file.write_all(&header).map_err(sink_err)?;
            file.sync_data().map_err(sink_err)?;
        }
        Ok(Self {
            path,
            file,
            timezone,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Sink for CsvFileSink {
    fn append(&mut self, records: &[SuggestionRecord]) -> Result<(), CrawlError> {
        if records.is_empty() {
            return Ok(());
        }
        // Encode fully before touching the file so a fetch is written whole.
        let mut buf = Vec::new();
        write_suggestion_records(records, &mut buf, &self.timezone, false).map_err(
            |e: IngestError| CrawlError::Sink {
                path: self.path.clone(),
                reason: e.to_string(),
            },
        )?;
        let sink_err = |e: std::io::Error| CrawlError::Sink {
            path: self.path.clone(),
            reason: e.to_string(),
        };
        self.file.write_all(&buf).map_err(sink_err)?;
        self.file.flush().map_err(sink_err)?;
        Ok(())
    }
}
