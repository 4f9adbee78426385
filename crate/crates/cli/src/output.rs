use crate::error::CliError;
use serde::Serialize;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

pub const SCHEMA_VERSION: u32 = 1;

/// A CSV file written next to the report.
pub struct Table {
    pub file: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &'static str, header: Vec<String>) -> Self {
        Self { file, header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn write(&self, dir: &Path) -> Result<(), CliError> {
        let path = dir.join(self.file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::io(&path.display().to_string(), e))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush().map_err(|e| CliError::io(&path.display().to_string(), e))?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    schema_version: u32,
    command: &'a str,
    config: &'a C,
    result: &'a R,
}

#[derive(Serialize)]
struct Metadata<'a> {
    schema_version: u32,
    command: &'a str,
    version: &'a str,
    started_unix_seconds: u64,
    elapsed_seconds: f64,
    threads: usize,
    files: Vec<&'a str>,
}

/// Collects run timing; everything nondeterministic goes to `metadata.json` only.
pub struct Run {
    command: &'static str,
    started: SystemTime,
    clock: Instant,
    out: Option<PathBuf>,
}

impl Run {
    pub fn start(command: &'static str, out: Option<PathBuf>) -> Self {
        Self { command, started: SystemTime::now(), clock: Instant::now(), out }
    }

    pub fn finish<C: Serialize, R: Serialize>(self, config: &C, result: &R, tables: &[Table]) -> Result<(), CliError> {
        let envelope = Envelope { schema_version: SCHEMA_VERSION, command: self.command, config, result };
        let mut text = serde_json::to_string_pretty(&envelope)
            .map_err(|e| CliError::new(crate::error::ErrorKind::Internal, e.to_string()))?;
        text.push('\n');
        print!("{text}");
        let Some(dir) = &self.out else {
            return Ok(());
        };
        fs::create_dir_all(dir).map_err(|e| CliError::io(&dir.display().to_string(), e))?;
        let report = dir.join("report.json");
        fs::write(&report, &text).map_err(|e| CliError::io(&report.display().to_string(), e))?;
        for t in tables {
            t.write(dir)?;
        }
        let mut files = vec!["report.json"];
        files.extend(tables.iter().map(|t| t.file));
        let meta = Metadata {
            schema_version: SCHEMA_VERSION,
            command: self.command,
            version: env!("CARGO_PKG_VERSION"),
            started_unix_seconds: self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            elapsed_seconds: self.clock.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
            files,
        };
        let path = dir.join("metadata.json");
        let body = serde_json::to_string_pretty(&meta).expect("metadata serializes") + "\n";
        fs::write(&path, body).map_err(|e| CliError::io(&path.display().to_string(), e))?;
        log::info!("wrote {} files to {}", tables.len() + 2, dir.display());
        Ok(())
    }
}
