//! Output directories and run metadata.
//!
//! Files are written into a hidden staging directory next to the target and
//! moved into place only once a command has finished, so a failed run leaves
//! nothing behind.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub struct Staging {
    target: PathBuf,
    dir: PathBuf,
    files: Vec<String>,
    committed: bool,
}

impl Staging {
    pub fn new(target: &Path) -> CliResult<Self> {
        let name = target
            .file_name()
            .ok_or_else(|| CliError::Usage(format!("output path {} has no final component", target.display())))?;
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent).map_err(|e| CliError::io(&parent, e))?;
        let dir = parent.join(format!(".{}.partial-{}", name.to_string_lossy(), std::process::id()));
        if dir.exists() {
            fs::remove_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        }
        fs::create_dir(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Self {
            target: target.to_path_buf(),
            dir,
            files: Vec::new(),
            committed: false,
        })
    }

    pub fn write(&mut self, rel: &str, contents: impl AsRef<[u8]>) -> CliResult<()> {
        let path = self.dir.join(rel);
        if let Some(p) = path.parent() {
            fs::create_dir_all(p).map_err(|e| CliError::io(p, e))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    /// Moves every staged top-level entry into the target, replacing any
    /// previous entry of the same name.
    pub fn commit(mut self) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.target).map_err(|e| CliError::io(&self.target, e))?;
        let tops: BTreeSet<&str> = self
            .files
            .iter()
            .map(|f| f.split('/').next().unwrap_or(f))
            .collect();
        for top in tops {
            let from = self.dir.join(top);
            let to = self.target.join(top);
            if to.is_dir() {
                fs::remove_dir_all(&to).map_err(|e| CliError::io(&to, e))?;
            } else if to.exists() {
                fs::remove_file(&to).map_err(|e| CliError::io(&to, e))?;
            }
            fs::rename(&from, &to).map_err(|e| CliError::io(&to, e))?;
        }
        fs::remove_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        self.committed = true;
        Ok(self.target.clone())
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.dir);
        }
    }
}

/// Refuses to write into any input directory.
pub fn ensure_distinct(out: &Path, inputs: &[PathBuf]) -> CliResult<()> {
    let Ok(out_abs) = fs::canonicalize(out) else {
        return Ok(());
    };
    for input in inputs {
        if fs::canonicalize(input).is_ok_and(|i| i == out_abs) {
            return Err(CliError::Usage(format!(
                "output directory {} is an input; choose a fresh directory",
                out.display()
            )));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct Versions {
    #[serde(rename = "rrg-spectra")]
    library: &'static str,
    #[serde(rename = "rrg-spectra-cli")]
    cli: &'static str,
}

#[derive(Clone, Serialize)]
struct Stage {
    stage: String,
    seconds: f64,
}

#[derive(Serialize)]
struct RunMetadata<'a> {
    command: &'static str,
    config_hash: String,
    versions: Versions,
    started: String,
    workers: usize,
    timings: Vec<Stage>,
    total_seconds: f64,
    outputs: &'a [String],
}

/// Wall-clock timings of named stages.
pub struct Timer {
    start: Instant,
    started: String,
    stages: Vec<Stage>,
    last: Instant,
}

impl Timer {
    pub fn start() -> Self {
        let now = Instant::now();
        Self {
            start: now,
            started: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            stages: Vec::new(),
            last: now,
        }
    }

    pub fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.stages.push(Stage {
            stage: stage.to_string(),
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }
}

/// Writes `config.json` and `run-metadata.json`, then commits.
pub fn finish(mut staging: Staging, cfg: &RunConfig, timer: Timer) -> CliResult<PathBuf> {
    staging.write("config.json", cfg.to_json())?;
    let mut outputs = staging.files().to_vec();
    outputs.push("run-metadata.json".into());
    let meta = RunMetadata {
        command: cfg.command.name(),
        config_hash: cfg.hash(),
        versions: Versions {
            library: rrg_spectra::VERSION,
            cli: env!("CARGO_PKG_VERSION"),
        },
        started: timer.started.clone(),
        workers: cfg.workers,
        timings: timer.stages.clone(),
        total_seconds: timer.start.elapsed().as_secs_f64(),
        outputs: &outputs,
    };
    let json = serde_json::to_string_pretty(&meta).expect("metadata serialises") + "\n";
    staging.write("run-metadata.json", json)?;
    staging.commit()
}
