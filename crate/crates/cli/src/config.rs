//! Run configuration: defaults, overlaid by a JSON config file, overlaid by
//! command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rrg_spectra::graph_ensemble::check_parameters;
use rrg_spectra::statistics::{default_window, DEFAULT_BIN_WIDTH, DEFAULT_SPACING_MAX};
use rrg_spectra::{ConnectivityPolicy, CountMode, EnsembleManifest, InverseMode};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const DEFAULT_VERTICES: usize = 1000;
pub const DEFAULT_DEGREE: usize = 3;
pub const DEFAULT_ENSEMBLE_SIZE: usize = 1000;
pub const DEFAULT_DEGREES: [usize; 3] = [3, 5, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Generate,
    Spectra,
    Stats,
    Collapse,
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Spectra => "spectra",
            Command::Stats => "stats",
            Command::Collapse => "collapse",
            Command::Verify => "verify",
        }
    }
}

/// Which raw form-factor estimator `stats` reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// `(2/V) var(sum cos t phi)`.
    #[default]
    Cos,
    /// `(1/V) var|sum exp(i t phi)|`.
    Complex,
    /// `(V/2) <y_t^2>` from walk counts.
    Walks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InverseModeArg {
    Exact,
    Newton2,
}

impl From<InverseModeArg> for InverseMode {
    fn from(m: InverseModeArg) -> Self {
        match m {
            InverseModeArg::Exact => InverseMode::Exact,
            InverseModeArg::Newton2 => InverseMode::Newton2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CountModeArg {
    Exact,
    Clamped,
}

impl From<CountModeArg> for CountMode {
    fn from(m: CountModeArg) -> Self {
        match m {
            CountModeArg::Exact => CountMode::Exact,
            CountModeArg::Clamped => CountMode::Clamped,
        }
    }
}

/// Fully resolved configuration of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(rename = "V")]
    pub vertex_count: usize,
    #[serde(rename = "d")]
    pub degree: usize,
    pub ensemble_size: usize,
    pub master_seed: u64,
    pub magnetic: bool,
    pub connectivity: ConnectivityPolicy,
    pub t_min: u32,
    pub t_max: u32,
    pub window: usize,
    pub bin_width: f64,
    pub s_max: f64,
    pub estimator: Estimator,
    pub connected: bool,
    pub inverse_mode: InverseMode,
    pub count_mode: CountMode,
    pub degrees: Vec<usize>,
    pub collapse_tau_min: f64,
    pub collapse_tau_max: f64,
    pub collapse_points: usize,
    pub tolerance_scale: f64,
    pub ensembles: Vec<PathBuf>,
    pub out: PathBuf,
    pub workers: usize,
}

/// One source of settings; unset fields fall through to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigLayer {
    pub command: Option<Command>,
    #[serde(rename = "V")]
    pub vertex_count: Option<usize>,
    #[serde(rename = "d")]
    pub degree: Option<usize>,
    pub ensemble_size: Option<usize>,
    pub master_seed: Option<u64>,
    pub magnetic: Option<bool>,
    pub connectivity: Option<ConnectivityPolicy>,
    pub t_min: Option<u32>,
    pub t_max: Option<u32>,
    pub window: Option<usize>,
    pub bin_width: Option<f64>,
    pub s_max: Option<f64>,
    pub estimator: Option<Estimator>,
    pub connected: Option<bool>,
    pub inverse_mode: Option<InverseMode>,
    pub count_mode: Option<CountMode>,
    pub degrees: Option<Vec<usize>>,
    pub collapse_tau_min: Option<f64>,
    pub collapse_tau_max: Option<f64>,
    pub collapse_points: Option<usize>,
    pub tolerance_scale: Option<f64>,
    pub ensembles: Option<Vec<PathBuf>>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

macro_rules! overlay {
    ($top:expr, $base:expr, $($field:ident),*) => {
        ConfigLayer { $($field: $top.$field.or($base.$field)),* }
    };
}

impl ConfigLayer {
    /// Fields of `self` win over `base`.
    pub fn over(self, base: ConfigLayer) -> ConfigLayer {
        overlay!(
            self, base, command, vertex_count, degree, ensemble_size, master_seed, magnetic, connectivity, t_min,
            t_max, window, bin_width, s_max, estimator, connected, inverse_mode, count_mode, degrees,
            collapse_tau_min, collapse_tau_max, collapse_points, tolerance_scale, ensembles, out, workers
        )
    }

    pub fn load(path: &Path) -> CliResult<ConfigLayer> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))
    }
}

impl From<RunConfig> for ConfigLayer {
    fn from(c: RunConfig) -> Self {
        ConfigLayer {
            command: Some(c.command),
            vertex_count: Some(c.vertex_count),
            degree: Some(c.degree),
            ensemble_size: Some(c.ensemble_size),
            master_seed: Some(c.master_seed),
            magnetic: Some(c.magnetic),
            connectivity: Some(c.connectivity),
            t_min: Some(c.t_min),
            t_max: Some(c.t_max),
            window: Some(c.window),
            bin_width: Some(c.bin_width),
            s_max: Some(c.s_max),
            estimator: Some(c.estimator),
            connected: Some(c.connected),
            inverse_mode: Some(c.inverse_mode),
            count_mode: Some(c.count_mode),
            degrees: Some(c.degrees),
            collapse_tau_min: Some(c.collapse_tau_min),
            collapse_tau_max: Some(c.collapse_tau_max),
            collapse_points: Some(c.collapse_points),
            tolerance_scale: Some(c.tolerance_scale),
            ensembles: Some(c.ensembles),
            out: Some(c.out),
            workers: Some(c.workers),
        }
    }
}

fn inherit<T: PartialEq + std::fmt::Display + Copy>(
    name: &str,
    given: Option<T>,
    from_ensemble: Option<T>,
    default: T,
) -> CliResult<T> {
    match (given, from_ensemble) {
        (Some(g), Some(e)) if g != e => Err(CliError::Usage(format!(
            "{name}={g} conflicts with the input ensemble ({name}={e})"
        ))),
        (Some(g), _) => Ok(g),
        (None, Some(e)) => Ok(e),
        (None, None) => Ok(default),
    }
}

fn default_out(command: Command) -> PathBuf {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
    PathBuf::from("runs").join(format!("{}-{stamp}", command.name()))
}

impl RunConfig {
    /// Resolves a merged layer against defaults. Ensemble-describing fields
    /// default to, and must agree with, `manifest` when one is given.
    pub fn resolve(command: Command, layer: ConfigLayer, manifest: Option<&EnsembleManifest>) -> CliResult<RunConfig> {
        let vertex_count = inherit("V", layer.vertex_count, manifest.map(|m| m.vertex_count), DEFAULT_VERTICES)?;
        let degree = inherit("d", layer.degree, manifest.map(|m| m.degree), DEFAULT_DEGREE)?;
        let ensemble_size = inherit(
            "ensemble_size",
            layer.ensemble_size,
            manifest.map(|m| m.ensemble_size),
            DEFAULT_ENSEMBLE_SIZE,
        )?;
        let master_seed = inherit("master_seed", layer.master_seed, manifest.map(|m| m.master_seed), 0)?;
        let magnetic = match (layer.magnetic, manifest) {
            (Some(true), Some(m)) if !m.magnetic => {
                return Err(CliError::Usage("magnetic analysis requested but the ensemble carries no phases".into()))
            }
            (Some(b), _) => b,
            (None, Some(m)) => m.magnetic,
            (None, None) => false,
        };
        let connectivity = match (layer.connectivity, manifest) {
            (Some(p), Some(m)) if p != m.connectivity => {
                return Err(CliError::Usage(
                    "connectivity policy conflicts with the input ensemble".into(),
                ))
            }
            (Some(p), _) => p,
            (None, Some(m)) => m.connectivity,
            (None, None) => ConnectivityPolicy::AcceptAll,
        };
        let t_max = layer.t_max.unwrap_or(4 * vertex_count as u32);
        let workers = layer
            .workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        let cfg = RunConfig {
            command,
            vertex_count,
            degree,
            ensemble_size,
            master_seed,
            magnetic,
            connectivity,
            t_min: layer.t_min.unwrap_or(1),
            t_max,
            window: layer.window.unwrap_or_else(|| default_window(vertex_count)),
            bin_width: layer.bin_width.unwrap_or(DEFAULT_BIN_WIDTH),
            s_max: layer.s_max.unwrap_or(DEFAULT_SPACING_MAX),
            estimator: layer.estimator.unwrap_or_default(),
            connected: layer.connected.unwrap_or(true),
            inverse_mode: layer.inverse_mode.unwrap_or_default(),
            count_mode: layer.count_mode.unwrap_or_default(),
            degrees: layer.degrees.unwrap_or_else(|| DEFAULT_DEGREES.to_vec()),
            collapse_tau_min: layer.collapse_tau_min.unwrap_or(1e-3),
            collapse_tau_max: layer.collapse_tau_max.unwrap_or(0.2),
            collapse_points: layer.collapse_points.unwrap_or(60),
            tolerance_scale: layer.tolerance_scale.unwrap_or(1.0),
            ensembles: layer.ensembles.unwrap_or_default(),
            out: layer.out.unwrap_or_else(|| default_out(command)),
            workers,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        check_parameters(self.vertex_count, self.degree).map_err(|e| CliError::Usage(e.to_string()))?;
        if self.ensemble_size == 0 {
            return usage("ensemble size must be positive".into());
        }
        if self.t_min == 0 || self.t_max < self.t_min {
            return usage(format!("bad t range {}..={}", self.t_min, self.t_max));
        }
        if self.window == 0 {
            return usage("window must be positive".into());
        }
        if !(self.bin_width > 0.0 && self.s_max > self.bin_width && self.s_max.is_finite()) {
            return usage(format!("bad histogram: bin width {} up to {}", self.bin_width, self.s_max));
        }
        if let Some(d) = self.degrees.iter().find(|&&d| d < 3) {
            return usage(format!("collapse degree {d} must be at least 3"));
        }
        if !(self.collapse_tau_min > 0.0 && self.collapse_tau_max > self.collapse_tau_min) || self.collapse_points < 2 {
            return usage("bad collapse tau grid".into());
        }
        if !(self.tolerance_scale > 0.0 && self.tolerance_scale.is_finite()) {
            return usage("tolerance scale must be positive".into());
        }
        if self.workers == 0 {
            return usage("workers must be positive".into());
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises") + "\n"
    }

    /// SHA-256 of the configuration with the output location and worker
    /// count blanked, so the hash identifies the computation.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = PathBuf::new();
        c.workers = 0;
        let digest = Sha256::digest(serde_json::to_vec(&c).expect("config serialises"));
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}
