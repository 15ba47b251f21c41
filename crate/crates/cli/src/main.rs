//! `rrg-spectra`: generate random regular graph ensembles, compute their
//! spectra and level statistics, and check the numerics.

mod commands;
mod config;
mod ensemble_io;
mod error;
mod output;
mod plots;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rrg_spectra::ConnectivityPolicy;

use crate::config::{Command, ConfigLayer, CountModeArg, Estimator, InverseModeArg, RunConfig};
use crate::ensemble_io::read_manifest;
use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "rrg-spectra", version, about = "Spectral statistics of random regular graphs")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Sample an ensemble and write its manifest and graph files.
    Generate(Flags),
    /// Eigenvalues, phases and unfolded phases for every graph.
    Spectra(Flags),
    /// Spacing distribution, form factors, variance-to-mean and plot scripts.
    Stats(Flags),
    /// Rescaled form factors for several degrees, with plot scripts.
    Collapse(Flags),
    /// Run the deterministic oracle suite (and check ensemble files).
    Verify(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// Vertices per graph.
    #[arg(long = "V")]
    vertices: Option<usize>,
    /// Degree.
    #[arg(long = "d")]
    degree: Option<usize>,
    /// Ensemble size.
    #[arg(long = "n")]
    size: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Decorate with magnetic phases (generate) or analyse them (spectra, stats).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    magnetic: Option<bool>,
    /// Resample disconnected graphs.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    connected_only: Option<bool>,
    /// First t of the form-factor grid.
    #[arg(long)]
    tmin: Option<u32>,
    /// Last t of the form-factor grid (default 4V).
    #[arg(long)]
    tmax: Option<u32>,
    /// Consecutive t values averaged per point (default ceil(V/100)).
    #[arg(long)]
    window: Option<usize>,
    /// Spacing histogram bin width.
    #[arg(long)]
    bin_width: Option<f64>,
    /// Spacing histogram upper edge.
    #[arg(long)]
    s_max: Option<f64>,
    /// Raw form-factor estimator.
    #[arg(long, value_enum)]
    estimator: Option<Estimator>,
    /// Use the raw second moment instead of the connected variance.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    unconnected: Option<bool>,
    /// Inverse of the unfolding map used by the transformed baselines.
    #[arg(long, value_enum)]
    inverse_mode: Option<InverseModeArg>,
    /// Treatment of eigenvalues outside the Kesten-McKay support in walk counts.
    #[arg(long, value_enum)]
    count_mode: Option<CountModeArg>,
    /// Degrees for the collapse baselines.
    #[arg(long, value_delimiter = ',')]
    degrees: Option<Vec<usize>>,
    /// Multiply every verify tolerance by this factor.
    #[arg(long)]
    tolerance_scale: Option<f64>,
    /// Input ensemble directory (repeatable for collapse and verify).
    #[arg(long)]
    ensemble: Vec<PathBuf>,
    /// Output directory (default runs/<command>-<timestamp>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

impl Flags {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            vertex_count: self.vertices,
            degree: self.degree,
            ensemble_size: self.size,
            master_seed: self.seed,
            magnetic: self.magnetic,
            connectivity: self.connected_only.map(|c| {
                if c {
                    ConnectivityPolicy::ConnectedOnly
                } else {
                    ConnectivityPolicy::AcceptAll
                }
            }),
            t_min: self.tmin,
            t_max: self.tmax,
            window: self.window,
            bin_width: self.bin_width,
            s_max: self.s_max,
            estimator: self.estimator,
            connected: self.unconnected.map(|u| !u),
            inverse_mode: self.inverse_mode.map(Into::into),
            count_mode: self.count_mode.map(Into::into),
            degrees: self.degrees.clone(),
            tolerance_scale: self.tolerance_scale,
            ensembles: (!self.ensemble.is_empty()).then(|| self.ensemble.clone()),
            out: self.out.clone(),
            workers: self.workers,
            ..Default::default()
        }
    }
}

fn resolve(command: Command, flags: &Flags) -> CliResult<RunConfig> {
    let file = match &flags.config {
        Some(p) => ConfigLayer::load(p)?,
        None => ConfigLayer::default(),
    };
    let layer = flags.layer().over(file);
    let manifest = match (command, layer.ensembles.as_deref()) {
        (Command::Spectra | Command::Stats, Some([dir])) => Some(read_manifest(dir)?),
        _ => None,
    };
    RunConfig::resolve(command, layer, manifest.as_ref())
}

fn run(cli: Cli) -> CliResult<()> {
    let (command, flags) = match &cli.command {
        Sub::Generate(f) => (Command::Generate, f),
        Sub::Spectra(f) => (Command::Spectra, f),
        Sub::Stats(f) => (Command::Stats, f),
        Sub::Collapse(f) => (Command::Collapse, f),
        Sub::Verify(f) => (Command::Verify, f),
    };
    let cfg = resolve(command, flags)?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build_global()
        .map_err(|e| CliError::Usage(format!("worker pool: {e}")))?;
    let out = match command {
        Command::Generate => commands::generate(&cfg),
        Command::Spectra => commands::spectra(&cfg),
        Command::Stats => commands::stats(&cfg),
        Command::Collapse => commands::collapse(&cfg),
        Command::Verify => verify::verify(&cfg),
    }?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rrg-spectra: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
