//! `qsup`: ingest FTIR spectra, simulate the interferometer, sweep geometry,
//! fit secondary structure and compare visibility with transmissivity.
//!
//! Exit codes: 0 success, 1 computation failure, 2 usage or I/O error.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qsup_core::dispersion::DispersionError;
use qsup_core::spectra::SpectraError;

/// Bad arguments, unreadable files or malformed configuration.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(
    name = "qsup",
    version,
    about = "Quantum spectroscopy with undetected photons: simulation and analysis"
)]
pub struct Cli {
    /// Run configuration (JSON). Command-line flags override its fields.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,
    /// Directory for all outputs.
    #[arg(long, global = true, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Worker threads for sweeps (0 = one per core).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Refractive-index data file; QSUP_DISPERSION_FILE takes precedence.
    #[arg(long, global = true, value_name = "JSON")]
    pub dispersion_file: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Convert an ATR absorbance spectrum to amplitude transmissivity.
    Ingest(IngestArgs),
    /// Simulate the interference map, fringe spectrum and visibility curve.
    Simulate(SimulateArgs),
    /// Sweep one geometry parameter and report β along it.
    Sweep(SweepArgs),
    /// Decompose the Amide I band into secondary-structure components.
    Fit(FitArgs),
    /// Compare a visibility curve with a transmissivity spectrum.
    Compare(CompareArgs),
}

#[derive(Args, Debug, Default)]
pub struct GeometryArgs {
    /// Crystal-mirror gap L_a (mm).
    #[arg(long, allow_hyphen_values = true)]
    pub gap_mm: Option<f64>,
    /// Crystal length L (mm).
    #[arg(long)]
    pub crystal_length_mm: Option<f64>,
    /// Crystal cut angle (deg).
    #[arg(long)]
    pub cut_angle_deg: Option<f64>,
    /// Biocell window thickness L_b (mm).
    #[arg(long)]
    pub biocell_mm: Option<f64>,
    /// Sample path L_m (um).
    #[arg(long)]
    pub sample_path_um: Option<f64>,
    /// Pump wavelength (nm).
    #[arg(long)]
    pub pump_nm: Option<f64>,
}

#[derive(Args, Debug, Default)]
pub struct SampleArgs {
    /// Sample spectrum file, absorbance or transmissivity (CSV or JSON).
    #[arg(long, value_name = "FILE", conflicts_with = "tau")]
    pub sample: Option<PathBuf>,
    /// Spectrally flat amplitude transmissivity.
    #[arg(long)]
    pub tau: Option<f64>,
    /// ATR penetration depth (nm) for absorbance samples.
    #[arg(long)]
    pub penetration_depth_nm: Option<f64>,
    /// ATR reflection count for absorbance samples.
    #[arg(long)]
    pub passes: Option<u32>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    /// Absorbance spectrum (CSV or JSON).
    pub input: PathBuf,
    /// Output file; defaults to <out-dir>/<input stem>_transmissivity.csv.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Buffer reference spectrum to subtract.
    #[arg(long, value_name = "FILE")]
    pub reference: Option<PathBuf>,
    /// Scale applied to the reference before subtraction.
    #[arg(long)]
    pub reference_scale: Option<f64>,
    /// Baseline anchor window LO HI (cm-1).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub baseline: Option<Vec<f64>>,
    /// Sample path L_m (um).
    #[arg(long)]
    pub sample_path_um: Option<f64>,
    /// ATR penetration depth (nm).
    #[arg(long)]
    pub penetration_depth_nm: Option<f64>,
    /// ATR reflection count.
    #[arg(long)]
    pub passes: Option<u32>,
    /// Axis of the written spectrum: cm-1, nm or um.
    #[arg(long)]
    pub axis: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sample: SampleArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Signal-wavelength samples.
    #[arg(long)]
    pub lambda_points: Option<usize>,
    /// Emission-angle samples.
    #[arg(long)]
    pub theta_points: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Sweep spec: a run config with a `sweep` section. Same as --config.
    pub spec: Option<PathBuf>,
    /// Swept parameter: crystal_L, sample_L_m or gap_L_a.
    #[arg(long)]
    pub parameter: Option<String>,
    /// Explicit values, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "range"
    )]
    pub values: Option<Vec<f64>>,
    /// Evenly spaced values: START STOP COUNT.
    #[arg(long, num_args = 3, value_names = ["START", "STOP", "COUNT"], allow_hyphen_values = true)]
    pub range: Option<Vec<f64>>,
    #[command(flatten)]
    pub sample: SampleArgs,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Signal-wavelength samples.
    #[arg(long)]
    pub lambda_points: Option<usize>,
    /// Emission-angle samples.
    #[arg(long)]
    pub theta_points: Option<usize>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Absorbance spectrum on a cm-1 axis.
    pub input: PathBuf,
    /// Buffer reference spectrum to subtract.
    #[arg(long, value_name = "FILE")]
    pub reference: Option<PathBuf>,
    /// Fit window LO HI (cm-1).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub window: Option<Vec<f64>>,
    /// Baseline anchor window LO HI (cm-1).
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    pub baseline: Option<Vec<f64>>,
    /// Fixed component centres (cm-1), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Visibility curve written by `simulate`.
    pub visibility: PathBuf,
    /// Transmissivity spectrum written by `ingest`.
    pub transmissivity: PathBuf,
    /// Pump wavelength (nm) for the axis mapping.
    #[arg(long)]
    pub pump_nm: Option<f64>,
    /// Wavenumber band LO HI (cm-1) for the statistics.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], conflicts_with = "full_range")]
    pub window: Option<Vec<f64>>,
    /// Use every visibility point inside the transmissivity range.
    #[arg(long)]
    pub full_range: bool,
}

/// 2 for usage and I/O problems, 1 for everything else.
fn exit_code(err: &anyhow::Error) -> u8 {
    use qsup_core::Error as E;
    let spectra_io =
        |e: &SpectraError| matches!(e, SpectraError::Io { .. } | SpectraError::Parse { .. });
    let dispersion_io =
        |e: &DispersionError| matches!(e, DispersionError::Io(_) | DispersionError::Parse(_));
    for cause in err.chain() {
        let usage = cause.is::<UsageError>()
            || cause.is::<std::io::Error>()
            || cause.downcast_ref::<SpectraError>().is_some_and(spectra_io)
            || cause
                .downcast_ref::<DispersionError>()
                .is_some_and(dispersion_io)
            || cause.downcast_ref::<E>().is_some_and(|e| match e {
                E::Spectra(s) => spectra_io(s),
                E::Dispersion(d) => dispersion_io(d),
                _ => false,
            });
        if usage {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
