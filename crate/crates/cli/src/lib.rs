//! Command-line experiment runner for `oia-core`.
//!
//! An experiment is described by an optional `key = value` file; any flag
//! given on the command line replaces the file's value for that key.

pub mod config;
pub mod experiment;

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind, Origin, RawConfig};
pub use experiment::{CliError, FlopRow, RateRow, Report, Table};

#[derive(Debug, Clone, Parser)]
#[command(
    name = "oia",
    version,
    about = "Opportunistic interference alignment experiments"
)]
pub struct Cli {
    /// Configuration file with `key = value` lines.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// snr_sweep, user_scaling, convergence_in_k or complexity_table.
    #[arg(long)]
    pub experiment: Option<String>,
    /// Comma-separated schemes, e.g. OIA2,MAX_SNR.
    #[arg(long = "scheme", alias = "schemes")]
    pub schemes: Option<String>,
    /// Streams per user (transmit antennas).
    #[arg(long)]
    pub m: Option<String>,
    /// Receive antennas; must equal 2M.
    #[arg(long = "n-r")]
    pub n_r: Option<String>,
    /// Users per group for snr_sweep.
    #[arg(long)]
    pub k: Option<String>,
    /// Comma-separated group sizes for convergence_in_k and complexity_table.
    #[arg(long = "k-values")]
    pub k_values: Option<String>,
    /// Scaling constant in K = c P^(dof_m M) for user_scaling.
    #[arg(long)]
    pub c: Option<String>,
    /// Target degrees of freedom per user for user_scaling.
    #[arg(long = "dof-m")]
    pub dof_m: Option<String>,
    #[arg(long = "snr-start", allow_hyphen_values = true)]
    pub snr_start: Option<String>,
    #[arg(long = "snr-stop", allow_hyphen_values = true)]
    pub snr_stop: Option<String>,
    #[arg(long = "snr-step")]
    pub snr_step: Option<String>,
    /// Monte Carlo trials per point.
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for the CSV when --out is not given.
    #[arg(long = "output-dir", env = config::OUTPUT_DIR_ENV, default_value = ".")]
    pub output_dir: PathBuf,
}

impl Cli {
    fn flag_values(&self) -> Vec<(&'static str, String)> {
        let fields: [(&'static str, Option<String>); 14] = [
            ("experiment", self.experiment.clone()),
            ("schemes", self.schemes.clone()),
            ("m", self.m.clone()),
            ("n_r", self.n_r.clone()),
            ("k", self.k.clone()),
            ("k_values", self.k_values.clone()),
            ("c", self.c.clone()),
            ("dof_m", self.dof_m.clone()),
            ("snr_start", self.snr_start.clone()),
            ("snr_stop", self.snr_stop.clone()),
            ("snr_step", self.snr_step.clone()),
            ("trials", self.trials.clone()),
            ("seed", self.seed.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.map(|v| (k, v)))
            .collect()
    }

    /// Reads the config file (if any), applies flags and validates.
    pub fn resolve(&self) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?;
                RawConfig::parse_file(&text, path)?
            }
            None => RawConfig::default(),
        };
        let mut flags = RawConfig::default();
        for (key, value) in self.flag_values() {
            flags.set(key, &value, Origin::Flag(key.replace('_', "-")))?;
        }
        Ok(ExperimentConfig::from_raw(
            &file.merge(flags),
            &self.output_dir,
        )?)
    }
}

/// Runs the whole command and returns the process exit code.
pub fn run_cli<W: Write, E: Write>(cli: &Cli, stdout: &mut W, stderr: &mut E) -> i32 {
    let result = cli
        .resolve()
        .and_then(|cfg| experiment::execute(&cfg, stdout).map(|_| ()));
    match result {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err}");
            err.exit_code()
        }
    }
}
