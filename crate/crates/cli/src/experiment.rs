//! Runs a configured experiment and writes its CSV, manifest and summary.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use oia_core::complexity::scheme_flops;
use oia_core::simulate::{dof_slope, run_convergence, run_sweep};
use oia_core::{KRule, OiaError, SchemeId, SweepResult, SweepSpec};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, ExperimentKind};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("cannot access {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("cannot write CSV {path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("simulation failed: {0}")]
    Simulation(#[from] OiaError),
}

impl CliError {
    /// 2 for bad input, 3 for I/O, 1 for anything the simulation rejects.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Csv { .. } => 3,
            CliError::Simulation(_) => 1,
        }
    }
}

/// One line of a rate CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub scheme: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub snr_db: f64,
    pub mean_rate: f64,
    pub std_err: f64,
    pub trials: usize,
}

/// One line of a complexity CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopRow {
    pub scheme: String,
    #[serde(rename = "K")]
    pub k: u64,
    pub n_r: u64,
    pub flops: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Table {
    Rates(Vec<RateRow>),
    Flops(Vec<FlopRow>),
}

#[derive(Debug, Clone)]
pub struct Report {
    pub table: Table,
    /// Per-scheme sweeps, kept for the DoF summary.
    pub sweeps: Vec<SweepResult>,
}

fn rows_from(result: &SweepResult) -> impl Iterator<Item = RateRow> + '_ {
    result.records.iter().map(move |r| RateRow {
        scheme: result.scheme.name().to_string(),
        m: result.m,
        k: r.k,
        snr_db: r.snr_db,
        mean_rate: r.mean_rate,
        std_err: r.std_error,
        trials: r.trials,
    })
}

pub fn run(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    match cfg.experiment {
        ExperimentKind::SnrSweep | ExperimentKind::UserScaling => {
            let k_rule = if cfg.experiment == ExperimentKind::SnrSweep {
                KRule::Fixed(cfg.k)
            } else {
                KRule::Scaled {
                    c: cfg.c,
                    dof: cfg.dof_m,
                }
            };
            let sweeps = cfg
                .schemes
                .iter()
                .map(|&scheme| {
                    run_sweep(&SweepSpec {
                        scheme,
                        m: cfg.m,
                        k_rule,
                        snr_db: cfg.snr_points(),
                        trials: cfg.trials,
                        seed: cfg.seed,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            let rows = sweeps.iter().flat_map(rows_from).collect();
            Ok(Report {
                table: Table::Rates(rows),
                sweeps,
            })
        }
        ExperimentKind::ConvergenceInK => {
            let ks: Vec<usize> = cfg.k_values.iter().map(|&k| k as usize).collect();
            let mut rows = Vec::new();
            for &scheme in &cfg.schemes {
                let records =
                    run_convergence(scheme, cfg.m, cfg.snr_start, &ks, cfg.trials, cfg.seed)?;
                rows.extend(rows_from(&SweepResult {
                    scheme,
                    m: cfg.m,
                    records,
                }));
            }
            Ok(Report {
                table: Table::Rates(rows),
                sweeps: Vec::new(),
            })
        }
        ExperimentKind::ComplexityTable => {
            let mut rows = Vec::new();
            for &scheme in &cfg.schemes {
                for &k in &cfg.k_values {
                    rows.push(FlopRow {
                        scheme: scheme.name().to_string(),
                        k,
                        n_r: cfg.n_r as u64,
                        flops: scheme_flops(scheme, k, cfg.n_r as u64)?,
                    });
                }
            }
            Ok(Report {
                table: Table::Flops(rows),
                sweeps: Vec::new(),
            })
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for row in rows {
        writer.serialize(row).map_err(csv_err(path))?;
    }
    writer.flush().map_err(io_err(path))
}

/// Writes the CSV. Floats use the shortest representation that parses back
/// to the same `f64`, so downstream analysis sees exactly what was computed.
pub fn write_csv(path: &Path, table: &Table) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    match table {
        Table::Rates(rows) => write_rows(path, rows),
        Table::Flops(rows) => write_rows(path, rows),
    }
}

pub fn read_rate_csv(path: &Path) -> Result<Vec<RateRow>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    reader
        .deserialize()
        .collect::<Result<Vec<RateRow>, _>>()
        .map_err(csv_err(path))
}

pub fn read_flop_csv(path: &Path) -> Result<Vec<FlopRow>, CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    reader
        .deserialize()
        .collect::<Result<Vec<FlopRow>, _>>()
        .map_err(csv_err(path))
}

/// Groups rate rows back into per-scheme sweeps, in first-seen order.
pub fn sweeps_from_rows(rows: &[RateRow]) -> Result<Vec<SweepResult>, CliError> {
    let mut out: Vec<SweepResult> = Vec::new();
    for row in rows {
        let scheme: SchemeId = row.scheme.parse()?;
        let record = oia_core::SweepRecord {
            snr_db: row.snr_db,
            k: row.k,
            mean_rate: row.mean_rate,
            std_error: row.std_err,
            trials: row.trials,
            redraws: 0,
        };
        match out.iter_mut().find(|s| s.scheme == scheme && s.m == row.m) {
            Some(sweep) => sweep.records.push(record),
            None => out.push(SweepResult {
                scheme,
                m: row.m,
                records: vec![record],
            }),
        }
    }
    Ok(out)
}

/// `<stem>.manifest.json` next to the CSV.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    csv_path.with_file_name(format!("{stem}.manifest.json"))
}

pub fn manifest(cfg: &ExperimentConfig) -> serde_json::Value {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    serde_json::json!({
        "config": {
            "experiment": cfg.experiment.name(),
            "schemes": cfg.schemes.iter().map(|s| s.name()).collect::<Vec<_>>(),
            "m": cfg.m,
            "n_r": cfg.n_r,
            "k": cfg.k,
            "k_values": cfg.k_values,
            "c": cfg.c,
            "dof_m": cfg.dof_m,
            "snr_start": cfg.snr_start,
            "snr_stop": cfg.snr_stop,
            "snr_step": cfg.snr_step,
            "trials": cfg.trials,
            "out": cfg.out.display().to_string(),
        },
        "seed": cfg.seed,
        "oia_core_version": oia_core::VERSION,
        "timestamp_unix": timestamp,
    })
}

pub fn write_manifest(cfg: &ExperimentConfig) -> Result<PathBuf, CliError> {
    let path = manifest_path(&cfg.out);
    let text = serde_json::to_string_pretty(&manifest(cfg)).expect("manifest is plain JSON");
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(path)
}

/// Formats `x` with six significant digits.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// Human-readable summary; the DoF slope is fitted over the top 20 dB of each
/// sweep (or the whole sweep when it is narrower).
pub fn write_summary<W: Write>(
    out: &mut W,
    cfg: &ExperimentConfig,
    report: &Report,
) -> io::Result<()> {
    writeln!(
        out,
        "experiment {} -> {}",
        cfg.experiment.name(),
        cfg.out.display()
    )?;
    match &report.table {
        Table::Rates(rows) => {
            writeln!(
                out,
                "{:<8} {:>6} {:>9} {:>12} {:>12}",
                "scheme", "K", "snr_db", "mean_rate", "std_err"
            )?;
            for r in rows {
                writeln!(
                    out,
                    "{:<8} {:>6} {:>9} {:>12} {:>12}",
                    r.scheme,
                    r.k,
                    sig6(r.snr_db),
                    sig6(r.mean_rate),
                    sig6(r.std_err)
                )?;
            }
        }
        Table::Flops(rows) => {
            writeln!(
                out,
                "{:<8} {:>6} {:>5} {:>16}",
                "scheme", "K", "n_r", "flops"
            )?;
            for r in rows {
                writeln!(
                    out,
                    "{:<8} {:>6} {:>5} {:>16}",
                    r.scheme, r.k, r.n_r, r.flops
                )?;
            }
        }
    }
    for sweep in &report.sweeps {
        let hi = cfg.snr_stop;
        let lo = (hi - 20.0).max(cfg.snr_start);
        match dof_slope(sweep, lo, hi) {
            Ok(slope) => writeln!(
                out,
                "{} DoF slope over [{}, {}] dB: {}",
                sweep.scheme,
                sig6(lo),
                sig6(hi),
                sig6(slope)
            )?,
            Err(_) => writeln!(out, "{} DoF slope: too few SNR points", sweep.scheme)?,
        }
    }
    Ok(())
}

/// Full pipeline: simulate, write CSV and manifest, print summary.
pub fn execute<W: Write>(cfg: &ExperimentConfig, stdout: &mut W) -> Result<Report, CliError> {
    let report = run(cfg)?;
    write_csv(&cfg.out, &report.table)?;
    write_manifest(cfg)?;
    write_summary(stdout, cfg, &report).map_err(io_err(Path::new("<stdout>")))?;
    Ok(report)
}
