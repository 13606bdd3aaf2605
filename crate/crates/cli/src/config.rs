//! Experiment configuration: a flat `key = value` file plus flag overrides.
//!
//! Every value remembers where it came from so that validation errors can
//! point at the offending line or flag.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use oia_core::SchemeId;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "OIA_OUTPUT_DIR";

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "schemes",
    "m",
    "n_r",
    "k",
    "k_values",
    "c",
    "dof_m",
    "snr_start",
    "snr_stop",
    "snr_step",
    "trials",
    "seed",
    "out",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line { file: PathBuf, line: usize },
    Flag(String),
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line { file, line } => write!(f, "{} line {}", file.display(), line),
            Origin::Flag(name) => write!(f, "flag --{name}"),
            Origin::Default => f.write_str("defaults"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Origin,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}, field `{}`: {}",
            self.origin, self.field, self.message
        )
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    SnrSweep,
    UserScaling,
    ConvergenceInK,
    ComplexityTable,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::SnrSweep => "snr_sweep",
            ExperimentKind::UserScaling => "user_scaling",
            ExperimentKind::ConvergenceInK => "convergence_in_k",
            ExperimentKind::ComplexityTable => "complexity_table",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "snr_sweep" => Ok(ExperimentKind::SnrSweep),
            "user_scaling" => Ok(ExperimentKind::UserScaling),
            "convergence_in_k" => Ok(ExperimentKind::ConvergenceInK),
            "complexity_table" => Ok(ExperimentKind::ComplexityTable),
            other => Err(format!(
                "unknown experiment '{other}' (expected snr_sweep, user_scaling, convergence_in_k or complexity_table)"
            )),
        }
    }
}

/// Raw key-value pairs with their origins; later inserts win.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    values: BTreeMap<String, (String, Origin)>,
}

impl RawConfig {
    pub fn parse_file(text: &str, file: &Path) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let origin = Origin::Line {
                file: file.to_path_buf(),
                line: idx + 1,
            };
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once(['=', ':']) else {
                return Err(ConfigError {
                    origin,
                    field: content.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            raw.set(key.trim(), value.trim(), origin)?;
        }
        Ok(raw)
    }

    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        let key = key.trim().to_ascii_lowercase().replace('-', "_");
        let key = if key == "scheme" {
            "schemes".to_string()
        } else {
            key
        };
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError {
                origin,
                field: key,
                message: "unknown key".into(),
            });
        }
        self.values.insert(key, (value.to_string(), origin));
        Ok(())
    }

    /// Overlay `other` on top of `self`.
    pub fn merge(mut self, other: RawConfig) -> Self {
        self.values.extend(other.values);
        self
    }

    fn get(&self, key: &str) -> Option<&(String, Origin)> {
        self.values.get(key)
    }

    fn parse<T: FromStr>(&self, key: &str, what: &str) -> Result<Option<(T, Origin)>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some((value, origin)) => value
                .parse::<T>()
                .map(|v| Some((v, origin.clone())))
                .map_err(|_| ConfigError {
                    origin: origin.clone(),
                    field: key.into(),
                    message: format!("expected {what}, got '{value}'"),
                }),
        }
    }

    fn parse_list<T: FromStr>(
        &self,
        key: &str,
        what: &str,
    ) -> Result<Option<(Vec<T>, Origin)>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some((value, origin)) => {
                let items = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>().map_err(|_| ConfigError {
                            origin: origin.clone(),
                            field: key.into(),
                            message: format!(
                                "expected a comma-separated list of {what}, got '{s}'"
                            ),
                        })
                    })
                    .collect::<Result<Vec<T>, _>>()?;
                if items.is_empty() {
                    return Err(ConfigError {
                        origin: origin.clone(),
                        field: key.into(),
                        message: "list is empty".into(),
                    });
                }
                Ok(Some((items, origin.clone())))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub schemes: Vec<SchemeId>,
    pub m: usize,
    pub n_r: usize,
    /// Fixed group size for `snr_sweep`.
    pub k: usize,
    /// Group sizes for `convergence_in_k` and `complexity_table`.
    pub k_values: Vec<u64>,
    /// `K(P) = max(1, round(c P^{dof_m M}))` for `user_scaling`.
    pub c: f64,
    pub dof_m: f64,
    pub snr_start: f64,
    pub snr_stop: f64,
    pub snr_step: f64,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
}

fn invalid(origin: Origin, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError {
        origin,
        field: field.into(),
        message: message.into(),
    }
}

/// 1, 2, 5, 10, 20, 50, ... up to 10^4.
fn log_spaced_users() -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1;
    while decade <= 10_000 {
        for step in [1, 2, 5] {
            if step * decade <= 10_000 {
                out.push(step * decade);
            }
        }
        decade *= 10;
    }
    out
}

impl ExperimentConfig {
    /// Builds and validates a configuration. `default_dir` is where the CSV
    /// goes when no `out` key is given.
    pub fn from_raw(raw: &RawConfig, default_dir: &Path) -> Result<Self, ConfigError> {
        let experiment = match raw.get("experiment") {
            Some((v, origin)) => v
                .parse::<ExperimentKind>()
                .map_err(|e| invalid(origin.clone(), "experiment", e))?,
            None => ExperimentKind::SnrSweep,
        };

        let schemes = match raw.parse_list::<SchemeId>("schemes", "scheme names")? {
            Some((list, origin)) => {
                if experiment == ExperimentKind::ComplexityTable {
                    if let Some(bad) = list
                        .iter()
                        .find(|s| !matches!(s, SchemeId::MaxSnr | SchemeId::Oia1 | SchemeId::Oia2))
                    {
                        return Err(invalid(
                            origin,
                            "schemes",
                            format!("no flop model for {bad}; use MAX_SNR, OIA1 or OIA2"),
                        ));
                    }
                }
                list
            }
            None if experiment == ExperimentKind::ComplexityTable => {
                vec![SchemeId::MaxSnr, SchemeId::Oia1, SchemeId::Oia2]
            }
            None => vec![SchemeId::Oia2],
        };

        let m_raw = raw.parse::<usize>("m", "a positive integer")?;
        let n_r_raw = raw.parse::<usize>("n_r", "a positive integer")?;
        let (m, n_r) = match (m_raw, n_r_raw) {
            (Some((0, origin)), _) => {
                return Err(invalid(origin, "m", "M must be at least 1"));
            }
            (Some((m, _)), Some((n_r, origin))) => {
                if n_r != 2 * m {
                    return Err(invalid(
                        origin,
                        "n_r",
                        format!("N_R must equal 2M = {} (got {n_r})", 2 * m),
                    ));
                }
                (m, n_r)
            }
            (Some((m, _)), None) => (m, 2 * m),
            (None, Some((n_r, origin))) => {
                if n_r < 2 || !n_r.is_multiple_of(2) {
                    return Err(invalid(
                        origin,
                        "n_r",
                        format!("N_R must be even and >= 2 (got {n_r})"),
                    ));
                }
                (n_r / 2, n_r)
            }
            (None, None) => (1, 2),
        };

        let k = match raw.parse::<usize>("k", "a positive integer")? {
            Some((0, origin)) => return Err(invalid(origin, "k", "K must be at least 1")),
            Some((k, _)) => k,
            None => 50,
        };

        let k_values = match raw.parse_list::<u64>("k_values", "positive integers")? {
            Some((list, origin)) => {
                if list.contains(&0) {
                    return Err(invalid(origin, "k_values", "every K must be at least 1"));
                }
                list
            }
            None if experiment == ExperimentKind::ComplexityTable => log_spaced_users(),
            None => vec![1, 10, 100, 1000],
        };

        let c = match raw.parse::<f64>("c", "a number")? {
            Some((c, origin)) if !(c > 0.0 && c.is_finite()) => {
                return Err(invalid(origin, "c", "scaling constant must be positive"));
            }
            Some((c, _)) => c,
            None => 1.0,
        };
        let dof_m = match raw.parse::<f64>("dof_m", "a number")? {
            Some((d, origin)) if !(0.0..=m as f64).contains(&d) => {
                return Err(invalid(
                    origin,
                    "dof_m",
                    format!("target DoF must lie in [0, M = {m}]"),
                ));
            }
            Some((d, _)) => d,
            None => 1.0f64.min(m as f64),
        };

        let snr_start = raw.parse::<f64>("snr_start", "a number (dB)")?;
        let snr_stop = raw.parse::<f64>("snr_stop", "a number (dB)")?;
        let snr_step = raw.parse::<f64>("snr_step", "a number (dB)")?;
        let step_origin = snr_step
            .as_ref()
            .map(|s| s.1.clone())
            .unwrap_or(Origin::Default);
        let stop_origin = snr_stop
            .as_ref()
            .map(|s| s.1.clone())
            .unwrap_or(Origin::Default);
        let snr_start = snr_start.map(|s| s.0).unwrap_or(0.0);
        let snr_stop = snr_stop.map(|s| s.0).unwrap_or(50.0);
        let snr_step = snr_step.map(|s| s.0).unwrap_or(5.0);
        if !(snr_step > 0.0 && snr_step.is_finite()) {
            return Err(invalid(step_origin, "snr_step", "step must be positive"));
        }
        if !(snr_start.is_finite() && snr_stop.is_finite()) || snr_stop < snr_start {
            return Err(invalid(
                stop_origin,
                "snr_stop",
                format!("empty SNR range {snr_start}..{snr_stop} dB"),
            ));
        }

        let trials = match raw.parse::<usize>("trials", "a positive integer")? {
            Some((0, origin)) => {
                return Err(invalid(origin, "trials", "trials must be at least 1"))
            }
            Some((t, _)) => t,
            None => 2000,
        };
        let seed = raw
            .parse::<u64>("seed", "a non-negative integer")?
            .map(|s| s.0)
            .unwrap_or(1);
        let out = match raw.get("out") {
            Some((path, _)) => PathBuf::from(path),
            None => default_dir.join(format!("{}.csv", experiment.name())),
        };

        Ok(Self {
            experiment,
            schemes,
            m,
            n_r,
            k,
            k_values,
            c,
            dof_m,
            snr_start,
            snr_stop,
            snr_step,
            trials,
            seed,
            out,
        })
    }

    /// `snr_start, snr_start + step, ...` up to `snr_stop` inclusive.
    pub fn snr_points(&self) -> Vec<f64> {
        let span = (self.snr_stop - self.snr_start) / self.snr_step;
        let count = (span + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.snr_start + i as f64 * self.snr_step)
            .collect()
    }
}
