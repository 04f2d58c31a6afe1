use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    Rates,
    FRef,
    FBi,
    Bracket,
    SubaddCert,
    PdeBound,
    GridDefect,
    Depoisson,
    Tails,
    Monotone,
    Concentration,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::Rates,
        Experiment::FRef,
        Experiment::FBi,
        Experiment::Bracket,
        Experiment::SubaddCert,
        Experiment::PdeBound,
        Experiment::GridDefect,
        Experiment::Depoisson,
        Experiment::Tails,
        Experiment::Monotone,
        Experiment::Concentration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Rates => "rates",
            Experiment::FRef => "f_ref",
            Experiment::FBi => "f_bi",
            Experiment::Bracket => "bracket",
            Experiment::SubaddCert => "subadd_cert",
            Experiment::PdeBound => "pde_bound",
            Experiment::GridDefect => "grid_defect",
            Experiment::Depoisson => "depoisson",
            Experiment::Tails => "tails",
            Experiment::Monotone => "monotone",
            Experiment::Concentration => "concentration",
        }
    }

    /// `(d, p, scales, replicates)` used when the config leaves them out.
    pub fn defaults(self) -> (usize, f64, Vec<f64>, usize) {
        match self {
            Experiment::Rates => (3, 1.0, vec![64.0, 128.0, 256.0, 512.0, 1024.0], 20),
            Experiment::FRef => (2, 2.0, vec![4.0, 8.0], 10),
            Experiment::FBi => (3, 2.0, vec![4.0, 6.0, 8.0], 20),
            Experiment::Bracket => (3, 2.0, vec![2.0, 4.0, 8.0], 10),
            Experiment::SubaddCert => (3, 2.0, vec![8.0], 100),
            Experiment::PdeBound => (2, 2.0, vec![8.0], 100),
            Experiment::GridDefect => (3, 1.0, vec![8.0, 16.0], 20),
            Experiment::Depoisson => (3, 2.0, vec![6.0, 8.0, 10.0], 32),
            Experiment::Tails => (1, 1.0, vec![100.0, 1000.0], 100_000),
            Experiment::Monotone => (3, 2.0, vec![8.0, 16.0, 32.0, 64.0], 50),
            Experiment::Concentration => (3, 1.0, vec![64.0, 512.0], 50),
        }
    }

    /// Scales are point counts rather than side lengths.
    pub fn scales_are_counts(self) -> bool {
        matches!(
            self,
            Experiment::Rates | Experiment::Monotone | Experiment::Concentration
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub d: usize,
    pub p: f64,
    /// `L` schedule, or `n` schedule for the fixed-count experiments.
    pub scales: Vec<f64>,
    pub replicates: usize,
    pub master_seed: u64,
    pub grid_per_unit: Option<usize>,
    pub epsilon: Option<f64>,
    pub theta: Option<f64>,
    /// Directory receiving `<experiment>.csv` and `<experiment>.json`.
    pub output_path: PathBuf,
}

/// Every field optional, as read from a JSON config file or from flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub experiment: Option<Experiment>,
    pub d: Option<usize>,
    pub p: Option<f64>,
    pub scales: Option<Vec<f64>>,
    pub replicates: Option<usize>,
    #[serde(alias = "seed")]
    pub master_seed: Option<u64>,
    pub grid_per_unit: Option<usize>,
    pub epsilon: Option<f64>,
    pub theta: Option<f64>,
    #[serde(alias = "out")]
    pub output_path: Option<PathBuf>,
}

/// A rejected field and the reason.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: &str, message: impl Into<String>) -> Self {
        Self {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

impl PartialConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ConfigError::new("config", format!("cannot read {}: {e}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))
    }

    /// Fields set in `other` win.
    pub fn overridden_by(self, other: PartialConfig) -> Self {
        Self {
            experiment: other.experiment.or(self.experiment),
            d: other.d.or(self.d),
            p: other.p.or(self.p),
            scales: other.scales.or(self.scales),
            replicates: other.replicates.or(self.replicates),
            master_seed: other.master_seed.or(self.master_seed),
            grid_per_unit: other.grid_per_unit.or(self.grid_per_unit),
            epsilon: other.epsilon.or(self.epsilon),
            theta: other.theta.or(self.theta),
            output_path: other.output_path.or(self.output_path),
        }
    }

    /// Fills defaults for the chosen experiment and validates.
    pub fn resolve(self) -> Result<ExperimentConfig, ConfigError> {
        let experiment = self
            .experiment
            .ok_or_else(|| ConfigError::new("experiment", "missing"))?;
        let (d, p, scales, replicates) = experiment.defaults();
        let config = ExperimentConfig {
            experiment,
            d: self.d.unwrap_or(d),
            p: self.p.unwrap_or(p),
            scales: self.scales.unwrap_or(scales),
            replicates: self.replicates.unwrap_or(replicates),
            master_seed: self.master_seed.unwrap_or(0),
            grid_per_unit: self.grid_per_unit,
            epsilon: self.epsilon,
            theta: self.theta,
            output_path: self
                .output_path
                .unwrap_or_else(|| PathBuf::from("matchlab_out")),
        };
        config.validate()?;
        Ok(config)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.d == 0 {
            return Err(ConfigError::new("d", "must be at least 1"));
        }
        if !(self.p.is_finite() && self.p >= 1.0) {
            return Err(ConfigError::new(
                "p",
                format!("must be a finite number ≥ 1, got {}", self.p),
            ));
        }
        if self.scales.is_empty() {
            return Err(ConfigError::new("scales", "must be nonempty"));
        }
        if let Some(s) = self.scales.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(ConfigError::new(
                "scales",
                format!("entries must be positive, got {s}"),
            ));
        }
        if self.experiment.scales_are_counts() && self.scales.iter().any(|s| s.fract() != 0.0) {
            return Err(ConfigError::new("scales", "point counts must be integers"));
        }
        if self.replicates < 2 {
            return Err(ConfigError::new(
                "replicates",
                format!("must be at least 2, got {}", self.replicates),
            ));
        }
        if self.grid_per_unit == Some(0) {
            return Err(ConfigError::new("grid_per_unit", "must be positive"));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e < 1.0) {
                return Err(ConfigError::new(
                    "epsilon",
                    format!("must lie in (0, 1), got {e}"),
                ));
            }
        }
        if let Some(t) = self.theta {
            if !(t.is_finite() && t > 0.0) {
                return Err(ConfigError::new(
                    "theta",
                    format!("must be positive, got {t}"),
                ));
            }
        }
        Ok(())
    }

    pub fn csv_path(&self) -> PathBuf {
        self.output_path.join(format!("{}.csv", self.experiment))
    }

    pub fn json_path(&self) -> PathBuf {
        self.output_path.join(format!("{}.json", self.experiment))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_match_serde() {
        for e in Experiment::ALL {
            assert_eq!(
                serde_json::to_string(&e).unwrap(),
                format!("\"{}\"", e.name())
            );
        }
    }

    #[test]
    fn flags_override_file() {
        let file = PartialConfig {
            experiment: Some(Experiment::Tails),
            d: Some(2),
            ..Default::default()
        };
        let flags = PartialConfig {
            d: Some(4),
            ..Default::default()
        };
        let c = file.overridden_by(flags).resolve().unwrap();
        assert_eq!((c.experiment, c.d), (Experiment::Tails, 4));
    }

    #[test]
    fn field_level_diagnostics() {
        let c = PartialConfig {
            experiment: Some(Experiment::FBi),
            replicates: Some(1),
            ..Default::default()
        };
        assert_eq!(c.resolve().unwrap_err().field, "replicates");
        let c = PartialConfig {
            experiment: Some(Experiment::Rates),
            scales: Some(vec![10.5]),
            ..Default::default()
        };
        assert_eq!(c.resolve().unwrap_err().field, "scales");
    }
}
