use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowKind {
    Replicate,
    Aggregate,
    Fit,
}

impl RowKind {
    fn as_str(self) -> &'static str {
        match self {
            RowKind::Replicate => "replicate",
            RowKind::Aggregate => "aggregate",
            RowKind::Fit => "fit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment: Experiment,
    pub d: usize,
    pub p: f64,
    /// `L` or `n`; empty for fit rows spanning all scales.
    pub scale: Option<f64>,
    pub kind: RowKind,
    pub replicate: Option<usize>,
    pub seed: u64,
    pub value: f64,
    /// One entry per auxiliary column of the experiment, `None` when not applicable.
    pub aux: Vec<Option<f64>>,
}

/// Rows of one experiment under its fixed column set.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub experiment: Experiment,
    pub aux_columns: &'static [&'static str],
    pub rows: Vec<ResultRow>,
}

pub const BASE_COLUMNS: [&str; 8] = [
    "experiment",
    "d",
    "p",
    "scale",
    "kind",
    "replicate",
    "seed",
    "value",
];

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x}")
}

impl Table {
    pub fn new(experiment: Experiment, aux_columns: &'static [&'static str]) -> Self {
        Self {
            experiment,
            aux_columns,
            rows: Vec::new(),
        }
    }

    pub fn push(
        &mut self,
        config: &ExperimentConfig,
        scale: Option<f64>,
        kind: RowKind,
        replicate: Option<usize>,
        value: f64,
        aux: Vec<Option<f64>>,
    ) {
        self.rows.push(ResultRow {
            experiment: self.experiment,
            d: config.d,
            p: config.p,
            scale,
            kind,
            replicate,
            seed: config.master_seed,
            value,
            aux,
        });
    }

    pub fn columns(&self) -> Vec<&'static str> {
        BASE_COLUMNS
            .iter()
            .chain(self.aux_columns)
            .copied()
            .collect()
    }

    /// Every row matches the column set and carries finite numbers.
    pub fn validate(&self) -> Result<(), String> {
        for (i, r) in self.rows.iter().enumerate() {
            if r.experiment != self.experiment {
                return Err(format!("row {i} belongs to {}", r.experiment));
            }
            if r.aux.len() != self.aux_columns.len() {
                return Err(format!(
                    "row {i} has {} auxiliary values for {} columns",
                    r.aux.len(),
                    self.aux_columns.len()
                ));
            }
            let numbers = std::iter::once(Some(r.p))
                .chain([r.scale, Some(r.value)])
                .chain(r.aux.iter().copied());
            if numbers.flatten().any(|x| !x.is_finite()) {
                return Err(format!("row {i} has a non-finite value"));
            }
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns().join(",");
        out.push('\n');
        let opt = |x: Option<f64>| x.map(format_number).unwrap_or_default();
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.experiment,
                r.d,
                format_number(r.p),
                opt(r.scale),
                r.kind.as_str(),
                r.replicate.map(|i| i.to_string()).unwrap_or_default(),
                r.seed,
                format_number(r.value)
            );
            for &a in &r.aux {
                out.push(',');
                out.push_str(&opt(a));
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub aggregates: Vec<serde_json::Value>,
    pub assertions: Vec<Assertion>,
    /// Replicates whose instance was infeasible for a lower-level routine.
    pub infeasible_replicates: usize,
    pub runtime_seconds: f64,
    pub version: String,
}

impl Summary {
    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn write_json(&self, path: &Path) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(self).map_err(io::Error::other)?;
        text.push('\n');
        std::fs::write(path, text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0, 1e-300, -7.25e12, f64::MIN_POSITIVE] {
            assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_number(2.0), "2");
        assert_eq!(format_number(0.1), "0.1");
    }
}
