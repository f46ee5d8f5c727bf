//! Convergence tables: one row per ladder rung, persisted as CSV with
//! `#`-prefixed metadata lines.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::harness::config::ExperimentConfig;
use crate::{Error, Result};

/// Columns whose values depend on the machine rather than the config.
pub const NONDETERMINISTIC_COLUMNS: &[&str] = &["runtime_s"];

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub experiment: String,
    pub config_hash: String,
    pub provenance: String,
    pub wall_clock: f64,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Scalars derived from the whole ladder (slopes, fitted rates, ...).
    pub summary: BTreeMap<String, f64>,
    /// Outcome of the experiment's own tolerance check, if it has one.
    pub passed: Option<bool>,
}

impl ConvergenceTable {
    pub fn new(experiment: impl Into<String>, config: &ExperimentConfig, columns: &[&str]) -> Result<Self> {
        Ok(ConvergenceTable {
            experiment: experiment.into(),
            config_hash: config.hash()?,
            provenance: provenance(config.numerics.seed),
            wall_clock: 0.0,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: BTreeMap::new(),
            passed: None,
        })
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::Shape(format!(
                "row has {} values, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    /// Rows with the nondeterministic columns removed, for replay comparison.
    pub fn deterministic_rows(&self) -> Vec<Vec<f64>> {
        let keep: Vec<usize> = (0..self.columns.len())
            .filter(|&j| !NONDETERMINISTIC_COLUMNS.contains(&self.columns[j].as_str()))
            .collect();
        self.rows.iter().map(|r| keep.iter().map(|&j| r[j]).collect()).collect()
    }

    /// Refuses a replay whose config hashes differently from the one that
    /// produced this table.
    pub fn check_config(&self, config: &ExperimentConfig) -> Result<()> {
        let h = config.hash()?;
        if h != self.config_hash {
            return Err(Error::HashMismatch {
                table: self.config_hash.clone(),
                config: h,
            });
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# experiment={}", self.experiment)?;
        writeln!(w, "# config_sha256={}", self.config_hash)?;
        writeln!(w, "# provenance={}", self.provenance)?;
        writeln!(w, "# wall_clock_s={}", self.wall_clock)?;
        if let Some(p) = self.passed {
            writeln!(w, "# passed={p}")?;
        }
        for (k, v) in &self.summary {
            writeln!(w, "# summary.{k}={v:e}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.columns)?;
        for row in &self.rows {
            // `{:e}` round-trips f64 exactly.
            out.write_record(row.iter().map(|v| format!("{v:e}")))?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read(text: &str) -> Result<Self> {
        let mut meta = BTreeMap::new();
        let mut summary = BTreeMap::new();
        let mut body = String::new();
        for line in text.lines() {
            if let Some(m) = line.strip_prefix("# ") {
                let (k, v) = m
                    .split_once('=')
                    .ok_or_else(|| Error::Shape(format!("bad metadata line `{line}`")))?;
                if let Some(name) = k.strip_prefix("summary.") {
                    summary.insert(name.to_string(), parse(v)?);
                } else {
                    meta.insert(k.to_string(), v.to_string());
                }
            } else {
                body.push_str(line);
                body.push('\n');
            }
        }
        let get = |k: &str| {
            meta.get(k)
                .cloned()
                .ok_or_else(|| Error::Shape(format!("table lacks `{k}` metadata")))
        };
        let mut reader = csv::Reader::from_reader(body.as_bytes());
        let columns: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            rows.push(rec?.iter().map(parse).collect::<Result<Vec<f64>>>()?);
        }
        Ok(ConvergenceTable {
            experiment: get("experiment")?,
            config_hash: get("config_sha256")?,
            provenance: get("provenance")?,
            wall_clock: parse(&get("wall_clock_s")?)?,
            columns,
            rows,
            summary,
            passed: meta.get("passed").map(|p| p == "true"),
        })
    }

    /// Writes via a temporary file and a rename so readers never see a
    /// partial table.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        write_atomic(path, &buf)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(&fs::read_to_string(path)?)
    }
}

fn parse(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Shape(format!("`{s}` is not a number")))
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

fn provenance(seed: u64) -> String {
    format!("lorentz-core {} seed={seed}", env!("CARGO_PKG_VERSION"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ExperimentConfig {
        ExperimentConfig::from_toml_str(
            "experiment = \"coefficient_sweep\"\nladder = [1e-5, 1e-7]\n[physics]\nalpha = 0.1\nmu = 1.0\nphi0 = 1.0\nspeed = 1.0\n\
             [numerics]\nL = 1.0\nnx = 2\nK = 1\ndt = 0.1\nsamples = 1\nseed = 3\n",
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let c = config();
        let mut t = ConvergenceTable::new("coefficient_sweep", &c, &["epsilon", "value", "runtime_s"]).unwrap();
        t.push_row(vec![1e-5, 0.1 + 0.2, 0.01]).unwrap();
        t.push_row(vec![1e-7, std::f64::consts::PI, 0.02]).unwrap();
        t.summary.insert("slope".into(), -1.0 / 3.0);
        t.passed = Some(true);
        assert!(t.push_row(vec![1.0]).is_err());
        let mut buf = Vec::new();
        t.write(&mut buf).unwrap();
        let back = ConvergenceTable::read(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.deterministic_rows()[1], vec![1e-7, std::f64::consts::PI]);
    }

    #[test]
    fn replay_with_other_config_is_refused() {
        let c = config();
        let t = ConvergenceTable::new("x", &c, &["a"]).unwrap();
        assert!(t.check_config(&c).is_ok());
        let mut other = c.clone();
        other.numerics.seed += 1;
        assert!(matches!(t.check_config(&other), Err(Error::HashMismatch { .. })));
    }
}
