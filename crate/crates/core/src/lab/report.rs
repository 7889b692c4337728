use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{ExperimentConfig, Format};
use crate::{Error, Result};

pub const SCHEMA: &str = "phlab-report/1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Bound {
    AtMost { value: f64 },
    AtLeast { value: f64 },
    Within { low: f64, high: f64 },
}

impl Bound {
    pub fn at_most(value: f64) -> Self {
        Bound::AtMost { value }
    }

    pub fn at_least(value: f64) -> Self {
        Bound::AtLeast { value }
    }

    pub fn within(low: f64, high: f64) -> Self {
        Bound::Within { low, high }
    }

    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost { value } => v <= value,
            Bound::AtLeast { value } => v >= value,
            Bound::Within { low, high } => (low..=high).contains(&v),
        }
    }

    fn describe(&self) -> String {
        match *self {
            Bound::AtMost { value } => format!("<= {value:e}"),
            Bound::AtLeast { value } => format!(">= {value:e}"),
            Bound::Within { low, high } => format!("in [{low}, {high}]"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub bound: Bound,
    /// NaN when the computation itself failed.
    pub measured: f64,
    pub passed: bool,
    /// Module error that prevented a measurement.
    pub error: Option<String>,
}

impl Check {
    pub fn line(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        match &self.error {
            Some(e) => format!("{status} {}: error: {e}", self.name),
            None => format!(
                "{status} {}: {:.6e} {}",
                self.name,
                self.measured,
                self.bound.describe()
            ),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub id: String,
    pub pipeline: String,
    pub map: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub tables: Vec<Table>,
    /// Kept out of the report file so that reruns are byte-identical.
    #[serde(skip)]
    pub wall_clock_s: f64,
}

/// Process exit status for a finished report.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    CheckFailed,
    NumericalFailure,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::CheckFailed => 1,
            Outcome::NumericalFailure => 3,
        }
    }
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn outcome(&self) -> Outcome {
        if self.checks.iter().any(|c| c.error.is_some()) {
            Outcome::NumericalFailure
        } else if self.passed() {
            Outcome::Pass
        } else {
            Outcome::CheckFailed
        }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }

    /// Writes the report in the requested format and returns the files written.
    ///
    /// JSON: `<id>.json`. CSV: `<id>.checks.csv` plus one `<id>.<table>.csv`
    /// per table. Both add `<id>.timing.json`.
    pub fn write(&self, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut out = vec![];
        match format {
            Format::Json => {
                let p = dir.join(format!("{}.json", self.id));
                fs::write(&p, self.to_json()? + "\n")?;
                out.push(p);
            }
            Format::Csv => {
                let p = dir.join(format!("{}.checks.csv", self.id));
                write_checks_csv(&p, &self.checks)?;
                out.push(p);
                for t in &self.tables {
                    let p = dir.join(format!("{}.{}.csv", self.id, t.name));
                    write_table_csv(&p, t)?;
                    out.push(p);
                }
            }
        }
        let p = dir.join(format!("{}.timing.json", self.id));
        fs::write(&p, format!("{{\"wall_clock_s\": {}}}\n", self.wall_clock_s))?;
        out.push(p);
        Ok(out)
    }
}

/// 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn write_checks_csv(path: &Path, checks: &[Check]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record([
        "name", "passed", "measured", "bound", "low", "high", "error",
    ])
    .map_err(csv_error)?;
    for c in checks {
        let (kind, lo, hi) = match c.bound {
            Bound::AtMost { value } => ("at_most", String::new(), fmt_f64(value)),
            Bound::AtLeast { value } => ("at_least", fmt_f64(value), String::new()),
            Bound::Within { low, high } => ("within", fmt_f64(low), fmt_f64(high)),
        };
        w.write_record([
            c.name.as_str(),
            if c.passed { "true" } else { "false" },
            &fmt_f64(c.measured),
            kind,
            &lo,
            &hi,
            c.error.as_deref().unwrap_or(""),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_table_csv(path: &Path, t: &Table) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    w.write_record(&t.columns).map_err(csv_error)?;
    for row in &t.rows {
        w.write_record(row.iter().map(|v| fmt_f64(*v)))
            .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
