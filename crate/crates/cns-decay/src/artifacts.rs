//! CSV, JSON-lines and manifest formats.
//!
//! Column orders are frozen; a change bumps [`SCHEMA_VERSION`].
//!
//! * `linear.csv`: [`LINEAR_COLUMNS`], continuum linear norms.
//! * `energy.csv`: [`energy_columns`], one [`EnergyReport`] per recorded state.
//! * `difference.csv`: [`DifferenceSample::COLUMNS`].
//! * `fits.jsonl`: one [`FitRecord`] per line.
//! * `manifest.json`: [`Manifest`], written on success and failure.
//!
//! Reals are written in shortest round-trip exponent form (`1.25e-3`),
//! flags as `true`/`false`.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use cns_decay_core::duhamel::DifferenceSample;
use cns_decay_core::energy::EnergyReport;
use cns_decay_core::fit::DecayFitResult;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

pub const LINEAR_CSV: &str = "linear.csv";
pub const ENERGY_CSV: &str = "energy.csv";
pub const DIFFERENCE_CSV: &str = "difference.csv";
pub const FITS_JSONL: &str = "fits.jsonl";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const CONFIG_TOML: &str = "config.toml";

pub const LINEAR_COLUMNS: [&str; 6] = ["t", "rho_l2", "m_l2", "total_l2", "grad_rho_l2", "grad_m_l2"];

pub fn energy_columns() -> Vec<&'static str> {
    let mut c = vec![
        "t",
        "rho_l2",
        "u_l2",
        "grad_rho_h1",
        "grad_u_h1",
        "grad2_u_h1",
        "grad2_rho_l2",
        "e1_sq",
        "cross_term",
    ];
    c.extend(EnergyReport::SPLIT_COLUMNS);
    c.extend(["dt_rho_l2", "dt_u_l2", "min_density", "floor_ok", "split_ok"]);
    c
}

pub fn real(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:e}")
    }
}

fn flag(b: bool) -> String {
    if b { "true" } else { "false" }.into()
}

pub fn energy_row(r: &EnergyReport) -> Vec<String> {
    let mut row: Vec<String> = [
        r.t,
        r.rho_l2,
        r.u_l2,
        r.grad_rho_h1,
        r.grad_u_h1,
        r.grad2_u_h1,
        r.grad2_rho_l2,
        r.e1_sq,
        r.cross_term,
    ]
    .into_iter()
    .map(real)
    .collect();
    row.extend(r.split_values().into_iter().map(real));
    row.extend([
        real(r.dt_rho_l2),
        real(r.dt_u_l2),
        real(r.min_density),
        flag(r.floor_ok),
        flag(r.split_ok()),
    ]);
    row
}

pub fn difference_row(s: &DifferenceSample) -> Vec<String> {
    s.values().into_iter().map(real).collect()
}

pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: impl IntoIterator<Item = Vec<String>>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(header.iter().map(|s| s.as_ref()))?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// A CSV file read back as named real columns; flags map to 0/1.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let mut r = csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
        let columns: Vec<String> = r.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| match f {
                    "true" => Ok(1.0),
                    "false" => Ok(0.0),
                    x => x.parse::<f64>(),
                })
                .collect::<Result<Vec<_>, _>>()
                .with_context(|| format!("{}: row {}", path.display(), line + 1))?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn column(&self, name: &str) -> anyhow::Result<Vec<f64>> {
        let Some(i) = self.columns.iter().position(|c| c == name) else {
            bail!("missing column `{name}`")
        };
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }

    /// `(t, column)` pairs.
    pub fn series(&self, name: &str) -> anyhow::Result<Vec<(f64, f64)>> {
        Ok(self.column("t")?.into_iter().zip(self.column(name)?).collect())
    }

    pub fn difference_samples(&self) -> anyhow::Result<Vec<DifferenceSample>> {
        let cols: Vec<Vec<f64>> = DifferenceSample::COLUMNS
            .iter()
            .map(|c| self.column(c))
            .collect::<anyhow::Result<_>>()?;
        Ok((0..self.rows.len())
            .map(|i| {
                let v = |c: usize| cols[c][i];
                DifferenceSample {
                    t: v(0),
                    delta: v(1),
                    linear: v(2),
                    full: v(3),
                    rho_delta_l2: v(4),
                    m_delta_l2: v(5),
                    rho_lin_l2: v(6),
                    m_lin_l2: v(7),
                    rho_l2: v(8),
                    m_l2: v(9),
                    u_l2: v(10),
                    rho_l3: v(11),
                    u_l6: v(12),
                }
            })
            .collect())
    }
}

/// One line of `fits.jsonl`. Non-finite reals are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    /// Artifact the series came from, e.g. `linear.csv`.
    pub source: String,
    pub quantity: String,
    pub exponent: Option<f64>,
    pub intercept: Option<f64>,
    pub window: [f64; 2],
    pub rms_residual: Option<f64>,
    pub target: f64,
    pub tolerance: f64,
    /// `two-sided` or `at-most`.
    pub comparison: String,
    pub samples: usize,
    pub pass: bool,
    pub degenerate: bool,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

impl FitRecord {
    pub fn new(source: &str, r: &DecayFitResult) -> Self {
        Self {
            source: source.into(),
            quantity: r.quantity.clone(),
            exponent: finite(r.exponent),
            intercept: finite(r.intercept),
            window: [r.window.0, r.window.1],
            rms_residual: finite(r.rms_residual),
            target: r.target,
            tolerance: r.tolerance,
            comparison: r.comparison.as_str().into(),
            samples: r.samples,
            pass: r.pass,
            degenerate: r.degenerate,
        }
    }
}

pub fn write_fits(path: &Path, fits: &[FitRecord]) -> anyhow::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for f in fits {
        serde_json::to_writer(&mut w, f)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fits(path: &Path) -> anyhow::Result<Vec<FitRecord>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}: line {}", path.display(), i + 1)))
        .collect()
}

/// A named pass/fail outcome beyond the power-law fits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub file: String,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub kind: String,
    pub status: String,
    /// Stage that failed: `config`, `initial-data`, `simulate`, `diagnostics`, `write`, `check`.
    pub failure_stage: Option<String>,
    pub error: Option<String>,
    pub exit_code: i32,
    pub config_hash: Option<String>,
    pub seed: Option<u64>,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub artifacts: Vec<String>,
    /// Column order of each CSV artifact.
    pub columns: BTreeMap<String, Vec<String>>,
    pub checkpoints: Vec<Checkpoint>,
    pub checks: Vec<Check>,
    pub info: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    pub fn new(kind: &str) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            kind: kind.into(),
            status: "running".into(),
            failure_stage: None,
            error: None,
            exit_code: 0,
            config_hash: None,
            seed: None,
            threads: rayon::current_num_threads(),
            wall_time_seconds: 0.0,
            artifacts: Vec::new(),
            columns: BTreeMap::new(),
            checkpoints: Vec::new(),
            checks: Vec::new(),
            info: BTreeMap::new(),
        }
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cns_decay_core::fit::{fit_power_law, Comparison};

    #[test]
    fn reals_round_trip_through_text() {
        for x in [0.0, 1.0, -2.5e-300, 1.0 / 3.0, f64::MAX, 7e22] {
            assert_eq!(real(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(real(f64::NAN), "NaN");
    }

    #[test]
    fn energy_header_matches_row_width() {
        assert_eq!(energy_columns().len(), 9 + 12 + 5);
    }

    #[test]
    fn table_and_fits_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        write_csv(
            &p,
            &["t", "v", "ok"],
            (0..12).map(|i| vec![real(i as f64), real((1.0 + i as f64).powf(-0.75)), flag(i % 2 == 0)]),
        )
        .unwrap();
        let t = Table::read(&p).unwrap();
        assert_eq!(t.column("ok").unwrap()[..2], [1.0, 0.0]);
        assert!(t.column("w").is_err());
        let fit = fit_power_law("v", &t.series("v").unwrap(), (0.0, 11.0), -0.75, 0.05, Comparison::TwoSided).unwrap();
        let rec = FitRecord::new("x.csv", &fit);
        let degen = FitRecord::new(
            "x.csv",
            &DecayFitResult::degenerate("z", (0.0, 1.0), -0.75, 0.05, Comparison::AtMost, 12),
        );
        let fp = dir.path().join("fits.jsonl");
        write_fits(&fp, &[rec.clone(), degen.clone()]).unwrap();
        assert_eq!(read_fits(&fp).unwrap(), vec![rec, degen.clone()]);
        assert!(degen.exponent.is_none());
    }
}
