//! Result records and file emission. A run writes three kinds of output
//! into its directory: `records.csv` (one row per reported quantity),
//! `raw_<kind>.csv` companions holding plot-ready columns, and
//! `run_meta.toml` with the fully resolved configuration written back.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// One reported quantity. `std_error` is set for sampled values,
/// `tolerance` for deterministic ones; informational rows carry neither.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub experiment: String,
    pub method: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub tolerance: Option<f64>,
    /// sample count behind the value; 0 for closed forms
    pub n: u64,
    pub wall_time_s: f64,
    pub seed: u64,
}

impl ResultRecord {
    /// Equality up to the wall clock, the reproducibility contract.
    pub fn same_numbers(&self, other: &ResultRecord) -> bool {
        self.experiment == other.experiment
            && self.method == other.method
            && self.value.to_bits() == other.value.to_bits()
            && opt_bits(self.std_error) == opt_bits(other.std_error)
            && opt_bits(self.tolerance) == opt_bits(other.tolerance)
            && self.n == other.n
            && self.seed == other.seed
    }
}

fn opt_bits(x: Option<f64>) -> Option<u64> {
    x.map(f64::to_bits)
}

/// Plot-data families, each with a fixed column set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    EndpointHistogram,
    DrivingTrace,
    GammaSlice,
}

impl PlotKind {
    pub const ALL: [PlotKind; 3] =
        [PlotKind::EndpointHistogram, PlotKind::DrivingTrace, PlotKind::GammaSlice];

    pub fn name(self) -> &'static str {
        match self {
            PlotKind::EndpointHistogram => "endpoint-histogram",
            PlotKind::DrivingTrace => "driving-trace",
            PlotKind::GammaSlice => "gamma-slice",
        }
    }

    pub fn parse(s: &str) -> Option<PlotKind> {
        PlotKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn columns(self) -> &'static [&'static str] {
        match self {
            PlotKind::EndpointHistogram => &["bin_center", "frequency", "a_of_x", "std_error"],
            PlotKind::DrivingTrace => &["t", "xi"],
            PlotKind::GammaSlice => &["x", "y", "gamma_value"],
        }
    }
}

/// Columnar plot data produced alongside the records.
#[derive(Debug, Clone)]
pub struct RawTable {
    pub kind: PlotKind,
    pub rows: Vec<Vec<f64>>,
}

impl RawTable {
    pub fn new(kind: PlotKind, rows: Vec<Vec<f64>>) -> Result<Self> {
        let width = kind.columns().len();
        if let Some(bad) = rows.iter().find(|r| r.len() != width) {
            bail!("{} rows need {width} columns, got {}", kind.name(), bad.len());
        }
        Ok(Self { kind, rows })
    }
}

pub fn records_path(dir: &Path) -> PathBuf {
    dir.join("records.csv")
}

pub fn raw_path(dir: &Path, kind: PlotKind) -> PathBuf {
    dir.join(format!("raw_{}.csv", kind.name()))
}

pub fn meta_path(dir: &Path) -> PathBuf {
    dir.join("run_meta.toml")
}

pub fn write_records(dir: &Path, records: &[ResultRecord]) -> Result<PathBuf> {
    let path = records_path(dir);
    let mut w = csv::Writer::from_path(&path)
        .with_context(|| format!("cannot create {}", path.display()))?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(path)
}

pub fn read_records(dir: &Path) -> Result<Vec<ResultRecord>> {
    let path = records_path(dir);
    let mut r = csv::Reader::from_path(&path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn write_raw_tables(dir: &Path, tables: &[RawTable]) -> Result<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for t in tables {
        let path = raw_path(dir, t.kind);
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("cannot create {}", path.display()))?;
        w.write_record(t.kind.columns())?;
        for row in &t.rows {
            w.write_record(row.iter().map(|x| format!("{x}")))?;
        }
        w.flush()?;
        paths.push(path);
    }
    Ok(paths)
}

/// Per-run metadata: the resolved configuration plus run bookkeeping.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunMeta {
    pub experiment: String,
    pub seed: u64,
    pub workers: usize,
    pub n_records: usize,
    pub wall_time_s: f64,
    pub config: ExperimentConfig,
}

pub fn write_meta(dir: &Path, meta: &RunMeta) -> Result<PathBuf> {
    let path = meta_path(dir);
    fs::write(&path, toml::to_string_pretty(meta)?)
        .with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

/// Re-emits one plot-data family from a finished run: checks that the
/// records all belong to a single experiment, that the requested kind was
/// produced by that run, and copies the validated columns to `out`.
pub fn emit_plot_data(run_dir: &Path, kind: PlotKind, out: &Path) -> Result<()> {
    let records = read_records(run_dir)?;
    let Some(first) = records.first() else {
        bail!("{} holds no records", records_path(run_dir).display());
    };
    if records.iter().any(|r| r.experiment != first.experiment) {
        bail!("records mix experiments; plot data needs a single-experiment run");
    }
    let src = raw_path(run_dir, kind);
    if !src.exists() {
        bail!(
            "run '{}' produced no {} data; available kinds: {}",
            first.experiment,
            kind.name(),
            available_kinds(run_dir).join(", ")
        );
    }
    let mut r = csv::Reader::from_path(&src)?;
    let headers = r.headers()?.clone();
    let expected = kind.columns();
    if headers.iter().ne(expected.iter().copied()) {
        bail!("{} has unexpected columns {:?}", src.display(), headers);
    }
    let mut w = csv::Writer::from_path(out)
        .with_context(|| format!("cannot create {}", out.display()))?;
    w.write_record(expected)?;
    for row in r.records() {
        let row = row?;
        for cell in row.iter() {
            cell.parse::<f64>()
                .with_context(|| format!("{}: non-numeric cell '{cell}'", src.display()))?;
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn available_kinds(run_dir: &Path) -> Vec<&'static str> {
    PlotKind::ALL
        .into_iter()
        .filter(|k| raw_path(run_dir, *k).exists())
        .map(|k| k.name())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(exp: &str, method: &str, value: f64) -> ResultRecord {
        ResultRecord {
            experiment: exp.into(),
            method: method.into(),
            value,
            std_error: Some(0.1),
            tolerance: None,
            n: 10,
            wall_time_s: 0.5,
            seed: 1,
        }
    }

    #[test]
    fn records_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let records =
            vec![rec("zipper-roundtrip", "rms-coarse", 1e-4), rec("zipper-roundtrip", "ratio", 0.5)];
        write_records(dir.path(), &records).unwrap();
        let back = read_records(dir.path()).unwrap();
        assert_eq!(records, back);
    }

    #[test]
    fn plot_emission_rejects_mixed_experiments() {
        let dir = tempfile::tempdir().unwrap();
        let records = vec![rec("zipper-roundtrip", "a", 1.0), rec("toy-appendix", "b", 2.0)];
        write_records(dir.path(), &records).unwrap();
        let table =
            RawTable::new(PlotKind::DrivingTrace, vec![vec![0.0, 0.0], vec![0.1, 0.2]]).unwrap();
        write_raw_tables(dir.path(), &[table]).unwrap();
        let err = emit_plot_data(dir.path(), PlotKind::DrivingTrace, &dir.path().join("p.csv"))
            .unwrap_err();
        assert!(format!("{err:#}").contains("mix"), "{err:#}");
    }

    #[test]
    fn plot_emission_copies_validated_columns() {
        let dir = tempfile::tempdir().unwrap();
        write_records(dir.path(), &[rec("driving-statistics", "kappa-hat", 2.0)]).unwrap();
        let table =
            RawTable::new(PlotKind::DrivingTrace, vec![vec![0.0, 0.3], vec![0.1, 0.25]]).unwrap();
        write_raw_tables(dir.path(), &[table]).unwrap();
        let out = dir.path().join("plot.csv");
        emit_plot_data(dir.path(), PlotKind::DrivingTrace, &out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert!(text.starts_with("t,xi\n"), "missing header: {text}");
        assert!(text.contains("0.1,0.25"), "{text}");
        let err = emit_plot_data(dir.path(), PlotKind::GammaSlice, &out).unwrap_err();
        assert!(format!("{err:#}").contains("gamma-slice"), "{err:#}");
    }

    #[test]
    fn raw_tables_enforce_column_width() {
        assert!(RawTable::new(PlotKind::DrivingTrace, vec![vec![1.0, 2.0, 3.0]]).is_err());
    }
}
