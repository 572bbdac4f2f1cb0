//! CSV tables and run manifests.
//!
//! Numbers are written as `{:.16e}` (17 significant digits) so every `f64`
//! round-trips and identical runs give byte-identical files.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_owned(), source: e })
}

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        let csv_err = |e| CliError::Csv { path: path.to_owned(), source: e };
        let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| CliError::Io { path: path.to_owned(), source: e })
    }
}

/// `(quantity, value)` pairs that `compare` joins across modules.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Quantities(pub Vec<(String, f64)>);

impl Quantities {
    pub const FILE: &'static str = "quantities.csv";

    pub fn push(&mut self, name: impl Into<String>, value: f64) {
        self.0.push((name.into(), value));
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let mut t = Table::new(["quantity", "value"]);
        for (name, v) in &self.0 {
            t.push(vec![name.clone(), num(*v)]);
        }
        t.write(&dir.join(Self::FILE))
    }

    pub fn read(dir: &Path) -> Result<Self, CliError> {
        let path = dir.join(Self::FILE);
        if !path.is_file() {
            return Err(CliError::MissingOutput(path));
        }
        let csv_err = |e| CliError::Csv { path: path.clone(), source: e };
        let mut r = csv::Reader::from_path(&path).map_err(csv_err)?;
        let mut out = Quantities::default();
        for record in r.records() {
            let record = record.map_err(csv_err)?;
            let value = record[1].parse::<f64>().map_err(|e| CliError::Io {
                path: path.clone(),
                source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            })?;
            out.push(&record[0], value);
        }
        Ok(out)
    }
}

/// Transition label used by every module, `P(k->n)`.
pub fn transition_label(k: usize, n: usize) -> String {
    format!("P({k}->{n})")
}

/// Final-time expectation label, `<name>(T)`.
pub fn final_label(name: &str) -> String {
    format!("{name}(T)")
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: Tool,
    run: RunInfo<'a>,
    tunables: Tunables,
    config: &'a ExperimentConfig,
}

#[derive(Debug, Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
    core_version: &'static str,
}

#[derive(Debug, Serialize)]
struct RunInfo<'a> {
    subcommand: &'a str,
    seed: Option<u64>,
    notes: &'a [String],
}

/// Every library-side setting that affects a result, resolved.
#[derive(Debug, Serialize)]
struct Tunables {
    basis_dim: usize,
    interior_dim: usize,
    dirac_dt: f64,
    quasicanon_dt: f64,
    oracle_dt: f64,
    quadrature_min_panels_per_pulse: usize,
    quadrature_rel_tol: f64,
    quadrature_abs_floor: f64,
    quadrature_max_doublings: u32,
    invariance_tolerance: f64,
    degeneracy_tolerance: f64,
    codiagonal_tolerance: f64,
    consistency_tolerance: f64,
    consistency_floor: f64,
}

pub struct ManifestInput<'a> {
    pub subcommand: &'a str,
    pub seed: Option<u64>,
    pub config: &'a ExperimentConfig,
    pub basis_dim: usize,
    pub interior_dim: usize,
    pub notes: &'a [String],
}

pub fn write_manifest(dir: &Path, input: ManifestInput<'_>) -> Result<PathBuf, CliError> {
    let policy = tdpt_core::quadrature::QuadraturePolicy::default();
    let cfg = input.config;
    let manifest = Manifest {
        tool: Tool { name: "tdpt", version: env!("CARGO_PKG_VERSION"), core_version: tdpt_core::VERSION },
        run: RunInfo { subcommand: input.subcommand, seed: input.seed, notes: input.notes },
        tunables: Tunables {
            basis_dim: input.basis_dim,
            interior_dim: input.interior_dim,
            dirac_dt: cfg.dirac_dt(),
            quasicanon_dt: cfg.quasicanon_dt(),
            oracle_dt: cfg.oracle_dt(),
            quadrature_min_panels_per_pulse: policy.min_panels_per_pulse,
            quadrature_rel_tol: policy.rel_tol,
            quadrature_abs_floor: policy.abs_floor,
            quadrature_max_doublings: policy.max_doublings,
            invariance_tolerance: tdpt_core::quasicanon::INVARIANCE_TOLERANCE,
            degeneracy_tolerance: tdpt_core::soperator::DEGENERACY_TOLERANCE,
            codiagonal_tolerance: tdpt_core::soperator::CODIAGONAL_TOLERANCE,
            consistency_tolerance: tdpt_core::soperator::CONSISTENCY_TOLERANCE,
            consistency_floor: tdpt_core::soperator::CONSISTENCY_FLOOR,
        },
        config: cfg,
    };
    let text = toml::to_string(&manifest).map_err(|e| CliError::Io {
        path: dir.to_owned(),
        source: std::io::Error::other(e),
    })?;
    let path = dir.join("manifest.toml");
    std::fs::write(&path, text).map_err(|e| CliError::Io { path: path.clone(), source: e })?;
    Ok(path)
}
