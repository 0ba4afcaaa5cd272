//! Results CSV and run manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ltest::competitors::Method;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::experiment::ResultRow;
use crate::spec::ExperimentSpec;

pub const CSV_HEADER: &str = "n,p,design,method,s,rejection_rate,mc_se,replications,B,wall_time_s";

/// Renders rows sorted by the key columns, 6 fixed decimals, LF endings.
pub fn render_csv(rows: &[ResultRow]) -> String {
    let mut sorted = rows.to_vec();
    sorted.sort_by(ResultRow::key_cmp);
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &sorted {
        let s = r.s.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{},{},{:.6}",
            r.n, r.p, r.design, r.method, s, r.rejection_rate, r.mc_se, r.replications, r.b, r.wall_time_s
        );
    }
    out
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(HarnessError::Parse {
            path: path.to_path_buf(),
            message: "no rows to write".into(),
        });
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::write(path, render_csv(rows)).map_err(|e| HarnessError::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = reader.headers().map_err(csv_err)?.iter().collect::<Vec<_>>().join(",");
    if header != CSV_HEADER {
        return Err(HarnessError::Parse {
            path: path.to_path_buf(),
            message: format!("unexpected header '{header}'"),
        });
    }
    reader.deserialize().map(|r| r.map_err(csv_err)).collect()
}

/// The manifest written next to a results CSV: `results.csv` gets
/// `results.manifest.json`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("manifest.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodNote {
    pub method: Method,
    pub stand_in: bool,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub spec: ExperimentSpec,
    pub master_seed: u64,
    pub harness_version: String,
    pub core_version: String,
    pub rows: usize,
    pub results_csv: String,
    pub wall_time_s: f64,
    pub methods: Vec<MethodNote>,
}

impl Manifest {
    pub fn new(command: &str, spec: &ExperimentSpec, rows: usize, csv_path: &Path, wall_time_s: f64) -> Self {
        Self {
            command: command.to_string(),
            spec: spec.clone(),
            master_seed: spec.master_seed,
            harness_version: env!("CARGO_PKG_VERSION").to_string(),
            core_version: ltest::VERSION.to_string(),
            rows,
            results_csv: csv_path
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
            wall_time_s,
            methods: spec
                .methods
                .iter()
                .map(|&m| MethodNote {
                    method: m,
                    stand_in: m.is_stand_in(),
                    description: m.description().to_string(),
                })
                .collect(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })?;
        std::fs::write(path, text + "\n").map_err(|e| HarnessError::io(path, e))
    }
}
