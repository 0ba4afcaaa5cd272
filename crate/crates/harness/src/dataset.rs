//! One-shot testing of a user-supplied dataset.

use std::path::Path;

use ltest::adaptive::{combine_from_bootstrap, dyadic_grid};
use ltest::calibrate::{wild_bootstrap, BootstrapConfig};
use ltest::competitors::{com_test, max_boot_from_bootstrap, max_test_asymptotic, sum_test_from_bootstrap, TestReport};
use ltest::linalg::Matrix;
use ltest::rng::StreamKey;
use ltest::statcore::{order_evidence, residualize, score_stats};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Observations {
    pub y: Vec<f64>,
    /// `n × p`, columns in file order.
    pub x: Matrix<f64>,
}

/// Reads a CSV with header `y,x1,...,xp`.
pub fn read_observations(path: &Path) -> Result<Observations> {
    let bad = |message: String| HarnessError::Parse {
        path: path.to_path_buf(),
        message,
    };
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    if header.first().map(String::as_str) != Some("y") {
        return Err(bad("first column must be named y".into()));
    }
    for (j, name) in header.iter().enumerate().skip(1) {
        if *name != format!("x{j}") {
            return Err(bad(format!("column {} is '{name}', expected 'x{j}'", j + 1)));
        }
    }
    let p = header.len() - 1;
    if p == 0 {
        return Err(bad("no covariate columns".into()));
    }
    let mut y = Vec::new();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| bad(format!("row {}, column '{}': '{field}' is not a number", i + 1, header[j])))?;
            if !v.is_finite() {
                return Err(bad(format!("row {}, column '{}' is not finite", i + 1, header[j])));
            }
            if j == 0 {
                y.push(v);
            } else {
                rows.push(v);
            }
        }
    }
    if y.is_empty() {
        return Err(bad("no data rows".into()));
    }
    let n = y.len();
    Ok(Observations {
        y,
        x: Matrix::from_row_major(n, p, &rows),
    })
}

/// Runs every method on one dataset, the first `q` columns being nuisance.
/// Bootstrap methods share one run with `b` replicates.
pub fn one_shot_test(obs: &Observations, q: usize, b: usize, alpha: f64, seed: u64) -> Result<Vec<TestReport>> {
    let p = obs.x.cols();
    if q >= p {
        return Err(HarnessError::config("q", format!("q = {q} must be below p = {p}")));
    }
    if b == 0 {
        return Err(HarnessError::config("B", "must be at least 1"));
    }
    let xa = obs.x.select_columns(&(0..q).collect::<Vec<_>>());
    let xb = obs.x.select_columns(&(q..p).collect::<Vec<_>>());
    let rd = residualize(&xa, &xb)?;
    let m = rd.m();
    let oe = order_evidence(&score_stats(&rd, &obs.y)?.w)?;
    let grid = dyadic_grid(m);
    let key = StreamKey::new(seed);
    let boot = wild_bootstrap(&rd, &obs.y, &grid.bootstrap_grid(&[1, m]), &BootstrapConfig::with_replications(b), key)?;
    let cc = combine_from_bootstrap(&grid, &boot, alpha)?.with_meta("seed", seed);
    let max = if m >= 3 { Some(max_test_asymptotic(&oe, alpha)?) } else { None };
    let sum = sum_test_from_bootstrap(&boot, m, alpha)?.with_meta("seed", seed);
    let mut reports = vec![cc];
    if let Some(max) = &max {
        reports.push(max.clone());
    }
    reports.push(max_boot_from_bootstrap(&boot, alpha)?.with_meta("seed", seed));
    if let Some(max) = &max {
        reports.push(com_test(max.p_value, sum.p_value, alpha)?);
    }
    reports.push(sum);
    Ok(reports)
}
