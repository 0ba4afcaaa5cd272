//! Size and power studies.
//!
//! Each `(n, p, design, s)` cell owns a random stream; replication `r` of
//! the cell draws its data and its sign vectors from children of that
//! stream, so the rows never depend on the worker count. All methods see
//! the same datasets, and every bootstrap-based method reads its p-value
//! from one shared bootstrap run per replication.

use std::cmp::Ordering;
use std::time::Instant;

use ltest::adaptive::{combine_from_bootstrap, dyadic_grid, KGrid};
use ltest::calibrate::{wild_bootstrap, BootstrapConfig};
use ltest::competitors::{
    com_test, max_boot_from_bootstrap, max_test_asymptotic, sum_test_from_bootstrap, Method, TestReport,
};
use ltest::parallel::map_indexed;
use ltest::randgen::{CoefficientSpec, CovarianceSpec, DesignConfig};
use ltest::rng::{Purpose, StreamKey};
use ltest::statcore::{order_evidence, residualize, score_stats};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::spec::{Design, ExperimentSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub n: usize,
    pub p: usize,
    pub design: Design,
    pub method: Method,
    /// Sparsity level; `None` in a size study.
    pub s: Option<usize>,
    pub rejection_rate: f64,
    pub mc_se: f64,
    pub replications: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub wall_time_s: f64,
}

/// Rounds to the 6 decimals the CSV carries, so a parsed file compares
/// equal to the rows that produced it.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

impl ResultRow {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        p: usize,
        design: Design,
        method: Method,
        s: Option<usize>,
        rejections: usize,
        replications: usize,
        b: usize,
        wall_time_s: f64,
    ) -> Self {
        let r = rejections as f64 / replications as f64;
        Self {
            n,
            p,
            design,
            method,
            s,
            rejection_rate: round6(r),
            mc_se: round6((r * (1.0 - r) / replications as f64).sqrt()),
            replications,
            b,
            wall_time_s: round6(wall_time_s),
        }
    }

    pub fn key_cmp(&self, other: &Self) -> Ordering {
        (self.n, self.p, self.design.label(), self.method.label(), self.s).cmp(&(
            other.n,
            other.p,
            other.design.label(),
            other.method.label(),
            other.s,
        ))
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Record per-cell wall time. Off by default so that reruns are
    /// byte-identical.
    pub record_timing: bool,
}

struct Cell {
    design: DesignConfig<f64>,
    grid: KGrid,
    boot_grid: Vec<usize>,
}

fn needs_bootstrap(methods: &[Method]) -> bool {
    methods.iter().any(|&m| m != Method::Max)
}

/// Rejection decisions of every method on one simulated dataset, in the
/// order of `methods`.
fn replicate(
    cell: &Cell,
    methods: &[Method],
    alpha: f64,
    boot_cfg: &BootstrapConfig,
    key: StreamKey,
) -> Result<Vec<bool>> {
    let data = cell.design.draw(&mut key.child(Purpose::Data, 0).rng())?;
    let rd = residualize(&data.nuisance_block(), &data.signal_block())?;
    let oe = order_evidence(&score_stats(&rd, &data.y)?.w)?;
    let max = max_test_asymptotic(&oe, alpha)?;
    let boot = if needs_bootstrap(methods) {
        Some(wild_bootstrap(&rd, &data.y, &cell.boot_grid, boot_cfg, key.child(Purpose::Bootstrap, 0))?)
    } else {
        None
    };
    let m = rd.m();
    methods
        .iter()
        .map(|&method| {
            let report: TestReport = match (method, &boot) {
                (Method::Max, _) => max.clone(),
                (Method::Cc, Some(b)) => combine_from_bootstrap(&cell.grid, b, alpha)?,
                (Method::MaxBoot, Some(b)) => max_boot_from_bootstrap(b, alpha)?,
                (Method::Sum, Some(b)) => sum_test_from_bootstrap(b, m, alpha)?,
                (Method::Com, Some(b)) => com_test(max.p_value, sum_test_from_bootstrap(b, m, alpha)?.p_value, alpha)?,
                (_, None) => unreachable!("bootstrap skipped for a bootstrap method"),
            };
            Ok(report.reject)
        })
        .collect()
}

fn run(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let root = StreamKey::new(spec.master_seed);
    let boot_cfg = BootstrapConfig {
        workers: 1,
        ..BootstrapConfig::with_replications(spec.b)
    };
    let s_levels: Vec<Option<usize>> = if spec.is_size_study() {
        vec![None]
    } else {
        spec.s_list.iter().copied().map(Some).collect()
    };
    let mut rows = Vec::with_capacity(spec.row_count());
    for &n in &spec.n_list {
        for &p in &spec.p_list {
            let covariance = CovarianceSpec::ar1(spec.rho, p)?;
            for &design in &spec.design_list {
                for &s in &s_levels {
                    let coefficients = CoefficientSpec {
                        p,
                        q: spec.q,
                        s: s.unwrap_or(0),
                        signal_norm_sq: if s.is_some() { spec.signal_norm_sq } else { 0.0 },
                        noise_sigma: 1.0,
                    };
                    let m = p - spec.q;
                    let grid = dyadic_grid(m);
                    let cell = Cell {
                        design: DesignConfig::new(n, covariance.clone(), design.0, coefficients)?,
                        boot_grid: grid.bootstrap_grid(&[1, m]),
                        grid,
                    };
                    let key = root.child_path(Purpose::Experiment, &[n as u64, p as u64, design.index(), s.unwrap_or(0) as u64]);
                    let start = Instant::now();
                    let decisions = map_indexed(spec.replications, spec.workers, |r| {
                        replicate(&cell, &spec.methods, spec.alpha, &boot_cfg, key.child(Purpose::Replication, r as u64))
                    })
                    .into_iter()
                    .collect::<Result<Vec<_>>>()?;
                    let elapsed = if opts.record_timing {
                        start.elapsed().as_secs_f64()
                    } else {
                        0.0
                    };
                    for (j, &method) in spec.methods.iter().enumerate() {
                        let hits = decisions.iter().filter(|d| d[j]).count();
                        rows.push(ResultRow::new(n, p, design, method, s, hits, spec.replications, spec.b, elapsed));
                    }
                }
            }
        }
    }
    rows.sort_by(ResultRow::key_cmp);
    Ok(rows)
}

/// Empirical size of every method in every `(n, p, design)` cell, under
/// `β_b = 0`.
pub fn run_size_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Vec<ResultRow>> {
    if !spec.is_size_study() {
        return Err(HarnessError::config("s_list", "must be empty for a size study"));
    }
    run(spec, opts)
}

/// Rejection rates at each sparsity level in `s_list`, with `‖β_b‖²` fixed
/// at `signal_norm_sq` and `β` redrawn in every replication.
pub fn run_power_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<Vec<ResultRow>> {
    if spec.is_size_study() {
        return Err(HarnessError::config("s_list", "must be non-empty for a power study"));
    }
    run(spec, opts)
}

/// A size row that fails the regression guard.
#[derive(Debug, Clone, PartialEq)]
pub struct GateViolation {
    pub row: ResultRow,
    pub limit: f64,
}

/// Rows whose size exceeds `2α + 3·SE`. Power rows are ignored.
pub fn size_gate(rows: &[ResultRow], alpha: f64) -> Vec<GateViolation> {
    rows.iter()
        .filter(|r| r.s.is_none())
        .filter_map(|r| {
            let limit = 2.0 * alpha + 3.0 * r.mc_se;
            (r.rejection_rate > limit).then(|| GateViolation { row: r.clone(), limit })
        })
        .collect()
}
