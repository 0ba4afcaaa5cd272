//! Dyadic k-grid and the Cauchy-combination omnibus test.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::calibrate::{wild_bootstrap, BootstrapConfig, BootstrapResult};
use crate::competitors::{check_alpha, Method, TestReport};
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::scalar::Real;
use crate::statcore::ResidualizedDesign;

/// Fixed extreme-type components included when `k ≤ m`.
pub const DEFAULT_FIXED_KS: [usize; 2] = [1, 10];
/// Smallest dyadic truncation level.
pub const DYADIC_FLOOR: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KGrid {
    pub m: usize,
    pub fixed_ks: Vec<usize>,
    /// `k_i = ⌈m / 2^i⌉` for `i = 1..=levels`, strictly decreasing.
    pub dyadic_ks: Vec<usize>,
    /// `K = ⌊log₂(m / 20)⌋`, or 0 when `m < 40`.
    pub levels: usize,
}

impl KGrid {
    pub fn with_fixed(m: usize, fixed: &[usize]) -> Self {
        let mut levels = 0;
        while DYADIC_FLOOR << (levels + 1) <= m {
            levels += 1;
        }
        let dyadic_ks: Vec<usize> = (1..=levels).map(|i| m.div_ceil(1 << i)).collect();
        debug_assert!(dyadic_ks.iter().all(|&k| k >= DYADIC_FLOOR));
        debug_assert!(dyadic_ks.windows(2).all(|w| w[0] > w[1]));
        let fixed_ks = fixed.iter().copied().filter(|&k| k >= 1 && k <= m).collect();
        Self {
            m,
            fixed_ks,
            dyadic_ks,
            levels,
        }
    }

    /// Component truncation levels, deduplicated and ascending.
    pub fn combined(&self) -> Vec<usize> {
        let mut ks: Vec<usize> = self.fixed_ks.iter().chain(&self.dyadic_ks).copied().collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    }

    /// [`combined`](Self::combined) plus any extra levels (e.g. `m` for the
    /// sum-type test), for a single shared bootstrap run.
    pub fn bootstrap_grid(&self, extra: &[usize]) -> Vec<usize> {
        let mut ks = self.combined();
        ks.extend(extra.iter().copied().filter(|&k| k >= 1 && k <= self.m));
        ks.sort_unstable();
        ks.dedup();
        ks
    }
}

pub fn dyadic_grid(m: usize) -> KGrid {
    KGrid::with_fixed(m, &DEFAULT_FIXED_KS)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub label: String,
    pub p_value: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauchyCombination {
    pub t_c: f64,
    pub p_c: f64,
    pub components: Vec<Component>,
}

/// `tan((1/2 − p)π)`, using `cot(pπ)` near zero for accuracy.
#[inline]
pub fn cauchy_transform(p: f64) -> f64 {
    if p < 0.25 {
        1.0 / (p * PI).tan()
    } else {
        ((0.5 - p) * PI).tan()
    }
}

/// Standard Cauchy upper tail `1/2 − arctan(t)/π`.
#[inline]
pub fn cauchy_sf(t: f64) -> f64 {
    if t > 1.0 {
        (1.0 / t).atan() / PI
    } else {
        0.5 - t.atan() / PI
    }
}

pub fn cauchy_combine<T: Real>(pvals: &[T]) -> Result<CauchyCombination> {
    let labeled: Vec<(String, f64)> = pvals
        .iter()
        .enumerate()
        .map(|(i, p)| (format!("p{i}"), p.as_f64()))
        .collect();
    cauchy_combine_labeled(&labeled)
}

/// Equal-weight Cauchy combination of labeled p-values in `(0, 1)`.
pub fn cauchy_combine_labeled(pvals: &[(String, f64)]) -> Result<CauchyCombination> {
    if pvals.is_empty() {
        return Err(Error::InvalidArgument("no p-values to combine".into()));
    }
    for (index, &(_, p)) in pvals.iter().enumerate() {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::PValueOutOfRange { index, value: p });
        }
    }
    let weight = 1.0 / pvals.len() as f64;
    let t_c: f64 = pvals.iter().map(|(_, p)| weight * cauchy_transform(*p)).sum();
    Ok(CauchyCombination {
        t_c,
        p_c: cauchy_sf(t_c),
        components: pvals
            .iter()
            .map(|(label, p)| Component {
                label: label.clone(),
                p_value: *p,
                weight,
            })
            .collect(),
    })
}

/// Bootstrap p-values can equal 1 (every replicate exceeds the observed
/// value); such components enter the combination as `B/(B + 1)`.
fn cap_unit(p: f64, replications: usize) -> f64 {
    p.min(replications as f64 / (replications + 1) as f64)
}

/// Combines the grid components of an existing bootstrap run.
pub fn combine_from_bootstrap(grid: &KGrid, boot: &BootstrapResult<f64>, alpha: f64) -> Result<TestReport> {
    check_alpha(alpha)?;
    let mut comps = Vec::new();
    for k in grid.combined() {
        let p = boot
            .p_value_for(k)
            .ok_or(Error::KOutOfRange { k, m: grid.m })?;
        comps.push((format!("k={k}"), cap_unit(p, boot.replications)));
    }
    let cc = cauchy_combine_labeled(&comps)?;
    let grid_desc = grid
        .combined()
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join(" ");
    Ok(TestReport::new(Method::Cc, cc.t_c, cc.p_c, alpha)
        .with_meta("B", boot.replications)
        .with_meta("grid", grid_desc)
        .with_meta("components", cc.components.len()))
}

/// One unified bootstrap over the dyadic grid, then the Cauchy combination.
/// Rejects when the combined p-value is at most `alpha`.
pub fn adaptive_test(
    rd: &ResidualizedDesign<f64>,
    y: &[f64],
    config: &BootstrapConfig,
    alpha: f64,
    stream: StreamKey,
) -> Result<TestReport> {
    check_alpha(alpha)?;
    let grid = dyadic_grid(rd.m());
    let boot = wild_bootstrap(rd, y, &grid.combined(), config, stream)?;
    Ok(combine_from_bootstrap(&grid, &boot, alpha)?.with_meta("seed", stream.raw()))
}
