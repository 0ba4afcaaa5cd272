//! Wild (Rademacher) bootstrap for the whole L-statistic family.
//!
//! One sign vector `e ∈ {±1}ⁿ` per replicate drives every `k` in the grid.
//! With `Y* = X_a β̂_a + e∘ε̂`, the bootstrap residual is
//! `ε̂* = (I − QQᵀ)(e∘ε̂)`, so neither `β̂_a` nor `Y*` is ever formed:
//!
//! * `X̃ᵀε̂* = X̃ᵀ(e∘ε̂)` because `X̃ ⊥ col(Q)`;
//! * `‖ε̂*‖² = ‖ε̂‖² − ‖Qᵀ(e∘ε̂)‖²` because `‖e∘ε̂‖ = ‖ε̂‖`.
//!
//! A replicate therefore costs one O(nq) projection, one O(nm) pass over
//! the residualized columns and one sort.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::norm_sq;
use crate::parallel::{chunk_ranges, map_indexed};
use crate::randgen::DesignConfig;
use crate::rng::{Purpose, StreamKey};
use crate::scalar::Real;
use crate::special::ks_distance;
use crate::statcore::{l_stats_on_grid, residualize, score_stats, ResidualizedDesign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub enum Smoothing {
    /// `#{L* ≥ L} / B`.
    Raw,
    /// `(1 + #{L* ≥ L}) / (B + 1)`.
    #[default]
    AddOne,
}

impl Smoothing {
    pub fn p_value(self, count: usize, replications: usize) -> f64 {
        match self {
            Self::Raw => count as f64 / replications as f64,
            Self::AddOne => (1 + count) as f64 / (replications + 1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub smoothing: Smoothing,
    /// Thread-count hint; results never depend on it.
    pub workers: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            replications: 500,
            smoothing: Smoothing::AddOne,
            workers: 1,
        }
    }
}

impl BootstrapConfig {
    pub fn with_replications(replications: usize) -> Self {
        Self {
            replications,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapResult<T> {
    /// The ascending k-grid.
    pub grid: Vec<usize>,
    /// Observed `L_k` on the grid, computed by the replicate kernel.
    pub observed: Vec<T>,
    /// Row-major `B × G` matrix of bootstrap statistics.
    pub l_star: Vec<T>,
    /// `#{l : L*_{k,l} ≥ L_k}` per grid entry.
    pub exceedances: Vec<usize>,
    pub p_values: Vec<f64>,
    pub replications: usize,
    pub smoothing: Smoothing,
    /// Number of sign vectors drawn; equals `replications` unless a
    /// replicate had to be redrawn.
    pub sign_draws: usize,
}

impl<T: Real> BootstrapResult<T> {
    pub fn l_star_at(&self, replicate: usize, g: usize) -> T {
        self.l_star[replicate * self.grid.len() + g]
    }

    pub fn column(&self, g: usize) -> Vec<T> {
        (0..self.replications).map(|l| self.l_star_at(l, g)).collect()
    }

    pub fn position(&self, k: usize) -> Option<usize> {
        self.grid.binary_search(&k).ok()
    }

    pub fn p_value_for(&self, k: usize) -> Option<f64> {
        self.position(k).map(|g| self.p_values[g])
    }

    pub fn observed_for(&self, k: usize) -> Option<T> {
        self.position(k).map(|g| self.observed[g])
    }
}

fn validate_grid(grid: &[usize], m: usize) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("k-grid is empty".into()));
    }
    if let Some(&k) = grid.iter().find(|&&k| k == 0 || k > m) {
        return Err(Error::KOutOfRange { k, m });
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "k-grid must be strictly ascending".into(),
        ));
    }
    Ok(())
}

/// Per-dataset state reused by every replicate.
struct ReplicateKernel<'a, T> {
    rd: &'a ResidualizedDesign<T>,
    eps_hat: Vec<T>,
    eps_energy: T,
    grid: &'a [usize],
}

struct Scratch<T> {
    u: Vec<T>,
    w: Vec<T>,
}

impl<'a, T: Real> ReplicateKernel<'a, T> {
    fn new(rd: &'a ResidualizedDesign<T>, y: &[T], grid: &'a [usize]) -> Result<Self> {
        let eps_hat = score_stats(rd, y)?.eps_hat;
        let eps_energy = norm_sq(&eps_hat);
        Ok(Self {
            rd,
            eps_hat,
            eps_energy,
            grid,
        })
    }

    fn scratch(&self) -> Scratch<T> {
        Scratch {
            u: vec![T::zero(); self.rd.n()],
            w: vec![T::zero(); self.rd.m()],
        }
    }

    /// `L*_k` on the grid for multiplier signs `positive[i] ⇔ e_i = +1`.
    fn evaluate(&self, positive: impl Fn(usize) -> bool, s: &mut Scratch<T>, out: &mut [T]) -> Result<()> {
        for (i, (u, &e)) in s.u.iter_mut().zip(&self.eps_hat).enumerate() {
            *u = if positive(i) { e } else { -e };
        }
        let energy = self.eps_energy - self.rd.nuisance_energy(&s.u);
        self.rd.squared_scores_into(&s.u, energy, &mut s.w)?;
        l_stats_on_grid(&mut s.w, self.grid, out);
        Ok(())
    }

    fn observed(&self) -> Result<Vec<T>> {
        let mut s = self.scratch();
        let mut out = vec![T::zero(); self.grid.len()];
        self.evaluate(|_| true, &mut s, &mut out)?;
        Ok(out)
    }
}

/// Fills `bits` with i.i.d. fair coin flips, 64 per draw.
fn draw_signs<R: RngCore>(rng: &mut R, bits: &mut [u64]) {
    for b in bits.iter_mut() {
        *b = rng.next_u64();
    }
}

#[inline]
fn bit(bits: &[u64], i: usize) -> bool {
    (bits[i / 64] >> (i % 64)) & 1 == 1
}

fn assemble<T: Real>(
    grid: &[usize],
    observed: Vec<T>,
    l_star: Vec<T>,
    replications: usize,
    smoothing: Smoothing,
    sign_draws: usize,
) -> BootstrapResult<T> {
    let g_len = grid.len();
    let mut exceedances = vec![0usize; g_len];
    for row in l_star.chunks_exact(g_len) {
        for ((c, &v), &obs) in exceedances.iter_mut().zip(row).zip(&observed) {
            if v >= obs {
                *c += 1;
            }
        }
    }
    let p_values = exceedances
        .iter()
        .map(|&c| smoothing.p_value(c, replications))
        .collect();
    BootstrapResult {
        grid: grid.to_vec(),
        observed,
        l_star,
        exceedances,
        p_values,
        replications,
        smoothing,
        sign_draws,
    }
}

/// Runs `config.replications` wild-bootstrap replicates. Replicate `l` draws
/// its signs from `stream.child(Bootstrap, l)`, so the result is identical
/// for every worker count.
pub fn wild_bootstrap<T: Real>(
    rd: &ResidualizedDesign<T>,
    y: &[T],
    kgrid: &[usize],
    config: &BootstrapConfig,
    stream: StreamKey,
) -> Result<BootstrapResult<T>> {
    validate_grid(kgrid, rd.m())?;
    let b = config.replications;
    if b == 0 {
        return Err(Error::InvalidArgument("bootstrap replications must be >= 1".into()));
    }
    let kernel = ReplicateKernel::new(rd, y, kgrid)?;
    let observed = kernel.observed()?;
    let g_len = kgrid.len();
    let words = rd.n().div_ceil(64);

    let chunks = chunk_ranges(b, config.workers.max(1) * 4);
    let per_chunk = map_indexed(chunks.len(), config.workers, |c| -> Result<(Vec<T>, usize)> {
        let range = chunks[c].clone();
        let mut s = kernel.scratch();
        let mut bits = vec![0u64; words];
        let mut rows = vec![T::zero(); range.len() * g_len];
        let mut draws = 0;
        for (row, l) in rows.chunks_exact_mut(g_len).zip(range) {
            let mut rng = stream.child(Purpose::Bootstrap, l as u64).rng();
            draw_signs(&mut rng, &mut bits);
            draws += 1;
            if kernel.evaluate(|i| bit(&bits, i), &mut s, row).is_err() {
                draw_signs(&mut rng, &mut bits);
                draws += 1;
                kernel.evaluate(|i| bit(&bits, i), &mut s, row)?;
            }
        }
        Ok((rows, draws))
    });
    let mut l_star = Vec::with_capacity(b * g_len);
    let mut sign_draws = 0;
    for chunk in per_chunk {
        let (rows, draws) = chunk?;
        l_star.extend(rows);
        sign_draws += draws;
    }
    Ok(assemble(kgrid, observed, l_star, b, config.smoothing, sign_draws))
}

/// Same engine driven by caller-supplied multiplier vectors (entries ±1).
pub fn bootstrap_with_multipliers<T: Real>(
    rd: &ResidualizedDesign<T>,
    y: &[T],
    kgrid: &[usize],
    multipliers: &[Vec<i8>],
    smoothing: Smoothing,
) -> Result<BootstrapResult<T>> {
    validate_grid(kgrid, rd.m())?;
    if multipliers.is_empty() {
        return Err(Error::InvalidArgument("no multiplier vectors supplied".into()));
    }
    let kernel = ReplicateKernel::new(rd, y, kgrid)?;
    let observed = kernel.observed()?;
    let mut s = kernel.scratch();
    let mut l_star = vec![T::zero(); multipliers.len() * kgrid.len()];
    for (row, e) in l_star.chunks_exact_mut(kgrid.len()).zip(multipliers) {
        if e.len() != rd.n() || e.iter().any(|&x| x != 1 && x != -1) {
            return Err(Error::InvalidArgument(
                "multipliers must be ±1 vectors of length n".into(),
            ));
        }
        kernel.evaluate(|i| e[i] == 1, &mut s, row)?;
    }
    Ok(assemble(kgrid, observed, l_star, multipliers.len(), smoothing, multipliers.len()))
}

/// Simulates `n_outer` null datasets from `design`, computes the bootstrap
/// p-value of `L_k` for each, and returns the KS distance of those p-values
/// from Uniform(0, 1).
pub fn pvalue_uniformity_check(
    design: &DesignConfig<f64>,
    k: usize,
    config: &BootstrapConfig,
    n_outer: usize,
    stream: StreamKey,
) -> Result<f64> {
    let p_values = null_p_values(design, &[k], config, n_outer, stream)?;
    let ps: Vec<f64> = p_values.into_iter().map(|v| v[0]).collect();
    Ok(ks_distance(&ps, |x| x.clamp(0.0, 1.0)))
}

/// Bootstrap p-values on `kgrid` for `n_outer` null replications of `design`.
/// Outer replications run in parallel on `config.workers`; each bootstrap
/// runs single-threaded.
pub fn null_p_values(
    design: &DesignConfig<f64>,
    kgrid: &[usize],
    config: &BootstrapConfig,
    n_outer: usize,
    stream: StreamKey,
) -> Result<Vec<Vec<f64>>> {
    if design.coefficients.signal_norm_sq != 0.0 {
        return Err(Error::InvalidArgument("design is not a null configuration".into()));
    }
    let inner = BootstrapConfig {
        workers: 1,
        ..*config
    };
    let results = map_indexed(n_outer, config.workers, |r| -> Result<Vec<f64>> {
        let rep = stream.child(Purpose::Replication, r as u64);
        let data = design.draw(&mut rep.child(Purpose::Data, 0).rng())?;
        let rd = residualize(&data.nuisance_block(), &data.signal_block())?;
        let boot = wild_bootstrap(&rd, &data.y, kgrid, &inner, rep.child(Purpose::Bootstrap, 0))?;
        Ok(boot.p_values)
    });
    results.into_iter().collect()
}

/// Uniform random sign vector, for callers that want explicit multipliers.
pub fn random_multipliers<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<i8> {
    (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
}
