//! Null limit theory for the L-statistic family.
//!
//! * Extreme-value limits of the top order statistics of `W`: with
//!   `b_m = 2 log m − log log m` and `Λ(x) = exp(−π^{−1/2} e^{−x/2})`, the
//!   centered order statistics `W_(j) − b_m` behave like the points of a
//!   Poisson process whose mean count above `x` is `t(x) = −log Λ(x)`.
//! * Moments of the diverging-k statistic `L_{⌈γm⌉}`: the centering `μ_γ`,
//!   the covariance `σ_{γγ'}` and the correlation `Ξ`, estimated by Monte
//!   Carlo under a known `Σ_{b|a}`.
//! * A probe that measures how far the joint law of an extreme component and
//!   a standardized L-statistic is from the product of its margins.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::parallel::{chunk_ranges, map_indexed};
use crate::randgen::{CovarianceFactor, DesignConfig};
use crate::rng::{Purpose, StreamKey};
use crate::scalar::Real;
use crate::special::{bisect, chi1_sf};
use crate::statcore::{order_evidence, residualize, score_stats};

/// Centering for the maximum of `m` squared scores.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremeValueParams {
    pub m: usize,
    pub b_m: f64,
}

impl ExtremeValueParams {
    pub fn new(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidArgument(format!(
                "extreme-value centering needs m >= 3, got {m}"
            )));
        }
        let lm = (m as f64).ln();
        Ok(Self { m, b_m: 2.0 * lm - lm.ln() })
    }

    #[inline]
    pub fn center(&self, w: f64) -> f64 {
        w - self.b_m
    }
}

/// `t(x) = log Λ⁻¹(x) = π^{−1/2} e^{−x/2}`.
#[inline]
pub fn poisson_intensity<T: Real>(x: T) -> T {
    T::lit(1.0 / PI.sqrt()) * (-x * T::lit(0.5)).exp()
}

#[inline]
pub fn lambda_cdf<T: Real>(x: T) -> T {
    (-poisson_intensity(x)).exp()
}

/// `1 − Λ(x)` without cancellation.
#[inline]
pub fn lambda_sf(x: f64) -> f64 {
    -(-poisson_intensity(x)).exp_m1()
}

/// `Λ⁻¹(prob) = −2 log(−√π log prob)`.
pub fn lambda_quantile(prob: f64) -> f64 {
    assert!(prob > 0.0 && prob < 1.0, "probability {prob} outside (0,1)");
    -2.0 * (-(PI.sqrt()) * prob.ln()).ln()
}

fn ln_factorial(i: usize) -> f64 {
    (2..=i).map(|j| (j as f64).ln()).sum()
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|&t| (t - max).exp()).sum::<f64>().ln()
}

/// Limiting CDF of `W_(s) − b_m`: `Λ(x) Σ_{i<s} t(x)^i / i!`, evaluated in
/// the log domain. Panics if `s == 0`.
pub fn order_stat_cdf<T: Real>(s: usize, x: T) -> T {
    assert!(s >= 1, "order statistic index starts at 1");
    let t = poisson_intensity(x).as_f64();
    if t == 0.0 {
        return T::one();
    }
    if !t.is_finite() {
        return T::zero();
    }
    let lt = t.ln();
    if t < s as f64 {
        // upper side of the Poisson count is the small one; subtract it
        return T::lit(1.0 - poisson_upper_tail(s, t, lt));
    }
    let terms: Vec<f64> = (0..s).map(|i| i as f64 * lt - ln_factorial(i)).collect();
    T::lit((-t + log_sum_exp(&terms)).exp().min(1.0))
}

/// `P(N ≥ s)` for `N ~ Poisson(t)` with `t < s`.
fn poisson_upper_tail(s: usize, t: f64, lt: f64) -> f64 {
    let mut terms = Vec::new();
    let mut term = s as f64 * lt - ln_factorial(s);
    let first = term;
    let mut i = s;
    while term > first - 40.0 && i < s + 2000 {
        terms.push(term);
        i += 1;
        term += lt - (i as f64).ln();
    }
    (-t + log_sum_exp(&terms)).exp()
}

/// `p`-quantile of the limiting law of `W_(s) − b_m`.
pub fn order_stat_quantile(s: usize, prob: f64) -> f64 {
    assert!(prob > 0.0 && prob < 1.0, "probability {prob} outside (0,1)");
    bisect(|x| order_stat_cdf(s, x) - prob, -60.0, 400.0, 1e-12)
}

/// Maximum number of arguments accepted by [`joint_order_cdf`].
pub const JOINT_MAX_K: usize = 6;

/// Limiting joint CDF `P(W_(j) − b_m ≤ x_j, j = 1..k)` for `x₁ ≥ … ≥ x_k`.
///
/// Sums over compositions `(k₂, …, k_k)` with `k₂ + … + k_j ≤ j − 1`, where
/// `k_i` counts process points in `(x_i, x_{i−1}]`.
pub fn joint_order_cdf<T: Real>(xs: &[T]) -> Result<T> {
    let k = xs.len();
    if k == 0 {
        return Err(Error::InvalidArgument("no arguments".into()));
    }
    if k > JOINT_MAX_K {
        return Err(Error::KTooLarge { k });
    }
    if xs.windows(2).any(|w| !(w[0] >= w[1])) {
        return Err(Error::UnorderedArguments);
    }
    let t: Vec<f64> = xs.iter().map(|&x| poisson_intensity(x).as_f64()).collect();
    let t_last = t[k - 1];
    if !t_last.is_finite() {
        return Ok(T::zero());
    }
    // log d_i for i = 1..k-1 (0-based), d_i = t_i − t_{i−1} ≥ 0
    let log_d: Vec<f64> = (1..k).map(|i| (t[i] - t[i - 1]).max(0.0).ln()).collect();
    let mut terms = Vec::new();
    enumerate_compositions(&log_d, 0, 0, 0.0, &mut terms);
    Ok(T::lit((-t_last + log_sum_exp(&terms)).exp().min(1.0)))
}

fn enumerate_compositions(log_d: &[f64], pos: usize, used: usize, acc: f64, out: &mut Vec<f64>) {
    if pos == log_d.len() {
        out.push(acc);
        return;
    }
    // position pos covers the interval below x_{pos+1}; prefix budget is pos + 1
    let budget = pos + 1 - used;
    for c in 0..=budget {
        let term = if c == 0 {
            0.0
        } else if log_d[pos] == f64::NEG_INFINITY {
            break;
        } else {
            c as f64 * log_d[pos] - ln_factorial(c)
        };
        enumerate_compositions(log_d, pos + 1, used + c, acc + term, out);
    }
}

/// `v` with `P(χ²₁ ≥ v) = γ`, by bisection on `[0, 200]`.
pub fn chi1_upper_quantile(gamma: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} must lie in (0,1)")));
    }
    // chi1_sf is decreasing; bisect its negation
    Ok(bisect(|v| gamma - chi1_sf(v), 0.0, 200.0, 1e-13))
}

/// Monte Carlo estimates of the diverging-k moments.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaMoments {
    pub gammas: Vec<f64>,
    /// Upper χ²₁ quantiles `v_γ`.
    pub v: Vec<f64>,
    /// `μ_γ = Σ_i E[(U_i² − v_γ)𝟙(U_i² ≥ v_γ) + γ v_γ]`.
    pub mu: Vec<f64>,
    pub mu_se: Vec<f64>,
    /// `σ_{γ_t γ_l}`, covariance of the `m^{−1/2}`-scaled tail sums.
    pub sigma: Matrix<f64>,
    pub sigma_se: Matrix<f64>,
    /// `Ξ_{tl} = σ_{tl} / √(σ_{tt} σ_{ll})`.
    pub xi: Matrix<f64>,
    pub xi_se: Matrix<f64>,
    pub m: usize,
    pub mc_reps: usize,
}

impl GammaMoments {
    /// `(L − μ_γ) / √(m σ_γγ)` for the `t`-th gamma.
    pub fn standardize(&self, t: usize, l: f64) -> f64 {
        (l - self.mu[t]) / (self.m as f64 * self.sigma[(t, t)]).sqrt()
    }
}

const MOMENT_BLOCK: usize = 1000;

pub fn estimate_gamma_moments(
    factor: &CovarianceFactor<f64>,
    gammas: &[f64],
    mc_reps: usize,
    stream: StreamKey,
    workers: usize,
) -> Result<GammaMoments> {
    if mc_reps < 1000 {
        return Err(Error::InvalidArgument(format!("mc_reps = {mc_reps} must be >= 1000")));
    }
    if gammas.is_empty() {
        return Err(Error::InvalidArgument("no gammas".into()));
    }
    let v: Vec<f64> = gammas.iter().map(|&g| chi1_upper_quantile(g)).collect::<Result<_>>()?;
    let m = factor.dim();
    let s = gammas.len();

    let blocks = chunk_ranges(mc_reps, mc_reps.div_ceil(MOMENT_BLOCK));
    let tails: Vec<Vec<f64>> = map_indexed(blocks.len(), workers, |b| {
        let mut rng = stream.child(Purpose::Moments, b as u64).rng();
        let mut z = vec![0.0; m];
        let mut u = vec![0.0; m];
        let mut out = Vec::with_capacity(blocks[b].len() * s);
        for _ in blocks[b].clone() {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            factor.apply(&z, &mut u);
            for &vt in &v {
                let tail: f64 = u
                    .iter()
                    .map(|&x| {
                        let e = x * x - vt;
                        if e >= 0.0 {
                            e
                        } else {
                            0.0
                        }
                    })
                    .sum();
                out.push(tail);
            }
        }
        out
    });
    let samples: Vec<f64> = tails.into_iter().flatten().collect();
    let reps = mc_reps as f64;
    let col = |t: usize| samples.iter().skip(t).step_by(s).copied();

    let means: Vec<f64> = (0..s).map(|t| col(t).sum::<f64>() / reps).collect();
    let mut sigma = Matrix::zeros(s, s);
    let mut sigma_se = Matrix::zeros(s, s);
    for t in 0..s {
        for l in 0..=t {
            let prods: Vec<f64> = col(t)
                .zip(col(l))
                .map(|(a, b)| (a - means[t]) * (b - means[l]))
                .collect();
            let cov = prods.iter().sum::<f64>() / (reps - 1.0);
            let var_prod = prods.iter().map(|p| (p - cov) * (p - cov)).sum::<f64>() / (reps - 1.0);
            sigma[(t, l)] = cov / m as f64;
            sigma[(l, t)] = sigma[(t, l)];
            sigma_se[(t, l)] = (var_prod / reps).sqrt() / m as f64;
            sigma_se[(l, t)] = sigma_se[(t, l)];
        }
    }
    let mu = (0..s)
        .map(|t| means[t] + m as f64 * gammas[t] * v[t])
        .collect();
    let mu_se = (0..s)
        .map(|t| (sigma[(t, t)] * m as f64 / reps).sqrt())
        .collect();
    let mut xi = Matrix::zeros(s, s);
    let mut xi_se = Matrix::zeros(s, s);
    for t in 0..s {
        for l in 0..s {
            if t == l {
                xi[(t, l)] = 1.0;
            } else {
                let r = sigma[(t, l)] / (sigma[(t, t)] * sigma[(l, l)]).sqrt();
                xi[(t, l)] = r;
                xi_se[(t, l)] = (1.0 - r * r).max(0.0) / reps.sqrt();
            }
        }
    }
    Ok(GammaMoments {
        gammas: gammas.to_vec(),
        v,
        mu,
        mu_se,
        sigma,
        sigma_se,
        xi,
        xi_se,
        m,
        mc_reps,
    })
}

/// Mean shift of the top-k sums under an alternative.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftSummary<T> {
    /// `β* = Σ_{b|a} β_b`.
    pub beta_star: Vec<T>,
    /// `topk[k − 1] = n Σ_{i≤k} β*²_(i)`.
    pub topk: Vec<T>,
}

impl<T: Real> DriftSummary<T> {
    pub fn topk_drift(&self, k: usize) -> Result<T> {
        if k == 0 || k > self.topk.len() {
            return Err(Error::KOutOfRange { k, m: self.topk.len() });
        }
        Ok(self.topk[k - 1])
    }
}

pub fn drift_summary<T: Real>(sigma_b_given_a: &Matrix<T>, beta_b: &[T], n: usize) -> Result<DriftSummary<T>> {
    let m = beta_b.len();
    if sigma_b_given_a.rows() != m || sigma_b_given_a.cols() != m {
        return Err(Error::DimensionMismatch(format!(
            "Σ_b|a is {}x{} but β_b has {m} entries",
            sigma_b_given_a.rows(),
            sigma_b_given_a.cols()
        )));
    }
    let beta_star = sigma_b_given_a.mul_vec(beta_b);
    let mut sq: Vec<T> = beta_star.iter().map(|&b| b * b).collect();
    sq.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let scale = T::from_usize_lossy(n);
    let topk = sq
        .iter()
        .scan(T::zero(), |acc, &x| {
            *acc = *acc + x;
            Some(scale * *acc)
        })
        .collect();
    Ok(DriftSummary { beta_star, topk })
}

/// Which pair of null statistics the independence probe records.
#[derive(Debug, Clone, PartialEq)]
pub enum ProbeTarget {
    /// `(W_(s) − b_m, (L_{⌈γm⌉} − μ_γ)/√(m σ_γγ))`.
    OrderStatVsL {
        s: usize,
        gamma: f64,
        mu: f64,
        sigma_gg: f64,
    },
    /// `(W_(first) − b_m, W_(second) − b_m)`; a dependent negative control.
    OrderStatPair { first: usize, second: usize },
}

impl ProbeTarget {
    pub fn from_moments(s: usize, moments: &GammaMoments, t: usize) -> Self {
        Self::OrderStatVsL {
            s,
            gamma: moments.gammas[t],
            mu: moments.mu[t],
            sigma_gg: moments.sigma[(t, t)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeOutcome {
    pub gap: f64,
    pub pairs: Vec<(f64, f64)>,
}

/// `⌈γm⌉`, clamped to `1..=m`.
pub fn gamma_k(gamma: f64, m: usize) -> usize {
    ((gamma * m as f64).ceil() as usize).clamp(1, m)
}

/// `max_{x,y} |P̂(X ≤ x, Y ≤ y) − P̂(X ≤ x) P̂(Y ≤ y)|` over the grid.
pub fn factorization_gap(pairs: &[(f64, f64)], x_grid: &[f64], y_grid: &[f64]) -> f64 {
    let n = pairs.len() as f64;
    let mut gap: f64 = 0.0;
    for &x in x_grid {
        let px = pairs.iter().filter(|p| p.0 <= x).count() as f64 / n;
        for &y in y_grid {
            let py = pairs.iter().filter(|p| p.1 <= y).count() as f64 / n;
            let pxy = pairs.iter().filter(|p| p.0 <= x && p.1 <= y).count() as f64 / n;
            gap = gap.max((pxy - px * py).abs());
        }
    }
    gap
}

/// Simulates `n_outer` null regressions from `design`, records the pair
/// named by `target` for each, and returns the factorization gap over the
/// `x_grid × y_grid`.
pub fn independence_probe(
    design: &DesignConfig<f64>,
    target: &ProbeTarget,
    x_grid: &[f64],
    y_grid: &[f64],
    n_outer: usize,
    stream: StreamKey,
    workers: usize,
) -> Result<ProbeOutcome> {
    if design.coefficients.signal_norm_sq != 0.0 {
        return Err(Error::InvalidArgument("design is not a null configuration".into()));
    }
    let m = design.m();
    let ev = ExtremeValueParams::new(m)?;
    let pairs = map_indexed(n_outer, workers, |r| -> Result<(f64, f64)> {
        let mut rng = stream.child(Purpose::Probe, r as u64).rng();
        let data = design.draw(&mut rng)?;
        let rd = residualize(&data.nuisance_block(), &data.signal_block())?;
        let oe = order_evidence(&score_stats(&rd, &data.y)?.w)?;
        match *target {
            ProbeTarget::OrderStatVsL {
                s,
                gamma,
                mu,
                sigma_gg,
            } => {
                let x = ev.center(oe.order_stat(s)?);
                let l = oe.l_stat(gamma_k(gamma, m))?;
                Ok((x, (l - mu) / (m as f64 * sigma_gg).sqrt()))
            }
            ProbeTarget::OrderStatPair { first, second } => Ok((
                ev.center(oe.order_stat(first)?),
                ev.center(oe.order_stat(second)?),
            )),
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(ProbeOutcome {
        gap: factorization_gap(&pairs, x_grid, y_grid),
        pairs,
    })
}
