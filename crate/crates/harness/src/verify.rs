//! Property probes for the null limit laws: the extreme-value limit of the
//! maximum, asymptotic normality of `L_{⌈γm⌉}`, and the asymptotic
//! independence of the two.

use ltest::asymptotic::{
    estimate_gamma_moments, gamma_k, independence_probe, lambda_cdf, order_stat_quantile, ExtremeValueParams,
    ProbeTarget,
};
use ltest::linalg::Matrix;
use ltest::parallel::map_indexed;
use ltest::randgen::{factorize, CoefficientSpec, CovarianceSpec, DesignConfig, InnovationDistribution};
use ltest::rng::{Purpose, StreamKey};
use ltest::special::{ks_distance, norm_cdf, norm_quantile};
use ltest::statcore::{order_evidence, residualize, score_stats};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Probability levels of the 5×5 factorization grid.
pub const GRID_LEVELS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub direct_m: usize,
    pub direct_reps: usize,
    pub pipeline_n: usize,
    pub pipeline_p: usize,
    pub pipeline_reps: usize,
    pub gamma: f64,
    pub moment_reps: usize,
    pub probe_n: usize,
    pub probe_p: usize,
    pub probe_q: usize,
    pub probe_rho: f64,
    pub probe_outer: usize,
    pub master_seed: u64,
    pub workers: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            direct_m: 2000,
            direct_reps: 5000,
            pipeline_n: 500,
            pipeline_p: 2000,
            pipeline_reps: 5000,
            gamma: 0.5,
            moment_reps: 100_000,
            probe_n: 200,
            probe_p: 400,
            probe_q: 5,
            probe_rho: 0.7,
            probe_outer: 2000,
            master_seed: 20240601,
            workers: 1,
        }
    }
}

impl VerifyConfig {
    /// A few seconds of work; thresholds are not expected to hold.
    pub fn quick() -> Self {
        Self {
            direct_reps: 500,
            pipeline_n: 100,
            pipeline_p: 200,
            pipeline_reps: 200,
            moment_reps: 5000,
            probe_n: 60,
            probe_p: 105,
            probe_outer: 200,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bound {
    Below,
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
    pub threshold: f64,
    pub pass: bool,
}

impl ProbeResult {
    pub fn new(name: &str, value: f64, bound: Bound, threshold: f64) -> Self {
        let pass = match bound {
            Bound::Below => value < threshold,
            Bound::Above => value > threshold,
        };
        Self {
            name: name.to_string(),
            value,
            bound,
            threshold,
            pass,
        }
    }

    pub fn line(&self) -> String {
        let op = match self.bound {
            Bound::Below => "<",
            Bound::Above => ">",
        };
        format!(
            "{} {}: {:.4} (need {op} {})",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.threshold
        )
    }
}

/// Sup-distance between `Λ` and the empirical law of `max_j Z_j² − b_m`
/// over `reps` draws of `m` i.i.d. standard normals.
pub fn direct_max_distance(m: usize, reps: usize, stream: StreamKey, workers: usize) -> Result<f64> {
    let ev = ExtremeValueParams::new(m)?;
    let sample = map_indexed(reps, workers, |r| {
        let mut rng = stream.child(Purpose::Probe, r as u64).rng();
        let max = (0..m)
            .map(|_| {
                let z: f64 = rng.sample(StandardNormal);
                z * z
            })
            .fold(0.0, f64::max);
        ev.center(max)
    });
    Ok(ks_distance(&sample, lambda_cdf))
}

/// `(W_(1) − b_m, L_k)` from `reps` null regressions with identity `Σ`,
/// Gaussian design and no nuisance block.
pub fn null_pipeline(n: usize, p: usize, k: usize, reps: usize, stream: StreamKey, workers: usize) -> Result<Vec<(f64, f64)>> {
    let design = DesignConfig::new(
        n,
        CovarianceSpec::identity(p)?,
        InnovationDistribution::StandardNormal,
        CoefficientSpec::null(p, 0),
    )?;
    let ev = ExtremeValueParams::new(p)?;
    map_indexed(reps, workers, |r| -> Result<(f64, f64)> {
        let data = design.draw(&mut stream.child(Purpose::Probe, r as u64).rng())?;
        let rd = residualize(&Matrix::zeros(n, 0), &data.x)?;
        let oe = order_evidence(&score_stats(&rd, &data.y)?.w)?;
        Ok((ev.center(oe.order_stat(1)?), oe.l_stat(k)?))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub ks: f64,
    pub mu_over_m: f64,
    pub mu_se_over_m: f64,
    pub sigma_gg: f64,
}

/// KS distance of `(L − μ_γ)/√(m σ_γγ)` from N(0, 1), with the moments
/// estimated under identity `Σ`.
pub fn normality_check(l: &[f64], m: usize, gamma: f64, moment_reps: usize, stream: StreamKey, workers: usize) -> Result<NormalityReport> {
    let factor = factorize(&CovarianceSpec::<f64>::identity(m)?)?;
    let gm = estimate_gamma_moments(&factor, &[gamma], moment_reps, stream, workers)?;
    let z: Vec<f64> = l.iter().map(|&v| gm.standardize(0, v)).collect();
    Ok(NormalityReport {
        ks: ks_distance(&z, norm_cdf),
        mu_over_m: gm.mu[0] / m as f64,
        mu_se_over_m: gm.mu_se[0] / m as f64,
        sigma_gg: gm.sigma[(0, 0)],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependenceReport {
    /// `W_(1)` against standardized `L_{⌈γm⌉}`.
    pub gap: f64,
    /// `W_(1)` against `W_(2)`.
    pub control_gap: f64,
    pub m: usize,
}

/// Factorization gaps on the AR(1) design with nuisance block. Grid points
/// sit at the 10/30/50/70/90% quantiles of the limit marginals.
#[allow(clippy::too_many_arguments)]
pub fn independence_check(
    n: usize,
    p: usize,
    q: usize,
    rho: f64,
    gamma: f64,
    n_outer: usize,
    moment_reps: usize,
    stream: StreamKey,
    workers: usize,
) -> Result<IndependenceReport> {
    let design = DesignConfig::new(
        n,
        CovarianceSpec::ar1(rho, p)?,
        InnovationDistribution::StandardNormal,
        CoefficientSpec::null(p, q),
    )?;
    let cond = factorize(&design.covariance.conditional_correlation(q)?)?;
    let gm = estimate_gamma_moments(&cond, &[gamma], moment_reps, stream.child(Purpose::Moments, 0), workers)?;
    let x_grid: Vec<f64> = GRID_LEVELS.iter().map(|&l| order_stat_quantile(1, l)).collect();
    let y_grid: Vec<f64> = GRID_LEVELS.iter().map(|&l| norm_quantile(l)).collect();
    let second_grid: Vec<f64> = GRID_LEVELS.iter().map(|&l| order_stat_quantile(2, l)).collect();
    let target = ProbeTarget::from_moments(1, &gm, 0);
    let key = stream.child(Purpose::Probe, 0);
    let main = independence_probe(&design, &target, &x_grid, &y_grid, n_outer, key, workers)?;
    let control = ProbeTarget::OrderStatPair { first: 1, second: 2 };
    let ctrl = independence_probe(&design, &control, &x_grid, &second_grid, n_outer, key, workers)?;
    Ok(IndependenceReport {
        gap: main.gap,
        control_gap: ctrl.gap,
        m: design.m(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub normality: NormalityReport,
    pub independence: IndependenceReport,
    pub probes: Vec<ProbeResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.probes.iter().all(|p| p.pass)
    }
}

pub fn run_verify(cfg: &VerifyConfig) -> Result<VerifyReport> {
    let root = StreamKey::new(cfg.master_seed);
    let direct = direct_max_distance(cfg.direct_m, cfg.direct_reps, root.child(Purpose::Probe, 1), cfg.workers)?;
    let k = gamma_k(cfg.gamma, cfg.pipeline_p);
    let draws = null_pipeline(
        cfg.pipeline_n,
        cfg.pipeline_p,
        k,
        cfg.pipeline_reps,
        root.child(Purpose::Probe, 2),
        cfg.workers,
    )?;
    let maxima: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let pipeline = ks_distance(&maxima, lambda_cdf);
    let l: Vec<f64> = draws.iter().map(|d| d.1).collect();
    let normality = normality_check(
        &l,
        cfg.pipeline_p,
        cfg.gamma,
        cfg.moment_reps,
        root.child(Purpose::Moments, 3),
        cfg.workers,
    )?;
    let independence = independence_check(
        cfg.probe_n,
        cfg.probe_p,
        cfg.probe_q,
        cfg.probe_rho,
        cfg.gamma,
        cfg.probe_outer,
        cfg.moment_reps,
        root.child(Purpose::Probe, 4),
        cfg.workers,
    )?;
    let probes = vec![
        ProbeResult::new("max limit, direct draws", direct, Bound::Below, 0.05),
        ProbeResult::new("max limit, regression pipeline", pipeline, Bound::Below, 0.07),
        ProbeResult::new("normality of standardized L", normality.ks, Bound::Below, 0.05),
        ProbeResult::new("max vs L factorization gap", independence.gap, Bound::Below, 0.04),
        ProbeResult::new("max vs second-largest gap (control)", independence.control_gap, Bound::Above, 0.10),
    ];
    Ok(VerifyReport {
        config: cfg.clone(),
        normality,
        independence,
        probes,
    })
}
