//! Synthetic regression data: correlated designs with non-Gaussian
//! innovations, sparse coefficient vectors and Gaussian noise.

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{cholesky, solve_lower, Matrix};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceKind<T> {
    Ar1 { rho: T },
    Identity,
    Custom(Matrix<T>),
}

/// Population covariance `Σ` of the predictor vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceSpec<T> {
    kind: CovarianceKind<T>,
    dim: usize,
}

impl<T: Real> CovarianceSpec<T> {
    pub fn ar1(rho: T, dim: usize) -> Result<Self> {
        if !(rho.abs() < T::one()) {
            return Err(Error::InvalidSpec(format!("AR(1) rho = {rho} must lie in (-1, 1)")));
        }
        Self::check_dim(dim)?;
        Ok(Self {
            kind: CovarianceKind::Ar1 { rho },
            dim,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        Self::check_dim(dim)?;
        Ok(Self {
            kind: CovarianceKind::Identity,
            dim,
        })
    }

    /// A dense correlation matrix: symmetric, unit diagonal, positive definite.
    pub fn custom(sigma: Matrix<T>) -> Result<Self> {
        let dim = sigma.rows();
        Self::check_dim(dim)?;
        let tol = T::lit(1e-12);
        if !sigma.is_symmetric(tol) {
            return Err(Error::InvalidSpec("custom covariance is not symmetric".into()));
        }
        if (0..dim).any(|i| (sigma[(i, i)] - T::one()).abs() > tol) {
            return Err(Error::InvalidSpec("custom covariance must have unit diagonal".into()));
        }
        cholesky(&sigma)?;
        Ok(Self {
            kind: CovarianceKind::Custom(sigma),
            dim,
        })
    }

    fn check_dim(dim: usize) -> Result<()> {
        if dim == 0 {
            return Err(Error::InvalidSpec("covariance dimension must be positive".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> &CovarianceKind<T> {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> T {
        match &self.kind {
            CovarianceKind::Ar1 { rho } => rho.powi(i.abs_diff(j) as i32),
            CovarianceKind::Identity => {
                if i == j {
                    T::one()
                } else {
                    T::zero()
                }
            }
            CovarianceKind::Custom(m) => m[(i, j)],
        }
    }

    pub fn matrix(&self) -> Matrix<T> {
        Matrix::from_fn(self.dim, self.dim, |i, j| self.entry(i, j))
    }

    /// Partial correlation of the trailing `dim − q` coordinates given the
    /// leading `q`, i.e. `Σ_bb − Σ_ba Σ_aa⁻¹ Σ_ab` rescaled to unit diagonal.
    pub fn conditional_correlation(&self, q: usize) -> Result<Self> {
        if q >= self.dim {
            return Err(Error::InvalidSpec(format!(
                "nuisance dimension {q} must be below {}",
                self.dim
            )));
        }
        let m = self.dim - q;
        if q == 0 {
            return Ok(self.clone());
        }
        if matches!(self.kind, CovarianceKind::Identity) {
            return Self::identity(m);
        }
        let sigma_aa = Matrix::from_fn(q, q, |i, j| self.entry(i, j));
        let l_aa = cholesky(&sigma_aa)?;
        // columns of L_aa⁻¹ Σ_ab
        let whitened: Vec<Vec<T>> = (0..m)
            .map(|j| {
                let col: Vec<T> = (0..q).map(|i| self.entry(i, q + j)).collect();
                solve_lower(&l_aa, &col)
            })
            .collect();
        let mut cond = Matrix::from_fn(m, m, |i, j| {
            let adj: T = whitened[i].iter().zip(&whitened[j]).map(|(&a, &b)| a * b).sum();
            self.entry(q + i, q + j) - adj
        });
        let scale: Vec<T> = (0..m).map(|i| cond[(i, i)].sqrt()).collect();
        for j in 0..m {
            for i in 0..m {
                cond[(i, j)] = if i == j {
                    T::one()
                } else {
                    cond[(i, j)] / (scale[i] * scale[j])
                };
            }
        }
        // symmetrize exactly
        for j in 0..m {
            for i in 0..j {
                let v = cond[(i, j)];
                cond[(j, i)] = v;
            }
        }
        Self::custom(cond)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum FactorStructure<T> {
    Identity,
    Ar1 { rho: T, innov: T },
    Dense,
}

/// Lower-triangular `L` with `Σ = L·Lᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceFactor<T> {
    lower: Matrix<T>,
    structure: FactorStructure<T>,
}

impl<T: Real> CovarianceFactor<T> {
    pub fn lower(&self) -> &Matrix<T> {
        &self.lower
    }

    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn reconstruct(&self) -> Matrix<T> {
        self.lower.matmul(&self.lower.transpose())
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.structure, FactorStructure::Identity)
    }

    /// `out = L·z`.
    ///
    /// AR(1) factors use the recursion `x₀ = z₀`, `xᵢ = ρ·xᵢ₋₁ + √(1−ρ²)·zᵢ`,
    /// which is exactly multiplication by the Cholesky factor in O(p).
    pub fn apply(&self, z: &[T], out: &mut [T]) {
        let p = self.dim();
        assert_eq!(z.len(), p);
        assert_eq!(out.len(), p);
        match self.structure {
            FactorStructure::Identity => out.copy_from_slice(z),
            FactorStructure::Ar1 { rho, innov } => {
                out[0] = z[0];
                for i in 1..p {
                    out[i] = rho * out[i - 1] + innov * z[i];
                }
            }
            FactorStructure::Dense => {
                for (i, o) in out.iter_mut().enumerate() {
                    let mut s = T::zero();
                    for (k, &zk) in z.iter().enumerate().take(i + 1) {
                        s = s + self.lower[(i, k)] * zk;
                    }
                    *o = s;
                }
            }
        }
    }
}

pub fn factorize<T: Real>(spec: &CovarianceSpec<T>) -> Result<CovarianceFactor<T>> {
    let p = spec.dim();
    match spec.kind() {
        CovarianceKind::Identity => Ok(CovarianceFactor {
            lower: Matrix::identity(p),
            structure: FactorStructure::Identity,
        }),
        CovarianceKind::Ar1 { rho } => {
            let rho = *rho;
            let innov = (T::one() - rho * rho).sqrt();
            let lower = Matrix::from_fn(p, p, |i, j| {
                if j > i {
                    T::zero()
                } else if j == 0 {
                    rho.powi(i as i32)
                } else {
                    rho.powi((i - j) as i32) * innov
                }
            });
            Ok(CovarianceFactor {
                lower,
                structure: FactorStructure::Ar1 { rho, innov },
            })
        }
        CovarianceKind::Custom(m) => Ok(CovarianceFactor {
            lower: cholesky(m)?,
            structure: FactorStructure::Dense,
        }),
    }
}

/// Law of the i.i.d. design innovations `z_ij`. Every variant has mean 0
/// and variance 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum InnovationDistribution {
    /// N(0, 1).
    StandardNormal,
    /// Exp(1) − 1.
    CenteredExponential,
    /// V/√1.8 with V ~ 0.9·N(0,1) + 0.1·N(0,9).
    ScaledMixtureNormal,
}

impl InnovationDistribution {
    pub const ALL: [Self; 3] = [
        Self::StandardNormal,
        Self::CenteredExponential,
        Self::ScaledMixtureNormal,
    ];

    /// Short label, `i`/`ii`/`iii`.
    pub fn label(self) -> &'static str {
        match self {
            Self::StandardNormal => "i",
            Self::CenteredExponential => "ii",
            Self::ScaledMixtureNormal => "iii",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "normal" | "gaussian" => Some(Self::StandardNormal),
            "ii" | "exponential" | "exp" => Some(Self::CenteredExponential),
            "iii" | "mixture" => Some(Self::ScaledMixtureNormal),
            _ => None,
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> f64 {
        match self {
            Self::StandardNormal => StandardNormal.sample(rng),
            Self::CenteredExponential => {
                let e: f64 = Exp1.sample(rng);
                e - 1.0
            }
            Self::ScaledMixtureNormal => {
                let z: f64 = StandardNormal.sample(rng);
                let sd = if rng.random::<f64>() < 0.1 { 3.0 } else { 1.0 };
                z * sd / 1.8f64.sqrt()
            }
        }
    }
}

/// `n × p` design with rows `X_i = L·z_i`.
pub fn sample_design<T: Real, R: Rng + ?Sized>(
    n: usize,
    factor: &CovarianceFactor<T>,
    dist: InnovationDistribution,
    rng: &mut R,
) -> Matrix<T> {
    let p = factor.dim();
    let mut rows = vec![T::zero(); n * p];
    let mut z = vec![T::zero(); p];
    for row in rows.chunks_exact_mut(p.max(1)).take(n) {
        for zj in z.iter_mut() {
            *zj = T::lit(dist.sample(rng));
        }
        factor.apply(&z, row);
    }
    Matrix::from_row_major(n, p, &rows)
}

/// How the coefficient vector `β = (β_a, β_b)` is drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientSpec<T> {
    pub p: usize,
    /// Nuisance dimension.
    pub q: usize,
    /// Number of nonzero signal coefficients, placed first in `β_b`.
    pub s: usize,
    /// Target `‖β_b‖²`; zero encodes the null.
    pub signal_norm_sq: T,
    pub noise_sigma: T,
}

impl<T: Real> CoefficientSpec<T> {
    pub fn null(p: usize, q: usize) -> Self {
        Self {
            p,
            q,
            s: 0,
            signal_norm_sq: T::zero(),
            noise_sigma: T::one(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.q > self.p {
            return Err(Error::InvalidSpec(format!("q = {} exceeds p = {}", self.q, self.p)));
        }
        if self.s > self.p - self.q {
            return Err(Error::InvalidSpec(format!(
                "s = {} exceeds m = p - q = {}",
                self.s,
                self.p - self.q
            )));
        }
        if !(self.signal_norm_sq >= T::zero()) || !self.signal_norm_sq.is_finite() {
            return Err(Error::InvalidSpec("signal_norm_sq must be finite and >= 0".into()));
        }
        if self.signal_norm_sq > T::zero() && self.s == 0 {
            return Err(Error::InvalidSpec("positive signal_norm_sq requires s >= 1".into()));
        }
        if !(self.noise_sigma >= T::zero()) || !self.noise_sigma.is_finite() {
            return Err(Error::InvalidSpec("noise_sigma must be finite and >= 0".into()));
        }
        Ok(())
    }
}

pub fn make_beta<T: Real, R: Rng + ?Sized>(spec: &CoefficientSpec<T>, rng: &mut R) -> Result<Vec<T>> {
    spec.validate()?;
    let mut beta = vec![T::zero(); spec.p];
    for b in beta.iter_mut().take(spec.q) {
        *b = T::lit(StandardNormal.sample(rng));
    }
    if spec.s == 0 || spec.signal_norm_sq == T::zero() {
        return Ok(beta);
    }
    let raw: Vec<f64> = (0..spec.s).map(|_| StandardNormal.sample(rng)).collect();
    let target = spec.signal_norm_sq.as_f64();
    let slots = &mut beta[spec.q..spec.q + spec.s];
    if spec.s == 1 {
        let mag = target.sqrt();
        slots[0] = T::lit(if raw[0] < 0.0 { -mag } else { mag });
    } else {
        let kappa = (target / raw.iter().map(|r| r * r).sum::<f64>()).sqrt();
        for (slot, r) in slots.iter_mut().zip(&raw) {
            *slot = T::lit(kappa * r);
        }
    }
    Ok(beta)
}

/// One simulated replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    pub x: Matrix<T>,
    pub y: Vec<T>,
    pub beta: Vec<T>,
    pub noise: Vec<T>,
    pub q: usize,
}

impl<T: Real> Dataset<T> {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn m(&self) -> usize {
        self.p() - self.q
    }

    pub fn nuisance_block(&self) -> Matrix<T> {
        self.x.column_block(0..self.q)
    }

    pub fn signal_block(&self) -> Matrix<T> {
        self.x.column_block(self.q..self.p())
    }

    pub fn beta_b(&self) -> &[T] {
        &self.beta[self.q..]
    }
}

/// Draws `X`, then `β`, then `ε ~ N(0, σ²)` from one stream and forms
/// `Y = Xβ + ε`.
pub fn simulate<T: Real, R: Rng + ?Sized>(
    n: usize,
    factor: &CovarianceFactor<T>,
    dist: InnovationDistribution,
    coef: &CoefficientSpec<T>,
    rng: &mut R,
) -> Result<Dataset<T>> {
    if n == 0 {
        return Err(Error::InvalidSpec("n must be positive".into()));
    }
    if factor.dim() != coef.p {
        return Err(Error::DimensionMismatch(format!(
            "covariance dimension {} but coefficient spec p = {}",
            factor.dim(),
            coef.p
        )));
    }
    let x = sample_design(n, factor, dist, rng);
    let beta = make_beta(coef, rng)?;
    let sigma = coef.noise_sigma;
    let noise: Vec<T> = (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            sigma * T::lit(e)
        })
        .collect();
    let mean = x.mul_vec(&beta);
    let y = mean.iter().zip(&noise).map(|(&a, &e)| a + e).collect();
    Ok(Dataset {
        x,
        y,
        beta,
        noise,
        q: coef.q,
    })
}

/// Everything needed to draw replications of one simulation cell.
#[derive(Debug, Clone)]
pub struct DesignConfig<T> {
    pub n: usize,
    pub covariance: CovarianceSpec<T>,
    pub innovation: InnovationDistribution,
    pub coefficients: CoefficientSpec<T>,
    factor: CovarianceFactor<T>,
}

impl<T: Real> DesignConfig<T> {
    pub fn new(
        n: usize,
        covariance: CovarianceSpec<T>,
        innovation: InnovationDistribution,
        coefficients: CoefficientSpec<T>,
    ) -> Result<Self> {
        if covariance.dim() != coefficients.p {
            return Err(Error::DimensionMismatch(format!(
                "covariance dimension {} but p = {}",
                covariance.dim(),
                coefficients.p
            )));
        }
        if coefficients.q >= n {
            return Err(Error::InvalidSpec(format!(
                "q = {} must be below n = {n}",
                coefficients.q
            )));
        }
        coefficients.validate()?;
        let factor = factorize(&covariance)?;
        Ok(Self {
            n,
            covariance,
            innovation,
            coefficients,
            factor,
        })
    }

    pub fn factor(&self) -> &CovarianceFactor<T> {
        &self.factor
    }

    pub fn m(&self) -> usize {
        self.coefficients.p - self.coefficients.q
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Dataset<T>> {
        simulate(self.n, &self.factor, self.innovation, &self.coefficients, rng)
    }
}
