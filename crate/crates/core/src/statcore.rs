//! Residualized design, standardized score statistics and the top-k
//! L-statistic family.
//!
//! With `Q` an orthonormal basis of `col(X_a)`, the residualized columns are
//! `X̃_b = X_b − Q(QᵀX_b)`, the null residual is `ε̂ = Y − Q(QᵀY)` and
//!
//! ```text
//! Z_j = X̃_jᵀ ε̂ / (σ̂ ‖X̃_j‖),   σ̂² = ‖ε̂‖² / (n − q),   W_j = Z_j².
//! ```
//!
//! `L_k` is the sum of the `k` largest `W_j`; [`OrderedEvidence`] stores the
//! prefix sums so every `L_k` is a lookup.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_sq, orthonormal_basis, Matrix};
use crate::scalar::Real;

/// Signal columns with the nuisance space projected out. Immutable once
/// built and shared read-only by every bootstrap replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualizedDesign<T> {
    basis: Matrix<T>,
    xb_tilde: Matrix<T>,
    col_norms: Vec<T>,
}

/// Norms below this are treated as exactly collinear with the nuisance space.
const DEGENERATE_NORM: f64 = 1e-12;
/// Residual norms below this make the studentization undefined.
const ZERO_RESIDUAL: f64 = 1e-300;

pub fn residualize<T: Real>(x_a: &Matrix<T>, x_b: &Matrix<T>) -> Result<ResidualizedDesign<T>> {
    let n = x_b.rows();
    if x_a.rows() != n {
        return Err(Error::DimensionMismatch(format!(
            "X_a has {} rows, X_b has {n}",
            x_a.rows()
        )));
    }
    let q = x_a.cols();
    if q >= n {
        return Err(Error::InvalidSpec(format!("q = {q} must be below n = {n}")));
    }
    if x_b.cols() == 0 {
        return Err(Error::InvalidSpec("signal block has no columns".into()));
    }
    let basis = orthonormal_basis(x_a)?;
    let mut xb_tilde = x_b.clone();
    let mut coef = vec![T::zero(); q];
    let mut col_norms = Vec::with_capacity(x_b.cols());
    for j in 0..x_b.cols() {
        let col = xb_tilde.col_mut(j);
        if q > 0 {
            basis.tr_mul_vec_into(col, &mut coef);
            for (c, qc) in coef.iter().zip(basis.columns()) {
                for (x, &b) in col.iter_mut().zip(qc) {
                    *x = *x - *c * b;
                }
            }
        }
        let norm = norm_sq(col).sqrt();
        if !(norm >= T::lit(DEGENERATE_NORM)) {
            return Err(Error::DegenerateColumn {
                column: j,
                norm: norm.as_f64(),
            });
        }
        col_norms.push(norm);
    }
    Ok(ResidualizedDesign {
        basis,
        xb_tilde,
        col_norms,
    })
}

impl<T: Real> ResidualizedDesign<T> {
    pub fn n(&self) -> usize {
        self.xb_tilde.rows()
    }

    pub fn q(&self) -> usize {
        self.basis.cols()
    }

    pub fn m(&self) -> usize {
        self.xb_tilde.cols()
    }

    /// Residual degrees of freedom `r = n − q`.
    pub fn residual_df(&self) -> usize {
        self.n() - self.q()
    }

    /// Orthonormal nuisance basis `Q` (n × q, empty when q = 0).
    pub fn basis(&self) -> &Matrix<T> {
        &self.basis
    }

    pub fn xb_tilde(&self) -> &Matrix<T> {
        &self.xb_tilde
    }

    pub fn col_norms(&self) -> &[T] {
        &self.col_norms
    }

    /// `(I − QQᵀ)·v`.
    pub fn project_out(&self, v: &[T]) -> Vec<T> {
        let mut out = v.to_vec();
        if self.q() > 0 {
            let coef = self.basis.tr_mul_vec(v);
            for (c, qc) in coef.iter().zip(self.basis.columns()) {
                for (o, &b) in out.iter_mut().zip(qc) {
                    *o = *o - *c * b;
                }
            }
        }
        out
    }

    /// `‖Qᵀv‖²`, the squared length of the nuisance component of `v`.
    pub fn nuisance_energy(&self, v: &[T]) -> T {
        self.basis.columns().map(|c| {
            let d = dot(c, v);
            d * d
        }).sum()
    }

    /// Writes `W_j = (X̃_jᵀ u)² / (σ̂² ‖X̃_j‖²)` into `w` for a residual-space
    /// vector `u` with `σ̂² = residual_energy / r`. Returns `σ̂²`.
    pub(crate) fn squared_scores_into(&self, u: &[T], residual_energy: T, w: &mut [T]) -> Result<T> {
        if !(residual_energy.sqrt() >= T::lit(ZERO_RESIDUAL)) {
            return Err(Error::ZeroResidual);
        }
        let sigma_sq = residual_energy / T::from_usize_lossy(self.residual_df());
        // same operation order as `score_stats`, so identity multipliers
        // reproduce the observed statistics bit for bit
        let sigma = sigma_sq.sqrt();
        for ((wj, col), &norm) in w.iter_mut().zip(self.xb_tilde.columns()).zip(&self.col_norms) {
            let z = dot(col, u) / (sigma * norm);
            *wj = z * z;
        }
        Ok(sigma_sq)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreStats<T> {
    pub eps_hat: Vec<T>,
    pub sigma_hat_sq: T,
    pub z: Vec<T>,
    pub w: Vec<T>,
}

pub fn score_stats<T: Real>(rd: &ResidualizedDesign<T>, y: &[T]) -> Result<ScoreStats<T>> {
    if y.len() != rd.n() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} entries, design has {} rows",
            y.len(),
            rd.n()
        )));
    }
    let eps_hat = rd.project_out(y);
    let energy = norm_sq(&eps_hat);
    if !(energy.sqrt() >= T::lit(ZERO_RESIDUAL)) {
        return Err(Error::ZeroResidual);
    }
    let sigma_hat_sq = energy / T::from_usize_lossy(rd.residual_df());
    let sigma_hat = sigma_hat_sq.sqrt();
    let z: Vec<T> = rd
        .xb_tilde
        .columns()
        .zip(&rd.col_norms)
        .map(|(col, &norm)| dot(col, &eps_hat) / (sigma_hat * norm))
        .collect();
    let w = z.iter().map(|&v| v * v).collect();
    Ok(ScoreStats {
        eps_hat,
        sigma_hat_sq,
        z,
        w,
    })
}

/// Squared evidence sorted in descending order with running sums.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedEvidence<T> {
    pub sorted_w: Vec<T>,
    /// `prefix_sums[k − 1] = L_k`.
    pub prefix_sums: Vec<T>,
    /// `perm[i]` is the original index of `sorted_w[i]`.
    pub perm: Vec<usize>,
}

pub fn order_evidence<T: Real>(w: &[T]) -> Result<OrderedEvidence<T>> {
    if let Some(index) = w.iter().position(|&x| !x.is_finite() || x < T::zero()) {
        return Err(Error::NonFiniteEvidence { index });
    }
    let mut perm: Vec<usize> = (0..w.len()).collect();
    // stable: ties keep ascending original index
    perm.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap_or(Ordering::Equal));
    let sorted_w: Vec<T> = perm.iter().map(|&i| w[i]).collect();
    let prefix_sums = sorted_w
        .iter()
        .scan(T::zero(), |acc, &x| {
            *acc = *acc + x;
            Some(*acc)
        })
        .collect();
    Ok(OrderedEvidence {
        sorted_w,
        prefix_sums,
        perm,
    })
}

impl<T: Real> OrderedEvidence<T> {
    pub fn m(&self) -> usize {
        self.sorted_w.len()
    }

    /// `L_k`, the sum of the `k` largest entries.
    pub fn l_stat(&self, k: usize) -> Result<T> {
        if k == 0 || k > self.m() {
            return Err(Error::KOutOfRange { k, m: self.m() });
        }
        Ok(self.prefix_sums[k - 1])
    }

    /// `W_(s)`, the `s`-th largest entry.
    pub fn order_stat(&self, s: usize) -> Result<T> {
        if s == 0 || s > self.m() {
            return Err(Error::KOutOfRange { k: s, m: self.m() });
        }
        Ok(self.sorted_w[s - 1])
    }
}

pub fn l_stat<T: Real>(oe: &OrderedEvidence<T>, k: usize) -> Result<T> {
    oe.l_stat(k)
}

/// Sorts `w` descending in place and writes `L_k` for each `k` of the
/// ascending `grid` into `out`. Used on the per-replicate hot path.
pub(crate) fn l_stats_on_grid<T: Real>(w: &mut [T], grid: &[usize], out: &mut [T]) {
    w.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut acc = T::zero();
    let mut taken = 0;
    for (o, &k) in out.iter_mut().zip(grid) {
        while taken < k {
            acc = acc + w[taken];
            taken += 1;
        }
        *o = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(v: &[f64]) -> Matrix<f64> {
        Matrix::from_column_major(v.len(), 1, v.to_vec()).unwrap()
    }

    #[test]
    fn q_zero_keeps_design() {
        let xa = Matrix::<f64>::zeros(3, 0);
        let xb = Matrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0], vec![3.0, -1.0]]);
        let rd = residualize(&xa, &xb).unwrap();
        assert_eq!(rd.xb_tilde(), &xb);
        assert_eq!(rd.residual_df(), 3);
        let y = [1.0, 2.0, 3.0];
        assert_eq!(score_stats(&rd, &y).unwrap().eps_hat, y.to_vec());
    }

    #[test]
    fn projection_against_constant_column() {
        let rd = residualize(&col(&[1.0, 1.0, 1.0]), &col(&[1.0, 0.0, 0.0])).unwrap();
        let xt = rd.xb_tilde().col(0);
        let expect = [2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0];
        for (a, b) in xt.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((rd.col_norms()[0] - 6f64.sqrt() / 3.0).abs() < 1e-15);
    }

    #[test]
    fn full_hand_computation() {
        let rd = residualize(&col(&[1.0, 1.0, 1.0]), &col(&[1.0, 0.0, 0.0])).unwrap();
        let st = score_stats(&rd, &[1.0, 2.0, 3.0]).unwrap();
        for (a, b) in st.eps_hat.iter().zip(&[-1.0, 0.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((st.sigma_hat_sq - 1.0).abs() < 1e-14);
        assert!((st.z[0] + 3.0 / 6f64.sqrt()).abs() < 1e-14);
        assert!((st.z[0] + 1.224_744_871).abs() < 1e-9);
        assert!((st.w[0] - 1.5).abs() < 1e-14);
        assert_eq!(st.w[0], st.z[0] * st.z[0]);
    }

    #[test]
    fn perfect_fit_is_zero_residual() {
        let rd = residualize(&col(&[1.0, 0.0, 0.0]), &col(&[0.0, 1.0, 1.0])).unwrap();
        assert_eq!(score_stats(&rd, &[2.0, 0.0, 0.0]), Err(Error::ZeroResidual));
    }

    #[test]
    fn nuisance_column_collinear_with_signal_is_degenerate() {
        let err = residualize(&col(&[1.0, 2.0, 3.0]), &col(&[2.0, 4.0, 6.0])).unwrap_err();
        assert!(matches!(err, Error::DegenerateColumn { column: 0, .. }));
    }

    #[test]
    fn rank_deficient_nuisance() {
        let xa = Matrix::from_rows(&[vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0], vec![1.0, 2.0]]);
        let xb = col(&[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            residualize(&xa, &xb),
            Err(Error::RankDeficientNuisance { .. })
        ));
    }

    #[test]
    fn hand_sorted_evidence() {
        let oe = order_evidence(&[0.5f64, 3.2, 1.1]).unwrap();
        assert_eq!(oe.sorted_w, vec![3.2, 1.1, 0.5]);
        assert_eq!(oe.perm, vec![1, 2, 0]);
        assert!((oe.prefix_sums[1] - 4.3).abs() < 1e-15);
        assert!((oe.prefix_sums[2] - 4.8).abs() < 1e-15);
        assert_eq!(oe.l_stat(1).unwrap(), 3.2);
        assert!((l_stat(&oe, 2).unwrap() - 4.3).abs() < 1e-15);
        assert_eq!(oe.l_stat(0), Err(Error::KOutOfRange { k: 0, m: 3 }));
        assert_eq!(oe.l_stat(4), Err(Error::KOutOfRange { k: 4, m: 3 }));
    }

    #[test]
    fn ties_are_stable() {
        let oe = order_evidence(&[2.0, 2.0, 2.0, 2.0]).unwrap();
        assert_eq!(oe.perm, vec![0, 1, 2, 3]);
        for k in 1..=4 {
            assert_eq!(oe.l_stat(k).unwrap(), 2.0 * k as f64);
        }
    }

    #[test]
    fn non_finite_evidence_rejected() {
        assert_eq!(
            order_evidence(&[1.0, f64::NAN]),
            Err(Error::NonFiniteEvidence { index: 1 })
        );
        assert_eq!(
            order_evidence(&[f64::INFINITY]),
            Err(Error::NonFiniteEvidence { index: 0 })
        );
    }

    #[test]
    fn grid_sums_match_prefix_sums() {
        let w = vec![0.3, 5.0, 1.25, 0.0, 2.5, 4.0];
        let oe = order_evidence(&w).unwrap();
        let grid = [1, 3, 6];
        let mut buf = w.clone();
        let mut out = [0.0; 3];
        l_stats_on_grid(&mut buf, &grid, &mut out);
        for (o, &k) in out.iter().zip(&grid) {
            assert_eq!(*o, oe.l_stat(k).unwrap());
        }
    }

    #[test]
    fn works_in_single_precision() {
        let rd = residualize(&Matrix::<f32>::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]),
            &Matrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0]])).unwrap();
        let st = score_stats(&rd, &[1.0f32, 2.0, 3.0]).unwrap();
        assert!((st.w[0] - 1.5).abs() < 1e-5);
    }
}
