use ltest::linalg::{norm_sq, Matrix};
use ltest::randgen::{factorize, sample_design, CovarianceSpec, InnovationDistribution};
use ltest::rng::{Purpose, StreamKey};
use ltest::special::{ks_critical, ks_distance, norm_cdf};
use ltest::statcore::{l_stat, order_evidence, residualize, score_stats};
use ltest::Error;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn gaussian(n: usize, p: usize, rng: &mut impl Rng) -> Matrix<f64> {
    Matrix::from_fn(n, p, |_, _| rng.sample(StandardNormal))
}

#[test]
fn hand_projection_against_constant() {
    let xa = Matrix::<f64>::from_rows(&[vec![1.0], vec![1.0], vec![1.0]]);
    let xb = Matrix::from_rows(&[vec![1.0], vec![0.0], vec![0.0]]);
    let rd = residualize(&xa, &xb).unwrap();
    let t = rd.xb_tilde().col(0);
    for (got, want) in t.iter().zip([2.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]) {
        assert!((got - want).abs() < 1e-15);
    }
    assert!((rd.col_norms()[0] - 6f64.sqrt() / 3.0).abs() < 1e-15);
    assert_eq!(rd.residual_df(), 2);

    let st = score_stats(&rd, &[1.0, 2.0, 3.0]).unwrap();
    assert!((st.sigma_hat_sq - 1.0).abs() < 1e-14);
    assert!((st.z[0] + 1.224_745).abs() < 1e-6);
    assert!((st.w[0] - 1.5).abs() < 1e-14);
}

#[test]
fn no_nuisance_is_global_null() {
    let mut rng = StreamKey::new(1).rng();
    let xb = gaussian(30, 4, &mut rng);
    let rd = residualize(&Matrix::zeros(30, 0), &xb).unwrap();
    assert_eq!(rd.q(), 0);
    assert_eq!(rd.xb_tilde(), &xb);
    let y: Vec<f64> = (0..30).map(|_| rng.sample(StandardNormal)).collect();
    let st = score_stats(&rd, &y).unwrap();
    assert_eq!(st.eps_hat, y);
}

#[test]
fn residualized_columns_are_orthogonal_to_nuisance() {
    let mut rng = StreamKey::new(2).rng();
    let xa = gaussian(100, 5, &mut rng);
    let xb = gaussian(100, 40, &mut rng);
    let rd = residualize(&xa, &xb).unwrap();
    let q = rd.basis();
    let qtq = q.tr_matmul(q);
    assert!(qtq.max_abs_diff(&Matrix::identity(5)) < 1e-10);
    assert!(q.tr_matmul(rd.xb_tilde()).max_abs() < 1e-8);
    // the nuisance columns themselves lie in span(Q)
    let resid_a = residualize(&Matrix::zeros(100, 0), &xa).unwrap();
    for j in 0..5 {
        let r = rd.project_out(resid_a.xb_tilde().col(j));
        assert!(norm_sq(&r).sqrt() < 1e-10);
    }
    for (j, &c) in rd.col_norms().iter().enumerate() {
        assert!((c - norm_sq(rd.xb_tilde().col(j)).sqrt()).abs() < 1e-12);
        assert!(c > 0.0);
    }
}

#[test]
fn projection_is_idempotent() {
    let mut rng = StreamKey::new(3).rng();
    let xa = gaussian(80, 6, &mut rng);
    let xb = gaussian(80, 25, &mut rng);
    let rd = residualize(&xa, &xb).unwrap();
    let again = residualize(&xa, rd.xb_tilde()).unwrap();
    assert!(again.xb_tilde().max_abs_diff(rd.xb_tilde()) < 1e-8);
}

#[test]
fn nuisance_rank_and_shape_errors() {
    let mut rng = StreamKey::new(4).rng();
    let base = gaussian(20, 2, &mut rng);
    let dup = Matrix::from_fn(20, 3, |i, j| base[(i, j.min(1))]);
    let xb = gaussian(20, 3, &mut rng);
    assert!(matches!(residualize(&dup, &xb), Err(Error::RankDeficientNuisance { .. })));
    assert!(residualize(&gaussian(20, 20, &mut rng), &xb).is_err());
    assert!(matches!(
        residualize(&gaussian(19, 2, &mut rng), &xb),
        Err(Error::DimensionMismatch(_))
    ));
    let collinear = Matrix::from_fn(20, 1, |i, _| 2.0 * base[(i, 0)]);
    assert!(matches!(
        residualize(&base, &collinear),
        Err(Error::DegenerateColumn { column: 0, .. })
    ));
}

#[test]
fn residual_norms_follow_chi_square() {
    // ‖(I − H_a) x_j‖² ~ χ²_{n−q} for Gaussian x_j independent of X_a
    let draws = 10_000;
    let root = StreamKey::new(5);
    let sample: Vec<f64> = (0..draws)
        .map(|r| {
            let mut rng = root.child(Purpose::Replication, r).rng();
            let xa = gaussian(100, 5, &mut rng);
            let xb = gaussian(100, 1, &mut rng);
            let rd = residualize(&xa, &xb).unwrap();
            rd.col_norms()[0] * rd.col_norms()[0]
        })
        .collect();
    let chi = ChiSquared::new(95.0).unwrap();
    let d = ks_distance(&sample, |x| chi.cdf(x));
    assert!(d < ks_critical(draws as usize, 0.01), "KS distance {d}");
}

#[test]
fn null_scores_are_standard_normal() {
    let reps = 10_000;
    let f = factorize(&CovarianceSpec::<f64>::identity(3).unwrap()).unwrap();
    let root = StreamKey::new(6);
    let z: Vec<f64> = (0..reps)
        .map(|r| {
            let mut rng = root.child(Purpose::Replication, r).rng();
            let xb = sample_design(200, &f, InnovationDistribution::StandardNormal, &mut rng);
            let y: Vec<f64> = (0..200).map(|_| rng.sample(StandardNormal)).collect();
            let rd = residualize(&Matrix::zeros(200, 0), &xb).unwrap();
            score_stats(&rd, &y).unwrap().z[0]
        })
        .collect();
    let d = ks_distance(&z, norm_cdf);
    assert!(d < 0.05, "KS distance {d}");
}

#[test]
fn squared_scores_are_scale_and_sign_invariant() {
    let mut rng = StreamKey::new(7).rng();
    let xa = gaussian(60, 4, &mut rng);
    let xb = gaussian(60, 30, &mut rng);
    let rd = residualize(&xa, &xb).unwrap();
    let y: Vec<f64> = (0..60).map(|_| rng.sample(StandardNormal)).collect();
    let base = score_stats(&rd, &y).unwrap();
    let neg: Vec<f64> = y.iter().map(|v| -2.0 * v).collect();
    assert_eq!(score_stats(&rd, &neg).unwrap().w, base.w);
    for c in [3.7, -0.01, 1e6] {
        let scaled: Vec<f64> = y.iter().map(|v| c * v).collect();
        let w = score_stats(&rd, &scaled).unwrap().w;
        for (a, b) in w.iter().zip(&base.w) {
            assert!((a - b).abs() <= 1e-12 * b.max(1.0));
        }
    }
}

#[test]
fn score_stat_identities() {
    let mut rng = StreamKey::new(8).rng();
    let xa = gaussian(50, 3, &mut rng);
    let xb = gaussian(50, 12, &mut rng);
    let rd = residualize(&xa, &xb).unwrap();
    let y: Vec<f64> = (0..50).map(|_| rng.sample(StandardNormal)).collect();
    let st = score_stats(&rd, &y).unwrap();
    assert_eq!(st.sigma_hat_sq, norm_sq(&st.eps_hat) / 47.0);
    for (w, z) in st.w.iter().zip(&st.z) {
        assert_eq!(*w, z * z);
    }
    assert!(matches!(score_stats(&rd, &y[..49]), Err(Error::DimensionMismatch(_))));
}

#[test]
fn ordered_evidence_identities() {
    let oe = order_evidence(&[0.5f64, 3.2, 1.1]).unwrap();
    assert_eq!(oe.sorted_w, vec![3.2, 1.1, 0.5]);
    assert!((oe.prefix_sums[1] - 4.3).abs() < 1e-15 && (oe.prefix_sums[2] - 4.8).abs() < 1e-15);
    assert_eq!(oe.perm, vec![1, 2, 0]);
    assert!((l_stat(&oe, 2).unwrap() - 4.3).abs() < 1e-15);
    assert_eq!(l_stat(&oe, 1).unwrap(), 3.2);
    assert_eq!(l_stat(&oe, 0), Err(Error::KOutOfRange { k: 0, m: 3 }));
    assert_eq!(l_stat(&oe, 4), Err(Error::KOutOfRange { k: 4, m: 3 }));

    let tied = order_evidence(&[0.25; 6]).unwrap();
    for k in 1..=6 {
        assert_eq!(tied.l_stat(k).unwrap(), 0.25 * k as f64);
    }
    assert_eq!(tied.perm, (0..6).collect::<Vec<_>>());

    assert_eq!(order_evidence(&[1.0, f64::NAN]), Err(Error::NonFiniteEvidence { index: 1 }));
    assert_eq!(order_evidence(&[f64::INFINITY]), Err(Error::NonFiniteEvidence { index: 0 }));
}

#[test]
fn prefix_sums_match_total_and_increase() {
    let mut rng = StreamKey::new(9).rng();
    let w: Vec<f64> = (0..2000).map(|_| rng.sample::<f64, _>(StandardNormal).powi(2)).collect();
    let oe = order_evidence(&w).unwrap();
    let total: f64 = w.iter().sum();
    assert!((oe.l_stat(2000).unwrap() - total).abs() <= 1e-9 * total);
    assert_eq!(oe.l_stat(1).unwrap(), w.iter().copied().fold(0.0, f64::max));
    for k in 1..2000 {
        assert!(oe.sorted_w[k] <= oe.sorted_w[k - 1]);
        if oe.sorted_w[k] > 0.0 {
            assert!(oe.l_stat(k + 1).unwrap() > oe.l_stat(k).unwrap());
        }
    }
}

#[test]
fn single_precision_agrees_with_double() {
    let mut rng = StreamKey::new(10).rng();
    let xa = gaussian(40, 2, &mut rng);
    let xb = gaussian(40, 10, &mut rng);
    let y: Vec<f64> = (0..40).map(|_| rng.sample(StandardNormal)).collect();
    let w64 = score_stats(&residualize(&xa, &xb).unwrap(), &y).unwrap().w;
    let rd32 = residualize(&xa.map(|v| v as f32), &xb.map(|v| v as f32)).unwrap();
    let y32: Vec<f32> = y.iter().map(|&v| v as f32).collect();
    let w32 = score_stats(&rd32, &y32).unwrap().w;
    for (a, b) in w64.iter().zip(&w32) {
        assert!((a - *b as f64).abs() < 1e-3 * a.max(1.0));
    }
}
