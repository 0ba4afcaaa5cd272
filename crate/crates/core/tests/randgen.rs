use ltest::linalg::Matrix;
use ltest::randgen::{
    factorize, make_beta, sample_design, simulate, CoefficientSpec, CovarianceSpec, DesignConfig,
    InnovationDistribution,
};
use ltest::rng::{Purpose, StreamKey};

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn column_corr(x: &Matrix<f64>, a: usize, b: usize) -> (f64, f64, f64) {
    let (ma, va) = mean_var(x.col(a));
    let (mb, vb) = mean_var(x.col(b));
    let n = x.rows() as f64;
    let cov = x
        .col(a)
        .iter()
        .zip(x.col(b))
        .map(|(u, v)| (u - ma) * (v - mb))
        .sum::<f64>()
        / (n - 1.0);
    (cov, cov / (va * vb).sqrt(), va)
}

#[test]
fn ar1_factor_roundtrip() {
    for rho in [0.0, 0.3, -0.3, 0.7, -0.7, 0.9, -0.9] {
        for dim in [1usize, 2, 17, 200, 600] {
            let spec = CovarianceSpec::ar1(rho, dim).unwrap();
            let f = factorize(&spec).unwrap();
            let err = f.reconstruct().max_abs_diff(&spec.matrix());
            assert!(err < 1e-10, "rho = {rho}, dim = {dim}: {err}");
            let l = f.lower();
            for i in 0..dim {
                for j in i + 1..dim {
                    assert_eq!(l[(i, j)], 0.0);
                }
            }
        }
    }
}

#[test]
fn custom_factor_roundtrip_and_rejection() {
    // compound symmetry, positive definite for rho > -1/(d-1)
    let d = 30;
    let sigma = Matrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.35 });
    let spec = CovarianceSpec::custom(sigma.clone()).unwrap();
    let f = factorize(&spec).unwrap();
    assert!(f.reconstruct().max_abs_diff(&sigma) < 1e-12);

    let bad = Matrix::from_rows(&[vec![1.0, 0.9, 0.9], vec![0.9, 1.0, -0.9], vec![0.9, -0.9, 1.0]]);
    assert!(CovarianceSpec::custom(bad).is_err());
    let not_unit = Matrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]);
    assert!(CovarianceSpec::custom(not_unit).is_err());
    let asym = Matrix::from_rows(&[vec![1.0, 0.2], vec![0.1, 1.0]]);
    assert!(CovarianceSpec::custom(asym).is_err());
}

#[test]
fn innovations_are_standardized() {
    for (i, dist) in InnovationDistribution::ALL.into_iter().enumerate() {
        let mut rng = StreamKey::new(11).child(Purpose::Data, i as u64).rng();
        let draws: Vec<f64> = (0..1_000_000).map(|_| dist.sample(&mut rng)).collect();
        let (mean, var) = mean_var(&draws);
        assert!(mean.abs() < 0.01, "{dist:?}: mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "{dist:?}: var {var}");
    }
}

#[test]
fn identity_design_covariance() {
    let f = factorize(&CovarianceSpec::<f64>::identity(5).unwrap()).unwrap();
    let mut rng = StreamKey::new(3).rng();
    let x = sample_design(50_000, &f, InnovationDistribution::StandardNormal, &mut rng);
    for a in 0..5 {
        for b in 0..5 {
            let (cov, _, _) = column_corr(&x, a, b);
            let target = if a == b { 1.0 } else { 0.0 };
            assert!((cov - target).abs() < 0.05, "({a},{b}): {cov}");
        }
    }
}

#[test]
fn ar1_exponential_design_correlation() {
    let f = factorize(&CovarianceSpec::ar1(0.7, 5).unwrap()).unwrap();
    let mut rng = StreamKey::new(4).rng();
    let x = sample_design(50_000, &f, InnovationDistribution::CenteredExponential, &mut rng);
    let (_, r01, _) = column_corr(&x, 0, 1);
    assert!((r01 - 0.7).abs() < 0.03, "{r01}");
    let (_, r02, _) = column_corr(&x, 0, 2);
    assert!((r02 - 0.49).abs() < 0.03, "{r02}");
    let (_, r34, v3) = column_corr(&x, 3, 4);
    assert!((r34 - 0.7).abs() < 0.03 && (v3 - 1.0).abs() < 0.05);
}

#[test]
fn mixture_design_correlation() {
    let f = factorize(&CovarianceSpec::ar1(0.7, 3).unwrap()).unwrap();
    let mut rng = StreamKey::new(5).rng();
    let x = sample_design(50_000, &f, InnovationDistribution::ScaledMixtureNormal, &mut rng);
    let (_, r, _) = column_corr(&x, 1, 2);
    assert!((r - 0.7).abs() < 0.03, "{r}");
}

#[test]
fn design_is_reproducible() {
    let f = factorize(&CovarianceSpec::<f64>::identity(8).unwrap()).unwrap();
    let key = StreamKey::new(99).child(Purpose::Data, 7);
    let a = sample_design(20, &f, InnovationDistribution::StandardNormal, &mut key.rng());
    let b = sample_design(20, &f, InnovationDistribution::StandardNormal, &mut key.rng());
    assert_eq!(a, b);
    let c = sample_design(20, &f, InnovationDistribution::StandardNormal, &mut StreamKey::new(100).rng());
    assert_ne!(a, c);
}

#[test]
fn beta_support_and_norm() {
    let mut rng = StreamKey::new(1).rng();
    for s in [1usize, 2, 10, 50, 195] {
        let spec = CoefficientSpec {
            p: 200,
            q: 5,
            s,
            signal_norm_sq: 0.8,
            noise_sigma: 1.0,
        };
        let beta = make_beta(&spec, &mut rng).unwrap();
        let b = &beta[5..];
        let norm: f64 = b.iter().map(|v| v * v).sum();
        assert!((norm - 0.8).abs() < 1e-12, "s = {s}");
        let support: Vec<usize> = (0..b.len()).filter(|&j| b[j] != 0.0).collect();
        assert_eq!(support, (0..s).collect::<Vec<_>>());
        assert!(beta[..5].iter().all(|v| *v != 0.0));
    }
    let spike = CoefficientSpec::<f64> {
        p: 10,
        q: 2,
        s: 1,
        signal_norm_sq: 0.8,
        noise_sigma: 1.0,
    };
    let beta = make_beta(&spike, &mut rng).unwrap();
    assert!((beta[2] * beta[2] - 0.8).abs() < 1e-15);

    let null = make_beta(&CoefficientSpec::<f64>::null(10, 2), &mut rng).unwrap();
    assert!(null[2..].iter().all(|v| *v == 0.0));

    let too_many = CoefficientSpec {
        s: 9,
        ..spike
    };
    assert!(make_beta(&too_many, &mut rng).is_err());
}

#[test]
fn simulate_noise_and_response() {
    let f = factorize(&CovarianceSpec::ar1(0.7, 12).unwrap()).unwrap();
    let coef = CoefficientSpec::<f64> {
        p: 12,
        q: 3,
        s: 4,
        signal_norm_sq: 0.8,
        noise_sigma: 1.5,
    };
    let key = StreamKey::new(21);
    let d = simulate(10_000, &f, InnovationDistribution::CenteredExponential, &coef, &mut key.rng()).unwrap();
    let fitted = d.x.mul_vec(&d.beta);
    for ((y, f), e) in d.y.iter().zip(&fitted).zip(&d.noise) {
        assert_eq!(*y, f + e);
    }
    let resid: Vec<f64> = d.y.iter().zip(&fitted).map(|(y, m)| y - m).collect();
    let (_, var) = mean_var(&resid);
    assert!((var / 2.25 - 1.0).abs() < 0.1, "{var}");

    let again = simulate(10_000, &f, InnovationDistribution::CenteredExponential, &coef, &mut key.rng()).unwrap();
    assert_eq!(d, again);
}

#[test]
fn degenerate_noise_null_response_is_zero() {
    let f = factorize(&CovarianceSpec::<f64>::identity(6).unwrap()).unwrap();
    let coef = CoefficientSpec::<f64> {
        p: 6,
        q: 0,
        s: 0,
        signal_norm_sq: 0.0,
        noise_sigma: 0.0,
    };
    let d = simulate(30, &f, InnovationDistribution::StandardNormal, &coef, &mut StreamKey::new(2).rng()).unwrap();
    assert!(d.y.iter().all(|v| *v == 0.0));
}

#[test]
fn design_config_validates() {
    let cov = CovarianceSpec::ar1(0.7, 20).unwrap();
    let ok = DesignConfig::new(30, cov.clone(), InnovationDistribution::StandardNormal, CoefficientSpec::null(20, 5));
    assert_eq!(ok.unwrap().m(), 15);
    let q_too_big = DesignConfig::new(5, cov.clone(), InnovationDistribution::StandardNormal, CoefficientSpec::null(20, 5));
    assert!(q_too_big.is_err());
    let wrong_p = DesignConfig::new(30, cov, InnovationDistribution::StandardNormal, CoefficientSpec::null(21, 5));
    assert!(wrong_p.is_err());
}

#[test]
fn single_precision_design() {
    let f = factorize(&CovarianceSpec::ar1(0.5f32, 4).unwrap()).unwrap();
    let x = sample_design(2000, &f, InnovationDistribution::StandardNormal, &mut StreamKey::new(8).rng());
    let var: f32 = x.col(3).iter().map(|v| v * v).sum::<f32>() / 2000.0;
    assert!((var - 1.0).abs() < 0.1);
}
