//! Normal and χ²₁ distribution functions, plus Kolmogorov–Smirnov helpers.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[inline]
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[inline]
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail `1 − Φ(x)`, accurate far into the tail.
#[inline]
pub fn norm_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `Φ⁻¹(prob)` by bisection; `prob` must lie in (0, 1).
pub fn norm_quantile(prob: f64) -> f64 {
    assert!(prob > 0.0 && prob < 1.0, "probability {prob} outside (0,1)");
    bisect(|x| norm_cdf(x) - prob, -40.0, 40.0, 1e-14)
}

/// `P(χ²₁ ≥ x)` through the complementary error function of `√(x/2)`.
#[inline]
pub fn chi1_sf(x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        libm::erfc((0.5 * x).sqrt())
    }
}

#[inline]
pub fn chi1_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        libm::erf((0.5 * x).sqrt())
    }
}

/// Root of an increasing function on `[lo, hi]` to absolute tolerance `tol`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    debug_assert!(lo < hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return mid;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sup-distance between the empirical CDF of `sample` and `cdf`.
///
/// Sorts a copy of the sample; ties are handled by the usual two-sided
/// `max(i/n − F, F − (i−1)/n)` formula.
pub fn ks_distance(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j + 1 < xs.len() && xs[j + 1] == xs[i] {
            j += 1;
        }
        let f = cdf(xs[i]);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((j + 1) as f64 / n - f).abs());
        i = j + 1;
    }
    d
}

/// Two-sample-free asymptotic KS critical value, `c(α)/√n`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-0.5 * (alpha / 2.0).ln()).sqrt() / (n as f64).sqrt()
}
