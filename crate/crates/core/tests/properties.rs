use ltest::adaptive::{adaptive_test, cauchy_combine};
use ltest::asymptotic::{joint_order_cdf, order_stat_cdf};
use ltest::calibrate::{wild_bootstrap, BootstrapConfig};
use ltest::linalg::Matrix;
use ltest::rng::StreamKey;
use ltest::statcore::{order_evidence, residualize, score_stats};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

struct Problem {
    xa: Matrix<f64>,
    xb: Matrix<f64>,
    y: Vec<f64>,
}

fn problem(seed: u64, n: usize, q: usize, m: usize) -> Problem {
    let mut rng = StreamKey::new(seed).rng();
    let xa = Matrix::from_fn(n, q, |_, _| rng.sample(StandardNormal));
    let xb = Matrix::from_fn(n, m, |_, _| rng.sample(StandardNormal));
    let y = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    Problem { xa, xb, y }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn column_permutation_leaves_l_family(
        seed in any::<u64>(),
        n in 15usize..50,
        q in 0usize..4,
        m in 3usize..40,
    ) {
        let pr = problem(seed, n, q, m);
        let mut idx: Vec<usize> = (0..m).collect();
        idx.shuffle(&mut StreamKey::new(seed ^ 1).rng());
        let rd = residualize(&pr.xa, &pr.xb).unwrap();
        let rdp = residualize(&pr.xa, &pr.xb.select_columns(&idx)).unwrap();
        let oe = order_evidence(&score_stats(&rd, &pr.y).unwrap().w).unwrap();
        let oep = order_evidence(&score_stats(&rdp, &pr.y).unwrap().w).unwrap();
        prop_assert_eq!(&oe.sorted_w, &oep.sorted_w);
        prop_assert_eq!(&oe.prefix_sums, &oep.prefix_sums);

        let grid: Vec<usize> = (1..=m).collect();
        let cfg = BootstrapConfig::with_replications(25);
        let key = StreamKey::new(seed ^ 2);
        let a = wild_bootstrap(&rd, &pr.y, &grid, &cfg, key).unwrap();
        let b = wild_bootstrap(&rdp, &pr.y, &grid, &cfg, key).unwrap();
        prop_assert_eq!(a.p_values, b.p_values);
    }

    #[test]
    fn rescaling_response_leaves_decision(
        seed in any::<u64>(),
        c in prop_oneof![-100.0f64..-0.01, 0.01f64..100.0],
    ) {
        let pr = problem(seed, 40, 2, 45);
        let rd = residualize(&pr.xa, &pr.xb).unwrap();
        let scaled: Vec<f64> = pr.y.iter().map(|v| c * v).collect();
        let cfg = BootstrapConfig::with_replications(40);
        let key = StreamKey::new(seed ^ 3);
        let a = adaptive_test(&rd, &pr.y, &cfg, 0.05, key).unwrap();
        let b = adaptive_test(&rd, &scaled, &cfg, 0.05, key).unwrap();
        prop_assert_eq!(a.reject, b.reject);
        prop_assert!((a.p_value - b.p_value).abs() < 1e-9);
    }

    #[test]
    fn lowering_one_p_value_strengthens_combination(
        ps in prop::collection::vec(1e-6f64..(1.0 - 1e-6), 1..12),
        pick in any::<prop::sample::Index>(),
        shrink in 0.1f64..0.9,
    ) {
        let i = pick.index(ps.len());
        let before = cauchy_combine(&ps).unwrap();
        let mut lowered = ps.clone();
        lowered[i] *= shrink;
        let after = cauchy_combine(&lowered).unwrap();
        prop_assert!(after.t_c > before.t_c);
        prop_assert!(after.p_c < before.p_c);
        prop_assert!(after.p_c > 0.0 && after.p_c < 1.0);
        let wsum: f64 = after.components.iter().map(|c| c.weight).sum();
        prop_assert!((wsum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn joint_cdf_marginalizes(x in -8.0f64..25.0, k in 2usize..=6) {
        let mut xs = vec![1e6; k];
        xs[k - 1] = x;
        let joint = joint_order_cdf(&xs).unwrap();
        prop_assert!((joint - order_stat_cdf(k, x)).abs() < 1e-10);
    }

    #[test]
    fn joint_cdf_is_bounded_by_each_margin(
        mut xs in prop::collection::vec(-6.0f64..20.0, 1..=6),
    ) {
        xs.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let joint = joint_order_cdf(&xs).unwrap();
        prop_assert!((0.0..=1.0).contains(&joint));
        for (j, &x) in xs.iter().enumerate() {
            prop_assert!(joint <= order_stat_cdf(j + 1, x) + 1e-12);
        }
        // raising the last threshold can only raise the probability
        let mut up = xs.clone();
        let last = up.len() - 1;
        up[last] = (up[last] + 0.5).min(if last > 0 { up[last - 1] } else { f64::INFINITY });
        prop_assert!(joint_order_cdf(&up).unwrap() >= joint - 1e-12);
    }

    #[test]
    fn order_stat_cdf_increases_with_rank(s in 1usize..30, x in -20.0f64..40.0) {
        let a = order_stat_cdf(s, x);
        let b = order_stat_cdf(s + 1, x);
        prop_assert!(b >= a);
        prop_assert!((0.0..=1.0).contains(&a));
    }
}
