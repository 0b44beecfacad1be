use bcl_core::dynamics::{RunParams, Trajectory, MONOTONE_SLACK};
use bcl_core::estimators::{beta_cdf, ks_distance, Histogram};
use bcl_core::geometry::{barycentre, diameter, order_by_distance, sum_sq_distances, sum_sq_distances_pairwise};
use bcl_core::rng::seeded;
use bcl_core::spacings::sample_spacings;
use bcl_core::Configuration;
use proptest::prelude::*;

fn config_strategy() -> impl Strategy<Value = Configuration> {
    (1usize..=4, 2usize..=10).prop_flat_map(|(dim, n)| {
        prop::collection::vec(0.0f64..1.0, dim * n).prop_map(move |c| Configuration::new(dim, c).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sandwich(config in config_strategy()) {
        let g = sum_sq_distances(&config);
        let d = diameter(&config);
        let n = config.len() as f64;
        prop_assert!(d * d / 2.0 <= g * (1.0 + 1e-12) + 1e-15);
        prop_assert!(g <= (n - 1.0) * d * d / 2.0 * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn centroid_and_pairwise_forms_agree(config in config_strategy()) {
        let a = sum_sq_distances(&config);
        let b = sum_sq_distances_pairwise(&config);
        prop_assert!((a - b).abs() <= 1e-12 * a.max(b) + 1e-15);
    }

    #[test]
    fn g_translation_and_scaling(config in config_strategy(), shift in -5.0f64..5.0, scale in 0.1f64..10.0) {
        let g = sum_sq_distances(&config);
        let moved: Vec<f64> = config.coords().iter().map(|x| x + shift).collect();
        let moved = Configuration::new(config.dim(), moved).unwrap();
        prop_assert!((sum_sq_distances(&moved) - g).abs() <= 1e-9 * g.max(1e-3));
        let scaled: Vec<f64> = config.coords().iter().map(|x| x * scale).collect();
        let scaled = Configuration::new(config.dim(), scaled).unwrap();
        prop_assert!((sum_sq_distances(&scaled) - scale * scale * g).abs() <= 1e-10 * scale * scale * g.max(1e-3));
    }

    #[test]
    fn lyapunov_never_increases(seed in any::<u64>(), n in 3usize..=8, dim in 1usize..=3) {
        let params = RunParams::new(n, dim);
        let mut traj = Trajectory::new(&params, &bcl_core::dynamics::Initial::IidUniform, seeded(seed)).unwrap();
        for _ in 0..200 {
            let info = traj.step();
            prop_assert!(info.lyapunov_after <= info.lyapunov_before + MONOTONE_SLACK);
        }
    }

    #[test]
    fn ks_ignores_sample_order(mut xs in prop::collection::vec(0.0f64..1.0, 1..200), beta in 0.6f64..4.0, seed in any::<u64>()) {
        let cdf = |x: f64| beta_cdf(x, beta).unwrap();
        let a = ks_distance(&xs, cdf).unwrap();
        use rand::seq::SliceRandom;
        xs.shuffle(&mut seeded(seed));
        prop_assert_eq!(a, ks_distance(&xs, cdf).unwrap());
    }

    #[test]
    fn beta_cdf_reflection(x in 0.0f64..=1.0, beta in 0.5f64..6.0) {
        let s = beta_cdf(x, beta).unwrap() + beta_cdf(1.0 - x, beta).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_merge_matches_single_pass(
        a in prop::collection::vec(-0.2f64..1.2, 0..100),
        b in prop::collection::vec(-0.2f64..1.2, 0..100),
        c in prop::collection::vec(-0.2f64..1.2, 0..100),
        bins in 1usize..50,
    ) {
        let fill = |xs: &[f64]| { let mut h = Histogram::unit(bins); h.extend(xs.iter().copied()); h };
        let (ha, hb, hc) = (fill(&a), fill(&b), fill(&c));
        let mut left = ha.clone();
        left.merge(&hb).unwrap();
        left.merge(&hc).unwrap();
        let mut bc = hb.clone();
        bc.merge(&hc).unwrap();
        let mut right = ha.clone();
        right.merge(&bc).unwrap();
        let all: Vec<f64> = a.iter().chain(&b).chain(&c).copied().collect();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(&left, &fill(&all));
        prop_assert_eq!(left.total(), all.len() as u64);
    }

    #[test]
    fn spacings_are_a_partition(n in 1usize..20, seed in any::<u64>()) {
        let sp = sample_spacings(n, &mut seeded(seed));
        prop_assert_eq!(sp.s.len(), n + 1);
        prop_assert!(sp.s.iter().all(|&x| x >= 0.0));
        prop_assert!((sp.s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn extreme_matches_argmax_scan(config in config_strategy(), seed in any::<u64>()) {
        let mean = barycentre(&config).unwrap();
        let dist = |p: &[f64]| p.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let d: Vec<f64> = config.points().map(dist).collect();
        let best = d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(d.iter().filter(|&&x| x == best).count() == 1);
        let argmax = d.iter().position(|&x| x == best).unwrap();
        let ordered = order_by_distance(&config, &mut seeded(seed)).unwrap();
        prop_assert_eq!(ordered.extreme(), config.point(argmax));
        prop_assert_eq!(ordered.extreme_index(), argmax);
    }

    #[test]
    fn beta_cdf_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, beta in 0.5f64..6.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(beta_cdf(lo, beta).unwrap() <= beta_cdf(hi, beta).unwrap());
    }
}
