use fubini_sde::girsanov::{density_process, ThetaProcess};
use fubini_sde::graphon::{build_quadrature_kernel, operator_norm_check, Graphon};
use fubini_sde::grid::{Grids, IndexGrid, TimeGrid};
use fubini_sde::noise::generate_epi_brownian;
use fubini_sde::stattest::{
    kish_effective_size, ks_test_normal, ks_test_normal_weighted, weighted_l2_norm, WeightedSample,
};
use proptest::prelude::*;

fn symmetric_matrix() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1usize..6).prop_flat_map(|n| {
        prop::collection::vec(0.0f64..=1.0, n * n).prop_map(move |v| {
            (0..n)
                .map(|r| (0..n).map(|c| v[r.min(c) * n + r.max(c)]).collect())
                .collect()
        })
    })
}

fn graphon() -> impl Strategy<Value = Graphon> {
    prop_oneof![
        (0.0f64..=1.0).prop_map(|p| Graphon::Constant { p }),
        Just(Graphon::Product),
        Just(Graphon::Min),
        symmetric_matrix().prop_map(|matrix| Graphon::Piecewise { matrix }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grids_are_well_formed(horizon in 0.01f64..10.0, n_steps in 1usize..500, n_index in 1usize..500) {
        let time = TimeGrid::new(horizon, n_steps).unwrap();
        prop_assert!(time.dt() > 0.0);
        prop_assert_eq!(time.node(0), 0.0);
        prop_assert_eq!(time.node(n_steps), horizon);
        let nodes = time.nodes();
        prop_assert!(nodes.windows(2).all(|w| w[0] < w[1]));

        let index = IndexGrid::new(n_index).unwrap();
        let u = index.nodes();
        prop_assert!(u.iter().all(|&x| x > 0.0 && x < 1.0));
        prop_assert!(u.windows(2).all(|w| w[0] < w[1]));
        prop_assert!((index.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_is_symmetric_bounded_and_contractive(
        g in graphon(),
        n in 1usize..40,
        eta in prop::collection::vec(-10.0f64..10.0, 40),
        zeta in prop::collection::vec(-10.0f64..10.0, 40),
        (a, b) in (-3.0f64..3.0, -3.0f64..3.0),
    ) {
        let grid = IndexGrid::new(n).unwrap();
        let kernel = build_quadrature_kernel(&g, &grid).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(kernel.get(i, j).to_bits(), kernel.get(j, i).to_bits());
                prop_assert!((0.0..=1.0).contains(&kernel.get(i, j)));
            }
        }
        let (eta, zeta) = (&eta[..n], &zeta[..n]);
        let w = grid.weights();
        let out = kernel.apply(eta).unwrap();
        prop_assert!(weighted_l2_norm(&out, &w).unwrap() <= weighted_l2_norm(eta, &w).unwrap() * (1.0 + 1e-12) + 1e-300);

        let combo: Vec<f64> = eta.iter().zip(zeta).map(|(x, y)| a * x + b * y).collect();
        let lhs = kernel.apply(&combo).unwrap();
        let oz = kernel.apply(zeta).unwrap();
        let scale = out.iter().chain(&oz).fold(1.0f64, |m, v| m.max(v.abs())) * (a.abs() + b.abs()).max(1.0);
        for ((l, x), y) in lhs.iter().zip(&out).zip(&oz) {
            prop_assert!((l - (a * x + b * y)).abs() <= 1e-12 * scale);
        }
        prop_assert!(operator_norm_check(&kernel, 8, 3).unwrap().max_ratio <= 1.0 + 1e-12);
    }

    #[test]
    fn noise_is_a_pure_function_of_seed_and_coordinates(
        seed in any::<u64>(),
        coords in prop::collection::vec((0usize..6, 0usize..9, 0usize..7), 1..20),
    ) {
        let grids = Grids::new(1.0, 7, 6).unwrap();
        let a = generate_epi_brownian(grids, 9, seed).unwrap();
        let b = generate_epi_brownian(grids, 9, seed).unwrap();
        // Query the second ensemble in reverse order.
        let forward: Vec<f64> = coords.iter().map(|&(i, m, k)| a.increment(i, m, k)).collect();
        let backward: Vec<f64> = coords.iter().rev().map(|&(i, m, k)| b.increment(i, m, k)).collect();
        prop_assert!(forward.iter().zip(backward.iter().rev()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let dense = a.dense_increments();
        for &(i, m, k) in &coords {
            prop_assert_eq!(dense[(i * 9 + m) * 7 + k].to_bits(), a.increment(i, m, k).to_bits());
        }
        let paths = a.brownian_paths();
        prop_assert!(paths.at(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn ks_reports_are_well_formed(
        sample in prop::collection::vec(-5.0f64..5.0, 10..200),
        raw_weights in prop::collection::vec(0.01f64..10.0, 200),
        shift in -5.0f64..5.0,
        scale in 0.1f64..10.0,
    ) {
        let plain = ks_test_normal(&sample, 0.3, 1.7).unwrap();
        prop_assert!((0.0..=1.0).contains(&plain.statistic));
        prop_assert!((0.0..=1.0).contains(&plain.p_value));

        let uniform = ks_test_normal_weighted(&WeightedSample::unweighted(sample.clone()).unwrap(), 0.3, 1.7).unwrap();
        prop_assert_eq!(plain, uniform);

        let moved: Vec<f64> = sample.iter().map(|x| shift + scale * x).collect();
        let affine = ks_test_normal(&moved, shift + scale * 0.3, scale * scale * 1.7).unwrap();
        prop_assert!((affine.statistic - plain.statistic).abs() <= 1e-12);

        let weights = raw_weights[..sample.len()].to_vec();
        let ws = WeightedSample::new(sample.clone(), weights.clone()).unwrap();
        let norm = ws.normalized_weights();
        prop_assert!(norm.iter().all(|&w| w > 0.0));
        prop_assert!((norm.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let n_eff = kish_effective_size(&weights);
        prop_assert!(n_eff <= sample.len() as f64 * (1.0 + 1e-12) && n_eff >= 1.0 - 1e-12);
        if n_eff >= 8.0 {
            let weighted = ks_test_normal_weighted(&ws, 0.3, 1.7).unwrap();
            prop_assert!((0.0..=1.0).contains(&weighted.statistic));
            prop_assert!((0.0..=1.0).contains(&weighted.p_value));
            prop_assert!(weighted.n_effective <= sample.len() as f64 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn constant_tilt_log_density_telescopes(c in -2.0f64..2.0, seed in any::<u64>()) {
        let grids = Grids::new(1.5, 24, 4).unwrap();
        let noise = generate_epi_brownian(grids, 30, seed).unwrap();
        let density = density_process(&noise, &ThetaProcess::Constant { c }).unwrap();
        for k in [1, 11, 24] {
            let t = grids.time.node(k);
            let levels = noise.levels_at(k).unwrap();
            for (log_e, b) in density.log_weights_at(k).iter().zip(&levels) {
                prop_assert!((log_e - (c * b - 0.5 * c * c * t)).abs() <= 1e-12);
            }
            prop_assert!(density.normalized_weights_at(k).iter().all(|&w| w > 0.0));
        }
    }
}
