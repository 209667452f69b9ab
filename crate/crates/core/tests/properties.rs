use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unfold_core::discretize::{product_grid, MetricGraph, ProductGridSpec};
use unfold_core::hyperbolicity::four_point_defect;
use unfold_core::metricspace::{distance_matrix, WeightField};
use unfold_core::sigma::{compute_sigma_field, compute_sigma_field_with_ladder, count_nonmonotone_membership, Ladder, LadderSpec, Refinement};
use unfold_core::whitney::{build_cover, default_xi, smooth_sigma, Normalization};

fn random_graph(seed: u64, nx: usize, ny: usize, spacing: f64, smooth: bool) -> MetricGraph {
    let g = product_grid(ProductGridSpec { nx, ny, spacing, a: 1.0, periodic_y: false }).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (k1, k2, amp) = (rng.gen_range(0.5..3.0), rng.gen_range(0.5..3.0), rng.gen_range(0.5..4.0));
    let a: Vec<f64> = (0..g.vertex_count())
        .map(|v| {
            let (i, j) = ((v % nx) as f64, (v / nx) as f64);
            if smooth {
                0.3 + amp * (1.0 + (k1 * i / nx as f64 * 6.0).sin() * (k2 * j / ny as f64 * 6.0).cos())
            } else {
                rng.gen_range(0.1..5.0)
            }
        })
        .collect();
    g.with_a_values(a).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn power_of_two_rescaling_is_exact(seed in 0u64..1000, k in -3i32..4, alpha in 0.3f64..3.0) {
        let g = random_graph(seed, 9, 7, 0.2, false);
        let lambda = 2f64.powi(k);
        let ladder = Ladder::for_graph(&g, &LadderSpec::default()).unwrap();
        let base = compute_sigma_field_with_ladder(&g, alpha, &ladder, Refinement::None).unwrap();
        let scaled = compute_sigma_field_with_ladder(&g.scaled(lambda), alpha, &ladder.scaled(lambda), Refinement::None).unwrap();
        for v in 0..g.vertex_count() {
            prop_assert_eq!(scaled.b(v), base.b(v) / lambda);
        }
    }

    #[test]
    fn sigma_dominates_curvature(seed in 0u64..1000, alpha in 0.3f64..3.0) {
        let g = random_graph(seed, 8, 8, 0.25, false);
        let f = compute_sigma_field(&g, alpha, &LadderSpec::default()).unwrap();
        let max_a = g.a_values().iter().cloned().fold(0.0, f64::max);
        for v in 0..g.vertex_count() {
            prop_assert!(f.b(v) >= g.a(v) * (1.0 - 1e-12));
            prop_assert!(f.b(v) <= max_a * (1.0 + 1e-12));
        }
    }

    #[test]
    fn superlevel_membership_is_monotone(seed in 0u64..1000, alpha in 0.3f64..3.0, smooth in any::<bool>()) {
        let g = random_graph(seed, 10, 6, 0.15, smooth);
        let ladder = Ladder::for_graph(&g, &LadderSpec::default()).unwrap();
        prop_assert_eq!(count_nonmonotone_membership(&g, alpha, &ladder), 0);
    }

    #[test]
    fn sigma_distance_is_a_metric(seed in 0u64..1000) {
        let g = random_graph(seed, 7, 7, 0.3, false);
        let f = compute_sigma_field(&g, 1.0, &LadderSpec::default()).unwrap();
        let w = WeightField::sigma(&g, &f).unwrap();
        let all: Vec<usize> = (0..g.vertex_count()).collect();
        let d = distance_matrix(&g, &w, &all).unwrap();
        let n = all.len();
        for x in 0..n {
            prop_assert_eq!(d.get(x, x), 0.0);
            for y in 0..n {
                prop_assert!((d.get(x, y) - d.get(y, x)).abs() <= 1e-12 * d.get(x, y).max(1.0));
                if x != y {
                    prop_assert!(d.get(x, y) > 0.0);
                }
                for z in (0..n).step_by(5) {
                    prop_assert!(d.get(x, z) <= d.get(x, y) + d.get(y, z) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn four_point_defect_vanishes_on_a_line(xs in proptest::collection::vec(-10.0f64..10.0, 4)) {
        let dist = |i: usize, j: usize| (xs[i] - xs[j]).abs();
        prop_assert!(four_point_defect(&dist, 0, 1, 2, 3).abs() < 1e-12);
    }

    #[test]
    fn cover_invariants_hold(seed in 0u64..1000, spacing in 1e-4f64..1e-2) {
        let g = random_graph(seed, 14, 14, spacing, true);
        let f = compute_sigma_field(&g, 1.0, &LadderSpec::default()).unwrap();
        let l = f.lipschitz_estimate(&g).max(1e-9);
        let xi = default_xi(l);
        let cover = build_cover(&g, &f, xi).unwrap();
        prop_assert!(cover.checks.covered && cover.checks.separated && cover.checks.families_disjoint);
        prop_assert!(cover.is_valid());
        prop_assert!(cover.multiplicity >= 1);
    }

    #[test]
    fn smoothing_stays_within_harnack_band(seed in 0u64..1000, spacing in 1e-4f64..1e-2) {
        let g = random_graph(seed, 14, 14, spacing, true);
        let f = compute_sigma_field(&g, 1.0, &LadderSpec::default()).unwrap();
        let l = f.lipschitz_estimate(&g).max(1e-9);
        let xi = default_xi(l);
        let cover = build_cover(&g, &f, xi).unwrap();
        let s = smooth_sigma(&g, &f, Some(&cover), Normalization::PartitionOfUnity).unwrap();
        let spread = 4.0 * xi * l;
        for v in 0..g.vertex_count() {
            let (d, ds) = (f.delta(v).to_f64(), s.delta_star[v].to_f64());
            prop_assert!(ds >= d / (1.0 + spread) * (1.0 - 1e-12), "v {} delta {} smoothed {}", v, d, ds);
            prop_assert!(ds <= d / (1.0 - spread) * (1.0 + 1e-12), "v {} delta {} smoothed {}", v, d, ds);
        }
    }
}
