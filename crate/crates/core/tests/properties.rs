// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use proptest::prelude::*;
use tvwin::monitor::mad_sigma;
use tvwin::{compute_merge_path, solution_at_lambda, WindowSamples};

fn window_strategy() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..12).prop_flat_map(|m| {
        (
            prop::collection::vec(-5.0f64..5.0, m),
            prop::collection::vec(0.25f64..3.0, m),
        )
    })
}

fn times(gaps: &[f64]) -> Vec<f64> {
    gaps.iter()
        .scan(0.0, |acc, g| {
            *acc += g;
            Some(*acc)
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn path_ignores_offsets((y, gaps) in window_strategy(), c in -100.0f64..100.0) {
        let t = times(&gaps);
        let a = compute_merge_path(&WindowSamples::new(y.clone(), t.clone()).unwrap()).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let b = compute_merge_path(&WindowSamples::new(shifted, t).unwrap()).unwrap();
        for (x, z) in a.lambdas().iter().zip(b.lambdas()) {
            prop_assert!(close(*x, *z, 1e-8), "{x} vs {z}");
        }
    }

    #[test]
    fn path_scales_with_amplitude_and_time(
        (y, gaps) in window_strategy(),
        a in 0.1f64..10.0,
        s in 0.1f64..10.0,
    ) {
        let t = times(&gaps);
        let base = compute_merge_path(&WindowSamples::new(y.clone(), t.clone()).unwrap()).unwrap();
        let y2: Vec<f64> = y.iter().map(|v| v * a).collect();
        let t2: Vec<f64> = t.iter().map(|v| v * s).collect();
        let scaled = compute_merge_path(&WindowSamples::new(y2, t2).unwrap()).unwrap();
        for (x, z) in base.lambdas().iter().zip(scaled.lambdas()) {
            prop_assert!(close(x * a * s, *z, 1e-8), "{x} vs {z}");
        }
    }

    #[test]
    fn segments_shrink_as_lambda_grows((y, gaps) in window_strategy()) {
        let w = WindowSamples::new(y, times(&gaps)).unwrap();
        let path = compute_merge_path(&w).unwrap();
        let mut grid: Vec<f64> = path.lambdas().to_vec();
        grid.extend([0.0, path.max_lambda() * 2.0 + 1.0]);
        grid.sort_by(f64::total_cmp);
        let mut last = usize::MAX;
        for lambda in grid {
            let k = solution_at_lambda(&w, &path, lambda).unwrap().num_segments();
            prop_assert!(k <= last);
            last = k;
        }
        prop_assert_eq!(last, 1);
    }

    #[test]
    fn restoration_is_optimal((y, gaps) in window_strategy(), lambda in 0.0f64..8.0) {
        let w = WindowSamples::new(y.clone(), times(&gaps)).unwrap();
        let path = compute_merge_path(&w).unwrap();
        let u = solution_at_lambda(&w, &path, lambda).unwrap().to_signal();
        let tau = w.tau().to_vec();
        let oracle = common::convex_minimizer(&y, &tau, lambda, 1e-10);
        let ours = common::functional(&y, &tau, &u, lambda);
        prop_assert!(ours <= oracle.dual + 1e-8 * (1.0 + ours.abs()), "{ours} vs {}", oracle.dual);
    }

    #[test]
    fn mad_is_translation_invariant_and_scale_equivariant(
        y in prop::collection::vec(-10.0f64..10.0, 2..40),
        c in -50.0f64..50.0,
        a in -5.0f64..5.0,
    ) {
        let base = mad_sigma(&y).unwrap();
        let moved: Vec<f64> = y.iter().map(|v| a * v + c).collect();
        prop_assert!(close(mad_sigma(&moved).unwrap(), a.abs() * base, 1e-9));
        prop_assert!(base >= 0.0);
    }
}
