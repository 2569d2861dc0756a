use liso::backfit::{fixed_point_gap, lambda_max, liso_fit, liso_path, objective, AdditiveModel, Dataset, Direction, LisoConfig};
use liso::modelsel::{cross_validate, Plain};
use liso::variants::{adaptive_liso, ReweightSpec};
use proptest::prelude::*;

fn dataset() -> impl Strategy<Value = (Dataset, Vec<Direction>)> {
    (2usize..25, 1usize..4).prop_flat_map(|(n, p)| {
        (
            prop::collection::vec(prop::collection::vec(-3i32..4, p), n),
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(1u8..4, n),
            prop::collection::vec(0u8..3, p),
        )
            .prop_map(|(rows, y, w, dirs)| {
                let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
                let w = w.into_iter().map(f64::from).collect();
                let dirs = dirs
                    .into_iter()
                    .map(|d| match d {
                        0 => Direction::Increasing,
                        1 => Direction::Decreasing,
                        _ => Direction::Unconstrained,
                    })
                    .collect();
                (Dataset::from_rows(&rows, y, Some(w)).unwrap(), dirs)
            })
    })
}

fn weighted_sum(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(a, b)| a * b).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fits_conserve_the_weighted_total((d, dirs) in dataset(), frac in 0.0f64..1.2) {
        let cfg = LisoConfig::default().with_directions(dirs);
        let cfg = cfg.with_lambda(frac * lambda_max(&d, &cfg));
        let m = liso_fit(&d, &cfg).unwrap();
        let f = m.fitted(&d).unwrap();
        prop_assert!((weighted_sum(&f, d.weights()) - weighted_sum(&d.response(), d.weights())).abs() < 1e-9);
    }

    #[test]
    fn loss_descends_and_fits_are_fixed_points((d, dirs) in dataset(), frac in 0.0f64..1.0) {
        let cfg = LisoConfig::default().with_directions(dirs);
        let cfg = cfg.with_lambda(frac * lambda_max(&d, &cfg));
        let m = liso_fit(&d, &cfg).unwrap();
        prop_assert!(m.diagnostics.converged);
        for w in m.diagnostics.loss_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
        prop_assert!(fixed_point_gap(&d, &m, &cfg).unwrap() < 1e-6);
        // the reported final loss is the objective of the returned model
        let obj = objective(&d, &m, &cfg).unwrap();
        prop_assert!((obj - m.diagnostics.final_loss).abs() <= 1e-9 * obj.abs().max(1.0));
    }

    #[test]
    fn components_respect_directions((d, dirs) in dataset(), frac in 0.0f64..1.0) {
        let cfg = LisoConfig::default().with_directions(dirs.clone());
        let cfg = cfg.with_lambda(frac * lambda_max(&d, &cfg));
        let m = liso_fit(&d, &cfg).unwrap();
        for (c, dir) in m.components.iter().zip(&dirs) {
            match dir {
                Direction::Increasing => prop_assert!(c.function.is_non_decreasing()),
                Direction::Decreasing => prop_assert!(c.function.is_non_increasing()),
                Direction::Unconstrained => {}
            }
        }
    }

    #[test]
    fn at_or_above_lambda_max_the_fit_is_zero((d, dirs) in dataset(), extra in 1.0f64..3.0) {
        let cfg = LisoConfig::default().with_directions(dirs);
        let hi = lambda_max(&d, &cfg);
        let m = liso_fit(&d, &cfg.with_lambda(hi * extra)).unwrap();
        prop_assert!(m.is_zero());
        prop_assert!((m.intercept - d.y_mean()).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_predicts_identically((d, dirs) in dataset(), frac in 0.0f64..1.0) {
        let cfg = LisoConfig::default().with_directions(dirs);
        let cfg = cfg.with_lambda(frac * lambda_max(&d, &cfg));
        let m = liso_fit(&d, &cfg).unwrap();
        let back = AdditiveModel::from_json(&m.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.fitted(&d).unwrap(), m.fitted(&d).unwrap());
    }

    #[test]
    fn adaptive_active_set_is_inside_the_first_stage((d, _) in dataset(), f0 in 0.0f64..1.0, f1 in 0.0f64..1.0) {
        let cfg = LisoConfig::default();
        let hi = lambda_max(&d, &cfg);
        let first = liso_fit(&d, &cfg.with_lambda(f0 * hi)).unwrap();
        for spec in [ReweightSpec::adaptive(), ReweightSpec::scad(3.7)] {
            let m = adaptive_liso(&d, f0 * hi, f1 * hi, &spec, &cfg).unwrap();
            let outer = first.active_set();
            prop_assert!(m.active_set().iter().all(|k| outer.contains(k)));
        }
    }
}

#[test]
fn path_matches_cold_fits() {
    let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i % 7) as f64, ((i * 5) % 11) as f64]).collect();
    let y: Vec<f64> = rows.iter().enumerate().map(|(i, r)| r[0] - 0.5 * r[1] + ((i * 3) % 4) as f64 * 0.3).collect();
    let d = Dataset::from_rows(&rows, y, None).unwrap();
    let cfg = LisoConfig::default().with_directions(vec![Direction::Increasing, Direction::Unconstrained]);
    let hi = lambda_max(&d, &cfg);
    let grid: Vec<f64> = [1.0, 0.6, 0.3, 0.1, 0.02].iter().map(|f| f * hi).collect();
    for (l, m) in grid.iter().zip(liso_path(&d, &grid, &cfg).unwrap()) {
        let c = cfg.with_lambda(*l);
        let cold = liso_fit(&d, &c).unwrap();
        let (a, b) = (objective(&d, &m, &c).unwrap(), objective(&d, &cold, &c).unwrap());
        assert!((a - b).abs() < 1e-7 * a.max(1.0), "{a} vs {b}");
    }
}

#[test]
fn cross_validation_ignores_the_thread_count() {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 9) as f64, ((i * 7) % 13) as f64]).collect();
    let y: Vec<f64> = rows.iter().enumerate().map(|(i, r)| r[0] + ((i * 5) % 3) as f64).collect();
    let d = Dataset::from_rows(&rows, y, None).unwrap();
    let fitter = Plain(LisoConfig::default());
    let grid = liso::numeric::log_grid(lambda_max(&d, &LisoConfig::default()), 0.01, 8);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| cross_validate(&d, &grid, 5, &fitter, 11).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one.to_json().unwrap(), run(3).to_json().unwrap());
}
