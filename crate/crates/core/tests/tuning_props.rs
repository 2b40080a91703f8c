use gale_core::classifier::{train_mlp, TrainConfig};
use gale_core::explainers::{explain_dataset, MethodKind, MethodSpec};
use gale_core::synthdata::{generate, SynthKind, SynthSpec};
use gale_core::tuning::{bootstrap_stats, grid_search, resample_indices, upper_quantile};
use gale_core::{ExplanationMatrix, LensVector, MapperParams, Matrix, ParamGrid};
use proptest::prelude::*;

fn small_grid() -> ParamGrid {
    ParamGrid {
        resolutions: vec![4, 8],
        gains: vec![0.2, 0.3],
        threshold_fractions: vec![0.2, 0.5],
    }
}

fn noisy_table(n: usize, seed: u64) -> (ExplanationMatrix, LensVector) {
    let ds = generate(&SynthSpec::new(SynthKind::Circles, n, seed)).unwrap();
    let lens: Vec<f64> = ds.x.row_iter().map(|r| (r[0].tanh() + 1.0) / 2.0).collect();
    (
        ExplanationMatrix::with_default_names(ds.x.clone()).unwrap(),
        LensVector::new(lens).unwrap(),
    )
}

#[test]
fn grid_search_is_deterministic_and_ordered() {
    let (e, lens) = noisy_table(80, 1);
    let a = grid_search(&e, &lens, &small_grid(), 12, 0.1, 7).unwrap();
    let b = grid_search(&e, &lens, &small_grid(), 12, 0.1, 7).unwrap();
    assert_eq!(a, b);
    let order: Vec<MapperParams> = a.rows.iter().map(|r| r.params).collect();
    assert_eq!(order, small_grid().combinations().unwrap());
    assert!(a.rows.iter().any(|r| r.params == a.selected));
}

#[test]
fn thread_count_does_not_change_results() {
    let (e, lens) = noisy_table(60, 2);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| grid_search(&e, &lens, &small_grid(), 10, 0.05, 3).unwrap())
    };
    assert_eq!(run(1), run(3));
}

#[test]
fn quantile_is_monotone_in_alpha() {
    let (e, lens) = noisy_table(60, 3);
    let p = MapperParams::new(6, 0.3, 0.3).unwrap();
    let stats = bootstrap_stats(&e, &lens, &p, 40, 0.05, 11).unwrap();
    let mut prev = f64::INFINITY;
    for alpha in [0.01, 0.05, 0.1, 0.25, 0.5, 0.9] {
        let q = upper_quantile(&stats.distances, alpha);
        assert!(q <= prev);
        prev = q;
    }
    assert_eq!(stats.b_alpha, upper_quantile(&stats.distances, 0.05));
}

#[test]
fn identical_rows_never_move() {
    let e = ExplanationMatrix::with_default_names(Matrix::from_vec(30, 2, vec![0.5; 60]).unwrap()).unwrap();
    let lens = LensVector::new((0..30).map(|i| i as f64 / 29.0).collect()).unwrap();
    let s = bootstrap_stats(&e, &lens, &MapperParams::new(5, 0.3, 0.3).unwrap(), 20, 0.05, 0).unwrap();
    assert!(s.distances.iter().all(|d| d.is_finite()));
    let constant = LensVector::new(vec![0.3; 30]).unwrap();
    let s = bootstrap_stats(&e, &constant, &MapperParams::new(5, 0.3, 0.3).unwrap(), 20, 0.05, 0).unwrap();
    assert_eq!(s.b_alpha, 0.0);
}

proptest! {
    #[test]
    fn resampling_keeps_rows_paired(n in 2usize..200, seed in any::<u64>(), it in 0usize..100) {
        let lens: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let idx = resample_indices(n, seed, it);
        prop_assert_eq!(idx.len(), n);
        let resampled: Vec<f64> = idx.iter().map(|&i| lens[i]).collect();
        for (k, &i) in idx.iter().enumerate() {
            prop_assert!(i < n);
            prop_assert_eq!(resampled[k], lens[i]);
        }
        prop_assert_eq!(resample_indices(n, seed, it), idx);
    }
}

#[test]
fn tuned_circles_have_fewer_components_than_fixed() {
    let ds = generate(&SynthSpec::new(SynthKind::Circles, 200, 0)).unwrap();
    let model = train_mlp(&ds, &TrainConfig::default()).unwrap();
    let spec = MethodSpec::new(
        MethodKind::Lime {
            k: 2,
            n_samples: 50,
            kernel_width: None,
        },
        0,
    );
    let ex = explain_dataset(&spec, &model, &ds.x, &ds.feature_names).unwrap();
    let grid = ParamGrid {
        resolutions: vec![5, 10, 15],
        gains: vec![0.2, 0.3, 0.4],
        threshold_fractions: vec![0.1, 0.3, 0.5],
    };
    let tuned = grid_search(&ex.explanations, &ex.lens, &grid, 20, 0.05, 1).unwrap();
    let row = |p: MapperParams| tuned.rows.iter().find(|r| r.params == p).unwrap().stats.mean_components();
    let fixed = MapperParams::new(15, 0.3, 0.3).unwrap();
    assert!(row(fixed) > row(tuned.selected), "{} vs {}", row(fixed), row(tuned.selected));
}
