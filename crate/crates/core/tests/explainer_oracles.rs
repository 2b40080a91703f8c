use gale_core::classifier::{train_mlp, Classifier, LogisticModel, TrainConfig};
use gale_core::explainers::{
    explain_dataset, integrated_gradients, kernel_shap_like, lime_like, make_baseline, BaselineKind, FeatureStats,
    LimeParams, MethodKind, MethodSpec, Target,
};
use gale_core::synthdata::{generate, SynthKind, SynthSpec};
use gale_core::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normal_rows(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Matrix {
    let data = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    Matrix::from_vec(n, d, data).unwrap()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn worst_completeness_gap(kind: SynthKind, baseline: BaselineKind, steps: usize) -> f64 {
    let ds = generate(&SynthSpec::new(kind, 200, 5)).unwrap();
    let model = train_mlp(&ds, &TrainConfig { seed: 5, ..Default::default() }).unwrap();
    (0..50)
        .map(|i| {
            let x = ds.x.row(i);
            let b = make_baseline(&baseline, &ds.x, x, i as u64).unwrap();
            let a = integrated_gradients(&model, x, &b, steps, Target::Probability).unwrap();
            (a.iter().sum::<f64>() - (model.proba(x) - model.proba(&b))).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn ig_completeness_on_trained_mlp() {
    for baseline in [BaselineKind::Zero, BaselineKind::Gaussian { scale: 1.0 }] {
        let gap = worst_completeness_gap(SynthKind::ToyIndependent, baseline, 256);
        assert!(gap <= 1e-3, "{baseline}: {gap}");
    }
}

#[test]
fn ig_completeness_gap_shrinks_with_steps() {
    // rectifier kinks make the integrand discontinuous, so convergence is
    // only first order on sharp models
    let coarse = worst_completeness_gap(SynthKind::ZeroLabel, BaselineKind::Zero, 64);
    let fine = worst_completeness_gap(SynthKind::ZeroLabel, BaselineKind::Zero, 1024);
    assert!(fine < coarse / 4.0, "{coarse} -> {fine}");
}

#[test]
fn ig_exact_on_linear_score() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..50 {
        let w: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let m = LogisticModel::new(w, rng.gen_range(-1.0..1.0));
        let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..5).map(|_| rng.gen_range(-2.0..2.0)).collect();
        for steps in [1, 3, 64] {
            let a = integrated_gradients(&m, &x, &b, steps, Target::Logit).unwrap();
            assert!((a.iter().sum::<f64>() - (m.logit(&x) - m.logit(&b))).abs() <= 1e-9);
        }
    }
}

#[test]
fn shap_recovers_linear_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    // d=4 enumerates all coalitions; d=8 with 64 coalitions samples them
    for (d, coalitions) in [(4, 64), (8, 64)] {
        for _ in 0..20 {
            let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let m = LogisticModel::new(w.clone(), 0.4);
            let bg = normal_rows(&mut rng, 30, d);
            let (mean, _) = bg.column_stats();
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let phi = kernel_shap_like(&m, &x, &bg, coalitions, rng.gen(), Target::Logit).unwrap();
            for j in 0..d {
                let expect = w[j] * (x[j] - mean[j]);
                assert!((phi.values[j] - expect).abs() <= 0.1 * expect.abs() + 1e-9, "{j}: {} vs {expect}", phi.values[j]);
            }
        }
    }
}

#[test]
fn shap_efficiency_on_mlp() {
    let ds = generate(&SynthSpec::new(SynthKind::ToyInteraction, 80, 2)).unwrap();
    let model = train_mlp(&ds, &TrainConfig { epochs: 100, seed: 2, ..Default::default() }).unwrap();
    let bg = ds.x.select_rows(&[0, 5, 9, 30]);
    let f_bg = bg.row_iter().map(|r| model.proba(r)).sum::<f64>() / 4.0;
    for i in 0..20 {
        let x = ds.x.row(i);
        let phi = kernel_shap_like(&model, x, &bg, 20, i as u64, Target::Probability).unwrap();
        assert!((phi.values.iter().sum::<f64>() - (model.proba(x) - f_bg)).abs() <= 1e-6);
    }
}

#[test]
fn lime_follows_the_logistic_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let d = 5;
    let wide = FeatureStats {
        mean: vec![0.0; d],
        std: vec![1.0; d],
        min: vec![-3.0; d],
        max: vec![3.0; d],
    };
    let narrow = FeatureStats { std: vec![0.05; d], ..wide.clone() };
    for t in 0..20 {
        let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let m = LogisticModel::new(w.clone(), rng.gen_range(-0.5..0.5));
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let grad = m.input_gradient(&x);
        let e = lime_like(&m, &x, &wide, &LimeParams::new(d, 500, t)).unwrap();
        assert!(cosine(&e.values, &grad) >= 0.99, "cosine {}", cosine(&e.values, &grad));
        let e = lime_like(&m, &x, &narrow, &LimeParams::new(d, 500, t)).unwrap();
        for j in 0..d {
            assert!((e.values[j] - grad[j]).abs() <= 0.1 * grad[j].abs() + 1e-9, "{j}: {} vs {}", e.values[j], grad[j]);
        }
    }
}

#[test]
fn explanations_do_not_depend_on_thread_count() {
    let ds = generate(&SynthSpec::new(SynthKind::ToyIndependent, 60, 1)).unwrap();
    let model = train_mlp(&ds, &TrainConfig { epochs: 50, seed: 1, ..Default::default() }).unwrap();
    let spec = MethodSpec::new(
        MethodKind::Lime {
            k: 3,
            n_samples: 50,
            kernel_width: None,
        },
        9,
    );
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| explain_dataset(&spec, &model, &ds.x, &ds.feature_names).unwrap())
    };
    assert_eq!(run(1).explanations, run(4).explanations);
}

#[test]
fn zero_baseline_silences_exact_zero_features() {
    let ds = generate(&SynthSpec::zero_label(100, 0.2, 3)).unwrap();
    let model = train_mlp(&ds, &TrainConfig { epochs: 100, seed: 3, ..Default::default() }).unwrap();
    let spec = MethodSpec::new(
        MethodKind::IntegratedGradients {
            baseline: BaselineKind::Zero,
            steps: 16,
        },
        0,
    );
    let zero = explain_dataset(&spec, &model, &ds.x, &ds.feature_names).unwrap();
    let spec = MethodSpec::new(
        MethodKind::IntegratedGradients {
            baseline: BaselineKind::Gaussian { scale: 1.0 },
            steps: 16,
        },
        0,
    );
    let gauss = explain_dataset(&spec, &model, &ds.x, &ds.feature_names).unwrap();
    assert_ne!(zero.explanations, gauss.explanations);
    for i in 0..ds.n() {
        for j in 0..ds.d() {
            if ds.x.get(i, j) == 0.0 {
                assert_eq!(zero.explanations.row(i)[j], 0.0);
            }
        }
    }
}
