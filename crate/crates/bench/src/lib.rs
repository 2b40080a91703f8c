//! Seeded inputs shared by the benchmarks.

use gale_core::classifier::{predict_proba, train_mlp, TrainConfig};
use gale_core::explainers::{explain_dataset, MethodKind, MethodSpec};
use gale_core::persistence::ValuedGraph;
use gale_core::synthdata::{generate, SynthKind, SynthSpec};
use gale_core::{DiagramPoint, ExplanationMatrix, LensVector, PersistenceDiagram, PointClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random simple graph with `n` vertices and up to `m` edges; values on a
/// coarse grid so ties occur.
pub fn valued_graph(n: usize, m: usize, seed: u64) -> ValuedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n).map(|_| rng.gen_range(0..16) as f64 / 16.0).collect();
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v {
            edges.push((u.min(v), u.max(v)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    ValuedGraph::new(values, edges).expect("valid graph")
}

pub fn diagram(points: usize, seed: u64) -> PersistenceDiagram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = (0..points)
        .map(|_| {
            let a: f64 = rng.gen();
            let b = a + rng.gen_range(1e-3..0.5);
            match PointClass::ALL[rng.gen_range(0..4)] {
                c @ (PointClass::Ord0 | PointClass::Ext0) => DiagramPoint::new(a, b, c),
                c => DiagramPoint::new(b, a, c),
            }
        })
        .collect();
    PersistenceDiagram::from_points(pts).expect("valid diagram")
}

/// lime explanations of a small MLP on toy data, with the model's lens.
pub fn explanations(n: usize, seed: u64) -> (ExplanationMatrix, LensVector) {
    let ds = generate(&SynthSpec::new(SynthKind::ToyIndependent, n, seed)).expect("dataset");
    let model = train_mlp(&ds, &TrainConfig { epochs: 100, seed, ..Default::default() }).expect("model");
    let spec = MethodSpec::new(
        MethodKind::Lime {
            k: ds.d(),
            n_samples: 50,
            kernel_width: None,
        },
        seed,
    );
    let e = explain_dataset(&spec, &model, &ds.x, &ds.feature_names).expect("explanations");
    let lens = predict_proba(&model, &ds.x).expect("lens");
    (e.explanations, lens)
}
