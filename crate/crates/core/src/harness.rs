//! End-to-end experiment recipes at desk scale.
//!
//! Each recipe returns a typed outcome plus an [`ExperimentReport`]. When an
//! output directory is given, artifacts are written under it as
//! `report.json`, `matrices/*.csv`, `graphs/*.json` and `diagrams/*.json`,
//! then re-loaded once as an audit. Wall-clock time is kept out of the
//! written report so the directory is byte-reproducible.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::classifier::{train_mlp, Classifier, TrainConfig};
use crate::dataio::{self, ExplanationMatrix, GraphFormat, LabeledDataset, LensVector};
use crate::diagdist::{mean_matrices, pairwise_matrix, row_sums, DistanceMatrix};
use crate::error::{GaleError, Result};
use crate::explainers::{explain_dataset, Background, BaselineKind, MethodKind, MethodSpec};
use crate::mapper::{MapperGraph, MapperParams};
use crate::persistence::PersistenceDiagram;
use crate::rng::derive_seed;
use crate::signature::signature;
use crate::synthdata::{generate, SynthKind, SynthSpec};
use crate::tuning::{grid_search_with, ParamGrid, SelectionRule};

/// Parameters shared by all recipes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessConfig {
    pub n: usize,
    pub grid: ParamGrid,
    pub bootstrap: usize,
    pub alpha: f64,
    pub rule: SelectionRule,
    pub train: TrainConfig,
    pub lime_samples: usize,
    pub shap_background: usize,
    pub shap_coalitions: usize,
    pub ig_steps: usize,
    /// Skip tuning and use these parameters for every table.
    pub fixed_params: Option<MapperParams>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            n: 200,
            grid: ParamGrid {
                resolutions: vec![5, 10, 15],
                gains: vec![0.2, 0.3, 0.4],
                threshold_fractions: vec![0.1, 0.3, 0.5],
            },
            bootstrap: 20,
            alpha: 0.05,
            rule: SelectionRule::Lexicographic,
            train: TrainConfig::default(),
            lime_samples: 50,
            shap_background: 20,
            shap_coalitions: 64,
            ig_steps: 32,
            fixed_params: None,
        }
    }
}

/// Mapper parameters used as the untuned reference regime.
pub fn fixed_params() -> MapperParams {
    MapperParams {
        resolution: 15,
        gain: 0.3,
        threshold_fraction: 0.3,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub kind: ArtifactKind,
    /// Relative to the experiment directory.
    pub path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Graph,
    Diagram,
    Matrix,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub seed: u64,
    pub inputs: Value,
    pub artifacts: Vec<ArtifactRef>,
    pub summary: Value,
    pub skipped: Vec<String>,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

/// Collects artifacts in memory and mirrors them to disk when rooted.
struct Artifacts {
    root: Option<PathBuf>,
    refs: Vec<ArtifactRef>,
}

fn file_stem(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

impl Artifacts {
    fn new(root: Option<&Path>) -> Self {
        Artifacts {
            root: root.map(Path::to_path_buf),
            refs: Vec::new(),
        }
    }

    fn put(&mut self, kind: ArtifactKind, dir: &str, name: &str, ext: &str, body: impl FnOnce() -> String) -> Result<()> {
        let rel = format!("{dir}/{}.{ext}", file_stem(name));
        if let Some(root) = &self.root {
            dataio::write_string(&root.join(&rel), &body())?;
        }
        self.refs.push(ArtifactRef { kind, path: rel });
        Ok(())
    }

    fn graph(&mut self, name: &str, g: &MapperGraph) -> Result<()> {
        self.put(ArtifactKind::Graph, "graphs", name, "json", || dataio::graph_to_json(g))
    }

    fn diagram(&mut self, name: &str, d: &PersistenceDiagram) -> Result<()> {
        self.put(ArtifactKind::Diagram, "diagrams", name, "json", || dataio::diagram_to_json(d))
    }

    fn matrix(&mut self, name: &str, m: &DistanceMatrix) -> Result<()> {
        self.put(ArtifactKind::Matrix, "matrices", name, "csv", || dataio::distance_matrix_to_csv(m))
    }

    fn finish(self, mut report: ExperimentReport, started: Instant) -> Result<ExperimentReport> {
        report.artifacts = self.refs;
        report.wall_clock_seconds = started.elapsed().as_secs_f64();
        if let Some(root) = &self.root {
            dataio::save_json(&report, &root.join("report.json"))?;
            audit_artifacts(root, &report)?;
        }
        Ok(report)
    }
}

/// Re-load every artifact a report references.
pub fn audit_artifacts(root: &Path, report: &ExperimentReport) -> Result<()> {
    for a in &report.artifacts {
        let path = root.join(&a.path);
        match a.kind {
            ArtifactKind::Graph => {
                dataio::load_graph(&path)?;
            }
            ArtifactKind::Diagram => {
                dataio::load_diagram(&path)?;
            }
            ArtifactKind::Matrix => {
                dataio::load_distance_matrix(&path)?;
            }
        }
    }
    Ok(())
}

/// Tuned signature of one explanation table.
#[derive(Debug, Clone, PartialEq)]
pub struct TunedSignature {
    pub label: String,
    pub params: MapperParams,
    pub components: usize,
    pub graph: MapperGraph,
    pub diagram: PersistenceDiagram,
}

fn tuned_signature(
    label: &str,
    e: &ExplanationMatrix,
    lens: &LensVector,
    cfg: &HarnessConfig,
    seed: u64,
) -> Result<TunedSignature> {
    if let Some(p) = &cfg.fixed_params {
        return fixed_signature(label, e, lens, p);
    }
    let tuned = grid_search_with(e, lens, &cfg.grid, cfg.bootstrap, cfg.alpha, seed, cfg.rule)?;
    fixed_signature(label, e, lens, &tuned.selected)
}

fn fixed_signature(label: &str, e: &ExplanationMatrix, lens: &LensVector, p: &MapperParams) -> Result<TunedSignature> {
    let s = signature(e, lens, p)?;
    Ok(TunedSignature {
        label: label.to_string(),
        params: *p,
        components: s.components,
        graph: s.graph,
        diagram: s.diagram,
    })
}

fn matrix_of(sigs: &[TunedSignature]) -> Result<DistanceMatrix> {
    let pairs: Vec<(String, PersistenceDiagram)> = sigs.iter().map(|s| (s.label.clone(), s.diagram.clone())).collect();
    pairwise_matrix(&pairs)
}

fn train(ds: &LabeledDataset, cfg: &HarnessConfig, seed: u64) -> Result<crate::classifier::MlpModel> {
    train_mlp(ds, &TrainConfig { seed, ..cfg.train.clone() })
}

fn row_means(m: &DistanceMatrix) -> Vec<f64> {
    (0..m.len()).map(|i| m.row_mean_off_diagonal(i)).collect()
}

// ---------------------------------------------------------------------------
// baselines

/// Baseline configurations of the baseline comparison, in matrix order.
pub fn comparison_baselines() -> Vec<BaselineKind> {
    vec![
        BaselineKind::Zero,
        BaselineKind::MaxDistance,
        BaselineKind::Gaussian { scale: 1.0 },
        BaselineKind::Uniform,
        BaselineKind::Gaussian { scale: 0.5 },
    ]
}

/// Method x baseline grid; method outermost.
pub fn comparison_methods(cfg: &HarnessConfig) -> Vec<(String, MethodKind)> {
    let mut out = Vec::new();
    for m in ["ig", "gxi", "shap"] {
        for b in comparison_baselines() {
            let kind = match m {
                "ig" => MethodKind::IntegratedGradients {
                    baseline: b,
                    steps: cfg.ig_steps,
                },
                "gxi" => MethodKind::GradientTimesInput { baseline: b },
                _ => MethodKind::KernelShap {
                    background: Background::Baseline { baseline: b },
                    n_coalitions: cfg.shap_coalitions,
                },
            };
            out.push((format!("{m}/{}", b.label()), kind));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineOutcome {
    pub labels: Vec<String>,
    pub per_dataset: Vec<DistanceMatrix>,
    pub mean: DistanceMatrix,
    pub row_mean_off_diagonal: Vec<f64>,
    pub report: ExperimentReport,
}

impl BaselineOutcome {
    /// Smallest zero-baseline row mean minus the largest other row mean.
    pub fn zero_margin(&self) -> f64 {
        let (mut zero_min, mut other_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for (l, v) in self.labels.iter().zip(&self.row_mean_off_diagonal) {
            if l.ends_with("/zero") {
                zero_min = zero_min.min(*v);
            } else {
                other_max = other_max.max(*v);
            }
        }
        zero_min - other_max
    }
}

/// Zero rate of dataset `k` of `count`: evenly spaced over [0.05, 0.2].
pub fn zero_rate_for(k: usize, count: usize) -> f64 {
    if count < 2 {
        return 0.1;
    }
    0.05 + 0.15 * k as f64 / (count - 1) as f64
}

/// Zero-label data, one MLP per dataset, 15 explanation tables each, tuned
/// signatures and their pairwise matrix; matrices are averaged over datasets.
pub fn run_baseline_comparison(
    n_datasets: usize,
    seed: u64,
    cfg: &HarnessConfig,
    out: Option<&Path>,
) -> Result<BaselineOutcome> {
    if n_datasets < 1 {
        return Err(GaleError::Config("at least one dataset required".into()));
    }
    let started = Instant::now();
    let mut art = Artifacts::new(out);
    let methods = comparison_methods(cfg);
    let labels: Vec<String> = methods.iter().map(|m| m.0.clone()).collect();
    let mut per_dataset = Vec::new();
    let mut skipped = Vec::new();
    for k in 0..n_datasets {
        let ds_seed = derive_seed(seed, &[k as u64]);
        let ds = generate(&SynthSpec::zero_label(cfg.n, zero_rate_for(k, n_datasets), ds_seed))?;
        let model = match train(&ds, cfg, ds_seed) {
            Ok(m) => m,
            Err(e @ GaleError::Divergence { .. }) => {
                skipped.push(format!("dataset {k}: {e}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut sigs = Vec::new();
        for (i, (label, kind)) in methods.iter().enumerate() {
            let spec = MethodSpec::new(kind.clone(), derive_seed(ds_seed, &[1, i as u64]));
            let ex = explain_dataset(&spec, &model, &ds.x, &ds.feature_names)?;
            let sig = tuned_signature(label, &ex.explanations, &ex.lens, cfg, derive_seed(ds_seed, &[2, i as u64]))?;
            art.graph(&format!("d{k}_{label}"), &sig.graph)?;
            art.diagram(&format!("d{k}_{label}"), &sig.diagram)?;
            sigs.push(sig);
        }
        let m = matrix_of(&sigs)?;
        art.matrix(&format!("dataset_{k}"), &m)?;
        per_dataset.push(m);
    }
    if per_dataset.is_empty() {
        return Err(GaleError::Data("every dataset was skipped".into()));
    }
    let mean = mean_matrices(&per_dataset)?;
    art.matrix("mean", &mean)?;
    let rm = row_means(&mean);
    let report = ExperimentReport {
        experiment: "baselines".into(),
        seed,
        inputs: json!({ "n_datasets": n_datasets, "data": "zero-label", "config": cfg }),
        artifacts: Vec::new(),
        summary: json!({
            "labels": labels,
            "row_mean_off_diagonal": rm,
        }),
        skipped,
        wall_clock_seconds: 0.0,
    };
    let report = art.finish(report, started)?;
    let mut outcome = BaselineOutcome {
        labels,
        per_dataset,
        mean,
        row_mean_off_diagonal: rm,
        report,
    };
    outcome.report.summary["zero_margin"] = json!(outcome.zero_margin());
    if let Some(root) = out {
        dataio::save_json(&outcome.report, &root.join("report.json"))?;
    }
    Ok(outcome)
}

// ---------------------------------------------------------------------------
// consensus

/// A dataset for the consensus recipe plus any externally produced
/// explanation tables (row-aligned with the dataset).
#[derive(Debug, Clone)]
pub struct ConsensusInput {
    pub name: String,
    pub dataset: LabeledDataset,
    pub external: Vec<(String, ExplanationMatrix)>,
}

impl ConsensusInput {
    pub fn synthetic(kind: SynthKind, n: usize, seed: u64) -> Result<Self> {
        Ok(ConsensusInput {
            name: kind.name().to_string(),
            dataset: generate(&SynthSpec::new(kind, n, seed))?,
            external: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusRow {
    pub dataset: String,
    pub matrix: DistanceMatrix,
}

impl ConsensusRow {
    pub fn distance(&self, a: &str, b: &str) -> Option<f64> {
        let ia = self.matrix.labels().iter().position(|l| l == a)?;
        let ib = self.matrix.labels().iter().position(|l| l == b)?;
        Some(self.matrix.get(ia, ib))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsensusOutcome {
    pub rows: Vec<ConsensusRow>,
    pub report: ExperimentReport,
}

/// lime_like and kernel_shap_like tables (plus external ones) per dataset,
/// tuned signatures, pairwise bottleneck distances.
pub fn run_method_consensus(
    inputs: &[ConsensusInput],
    seed: u64,
    cfg: &HarnessConfig,
    out: Option<&Path>,
) -> Result<ConsensusOutcome> {
    let started = Instant::now();
    let mut art = Artifacts::new(out);
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for (k, input) in inputs.iter().enumerate() {
        let ds = &input.dataset;
        ds.require_both_classes()?;
        let ds_seed = derive_seed(seed, &[k as u64]);
        let model = match train(ds, cfg, ds_seed) {
            Ok(m) => m,
            Err(e @ GaleError::Divergence { .. }) => {
                skipped.push(format!("{}: {e}", input.name));
                continue;
            }
            Err(e) => return Err(e),
        };
        let lens = LensVector::new(ds.x.row_iter().map(|r| model.proba(r)).collect())?;
        let mut tables: Vec<(String, ExplanationMatrix)> = Vec::new();
        let lime = MethodSpec::new(
            MethodKind::Lime {
                k: ds.d(),
                n_samples: cfg.lime_samples.max(ds.d() + 2),
                kernel_width: None,
            },
            derive_seed(ds_seed, &[1]),
        );
        let shap = MethodSpec::new(
            MethodKind::KernelShap {
                background: Background::Sample { size: cfg.shap_background },
                n_coalitions: cfg.shap_coalitions.max(2 * ds.d()),
            },
            derive_seed(ds_seed, &[2]),
        );
        for (label, spec) in [("lime", lime), ("shap", shap)] {
            tables.push((label.into(), explain_dataset(&spec, &model, &ds.x, &ds.feature_names)?.explanations));
        }
        for (label, e) in &input.external {
            if e.n() != ds.n() {
                return Err(GaleError::Alignment(format!(
                    "{}: external table '{label}' has {} rows, dataset has {}",
                    input.name,
                    e.n(),
                    ds.n()
                )));
            }
            tables.push((label.clone(), e.clone()));
        }
        let mut sigs = Vec::new();
        for (i, (label, e)) in tables.iter().enumerate() {
            let sig = tuned_signature(label, e, &lens, cfg, derive_seed(ds_seed, &[3, i as u64]))?;
            let name = format!("{}_{label}", input.name);
            art.graph(&name, &sig.graph)?;
            art.diagram(&name, &sig.diagram)?;
            sigs.push(sig);
        }
        let matrix = matrix_of(&sigs)?;
        art.matrix(&input.name, &matrix)?;
        rows.push(ConsensusRow {
            dataset: input.name.clone(),
            matrix,
        });
    }
    let summary: Vec<Value> = rows
        .iter()
        .map(|r| json!({ "dataset": r.dataset, "lime_vs_shap": r.distance("lime", "shap") }))
        .collect();
    let report = ExperimentReport {
        experiment: "consensus".into(),
        seed,
        inputs: json!({
            "datasets": inputs.iter().map(|i| json!({"name": i.name, "n": i.dataset.n(), "d": i.dataset.d(),
                "external": i.external.iter().map(|e| e.0.clone()).collect::<Vec<_>>()})).collect::<Vec<_>>(),
            "config": cfg,
        }),
        artifacts: Vec::new(),
        summary: json!(summary),
        skipped,
        wall_clock_seconds: 0.0,
    };
    let report = art.finish(report, started)?;
    Ok(ConsensusOutcome { rows, report })
}

// ---------------------------------------------------------------------------
// stability

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSummary {
    pub matrix: DistanceMatrix,
    pub avg_row_sum: f64,
    pub avg_components: f64,
    pub params: Vec<MapperParams>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityOutcome {
    pub dataset: String,
    pub tuned: RegimeSummary,
    pub fixed: RegimeSummary,
    pub report: ExperimentReport,
}

impl StabilityOutcome {
    /// Tuned regime no worse than fixed on row sum or on component count.
    pub fn tuned_no_worse(&self) -> bool {
        self.tuned.avg_row_sum <= self.fixed.avg_row_sum || self.tuned.avg_components <= self.fixed.avg_components
    }
}

fn regime(sigs: &[TunedSignature]) -> Result<RegimeSummary> {
    let matrix = matrix_of(sigs)?;
    let sums = row_sums(&matrix);
    Ok(RegimeSummary {
        avg_row_sum: sums.iter().map(|s| s.1).sum::<f64>() / sums.len() as f64,
        avg_components: sigs.iter().map(|s| s.components as f64).sum::<f64>() / sigs.len() as f64,
        params: sigs.iter().map(|s| s.params).collect(),
        matrix,
    })
}

/// Repeated lime_like runs on one dataset and model. With `vary_seed` false
/// every run reuses the same explainer seed.
pub fn run_stability_benchmark(
    spec: &SynthSpec,
    runs: usize,
    seed: u64,
    vary_seed: bool,
    cfg: &HarnessConfig,
    out: Option<&Path>,
) -> Result<StabilityOutcome> {
    if runs < 3 {
        return Err(GaleError::Config(format!("at least 3 runs required, got {runs}")));
    }
    let started = Instant::now();
    let mut art = Artifacts::new(out);
    let ds = generate(spec)?;
    let model = train(&ds, cfg, derive_seed(seed, &[0]))?;
    let mut tuned = Vec::new();
    let mut fixed = Vec::new();
    for j in 0..runs {
        let run_seed = derive_seed(seed, &[1, if vary_seed { j as u64 } else { 0 }]);
        let spec_j = MethodSpec::new(
            MethodKind::Lime {
                k: ds.d(),
                n_samples: cfg.lime_samples.max(ds.d() + 2),
                kernel_width: None,
            },
            run_seed,
        );
        let ex = explain_dataset(&spec_j, &model, &ds.x, &ds.feature_names)?;
        let label = format!("run{j}");
        let t = tuned_signature(&label, &ex.explanations, &ex.lens, cfg, derive_seed(seed, &[2, j as u64]))?;
        let f = fixed_signature(&label, &ex.explanations, &ex.lens, &fixed_params())?;
        art.graph(&format!("tuned_{label}"), &t.graph)?;
        art.diagram(&format!("tuned_{label}"), &t.diagram)?;
        art.graph(&format!("fixed_{label}"), &f.graph)?;
        art.diagram(&format!("fixed_{label}"), &f.diagram)?;
        tuned.push(t);
        fixed.push(f);
    }
    let tuned = regime(&tuned)?;
    let fixed = regime(&fixed)?;
    art.matrix("tuned", &tuned.matrix)?;
    art.matrix("fixed", &fixed.matrix)?;
    let report = ExperimentReport {
        experiment: "stability".into(),
        seed,
        inputs: json!({ "data": spec, "runs": runs, "vary_seed": vary_seed, "fixed": fixed_params(), "config": cfg }),
        artifacts: Vec::new(),
        summary: json!({
            "tuned": { "avg_row_sum": tuned.avg_row_sum, "avg_components": tuned.avg_components },
            "fixed": { "avg_row_sum": fixed.avg_row_sum, "avg_components": fixed.avg_components },
        }),
        skipped: Vec::new(),
        wall_clock_seconds: 0.0,
    };
    let report = art.finish(report, started)?;
    Ok(StabilityOutcome {
        dataset: spec.kind.name().to_string(),
        tuned,
        fixed,
        report,
    })
}

// ---------------------------------------------------------------------------
// explainer sweep

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub ks: Vec<usize>,
    pub signatures: Vec<TunedSignature>,
    pub matrix: DistanceMatrix,
    pub row_sums: Vec<f64>,
    pub report: ExperimentReport,
}

impl SweepOutcome {
    pub fn distance(&self, a: usize, b: usize) -> Option<f64> {
        let ia = self.ks.iter().position(|&k| k == a)?;
        let ib = self.ks.iter().position(|&k| k == b)?;
        Some(self.matrix.get(ia, ib))
    }

    pub fn row_sum(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.row_sums[i])
    }
}

/// lime_like with `k` features for each `k` (same sampling seed), tuned
/// signatures and their pairwise matrix.
pub fn run_explainer_sweep(
    spec: &SynthSpec,
    ks: &[usize],
    seed: u64,
    cfg: &HarnessConfig,
    out: Option<&Path>,
) -> Result<SweepOutcome> {
    let started = Instant::now();
    let mut art = Artifacts::new(out);
    let ds = generate(spec)?;
    if ks.is_empty() || ks.iter().any(|&k| k < 1 || k > ds.d()) {
        return Err(GaleError::Config(format!("feature counts {ks:?} must lie in [1, {}]", ds.d())));
    }
    let model = train(&ds, cfg, derive_seed(seed, &[0]))?;
    let mut sigs = Vec::new();
    for &k in ks {
        let s = MethodSpec::new(
            MethodKind::Lime {
                k,
                n_samples: cfg.lime_samples.max(ds.d() + 2),
                kernel_width: None,
            },
            derive_seed(seed, &[1]),
        );
        let ex = explain_dataset(&s, &model, &ds.x, &ds.feature_names)?;
        let label = format!("k{k}");
        let sig = tuned_signature(&label, &ex.explanations, &ex.lens, cfg, derive_seed(seed, &[2]))?;
        art.graph(&label, &sig.graph)?;
        art.diagram(&label, &sig.diagram)?;
        sigs.push(sig);
    }
    let matrix = matrix_of(&sigs)?;
    art.matrix("sweep", &matrix)?;
    let sums: Vec<f64> = row_sums(&matrix).into_iter().map(|s| s.1).collect();
    let report = ExperimentReport {
        experiment: "sweep".into(),
        seed,
        inputs: json!({ "data": spec, "ks": ks, "config": cfg }),
        artifacts: Vec::new(),
        summary: json!({
            "ks": ks,
            "row_sums": sums,
            "selected": sigs.iter().map(|s| s.params).collect::<Vec<_>>(),
        }),
        skipped: Vec::new(),
        wall_clock_seconds: 0.0,
    };
    let report = art.finish(report, started)?;
    Ok(SweepOutcome {
        ks: ks.to_vec(),
        signatures: sigs,
        matrix,
        row_sums: sums,
        report,
    })
}

/// Writes a single graph to `dir` in both formats; used by the CLI.
pub fn save_graph_pair(g: &MapperGraph, dir: &Path, stem: &str) -> Result<()> {
    dataio::save_graph(g, GraphFormat::Json, &dir.join(format!("{stem}.json")))?;
    dataio::save_graph(g, GraphFormat::Dot, &dir.join(format!("{stem}.dot")))
}
