use std::io::Write;
use std::path::{Path, PathBuf};

use gale_core::classifier::{self, LogisticConfig, Model, TrainConfig};
use gale_core::dataio::{self, GraphFormat};
use gale_core::diagdist::{self, pairwise_matrix};
use gale_core::explainers::{self, Background, BaselineKind, MethodKind, MethodSpec, Target};
use gale_core::harness::{self, ConsensusInput, ExperimentReport, HarnessConfig};
use gale_core::mapper::{self, CoverAnchor, MapperParams};
use gale_core::persistence::{self, diagram_stats};
use gale_core::synthdata::{self, SynthKind, SynthSpec};
use gale_core::tuning::{self, ParamGrid, SelectionRule};
use gale_core::{GaleError, Result};

use crate::args::*;

pub const OUT_DIR_ENV: &str = "GALE_OUT_DIR";

/// Writes to `out`, else `$GALE_OUT_DIR/default_name`, else stdout.
fn emit(out: Option<&Path>, default_name: &str, text: &str) -> Result<()> {
    let target = match out {
        Some(p) => Some(p.to_path_buf()),
        None => std::env::var_os(OUT_DIR_ENV).map(|d| PathBuf::from(d).join(default_name)),
    };
    match target {
        Some(p) => dataio::write_string(&p, text),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| GaleError::Format(format!("stdout: {e}"))),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value serializes");
    s.push('\n');
    s
}

fn parse<T: std::str::FromStr<Err = GaleError>>(s: &str) -> Result<T> {
    s.parse()
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let kind: SynthKind = parse(&a.kind)?;
    let mut spec = SynthSpec::new(kind, a.n, a.seed);
    if let Some(noise) = a.noise {
        spec.noise = noise;
    }
    spec.d = a.d;
    spec.zero_rate = a.zero_rate;
    let ds = synthdata::generate(&spec)?;
    eprintln!(
        "{}: {} rows, {} features, positive rate {:.3}",
        kind.name(),
        ds.n(),
        ds.d(),
        synthdata::label_rate(&ds)
    );
    emit(a.out.as_deref(), "dataset.csv", &dataio::dataset_to_csv(&ds))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let ds = dataio::load_dataset(&a.data)?;
    let model = match a.model {
        ModelKind::Mlp => {
            let cfg = TrainConfig {
                epochs: a.epochs,
                learning_rate: a.learning_rate,
                momentum: a.momentum,
                batch_size: a.batch_size,
                weight_decay: a.weight_decay,
                seed: a.seed,
            };
            Model::Mlp(classifier::train_mlp(&ds, &cfg)?)
        }
        ModelKind::Logistic => {
            let cfg = LogisticConfig {
                l2: a.l2,
                seed: a.seed,
                ..Default::default()
            };
            Model::Logistic(classifier::train_logistic(&ds, &cfg)?)
        }
    };
    eprintln!(
        "trained on {} rows: loss {:.4}, accuracy {:.3}",
        ds.n(),
        classifier::training_loss(&model, &ds),
        classifier::accuracy(&model, &ds)
    );
    if let Some(p) = &a.lens_out {
        dataio::save_lens(&classifier::predict_proba(&model, &ds.x)?, p)?;
    }
    emit(a.out.as_deref(), "model.json", &to_json(&model))
}

pub fn explain(a: &ExplainArgs) -> Result<()> {
    let ds = dataio::load_dataset(&a.data)?;
    let model = Model::load(&a.model)?;
    let baseline: BaselineKind = parse(&a.baseline)?;
    let target: Target = parse(&a.target)?;
    let kind = match a.method {
        MethodName::Ig => MethodKind::IntegratedGradients { baseline, steps: a.steps },
        MethodName::Gxi => MethodKind::GradientTimesInput { baseline },
        MethodName::Lime => MethodKind::Lime {
            k: a.k.unwrap_or(ds.d()),
            n_samples: a.samples,
            kernel_width: a.kernel_width,
        },
        MethodName::Shap => MethodKind::KernelShap {
            background: match a.background_size {
                Some(size) => Background::Sample { size },
                None => Background::Baseline { baseline },
            },
            n_coalitions: a.coalitions,
        },
    };
    let spec = MethodSpec {
        target,
        ..MethodSpec::new(kind, a.seed)
    };
    let out = explainers::explain_dataset(&spec, &model, &ds.x, &ds.feature_names)?;
    eprintln!(
        "{}: {} rows x {} features, {} ridge fallbacks",
        spec.kind.short_name(),
        out.meta.rows,
        out.meta.features,
        out.meta.ridge_fallback_rows.len()
    );
    if let Some(p) = &a.lens_out {
        dataio::save_lens(&out.lens, p)?;
    }
    if let Some(p) = &a.meta_out {
        dataio::write_string(p, &to_json(&out.meta))?;
    }
    emit(a.out.as_deref(), "explanations.csv", &dataio::explanations_to_csv(&out.explanations))
}

pub fn mapper(a: &MapperArgs) -> Result<()> {
    let e = dataio::load_explanations(&a.explanations)?;
    let lens = dataio::load_lens(&a.lens)?;
    let params = MapperParams::new(a.resolution, a.gain, a.threshold_fraction)?;
    let anchor = match a.anchor {
        AnchorName::Observed => CoverAnchor::Observed,
        AnchorName::Unit => CoverAnchor::Unit,
    };
    let g = mapper::build_mapper_anchored(&e, &lens, &params, anchor)?;
    eprintln!(
        "mapper: {} nodes, {} edges, {} components",
        g.node_count(),
        g.edge_count(),
        mapper::connected_components(&g).0
    );
    if let Some(p) = &a.dot {
        dataio::save_graph(&g, GraphFormat::Dot, p)?;
    }
    emit(a.out.as_deref(), "graph.json", &dataio::graph_to_json(&g))
}

pub fn persistence(a: &PersistenceArgs) -> Result<()> {
    let g = dataio::load_graph(&a.graph)?;
    let d = match a.algorithm {
        PersistenceAlgo::Fast => persistence::extended_persistence_fast(&g),
        PersistenceAlgo::Reference => persistence::extended_persistence_reference(&g),
    };
    let s = diagram_stats(&d);
    eprintln!(
        "diagram: ord0 {}, rel1 {}, ext0 {}, ext1 {}, max persistence {:.4}",
        s.ord0, s.rel1, s.ext0, s.ext1, s.max_persistence
    );
    emit(a.out.as_deref(), "diagram.json", &dataio::diagram_to_json(&d))
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let labels = match &a.labels {
        Some(l) if l.len() != a.diagrams.len() => {
            return Err(GaleError::Config(format!(
                "{} labels for {} diagrams",
                l.len(),
                a.diagrams.len()
            )))
        }
        Some(l) => l.clone(),
        None => a
            .diagrams
            .iter()
            .map(|p| p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned()))
            .collect(),
    };
    let diagrams = labels
        .into_iter()
        .zip(&a.diagrams)
        .map(|(l, p)| Ok((l, dataio::load_diagram(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let m = pairwise_matrix(&diagrams)?;
    for (label, sum) in diagdist::row_sums(&m) {
        eprintln!("{label}: row sum {sum:.4}");
    }
    emit(a.out.as_deref(), "distances.csv", &dataio::distance_matrix_to_csv(&m))
}

pub fn tune(a: &TuneArgs) -> Result<()> {
    let e = dataio::load_explanations(&a.explanations)?;
    let lens = dataio::load_lens(&a.lens)?;
    let grid = ParamGrid {
        resolutions: a.resolutions.clone(),
        gains: a.gains.clone(),
        threshold_fractions: a.threshold_fractions.clone(),
    };
    let rule = match a.rule {
        RuleName::Lexicographic => SelectionRule::Lexicographic,
        RuleName::Capped => SelectionRule::CappedComponents { cap: a.cap },
    };
    if a.bootstrap == 0 {
        return Err(GaleError::Config("at least one bootstrap iteration is required".into()));
    }
    let t = tuning::grid_search_with(&e, &lens, &grid, a.bootstrap, a.alpha, a.seed, rule)?;
    eprintln!(
        "selected resolution {}, gain {}, threshold fraction {} from {} cells",
        t.selected.resolution,
        t.selected.gain,
        t.selected.threshold_fraction,
        t.rows.len()
    );
    if let Some(p) = &a.csv {
        dataio::write_string(p, &tuning::tuning_csv(&t))?;
    }
    emit(a.out.as_deref(), "tuning.json", &to_json(&t))
}

fn kinds_or(kinds: &Option<Vec<String>>, default: &[SynthKind]) -> Result<Vec<SynthKind>> {
    match kinds {
        Some(k) => k.iter().map(|s| parse(s)).collect(),
        None => Ok(default.to_vec()),
    }
}

fn report_summary(report: &ExperimentReport) {
    eprintln!(
        "{} (seed {}): {} artifacts, {} skipped, {:.1} s",
        report.experiment,
        report.seed,
        report.artifacts.len(),
        report.skipped.len(),
        report.wall_clock_seconds
    );
    eprintln!("{}", serde_json::to_string_pretty(&report.summary).expect("summary serializes"));
}

pub fn experiment(a: &ExperimentArgs) -> Result<()> {
    let cfg = HarnessConfig {
        n: a.n,
        bootstrap: a.bootstrap,
        alpha: a.alpha,
        ..Default::default()
    };
    let root = a.out_dir.as_path();
    match a.recipe {
        Recipe::Baselines => {
            let o = harness::run_baseline_comparison(a.datasets, a.seed, &cfg, Some(root))?;
            report_summary(&o.report);
        }
        Recipe::Consensus => {
            let inputs = kinds_or(&a.kinds, &[SynthKind::Linear, SynthKind::Spirals])?
                .into_iter()
                .map(|k| ConsensusInput::synthetic(k, a.n, a.seed))
                .collect::<Result<Vec<_>>>()?;
            let o = harness::run_method_consensus(&inputs, a.seed, &cfg, Some(root))?;
            report_summary(&o.report);
        }
        Recipe::Stability => {
            for k in kinds_or(&a.kinds, &[SynthKind::Circles, SynthKind::ToyIndependent])? {
                let spec = SynthSpec::new(k, a.n, a.seed);
                let o = harness::run_stability_benchmark(&spec, a.runs, a.seed, true, &cfg, Some(&root.join(k.name())))?;
                report_summary(&o.report);
            }
        }
        Recipe::Sweep => {
            for k in kinds_or(&a.kinds, &[SynthKind::ToyIndependent])? {
                let spec = SynthSpec::new(k, a.n, a.seed);
                let o = harness::run_explainer_sweep(&spec, &a.ks, a.seed, &cfg, Some(&root.join(k.name())))?;
                report_summary(&o.report);
            }
        }
    }
    Ok(())
}
