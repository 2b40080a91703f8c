use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Topological signatures of model explanations.
///
/// Machine-readable output (CSV or JSON) goes to `--out`, or to a file under
/// $GALE_OUT_DIR when that is set, or to stdout. Summaries go to stderr.
/// Exit status: 0 success, 1 usage error, 2 data error.
#[derive(Debug, Parser)]
#[command(name = "gale", version)]
pub struct Cli {
    /// Worker threads for parallel stages (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labeled dataset.
    Synth(SynthArgs),
    /// Fit a classifier to a labeled dataset.
    Train(TrainArgs),
    /// Explain every row of a dataset with a trained model.
    Explain(ExplainArgs),
    /// Build a Mapper graph from explanations and a lens.
    Mapper(MapperArgs),
    /// Extended persistence diagram of a Mapper graph.
    Persistence(PersistenceArgs),
    /// Pairwise bottleneck distances between diagrams.
    Compare(CompareArgs),
    /// Bootstrap search over Mapper parameters.
    Tune(TuneArgs),
    /// Run an experiment recipe end to end.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Dataset family.
    #[arg(long)]
    pub kind: String,
    /// Number of rows.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Noise level (family default when omitted).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Feature count for zero-label data.
    #[arg(long, default_value_t = 5)]
    pub d: usize,
    /// Probability of an exact zero entry in zero-label data.
    #[arg(long, default_value_t = 0.1)]
    pub zero_rate: f64,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModelKind {
    Mlp,
    Logistic,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled dataset CSV (features then a 0/1 `y` column).
    #[arg(long)]
    pub data: PathBuf,
    /// Model family.
    #[arg(long, value_enum, default_value_t = ModelKind::Mlp)]
    pub model: ModelKind,
    /// MLP epochs.
    #[arg(long, default_value_t = 400)]
    pub epochs: usize,
    /// MLP step size.
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    /// MLP momentum.
    #[arg(long, default_value_t = 0.9)]
    pub momentum: f64,
    /// MLP minibatch size (0 = full batch).
    #[arg(long, default_value_t = 0)]
    pub batch_size: usize,
    /// MLP L2 weight decay.
    #[arg(long, default_value_t = 1e-2)]
    pub weight_decay: f64,
    /// Logistic ridge penalty.
    #[arg(long, default_value_t = 1e-2)]
    pub l2: f64,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output model JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write predicted probabilities on the training rows here.
    #[arg(long)]
    pub lens_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodName {
    /// Integrated gradients.
    Ig,
    /// Gradient times (input minus baseline).
    Gxi,
    /// Local weighted linear surrogate.
    Lime,
    /// Kernel-weighted Shapley regression.
    Shap,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    /// Labeled dataset CSV; its rows are explained and serve as reference data.
    #[arg(long)]
    pub data: PathBuf,
    /// Model JSON written by `gale train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Explanation method.
    #[arg(long, value_enum)]
    pub method: MethodName,
    /// Baseline for ig/gxi and single-row shap backgrounds: zero, max-distance, gaussian[:scale], uniform.
    #[arg(long, default_value = "zero")]
    pub baseline: String,
    /// Riemann steps for ig.
    #[arg(long, default_value_t = 64)]
    pub steps: usize,
    /// Features kept by lime (all when omitted).
    #[arg(long)]
    pub k: Option<usize>,
    /// Perturbation samples for lime.
    #[arg(long, default_value_t = 500)]
    pub samples: usize,
    /// Neighbourhood width for lime (data-driven when omitted).
    #[arg(long)]
    pub kernel_width: Option<f64>,
    /// Sample this many reference rows as the shap background instead of a baseline row.
    #[arg(long)]
    pub background_size: Option<usize>,
    /// Coalitions for shap.
    #[arg(long, default_value_t = 64)]
    pub coalitions: usize,
    /// Explained quantity: probability or logit.
    #[arg(long, default_value = "probability")]
    pub target: String,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output explanations CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write predicted probabilities here.
    #[arg(long)]
    pub lens_out: Option<PathBuf>,
    /// Also write run metadata JSON here.
    #[arg(long)]
    pub meta_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AnchorName {
    /// Observed lens minimum and maximum.
    Observed,
    /// The unit interval.
    Unit,
}

#[derive(Debug, Args)]
pub struct MapperArgs {
    /// Explanations CSV.
    #[arg(long)]
    pub explanations: PathBuf,
    /// Lens CSV (one probability per row).
    #[arg(long)]
    pub lens: PathBuf,
    /// Number of cover intervals.
    #[arg(long, default_value_t = 10)]
    pub resolution: usize,
    /// Overlap fraction between neighbouring intervals.
    #[arg(long, default_value_t = 0.3)]
    pub gain: f64,
    /// Clustering cut as a fraction of the global distance range.
    #[arg(long, default_value_t = 0.3)]
    pub threshold_fraction: f64,
    /// Range the cover spans.
    #[arg(long, value_enum, default_value_t = AnchorName::Observed)]
    pub anchor: AnchorName,
    /// Output graph JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the graph in DOT format here.
    #[arg(long)]
    pub dot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PersistenceAlgo {
    /// Union-find and cycle counting.
    Fast,
    /// Boundary-matrix reduction.
    Reference,
}

#[derive(Debug, Args)]
pub struct PersistenceArgs {
    /// Graph JSON written by `gale mapper`.
    #[arg(long)]
    pub graph: PathBuf,
    /// Algorithm.
    #[arg(long, value_enum, default_value_t = PersistenceAlgo::Fast)]
    pub algorithm: PersistenceAlgo,
    /// Output diagram JSON path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Two or more diagram JSON files.
    #[arg(required = true, num_args = 2..)]
    pub diagrams: Vec<PathBuf>,
    /// Comma-separated row labels (file stems when omitted).
    #[arg(long, value_delimiter = ',')]
    pub labels: Option<Vec<String>>,
    /// Output matrix CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RuleName {
    /// Fewest components, then smallest bottleneck quantile.
    Lexicographic,
    /// Smallest bottleneck quantile among cells under a component cap.
    Capped,
}

#[derive(Debug, Args)]
pub struct TuneArgs {
    /// Explanations CSV.
    #[arg(long)]
    pub explanations: PathBuf,
    /// Lens CSV.
    #[arg(long)]
    pub lens: PathBuf,
    /// Comma-separated resolutions.
    #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25")]
    pub resolutions: Vec<usize>,
    /// Comma-separated gains.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4")]
    pub gains: Vec<f64>,
    /// Comma-separated threshold fractions.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    pub threshold_fractions: Vec<f64>,
    /// Bootstrap iterations per grid cell.
    #[arg(long, default_value_t = 100)]
    pub bootstrap: usize,
    /// Upper quantile level is 1 - alpha.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Selection rule.
    #[arg(long, value_enum, default_value_t = RuleName::Lexicographic)]
    pub rule: RuleName,
    /// Component cap for the capped rule.
    #[arg(long, default_value_t = 1)]
    pub cap: usize,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output JSON path (selection plus full grid table).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the grid table as CSV here.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Recipe {
    /// Baseline choice for path attributions on zero-label data.
    Baselines,
    /// lime vs shap agreement per dataset.
    Consensus,
    /// Tuned vs fixed Mapper parameters over repeated lime runs.
    Stability,
    /// lime feature-count sweep.
    Sweep,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Recipe to run.
    #[arg(value_enum)]
    pub recipe: Recipe,
    /// Directory for report.json, graphs, diagrams and matrices.
    #[arg(long, env = "GALE_OUT_DIR", default_value = "gale-out")]
    pub out_dir: PathBuf,
    /// Random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Rows per synthetic dataset.
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Bootstrap iterations per grid cell.
    #[arg(long, default_value_t = 20)]
    pub bootstrap: usize,
    /// Upper quantile level is 1 - alpha.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Comma-separated dataset families (consensus, stability, sweep).
    #[arg(long, value_delimiter = ',')]
    pub kinds: Option<Vec<String>>,
    /// Zero-label datasets to average over (baselines).
    #[arg(long, default_value_t = 4)]
    pub datasets: usize,
    /// Explainer runs per regime (stability).
    #[arg(long, default_value_t = 10)]
    pub runs: usize,
    /// Comma-separated lime feature counts (sweep).
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    pub ks: Vec<usize>,
}
