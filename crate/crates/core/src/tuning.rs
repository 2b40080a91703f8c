//! Bootstrap stability of Mapper parameters and greedy selection over a grid.
//!
//! For a parameter set, the explanation rows (with their lens values) are
//! resampled with replacement; each resample gets its own Mapper graph and
//! diagram. The upper `alpha` tail of the bottleneck distances to the
//! original diagram measures instability, the upper tail of the component
//! counts measures fragmentation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{ExplanationMatrix, LensVector};
use crate::diagdist::bottleneck;
use crate::error::{GaleError, Result};
use crate::mapper::MapperParams;
use crate::rng;
use crate::signature::signature_raw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapStats {
    pub b_alpha: f64,
    pub c_alpha: usize,
    pub alpha: f64,
    pub iterations: usize,
    /// Components of the graph built on the original sample.
    pub base_components: usize,
    pub distances: Vec<f64>,
    pub components: Vec<usize>,
}

impl BootstrapStats {
    pub fn mean_components(&self) -> f64 {
        self.components.iter().sum::<usize>() as f64 / self.components.len().max(1) as f64
    }
}

/// 1-based rank of the order statistic used as the upper-`alpha` quantile of
/// `b` samples: `ceil((1 - alpha) * b)`.
pub fn quantile_rank(alpha: f64, b: usize) -> usize {
    let raw = (1.0 - alpha) * b as f64;
    // (1 - 0.05) * 100 is 95.00000000000001 in binary64
    let k = (raw - 1e-9).ceil() as usize;
    k.clamp(1, b)
}

pub fn upper_quantile<T: Copy + PartialOrd>(samples: &[T], alpha: f64) -> T {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("comparable samples"));
    sorted[quantile_rank(alpha, sorted.len()) - 1]
}

/// Row indices of bootstrap iteration `iteration`.
pub fn resample_indices(n: usize, seed: u64, iteration: usize) -> Vec<usize> {
    let mut r = rng::stream(seed, &[iteration as u64]);
    (0..n).map(|_| r.gen_range(0..n)).collect()
}

pub fn bootstrap_stats(
    e: &ExplanationMatrix,
    lens: &LensVector,
    p: &MapperParams,
    iterations: usize,
    alpha: f64,
    seed: u64,
) -> Result<BootstrapStats> {
    lens.check_paired(e)?;
    p.validate()?;
    if iterations < 10 {
        return Err(GaleError::Config(format!(
            "at least 10 bootstrap iterations required, got {iterations}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(GaleError::Config(format!("alpha {alpha} outside (0, 1)")));
    }
    let base = signature_raw(e.values(), lens.values(), p)?;
    let n = e.n();
    let runs: Vec<(f64, usize)> = (0..iterations)
        .into_par_iter()
        .map(|it| {
            let idx = resample_indices(n, seed, it);
            let values = e.values().select_rows(&idx);
            let lens_star: Vec<f64> = idx.iter().map(|&i| lens.values()[i]).collect();
            let star = signature_raw(&values, &lens_star, p)?;
            Ok((bottleneck(&base.diagram, &star.diagram), star.components))
        })
        .collect::<Result<_>>()?;
    let distances: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let components: Vec<usize> = runs.iter().map(|r| r.1).collect();
    Ok(BootstrapStats {
        b_alpha: upper_quantile(&distances, alpha),
        c_alpha: upper_quantile(&components, alpha),
        alpha,
        iterations,
        base_components: base.components,
        distances,
        components,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub resolutions: Vec<usize>,
    pub gains: Vec<f64>,
    pub threshold_fractions: Vec<f64>,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            resolutions: vec![5, 10, 15, 20, 25],
            gains: vec![0.1, 0.2, 0.3, 0.4],
            threshold_fractions: vec![0.1, 0.2, 0.3, 0.4, 0.5],
        }
    }
}

impl ParamGrid {
    /// Combinations in enumeration order: resolution outermost, then gain,
    /// then threshold fraction.
    pub fn combinations(&self) -> Result<Vec<MapperParams>> {
        if self.resolutions.is_empty() || self.gains.is_empty() || self.threshold_fractions.is_empty() {
            return Err(GaleError::Config("parameter grid has an empty axis".into()));
        }
        let mut out = Vec::new();
        for &r in &self.resolutions {
            for &g in &self.gains {
                for &t in &self.threshold_fractions {
                    out.push(MapperParams::new(r, g, t)?);
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum SelectionRule {
    /// Ascending by (c_alpha, b_alpha, -resolution, gain, threshold fraction).
    #[default]
    Lexicographic,
    /// Smallest b_alpha among rows with c_alpha <= cap, ties as above;
    /// falls back to the lexicographic rule when no row qualifies.
    CappedComponents { cap: usize },
}

impl SelectionRule {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionRule::Lexicographic => "lexicographic(c_alpha, b_alpha, -resolution, gain, threshold_fraction)",
            SelectionRule::CappedComponents { .. } => "min b_alpha subject to c_alpha <= cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningRow {
    pub params: MapperParams,
    pub stats: BootstrapStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningResult {
    pub rows: Vec<TuningRow>,
    pub selected: MapperParams,
    pub rule: SelectionRule,
    pub rule_name: String,
}

fn tie_break(a: &TuningRow, b: &TuningRow) -> std::cmp::Ordering {
    b.params
        .resolution
        .cmp(&a.params.resolution)
        .then(a.params.gain.total_cmp(&b.params.gain))
        .then(a.params.threshold_fraction.total_cmp(&b.params.threshold_fraction))
}

fn lexicographic(a: &TuningRow, b: &TuningRow) -> std::cmp::Ordering {
    a.stats
        .c_alpha
        .cmp(&b.stats.c_alpha)
        .then(a.stats.b_alpha.total_cmp(&b.stats.b_alpha))
        .then_with(|| tie_break(a, b))
}

pub fn select_params(rows: &[TuningRow], rule: SelectionRule) -> Result<MapperParams> {
    if rows.is_empty() {
        return Err(GaleError::Data("no tuning rows to select from".into()));
    }
    let pick = match rule {
        SelectionRule::Lexicographic => rows.iter().min_by(|a, b| lexicographic(a, b)),
        SelectionRule::CappedComponents { cap } => rows
            .iter()
            .filter(|r| r.stats.c_alpha <= cap)
            .min_by(|a, b| {
                a.stats
                    .b_alpha
                    .total_cmp(&b.stats.b_alpha)
                    .then(a.stats.c_alpha.cmp(&b.stats.c_alpha))
                    .then_with(|| tie_break(a, b))
            })
            .or_else(|| rows.iter().min_by(|a, b| lexicographic(a, b))),
    };
    Ok(pick.expect("rows are non-empty").params)
}

pub fn grid_search(
    e: &ExplanationMatrix,
    lens: &LensVector,
    grid: &ParamGrid,
    iterations: usize,
    alpha: f64,
    seed: u64,
) -> Result<TuningResult> {
    grid_search_with(e, lens, grid, iterations, alpha, seed, SelectionRule::Lexicographic)
}

pub fn grid_search_with(
    e: &ExplanationMatrix,
    lens: &LensVector,
    grid: &ParamGrid,
    iterations: usize,
    alpha: f64,
    seed: u64,
    rule: SelectionRule,
) -> Result<TuningResult> {
    let combos = grid.combinations()?;
    let rows = combos
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let cell_seed = rng::derive_seed(seed, &[i as u64]);
            Ok(TuningRow {
                params: *p,
                stats: bootstrap_stats(e, lens, p, iterations, alpha, cell_seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let selected = select_params(&rows, rule)?;
    Ok(TuningResult {
        rows,
        selected,
        rule,
        rule_name: rule.name().to_string(),
    })
}

/// One line per grid cell.
pub fn tuning_csv(t: &TuningResult) -> String {
    use crate::dataio::fmt_num;
    let mut out = String::from(
        "resolution,gain,threshold_fraction,b_alpha,c_alpha,alpha,iterations,base_components,mean_components,selected\n",
    );
    for r in &t.rows {
        let line = [
            r.params.resolution.to_string(),
            fmt_num(r.params.gain),
            fmt_num(r.params.threshold_fraction),
            fmt_num(r.stats.b_alpha),
            r.stats.c_alpha.to_string(),
            fmt_num(r.stats.alpha),
            r.stats.iterations.to_string(),
            r.stats.base_components.to_string(),
            fmt_num(r.stats.mean_components()),
            u8::from(r.params == t.selected).to_string(),
        ];
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
