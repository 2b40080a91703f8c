//! Local explanation methods: path-integrated gradients, gradient times
//! input, a LIME-style weighted surrogate and a KernelSHAP-style coalition
//! regression.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, WeightedIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{sigmoid, Classifier};
use crate::dataio::{ExplanationMatrix, LensVector};
use crate::error::{GaleError, Result};
use crate::matrix::{sq_dist, Matrix};
use crate::rng;

/// Which scalar output of the model is being explained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    #[default]
    Probability,
    Logit,
}

impl Target {
    pub fn value(self, model: &impl Classifier, x: &[f64]) -> f64 {
        match self {
            Target::Probability => model.proba(x),
            Target::Logit => model.logit(x),
        }
    }

    pub fn gradient(self, model: &impl Classifier, x: &[f64]) -> Vec<f64> {
        match self {
            Target::Probability => model.input_gradient(x),
            Target::Logit => model.logit_and_gradient(x).1,
        }
    }
}

impl FromStr for Target {
    type Err = GaleError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "probability" | "proba" => Ok(Target::Probability),
            "logit" => Ok(Target::Logit),
            _ => Err(GaleError::Config(format!("unknown target '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaselineKind {
    Zero,
    MaxDistance,
    /// `x` plus Gaussian noise with per-feature sd `scale * std(X)`.
    Gaussian { scale: f64 },
    /// Independent draws between per-feature min and max of `X`.
    Uniform,
}

impl BaselineKind {
    pub fn label(&self) -> String {
        match self {
            BaselineKind::Zero => "zero".into(),
            BaselineKind::MaxDistance => "max-distance".into(),
            BaselineKind::Gaussian { scale } if *scale == 1.0 => "gaussian".into(),
            BaselineKind::Gaussian { scale } => format!("gaussian-{scale}"),
            BaselineKind::Uniform => "uniform".into(),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, BaselineKind::Gaussian { .. } | BaselineKind::Uniform)
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for BaselineKind {
    type Err = GaleError;

    /// `zero`, `max-distance`, `uniform`, `gaussian` or `gaussian:<scale>`
    /// (also `gaussian-<scale>`).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || GaleError::Config(format!("unknown baseline '{s}'"));
        match s {
            "zero" => Ok(BaselineKind::Zero),
            "max-distance" => Ok(BaselineKind::MaxDistance),
            "uniform" => Ok(BaselineKind::Uniform),
            "gaussian" => Ok(BaselineKind::Gaussian { scale: 1.0 }),
            _ => {
                let rest = s
                    .strip_prefix("gaussian:")
                    .or_else(|| s.strip_prefix("gaussian-"))
                    .ok_or_else(bad)?;
                let scale: f64 = rest.parse().map_err(|_| bad())?;
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(GaleError::Config(format!("gaussian scale {rest} must be positive")));
                }
                Ok(BaselineKind::Gaussian { scale })
            }
        }
    }
}

/// Per-feature summary of a reference sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl FeatureStats {
    pub fn from_matrix(x: &Matrix) -> Self {
        let (mean, std) = x.column_stats();
        let (min, max) = x.column_bounds();
        FeatureStats { mean, std, min, max }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn default_kernel_width(&self) -> f64 {
        let d = self.dim() as f64;
        let mean_std = self.std.iter().sum::<f64>() / d;
        0.75 * d.sqrt() * mean_std
    }
}

fn check_dim(what: &str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(GaleError::Shape(format!("{what}: expected {expected} features, got {got}")));
    }
    Ok(())
}

/// Reference input for path methods. Farthest-point ties go to the lowest
/// row index.
pub fn make_baseline(kind: &BaselineKind, x_ref: &Matrix, x: &[f64], seed: u64) -> Result<Vec<f64>> {
    check_dim("baseline", x_ref.cols(), x.len())?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(GaleError::Data("instance has non-finite values".into()));
    }
    let mut r = rng::stream(seed, &[0x62617365]);
    Ok(match kind {
        BaselineKind::Zero => vec![0.0; x.len()],
        BaselineKind::MaxDistance => {
            let mut best = 0;
            let mut best_d = f64::NEG_INFINITY;
            for (i, row) in x_ref.row_iter().enumerate() {
                let d = sq_dist(row, x);
                if d > best_d {
                    best = i;
                    best_d = d;
                }
            }
            x_ref.row(best).to_vec()
        }
        BaselineKind::Gaussian { scale } => {
            let (_, std) = x_ref.column_stats();
            x.iter()
                .zip(&std)
                .map(|(v, s)| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    v + scale * s * z
                })
                .collect()
        }
        BaselineKind::Uniform => {
            let (lo, hi) = x_ref.column_bounds();
            lo.iter()
                .zip(&hi)
                .map(|(&a, &b)| if b > a { r.gen_range(a..=b) } else { a })
                .collect()
        }
    })
}

/// Midpoint Riemann sum of the target gradient along the straight path from
/// `baseline` to `x`, scaled by `x - baseline`.
pub fn integrated_gradients(
    model: &impl Classifier,
    x: &[f64],
    baseline: &[f64],
    steps: usize,
    target: Target,
) -> Result<Vec<f64>> {
    check_dim("integrated gradients", model.input_dim(), x.len())?;
    check_dim("integrated gradients baseline", x.len(), baseline.len())?;
    if steps == 0 {
        return Err(GaleError::Config("steps must be at least 1".into()));
    }
    let d = x.len();
    let mut acc = vec![0.0; d];
    let mut point = vec![0.0; d];
    for k in 0..steps {
        let a = (k as f64 + 0.5) / steps as f64;
        for j in 0..d {
            point[j] = baseline[j] + a * (x[j] - baseline[j]);
        }
        let g = target.gradient(model, &point);
        acc.iter_mut().zip(&g).for_each(|(s, v)| *s += v);
    }
    Ok(acc
        .iter()
        .enumerate()
        .map(|(j, s)| (x[j] - baseline[j]) * s / steps as f64)
        .collect())
}

/// `(x - baseline) * grad f(x)`.
pub fn gradient_times_input(model: &impl Classifier, x: &[f64], baseline: &[f64], target: Target) -> Result<Vec<f64>> {
    check_dim("gradient times input", model.input_dim(), x.len())?;
    check_dim("gradient times input baseline", x.len(), baseline.len())?;
    let g = target.gradient(model, x);
    Ok(g.iter().zip(x.iter().zip(baseline)).map(|(g, (a, b))| g * (a - b)).collect())
}

/// Attribution vector plus whether a ridge-stabilized solve was needed.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalExplanation {
    pub values: Vec<f64>,
    pub ridge_fallback: bool,
}

const RIDGE: f64 = 1e-8;

/// Weighted least squares `min sum w (y - A b)^2`. Falls back to a small
/// ridge when the normal equations are not positive definite.
fn weighted_lstsq(design: &DMatrix<f64>, y: &DVector<f64>, w: &[f64]) -> (DVector<f64>, bool) {
    let p = design.ncols();
    let mut ata = DMatrix::<f64>::zeros(p, p);
    let mut aty = DVector::<f64>::zeros(p);
    for (r, &wr) in w.iter().enumerate() {
        if wr == 0.0 {
            continue;
        }
        for a in 0..p {
            let va = wr * design[(r, a)];
            aty[a] += va * y[r];
            for b in a..p {
                ata[(a, b)] += va * design[(r, b)];
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            ata[(a, b)] = ata[(b, a)];
        }
    }
    let scale = (0..p).map(|i| ata[(i, i)]).fold(0.0_f64, f64::max).max(1e-300);
    let well_posed = ata.clone().cholesky().and_then(|c| {
        let diag_min = (0..p).map(|i| c.l_dirty()[(i, i)]).fold(f64::INFINITY, f64::min);
        (diag_min * diag_min > 1e-12 * scale).then(|| c.solve(&aty))
    });
    match well_posed {
        Some(sol) => (sol, false),
        None => {
            let mut reg = ata;
            for i in 0..p {
                reg[(i, i)] += RIDGE * scale + RIDGE;
            }
            let sol = reg
                .cholesky()
                .map(|c| c.solve(&aty))
                .unwrap_or_else(|| DVector::zeros(p));
            (sol, true)
        }
    }
}

fn weighted_rss(design: &DMatrix<f64>, y: &DVector<f64>, w: &[f64], coef: &DVector<f64>) -> f64 {
    let fit = design * coef;
    w.iter().enumerate().map(|(r, wr)| wr * (y[r] - fit[r]).powi(2)).sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimeParams {
    pub k: usize,
    pub n_samples: usize,
    /// `None` resolves to `FeatureStats::default_kernel_width`.
    pub kernel_width: Option<f64>,
    pub seed: u64,
}

impl LimeParams {
    pub fn new(k: usize, n_samples: usize, seed: u64) -> Self {
        LimeParams {
            k,
            n_samples,
            kernel_width: None,
            seed,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.k < 1 || self.k > d {
            return Err(GaleError::Config(format!("k={} outside [1, {d}]", self.k)));
        }
        if self.n_samples < d + 2 {
            return Err(GaleError::Config(format!("n_samples={} below d+2={}", self.n_samples, d + 2)));
        }
        if let Some(w) = self.kernel_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(GaleError::Config(format!("kernel width {w} must be positive")));
            }
        }
        Ok(())
    }

    pub fn resolved_kernel_width(&self, stats: &FeatureStats) -> f64 {
        self.kernel_width.unwrap_or_else(|| stats.default_kernel_width())
    }
}

fn design_for(cols: &[usize], z: &[Vec<f64>], x: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(z.len(), cols.len() + 1, |r, c| if c == 0 { 1.0 } else { z[r][cols[c - 1]] - x[cols[c - 1]] })
}

/// Weighted linear surrogate of the model's probability in a Gaussian
/// neighbourhood of `x`, restricted to `k` forward-selected features.
pub fn lime_like(model: &impl Classifier, x: &[f64], stats: &FeatureStats, p: &LimeParams) -> Result<LocalExplanation> {
    lime_like_target(model, x, stats, p, Target::Probability)
}

pub fn lime_like_target(
    model: &impl Classifier,
    x: &[f64],
    stats: &FeatureStats,
    p: &LimeParams,
    target: Target,
) -> Result<LocalExplanation> {
    let d = x.len();
    check_dim("lime", model.input_dim(), d)?;
    check_dim("lime stats", stats.dim(), d)?;
    p.validate(d)?;
    let kw = p.resolved_kernel_width(stats);
    let mut r = rng::stream(p.seed, &[0x6c696d65]);
    let z: Vec<Vec<f64>> = (0..p.n_samples)
        .map(|_| {
            x.iter()
                .zip(&stats.std)
                .map(|(v, s)| {
                    let e: f64 = StandardNormal.sample(&mut r);
                    v + s * e
                })
                .collect()
        })
        .collect();
    let y = DVector::from_iterator(z.len(), z.iter().map(|zi| target.value(model, zi)));
    let w: Vec<f64> = z.iter().map(|zi| (-sq_dist(zi, x) / (kw * kw)).exp()).collect();

    let mut selected: Vec<usize> = Vec::with_capacity(p.k);
    let mut fallback = false;
    if p.k < d {
        while selected.len() < p.k {
            let mut best: Option<(f64, usize)> = None;
            for j in (0..d).filter(|j| !selected.contains(j)) {
                let mut cols = selected.clone();
                cols.push(j);
                let a = design_for(&cols, &z, x);
                let (coef, fb) = weighted_lstsq(&a, &y, &w);
                fallback |= fb;
                let rss = weighted_rss(&a, &y, &w, &coef);
                if best.map_or(true, |(b, _)| rss < b) {
                    best = Some((rss, j));
                }
            }
            selected.push(best.expect("candidate features remain").1);
        }
        selected.sort_unstable();
    } else {
        selected = (0..d).collect();
    }
    let a = design_for(&selected, &z, x);
    let (coef, fb) = weighted_lstsq(&a, &y, &w);
    let mut values = vec![0.0; d];
    for (c, &j) in selected.iter().enumerate() {
        values[j] = coef[c + 1];
    }
    Ok(LocalExplanation {
        values,
        ridge_fallback: fallback || fb,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn shapley_kernel(d: usize, s: usize) -> f64 {
    (d - 1) as f64 / (binomial(d, s) * s as f64 * (d - s) as f64)
}

/// Coalitions (as membership masks) and their regression weights.
fn coalitions(d: usize, n_coalitions: usize, r: &mut impl Rng) -> Vec<(Vec<bool>, f64)> {
    let exact = d < usize::BITS as usize - 1 && (1usize << d) - 2 <= n_coalitions;
    if exact {
        return (1..(1usize << d) - 1)
            .map(|m| {
                let mask: Vec<bool> = (0..d).map(|j| m >> j & 1 == 1).collect();
                let s = mask.iter().filter(|&&b| b).count();
                (mask, shapley_kernel(d, s))
            })
            .collect();
    }
    // sizes drawn in proportion to their total kernel mass, members uniform
    let size_mass: Vec<f64> = (1..d).map(|s| (d - 1) as f64 / (s * (d - s)) as f64).collect();
    let sizes = WeightedIndex::new(&size_mass).expect("positive masses");
    (0..n_coalitions)
        .map(|_| {
            let s = sizes.sample(r) + 1;
            let mut mask = vec![false; d];
            for j in index::sample(r, d, s) {
                mask[j] = true;
            }
            (mask, 1.0)
        })
        .collect()
}

/// Kernel-weighted coalition regression with the efficiency constraint
/// `sum(phi) = f(x) - mean f(background)` imposed exactly.
pub fn kernel_shap_like(
    model: &impl Classifier,
    x: &[f64],
    background: &Matrix,
    n_coalitions: usize,
    seed: u64,
    target: Target,
) -> Result<LocalExplanation> {
    let d = x.len();
    check_dim("kernel shap", model.input_dim(), d)?;
    check_dim("kernel shap background", d, background.cols())?;
    if background.rows() == 0 {
        return Err(GaleError::Data("background set is empty".into()));
    }
    if n_coalitions < 2 * d {
        return Err(GaleError::Config(format!("n_coalitions={n_coalitions} below 2d={}", 2 * d)));
    }
    let nb = background.rows() as f64;
    let f_x = target.value(model, x);
    let f_bg = background.row_iter().map(|b| target.value(model, b)).sum::<f64>() / nb;
    let delta = f_x - f_bg;
    if d == 1 {
        return Ok(LocalExplanation {
            values: vec![delta],
            ridge_fallback: false,
        });
    }
    let mut r = rng::stream(seed, &[0x73686170]);
    let coals = coalitions(d, n_coalitions, &mut r);
    let mut z = vec![0.0; d];
    let value = |mask: &[bool], z: &mut Vec<f64>| -> f64 {
        let mut total = 0.0;
        for b in background.row_iter() {
            for j in 0..d {
                z[j] = if mask[j] { x[j] } else { b[j] };
            }
            total += target.value(model, z);
        }
        total / nb
    };
    // eliminate the last feature: phi_last = delta - sum(others)
    let last = d - 1;
    let mut design = DMatrix::<f64>::zeros(coals.len(), d - 1);
    let mut y = DVector::<f64>::zeros(coals.len());
    let mut w = Vec::with_capacity(coals.len());
    for (row, (mask, weight)) in coals.iter().enumerate() {
        let v = value(mask, &mut z);
        let in_last = if mask[last] { 1.0 } else { 0.0 };
        y[row] = v - f_bg - in_last * delta;
        for j in 0..last {
            design[(row, j)] = (if mask[j] { 1.0 } else { 0.0 }) - in_last;
        }
        w.push(*weight);
    }
    let (coef, fallback) = weighted_lstsq(&design, &y, &w);
    let mut values: Vec<f64> = coef.iter().copied().collect();
    values.push(delta - values.iter().sum::<f64>());
    Ok(LocalExplanation { values, ridge_fallback: fallback })
}

/// Reference rows for kernel_shap_like when explaining a whole table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Background {
    /// Single row produced by a baseline rule.
    Baseline { baseline: BaselineKind },
    /// Seeded subsample (without replacement) of the reference table.
    Sample { size: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum MethodKind {
    IntegratedGradients { baseline: BaselineKind, steps: usize },
    GradientTimesInput { baseline: BaselineKind },
    Lime { k: usize, n_samples: usize, kernel_width: Option<f64> },
    KernelShap { background: Background, n_coalitions: usize },
}

impl MethodKind {
    pub fn short_name(&self) -> &'static str {
        match self {
            MethodKind::IntegratedGradients { .. } => "ig",
            MethodKind::GradientTimesInput { .. } => "gxi",
            MethodKind::Lime { .. } => "lime",
            MethodKind::KernelShap { .. } => "shap",
        }
    }
}

/// Fully specified explanation run; stored next to its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub kind: MethodKind,
    pub target: Target,
    pub seed: u64,
}

impl MethodSpec {
    pub fn new(kind: MethodKind, seed: u64) -> Self {
        MethodSpec {
            kind,
            target: Target::Probability,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationMeta {
    pub spec: MethodSpec,
    pub rows: usize,
    pub features: usize,
    /// Resolved neighbourhood width for the surrogate sampler.
    pub kernel_width: Option<f64>,
    pub ridge_fallback_rows: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Explained {
    pub explanations: ExplanationMatrix,
    pub lens: LensVector,
    pub meta: ExplanationMeta,
}

/// Explain every row of `x`, using `x` itself as the reference sample.
pub fn explain_dataset(spec: &MethodSpec, model: &impl Classifier, x: &Matrix, names: &[String]) -> Result<Explained> {
    explain_rows(spec, model, x, x, names)
}

/// Explain each row of `rows`; baselines, statistics and backgrounds come
/// from `reference`. Row `i` draws from its own stream keyed by `(seed, i)`.
pub fn explain_rows(
    spec: &MethodSpec,
    model: &impl Classifier,
    reference: &Matrix,
    rows: &Matrix,
    names: &[String],
) -> Result<Explained> {
    check_dim("explain", model.input_dim(), rows.cols())?;
    check_dim("explain reference", rows.cols(), reference.cols())?;
    let stats = FeatureStats::from_matrix(reference);
    let background = match &spec.kind {
        MethodKind::KernelShap {
            background: Background::Sample { size },
            ..
        } => {
            if *size == 0 {
                return Err(GaleError::Config("background size must be positive".into()));
            }
            let mut r = rng::stream(spec.seed, &[0x626b67]);
            let take = (*size).min(reference.rows());
            let mut idx = index::sample(&mut r, reference.rows(), take).into_vec();
            idx.sort_unstable();
            Some(reference.select_rows(&idx))
        }
        _ => None,
    };
    let kernel_width = match &spec.kind {
        MethodKind::Lime { kernel_width, .. } => Some(kernel_width.unwrap_or_else(|| stats.default_kernel_width())),
        _ => None,
    };
    let per_row: Vec<Result<LocalExplanation>> = (0..rows.rows())
        .into_par_iter()
        .map(|i| {
            let x = rows.row(i);
            let seed = rng::derive_seed(spec.seed, &[i as u64]);
            let plain = |values: Vec<f64>| LocalExplanation { values, ridge_fallback: false };
            match &spec.kind {
                MethodKind::IntegratedGradients { baseline, steps } => {
                    let b = make_baseline(baseline, reference, x, seed)?;
                    integrated_gradients(model, x, &b, *steps, spec.target).map(plain)
                }
                MethodKind::GradientTimesInput { baseline } => {
                    let b = make_baseline(baseline, reference, x, seed)?;
                    gradient_times_input(model, x, &b, spec.target).map(plain)
                }
                MethodKind::Lime { k, n_samples, .. } => {
                    let p = LimeParams {
                        k: *k,
                        n_samples: *n_samples,
                        kernel_width,
                        seed,
                    };
                    lime_like_target(model, x, &stats, &p, spec.target)
                }
                MethodKind::KernelShap { background: bg, n_coalitions } => {
                    let own;
                    let bg_rows = match bg {
                        Background::Baseline { baseline } => {
                            own = Matrix::from_vec(1, x.len(), make_baseline(baseline, reference, x, seed)?)?;
                            &own
                        }
                        Background::Sample { .. } => background.as_ref().expect("background sampled above"),
                    };
                    kernel_shap_like(model, x, bg_rows, *n_coalitions, seed, spec.target)
                }
            }
        })
        .collect();
    let mut data = Vec::with_capacity(rows.rows() * rows.cols());
    let mut ridge_fallback_rows = Vec::new();
    for (i, res) in per_row.into_iter().enumerate() {
        let ex = res?;
        if ex.ridge_fallback {
            ridge_fallback_rows.push(i);
        }
        data.extend(ex.values);
    }
    let values = Matrix::from_vec(rows.rows(), rows.cols(), data)?;
    let explanations = ExplanationMatrix::new(values, names.to_vec())?;
    let lens = LensVector::new(rows.row_iter().map(|r| model.proba(r)).collect())?;
    Ok(Explained {
        explanations,
        lens,
        meta: ExplanationMeta {
            spec: spec.clone(),
            rows: rows.rows(),
            features: rows.cols(),
            kernel_width,
            ridge_fallback_rows,
        },
    })
}

/// Derivative of the logistic function, exposed for closed-form checks.
pub fn sigmoid_derivative(z: f64) -> f64 {
    let s = sigmoid(z);
    s * (1.0 - s)
}
