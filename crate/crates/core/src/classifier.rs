//! Binary classifiers that expose probabilities (the lens) and exact input
//! gradients (for gradient-based explainers).

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::{LabeledDataset, LensVector};
use crate::error::{GaleError, Result};
use crate::matrix::{dot, Matrix};
use crate::rng;

pub const HIDDEN_UNITS: usize = 64;

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Common interface of the fitted models.
pub trait Classifier: Send + Sync {
    fn input_dim(&self) -> usize;

    /// Pre-sigmoid score and its gradient with respect to the raw input.
    fn logit_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>);

    fn logit(&self, x: &[f64]) -> f64 {
        self.logit_and_gradient(x).0
    }

    fn proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.logit(x))
    }

    /// Gradient of the predicted probability with respect to the raw input.
    fn input_gradient(&self, x: &[f64]) -> Vec<f64> {
        let (z, mut g) = self.logit_and_gradient(x);
        let s = sigmoid(z);
        let ds = s * (1.0 - s);
        g.iter_mut().for_each(|v| *v *= ds);
        g
    }
}

/// Per-feature affine map to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(d: usize) -> Self {
        Standardizer {
            mean: vec![0.0; d],
            scale: vec![1.0; d],
        }
    }

    pub fn fit(x: &Matrix) -> Self {
        let (mean, std) = x.column_stats();
        let scale = std.into_iter().map(|s| if s > 1e-12 { s } else { 1.0 }).collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn apply_matrix(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..x.rows() {
            let row = self.apply(x.row(i));
            out.row_mut(i).copy_from_slice(&row);
        }
        out
    }
}

/// `input -> 64 -> 64 -> 1` network with rectifier hidden layers and a
/// logistic output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub standardizer: Standardizer,
    /// `HIDDEN_UNITS x input` row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `HIDDEN_UNITS x HIDDEN_UNITS` row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
    pub w3: Vec<f64>,
    pub b3: f64,
}

struct Activations {
    h1: Vec<f64>,
    h2: Vec<f64>,
    z: f64,
}

impl MlpModel {
    /// Seeded He-uniform initialization with zero biases.
    pub fn init(input_dim: usize, standardizer: Standardizer, seed: u64) -> Self {
        let mut r = rng::stream(seed, &[0x6d6c70]);
        let mut layer = |fan_in: usize, count: usize| -> Vec<f64> {
            let bound = (6.0 / fan_in as f64).sqrt();
            (0..count).map(|_| r.gen_range(-bound..bound)).collect()
        };
        let w1 = layer(input_dim, HIDDEN_UNITS * input_dim);
        let w2 = layer(HIDDEN_UNITS, HIDDEN_UNITS * HIDDEN_UNITS);
        let w3: Vec<f64> = layer(HIDDEN_UNITS, HIDDEN_UNITS).into_iter().map(|v| v * 0.5).collect();
        MlpModel {
            standardizer,
            w1,
            b1: vec![0.0; HIDDEN_UNITS],
            w2,
            b2: vec![0.0; HIDDEN_UNITS],
            w3,
            b3: 0.0,
        }
    }

    fn dim(&self) -> usize {
        self.standardizer.mean.len()
    }

    fn forward(&self, xs: &[f64]) -> Activations {
        let d = self.dim();
        let h1: Vec<f64> = (0..HIDDEN_UNITS)
            .map(|i| (dot(&self.w1[i * d..(i + 1) * d], xs) + self.b1[i]).max(0.0))
            .collect();
        let h2: Vec<f64> = (0..HIDDEN_UNITS)
            .map(|i| (dot(&self.w2[i * HIDDEN_UNITS..(i + 1) * HIDDEN_UNITS], &h1) + self.b2[i]).max(0.0))
            .collect();
        let z = dot(&self.w3, &h2) + self.b3;
        Activations { h1, h2, z }
    }

    /// Gradient of the logit with respect to the first-layer input, given
    /// the forward activations. Rectifier derivative at 0 is taken as 0.
    fn backward_input(&self, act: &Activations) -> Vec<f64> {
        let d = self.dim();
        let mut dh1 = vec![0.0; HIDDEN_UNITS];
        for i in 0..HIDDEN_UNITS {
            if act.h2[i] > 0.0 {
                let g = self.w3[i];
                let row = &self.w2[i * HIDDEN_UNITS..(i + 1) * HIDDEN_UNITS];
                dh1.iter_mut().zip(row).for_each(|(a, w)| *a += g * w);
            }
        }
        let mut dx = vec![0.0; d];
        for j in 0..HIDDEN_UNITS {
            if act.h1[j] > 0.0 {
                let g = dh1[j];
                let row = &self.w1[j * d..(j + 1) * d];
                dx.iter_mut().zip(row).for_each(|(a, w)| *a += g * w);
            }
        }
        dx
    }

    /// Adds the gradient of the L2 penalty on w1, w2 and w3.
    fn add_decay(&self, grad: &mut [f64], lambda: f64) {
        let (n1, nb1, n2, nb2) = (self.w1.len(), self.b1.len(), self.w2.len(), self.b2.len());
        let weights = self
            .w1
            .iter()
            .enumerate()
            .chain(self.w2.iter().enumerate().map(|(i, w)| (i + n1 + nb1, w)))
            .chain(self.w3.iter().enumerate().map(|(i, w)| (i + n1 + nb1 + n2 + nb2, w)));
        for (i, w) in weights {
            grad[i] += lambda * w;
        }
    }

    fn params_len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len() + self.w3.len() + 1
    }

    fn params_mut(&mut self) -> Vec<&mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
            .chain(self.w3.iter_mut())
            .chain(std::iter::once(&mut self.b3))
            .collect()
    }

    /// Mean cross-entropy over standardized rows `idx` and its gradient in
    /// parameter order (w1, b1, w2, b2, w3, b3).
    fn loss_and_grad(&self, xs: &Matrix, y: &[u8], idx: &[usize]) -> (f64, Vec<f64>) {
        let d = self.dim();
        let h = HIDDEN_UNITS;
        let mut gw1 = vec![0.0; h * d];
        let mut gb1 = vec![0.0; h];
        let mut gw2 = vec![0.0; h * h];
        let mut gb2 = vec![0.0; h];
        let mut gw3 = vec![0.0; h];
        let mut gb3 = 0.0;
        let mut loss = 0.0;
        let inv = 1.0 / idx.len() as f64;
        let mut dz2 = vec![0.0; h];
        let mut dh1 = vec![0.0; h];
        for &k in idx {
            let x = xs.row(k);
            let act = self.forward(x);
            let t = f64::from(y[k]);
            loss += softplus(act.z) - t * act.z;
            let dz = (sigmoid(act.z) - t) * inv;
            gb3 += dz;
            for i in 0..h {
                gw3[i] += dz * act.h2[i];
                dz2[i] = if act.h2[i] > 0.0 { dz * self.w3[i] } else { 0.0 };
            }
            dh1.iter_mut().for_each(|v| *v = 0.0);
            for i in 0..h {
                let g = dz2[i];
                if g == 0.0 {
                    continue;
                }
                gb2[i] += g;
                let row = &self.w2[i * h..(i + 1) * h];
                let grow = &mut gw2[i * h..(i + 1) * h];
                for j in 0..h {
                    grow[j] += g * act.h1[j];
                    dh1[j] += g * row[j];
                }
            }
            for j in 0..h {
                if act.h1[j] <= 0.0 {
                    continue;
                }
                let g = dh1[j];
                gb1[j] += g;
                gw1[j * d..(j + 1) * d].iter_mut().zip(x).for_each(|(a, xv)| *a += g * xv);
            }
        }
        let mut grad = Vec::with_capacity(self.params_len());
        grad.extend(gw1);
        grad.extend(gb1);
        grad.extend(gw2);
        grad.extend(gb2);
        grad.extend(gw3);
        grad.push(gb3);
        (loss * inv, grad)
    }
}

impl Classifier for MlpModel {
    fn input_dim(&self) -> usize {
        self.dim()
    }

    fn logit_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let xs = self.standardizer.apply(x);
        let act = self.forward(&xs);
        let mut g = self.backward_input(&act);
        g.iter_mut().zip(&self.standardizer.scale).for_each(|(v, s)| *v /= s);
        (act.z, g)
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.forward(&self.standardizer.apply(x)).z
    }
}

/// `sigmoid(w . standardize(x) + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    /// Model acting directly on raw inputs.
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        LogisticModel {
            standardizer: Standardizer::identity(weights.len()),
            weights,
            bias,
        }
    }

    /// Weights expressed on the raw input scale.
    pub fn raw_weights(&self) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.standardizer.scale)
            .map(|(w, s)| w / s)
            .collect()
    }
}

impl Classifier for LogisticModel {
    fn input_dim(&self) -> usize {
        self.weights.len()
    }

    fn logit_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (self.logit(x), self.raw_weights())
    }

    fn logit(&self, x: &[f64]) -> f64 {
        dot(&self.weights, &self.standardizer.apply(x)) + self.bias
    }
}

/// Serializable union of the model families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Mlp(MlpModel),
    Logistic(LogisticModel),
}

impl Classifier for Model {
    fn input_dim(&self) -> usize {
        match self {
            Model::Mlp(m) => m.input_dim(),
            Model::Logistic(m) => m.input_dim(),
        }
    }

    fn logit_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        match self {
            Model::Mlp(m) => m.logit_and_gradient(x),
            Model::Logistic(m) => m.logit_and_gradient(x),
        }
    }

    fn logit(&self, x: &[f64]) -> f64 {
        match self {
            Model::Mlp(m) => m.logit(x),
            Model::Logistic(m) => m.logit(x),
        }
    }
}

impl Model {
    pub fn save(&self, path: &Path) -> Result<()> {
        crate::dataio::save_json(self, path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GaleError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| GaleError::Format(format!("model json: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Zero means full batch.
    pub batch_size: usize,
    /// L2 penalty `weight_decay / 2 * |W|^2` on weight matrices (not biases).
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 400,
            learning_rate: 0.1,
            momentum: 0.9,
            batch_size: 0,
            weight_decay: 1e-2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(GaleError::Config("epochs must be at least 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(GaleError::Config(format!("learning rate {} is invalid", self.learning_rate)));
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(GaleError::Config(format!("weight decay {} is invalid", self.weight_decay)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(GaleError::Config(format!("momentum {} outside [0, 1)", self.momentum)));
        }
        Ok(())
    }
}

fn check_training_data(ds: &LabeledDataset) -> Result<()> {
    if ds.n() < 2 || ds.d() < 1 {
        return Err(GaleError::Data("training data needs rows and features".into()));
    }
    ds.require_both_classes()
}

/// Fresh network for `ds`, exactly as `train_mlp` starts from it.
pub fn initial_mlp(ds: &LabeledDataset, seed: u64) -> MlpModel {
    MlpModel::init(ds.d(), Standardizer::fit(&ds.x), seed)
}

/// Gradient descent with momentum on mean binary cross-entropy.
pub fn train_mlp(ds: &LabeledDataset, cfg: &TrainConfig) -> Result<MlpModel> {
    cfg.validate()?;
    check_training_data(ds)?;
    let mut model = initial_mlp(ds, cfg.seed);
    let xs = model.standardizer.apply_matrix(&ds.x);
    let mut velocity = vec![0.0; model.params_len()];
    let mut order: Vec<usize> = (0..ds.n()).collect();
    let batch = if cfg.batch_size == 0 { ds.n() } else { cfg.batch_size.min(ds.n()) };
    let mut shuffle = rng::stream(cfg.seed, &[0x7368]);
    for epoch in 0..cfg.epochs {
        if batch < ds.n() {
            order.shuffle(&mut shuffle);
        }
        for chunk in order.chunks(batch) {
            let (loss, mut grad) = model.loss_and_grad(&xs, &ds.y, chunk);
            if cfg.weight_decay > 0.0 {
                model.add_decay(&mut grad, cfg.weight_decay);
            }
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(GaleError::Divergence { epoch });
            }
            for ((p, v), g) in model.params_mut().into_iter().zip(velocity.iter_mut()).zip(&grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *p += *v;
            }
        }
    }
    let final_loss = training_loss(&model, ds);
    if !final_loss.is_finite() {
        return Err(GaleError::Divergence { epoch: cfg.epochs });
    }
    Ok(model)
}

/// Mean binary cross-entropy of `model` on `ds`.
pub fn training_loss(model: &impl Classifier, ds: &LabeledDataset) -> f64 {
    let total: f64 = ds
        .x
        .row_iter()
        .zip(&ds.y)
        .map(|(x, &y)| {
            let z = model.logit(x);
            softplus(z) - f64::from(y) * z
        })
        .sum();
    total / ds.n() as f64
}

pub fn accuracy(model: &impl Classifier, ds: &LabeledDataset) -> f64 {
    let hits = ds
        .x
        .row_iter()
        .zip(&ds.y)
        .filter(|(x, &y)| u8::from(model.proba(x) > 0.5) == y)
        .count();
    hits as f64 / ds.n() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Ridge penalty on the summed loss; keeps separable data bounded.
    pub l2: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2: 1e-2,
            max_iter: 100,
            seed: 0,
        }
    }
}

/// Ridge-penalized logistic regression on standardized features, fitted by
/// Newton iterations from a seeded random start.
pub fn train_logistic(ds: &LabeledDataset, cfg: &LogisticConfig) -> Result<LogisticModel> {
    check_training_data(ds)?;
    if !(cfg.l2 > 0.0) {
        return Err(GaleError::Config("l2 penalty must be positive".into()));
    }
    let standardizer = Standardizer::fit(&ds.x);
    let xs = standardizer.apply_matrix(&ds.x);
    let d = ds.d();
    let mut r = rng::stream(cfg.seed, &[0x6c6f67]);
    // parameters: weights then bias (bias unpenalized)
    let mut theta = DVector::from_iterator(d + 1, (0..=d).map(|_| r.gen_range(-0.1..0.1)));
    for iter in 0..cfg.max_iter {
        let mut grad = DVector::zeros(d + 1);
        let mut hess = DMatrix::zeros(d + 1, d + 1);
        let mut loss = 0.0;
        for (x, &y) in xs.row_iter().zip(&ds.y) {
            let mut xb: Vec<f64> = x.to_vec();
            xb.push(1.0);
            let z: f64 = xb.iter().zip(theta.iter()).map(|(a, b)| a * b).sum();
            let p = sigmoid(z);
            loss += softplus(z) - f64::from(y) * z;
            let w = p * (1.0 - p);
            for a in 0..=d {
                grad[a] += (p - f64::from(y)) * xb[a];
                for b in 0..=d {
                    hess[(a, b)] += w * xb[a] * xb[b];
                }
            }
        }
        for a in 0..d {
            loss += 0.5 * cfg.l2 * theta[a] * theta[a];
            grad[a] += cfg.l2 * theta[a];
            hess[(a, a)] += cfg.l2;
        }
        if !loss.is_finite() {
            return Err(GaleError::Divergence { epoch: iter });
        }
        hess[(d, d)] += 1e-12;
        let step = hess
            .cholesky()
            .ok_or_else(|| GaleError::Data("logistic Hessian is not positive definite".into()))?
            .solve(&grad);
        theta -= &step;
        if step.amax() < 1e-13 {
            break;
        }
    }
    Ok(LogisticModel {
        standardizer,
        weights: theta.iter().take(d).copied().collect(),
        bias: theta[d],
    })
}

pub fn predict_proba(model: &impl Classifier, x: &Matrix) -> Result<LensVector> {
    if x.cols() != model.input_dim() {
        return Err(GaleError::Shape(format!(
            "model expects {} features, got {}",
            model.input_dim(),
            x.cols()
        )));
    }
    LensVector::new(x.row_iter().map(|r| model.proba(r)).collect())
}

pub fn input_gradient(model: &impl Classifier, x: &[f64]) -> Vec<f64> {
    model.input_gradient(x)
}
