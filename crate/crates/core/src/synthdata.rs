//! Seeded generators for the synthetic benchmark datasets.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataio::LabeledDataset;
use crate::error::{GaleError, Result};
use crate::matrix::Matrix;
use crate::rng;

/// Grid levels for nonzero zero-label entries: `k / ZERO_LABEL_LEVELS`, `k >= 1`.
pub const ZERO_LABEL_LEVELS: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    Circles,
    Spirals,
    Corners,
    Linear,
    ToyIndependent,
    ToyFlip,
    ToyInteraction,
    ZeroLabel,
}

impl SynthKind {
    pub const ALL: [SynthKind; 8] = [
        SynthKind::Circles,
        SynthKind::Spirals,
        SynthKind::Corners,
        SynthKind::Linear,
        SynthKind::ToyIndependent,
        SynthKind::ToyFlip,
        SynthKind::ToyInteraction,
        SynthKind::ZeroLabel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SynthKind::Circles => "circles",
            SynthKind::Spirals => "spirals",
            SynthKind::Corners => "corners",
            SynthKind::Linear => "linear",
            SynthKind::ToyIndependent => "toy-independent",
            SynthKind::ToyFlip => "toy-flip",
            SynthKind::ToyInteraction => "toy-interaction",
            SynthKind::ZeroLabel => "zero-label",
        }
    }

    /// Noise level used when none is given.
    pub fn default_noise(self) -> f64 {
        match self {
            SynthKind::Circles => 0.08,
            SynthKind::Spirals => 0.05,
            SynthKind::Corners => 0.35,
            SynthKind::Linear => 0.7,
            _ => 0.0,
        }
    }
}

impl FromStr for SynthKind {
    type Err = GaleError;

    fn from_str(s: &str) -> Result<Self> {
        SynthKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| GaleError::Config(format!("unknown dataset kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub n: usize,
    pub noise: f64,
    /// Feature count, zero-label only.
    pub d: usize,
    /// Probability that a zero-label entry is exactly zero.
    pub zero_rate: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(kind: SynthKind, n: usize, seed: u64) -> Self {
        SynthSpec {
            kind,
            n,
            noise: kind.default_noise(),
            d: 5,
            zero_rate: 0.1,
            seed,
        }
    }

    pub fn zero_label(n: usize, zero_rate: f64, seed: u64) -> Self {
        SynthSpec {
            zero_rate,
            ..SynthSpec::new(SynthKind::ZeroLabel, n, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 10 {
            return Err(GaleError::Config(format!("n = {} is below 10", self.n)));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(GaleError::Config(format!("noise {} must be non-negative", self.noise)));
        }
        if self.kind == SynthKind::ZeroLabel {
            if !(self.zero_rate > 0.0 && self.zero_rate < 1.0) {
                return Err(GaleError::Config(format!("zero rate {} outside (0, 1)", self.zero_rate)));
            }
            if self.d < 1 {
                return Err(GaleError::Config("zero-label data needs at least one feature".into()));
            }
        }
        Ok(())
    }
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("x{}", j + 1)).collect()
}

pub fn generate(spec: &SynthSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let mut r = rng::stream(spec.seed, &[0x5157]);
    let n = spec.n;
    let (rows, y): (Vec<Vec<f64>>, Vec<u8>) = match spec.kind {
        SynthKind::Circles => (0..n)
            .map(|i| {
                let label = (i % 2) as u8;
                let radius = if label == 0 { 1.0 } else { 0.5 };
                let t = r.gen_range(0.0..2.0 * PI);
                let x = radius * t.cos() + spec.noise * normal(&mut r);
                let z = radius * t.sin() + spec.noise * normal(&mut r);
                (vec![x, z], label)
            })
            .unzip(),
        SynthKind::Spirals => (0..n)
            .map(|i| {
                let label = (i % 2) as u8;
                let t = r.gen::<f64>().sqrt() * 3.0 * PI;
                let phase = if label == 0 { 0.0 } else { PI };
                let scale = 1.0 / (3.0 * PI);
                let x = scale * t * (t + phase).cos() + spec.noise * normal(&mut r);
                let z = scale * t * (t + phase).sin() + spec.noise * normal(&mut r);
                (vec![x, z], label)
            })
            .unzip(),
        SynthKind::Corners => (0..n)
            .map(|i| {
                let (cx, cz) = [(1.0, 1.0), (1.0, -1.0), (-1.0, -1.0), (-1.0, 1.0)][i % 4];
                let label = u8::from((cx > 0.0) != (cz > 0.0));
                let x = cx + spec.noise * normal(&mut r);
                let z = cz + spec.noise * normal(&mut r);
                (vec![x, z], label)
            })
            .unzip(),
        SynthKind::Linear => (0..n)
            .map(|i| {
                let label = (i % 2) as u8;
                let cx = if label == 0 { -1.0 } else { 1.0 };
                (vec![cx + spec.noise * normal(&mut r), spec.noise * normal(&mut r)], label)
            })
            .unzip(),
        SynthKind::ToyIndependent | SynthKind::ToyFlip | SynthKind::ToyInteraction => {
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..6).map(|_| normal(&mut r)).collect()).collect();
            let scores: Vec<f64> = rows.iter().map(|x| toy_score(spec.kind, x)).collect();
            let mut sorted = scores.clone();
            sorted.sort_by(f64::total_cmp);
            let median = if n % 2 == 0 {
                0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
            } else {
                sorted[n / 2]
            };
            let y = scores.iter().map(|&s| u8::from(s > median)).collect();
            (rows, y)
        }
        SynthKind::ZeroLabel => (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..spec.d)
                    .map(|_| {
                        if r.gen::<f64>() < spec.zero_rate {
                            0.0
                        } else {
                            f64::from(r.gen_range(1..=ZERO_LABEL_LEVELS)) / f64::from(ZERO_LABEL_LEVELS)
                        }
                    })
                    .collect();
                let label = zero_label(&x);
                (x, label)
            })
            .unzip(),
    };
    let d = rows[0].len();
    LabeledDataset::new(Matrix::from_rows(&rows)?, y, names(d))
}

/// Continuous target of the toy datasets.
pub fn toy_score(kind: SynthKind, x: &[f64]) -> f64 {
    match kind {
        SynthKind::ToyFlip => x[0] - x[1] + x[2] - x[3],
        SynthKind::ToyInteraction => {
            x[..4].iter().sum::<f64>() + (1..4).map(|j| 10.0 * x[0] * x[j]).sum::<f64>()
        }
        _ => x[..4].iter().sum(),
    }
}

/// 1 iff any entry is exactly zero.
pub fn zero_label(row: &[f64]) -> u8 {
    u8::from(row.iter().any(|&v| v == 0.0))
}

pub fn label_rate(ds: &LabeledDataset) -> f64 {
    if ds.y.is_empty() {
        return 0.0;
    }
    ds.y.iter().map(|&v| f64::from(v)).sum::<f64>() / ds.y.len() as f64
}

/// Expected positive rate of zero-label data: `1 - (1 - p)^d`.
pub fn expected_zero_label_rate(zero_rate: f64, d: usize) -> f64 {
    1.0 - (1.0 - zero_rate).powi(d as i32)
}
