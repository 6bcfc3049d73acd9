//! Skip-gram with negative sampling: the optimization core shared by the
//! content and relation embedders.
//!
//! For an input vector `x`, a positive output vector `c⁺` and negatives
//! `c⁻ⱼ`, the per-triple loss is
//!
//! ```text
//! L = -log σ(x·c⁺) - Σⱼ log σ(-x·c⁻ⱼ)
//! ```

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::embedding::dot;
use crate::error::{Error, Result};

/// Numerically stable `log σ(x)`.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Draws negatives from the unigram distribution raised to 3/4.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    dist: WeightedIndex<f64>,
}

impl NegativeSampler {
    pub const POWER: f64 = 0.75;

    pub fn new(counts: &[u64]) -> Result<Self> {
        let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(Self::POWER)).collect();
        let dist = WeightedIndex::new(&weights)
            .map_err(|e| Error::Invalid(format!("negative-sampling table: {e}")))?;
        Ok(NegativeSampler { dist })
    }

    /// Draws up to `n` negatives, skipping draws equal to `positive`.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, positive: usize, n: usize, out: &mut Vec<usize>) {
        out.clear();
        for _ in 0..n {
            let s = self.dist.sample(rng);
            if s != positive {
                out.push(s);
            }
        }
    }
}

/// Loss of one (input, positive, negatives) triple.
pub fn triple_loss(input: &[f64], positive: &[f64], negatives: &[&[f64]]) -> f64 {
    -log_sigmoid(dot(input, positive))
        - negatives
            .iter()
            .map(|c| log_sigmoid(-dot(input, c)))
            .sum::<f64>()
}

/// Analytic gradient of [`triple_loss`] w.r.t. input, positive, and each negative.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleGrad {
    pub input: Vec<f64>,
    pub positive: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

pub fn triple_grad(input: &[f64], positive: &[f64], negatives: &[&[f64]]) -> TripleGrad {
    // d/ds [-log σ(s)] = σ(s) - 1 ; d/ds [-log σ(-s)] = σ(s)
    let gp = sigmoid(dot(input, positive)) - 1.0;
    let mut g_in: Vec<f64> = positive.iter().map(|c| gp * c).collect();
    let g_pos: Vec<f64> = input.iter().map(|x| gp * x).collect();
    let mut g_negs = Vec::with_capacity(negatives.len());
    for c in negatives {
        let gn = sigmoid(dot(input, c));
        for (g, ci) in g_in.iter_mut().zip(c.iter()) {
            *g += gn * ci;
        }
        g_negs.push(input.iter().map(|x| gn * x).collect());
    }
    TripleGrad {
        input: g_in,
        positive: g_pos,
        negatives: g_negs,
    }
}

/// One SGD step on a triple. `input` is a row owned by the caller, `output`
/// is the row-major output matrix with row width `input.len()`. All
/// gradients are taken at the pre-step values. Returns the pre-step loss.
pub fn sgd_step(
    input: &mut [f64],
    output: &mut [f64],
    positive: usize,
    negatives: &[usize],
    lr: f64,
    scratch: &mut Vec<f64>,
) -> f64 {
    let k = input.len();
    scratch.clear();
    scratch.resize(k, 0.0);
    let mut loss = 0.0;
    for (j, &row) in std::iter::once(&positive).chain(negatives).enumerate() {
        let label = if j == 0 { 1.0 } else { 0.0 };
        let c = &mut output[row * k..(row + 1) * k];
        let s = dot(input, c);
        loss -= if j == 0 { log_sigmoid(s) } else { log_sigmoid(-s) };
        // gradient of the loss w.r.t. s is σ(s) - label
        let g = sigmoid(s) - label;
        for i in 0..k {
            scratch[i] += g * c[i];
            c[i] -= lr * g * input[i];
        }
    }
    for (x, g) in input.iter_mut().zip(scratch.iter()) {
        *x -= lr * g;
    }
    loss
}

/// Linearly decayed learning rate, floored at 1e-4 of the initial rate.
pub(crate) fn decayed_lr(lr: f64, done: usize, total: usize) -> f64 {
    let progress = if total == 0 { 0.0 } else { done as f64 / total as f64 };
    lr * (1.0 - progress).max(1e-4)
}

/// Uniform(-0.5/k, 0.5/k) initialization, word2vec style.
pub(crate) fn init_rows<R: Rng + ?Sized>(rng: &mut R, rows: usize, k: usize) -> Vec<f64> {
    let half = 0.5 / k as f64;
    (0..rows * k).map(|_| rng.gen_range(-half..half)).collect()
}
