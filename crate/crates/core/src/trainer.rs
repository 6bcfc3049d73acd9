//! The adversarial training loop.
//!
//! Each outer iteration rebuilds the paper network and one spanning tree per
//! anchor from the current generator, runs the generator steps (walk
//! sampling, rewards from the discriminator, policy-gradient update),
//! refreshes the self-trained pseudo-positive set, then runs the
//! discriminator steps on balanced batches of pseudo-positive and generated
//! pairs. Generated pairs are reset every outer iteration.

use std::collections::{BTreeSet, HashSet};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{HeterogeneousNetwork, NodeIx};
use crate::discriminator::{top_k_pairs, DiscriminatorParams, LabeledPair, PaperInputs};
use crate::embedding::cosine;
use crate::error::{Error, Result};
use crate::generator::{build_spanning_tree, sample_selection, update_g, GeneratorParams, GeneratorSample, PaperNetwork};
use crate::seed;
use crate::sgns::sigmoid;

/// Scores are clamped to `[SCORE_EPS, 1 − SCORE_EPS]` before logarithms.
pub const SCORE_EPS: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub max_outer_iters: usize,
    pub g_steps: usize,
    pub d_steps: usize,
    pub lr_g: f64,
    pub lr_d: f64,
    pub top_k: usize,
    pub batch_size: usize,
    pub convergence_window: usize,
    pub convergence_tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            max_outer_iters: 30,
            g_steps: 3,
            d_steps: 3,
            lr_g: 0.01,
            lr_d: 0.01,
            top_k: 3,
            batch_size: 64,
            convergence_window: 3,
            convergence_tol: 1e-3,
            seed: 3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.g_steps == 0
            || self.d_steps == 0
            || self.top_k == 0
            || self.batch_size == 0
            || self.convergence_window == 0
        {
            return Err(Error::Invalid("train: step counts, top_k, batch_size and window must be >= 1".into()));
        }
        for (name, v) in [("lr_g", self.lr_g), ("lr_d", self.lr_d), ("convergence_tol", self.convergence_tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("train: {name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Pseudo-positive (label 1) and generated (label 0) pairs. The two sets
/// never share an unordered pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleStore {
    pub pseudo: BTreeSet<LabeledPair>,
    pub generated: BTreeSet<LabeledPair>,
}

impl SampleStore {
    pub fn is_empty(&self) -> bool {
        self.pseudo.is_empty() && self.generated.is_empty()
    }

    /// Drops generated pairs that coincide with a pseudo-positive pair in
    /// either orientation.
    pub fn enforce_disjoint(&mut self) {
        let pos: HashSet<(NodeIx, NodeIx)> = self.pseudo.iter().map(LabeledPair::unordered).collect();
        self.generated.retain(|g| !pos.contains(&g.unordered()));
    }

    pub fn is_clean(&self) -> bool {
        let pos: HashSet<(NodeIx, NodeIx)> = self.pseudo.iter().map(LabeledPair::unordered).collect();
        self.pseudo.iter().chain(&self.generated).all(|p| p.p != p.anchor)
            && self.pseudo.iter().all(|p| p.label)
            && self.generated.iter().all(|p| !p.label)
            && self.generated.iter().all(|g| !pos.contains(&g.unordered()))
    }
}

fn clamp_score(s: f64) -> f64 {
    s.clamp(SCORE_EPS, 1.0 - SCORE_EPS)
}

/// `Σ_{pseudo} log D + Σ_{generated} log(1 − D)` with clamped scores.
pub fn value_function(disc: &DiscriminatorParams, store: &SampleStore, inputs: &PaperInputs) -> Result<f64> {
    if store.is_empty() {
        return Err(Error::Invalid("value function of an empty sample store".into()));
    }
    let d = disc.embed_all(inputs)?;
    let score = |pair: &LabeledPair| clamp_score(sigmoid(crate::embedding::dot(&d[pair.p], &d[pair.anchor])));
    let pos: f64 = store.pseudo.iter().map(|p| score(p).ln()).sum();
    let neg: f64 = store.generated.iter().map(|p| (1.0 - score(p)).ln()).sum();
    Ok(pos + neg)
}

/// One line of the structured run log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub value: f64,
    pub pseudo: usize,
    pub generated: usize,
    pub mean_d_pseudo: Option<f64>,
    pub mean_d_generated: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub disc: DiscriminatorParams,
    pub gen: GeneratorParams,
    pub log: Vec<IterationLog>,
    pub store: SampleStore,
    /// Pseudo-positive set after each outer iteration's refresh.
    pub pseudo_history: Vec<BTreeSet<LabeledPair>>,
}

fn mean_score(d: &[Vec<f64>], pairs: &BTreeSet<LabeledPair>) -> Option<f64> {
    (!pairs.is_empty()).then(|| {
        pairs
            .iter()
            .map(|p| sigmoid(crate::embedding::dot(&d[p.p], &d[p.anchor])))
            .sum::<f64>()
            / pairs.len() as f64
    })
}

/// Runs the adversarial loop from the given initial parameters.
///
/// A block with fewer than two papers is returned untouched. When the
/// network has no first-order paper pairs the generator side is skipped and
/// the discriminator is trained on content-similarity pseudo-positives only.
pub fn adversarial_train(
    hin: &HeterogeneousNetwork,
    inputs: &PaperInputs,
    mut disc: DiscriminatorParams,
    mut gen: GeneratorParams,
    config: &TrainConfig,
    parallel: bool,
) -> Result<TrainOutcome> {
    config.validate()?;
    let n = hin.num_papers();
    if inputs.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: inputs.len(),
        });
    }
    let mut outcome_log = Vec::new();
    let mut store = SampleStore::default();
    let mut pseudo_history = Vec::new();
    if n < 2 {
        log::warn!("block with {n} paper(s): nothing to train");
        return Ok(TrainOutcome {
            disc,
            gen,
            log: outcome_log,
            store,
            pseudo_history,
        });
    }

    let degenerate = PaperNetwork::build(&gen, hin)?.num_edges() == 0;
    if degenerate {
        log::warn!("network has no first-order paper pairs; training the discriminator on content similarity only");
    }

    let mut values: Vec<f64> = Vec::new();
    for iter in 0..config.max_outer_iters {
        store.generated.clear();

        if !degenerate {
            let net = PaperNetwork::build(&gen, hin)?;
            let trees = (0..n)
                .map(|a| build_spanning_tree(&net, a))
                .collect::<Result<Vec<_>>>()?;
            for step in 0..config.g_steps {
                let d = disc.embed_all(inputs)?;
                let walk = |anchor: NodeIx| -> Result<Vec<GeneratorSample>> {
                    let mut rng = seed::rng(config.seed, &[0x6E, iter as u64, step as u64, anchor as u64]);
                    let picked = sample_selection(&gen, hin, &trees[anchor], &mut rng)?;
                    Ok(picked
                        .into_iter()
                        .map(|p| {
                            let s = clamp_score(sigmoid(crate::embedding::dot(&d[p], &d[anchor])));
                            GeneratorSample {
                                p,
                                anchor,
                                reward: (1.0 - s).ln(),
                            }
                        })
                        .collect())
                };
                let per_anchor: Vec<Vec<GeneratorSample>> = if parallel {
                    (0..n).into_par_iter().map(walk).collect::<Result<_>>()?
                } else {
                    (0..n).map(walk).collect::<Result<_>>()?
                };
                let samples: Vec<GeneratorSample> = per_anchor.into_iter().flatten().collect();
                store
                    .generated
                    .extend(samples.iter().map(|s| LabeledPair::new(s.p, s.anchor, false)));
                update_g(&mut gen, hin, &trees, &samples, config.lr_g)?;
            }
        }

        store.pseudo = if degenerate {
            top_k_pairs(n, config.top_k, |p, q| cosine(inputs.u(p), inputs.u(q)))
        } else {
            crate::discriminator::select_pseudo_positives(&disc, inputs, config.top_k)?
        };
        store.enforce_disjoint();
        pseudo_history.push(store.pseudo.clone());

        let pos: Vec<LabeledPair> = store.pseudo.iter().copied().collect();
        let neg: Vec<LabeledPair> = store.generated.iter().copied().collect();
        for step in 0..config.d_steps {
            let mut rng = seed::rng(config.seed, &[0xDB, iter as u64, step as u64]);
            let batch = balanced_batch(&pos, &neg, config.batch_size, &mut rng);
            if !batch.is_empty() {
                // batch mean rather than sum, so lr_d is independent of batch size
                disc.update(&batch, inputs, config.lr_d / batch.len() as f64)?;
            }
        }

        let value = value_function(&disc, &store, inputs)?;
        if !value.is_finite() {
            return Err(Error::NonFinite(format!("value function at iteration {iter}")));
        }
        let d = disc.embed_all(inputs)?;
        let entry = IterationLog {
            iteration: iter + 1,
            value,
            pseudo: store.pseudo.len(),
            generated: store.generated.len(),
            mean_d_pseudo: mean_score(&d, &store.pseudo),
            mean_d_generated: mean_score(&d, &store.generated),
        };
        log::debug!("iteration {}: V = {value:.5}", entry.iteration);
        outcome_log.push(entry);

        values.push(value);
        let w = config.convergence_window;
        if values.len() > w {
            let recent = &values[values.len() - w - 1..];
            let mean_delta = recent.windows(2).map(|p| (p[1] - p[0]).abs()).sum::<f64>() / w as f64;
            if mean_delta < config.convergence_tol {
                break;
            }
        }
    }

    Ok(TrainOutcome {
        disc,
        gen,
        log: outcome_log,
        store,
        pseudo_history,
    })
}

/// Half the batch from each side, drawn with replacement. With no
/// negatives the whole batch comes from the positives.
fn balanced_batch<R: Rng + ?Sized>(
    pos: &[LabeledPair],
    neg: &[LabeledPair],
    batch_size: usize,
    rng: &mut R,
) -> Vec<LabeledPair> {
    let (n_pos, n_neg) = match (pos.is_empty(), neg.is_empty()) {
        (true, true) => return Vec::new(),
        (false, true) => (batch_size, 0),
        (true, false) => (0, batch_size),
        (false, false) => {
            let half = (batch_size / 2).max(1);
            (half, half)
        }
    };
    let mut batch = Vec::with_capacity(n_pos + n_neg);
    batch.extend((0..n_pos).map(|_| pos[rng.gen_range(0..pos.len())]));
    batch.extend((0..n_neg).map(|_| neg[rng.gen_range(0..neg.len())]));
    batch
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_of_half_scores() {
        // zero discriminator: every D is 0.5
        let disc = DiscriminatorParams::zeros(2, 3, 2);
        let inputs = PaperInputs::new(2, vec![0.1; 8], vec![0.2; 8]).unwrap();
        let mut store = SampleStore::default();
        store.pseudo.insert(LabeledPair::new(0, 1, true));
        store.pseudo.insert(LabeledPair::new(2, 3, true));
        store.generated.insert(LabeledPair::new(0, 2, false));
        store.generated.insert(LabeledPair::new(1, 3, false));
        let v = value_function(&disc, &store, &inputs).unwrap();
        assert!((v - 4.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!((v + 2.7726).abs() < 1e-4);

        store.generated.clear();
        let v = value_function(&disc, &store, &inputs).unwrap();
        assert!((v - 2.0 * 0.5f64.ln()).abs() < 1e-12);
        assert!(value_function(&disc, &SampleStore::default(), &inputs).is_err());
    }

    #[test]
    fn clamping_keeps_value_finite() {
        let mut disc = DiscriminatorParams::zeros(1, 1, 1);
        disc.b1 = vec![40.0];
        // d = tanh(40) = 1 for everyone: D = σ(1) for each pair, fine; push harder
        let inputs = PaperInputs::new(1, vec![0.0; 2], vec![0.0; 2]).unwrap();
        let mut store = SampleStore::default();
        store.generated.insert(LabeledPair::new(0, 1, false));
        assert!(value_function(&disc, &store, &inputs).unwrap().is_finite());
        assert_eq!(clamp_score(1.0), 1.0 - SCORE_EPS);
        assert_eq!(clamp_score(0.0), SCORE_EPS);
    }

    #[test]
    fn store_hygiene() {
        let mut store = SampleStore::default();
        store.pseudo.insert(LabeledPair::new(1, 0, true));
        store.generated.insert(LabeledPair::new(0, 1, false));
        store.generated.insert(LabeledPair::new(2, 1, false));
        assert!(!store.is_clean());
        store.enforce_disjoint();
        assert!(store.is_clean());
        assert_eq!(store.generated.len(), 1);
    }

    #[test]
    fn batches_are_balanced() {
        let pos = vec![LabeledPair::new(0, 1, true)];
        let neg = vec![LabeledPair::new(0, 2, false), LabeledPair::new(1, 2, false)];
        let mut rng = seed::rng(1, &[]);
        let b = balanced_batch(&pos, &neg, 8, &mut rng);
        assert_eq!(b.iter().filter(|p| p.label).count(), 4);
        assert_eq!(b.len(), 8);
        assert_eq!(balanced_batch(&pos, &[], 8, &mut rng).len(), 8);
        assert!(balanced_batch(&[], &[], 8, &mut rng).is_empty());
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            lr_d: -1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
