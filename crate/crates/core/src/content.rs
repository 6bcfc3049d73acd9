//! Content vectors for papers: a distributed bag-of-words paragraph model
//! trained with negative sampling. Each paper vector predicts the words in
//! every window `w[i-b..=i+b]` of its title/abstract sequence.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::PaperRecord;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::seed;
use crate::sgns::{self, NegativeSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContentConfig {
    pub dim: usize,
    pub window: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub lr: f64,
    pub min_count: u64,
    pub seed: u64,
}

impl Default for ContentConfig {
    fn default() -> Self {
        ContentConfig {
            dim: 64,
            window: 5,
            epochs: 20,
            negatives: 5,
            lr: 0.025,
            min_count: 2,
            seed: 1,
        }
    }
}

impl ContentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.epochs == 0 || self.negatives == 0 {
            return Err(Error::Invalid(
                "content: dim, window, epochs and negatives must be >= 1".into(),
            ));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Invalid("content: lr must be positive".into()));
        }
        Ok(())
    }
}

/// Lowercased alphanumeric tokens of the title, then the abstract.
pub fn tokenize(record: &PaperRecord) -> Vec<String> {
    let mut out = tokenize_text(&record.title);
    if let Some(a) = &record.r#abstract {
        out.extend(tokenize_text(a));
    }
    out
}

pub fn tokenize_text(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    min_count: u64,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Maps a token sequence to in-vocabulary indices, dropping the rest.
    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.index(t)).collect()
    }
}

/// Keeps tokens with frequency >= `min_count`, indexed by descending
/// frequency with ties broken by the token string.
pub fn build_vocab<S: AsRef<[String]>>(sequences: &[S], min_count: u64) -> Result<Vocabulary> {
    let mut freq: HashMap<&str, u64> = HashMap::new();
    for seq in sequences {
        for t in seq.as_ref() {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = freq.into_iter().filter(|&(_, c)| c >= min_count).collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let tokens: Vec<String> = kept.iter().map(|(t, _)| t.to_string()).collect();
    let counts = kept.iter().map(|&(_, c)| c).collect();
    let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
    Ok(Vocabulary {
        tokens,
        counts,
        index,
        min_count,
    })
}

/// A paper id with its token sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub paper_id: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn from_record(record: &PaperRecord) -> Self {
        Document {
            paper_id: record.id.clone(),
            tokens: tokenize(record),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContentModel {
    /// Paper vectors keyed `paper:<id>`.
    pub papers: EmbeddingTable,
    /// Mean loss per positive pair, one entry per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Trains paper content vectors. Papers whose sequence has no
/// in-vocabulary token get the zero vector.
pub fn train_content(docs: &[Document], vocab: &Vocabulary, config: &ContentConfig) -> Result<ContentModel> {
    config.validate()?;
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let k = config.dim;
    let encoded: Vec<Vec<usize>> = docs.iter().map(|d| vocab.encode(&d.tokens)).collect();
    let counts: Vec<u64> = (0..vocab.len()).map(|i| vocab.count(i)).collect();
    let sampler = NegativeSampler::new(&counts)?;

    let mut rng = seed::rng(config.seed, &[0xC0]);
    let mut papers = sgns::init_rows(&mut rng, docs.len(), k);
    let mut words = vec![0.0; vocab.len() * k];

    let pairs_per_epoch: usize = encoded.iter().map(|s| window_pairs(s.len(), config.window)).sum();
    let total = pairs_per_epoch * config.epochs;
    let mut done = 0usize;
    let mut order: Vec<usize> = (0..docs.len()).collect();
    let mut negs = Vec::with_capacity(config.negatives);
    let mut scratch = Vec::with_capacity(k);
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut n_pairs = 0usize;
        for &d in &order {
            let seq = &encoded[d];
            let row = &mut papers[d * k..(d + 1) * k];
            for i in 0..seq.len() {
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window).min(seq.len() - 1);
                for &target in &seq[lo..=hi] {
                    let lr = sgns::decayed_lr(config.lr, done, total);
                    sampler.draw(&mut rng, target, config.negatives, &mut negs);
                    epoch_loss += sgns::sgd_step(row, &mut words, target, &negs, lr, &mut scratch);
                    n_pairs += 1;
                    done += 1;
                }
            }
        }
        let mean = if n_pairs == 0 { 0.0 } else { epoch_loss / n_pairs as f64 };
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!("content loss at epoch {epoch}")));
        }
        log::debug!("content epoch {epoch}: mean loss {mean:.5}");
        epoch_losses.push(mean);
    }

    for (d, seq) in encoded.iter().enumerate() {
        if seq.is_empty() {
            papers[d * k..(d + 1) * k].fill(0.0);
        }
    }
    let ids = docs.iter().map(|d| format!("paper:{}", d.paper_id)).collect();
    Ok(ContentModel {
        papers: EmbeddingTable::from_rows(k, ids, papers)?,
        epoch_losses,
    })
}

fn window_pairs(len: usize, window: usize) -> usize {
    (0..len)
        .map(|i| (i + window).min(len.saturating_sub(1)) - i.saturating_sub(window) + 1)
        .sum()
}
