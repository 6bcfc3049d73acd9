//! In-memory end-to-end runs on planted blocks, with single-view baselines.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cluster::{cluster_hac, normalized, final_representation, pairwise_prf, PairwiseMetrics};
use crate::content::{build_vocab, train_content, Document};
use crate::corpus::{block_by_name, build_hin, NodeIx};
use crate::discriminator::LabeledPair;
use crate::error::{Error, Result};
use crate::pipeline::PipelineConfig;
use crate::relation::embed_network;
use crate::synthetic::{gen_synthetic, SyntheticSpec};
use crate::trainer::IterationLog;

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkResult {
    pub adversarial: PairwiseMetrics,
    pub content_only: PairwiseMetrics,
    pub relation_only: PairwiseMetrics,
    /// Normalized content and relation vectors side by side, before training.
    pub initial: PairwiseMetrics,
    /// Fraction of pseudo-positive pairs that share an author, per outer
    /// iteration.
    pub pseudo_precision: Vec<f64>,
    /// Fraction of the final generated pairs that share an author.
    pub generated_precision: f64,
    pub log: Vec<IterationLog>,
}

/// Precision of a pair set against per-paper labels.
pub fn pair_precision<L: PartialEq>(pairs: impl IntoIterator<Item = LabeledPair>, labels: &[L]) -> f64 {
    let (mut hit, mut total) = (0usize, 0usize);
    for pair in pairs {
        total += 1;
        if labels[pair.p] == labels[pair.anchor] {
            hit += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hit as f64 / total as f64
    }
}

fn score(
    name_ref: &str,
    ids: &[String],
    k: usize,
    config: &PipelineConfig,
    truth: &BTreeMap<String, String>,
    rep: impl Fn(NodeIx) -> Result<Vec<f64>>,
) -> Result<PairwiseMetrics> {
    let items = ids
        .iter()
        .enumerate()
        .map(|(p, id)| Ok((id.clone(), rep(p)?)))
        .collect::<Result<Vec<_>>>()?;
    let result = cluster_hac(name_ref, &items, k, config.cluster.linkage)?;
    pairwise_prf(&result, truth)
}

/// Generates the planted block, embeds it, trains it, and clusters it with
/// the final representation and with each input view alone.
pub fn run_synthetic(spec: &SyntheticSpec, config: &PipelineConfig) -> Result<BenchmarkResult> {
    config.validate()?;
    let corpus = gen_synthetic(spec)?;
    let truth = corpus.truth.clone();
    let mut blocks = block_by_name(corpus.records);
    if blocks.len() != 1 {
        return Err(Error::Invalid("synthetic corpus must form one block".into()));
    }
    let mut block = blocks.remove(0);
    block.attach_truth(&truth);
    let k = block.truth_k().unwrap_or(1);

    let docs: Vec<Document> = block.papers.iter().map(Document::from_record).collect();
    let seqs: Vec<&[String]> = docs.iter().map(|d| d.tokens.as_slice()).collect();
    let content_cfg = config.content_config();
    let vocab = build_vocab(&seqs, content_cfg.min_count)?;
    let content = train_content(&docs, &vocab, &content_cfg)?.papers;

    let hin = build_hin(&block);
    let relation = embed_network(&hin, &config.walk_config(&block.name_ref), config.parallel())?.nodes;
    let (hin, inputs, outcome) = crate::pipeline::train_block(config, &block, &content, &relation)?;
    let ids = hin.paper_ids();
    let labels: Vec<&String> = ids.iter().map(|id| &truth[id]).collect();

    let adversarial = score(&block.name_ref, ids, k, config, &truth, |p| {
        final_representation(&outcome.disc, &outcome.gen, inputs.u(p), inputs.v(p), p)
    })?;
    let content_only = score(&block.name_ref, ids, k, config, &truth, |p| Ok(inputs.u(p).to_vec()))?;
    let relation_only = score(&block.name_ref, ids, k, config, &truth, |p| Ok(inputs.v(p).to_vec()))?;
    let initial = score(&block.name_ref, ids, k, config, &truth, |p| {
        Ok(normalized(inputs.u(p)).into_iter().chain(normalized(inputs.v(p))).collect())
    })?;
    let pseudo_precision = outcome
        .pseudo_history
        .iter()
        .map(|set| pair_precision(set.iter().copied(), &labels))
        .collect();
    let generated_precision = pair_precision(outcome.store.generated.iter().copied(), &labels);
    Ok(BenchmarkResult {
        adversarial,
        content_only,
        relation_only,
        initial,
        pseudo_precision,
        generated_precision,
        log: outcome.log,
    })
}
