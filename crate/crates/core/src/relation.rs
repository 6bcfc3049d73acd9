//! Relation vectors for every network node: second-order biased random
//! walks (return parameter `p`, in-out parameter `q`) fed to skip-gram with
//! negative sampling. Walks ignore node types.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{HeterogeneousNetwork, NodeIx};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::seed;
use crate::sgns::{self, NegativeSampler};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WalkConfig {
    pub dim: usize,
    pub walks_per_node: usize,
    pub walk_length: usize,
    /// Return parameter.
    pub p: f64,
    /// In-out parameter.
    pub q: f64,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            dim: 64,
            walks_per_node: 10,
            walk_length: 40,
            p: 1.0,
            q: 1.0,
            window: 5,
            negatives: 5,
            epochs: 5,
            lr: 0.025,
            seed: 2,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0
            || self.walks_per_node == 0
            || self.window == 0
            || self.negatives == 0
            || self.epochs == 0
        {
            return Err(Error::Invalid("walk: counts must be >= 1".into()));
        }
        if self.walk_length < 2 {
            return Err(Error::Invalid("walk: walk_length must be >= 2".into()));
        }
        for (name, v) in [("p", self.p), ("q", self.q), ("lr", self.lr)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Invalid(format!("walk: {name} must be positive")));
            }
        }
        Ok(())
    }
}

/// Undirected graph with sorted neighbor lists.
pub trait Graph: Sync {
    fn num_nodes(&self) -> usize;
    fn neighbors(&self, node: NodeIx) -> &[NodeIx];
}

impl Graph for HeterogeneousNetwork {
    fn num_nodes(&self) -> usize {
        HeterogeneousNetwork::num_nodes(self)
    }

    fn neighbors(&self, node: NodeIx) -> &[NodeIx] {
        HeterogeneousNetwork::neighbors(self, node)
    }
}

/// Draws the next node given the current and previous node.
pub fn biased_step<G: Graph + ?Sized, R: Rng + ?Sized>(
    graph: &G,
    prev: Option<NodeIx>,
    cur: NodeIx,
    p: f64,
    q: f64,
    rng: &mut R,
) -> Option<NodeIx> {
    let nbrs = graph.neighbors(cur);
    if nbrs.is_empty() {
        return None;
    }
    let Some(prev) = prev else {
        return Some(nbrs[rng.gen_range(0..nbrs.len())]);
    };
    let prev_nbrs = graph.neighbors(prev);
    let weight = |x: NodeIx| {
        if x == prev {
            1.0 / p
        } else if prev_nbrs.binary_search(&x).is_ok() {
            1.0
        } else {
            1.0 / q
        }
    };
    let total: f64 = nbrs.iter().map(|&x| weight(x)).sum();
    let mut r = rng.gen::<f64>() * total;
    for &x in nbrs {
        r -= weight(x);
        if r < 0.0 {
            return Some(x);
        }
    }
    nbrs.last().copied()
}

/// `walks_per_node` walks from every node, ordered by (round, start node).
/// Each start node draws from its own RNG stream, so the parallel and
/// sequential paths produce identical walks.
pub fn generate_walks<G: Graph + ?Sized>(graph: &G, config: &WalkConfig, parallel: bool) -> Vec<Vec<NodeIx>> {
    let walk_from = |round: usize, start: NodeIx| {
        let mut rng = seed::rng(config.seed, &[0x3A1C, round as u64, start as u64]);
        let mut walk = Vec::with_capacity(config.walk_length);
        walk.push(start);
        let mut prev = None;
        while walk.len() < config.walk_length {
            let cur = *walk.last().unwrap();
            match biased_step(graph, prev, cur, config.p, config.q, &mut rng) {
                Some(next) => {
                    walk.push(next);
                    prev = Some(cur);
                }
                None => break,
            }
        }
        walk
    };
    let jobs: Vec<(usize, NodeIx)> = (0..config.walks_per_node)
        .flat_map(|r| (0..graph.num_nodes()).map(move |n| (r, n)))
        .collect();
    if parallel {
        jobs.par_iter().map(|&(r, n)| walk_from(r, n)).collect()
    } else {
        jobs.iter().map(|&(r, n)| walk_from(r, n)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct RelationModel {
    /// One row per node, in node-index order.
    pub nodes: EmbeddingTable,
    pub epoch_losses: Vec<f64>,
}

/// Skip-gram over node sequences. `node_ids[i]` names node `i`. Nodes that
/// never appear in a window (isolated nodes) keep their random
/// initialization.
pub fn train_relation(walks: &[Vec<NodeIx>], node_ids: &[String], config: &WalkConfig) -> Result<RelationModel> {
    config.validate()?;
    if walks.is_empty() {
        return Err(Error::Invalid("train_relation: no walks".into()));
    }
    let n = node_ids.len();
    let k = config.dim;
    let mut counts = vec![0u64; n];
    for w in walks {
        for &x in w {
            if x >= n {
                return Err(Error::UnknownNode(format!("node index {x}")));
            }
            counts[x] += 1;
        }
    }
    let sampler = NegativeSampler::new(&counts)?;
    let mut rng = seed::rng(config.seed, &[0x5E1]);
    let mut input = sgns::init_rows(&mut rng, n, k);
    let mut output = vec![0.0; n * k];

    let pairs_per_epoch: usize = walks
        .iter()
        .map(|w| {
            (0..w.len())
                .map(|i| (i + config.window).min(w.len() - 1) - i.saturating_sub(config.window))
                .sum::<usize>()
        })
        .sum();
    let total = pairs_per_epoch * config.epochs;
    let mut done = 0;
    let mut negs = Vec::with_capacity(config.negatives);
    let mut scratch = Vec::with_capacity(k);
    let mut row = vec![0.0; k];
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let mut loss = 0.0;
        let mut pairs = 0usize;
        for w in walks {
            for (i, &center) in w.iter().enumerate() {
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window).min(w.len() - 1);
                for (j, &ctx) in w.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let lr = sgns::decayed_lr(config.lr, done, total);
                    sampler.draw(&mut rng, ctx, config.negatives, &mut negs);
                    row.copy_from_slice(&input[center * k..(center + 1) * k]);
                    loss += sgns::sgd_step(&mut row, &mut output, ctx, &negs, lr, &mut scratch);
                    input[center * k..(center + 1) * k].copy_from_slice(&row);
                    pairs += 1;
                    done += 1;
                }
            }
        }
        let mean = if pairs == 0 { 0.0 } else { loss / pairs as f64 };
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!("relation loss at epoch {epoch}")));
        }
        epoch_losses.push(mean);
    }

    Ok(RelationModel {
        nodes: EmbeddingTable::from_rows(k, node_ids.to_vec(), input)?,
        epoch_losses,
    })
}

/// Walks and trains relation vectors for a whole network.
pub fn embed_network(hin: &HeterogeneousNetwork, config: &WalkConfig, parallel: bool) -> Result<RelationModel> {
    let walks = generate_walks(hin, config, parallel);
    let ids: Vec<String> = (0..hin.num_nodes()).map(|i| hin.node_id(i)).collect();
    train_relation(&walks, &ids, config)
}
