//! Relation-aware generator.
//!
//! Papers and entities carry generator vectors `g`. Two papers `p, q` that
//! share entities `T` have affinity
//!
//! ```text
//! A(p, q) = Σ_{t ∈ T} exp((g_p·g_t)(g_q·g_t))
//! ```
//!
//! which weighs the paper network. For an anchor paper the generator grows a
//! maximum-weight spanning tree, assigns each tree node the product of step
//! probabilities along its root path, and selects papers with a random walk
//! on the tree that stops at the first revisit. Updates follow the
//! score-function (policy-gradient) estimator with reward `log(1 − D)`.
//!
//! Affinities are handled in log space throughout; products of large dot
//! products would otherwise overflow `exp`.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};

use rand::Rng;

use crate::corpus::{sorted_intersection, HeterogeneousNetwork, NodeIx};
use crate::embedding::{dot, EmbeddingTable};
use crate::error::{Error, Result};

/// Generator vectors for every node of one network, indexed by node index.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorParams {
    dim: usize,
    num_papers: usize,
    rows: Vec<f64>,
}

impl GeneratorParams {
    /// Copies the relation vectors of every paper and entity of `hin`.
    pub fn init(relation: &EmbeddingTable, hin: &HeterogeneousNetwork) -> Result<Self> {
        let dim = relation.dim();
        let mut rows = Vec::with_capacity(hin.num_nodes() * dim);
        for node in 0..hin.num_nodes() {
            rows.extend_from_slice(relation.require(&hin.node_id(node))?);
        }
        Ok(GeneratorParams {
            dim,
            num_papers: hin.num_papers(),
            rows,
        })
    }

    /// Builds params from a row-major matrix over node indices.
    pub fn from_rows(dim: usize, num_papers: usize, rows: Vec<f64>) -> Result<Self> {
        if dim == 0 || !rows.len().is_multiple_of(dim) || rows.len() / dim < num_papers {
            return Err(Error::Shape {
                expected: num_papers * dim,
                got: rows.len(),
            });
        }
        Ok(GeneratorParams {
            dim,
            num_papers,
            rows,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_nodes(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn row(&self, node: NodeIx) -> &[f64] {
        &self.rows[node * self.dim..(node + 1) * self.dim]
    }

    pub fn row_mut(&mut self, node: NodeIx) -> &mut [f64] {
        &mut self.rows[node * self.dim..(node + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.rows
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.rows
    }

    /// Checkpoint table with namespaced node ids.
    pub fn to_table(&self, hin: &HeterogeneousNetwork) -> Result<EmbeddingTable> {
        let ids = (0..self.num_nodes()).map(|n| hin.node_id(n)).collect();
        EmbeddingTable::from_rows(self.dim, ids, self.rows.clone())
    }

    pub fn from_table(table: &EmbeddingTable, hin: &HeterogeneousNetwork) -> Result<Self> {
        Self::init(table, hin)
    }

    fn check_network(&self, hin: &HeterogeneousNetwork) -> Result<()> {
        if hin.num_nodes() != self.num_nodes() || hin.num_papers() != self.num_papers {
            return Err(Error::Shape {
                expected: hin.num_nodes(),
                got: self.num_nodes(),
            });
        }
        Ok(())
    }
}

/// `log Σ exp(x)`; `-inf` for an empty input.
fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn entity_term(params: &GeneratorParams, a: NodeIx, c: NodeIx, t: NodeIx) -> f64 {
    let gt = params.row(t);
    dot(params.row(a), gt) * dot(params.row(c), gt)
}

/// `log A(a, c)` over the given shared entities.
fn log_affinity_over(params: &GeneratorParams, a: NodeIx, c: NodeIx, shared: &[NodeIx]) -> f64 {
    log_sum_exp(shared.iter().map(|&t| entity_term(params, a, c, t)))
}

/// `log A(p, q)`, or `None` when the papers share no entity.
pub fn log_affinity(params: &GeneratorParams, hin: &HeterogeneousNetwork, p: NodeIx, q: NodeIx) -> Result<Option<f64>> {
    let shared = hin.shared_entities(p, q)?;
    Ok((!shared.is_empty()).then(|| log_affinity_over(params, p, q, &shared)))
}

/// Probability that first-order neighbor `p` is homogeneous with `anchor`,
/// normalized over the anchor's first-order neighborhood.
pub fn pair_prob(params: &GeneratorParams, hin: &HeterogeneousNetwork, p: NodeIx, anchor: NodeIx) -> Result<f64> {
    params.check_network(hin)?;
    let nbrs = hin.first_order_neighbors(anchor)?;
    if nbrs.is_empty() {
        return Err(Error::Invalid(format!("paper {anchor} has no first-order neighbors")));
    }
    if !nbrs.contains(&p) {
        return Err(Error::Invalid(format!("paper {p} is not a first-order neighbor of {anchor}")));
    }
    let mut target = f64::NEG_INFINITY;
    let mut logs = Vec::with_capacity(nbrs.len());
    for &q in &nbrs {
        let la = log_affinity_over(params, q, anchor, &hin.shared_entities(q, anchor)?);
        if q == p {
            target = la;
        }
        logs.push(la);
    }
    Ok((target - log_sum_exp(logs)).exp())
}

/// Undirected paper graph; an edge joins every first-order pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperNetwork {
    adjacency: Vec<Vec<(NodeIx, f64)>>,
}

impl PaperNetwork {
    /// Edge weights are the symmetric affinities `A(p, q)`.
    pub fn build(params: &GeneratorParams, hin: &HeterogeneousNetwork) -> Result<Self> {
        params.check_network(hin)?;
        let n = hin.num_papers();
        let mut adjacency = vec![Vec::new(); n];
        for p in 0..n {
            for q in hin.first_order_neighbors(p)? {
                if q > p {
                    let shared = sorted_intersection(hin.neighbors(p), hin.neighbors(q));
                    let lw = log_affinity_over(params, p, q, &shared);
                    adjacency[p].push((q, lw));
                    adjacency[q].push((p, lw));
                }
            }
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(q, _)| q);
        }
        Ok(PaperNetwork { adjacency })
    }

    /// Network over `n` papers from explicit positive weights.
    pub fn from_weights(n: usize, edges: &[(NodeIx, NodeIx, f64)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(p, q, w) in edges {
            if p >= n || q >= n || p == q {
                return Err(Error::Invalid(format!("bad edge ({p}, {q})")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Invalid(format!("edge ({p}, {q}) weight {w} must be positive")));
            }
            if adjacency[p].iter().any(|&(x, _)| x == q) {
                return Err(Error::Invalid(format!("duplicate edge ({p}, {q})")));
            }
            adjacency[p].push((q, w.ln()));
            adjacency[q].push((p, w.ln()));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(q, _)| q);
        }
        Ok(PaperNetwork { adjacency })
    }

    pub fn num_papers(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn log_weight(&self, p: NodeIx, q: NodeIx) -> Option<f64> {
        self.adjacency
            .get(p)?
            .binary_search_by_key(&q, |&(x, _)| x)
            .ok()
            .map(|i| self.adjacency[p][i].1)
    }

    pub fn weight(&self, p: NodeIx, q: NodeIx) -> Option<f64> {
        self.log_weight(p, q).map(f64::exp)
    }

    /// `(neighbor, log weight)` pairs sorted by neighbor.
    pub fn neighbors(&self, p: NodeIx) -> &[(NodeIx, f64)] {
        &self.adjacency[p]
    }

    /// All edges `(p, q, weight)` with `p < q`.
    pub fn edges(&self) -> Vec<(NodeIx, NodeIx, f64)> {
        let mut out = Vec::new();
        for (p, list) in self.adjacency.iter().enumerate() {
            for &(q, lw) in list {
                if p < q {
                    out.push((p, q, lw.exp()));
                }
            }
        }
        out
    }
}

/// Spanning tree of the anchor's connected component, rooted at the anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanningTree {
    root: NodeIx,
    order: Vec<NodeIx>,
    parent: BTreeMap<NodeIx, NodeIx>,
    children: BTreeMap<NodeIx, Vec<NodeIx>>,
}

impl SpanningTree {
    pub fn root(&self) -> NodeIx {
        self.root
    }

    /// Nodes in insertion order, root first.
    pub fn nodes(&self) -> &[NodeIx] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn contains(&self, node: NodeIx) -> bool {
        node == self.root || self.parent.contains_key(&node)
    }

    pub fn parent(&self, node: NodeIx) -> Option<NodeIx> {
        self.parent.get(&node).copied()
    }

    pub fn children(&self, node: NodeIx) -> &[NodeIx] {
        self.children.get(&node).map_or(&[], Vec::as_slice)
    }

    /// Parent first, then children in insertion order.
    pub fn tree_neighbors(&self, node: NodeIx) -> Vec<NodeIx> {
        self.parent(node)
            .into_iter()
            .chain(self.children(node).iter().copied())
            .collect()
    }

    /// `(parent, child)` pairs in insertion order.
    pub fn edges(&self) -> Vec<(NodeIx, NodeIx)> {
        self.order[1..].iter().map(|&c| (self.parent[&c], c)).collect()
    }

    /// Root-to-node path, both ends included.
    pub fn path_to(&self, node: NodeIx) -> Result<Vec<NodeIx>> {
        if !self.contains(node) {
            return Err(Error::UnknownNode(format!("paper {node} is not in the tree")));
        }
        let mut path = vec![node];
        let mut cur = node;
        while let Some(p) = self.parent(cur) {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Ok(path)
    }
}

#[derive(PartialEq)]
struct Frontier {
    log_weight: f64,
    child: NodeIx,
    parent: NodeIx,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    // max-heap: higher weight, then lower child, then lower parent
    fn cmp(&self, other: &Self) -> Ordering {
        self.log_weight
            .total_cmp(&other.log_weight)
            .then_with(|| Reverse(self.child).cmp(&Reverse(other.child)))
            .then_with(|| Reverse(self.parent).cmp(&Reverse(other.parent)))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Prim-style maximum-weight spanning tree grown from `root`: repeatedly
/// attach the heaviest edge leaving the tree.
pub fn build_spanning_tree(net: &PaperNetwork, root: NodeIx) -> Result<SpanningTree> {
    if root >= net.num_papers() {
        return Err(Error::UnknownNode(format!("paper {root}")));
    }
    let mut in_tree = vec![false; net.num_papers()];
    let mut tree = SpanningTree {
        root,
        order: vec![root],
        parent: BTreeMap::new(),
        children: BTreeMap::new(),
    };
    in_tree[root] = true;
    let mut heap = BinaryHeap::new();
    let push_edges = |heap: &mut BinaryHeap<Frontier>, from: NodeIx, in_tree: &[bool]| {
        for &(to, lw) in net.neighbors(from) {
            if !in_tree[to] {
                heap.push(Frontier {
                    log_weight: lw,
                    child: to,
                    parent: from,
                });
            }
        }
    };
    push_edges(&mut heap, root, &in_tree);
    while let Some(Frontier { child, parent, .. }) = heap.pop() {
        if in_tree[child] {
            continue;
        }
        in_tree[child] = true;
        tree.order.push(child);
        tree.parent.insert(child, parent);
        tree.children.entry(parent).or_default().push(child);
        push_edges(&mut heap, child, &in_tree);
    }
    Ok(tree)
}

/// Step distribution from `cur` over its tree neighbors: affinities
/// `A(next, cur)` renormalized. Returns `(next, log prob)` pairs.
pub fn step_distribution(
    params: &GeneratorParams,
    hin: &HeterogeneousNetwork,
    tree: &SpanningTree,
    cur: NodeIx,
) -> Result<Vec<(NodeIx, f64)>> {
    let nbrs = tree.tree_neighbors(cur);
    let mut logs = Vec::with_capacity(nbrs.len());
    for &m in &nbrs {
        let shared = hin.shared_entities(m, cur)?;
        if shared.is_empty() {
            return Err(Error::Invalid(format!("tree edge ({cur}, {m}) has no shared entity")));
        }
        logs.push(log_affinity_over(params, m, cur, &shared));
    }
    let z = log_sum_exp(logs.iter().copied());
    Ok(nbrs.into_iter().zip(logs).map(|(m, l)| (m, l - z)).collect())
}

pub fn step_prob(
    params: &GeneratorParams,
    hin: &HeterogeneousNetwork,
    tree: &SpanningTree,
    cur: NodeIx,
    next: NodeIx,
) -> Result<f64> {
    step_distribution(params, hin, tree, cur)?
        .into_iter()
        .find(|&(m, _)| m == next)
        .map(|(_, l)| l.exp())
        .ok_or_else(|| Error::Invalid(format!("{next} is not a tree neighbor of {cur}")))
}

/// `log G(p | root)`: sum of log step probabilities along the root path.
pub fn log_g_likelihood(
    params: &GeneratorParams,
    hin: &HeterogeneousNetwork,
    tree: &SpanningTree,
    p: NodeIx,
) -> Result<f64> {
    let path = tree.path_to(p)?;
    let mut total = 0.0;
    for w in path.windows(2) {
        let dist = step_distribution(params, hin, tree, w[0])?;
        total += dist.iter().find(|&&(m, _)| m == w[1]).map(|&(_, l)| l).unwrap_or(f64::NEG_INFINITY);
    }
    Ok(total)
}

pub fn g_likelihood(params: &GeneratorParams, hin: &HeterogeneousNetwork, tree: &SpanningTree, p: NodeIx) -> Result<f64> {
    log_g_likelihood(params, hin, tree, p).map(f64::exp)
}

/// Halt-on-revisit walk from the root. Returns the visited non-root papers
/// in visit order. The walk is capped at `tree.len()` steps.
pub fn sample_selection<R: Rng + ?Sized>(
    params: &GeneratorParams,
    hin: &HeterogeneousNetwork,
    tree: &SpanningTree,
    rng: &mut R,
) -> Result<Vec<NodeIx>> {
    let mut visited = vec![tree.root()];
    let mut cur = tree.root();
    for _ in 0..tree.len() {
        let dist = step_distribution(params, hin, tree, cur)?;
        if dist.is_empty() {
            break;
        }
        let mut r: f64 = rng.gen();
        let mut next = dist.last().unwrap().0;
        for &(m, l) in &dist {
            r -= l.exp();
            if r < 0.0 {
                next = m;
                break;
            }
        }
        if visited.contains(&next) {
            break;
        }
        visited.push(next);
        cur = next;
    }
    visited.remove(0);
    Ok(visited)
}

/// Sparse gradient over generator rows.
pub type SparseGrad = BTreeMap<NodeIx, Vec<f64>>;

fn add_scaled(grad: &mut SparseGrad, node: NodeIx, scale: f64, v: &[f64]) {
    let row = grad.entry(node).or_insert_with(|| vec![0.0; v.len()]);
    for (r, x) in row.iter_mut().zip(v) {
        *r += scale * x;
    }
}

/// Adds `coef · ∇ log A(a, c)`.
fn add_log_affinity_grad(
    params: &GeneratorParams,
    a: NodeIx,
    c: NodeIx,
    shared: &[NodeIx],
    coef: f64,
    grad: &mut SparseGrad,
) {
    let terms: Vec<f64> = shared.iter().map(|&t| entity_term(params, a, c, t)).collect();
    let z = log_sum_exp(terms.iter().copied());
    let (ga, gc) = (params.row(a).to_vec(), params.row(c).to_vec());
    for (&t, s) in shared.iter().zip(&terms) {
        let w = coef * (s - z).exp();
        let gt = params.row(t).to_vec();
        let at = dot(&ga, &gt);
        let ct = dot(&gc, &gt);
        add_scaled(grad, a, w * ct, &gt);
        add_scaled(grad, c, w * at, &gt);
        add_scaled(grad, t, w * ct, &ga);
        add_scaled(grad, t, w * at, &gc);
    }
}

/// `∇ log G(p | root)` with the tree held fixed.
pub fn log_likelihood_grad(
    params: &GeneratorParams,
    hin: &HeterogeneousNetwork,
    tree: &SpanningTree,
    p: NodeIx,
) -> Result<SparseGrad> {
    let path = tree.path_to(p)?;
    let mut grad = SparseGrad::new();
    for w in path.windows(2) {
        let (cur, next) = (w[0], w[1]);
        add_log_affinity_grad(params, next, cur, &hin.shared_entities(next, cur)?, 1.0, &mut grad);
        for (m, lp) in step_distribution(params, hin, tree, cur)? {
            add_log_affinity_grad(params, m, cur, &hin.shared_entities(m, cur)?, -lp.exp(), &mut grad);
        }
    }
    Ok(grad)
}

/// One selected paper with its reward `log(1 − D(p, anchor))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSample {
    pub p: NodeIx,
    pub anchor: NodeIx,
    pub reward: f64,
}

/// One policy-gradient descent step on the value function:
/// `θ ← θ − lr · mean(reward · ∇ log G(p | anchor))`.
///
/// `trees[anchor]` must be the tree the sample was drawn from.
pub fn update_g(
    params: &mut GeneratorParams,
    hin: &HeterogeneousNetwork,
    trees: &[SpanningTree],
    samples: &[GeneratorSample],
    lr: f64,
) -> Result<()> {
    if samples.is_empty() {
        return Ok(());
    }
    let mut total = SparseGrad::new();
    for s in samples {
        if !s.reward.is_finite() {
            return Err(Error::NonFinite(format!("reward for pair ({}, {})", s.p, s.anchor)));
        }
        if s.reward == 0.0 {
            continue;
        }
        let tree = trees
            .get(s.anchor)
            .ok_or_else(|| Error::Invalid(format!("no tree for anchor {}", s.anchor)))?;
        for (node, g) in log_likelihood_grad(params, hin, tree, s.p)? {
            add_scaled(&mut total, node, s.reward, &g);
        }
    }
    let scale = lr / samples.len() as f64;
    for (node, g) in &total {
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("generator gradient".into()));
        }
        for (w, gi) in params.row_mut(*node).iter_mut().zip(g) {
            *w -= scale * gi;
        }
    }
    Ok(())
}
