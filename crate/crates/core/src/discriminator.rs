//! Pairwise homogeneity discriminator.
//!
//! A two-layer tanh network maps the concatenated content and relation
//! vectors of a paper to `d`; two papers are scored by `σ(d_p · d_q)`.
//! Training ascends `Σ_{y=1} log D + Σ_{y=0} log(1 − D)` with plain SGD over
//! the network weights (the input vectors stay frozen).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;

use crate::cluster::normalized;
use crate::corpus::NodeIx;
use crate::embedding::{dot, EmbeddingTable};
use crate::error::{Error, Result};
use crate::seed;
use crate::sgns::{log_sigmoid, sigmoid};

/// Content and relation vectors of the papers of one block, indexed by
/// paper index.
#[derive(Debug, Clone, PartialEq)]
pub struct PaperInputs {
    dim: usize,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl PaperInputs {
    pub fn new(dim: usize, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() || (dim > 0 && !u.len().is_multiple_of(dim)) {
            return Err(Error::Shape {
                expected: u.len(),
                got: v.len(),
            });
        }
        Ok(PaperInputs { dim, u, v })
    }

    /// Looks up `paper:<id>` rows in the content and relation tables. Each
    /// row is scaled to unit length so the two views enter the network on an
    /// equal footing; zero rows stay zero.
    pub fn gather(paper_ids: &[String], content: &EmbeddingTable, relation: &EmbeddingTable) -> Result<Self> {
        if content.dim() != relation.dim() {
            return Err(Error::Shape {
                expected: content.dim(),
                got: relation.dim(),
            });
        }
        let mut u = Vec::with_capacity(paper_ids.len() * content.dim());
        let mut v = Vec::with_capacity(paper_ids.len() * content.dim());
        for id in paper_ids {
            let key = format!("paper:{id}");
            u.extend(normalized(content.require(&key)?));
            v.extend(normalized(relation.require(&key)?));
        }
        Ok(PaperInputs {
            dim: content.dim(),
            u,
            v,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.u.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn u(&self, p: NodeIx) -> &[f64] {
        &self.u[p * self.dim..(p + 1) * self.dim]
    }

    pub fn v(&self, p: NodeIx) -> &[f64] {
        &self.v[p * self.dim..(p + 1) * self.dim]
    }
}

/// A training pair; `label` true means homogeneous (pseudo-positive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabeledPair {
    pub p: NodeIx,
    pub anchor: NodeIx,
    pub label: bool,
}

impl LabeledPair {
    pub fn new(p: NodeIx, anchor: NodeIx, label: bool) -> Self {
        debug_assert_ne!(p, anchor);
        LabeledPair { p, anchor, label }
    }

    /// Order-free key of the pair.
    pub fn unordered(&self) -> (NodeIx, NodeIx) {
        (self.p.min(self.anchor), self.p.max(self.anchor))
    }
}

/// Weights of the discriminator network. Matrices are row-major with
/// `w0: input_dim × hidden` and `w1: hidden × out_dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorParams {
    pub input_dim: usize,
    pub hidden: usize,
    pub out_dim: usize,
    pub w0: Vec<f64>,
    pub b0: Vec<f64>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
}

struct Forward {
    x: Vec<f64>,
    h: Vec<f64>,
    d: Vec<f64>,
}

impl DiscriminatorParams {
    /// Uniform(±1/√fan_in) weights, zero biases. `k` is the dimension of
    /// each of the two input halves.
    pub fn init(k: usize, hidden: usize, out_dim: usize, seed: u64) -> Result<Self> {
        if k == 0 || hidden == 0 || out_dim == 0 {
            return Err(Error::Invalid("discriminator dims must be >= 1".into()));
        }
        let input_dim = 2 * k;
        let mut rng = seed::rng(seed, &[0xD15C]);
        let a0 = 1.0 / (input_dim as f64).sqrt();
        let a1 = 1.0 / (hidden as f64).sqrt();
        let w0 = (0..input_dim * hidden).map(|_| rng.gen_range(-a0..a0)).collect();
        let w1 = (0..hidden * out_dim).map(|_| rng.gen_range(-a1..a1)).collect();
        Ok(DiscriminatorParams {
            input_dim,
            hidden,
            out_dim,
            w0,
            b0: vec![0.0; hidden],
            w1,
            b1: vec![0.0; out_dim],
        })
    }

    pub fn zeros(k: usize, hidden: usize, out_dim: usize) -> Self {
        DiscriminatorParams {
            input_dim: 2 * k,
            hidden,
            out_dim,
            w0: vec![0.0; 2 * k * hidden],
            b0: vec![0.0; hidden],
            w1: vec![0.0; hidden * out_dim],
            b1: vec![0.0; out_dim],
        }
    }

    fn forward(&self, u: &[f64], v: &[f64]) -> Result<Forward> {
        if u.len() + v.len() != self.input_dim || u.len() != v.len() {
            return Err(Error::Shape {
                expected: self.input_dim,
                got: u.len() + v.len(),
            });
        }
        let x: Vec<f64> = u.iter().chain(v).copied().collect();
        let mut h = self.b0.clone();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let row = &self.w0[i * self.hidden..(i + 1) * self.hidden];
                for (hj, w) in h.iter_mut().zip(row) {
                    *hj += xi * w;
                }
            }
        }
        h.iter_mut().for_each(|a| *a = a.tanh());
        let mut d = self.b1.clone();
        for (i, &hi) in h.iter().enumerate() {
            let row = &self.w1[i * self.out_dim..(i + 1) * self.out_dim];
            for (dj, w) in d.iter_mut().zip(row) {
                *dj += hi * w;
            }
        }
        d.iter_mut().for_each(|z| *z = z.tanh());
        Ok(Forward { x, h, d })
    }

    /// The discriminator representation `d` of a paper.
    pub fn embed(&self, u: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(u, v)?.d)
    }

    /// `d` for every paper of a block, row-major.
    pub fn embed_all(&self, inputs: &PaperInputs) -> Result<Vec<Vec<f64>>> {
        (0..inputs.len()).map(|p| self.embed(inputs.u(p), inputs.v(p))).collect()
    }

    pub fn pair_score(&self, inputs: &PaperInputs, p: NodeIx, q: NodeIx) -> Result<f64> {
        let dp = self.embed(inputs.u(p), inputs.v(p))?;
        let dq = self.embed(inputs.u(q), inputs.v(q))?;
        score(&dp, &dq)
    }

    /// `Σ_{y=1} log D + Σ_{y=0} log(1 − D)` over a batch.
    pub fn objective(&self, batch: &[LabeledPair], inputs: &PaperInputs) -> Result<f64> {
        let mut total = 0.0;
        for pair in batch {
            let dp = self.embed(inputs.u(pair.p), inputs.v(pair.p))?;
            let dq = self.embed(inputs.u(pair.anchor), inputs.v(pair.anchor))?;
            let s = dot(&dp, &dq);
            total += if pair.label { log_sigmoid(s) } else { log_sigmoid(-s) };
        }
        Ok(total)
    }

    /// Gradient of [`Self::objective`] with respect to every weight.
    pub fn gradient(&self, batch: &[LabeledPair], inputs: &PaperInputs) -> Result<DiscriminatorParams> {
        let mut grad = DiscriminatorParams::zeros(self.input_dim / 2, self.hidden, self.out_dim);
        for pair in batch {
            let fp = self.forward(inputs.u(pair.p), inputs.v(pair.p))?;
            let fq = self.forward(inputs.u(pair.anchor), inputs.v(pair.anchor))?;
            let s = dot(&fp.d, &fq.d);
            let y = if pair.label { 1.0 } else { 0.0 };
            let gs = y - sigmoid(s);
            self.backward(&fp, &fq.d, gs, &mut grad);
            self.backward(&fq, &fp.d, gs, &mut grad);
        }
        Ok(grad)
    }

    /// Accumulates the gradient flowing into one tower, where the tower
    /// output `d` receives `gs * other`.
    fn backward(&self, f: &Forward, other: &[f64], gs: f64, grad: &mut DiscriminatorParams) {
        let gz: Vec<f64> = f
            .d
            .iter()
            .zip(other)
            .map(|(d, o)| gs * o * (1.0 - d * d))
            .collect();
        let mut gh = vec![0.0; self.hidden];
        for i in 0..self.hidden {
            let row = &self.w1[i * self.out_dim..(i + 1) * self.out_dim];
            let grow = &mut grad.w1[i * self.out_dim..(i + 1) * self.out_dim];
            for j in 0..self.out_dim {
                grow[j] += f.h[i] * gz[j];
                gh[i] += row[j] * gz[j];
            }
        }
        for (b, g) in grad.b1.iter_mut().zip(&gz) {
            *b += g;
        }
        let ga: Vec<f64> = gh.iter().zip(&f.h).map(|(g, h)| g * (1.0 - h * h)).collect();
        for (i, &xi) in f.x.iter().enumerate() {
            if xi != 0.0 {
                let grow = &mut grad.w0[i * self.hidden..(i + 1) * self.hidden];
                for (g, a) in grow.iter_mut().zip(&ga) {
                    *g += xi * a;
                }
            }
        }
        for (b, g) in grad.b0.iter_mut().zip(&ga) {
            *b += g;
        }
    }

    /// One gradient-ascent step on the batch objective.
    pub fn update(&mut self, batch: &[LabeledPair], inputs: &PaperInputs, lr: f64) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Invalid("update_d: empty batch".into()));
        }
        let grad = self.gradient(batch, inputs)?;
        if grad.values().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("discriminator gradient".into()));
        }
        for (w, g) in self.values_mut().zip(grad.values()) {
            *w += lr * g;
        }
        Ok(())
    }

    /// All weights in checkpoint order: w0, b0, w1, b1.
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.w0
            .iter()
            .chain(&self.b0)
            .chain(&self.w1)
            .chain(&self.b1)
            .copied()
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.w0
            .iter_mut()
            .chain(self.b0.iter_mut())
            .chain(self.w1.iter_mut())
            .chain(self.b1.iter_mut())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut matrix = |name: &str, data: &[f64], rows: usize, cols: usize| {
            let _ = writeln!(out, "{name} {rows} {cols}");
            for r in 0..rows {
                let line: Vec<String> = data[r * cols..(r + 1) * cols].iter().map(|x| x.to_string()).collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        };
        matrix("W0", &self.w0, self.input_dim, self.hidden);
        matrix("b0", &self.b0, 1, self.hidden);
        matrix("W1", &self.w1, self.hidden, self.out_dim);
        matrix("b1", &self.b1, 1, self.out_dim);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let mut section = |name: &str| -> Result<(usize, usize, Vec<f64>)> {
            let (i, header) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("missing section {name}"),
            })?;
            let bad = |message: String| Error::Parse { line: i + 1, message };
            let parts: Vec<&str> = header.split(' ').collect();
            if parts.len() != 3 || parts[0] != name {
                return Err(bad(format!("expected \"{name} rows cols\", found {header:?}")));
            }
            let rows: usize = parts[1].parse().map_err(|_| bad("bad row count".into()))?;
            let cols: usize = parts[2].parse().map_err(|_| bad("bad column count".into()))?;
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (j, line) = lines.next().ok_or_else(|| bad(format!("{name}: truncated")))?;
                let before = data.len();
                for f in line.split(' ') {
                    data.push(f.parse::<f64>().map_err(|_| Error::Parse {
                        line: j + 1,
                        message: format!("bad number {f:?}"),
                    })?);
                }
                if data.len() - before != cols {
                    return Err(Error::Parse {
                        line: j + 1,
                        message: format!("{name}: expected {cols} values"),
                    });
                }
            }
            Ok((rows, cols, data))
        };
        let (in_dim, hidden, w0) = section("W0")?;
        let (r, c0, b0) = section("b0")?;
        let (h1, out_dim, w1) = section("W1")?;
        let (r1, c1, b1) = section("b1")?;
        if r != 1 || r1 != 1 || c0 != hidden || h1 != hidden || c1 != out_dim || in_dim % 2 != 0 {
            return Err(Error::Invalid("discriminator checkpoint shapes are inconsistent".into()));
        }
        Ok(DiscriminatorParams {
            input_dim: in_dim,
            hidden,
            out_dim,
            w0,
            b0,
            w1,
            b1,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// `σ(d_p · d_q)`.
pub fn score(dp: &[f64], dq: &[f64]) -> Result<f64> {
    if dp.len() != dq.len() {
        return Err(Error::Shape {
            expected: dp.len(),
            got: dq.len(),
        });
    }
    Ok(sigmoid(dot(dp, dq)))
}

/// For every anchor, the `top_k` other papers by current score become
/// pseudo-positive pairs. Ties go to the lower paper index.
pub fn select_pseudo_positives(
    params: &DiscriminatorParams,
    inputs: &PaperInputs,
    top_k: usize,
) -> Result<BTreeSet<LabeledPair>> {
    let d = params.embed_all(inputs)?;
    Ok(top_k_pairs(inputs.len(), top_k, |p, q| dot(&d[p], &d[q])))
}

/// Shared top-k selection over an arbitrary symmetric affinity.
pub(crate) fn top_k_pairs(n: usize, top_k: usize, affinity: impl Fn(NodeIx, NodeIx) -> f64) -> BTreeSet<LabeledPair> {
    let mut out = BTreeSet::new();
    if n < 2 {
        return out;
    }
    let mut cands: Vec<(f64, NodeIx)> = Vec::with_capacity(n);
    for anchor in 0..n {
        cands.clear();
        cands.extend((0..n).filter(|&p| p != anchor).map(|p| (affinity(p, anchor), p)));
        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, p) in cands.iter().take(top_k) {
            out.insert(LabeledPair::new(p, anchor, true));
        }
    }
    out
}
