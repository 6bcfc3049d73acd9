//! Configuration, on-disk artifacts, and the runnable pipeline stages.
//!
//! Every stage reads the artifacts of the stages before it from the output
//! directory, so stages can be run one at a time or all at once:
//!
//! ```text
//! <output>/
//!   corpus.jsonl          ingest
//!   blocks.json           ingest
//!   content.emb           embed-content
//!   block-0000/
//!     relation.emb        embed-relation
//!     discriminator.ckpt  train
//!     generator.emb       train
//!     run_log.jsonl       train
//!   clusters.json         cluster
//!   report.json           evaluate
//! ```
//!
//! Component seeds are derived from the global seed; per-block seeds add the
//! stable hash of the block's name reference.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{cluster_hac, final_representation, macro_average, pairwise_prf, ClusteringResult, Linkage, PairwiseMetrics};
use crate::content::{build_vocab, train_content, ContentConfig, Document};
use crate::corpus::{block_by_name, build_hin, load_records, parse_records, write_records, NameBlock};
use crate::discriminator::{DiscriminatorParams, PaperInputs};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::generator::GeneratorParams;
use crate::relation::{embed_network, WalkConfig};
use crate::seed;
use crate::trainer::{adversarial_train, TrainConfig, TrainOutcome};

pub const SEED_ENV: &str = "NAME_DISAMBIG_SEED";
pub const OUTPUT_ENV: &str = "NAME_DISAMBIG_OUTPUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Deterministic,
    Parallel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiscriminatorDims {
    /// Defaults to twice the embedding dimension.
    pub hidden: Option<usize>,
    /// Defaults to the embedding dimension.
    pub out_dim: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClusterConfig {
    pub linkage: Linkage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub input: Option<PathBuf>,
    /// JSON object mapping paper id to author label.
    pub truth: Option<PathBuf>,
    /// JSON object mapping name reference to cluster count, used for blocks
    /// without truth labels.
    pub k_file: Option<PathBuf>,
    pub output: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub mode: Mode,
    pub content: ContentConfig,
    pub walk: WalkConfig,
    pub discriminator: DiscriminatorDims,
    pub train: TrainConfig,
    pub cluster: ClusterConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: None,
            truth: None,
            k_file: None,
            output: PathBuf::from("out"),
            seed: 42,
            threads: None,
            mode: Mode::Deterministic,
            content: ContentConfig::default(),
            walk: WalkConfig::default(),
            discriminator: DiscriminatorDims::default(),
            train: TrainConfig::default(),
            cluster: ClusterConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Applies the seed and output-directory environment overrides.
    pub fn apply_env(&mut self) -> Result<()> {
        if let Ok(s) = std::env::var(SEED_ENV) {
            self.seed = s
                .parse()
                .map_err(|_| Error::Invalid(format!("{SEED_ENV}={s:?} is not an integer")))?;
        }
        if let Ok(o) = std::env::var(OUTPUT_ENV) {
            self.output = PathBuf::from(o);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.content.validate()?;
        self.walk.validate()?;
        self.train.validate()?;
        if self.walk.dim != self.content.dim {
            return Err(Error::Invalid(format!(
                "walk.dim ({}) must equal content.dim ({})",
                self.walk.dim, self.content.dim
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::Invalid("threads must be >= 1".into()));
        }
        Ok(())
    }

    pub fn parallel(&self) -> bool {
        self.mode == Mode::Parallel
    }

    fn hidden(&self) -> usize {
        self.discriminator.hidden.unwrap_or(2 * self.content.dim)
    }

    fn out_dim(&self) -> usize {
        self.discriminator.out_dim.unwrap_or(self.content.dim)
    }

    pub fn content_config(&self) -> ContentConfig {
        ContentConfig {
            seed: seed::derive(self.seed, &[0xC0]),
            ..self.content.clone()
        }
    }

    pub fn walk_config(&self, name_ref: &str) -> WalkConfig {
        WalkConfig {
            seed: seed::derive(seed::block_seed(self.seed, name_ref), &[0xA1]),
            ..self.walk.clone()
        }
    }

    pub fn train_config(&self, name_ref: &str) -> TrainConfig {
        TrainConfig {
            seed: seed::derive(seed::block_seed(self.seed, name_ref), &[0x7A]),
            ..self.train.clone()
        }
    }

    pub fn discriminator_seed(&self, name_ref: &str) -> u64 {
        seed::derive(seed::block_seed(self.seed, name_ref), &[0xD1])
    }
}

/// Artifact paths under an output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn corpus(&self) -> PathBuf {
        self.root.join("corpus.jsonl")
    }

    pub fn blocks(&self) -> PathBuf {
        self.root.join("blocks.json")
    }

    pub fn content(&self) -> PathBuf {
        self.root.join("content.emb")
    }

    pub fn block_dir(&self, index: usize) -> PathBuf {
        self.root.join(format!("block-{index:04}"))
    }

    pub fn relation(&self, index: usize) -> PathBuf {
        self.block_dir(index).join("relation.emb")
    }

    pub fn discriminator(&self, index: usize) -> PathBuf {
        self.block_dir(index).join("discriminator.ckpt")
    }

    pub fn generator(&self, index: usize) -> PathBuf {
        self.block_dir(index).join("generator.emb")
    }

    pub fn run_log(&self, index: usize) -> PathBuf {
        self.block_dir(index).join("run_log.jsonl")
    }

    pub fn clusters(&self) -> PathBuf {
        self.root.join("clusters.json")
    }

    pub fn report(&self) -> PathBuf {
        self.root.join("report.json")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEntry {
    pub index: usize,
    pub name_ref: String,
    pub papers: usize,
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameReport {
    pub name_ref: String,
    pub k: usize,
    pub clusters: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MacroBlock {
    pub names: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub names: Vec<NameReport>,
    #[serde(rename = "macro", default, skip_serializing_if = "Option::is_none")]
    pub macro_avg: Option<MacroBlock>,
}

impl Report {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Reads a truth file: a JSON object mapping paper id to author label.
pub fn read_truth(path: &Path) -> Result<BTreeMap<String, String>> {
    read_json(path)
}

pub fn write_truth(path: &Path, truth: &BTreeMap<String, String>) -> Result<()> {
    write_json(path, truth)
}

fn in_pool<T: Send>(config: &PipelineConfig, f: impl FnOnce() -> T + Send) -> Result<T> {
    match config.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Ingest: validates the input corpus and writes it in block order.
pub fn ingest(config: &PipelineConfig) -> Result<Vec<NameBlock>> {
    let run = || -> Result<Vec<NameBlock>> {
        let input = config
            .input
            .as_deref()
            .ok_or_else(|| Error::Invalid("no input corpus given".into()))?;
        if !input.exists() {
            return Err(Error::MissingArtifact(input.to_path_buf()));
        }
        let records = load_records(input)?;
        let blocks = block_by_name(records);
        let layout = Layout::new(&config.output);
        create_dir(layout.root())?;
        let ordered: Vec<_> = blocks.iter().flat_map(|b| b.papers.iter().cloned()).collect();
        write_records(&layout.corpus(), &ordered)?;
        let entries: Vec<BlockEntry> = blocks
            .iter()
            .enumerate()
            .map(|(i, b)| BlockEntry {
                index: i,
                name_ref: b.name_ref.clone(),
                papers: b.len(),
                dir: format!("block-{i:04}"),
            })
            .collect();
        write_json(&layout.blocks(), &entries)?;
        Ok(blocks)
    };
    run().map_err(|e| e.in_stage("ingest"))
}

/// Loads the ingested blocks, attaching truth when configured.
pub fn load_blocks(config: &PipelineConfig) -> Result<Vec<NameBlock>> {
    let layout = Layout::new(&config.output);
    let path = layout.corpus();
    if !path.exists() {
        return Err(Error::MissingArtifact(path));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut blocks = block_by_name(parse_records(&text)?);
    if let Some(t) = &config.truth {
        let truth = read_truth(t)?;
        for b in &mut blocks {
            if !b.attach_truth(&truth) {
                log::warn!("truth does not cover block {:?}; it will not be evaluated", b.name_ref);
            }
        }
    }
    Ok(blocks)
}

/// Content vectors for every paper of the corpus.
pub fn embed_content(config: &PipelineConfig) -> Result<EmbeddingTable> {
    let run = || -> Result<EmbeddingTable> {
        let blocks = load_blocks(config)?;
        let docs: Vec<Document> = blocks
            .iter()
            .flat_map(|b| b.papers.iter().map(Document::from_record))
            .collect();
        let cfg = config.content_config();
        let table = if docs.is_empty() {
            EmbeddingTable::new(cfg.dim)
        } else {
            let seqs: Vec<&[String]> = docs.iter().map(|d| d.tokens.as_slice()).collect();
            match build_vocab(&seqs, cfg.min_count) {
                Ok(vocab) => train_content(&docs, &vocab, &cfg)?.papers,
                Err(Error::EmptyVocabulary) => {
                    log::warn!("empty vocabulary; every content vector is zero");
                    let ids = docs.iter().map(|d| format!("paper:{}", d.paper_id)).collect();
                    EmbeddingTable::from_rows(cfg.dim, ids, vec![0.0; docs.len() * cfg.dim])?
                }
                Err(e) => return Err(e),
            }
        };
        table.write(&Layout::new(&config.output).content())?;
        Ok(table)
    };
    run().map_err(|e| e.in_stage("embed-content"))
}

/// Relation vectors for every node of every block.
pub fn embed_relation(config: &PipelineConfig) -> Result<()> {
    let run = || -> Result<()> {
        let blocks = load_blocks(config)?;
        let layout = Layout::new(&config.output);
        let job = |(i, block): (usize, &NameBlock)| -> Result<()> {
            let hin = build_hin(block);
            let model = embed_network(&hin, &config.walk_config(&block.name_ref), config.parallel())?;
            create_dir(&layout.block_dir(i))?;
            model.nodes.write(&layout.relation(i))
        };
        if config.parallel() {
            in_pool(config, || blocks.par_iter().enumerate().try_for_each(job))?
        } else {
            blocks.iter().enumerate().try_for_each(job)
        }
    };
    run().map_err(|e| e.in_stage("embed-relation"))
}

/// Trains one block from its embeddings.
pub fn train_block(
    config: &PipelineConfig,
    block: &NameBlock,
    content: &EmbeddingTable,
    relation: &EmbeddingTable,
) -> Result<(crate::corpus::HeterogeneousNetwork, PaperInputs, TrainOutcome)> {
    let hin = build_hin(block);
    let inputs = PaperInputs::gather(hin.paper_ids(), content, relation)?;
    let disc = DiscriminatorParams::init(
        content.dim(),
        config.hidden(),
        config.out_dim(),
        config.discriminator_seed(&block.name_ref),
    )?;
    let gen = GeneratorParams::init(relation, &hin)?;
    let outcome = adversarial_train(
        &hin,
        &inputs,
        disc,
        gen,
        &config.train_config(&block.name_ref),
        config.parallel(),
    )?;
    Ok((hin, inputs, outcome))
}

/// Adversarial training for every block.
pub fn train(config: &PipelineConfig) -> Result<()> {
    let run = || -> Result<()> {
        let blocks = load_blocks(config)?;
        let layout = Layout::new(&config.output);
        let content = EmbeddingTable::read(&layout.content())?;
        let job = |(i, block): (usize, &NameBlock)| -> Result<()> {
            let relation = EmbeddingTable::read(&layout.relation(i))?;
            let (hin, _, outcome) = train_block(config, block, &content, &relation)?;
            outcome.disc.write(&layout.discriminator(i))?;
            outcome.gen.to_table(&hin)?.write(&layout.generator(i))?;
            let mut log = String::new();
            for entry in &outcome.log {
                log.push_str(&serde_json::to_string(entry)?);
                log.push('\n');
            }
            let path = layout.run_log(i);
            fs::write(&path, log).map_err(|e| Error::io(&path, e))
        };
        if config.parallel() {
            in_pool(config, || blocks.par_iter().enumerate().try_for_each(job))?
        } else {
            blocks.iter().enumerate().try_for_each(job)
        }
    };
    run().map_err(|e| e.in_stage("train"))
}

/// Final representations of a block's papers, keyed by paper id.
pub fn block_representations(
    block: &NameBlock,
    content: &EmbeddingTable,
    relation: &EmbeddingTable,
    disc: &DiscriminatorParams,
    gen_table: &EmbeddingTable,
) -> Result<Vec<(String, Vec<f64>)>> {
    let hin = build_hin(block);
    let inputs = PaperInputs::gather(hin.paper_ids(), content, relation)?;
    let gen = GeneratorParams::from_table(gen_table, &hin)?;
    hin.paper_ids()
        .iter()
        .enumerate()
        .map(|(p, id)| Ok((id.clone(), final_representation(disc, &gen, inputs.u(p), inputs.v(p), p)?)))
        .collect()
}

fn cluster_count(block: &NameBlock, k_file: Option<&BTreeMap<String, usize>>) -> Result<usize> {
    if let Some(k) = block.truth_k() {
        return Ok(k);
    }
    k_file
        .and_then(|m| m.get(&block.name_ref).copied())
        .ok_or_else(|| Error::Invalid(format!("no cluster count for {:?}: supply truth or a k file", block.name_ref)))
}

/// HAC over final representations; writes `clusters.json`.
pub fn cluster(config: &PipelineConfig) -> Result<Report> {
    let run = || -> Result<Report> {
        let blocks = load_blocks(config)?;
        let layout = Layout::new(&config.output);
        let k_file: Option<BTreeMap<String, usize>> = config.k_file.as_deref().map(read_json).transpose()?;
        let content = EmbeddingTable::read(&layout.content())?;
        let mut names = Vec::with_capacity(blocks.len());
        for (i, block) in blocks.iter().enumerate() {
            let relation = EmbeddingTable::read(&layout.relation(i))?;
            let disc = DiscriminatorParams::read(&layout.discriminator(i))?;
            let gen = EmbeddingTable::read(&layout.generator(i))?;
            let reps = block_representations(block, &content, &relation, &disc, &gen)?;
            let k = cluster_count(block, k_file.as_ref())?;
            let result = cluster_hac(&block.name_ref, &reps, k, config.cluster.linkage)?;
            names.push(NameReport {
                name_ref: result.name_ref,
                k: result.k,
                clusters: result.clusters,
                precision: None,
                recall: None,
                f1: None,
            });
        }
        let report = Report { names, macro_avg: None };
        report.write(&layout.clusters())?;
        Ok(report)
    };
    run().map_err(|e| e.in_stage("cluster"))
}

/// Pairwise metrics of `clusters.json` against the truth; writes
/// `report.json`. Names without truth keep their clusters and carry no
/// metrics.
pub fn evaluate(config: &PipelineConfig) -> Result<Report> {
    let run = || -> Result<Report> {
        let layout = Layout::new(&config.output);
        let clusters = Report::read(&layout.clusters())?;
        let truth_path = config
            .truth
            .as_deref()
            .ok_or_else(|| Error::Invalid("evaluation needs a truth file".into()))?;
        if !truth_path.exists() {
            return Err(Error::MissingArtifact(truth_path.to_path_buf()));
        }
        let truth = read_truth(truth_path)?;
        let mut per_name: Vec<PairwiseMetrics> = Vec::new();
        let mut names = Vec::with_capacity(clusters.names.len());
        for entry in clusters.names {
            let result = ClusteringResult {
                name_ref: entry.name_ref.clone(),
                k: entry.k,
                clusters: entry.clusters.clone(),
            };
            let ids: Vec<&String> = entry.clusters.iter().flatten().collect();
            let block_truth: Option<BTreeMap<String, String>> =
                ids.iter().map(|id| truth.get(*id).map(|l| ((*id).clone(), l.clone()))).collect();
            let metrics = block_truth.map(|t| pairwise_prf(&result, &t)).transpose()?;
            if let Some(m) = metrics {
                per_name.push(m);
            }
            names.push(NameReport {
                precision: metrics.map(|m| m.precision),
                recall: metrics.map(|m| m.recall),
                f1: metrics.map(|m| m.f1),
                ..entry
            });
        }
        let macro_avg = if per_name.is_empty() {
            None
        } else {
            let m = macro_average(&per_name)?;
            Some(MacroBlock {
                names: per_name.len(),
                precision: m.precision,
                recall: m.recall,
                f1: m.f1,
            })
        };
        let report = Report { names, macro_avg };
        report.write(&layout.report())?;
        Ok(report)
    };
    run().map_err(|e| e.in_stage("evaluate"))
}

/// Every stage in order. Evaluation runs only when a truth file is
/// configured; otherwise the clustering report is the final output.
pub fn run_pipeline(config: &PipelineConfig) -> Result<Report> {
    config.validate()?;
    ingest(config)?;
    embed_content(config)?;
    embed_relation(config)?;
    train(config)?;
    let clusters = cluster(config)?;
    if config.truth.is_some() {
        evaluate(config)
    } else {
        Ok(clusters)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_config_keys_rejected() {
        assert!(PipelineConfig::from_json(r#"{"seed": 1, "bogus": 2}"#).is_err());
        assert!(PipelineConfig::from_json(r#"{"train": {"g_stepz": 2}}"#).is_err());
        let c = PipelineConfig::from_json(r#"{"seed": 9, "mode": "parallel", "train": {"top_k": 5}}"#).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.mode, Mode::Parallel);
        assert_eq!(c.train.top_k, 5);
        assert_eq!(c.train.g_steps, 3);
    }

    #[test]
    fn dims_must_agree() {
        let mut c = PipelineConfig::default();
        c.walk.dim = 8;
        assert!(c.validate().is_err());
        c.content.dim = 8;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn block_seeds_differ_by_name() {
        let c = PipelineConfig::default();
        assert_ne!(c.train_config("A").seed, c.train_config("B").seed);
        assert_eq!(c.walk_config("A").seed, c.walk_config("A").seed);
    }

    #[test]
    fn report_omits_absent_metrics() {
        let r = Report {
            names: vec![NameReport {
                name_ref: "A".into(),
                k: 1,
                clusters: vec![vec!["x".into()]],
                precision: None,
                recall: None,
                f1: None,
            }],
            macro_avg: None,
        };
        let json = r.to_json().unwrap();
        assert!(!json.contains("precision") && !json.contains("macro"));
        let back: Report = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }
}
