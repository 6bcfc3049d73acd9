//! Discriminator trained only on its own most confident pairs, with the
//! fraction of those pairs that truly share an author. With no negatives
//! to push against, the selection drifts away from the planted authors;
//! the adversarial loop supplies those negatives.
//!
//! `cargo run --release --example discriminator_self_training`

use name_disambig::benchmark::pair_precision;
use name_disambig::content::{build_vocab, train_content, Document};
use name_disambig::corpus::{block_by_name, build_hin};
use name_disambig::discriminator::{select_pseudo_positives, DiscriminatorParams, PaperInputs};
use name_disambig::pipeline::PipelineConfig;
use name_disambig::relation::embed_network;
use name_disambig::synthetic::{gen_synthetic, SyntheticSpec};

fn main() -> name_disambig::Result<()> {
    let spec = SyntheticSpec {
        num_authors: 3,
        papers_per_author: 12,
        ..Default::default()
    };
    let corpus = gen_synthetic(&spec)?;
    let config = PipelineConfig::default();
    let block = block_by_name(corpus.records).remove(0);

    let docs: Vec<Document> = block.papers.iter().map(Document::from_record).collect();
    let seqs: Vec<&[String]> = docs.iter().map(|d| d.tokens.as_slice()).collect();
    let content_cfg = config.content_config();
    let content = train_content(&docs, &build_vocab(&seqs, content_cfg.min_count)?, &content_cfg)?.papers;
    let hin = build_hin(&block);
    let relation = embed_network(&hin, &config.walk_config(&block.name_ref), false)?.nodes;

    let inputs = PaperInputs::gather(hin.paper_ids(), &content, &relation)?;
    let labels: Vec<&String> = hin.paper_ids().iter().map(|id| &corpus.truth[id]).collect();
    let mut disc = DiscriminatorParams::init(inputs.dim(), 64, 32, 7)?;
    for round in 0..5 {
        let pseudo = select_pseudo_positives(&disc, &inputs, 3)?;
        let batch: Vec<_> = pseudo.iter().copied().collect();
        let before = disc.objective(&batch, &inputs)?;
        for _ in 0..10 {
            disc.update(&batch, &inputs, 0.01 / batch.len() as f64)?;
        }
        println!(
            "round {round}: {} pairs, precision {:.3}, objective {:.3} -> {:.3}",
            batch.len(),
            pair_precision(pseudo, &labels),
            before,
            disc.objective(&batch, &inputs)?
        );
    }
    Ok(())
}
