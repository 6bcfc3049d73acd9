//! Trains paper content vectors and checks nearest neighbours against the
//! planted authors.
//!
//! `cargo run --release --example content_embedding`

use name_disambig::content::{build_vocab, train_content, ContentConfig, Document};
use name_disambig::embedding::cosine;
use name_disambig::synthetic::{gen_synthetic, SyntheticSpec};

fn main() -> name_disambig::Result<()> {
    let corpus = gen_synthetic(&SyntheticSpec {
        num_authors: 3,
        papers_per_author: 10,
        ..Default::default()
    })?;
    let docs: Vec<Document> = corpus.records.iter().map(Document::from_record).collect();
    let seqs: Vec<&[String]> = docs.iter().map(|d| d.tokens.as_slice()).collect();
    let config = ContentConfig {
        dim: 32,
        ..Default::default()
    };
    let vocab = build_vocab(&seqs, config.min_count)?;
    let model = train_content(&docs, &vocab, &config)?;
    println!("vocabulary {} tokens", vocab.len());
    println!(
        "loss {:.3} -> {:.3}",
        model.epoch_losses.first().unwrap_or(&0.0),
        model.epoch_losses.last().unwrap_or(&0.0)
    );

    let rows: Vec<(&str, &[f64])> = model.papers.iter().collect();
    let mut agree = 0;
    for (i, (id, v)) in rows.iter().enumerate() {
        let nearest = rows
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .max_by(|a, b| cosine(v, a.1 .1).total_cmp(&cosine(v, b.1 .1)))
            .map(|(_, r)| r.0)
            .unwrap();
        let label = |id: &str| &corpus.truth[id.trim_start_matches("paper:")];
        agree += usize::from(label(id) == label(nearest));
    }
    println!("nearest neighbour shares the author for {agree}/{} papers", rows.len());
    Ok(())
}
