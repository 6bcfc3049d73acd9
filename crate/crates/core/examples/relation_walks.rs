//! Random walks over the paper-entity network and the node vectors they
//! train.
//!
//! `cargo run --release --example relation_walks`

use name_disambig::corpus::{block_by_name, build_hin};
use name_disambig::embedding::cosine;
use name_disambig::relation::{embed_network, generate_walks, WalkConfig};
use name_disambig::synthetic::{gen_synthetic, SyntheticSpec};

fn main() -> name_disambig::Result<()> {
    let corpus = gen_synthetic(&SyntheticSpec {
        num_authors: 2,
        papers_per_author: 8,
        ..Default::default()
    })?;
    let block = block_by_name(corpus.records).remove(0);
    let hin = build_hin(&block);
    let config = WalkConfig {
        dim: 16,
        ..Default::default()
    };

    let walks = generate_walks(&hin, &config, false);
    println!("{} walks of up to {} nodes", walks.len(), config.walk_length);
    let shown: Vec<String> = walks[0].iter().take(6).map(|&n| hin.node_id(n)).collect();
    println!("first walk starts {shown:?}");

    let model = embed_network(&hin, &config, false)?;
    let ids = hin.paper_ids();
    let vec_of = |i: usize| model.nodes.require(&format!("paper:{}", ids[i]));
    let (mut same, mut diff) = (Vec::new(), Vec::new());
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            let c = cosine(vec_of(i)?, vec_of(j)?);
            if corpus.truth[&ids[i]] == corpus.truth[&ids[j]] {
                same.push(c);
            } else {
                diff.push(c);
            }
        }
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
    println!("mean cosine, same author {:.3}, different authors {:.3}", mean(&same), mean(&diff));
    Ok(())
}
