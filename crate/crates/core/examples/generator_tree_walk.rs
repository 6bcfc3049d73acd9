//! Spanning tree over co-occurring papers and the generator's walk
//! distribution on it.
//!
//! `cargo run --example generator_tree_walk`

use name_disambig::corpus::{block_by_name, build_hin};
use name_disambig::generator::{build_spanning_tree, g_likelihood, sample_selection, GeneratorParams, PaperNetwork};
use name_disambig::relation::{embed_network, WalkConfig};
use name_disambig::seed;
use name_disambig::synthetic::{gen_synthetic, SyntheticSpec};

fn main() -> name_disambig::Result<()> {
    let corpus = gen_synthetic(&SyntheticSpec {
        num_authors: 2,
        papers_per_author: 6,
        ..Default::default()
    })?;
    let block = block_by_name(corpus.records).remove(0);
    let hin = build_hin(&block);
    let relation = embed_network(
        &hin,
        &WalkConfig {
            dim: 16,
            ..Default::default()
        },
        false,
    )?;
    let gen = GeneratorParams::init(&relation.nodes, &hin)?;
    let net = PaperNetwork::build(&gen, &hin)?;
    println!("{} papers, {} weighted links", net.num_papers(), net.num_edges());

    let tree = build_spanning_tree(&net, 0)?;
    let ids = hin.paper_ids();
    println!("tree rooted at {} ({}) spans {} papers", ids[0], corpus.truth[&ids[0]], tree.len());
    for (parent, child) in tree.edges() {
        println!("  {} -> {}", ids[parent], ids[child]);
    }

    let walks = 2000;
    let mut counts = vec![0usize; ids.len()];
    let mut rng = seed::rng(1, &[]);
    for _ in 0..walks {
        for p in sample_selection(&gen, &hin, &tree, &mut rng)? {
            counts[p] += 1;
        }
    }
    println!("paper   author  likelihood  sampled");
    for &p in &tree.nodes()[1..] {
        println!(
            "{:<7} {:<7} {:>10.3} {:>8.3}",
            ids[p],
            corpus.truth[&ids[p]],
            g_likelihood(&gen, &hin, &tree, p)?,
            counts[p] as f64 / walks as f64
        );
    }
    Ok(())
}
