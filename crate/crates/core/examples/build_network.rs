//! Blocks a small corpus by name and inspects the paper-entity network.
//!
//! `cargo run --example build_network`

use name_disambig::corpus::{block_by_name, build_hin};
use name_disambig::synthetic::{gen_synthetic, SyntheticSpec};

fn main() -> name_disambig::Result<()> {
    let corpus = gen_synthetic(&SyntheticSpec {
        num_authors: 2,
        papers_per_author: 4,
        ..Default::default()
    })?;
    for block in block_by_name(corpus.records) {
        let hin = build_hin(&block);
        hin.validate()?;
        println!(
            "{}: {} papers, {} entities, {} edges",
            block.name_ref,
            hin.num_papers(),
            hin.num_entities(),
            hin.edges().len()
        );
        for p in 0..hin.num_papers() {
            let linked: Vec<&str> = hin
                .first_order_neighbors(p)?
                .into_iter()
                .map(|q| hin.paper_ids()[q].as_str())
                .collect();
            println!("  {} ({}) shares entities with {:?}", hin.paper_ids()[p], corpus.truth[&hin.paper_ids()[p]], linked);
        }
        if hin.num_papers() > 1 {
            let shared: Vec<String> = hin.shared_entities(0, 1)?.into_iter().map(|e| hin.node_id(e)).collect();
            println!("  first two papers share {shared:?}");
        }
    }
    Ok(())
}
