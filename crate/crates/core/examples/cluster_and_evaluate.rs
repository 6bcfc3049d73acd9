//! Every stage on disk: two ambiguous names, clustering, and the pairwise
//! report.
//!
//! `cargo run --release --example cluster_and_evaluate`

use name_disambig::corpus::write_records;
use name_disambig::pipeline::{run_pipeline, write_truth, PipelineConfig};
use name_disambig::synthetic::{gen_synthetic, SyntheticSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let mut records = Vec::new();
    let mut truth = std::collections::BTreeMap::new();
    for (name, authors, seed) in [("J. Smith", 3, 1), ("L. Wang", 2, 2)] {
        let corpus = gen_synthetic(&SyntheticSpec {
            name_ref: name.into(),
            num_authors: authors,
            papers_per_author: 10,
            seed,
            ..Default::default()
        })?;
        // synthetic ids restart at p00 for every corpus
        let tag = name.replace(". ", "").to_lowercase();
        for mut r in corpus.records {
            r.id = format!("{tag}-{}", r.id);
            records.push(r);
        }
        truth.extend(corpus.truth.into_iter().map(|(id, a)| (format!("{tag}-{id}"), format!("{tag}-{a}"))));
    }
    let input = dir.path().join("corpus.jsonl");
    let truth_path = dir.path().join("truth.json");
    write_records(&input, &records)?;
    write_truth(&truth_path, &truth)?;

    let config = PipelineConfig {
        input: Some(input),
        truth: Some(truth_path),
        output: dir.path().join("out"),
        ..Default::default()
    };
    let report = run_pipeline(&config)?;
    for name in &report.names {
        println!(
            "{}: {} clusters, P {:.3} R {:.3} F1 {:.3}",
            name.name_ref,
            name.k,
            name.precision.unwrap_or(0.0),
            name.recall.unwrap_or(0.0),
            name.f1.unwrap_or(0.0)
        );
    }
    if let Some(m) = &report.macro_avg {
        println!("macro over {} names: F1 {:.3}", m.names, m.f1);
    }
    Ok(())
}
