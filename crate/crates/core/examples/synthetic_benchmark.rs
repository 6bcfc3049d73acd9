//! Planted five-author block: adversarial representation vs. each input view.
//!
//! `cargo run --release --example synthetic_benchmark [seed]`

use name_disambig::benchmark::run_synthetic;
use name_disambig::pipeline::PipelineConfig;
use name_disambig::synthetic::SyntheticSpec;

fn main() -> name_disambig::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(42);
    let config = PipelineConfig {
        seed,
        ..Default::default()
    };
    let r = run_synthetic(&SyntheticSpec::default(), &config)?;
    println!("adversarial    F1 {:.4}", r.adversarial.f1);
    println!("content only   F1 {:.4}", r.content_only.f1);
    println!("relation only  F1 {:.4}", r.relation_only.f1);
    println!("iterations     {}", r.log.len());
    if let (Some(first), Some(last)) = (r.pseudo_precision.first(), r.pseudo_precision.last()) {
        println!("pseudo-positive precision {first:.3} -> {last:.3}");
    }
    Ok(())
}
