#![allow(dead_code)]

use name_disambig::corpus::{block_by_name, build_hin, HeterogeneousNetwork, NameBlock, PaperRecord};
use name_disambig::generator::GeneratorParams;
use rand::Rng;

pub fn record(id: &str, name_ref: &str, coauthors: &[String], fields: &[String]) -> PaperRecord {
    PaperRecord {
        id: id.into(),
        name_ref: name_ref.into(),
        title: format!("paper {id}"),
        r#abstract: None,
        coauthors: coauthors.to_vec(),
        institutes: vec![],
        venue: None,
        fields_of_study: fields.to_vec(),
        year: None,
    }
}

/// A block of `n` papers whose co-authors and fields come from small pools,
/// so papers tend to share entities.
pub fn random_block<R: Rng>(rng: &mut R, n: usize, pool: usize) -> NameBlock {
    let papers = (0..n)
        .map(|i| {
            let pick = |rng: &mut R, prefix: &str| -> Vec<String> {
                (0..rng.gen_range(1..=2))
                    .map(|_| format!("{prefix} {}", rng.gen_range(0..pool)))
                    .collect()
            };
            let coauthors = pick(rng, "author");
            let fields = pick(rng, "field");
            record(&format!("p{i:02}"), "A", &coauthors, &fields)
        })
        .collect();
    block_by_name(papers).remove(0)
}

pub fn random_hin<R: Rng>(rng: &mut R, n: usize, pool: usize) -> HeterogeneousNetwork {
    build_hin(&random_block(rng, n, pool))
}

pub fn random_generator<R: Rng>(rng: &mut R, hin: &HeterogeneousNetwork, k: usize, scale: f64) -> GeneratorParams {
    let rows = (0..hin.num_nodes() * k).map(|_| rng.gen_range(-scale..scale)).collect();
    GeneratorParams::from_rows(k, hin.num_papers(), rows).unwrap()
}

/// Norm of the difference of two gradient vectors relative to the larger
/// of their norms. Norms below 1e-8 count as 1e-8, so two gradients that
/// vanish up to rounding compare equal.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-8)
}
