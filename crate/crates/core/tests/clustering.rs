use std::collections::BTreeMap;

use name_disambig::cluster::{cluster_hac, is_partition_of, macro_average, pairwise_prf, ClusteringResult, Linkage, PairwiseMetrics};
use proptest::prelude::*;

fn arb_items() -> impl Strategy<Value = Vec<(String, Vec<f64>)>> {
    prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 3), 1..12).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, mut v)| {
                // keep vectors away from zero so cosine is defined
                v[0] += 3.0_f64.copysign(v[0]);
                (format!("p{i:02}"), v)
            })
            .collect()
    })
}

fn arb_linkage() -> impl Strategy<Value = Linkage> {
    prop_oneof![Just(Linkage::Average), Just(Linkage::Single), Just(Linkage::Complete)]
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    1.0 - dot / (norm(a) * norm(b))
}

/// Naive agglomeration: recomputes cluster distances from member pairs
/// at every step.
fn reference_hac(items: &[(String, Vec<f64>)], k: usize, linkage: Linkage) -> Vec<Vec<String>> {
    let mut clusters: Vec<Vec<usize>> = (0..items.len()).map(|i| vec![i]).collect();
    let dist = |a: &[usize], b: &[usize]| {
        let ds = a.iter().flat_map(|&i| b.iter().map(move |&j| cosine_distance(&items[i].1, &items[j].1)));
        match linkage {
            Linkage::Average => ds.sum::<f64>() / (a.len() * b.len()) as f64,
            Linkage::Single => ds.fold(f64::INFINITY, f64::min),
            Linkage::Complete => ds.fold(f64::NEG_INFINITY, f64::max),
        }
    };
    while clusters.len() > k {
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let d = dist(&clusters[i], &clusters[j]);
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        let merged = clusters.remove(best.2);
        clusters[best.1].extend(merged);
    }
    let mut out: Vec<Vec<String>> = clusters
        .into_iter()
        .map(|c| {
            let mut ids: Vec<String> = c.into_iter().map(|i| items[i].0.clone()).collect();
            ids.sort();
            ids
        })
        .collect();
    out.sort();
    out
}

fn brute_force_prf(pred: &ClusteringResult, truth: &BTreeMap<String, usize>) -> (f64, f64) {
    let labels = pred.labels();
    let ids: Vec<&str> = labels.keys().copied().collect();
    let (mut tp, mut pp, mut tt) = (0.0, 0.0, 0.0);
    for i in 0..ids.len() {
        for j in i + 1..ids.len() {
            let same_pred = labels[ids[i]] == labels[ids[j]];
            let same_truth = truth[ids[i]] == truth[ids[j]];
            pp += same_pred as u8 as f64;
            tt += same_truth as u8 as f64;
            tp += (same_pred && same_truth) as u8 as f64;
        }
    }
    let ratio = |a: f64, b: f64| if b == 0.0 { 0.0 } else { a / b };
    (ratio(tp, pp), ratio(tp, tt))
}

proptest! {
    #[test]
    fn hac_returns_k_clusters_partitioning_the_input(items in arb_items(), linkage in arb_linkage(), k_frac in 0.0f64..1.0) {
        let k = 1 + ((items.len() - 1) as f64 * k_frac) as usize;
        let result = cluster_hac("A", &items, k, linkage).unwrap();
        let ids: Vec<String> = items.iter().map(|(id, _)| id.clone()).collect();
        prop_assert_eq!(result.clusters.len(), k);
        prop_assert!(is_partition_of(&result, &ids));
    }

    #[test]
    fn hac_matches_naive_agglomeration(items in arb_items(), linkage in arb_linkage(), k_frac in 0.0f64..1.0) {
        let k = 1 + ((items.len() - 1) as f64 * k_frac) as usize;
        let result = cluster_hac("A", &items, k, linkage).unwrap();
        prop_assert_eq!(result.clusters, reference_hac(&items, k, linkage));
    }

    #[test]
    fn metrics_match_pair_enumeration(
        assignment in prop::collection::vec((0usize..4, 0usize..4), 1..20),
    ) {
        let mut clusters: BTreeMap<usize, Vec<String>> = BTreeMap::new();
        let mut truth = BTreeMap::new();
        for (i, &(c, t)) in assignment.iter().enumerate() {
            let id = format!("p{i:02}");
            clusters.entry(c).or_default().push(id.clone());
            truth.insert(id, t);
        }
        let pred = ClusteringResult {
            name_ref: "A".into(),
            k: clusters.len(),
            clusters: clusters.into_values().collect(),
        };
        let m = pairwise_prf(&pred, &truth).unwrap();
        let (p, r) = brute_force_prf(&pred, &truth);
        prop_assert!((m.precision - p).abs() < 1e-12);
        prop_assert!((m.recall - r).abs() < 1e-12);
        for x in [m.precision, m.recall, m.f1] {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        prop_assert!(m.f1 <= m.precision.max(m.recall) + 1e-12);
    }

    #[test]
    fn macro_average_takes_the_mean_of_f1(counts in prop::collection::vec((1u64..50, 1u64..50, 0u64..50), 1..6)) {
        let metrics: Vec<PairwiseMetrics> = counts
            .iter()
            .map(|&(pp, tt, both)| PairwiseMetrics::from_counts(pp, tt, both.min(pp).min(tt)))
            .collect();
        let avg = macro_average(&metrics).unwrap();
        let mean_f1 = metrics.iter().map(|m| m.f1).sum::<f64>() / metrics.len() as f64;
        prop_assert!((avg.f1 - mean_f1).abs() < 1e-12);
    }
}

#[test]
fn mismatched_truth_is_rejected() {
    let pred = ClusteringResult {
        name_ref: "A".into(),
        k: 1,
        clusters: vec![vec!["a".into(), "b".into()]],
    };
    let truth = BTreeMap::from([("a".to_string(), 0)]);
    assert!(pairwise_prf(&pred, &truth).is_err());
}

#[test]
fn cluster_count_outside_range_is_rejected() {
    let items = vec![("a".to_string(), vec![1.0, 0.0])];
    assert!(cluster_hac("A", &items, 2, Linkage::Average).is_err());
    assert!(cluster_hac("A", &items, 0, Linkage::Average).is_err());
}
