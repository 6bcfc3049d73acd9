//! Final paper representations, average-linkage HAC, and pairwise
//! precision/recall/F1.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::discriminator::DiscriminatorParams;
use crate::embedding::{cosine, norm};
use crate::error::{Error, Result};
use crate::generator::GeneratorParams;

/// Unit-normalized `d` followed by unit-normalized `g`; zero halves are
/// passed through unchanged.
pub fn final_representation(
    disc: &DiscriminatorParams,
    gen: &GeneratorParams,
    u: &[f64],
    v: &[f64],
    paper: usize,
) -> Result<Vec<f64>> {
    if paper >= gen.num_nodes() {
        return Err(Error::UnknownNode(format!("paper {paper}")));
    }
    let d = disc.embed(u, v)?;
    let mut out = normalized(&d);
    out.extend(normalized(gen.row(paper)));
    Ok(out)
}

pub(crate) fn normalized(x: &[f64]) -> Vec<f64> {
    let n = norm(x);
    if n == 0.0 {
        x.to_vec()
    } else {
        x.iter().map(|v| v / n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Average,
    Single,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub name_ref: String,
    pub k: usize,
    /// Each cluster sorted by id; clusters ordered by their smallest id.
    pub clusters: Vec<Vec<String>>,
}

impl ClusteringResult {
    pub fn labels(&self) -> BTreeMap<&str, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(c, members)| members.iter().map(move |m| (m.as_str(), c)))
            .collect()
    }
}

/// Agglomerates `items` under cosine distance until `k` clusters remain.
/// Among equally distant pairs the one whose smallest member ids are
/// lexicographically smallest merges first.
pub fn cluster_hac(
    name_ref: &str,
    items: &[(String, Vec<f64>)],
    k: usize,
    linkage: Linkage,
) -> Result<ClusteringResult> {
    let n = items.len();
    if k < 1 || k > n {
        return Err(Error::Invalid(format!("cluster count {k} outside 1..={n}")));
    }
    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    let mut key: Vec<&str> = items.iter().map(|(id, _)| id.as_str()).collect();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = 1.0 - cosine(&items[i].1, &items[j].1);
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }
    let pair_key = |a: usize, b: usize, key: &[&str]| {
        let (x, y) = (key[a], key[b]);
        if x <= y {
            (x.to_string(), y.to_string())
        } else {
            (y.to_string(), x.to_string())
        }
    };

    let mut alive = n;
    while alive > k {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            if members[i].is_none() {
                continue;
            }
            for j in i + 1..n {
                if members[j].is_none() {
                    continue;
                }
                let d = dist[i * n + j];
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => match d.total_cmp(&bd) {
                        Ordering::Less => true,
                        Ordering::Greater => false,
                        Ordering::Equal => pair_key(i, j, &key) < pair_key(bi, bj, &key),
                    },
                };
                if better {
                    best = Some((d, i, j));
                }
            }
        }
        let (_, a, b) = best.expect("at least two live clusters");
        let mb = members[b].take().unwrap();
        let ma = members[a].as_mut().unwrap();
        let (na, nb) = (ma.len() as f64, mb.len() as f64);
        ma.extend(mb);
        if key[b] < key[a] {
            key[a] = key[b];
        }
        for c in 0..n {
            if c == a || members[c].is_none() {
                continue;
            }
            let (da, db) = (dist[a * n + c], dist[b * n + c]);
            let merged = match linkage {
                Linkage::Average => (na * da + nb * db) / (na + nb),
                Linkage::Single => da.min(db),
                Linkage::Complete => da.max(db),
            };
            dist[a * n + c] = merged;
            dist[c * n + a] = merged;
        }
        alive -= 1;
    }

    let mut clusters: Vec<Vec<String>> = members
        .into_iter()
        .flatten()
        .map(|m| {
            let mut ids: Vec<String> = m.into_iter().map(|i| items[i].0.clone()).collect();
            ids.sort();
            ids
        })
        .collect();
    clusters.sort();
    Ok(ClusteringResult {
        name_ref: name_ref.to_string(),
        k,
        clusters,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub predicted_pairs: u64,
    pub truth_pairs: u64,
    pub both_pairs: u64,
}

impl PairwiseMetrics {
    /// Metrics from pair counts; zero denominators give zero.
    pub fn from_counts(predicted_pairs: u64, truth_pairs: u64, both_pairs: u64) -> Self {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(both_pairs, predicted_pairs);
        let recall = ratio(both_pairs, truth_pairs);
        PairwiseMetrics {
            precision,
            recall,
            f1: f1(precision, recall),
            predicted_pairs,
            truth_pairs,
            both_pairs,
        }
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

/// Pairwise precision/recall/F1 of a clustering against truth labels,
/// computed from the contingency table.
pub fn pairwise_prf<L: Ord>(pred: &ClusteringResult, truth: &BTreeMap<String, L>) -> Result<PairwiseMetrics> {
    let labels = pred.labels();
    if labels.len() != truth.len() || labels.keys().any(|id| !truth.contains_key(*id)) {
        return Err(Error::Invalid(format!(
            "prediction for {:?} and truth cover different papers",
            pred.name_ref
        )));
    }
    let mut pred_sizes: HashMap<usize, u64> = HashMap::new();
    let mut truth_sizes: BTreeMap<&L, u64> = BTreeMap::new();
    let mut cells: BTreeMap<(usize, &L), u64> = BTreeMap::new();
    for (id, &c) in &labels {
        let t = &truth[*id];
        *pred_sizes.entry(c).or_default() += 1;
        *truth_sizes.entry(t).or_default() += 1;
        *cells.entry((c, t)).or_default() += 1;
    }
    Ok(PairwiseMetrics::from_counts(
        pred_sizes.values().map(|&n| pairs(n)).sum(),
        truth_sizes.values().map(|&n| pairs(n)).sum(),
        cells.values().map(|&n| pairs(n)).sum(),
    ))
}

/// Unweighted mean of each metric across names. F1 is averaged directly,
/// not recomputed from the mean precision and recall; pair counts are summed.
pub fn macro_average(metrics: &[PairwiseMetrics]) -> Result<PairwiseMetrics> {
    if metrics.is_empty() {
        return Err(Error::Invalid("macro_average of no metrics".into()));
    }
    let n = metrics.len() as f64;
    let mean = |f: fn(&PairwiseMetrics) -> f64| metrics.iter().map(f).sum::<f64>() / n;
    Ok(PairwiseMetrics {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        predicted_pairs: metrics.iter().map(|m| m.predicted_pairs).sum(),
        truth_pairs: metrics.iter().map(|m| m.truth_pairs).sum(),
        both_pairs: metrics.iter().map(|m| m.both_pairs).sum(),
    })
}

/// Checks that a clustering partitions exactly `ids`.
pub fn is_partition_of(result: &ClusteringResult, ids: &[String]) -> bool {
    let mut seen = BTreeSet::new();
    for c in &result.clusters {
        if c.is_empty() {
            return false;
        }
        for id in c {
            if !seen.insert(id.as_str()) {
                return false;
            }
        }
    }
    seen.len() == ids.len() && ids.iter().all(|id| seen.contains(id.as_str())) && result.clusters.len() == result.k
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    fn result(clusters: &[&[&str]]) -> ClusteringResult {
        ClusteringResult {
            name_ref: "A".into(),
            k: clusters.len(),
            clusters: clusters.iter().map(|c| ids(c)).collect(),
        }
    }

    fn truth(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn worked_example() {
        let t = truth(&[("1", "x"), ("2", "x"), ("3", "y")]);
        let m = pairwise_prf(&result(&[&["1", "2", "3"]]), &t).unwrap();
        assert!((m.precision - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.recall, 1.0);
        assert!((m.f1 - 0.5).abs() < 1e-15);

        let same = pairwise_prf(&result(&[&["1", "2"], &["3"]]), &t).unwrap();
        assert_eq!((same.precision, same.recall, same.f1), (1.0, 1.0, 1.0));

        let single = pairwise_prf(&result(&[&["1"], &["2"], &["3"]]), &t).unwrap();
        assert_eq!((single.precision, single.recall, single.f1), (0.0, 0.0, 0.0));

        assert!(pairwise_prf(&result(&[&["1", "2"]]), &t).is_err());
    }

    #[test]
    fn macro_averages_f1_directly() {
        let a = PairwiseMetrics::from_counts(10, 10, 6);
        let b = PairwiseMetrics::from_counts(10, 5, 4);
        let m = macro_average(&[a, b]).unwrap();
        assert!((m.f1 - (a.f1 + b.f1) / 2.0).abs() < 1e-15);
        assert!((m.f1 - f1(m.precision, m.recall)).abs() > 1e-6);
        assert_eq!(macro_average(&[a]).unwrap(), a);
        assert!(macro_average(&[]).is_err());

        let mut x = a;
        x.f1 = 0.6;
        let mut y = a;
        y.f1 = 0.8;
        assert!((macro_average(&[x, y]).unwrap().f1 - 0.7).abs() < 1e-15);
    }

    fn items(points: &[[f64; 2]]) -> Vec<(String, Vec<f64>)> {
        points
            .iter()
            .enumerate()
            .map(|(i, p)| (format!("p{i}"), p.to_vec()))
            .collect()
    }

    #[test]
    fn extreme_cluster_counts() {
        let it = items(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]);
        let all = cluster_hac("A", &it, 3, Linkage::Average).unwrap();
        assert!(all.clusters.iter().all(|c| c.len() == 1));
        let one = cluster_hac("A", &it, 1, Linkage::Average).unwrap();
        assert_eq!(one.clusters, vec![ids(&["p0", "p1", "p2"])]);
        assert!(cluster_hac("A", &it, 0, Linkage::Average).is_err());
        assert!(cluster_hac("A", &it, 4, Linkage::Average).is_err());
    }

    #[test]
    fn planted_groups_recovered() {
        let it = items(&[[1.0, 0.01], [1.0, -0.02], [0.98, 0.0], [0.01, 1.0], [-0.02, 1.0]]);
        let r = cluster_hac("A", &it, 2, Linkage::Average).unwrap();
        assert_eq!(r.clusters, vec![ids(&["p0", "p1", "p2"]), ids(&["p3", "p4"])]);
    }

    #[test]
    fn ties_merge_smallest_ids_first() {
        // four identical points: every distance is zero
        let it = items(&[[1.0, 0.0]; 4]);
        let r = cluster_hac("A", &it, 3, Linkage::Average).unwrap();
        assert_eq!(r.clusters, vec![ids(&["p0", "p1"]), ids(&["p2"]), ids(&["p3"])]);
        let r = cluster_hac("A", &it, 2, Linkage::Average).unwrap();
        assert_eq!(r.clusters, vec![ids(&["p0", "p1", "p2"]), ids(&["p3"])]);
    }

    #[test]
    fn final_representation_halves() {
        let disc = DiscriminatorParams::init(2, 4, 3, 1).unwrap();
        let gen = GeneratorParams::from_rows(2, 1, vec![3.0, 4.0, 0.0, 0.0]).unwrap();
        let r = final_representation(&disc, &gen, &[0.5, -0.2], &[0.1, 0.3], 0).unwrap();
        assert_eq!(r.len(), 3 + 2);
        let d = disc.embed(&[0.5, -0.2], &[0.1, 0.3]).unwrap();
        let nd = norm(&d);
        for i in 0..3 {
            assert!((r[i] - d[i] / nd).abs() < 1e-15);
        }
        assert!((norm(&r[..3]) - 1.0).abs() < 1e-12);
        assert_eq!(&r[3..], &[0.6, 0.8]);
        let z = final_representation(&disc, &gen, &[0.5, -0.2], &[0.1, 0.3], 1).unwrap();
        assert_eq!(&z[3..], &[0.0, 0.0]);
        assert!(final_representation(&disc, &gen, &[0.5, -0.2], &[0.1, 0.3], 2).is_err());
    }
}
