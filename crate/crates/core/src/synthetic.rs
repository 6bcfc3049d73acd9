//! Planted-author benchmark blocks.
//!
//! Every author gets a set of topic words and a private pool of entities of
//! each kind. Title words come from the author's topic with probability
//! `topic_word_prob`, otherwise from the whole vocabulary. Each entity slot
//! of a paper is filled from the author's private pool with probability
//! `share_prob`, otherwise from a pool shared by all authors with
//! probability `noise_prob`, otherwise left empty. The first institute slot
//! drawn from the private pool is always the author's home institute, so
//! with an institute slot and `share_prob = 1` every two papers of an author
//! are first-order neighbors.
//!
//! The defaults plant a block where neither view alone separates the
//! authors well: titles are noisy, and each paper carries one co-author from
//! a large private pool plus two fields of study.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{EntityKind, PaperRecord};
use crate::error::{Error, Result};
use crate::seed;

/// Per-kind counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KindCounts {
    pub coauthors: usize,
    pub institutes: usize,
    pub venues: usize,
    pub fields: usize,
}

impl KindCounts {
    fn get(&self, kind: EntityKind) -> usize {
        match kind {
            EntityKind::CoAuthor => self.coauthors,
            EntityKind::Institute => self.institutes,
            EntityKind::Venue => self.venues,
            EntityKind::FieldOfStudy => self.fields,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub name_ref: String,
    pub num_authors: usize,
    pub papers_per_author: usize,
    pub vocab_size: usize,
    pub topic_words: usize,
    pub words_per_title: usize,
    pub topic_word_prob: f64,
    /// Private pool size per author, per kind.
    pub private_pool: KindCounts,
    /// Size of the pool shared by all authors, per kind.
    pub global_pool: KindCounts,
    /// Entity slots per paper, per kind (venue is capped at one).
    pub slots: KindCounts,
    pub share_prob: f64,
    pub noise_prob: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            name_ref: "J. Smith".into(),
            num_authors: 5,
            papers_per_author: 20,
            vocab_size: 400,
            topic_words: 8,
            words_per_title: 8,
            topic_word_prob: 0.4,
            private_pool: KindCounts {
                coauthors: 40,
                institutes: 4,
                venues: 8,
                fields: 3,
            },
            global_pool: KindCounts {
                coauthors: 3,
                institutes: 10,
                venues: 5,
                fields: 10,
            },
            slots: KindCounts {
                coauthors: 1,
                institutes: 0,
                venues: 0,
                fields: 2,
            },
            share_prob: 0.8,
            noise_prob: 0.05,
            seed: 17,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_authors == 0 || self.papers_per_author == 0 || self.words_per_title == 0 || self.topic_words == 0 {
            return Err(Error::Invalid("synthetic: counts must be positive".into()));
        }
        if self.vocab_size < self.topic_words {
            return Err(Error::Invalid(format!(
                "synthetic: vocabulary of {} words cannot hold {} topic words",
                self.vocab_size, self.topic_words
            )));
        }
        for (name, p) in [
            ("share_prob", self.share_prob),
            ("noise_prob", self.noise_prob),
            ("topic_word_prob", self.topic_word_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("synthetic: {name} must lie in [0, 1]")));
            }
        }
        for kind in EntityKind::ALL {
            if self.slots.get(kind) > 0 {
                if self.share_prob > 0.0 && self.private_pool.get(kind) == 0 {
                    return Err(Error::Invalid(format!("synthetic: empty private {kind} pool")));
                }
                if self.noise_prob > 0.0 && self.global_pool.get(kind) == 0 {
                    return Err(Error::Invalid(format!("synthetic: empty global {kind} pool")));
                }
            }
        }
        if self.name_ref.is_empty() {
            return Err(Error::Invalid("synthetic: empty name_ref".into()));
        }
        Ok(())
    }
}

/// A generated block: records plus paper-id → author-label truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub records: Vec<PaperRecord>,
    pub truth: BTreeMap<String, String>,
}

fn word(i: usize) -> String {
    // pronounceable, alphanumeric, distinct per index
    const SYL: [&str; 16] = [
        "ka", "lo", "mi", "nu", "pe", "ra", "si", "to", "va", "ze", "bo", "di", "fu", "ga", "he", "ju",
    ];
    let mut s = String::new();
    let mut x = i + 16;
    while x > 0 {
        s.push_str(SYL[x % 16]);
        x /= 16;
    }
    s
}

fn entity_name(kind: EntityKind, owner: Option<usize>, j: usize) -> String {
    let base = match kind {
        EntityKind::CoAuthor => "Coauthor",
        EntityKind::Institute => "Institute",
        EntityKind::Venue => "Venue",
        EntityKind::FieldOfStudy => "Field",
    };
    match owner {
        Some(a) => format!("{base} {} {}", word(1000 + a), word(j)),
        None => format!("Shared {base} {}", word(j)),
    }
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let mut rng = seed::rng(spec.seed, &[0x5717]);
    let vocab: Vec<String> = (0..spec.vocab_size).map(word).collect();
    let topics: Vec<Vec<usize>> = (0..spec.num_authors)
        .map(|_| sample(&mut rng, spec.vocab_size, spec.topic_words).into_vec())
        .collect();
    let width = (spec.num_authors * spec.papers_per_author).to_string().len();

    let mut records = Vec::new();
    let mut truth = BTreeMap::new();
    for author in 0..spec.num_authors {
        for j in 0..spec.papers_per_author {
            let id = format!("p{:0width$}", records.len());
            let title: Vec<&str> = (0..spec.words_per_title)
                .map(|_| {
                    if rng.gen::<f64>() < spec.topic_word_prob {
                        vocab[topics[author][rng.gen_range(0..spec.topic_words)]].as_str()
                    } else {
                        vocab[rng.gen_range(0..spec.vocab_size)].as_str()
                    }
                })
                .collect();

            let mut ents: BTreeMap<EntityKind, Vec<String>> = BTreeMap::new();
            for kind in EntityKind::ALL {
                let slots = if kind == EntityKind::Venue {
                    spec.slots.venues.min(1)
                } else {
                    spec.slots.get(kind)
                };
                let mut home_used = false;
                for _ in 0..slots {
                    let r: f64 = rng.gen();
                    let name = if r < spec.share_prob {
                        let pick = if kind == EntityKind::Institute && !home_used {
                            home_used = true;
                            0
                        } else {
                            rng.gen_range(0..spec.private_pool.get(kind))
                        };
                        Some(entity_name(kind, Some(author), pick))
                    } else if r < spec.share_prob + spec.noise_prob {
                        Some(entity_name(kind, None, rng.gen_range(0..spec.global_pool.get(kind))))
                    } else {
                        None
                    };
                    if let Some(name) = name {
                        let list = ents.entry(kind).or_default();
                        if !list.contains(&name) {
                            list.push(name);
                        }
                    }
                }
            }
            let mut take = |k: EntityKind| ents.remove(&k).unwrap_or_default();
            let venue = take(EntityKind::Venue).into_iter().next();
            records.push(PaperRecord {
                id: id.clone(),
                name_ref: spec.name_ref.clone(),
                title: title.join(" "),
                r#abstract: None,
                coauthors: take(EntityKind::CoAuthor),
                institutes: take(EntityKind::Institute),
                venue,
                fields_of_study: take(EntityKind::FieldOfStudy),
                year: Some(2000 + (j % 20) as i64),
            });
            truth.insert(id, format!("author-{author}"));
        }
    }
    Ok(SyntheticCorpus { records, truth })
}
