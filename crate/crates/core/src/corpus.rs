//! Bibliographic records, blocking by name reference, and the per-block
//! heterogeneous paper/entity network.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One bibliographic record as it appears in the JSON-lines input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PaperRecord {
    pub id: String,
    pub name_ref: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r#abstract: Option<String>,
    #[serde(default)]
    pub coauthors: Vec<String>,
    #[serde(default)]
    pub institutes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub venue: Option<String>,
    #[serde(default)]
    pub fields_of_study: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub year: Option<i64>,
}

/// All papers filed under one ambiguous name, plus optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct NameBlock {
    pub name_ref: String,
    /// Sorted by paper id.
    pub papers: Vec<PaperRecord>,
    pub truth: Option<BTreeMap<String, String>>,
}

impl NameBlock {
    pub fn len(&self) -> usize {
        self.papers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.papers.is_empty()
    }

    /// Attaches ground-truth labels if `labels` covers every paper in the
    /// block. Returns whether labels were attached.
    pub fn attach_truth(&mut self, labels: &BTreeMap<String, String>) -> bool {
        let mut truth = BTreeMap::new();
        for p in &self.papers {
            match labels.get(&p.id) {
                Some(l) => {
                    truth.insert(p.id.clone(), l.clone());
                }
                None => return false,
            }
        }
        self.truth = Some(truth);
        true
    }

    /// Number of distinct truth labels, when truth is attached.
    pub fn truth_k(&self) -> Option<usize> {
        self.truth
            .as_ref()
            .map(|t| t.values().collect::<BTreeSet<_>>().len())
    }
}

#[derive(Deserialize)]
struct RequiredFields {
    id: Option<serde_json::Value>,
    name_ref: Option<serde_json::Value>,
    title: Option<serde_json::Value>,
}

/// Parses JSON-lines records; blank lines are skipped.
pub fn parse_records(text: &str) -> Result<Vec<PaperRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: line_no,
            message,
        };
        let required: RequiredFields =
            serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        for (name, value) in [
            ("id", &required.id),
            ("name_ref", &required.name_ref),
            ("title", &required.title),
        ] {
            if value.is_none() {
                return Err(parse_err(format!("missing required field {name:?}")));
            }
        }
        let record: PaperRecord =
            serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        if record.id.is_empty() {
            return Err(parse_err("empty \"id\"".into()));
        }
        if record.name_ref.is_empty() {
            return Err(parse_err("empty \"name_ref\"".into()));
        }
        if record.id.chars().any(char::is_whitespace) {
            return Err(parse_err(format!("id {:?} contains whitespace", record.id)));
        }
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId {
                id: record.id,
                line: line_no,
            });
        }
        records.push(record);
    }
    Ok(records)
}

/// Reads a JSON-lines corpus file.
pub fn load_records(path: &Path) -> Result<Vec<PaperRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records(&text)
}

/// Writes records as JSON lines in the given order.
pub fn write_records(path: &Path, records: &[PaperRecord]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Groups records by exact `name_ref`. Blocks come out in lexicographic
/// name order; papers within a block are sorted by id.
pub fn block_by_name(records: Vec<PaperRecord>) -> Vec<NameBlock> {
    let mut groups: BTreeMap<String, Vec<PaperRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.name_ref.clone()).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(name_ref, mut papers)| {
            papers.sort_by(|a, b| a.id.cmp(&b.id));
            NameBlock {
                name_ref,
                papers,
                truth: None,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EntityKind {
    CoAuthor,
    Institute,
    Venue,
    FieldOfStudy,
}

impl EntityKind {
    pub const ALL: [EntityKind; 4] = [
        EntityKind::CoAuthor,
        EntityKind::Institute,
        EntityKind::Venue,
        EntityKind::FieldOfStudy,
    ];

    /// Node-id prefix used in embedding files.
    pub fn prefix(self) -> &'static str {
        match self {
            EntityKind::CoAuthor => "coauthor",
            EntityKind::Institute => "institute",
            EntityKind::Venue => "venue",
            EntityKind::FieldOfStudy => "fos",
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.prefix())
    }
}

/// Canonical form of an entity string: lowercase, punctuation replaced by
/// spaces, whitespace collapsed. `None` means the entity should be dropped.
///
/// The kind is accepted for symmetry with the node namespace; every kind is
/// canonicalized the same way.
pub fn normalize_entity(raw: &str, _kind: EntityKind) -> Option<String> {
    let mapped: String = raw
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { ' ' })
        .collect::<String>()
        .to_lowercase();
    let collapsed = mapped.split_whitespace().collect::<Vec<_>>().join(" ");
    (!collapsed.is_empty()).then_some(collapsed)
}

/// Node index into a [`HeterogeneousNetwork`]. Papers occupy
/// `0..num_papers`, entities follow.
pub type NodeIx = usize;

/// Typed, undirected, bipartite paper/entity graph for one name block.
#[derive(Debug, Clone, PartialEq)]
pub struct HeterogeneousNetwork {
    paper_ids: Vec<String>,
    entities: Vec<(EntityKind, String)>,
    edges: BTreeSet<(NodeIx, NodeIx)>,
    adjacency: Vec<Vec<NodeIx>>,
}

impl HeterogeneousNetwork {
    pub fn num_papers(&self) -> usize {
        self.paper_ids.len()
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_paper(&self, node: NodeIx) -> bool {
        node < self.paper_ids.len()
    }

    pub fn paper_ids(&self) -> &[String] {
        &self.paper_ids
    }

    pub fn paper_index(&self, id: &str) -> Result<NodeIx> {
        self.paper_ids
            .binary_search_by(|p| p.as_str().cmp(id))
            .map_err(|_| Error::UnknownNode(id.to_string()))
    }

    pub fn entity(&self, node: NodeIx) -> Option<&(EntityKind, String)> {
        node.checked_sub(self.paper_ids.len())
            .and_then(|i| self.entities.get(i))
    }

    /// Edges as (paper, entity) pairs.
    pub fn edges(&self) -> &BTreeSet<(NodeIx, NodeIx)> {
        &self.edges
    }

    /// Sorted neighbor list of any node.
    pub fn neighbors(&self, node: NodeIx) -> &[NodeIx] {
        &self.adjacency[node]
    }

    /// Namespaced string id: `paper:<id>`, `venue:<name>`, ...
    ///
    /// Spaces inside canonical entity names become `_` so ids stay
    /// whitespace-free on disk.
    pub fn node_id(&self, node: NodeIx) -> String {
        if self.is_paper(node) {
            format!("paper:{}", self.paper_ids[node])
        } else {
            let (kind, name) = &self.entities[node - self.paper_ids.len()];
            format!("{}:{}", kind.prefix(), name.replace(' ', "_"))
        }
    }

    fn check(&self, node: NodeIx) -> Result<()> {
        if node < self.num_nodes() {
            Ok(())
        } else {
            Err(Error::UnknownNode(format!("node index {node}")))
        }
    }

    fn check_paper(&self, node: NodeIx) -> Result<()> {
        if self.is_paper(node) {
            Ok(())
        } else {
            Err(Error::UnknownNode(format!("paper index {node}")))
        }
    }

    /// Papers sharing at least one entity with `p`, excluding `p`.
    pub fn first_order_neighbors(&self, p: NodeIx) -> Result<BTreeSet<NodeIx>> {
        self.check_paper(p)?;
        Ok(self.adjacency[p]
            .iter()
            .flat_map(|&t| self.adjacency[t].iter().copied())
            .filter(|&q| q != p)
            .collect())
    }

    /// Entities adjacent to both `p` and `q` (sorted).
    pub fn shared_entities(&self, p: NodeIx, q: NodeIx) -> Result<Vec<NodeIx>> {
        self.check_paper(p)?;
        self.check_paper(q)?;
        Ok(sorted_intersection(&self.adjacency[p], &self.adjacency[q]))
    }

    /// Debug check of the structural invariants.
    pub fn validate(&self) -> Result<()> {
        for &(a, b) in &self.edges {
            self.check(a)?;
            self.check(b)?;
            if !(self.is_paper(a) && !self.is_paper(b)) {
                return Err(Error::Invalid(format!("edge ({a},{b}) is not paper-entity")));
            }
            if self.adjacency[a].binary_search(&b).is_err()
                || self.adjacency[b].binary_search(&a).is_err()
            {
                return Err(Error::Invalid(format!("edge ({a},{b}) missing from adjacency")));
            }
        }
        let degree_sum: usize = self.adjacency.iter().map(Vec::len).sum();
        if degree_sum != 2 * self.edges.len() {
            return Err(Error::Invalid("adjacency is not symmetric".into()));
        }
        Ok(())
    }
}

pub(crate) fn sorted_intersection(a: &[NodeIx], b: &[NodeIx]) -> Vec<NodeIx> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Builds the heterogeneous network of a block. Entity nodes are numbered in
/// (kind, canonical name) order, so the result depends only on the block's
/// content. The focal name is never its own co-author.
pub fn build_hin(block: &NameBlock) -> HeterogeneousNetwork {
    let focal = normalize_entity(&block.name_ref, EntityKind::CoAuthor);
    let per_paper: Vec<BTreeSet<(EntityKind, String)>> = block
        .papers
        .iter()
        .map(|p| {
            let mut ents = BTreeSet::new();
            let mut add = |kind: EntityKind, raw: &str| {
                if let Some(n) = normalize_entity(raw, kind) {
                    if kind == EntityKind::CoAuthor && focal.as_deref() == Some(n.as_str()) {
                        return;
                    }
                    ents.insert((kind, n));
                }
            };
            for c in &p.coauthors {
                add(EntityKind::CoAuthor, c);
            }
            for i in &p.institutes {
                add(EntityKind::Institute, i);
            }
            if let Some(v) = &p.venue {
                add(EntityKind::Venue, v);
            }
            for f in &p.fields_of_study {
                add(EntityKind::FieldOfStudy, f);
            }
            ents
        })
        .collect();

    let entities: Vec<(EntityKind, String)> = per_paper
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = block.papers.len();
    let entity_index: BTreeMap<&(EntityKind, String), NodeIx> =
        entities.iter().enumerate().map(|(i, e)| (e, n + i)).collect();

    let mut edges = BTreeSet::new();
    let mut adjacency = vec![Vec::new(); n + entities.len()];
    for (p, ents) in per_paper.iter().enumerate() {
        for e in ents {
            let t = entity_index[e];
            edges.insert((p, t));
            adjacency[p].push(t);
            adjacency[t].push(p);
        }
    }
    for list in &mut adjacency {
        list.sort_unstable();
    }

    HeterogeneousNetwork {
        paper_ids: block.papers.iter().map(|p| p.id.clone()).collect(),
        entities,
        edges,
        adjacency,
    }
}
