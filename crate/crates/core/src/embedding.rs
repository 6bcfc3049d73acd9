//! Dense embedding tables and their plain-text persistence format.
//!
//! The on-disk format is shared by every table in the pipeline (content,
//! relation and generator vectors):
//!
//! ```text
//! N k
//! id x1 x2 ... xk
//! ...
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so
//! write → read → write is byte-identical.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// A table of `dim`-length real vectors keyed by string id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    ids: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            ids: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        }
    }

    /// Builds a table from ids and a row-major matrix.
    pub fn from_rows(dim: usize, ids: Vec<String>, data: Vec<f64>) -> Result<Self> {
        if data.len() != ids.len() * dim {
            return Err(Error::Shape {
                expected: ids.len() * dim,
                got: data.len(),
            });
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            validate_id(id)?;
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Invalid(format!("duplicate embedding id {id:?}")));
            }
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!(
                "embedding row {:?}",
                ids[pos / dim.max(1)]
            )));
        }
        Ok(EmbeddingTable {
            dim,
            ids,
            index,
            data,
        })
    }

    pub fn insert(&mut self, id: impl Into<String>, vector: &[f64]) -> Result<()> {
        let id = id.into();
        validate_id(&id)?;
        if vector.len() != self.dim {
            return Err(Error::Shape {
                expected: self.dim,
                got: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite(format!("embedding row {id:?}")));
        }
        match self.index.get(&id) {
            Some(&row) => self.data[row * self.dim..(row + 1) * self.dim].copy_from_slice(vector),
            None => {
                self.index.insert(id.clone(), self.ids.len());
                self.ids.push(id);
                self.data.extend_from_slice(vector);
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.index
            .get(id)
            .map(|&row| &self.data[row * self.dim..(row + 1) * self.dim])
    }

    pub fn require(&self, id: &str) -> Result<&[f64]> {
        self.get(id).ok_or_else(|| Error::UnknownNode(id.to_string()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.ids
            .iter()
            .enumerate()
            .map(move |(i, id)| (id.as_str(), &self.data[i * self.dim..(i + 1) * self.dim]))
    }

    /// Serializes to the text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.ids.len(), self.dim);
        for (id, row) in self.iter() {
            out.push_str(id);
            for x in row {
                let _ = write!(out, " {x}");
            }
            out.push('\n');
        }
        out
    }

    /// Parses the text format, validating the header counts.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "missing header".into(),
        })?;
        let mut parts = header.split_whitespace();
        let parse_count = |s: Option<&str>| -> Result<usize> {
            s.and_then(|s| s.parse().ok()).ok_or(Error::Parse {
                line: 1,
                message: format!("bad header {header:?}, expected \"N k\""),
            })
        };
        let n = parse_count(parts.next())?;
        let dim = parse_count(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::Parse {
                line: 1,
                message: format!("bad header {header:?}, expected \"N k\""),
            });
        }

        let mut table = EmbeddingTable::new(dim);
        let mut row = Vec::with_capacity(dim);
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let mut fields = line.split(' ');
            let id = fields.next().unwrap_or_default();
            row.clear();
            for f in fields {
                let x: f64 = f.parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("bad number {f:?}"),
                })?;
                row.push(x);
            }
            if row.len() != dim {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {dim} values, found {}", row.len()),
                });
            }
            if table.get(id).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("duplicate id {id:?}"),
                });
            }
            table.insert(id, &row).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        if table.len() != n {
            return Err(Error::Parse {
                line: 1,
                message: format!("header declares {n} rows, found {}", table.len()),
            });
        }
        Ok(table)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

fn validate_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(Error::Invalid(format!(
            "embedding id {id:?} must be non-empty and contain no whitespace"
        )));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = norm(a);
    let nb = norm(b);
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot(a, b) / (na * nb)
    }
}
