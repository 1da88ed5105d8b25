//! Embedding corpora and class-name text embeddings.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;

/// Rows whose norm is already within this distance of 1 are stored verbatim,
/// which keeps save/load bit-exact for data that was normalized upstream.
pub const UNIT_NORM_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidCorpus(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowMeta {
    pub id: String,
    pub label: String,
    pub split: Split,
}

impl RowMeta {
    pub fn new(id: impl Into<String>, label: impl Into<String>, split: Split) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            split,
        }
    }
}

/// A dense `rows × dim` f32 matrix of unit vectors with per-row metadata.
///
/// Immutable once built; every constructor normalizes and validates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCorpus {
    dim: usize,
    vectors: Vec<f32>,
    meta: Vec<RowMeta>,
}

impl EmbeddingCorpus {
    /// Builds a corpus from a row-major payload, L2-normalizing each row.
    pub fn new(dim: usize, mut vectors: Vec<f32>, meta: Vec<RowMeta>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCorpus("dim must be positive".to_string()));
        }
        if vectors.len() % dim != 0 {
            return Err(Error::DimMismatch {
                expected: dim,
                got: vectors.len() % dim,
            });
        }
        let rows = vectors.len() / dim;
        if rows != meta.len() {
            return Err(Error::RowCountMismatch(format!(
                "payload holds {rows} rows, metadata lists {}",
                meta.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for m in &meta {
            if !seen.insert(m.id.as_str()) {
                return Err(Error::DuplicateId(m.id.clone()));
            }
        }
        for (row, v) in vectors.chunks_exact_mut(dim).enumerate() {
            normalize_row(v).ok_or(Error::ZeroVector { row })?;
        }
        Ok(Self { dim, vectors, meta })
    }

    pub fn empty(dim: usize) -> Result<Self> {
        Self::new(dim, Vec::new(), Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn vector(&self, row: usize) -> &[f32] {
        &self.vectors[row * self.dim..(row + 1) * self.dim]
    }

    /// The flat row-major payload.
    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn meta(&self, row: usize) -> &RowMeta {
        &self.meta[row]
    }

    pub fn metas(&self) -> &[RowMeta] {
        &self.meta
    }

    pub fn rows(&self) -> impl Iterator<Item = (&RowMeta, &[f32])> + '_ {
        self.meta.iter().zip(self.vectors.chunks_exact(self.dim))
    }

    /// Sorted distinct labels.
    pub fn classes(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.meta.iter().map(|m| m.label.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }

    /// Row indices grouped by label, restricted to one split, labels sorted.
    pub fn rows_by_class(&self, split: Split) -> BTreeMap<&str, Vec<usize>> {
        let mut out: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, m) in self.meta.iter().enumerate() {
            if m.split == split {
                out.entry(m.label.as_str()).or_default().push(i);
            }
        }
        out
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.meta.iter().position(|m| m.id == id)
    }

    /// New corpus holding the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        let mut vectors = Vec::with_capacity(rows.len() * self.dim);
        let mut meta = Vec::with_capacity(rows.len());
        for &r in rows {
            vectors.extend_from_slice(self.vector(r));
            meta.push(self.meta[r].clone());
        }
        Self::new(self.dim, vectors, meta)
    }
}

/// Normalizes in place; returns `None` for zero or non-finite rows.
fn normalize_row(v: &mut [f32]) -> Option<()> {
    let n = math::norm_f32(v);
    if !(n > 0.0 && n.is_finite()) {
        return None;
    }
    if (n - 1.0).abs() > UNIT_NORM_SLACK {
        for x in v.iter_mut() {
            *x = (f64::from(*x) / n) as f32;
        }
    }
    Some(())
}

/// Per-class text embedding (the class name rendered into a prompt and
/// encoded offline), keyed by label.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ClassTextEmbeddings {
    dim: usize,
    entries: BTreeMap<String, Vec<f32>>,
}

impl ClassTextEmbeddings {
    pub fn new(dim: usize, entries: impl IntoIterator<Item = (String, Vec<f32>)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (row, (label, mut v)) in entries.into_iter().enumerate() {
            if v.len() != dim {
                return Err(Error::DimMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
            normalize_row(&mut v).ok_or(Error::ZeroVector { row })?;
            if map.insert(label.clone(), v).is_some() {
                return Err(Error::DuplicateId(label));
            }
        }
        Ok(Self { dim, entries: map })
    }

    /// Reads a corpus whose labels are class names, one row per class.
    pub fn from_corpus(corpus: &EmbeddingCorpus) -> Result<Self> {
        Self::new(
            corpus.dim(),
            corpus
                .rows()
                .map(|(m, v)| (m.label.clone(), v.to_vec())),
        )
    }

    /// Corpus form used for persistence: id and label are the class name.
    pub fn to_corpus(&self) -> Result<EmbeddingCorpus> {
        let mut vectors = Vec::with_capacity(self.entries.len() * self.dim);
        let mut meta = Vec::with_capacity(self.entries.len());
        for (label, v) in &self.entries {
            vectors.extend_from_slice(v);
            meta.push(RowMeta::new(label.clone(), label.clone(), Split::Train));
        }
        EmbeddingCorpus::new(self.dim, vectors, meta)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<&[f32]> {
        self.entries.get(label).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f32])> + '_ {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Checks that every label of `corpus` has an entry.
    pub fn covers(&self, corpus: &EmbeddingCorpus) -> Result<()> {
        if self.dim != corpus.dim() && !self.is_empty() {
            return Err(Error::DimMismatch {
                expected: corpus.dim(),
                got: self.dim,
            });
        }
        for label in corpus.classes() {
            if !self.entries.contains_key(&label) {
                return Err(Error::MissingClassText(label));
            }
        }
        Ok(())
    }
}
