use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use super::{IndexKind, VectorIndex};
use crate::corpus::{ClassTextEmbeddings, EmbeddingCorpus};
use crate::error::{Error, Result};
use crate::math;

pub const DEFAULT_PER_IMAGE_K: usize = 20;
pub const DEFAULT_PER_CLASS_K: usize = 100;

/// Exact index over the union of the top `per_image_k` neighbors of every
/// evaluation row and the top `per_class_k` neighbors of every class text
/// embedding, all fetched from `full`.
pub fn build_compact_index(
    full: &VectorIndex,
    eval_corpus: &EmbeddingCorpus,
    text_embeddings: &ClassTextEmbeddings,
    per_image_k: usize,
    per_class_k: usize,
) -> Result<VectorIndex> {
    let mut rows = BTreeSet::new();
    for (_, v) in eval_corpus.rows() {
        for hit in full.search(&math::to_f64(v), per_image_k)? {
            rows.insert(hit.row);
        }
    }
    for (_, t) in text_embeddings.iter() {
        for hit in full.search(&math::to_f64(t), per_class_k)? {
            rows.insert(hit.row);
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyUnion);
    }
    let rows: Vec<usize> = rows.into_iter().collect();
    VectorIndex::build(full.corpus().subset(&rows)?, IndexKind::Exact)
}

/// Mean over queries of `|top-a(candidate) ∩ top-a(reference)|`, divided by
/// the size of the reference result.
pub fn measure_recall(
    reference: &VectorIndex,
    candidate: &VectorIndex,
    queries: &[Vec<f64>],
    a: usize,
) -> Result<f64> {
    if a == 0 {
        return Err(Error::InvalidConfig("recall needs a > 0".into()));
    }
    if reference.dim() != candidate.dim() {
        return Err(Error::DimMismatch {
            expected: reference.dim(),
            got: candidate.dim(),
        });
    }
    if queries.is_empty() {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for q in queries {
        let truth = reference.search(q, a)?;
        if truth.is_empty() {
            total += 1.0;
            continue;
        }
        let truth: BTreeSet<_> = truth.into_iter().map(|h| h.id).collect();
        let found = candidate
            .search(q, a)?
            .into_iter()
            .filter(|h| truth.contains(&h.id))
            .count();
        total += found as f64 / truth.len() as f64;
    }
    Ok(total / queries.len() as f64)
}
