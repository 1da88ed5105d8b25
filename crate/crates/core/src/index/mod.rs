//! Cosine top-A search.
//!
//! Vectors are unit-norm, so cosine similarity is a plain dot product. Hits
//! are ordered by descending score, ties by ascending id.

mod compact;
pub mod kmeans;

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::corpus::EmbeddingCorpus;
use crate::error::{Error, Result};
use crate::math;

pub use compact::{build_compact_index, measure_recall, DEFAULT_PER_CLASS_K, DEFAULT_PER_IMAGE_K};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IvfParams {
    pub nlist: usize,
    pub nprobe: usize,
    /// Seeds the k-means initialization.
    pub seed: u64,
}

impl Default for IvfParams {
    fn default() -> Self {
        Self {
            nlist: 64,
            nprobe: 8,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum IndexKind {
    Exact,
    Ivf(IvfParams),
}

/// Coarse quantizer plus inverted lists.
#[derive(Debug, Clone, PartialEq)]
pub struct IvfLayout {
    pub nlist: usize,
    pub nprobe: usize,
    /// `nlist × dim`.
    pub centroids: Vec<f32>,
    /// Row indices per list; every row appears in exactly one list. Built
    /// indices keep the corpus in list order.
    pub lists: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchHit {
    pub id: String,
    /// Row in the index's corpus.
    pub row: usize,
    pub score: f64,
    pub vector: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    corpus: EmbeddingCorpus,
    ivf: Option<IvfLayout>,
}

/// Total order used for ranking: higher score first, then smaller id.
pub fn hit_order(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

impl VectorIndex {
    pub fn build(corpus: EmbeddingCorpus, kind: IndexKind) -> Result<Self> {
        match kind {
            IndexKind::Exact => Ok(Self { corpus, ivf: None }),
            IndexKind::Ivf(p) => {
                if p.nlist == 0 {
                    return Err(Error::InvalidConfig("nlist must be positive".into()));
                }
                if p.nlist > corpus.len() {
                    return Err(Error::InvalidConfig(alloc::format!(
                        "nlist {} exceeds row count {}",
                        p.nlist,
                        corpus.len()
                    )));
                }
                check_nprobe(p.nprobe, p.nlist)?;
                let km = kmeans::kmeans(
                    corpus.vectors(),
                    corpus.dim(),
                    p.nlist,
                    kmeans::KMEANS_ITERATIONS,
                    p.seed,
                )?;
                let mut members = alloc::vec![Vec::new(); p.nlist];
                for (row, &l) in km.assignment.iter().enumerate() {
                    members[l].push(row);
                }
                // Store rows in list order so each probed list is one
                // contiguous block; lists then hold the new row numbers.
                let order: Vec<usize> = members.iter().flatten().copied().collect();
                let mut next = 0;
                let lists = members
                    .iter()
                    .map(|m| {
                        next += m.len();
                        (next - m.len()..next).collect()
                    })
                    .collect();
                Ok(Self {
                    corpus: corpus.subset(&order)?,
                    ivf: Some(IvfLayout {
                        nlist: p.nlist,
                        nprobe: p.nprobe,
                        centroids: km.centroids,
                        lists,
                    }),
                })
            }
        }
    }

    /// Reassembles an index from persisted parts.
    pub fn from_parts(corpus: EmbeddingCorpus, ivf: Option<IvfLayout>) -> Result<Self> {
        if let Some(l) = &ivf {
            check_nprobe(l.nprobe, l.nlist)?;
            if l.lists.len() != l.nlist || l.centroids.len() != l.nlist * corpus.dim() {
                return Err(Error::InvalidConfig("inverted lists do not match nlist".into()));
            }
            let mut seen = alloc::vec![false; corpus.len()];
            for &r in l.lists.iter().flatten() {
                if r >= corpus.len() || core::mem::replace(&mut seen[r], true) {
                    return Err(Error::InvalidConfig(
                        "inverted lists must partition the rows".into(),
                    ));
                }
            }
            if seen.iter().any(|s| !s) {
                return Err(Error::InvalidConfig(
                    "inverted lists must partition the rows".into(),
                ));
            }
        }
        Ok(Self { corpus, ivf })
    }

    pub fn corpus(&self) -> &EmbeddingCorpus {
        &self.corpus
    }

    pub fn ivf(&self) -> Option<&IvfLayout> {
        self.ivf.as_ref()
    }

    pub fn dim(&self) -> usize {
        self.corpus.dim()
    }

    pub fn len(&self) -> usize {
        self.corpus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.corpus.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.ivf.is_none()
    }

    /// Changes the probe count of an inverted-list index; no-op when exact.
    pub fn set_nprobe(&mut self, nprobe: usize) -> Result<()> {
        if let Some(l) = &mut self.ivf {
            check_nprobe(nprobe, l.nlist)?;
            l.nprobe = nprobe;
        }
        Ok(())
    }

    /// Top-`a` rows by cosine similarity to `query` (normalized here).
    pub fn search(&self, query: &[f64], a: usize) -> Result<Vec<SearchHit>> {
        if query.len() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                got: query.len(),
            });
        }
        if a == 0 || self.is_empty() {
            return Ok(Vec::new());
        }
        let q = math::normalized(query).ok_or(Error::DegenerateQuery)?;
        let q32: Vec<f32> = q.iter().map(|&x| x as f32).collect();
        let candidates: Vec<usize> = match &self.ivf {
            None => (0..self.len()).collect(),
            Some(l) => self
                .probe_order(l, &q)
                .into_iter()
                .take(l.nprobe)
                .flat_map(|list| l.lists[list].iter().copied())
                .collect(),
        };
        // Single-precision pass first; only rows that could reach the top
        // `a` after rounding are rescored in double precision.
        let rough: Vec<f32> = candidates
            .iter()
            .map(|&r| math::dot_f32(&q32, self.corpus.vector(r)))
            .collect();
        let take = a.min(candidates.len());
        let cutoff = if take < rough.len() {
            let mut sorted = rough.clone();
            let (_, kth, _) = sorted.select_nth_unstable_by(take - 1, |x, y| y.total_cmp(x));
            f64::from(*kth) - 2.0 * math::f32_dot_slack(self.dim())
        } else {
            f64::NEG_INFINITY
        };
        let mut scored: Vec<(f64, usize)> = candidates
            .iter()
            .zip(&rough)
            .filter(|&(_, &s)| f64::from(s) >= cutoff)
            .map(|(&r, _)| (math::dot_mixed(&q, self.corpus.vector(r)), r))
            .collect();
        // Ids are only consulted on score ties.
        let cmp = |x: &(f64, usize), y: &(f64, usize)| {
            y.0.total_cmp(&x.0)
                .then_with(|| self.corpus.meta(x.1).id.cmp(&self.corpus.meta(y.1).id))
        };
        if take < scored.len() {
            scored.select_nth_unstable_by(take - 1, cmp);
            scored.truncate(take);
        }
        scored.sort_unstable_by(cmp);
        Ok(scored
            .into_iter()
            .map(|(score, row)| SearchHit {
                id: self.corpus.meta(row).id.clone(),
                row,
                score,
                vector: self.corpus.vector(row).to_vec(),
            })
            .collect())
    }

    /// Lists sorted by squared distance from the query to their centroid.
    fn probe_order(&self, l: &IvfLayout, q: &[f64]) -> Vec<usize> {
        let dim = self.dim();
        let mut d: Vec<(f64, usize)> = l
            .centroids
            .chunks_exact(dim)
            .enumerate()
            .map(|(j, c)| {
                let s: f64 = q
                    .iter()
                    .zip(c)
                    .map(|(x, &y)| {
                        let t = x - f64::from(y);
                        t * t
                    })
                    .sum();
                (s, j)
            })
            .collect();
        d.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.into_iter().map(|(_, j)| j).collect()
    }
}

fn check_nprobe(nprobe: usize, nlist: usize) -> Result<()> {
    if nprobe == 0 || nprobe > nlist {
        return Err(Error::InvalidConfig(alloc::format!(
            "nprobe {nprobe} must lie in 1..={nlist}"
        )));
    }
    Ok(())
}
