//! Retrieval augmentation: per-class query composition, top-A retrieval and
//! assembly of the design matrix fed to the learners.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::episodes::{Episode, EpisodeConfig};
use crate::error::{Error, Result};
use crate::index::VectorIndex;
use crate::math;

/// `normalize(α·e_t + (1 − α)·mean(support))`.
pub fn compose_query_embedding(e_t: &[f32], support: &[&[f32]], alpha_t: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&alpha_t) {
        return Err(Error::InvalidConfig("alpha_t must lie in [0, 1]".into()));
    }
    if support.is_empty() {
        return Err(Error::InvalidConfig("need at least one support vector".into()));
    }
    let dim = e_t.len();
    let mut mean = alloc::vec![0f64; dim];
    for s in support {
        if s.len() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                got: s.len(),
            });
        }
        for (m, &x) in mean.iter_mut().zip(s.iter()) {
            *m += f64::from(x);
        }
    }
    let k = support.len() as f64;
    let mixed: Vec<f64> = e_t
        .iter()
        .zip(&mean)
        .map(|(&t, m)| alpha_t * f64::from(t) + (1.0 - alpha_t) * (m / k))
        .collect();
    math::normalized(&mixed).ok_or(Error::DegenerateQuery)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetrievedRow {
    pub id: String,
    pub vector: Vec<f32>,
    /// Raw cosine similarity to the class query.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedEpisode {
    pub base: Episode,
    /// Per class (episode class order), the retrieved rows best-first. Each
    /// row carries the label of the class whose query fetched it.
    pub retrieved: Vec<Vec<RetrievedRow>>,
}

impl AugmentedEpisode {
    /// Wraps an episode with no retrieval.
    pub fn plain(base: Episode) -> Self {
        let n = base.n_way();
        Self {
            base,
            retrieved: alloc::vec![Vec::new(); n],
        }
    }
}

/// The composed retrieval query of every class in `episode`, class-major.
pub fn episode_queries(episode: &Episode, alpha_t: f64) -> Result<Vec<Vec<f64>>> {
    episode
        .class_text
        .iter()
        .enumerate()
        .map(|(c, text)| {
            let support: Vec<&[f32]> = episode.support_of(c).map(|r| r.vector.as_slice()).collect();
            compose_query_embedding(text, &support, alpha_t)
        })
        .collect()
}

/// Retrieves `config.a_augment` rows per class. Support rows of the episode
/// are never returned; query rows never take part in retrieval.
pub fn augment(episode: Episode, index: &VectorIndex, config: &EpisodeConfig) -> Result<AugmentedEpisode> {
    let a = config.a_augment;
    if a == 0 {
        return Ok(AugmentedEpisode::plain(episode));
    }
    if index.dim() != episode.dim() {
        return Err(Error::DimMismatch {
            expected: episode.dim(),
            got: index.dim(),
        });
    }
    let support_ids: BTreeSet<&str> = episode.support.iter().map(|r| r.id.as_str()).collect();
    // Over-fetch by the episode's support size so exclusion cannot starve us.
    let fetch = a + episode.support.len();
    let mut retrieved = Vec::with_capacity(episode.n_way());
    for (c, text) in episode.class_text.iter().enumerate() {
        let support: Vec<&[f32]> = episode.support_of(c).map(|r| r.vector.as_slice()).collect();
        let query = compose_query_embedding(text, &support, config.alpha_t)?;
        let rows: Vec<RetrievedRow> = index
            .search(&query, fetch)?
            .into_iter()
            .filter(|h| !support_ids.contains(h.id.as_str()))
            .take(a)
            .map(|h| RetrievedRow {
                id: h.id,
                vector: h.vector,
                score: h.score,
            })
            .collect();
        if rows.len() < a {
            return Err(Error::IndexTooSmall {
                needed: a,
                available: rows.len(),
            });
        }
        retrieved.push(rows);
    }
    Ok(AugmentedEpisode {
        base: episode,
        retrieved,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Support,
    Retrieved,
    Query,
}

/// Row-major feature rows with labels, loss weights and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub width: usize,
    pub n_classes: usize,
    pub data: Vec<f64>,
    pub labels: Vec<usize>,
    /// 1 for support and query rows, the clamped similarity for retrieved rows.
    pub weights: Vec<f64>,
    pub origin: Vec<Origin>,
}

impl FeatureMatrix {
    pub fn new(width: usize, n_classes: usize) -> Self {
        Self {
            width,
            n_classes,
            data: Vec::new(),
            labels: Vec::new(),
            weights: Vec::new(),
            origin: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.width..(i + 1) * self.width]
    }

    pub fn push(&mut self, features: impl IntoIterator<Item = f64>, label: usize, weight: f64, origin: Origin) {
        let before = self.data.len();
        self.data.extend(features);
        debug_assert_eq!(self.data.len() - before, self.width);
        self.labels.push(label);
        self.weights.push(weight);
        self.origin.push(origin);
    }

    /// Rows with the given origin, order preserved.
    pub fn select(&self, origin: Origin) -> FeatureMatrix {
        let mut out = FeatureMatrix::new(self.width, self.n_classes);
        for i in (0..self.rows()).filter(|&i| self.origin[i] == origin) {
            out.push(self.row(i).iter().copied(), self.labels[i], self.weights[i], origin);
        }
        out
    }

    pub fn count(&self, origin: Origin) -> usize {
        self.origin.iter().filter(|&&o| o == origin).count()
    }
}

fn row_features<'a>(v: &'a [f32], channel: Option<f64>) -> impl Iterator<Item = f64> + 'a {
    v.iter().map(|&x| f64::from(x)).chain(channel)
}

/// Builds `(support_X, query_X)`. Support rows come first (class-major), then
/// retrieved rows (class-major). With `similarity_channel` every row gains a
/// trailing feature: 1 for support and query rows, the clamped cosine score
/// for retrieved rows.
pub fn build_features(aug: &AugmentedEpisode, similarity_channel: bool) -> Result<(FeatureMatrix, FeatureMatrix)> {
    let dim = aug.base.dim();
    let n = aug.base.n_way();
    let width = dim + usize::from(similarity_channel);
    let sentinel = similarity_channel.then_some(1.0);
    let check = |len: usize| {
        if len == dim {
            Ok(())
        } else {
            Err(Error::DimMismatch {
                expected: dim,
                got: len,
            })
        }
    };

    let mut support = FeatureMatrix::new(width, n);
    for r in &aug.base.support {
        check(r.vector.len())?;
        support.push(row_features(&r.vector, sentinel), r.class, 1.0, Origin::Support);
    }
    for (class, rows) in aug.retrieved.iter().enumerate() {
        for r in rows {
            check(r.vector.len())?;
            let w = r.score.clamp(0.0, 1.0);
            support.push(
                row_features(&r.vector, similarity_channel.then_some(w)),
                class,
                w,
                Origin::Retrieved,
            );
        }
    }
    let mut query = FeatureMatrix::new(width, n);
    for r in &aug.base.query {
        check(r.vector.len())?;
        query.push(row_features(&r.vector, sentinel), r.class, 1.0, Origin::Query);
    }
    Ok((support, query))
}
