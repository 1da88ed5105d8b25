//! Seeded N-way K-shot episode sampling.
//!
//! The random stream of an episode is keyed by `(seed, split, episode_index)`
//! only, so any episode can be regenerated in isolation and batches can be
//! sampled in any order or in parallel.

use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassTextEmbeddings, EmbeddingCorpus, Split};
use crate::error::{Error, Result};
use crate::rng::{domain, stream_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub n_way: usize,
    pub k_shot: usize,
    pub q_query: usize,
    /// Retrieved rows per class.
    pub a_augment: usize,
    /// Weight of the class text embedding in the retrieval query.
    pub alpha_t: f64,
    pub seed: u64,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            n_way: 10,
            k_shot: 1,
            q_query: 5,
            a_augment: 0,
            alpha_t: 0.8,
            seed: 0,
        }
    }
}

impl EpisodeConfig {
    /// Values of A swept in the augmentation experiments.
    pub const A_SWEEP: [usize; 6] = [0, 1, 2, 5, 20, 50];

    pub fn validate(&self) -> Result<()> {
        if self.n_way < 2 {
            return Err(Error::InvalidConfig("n_way must be at least 2".into()));
        }
        if self.k_shot < 1 || self.q_query < 1 {
            return Err(Error::InvalidConfig("k_shot and q_query must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha_t) {
            return Err(Error::InvalidConfig("alpha_t must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRow {
    pub id: String,
    pub vector: Vec<f32>,
    /// Index into [`Episode::classes`].
    pub class: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub classes: Vec<String>,
    /// `N·K` rows, class-major.
    pub support: Vec<EpisodeRow>,
    /// `N·Q` rows, class-major.
    pub query: Vec<EpisodeRow>,
    /// Text embedding per class, same order as `classes`.
    pub class_text: Vec<Vec<f32>>,
}

impl Episode {
    pub fn n_way(&self) -> usize {
        self.classes.len()
    }

    pub fn dim(&self) -> usize {
        self.class_text.first().map_or(0, Vec::len)
    }

    pub fn support_of(&self, class: usize) -> impl Iterator<Item = &EpisodeRow> + '_ {
        self.support.iter().filter(move |r| r.class == class)
    }
}

/// Episode source over one split of a corpus; groups rows by class once.
#[derive(Debug, Clone)]
pub struct EpisodeSampler<'a> {
    corpus: &'a EmbeddingCorpus,
    text: &'a ClassTextEmbeddings,
    split: Split,
    classes: Vec<(&'a str, Vec<usize>)>,
}

fn split_domain(split: Split) -> u64 {
    match split {
        Split::Train => domain::EPISODE_TRAIN,
        Split::Val => domain::EPISODE_VAL,
        Split::Test => domain::EPISODE_TEST,
    }
}

impl<'a> EpisodeSampler<'a> {
    pub fn new(corpus: &'a EmbeddingCorpus, text: &'a ClassTextEmbeddings, split: Split) -> Self {
        let classes = corpus.rows_by_class(split).into_iter().collect();
        Self {
            corpus,
            text,
            split,
            classes,
        }
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn sample(&self, config: &EpisodeConfig, episode_index: u64) -> Result<Episode> {
        config.validate()?;
        let n = config.n_way;
        let per_class = config.k_shot + config.q_query;
        if self.classes.len() < n {
            return Err(Error::InsufficientClasses {
                split: self.split.as_str(),
                needed: n,
                available: self.classes.len(),
            });
        }
        let mut rng = stream_rng(config.seed, split_domain(self.split), episode_index);
        let picked = index::sample(&mut rng, self.classes.len(), n);

        let mut episode = Episode {
            classes: Vec::with_capacity(n),
            support: Vec::with_capacity(n * config.k_shot),
            query: Vec::with_capacity(n * config.q_query),
            class_text: Vec::with_capacity(n),
        };
        for (class, ci) in picked.iter().enumerate() {
            let (label, rows) = &self.classes[ci];
            if rows.len() < per_class {
                return Err(Error::InsufficientRows {
                    class: String::from(*label),
                    needed: per_class,
                    available: rows.len(),
                });
            }
            let text = self
                .text
                .get(label)
                .ok_or_else(|| Error::MissingClassText(String::from(*label)))?;
            let chosen = index::sample(&mut rng, rows.len(), per_class);
            for (j, ri) in chosen.iter().enumerate() {
                let row = rows[ri];
                let er = EpisodeRow {
                    id: self.corpus.meta(row).id.clone(),
                    vector: self.corpus.vector(row).to_vec(),
                    class,
                };
                if j < config.k_shot {
                    episode.support.push(er);
                } else {
                    episode.query.push(er);
                }
            }
            episode.classes.push(String::from(*label));
            episode.class_text.push(text.to_vec());
        }
        Ok(episode)
    }

    /// `batch_size` episodes with consecutive indices starting at `first_index`.
    pub fn sample_batch(
        &self,
        config: &EpisodeConfig,
        first_index: u64,
        batch_size: usize,
    ) -> Result<Vec<Episode>> {
        (0..batch_size as u64)
            .map(|i| self.sample(config, first_index + i))
            .collect()
    }
}

pub fn sample_episode(
    corpus: &EmbeddingCorpus,
    text: &ClassTextEmbeddings,
    split: Split,
    config: &EpisodeConfig,
    episode_index: u64,
) -> Result<Episode> {
    EpisodeSampler::new(corpus, text, split).sample(config, episode_index)
}

pub fn sample_batch(
    corpus: &EmbeddingCorpus,
    text: &ClassTextEmbeddings,
    split: Split,
    config: &EpisodeConfig,
    first_index: u64,
    batch_size: usize,
) -> Result<Vec<Episode>> {
    EpisodeSampler::new(corpus, text, split).sample_batch(config, first_index, batch_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RowMeta;
    use alloc::collections::BTreeSet;
    use alloc::format;
    use alloc::vec;

    /// `classes` classes with `rows` rows each, all in the test split.
    fn tiny(classes: usize, rows: usize) -> (EmbeddingCorpus, ClassTextEmbeddings) {
        let dim = classes * rows;
        let mut v = vec![0f32; dim * dim];
        let mut meta = Vec::new();
        for c in 0..classes {
            for r in 0..rows {
                let i = c * rows + r;
                v[i * dim + i] = 1.0;
                meta.push(RowMeta::new(format!("c{c}-{r}"), format!("c{c}"), Split::Test));
            }
        }
        let text = ClassTextEmbeddings::new(
            dim,
            (0..classes).map(|c| {
                let mut t = vec![0f32; dim];
                t[c * rows] = 1.0;
                (format!("c{c}"), t)
            }),
        )
        .unwrap();
        (EmbeddingCorpus::new(dim, v, meta).unwrap(), text)
    }

    fn cfg(n: usize, k: usize, q: usize) -> EpisodeConfig {
        EpisodeConfig {
            n_way: n,
            k_shot: k,
            q_query: q,
            seed: 11,
            ..EpisodeConfig::default()
        }
    }

    #[test]
    fn forced_partition() {
        let (corpus, text) = tiny(3, 4);
        let ep = sample_episode(&corpus, &text, Split::Test, &cfg(3, 1, 3), 0).unwrap();
        let support: BTreeSet<_> = ep.support.iter().map(|r| r.id.clone()).collect();
        let query: BTreeSet<_> = ep.query.iter().map(|r| r.id.clone()).collect();
        assert!(support.is_disjoint(&query));
        assert_eq!(support.len() + query.len(), 12);
        for c in 0..3 {
            assert_eq!(ep.support.iter().filter(|r| r.class == c).count(), 1);
            assert_eq!(ep.query.iter().filter(|r| r.class == c).count(), 3);
            let label = &ep.classes[c];
            assert!(ep.support_of(c).all(|r| r.id.starts_with(&format!("{label}-"))));
        }
    }

    #[test]
    fn errors() {
        let (corpus, text) = tiny(3, 4);
        assert!(matches!(
            sample_episode(&corpus, &text, Split::Test, &cfg(4, 1, 1), 0),
            Err(Error::InsufficientClasses { needed: 4, available: 3, .. })
        ));
        assert!(matches!(
            sample_episode(&corpus, &text, Split::Test, &cfg(2, 2, 3), 0),
            Err(Error::InsufficientRows { needed: 5, available: 4, .. })
        ));
        assert!(matches!(
            sample_episode(&corpus, &text, Split::Train, &cfg(2, 1, 1), 0),
            Err(Error::InsufficientClasses { available: 0, .. })
        ));
    }

    #[test]
    fn batch_edges() {
        let (corpus, text) = tiny(4, 3);
        let c = cfg(2, 1, 1);
        assert!(sample_batch(&corpus, &text, Split::Test, &c, 0, 0).unwrap().is_empty());
        let one = sample_batch(&corpus, &text, Split::Test, &c, 5, 1).unwrap();
        assert_eq!(one[0], sample_episode(&corpus, &text, Split::Test, &c, 5).unwrap());
    }
}
