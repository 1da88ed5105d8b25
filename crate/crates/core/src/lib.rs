//! Retrieval-augmented few-shot classification over precomputed embeddings.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithmic piece
//! of the pipeline:
//!
//! - [`corpus`] and [`synthetic`]: embedding corpora with id/label/split
//!   metadata, plus a seeded generator of clustered corpora.
//! - [`index`]: cosine top-A search, exact or over k-means inverted lists, and
//!   the compact sub-index builder.
//! - [`episodes`]: seeded N-way K-shot episode sampling.
//! - [`augment`]: query composition, retrieval augmentation and the feature
//!   matrix with the optional similarity channel.
//! - [`learners`]: logistic regression, first-order MAML, prototypical
//!   networks and zero-shot classification, all on a hand-written MLP.
//!
//! File formats, the experiment harness and the command line live in the
//! `rafic` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod augment;
pub mod corpus;
pub mod episodes;
pub mod error;
pub mod index;
pub mod learners;
pub mod math;
pub mod rng;
pub mod synthetic;

pub use augment::{
    augment, build_features, compose_query_embedding, episode_queries, AugmentedEpisode, FeatureMatrix, Origin,
    RetrievedRow,
};
pub use corpus::{ClassTextEmbeddings, EmbeddingCorpus, RowMeta, Split};
pub use episodes::{sample_batch, sample_episode, Episode, EpisodeConfig, EpisodeRow, EpisodeSampler};
pub use error::{Error, Result};
pub use index::{
    build_compact_index, measure_recall, IndexKind, IvfParams, SearchHit, VectorIndex,
};
pub use synthetic::{generate_synthetic, SyntheticData, SyntheticSpec};
