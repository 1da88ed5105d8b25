//! Seeded generator of clustered embedding corpora.
//!
//! Each class gets a random unit centroid. Evaluation rows, retrieval rows
//! and the class text embedding are noisy copies of that centroid; the
//! retrieval corpus is padded with unit-random distractor rows that belong to
//! no class.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::corpus::{ClassTextEmbeddings, EmbeddingCorpus, RowMeta, Split};
use crate::error::{Error, Result};
use crate::math;
use crate::rng::{domain, stream_rng, StreamRng};

/// Label carried by distractor rows of the retrieval corpus.
pub const DISTRACTOR_LABEL: &str = "__distractor__";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_classes: usize,
    /// Evaluation rows per class.
    pub per_class: usize,
    /// Retrieval-corpus rows per class.
    pub corpus_per_class: usize,
    pub dim: usize,
    pub intra_class_noise: f64,
    pub text_noise: f64,
    /// Fraction of retrieval rows drawn from no class, in `[0, 1)`.
    pub distractor_fraction: f64,
    pub seed: u64,
    /// Prefix for class names and row ids; distinct prefixes give disjoint
    /// class vocabularies.
    pub class_prefix: String,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_classes: 70,
            per_class: 20,
            corpus_per_class: 500,
            dim: 64,
            intra_class_noise: 0.2,
            text_noise: 0.1,
            distractor_fraction: 0.3,
            seed: 7,
            class_prefix: "class-".to_string(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(Error::InvalidConfig("n_classes must be at least 2".into()));
        }
        if self.dim == 0 {
            return Err(Error::InvalidConfig("dim must be positive".into()));
        }
        if !(self.intra_class_noise >= 0.0 && self.intra_class_noise.is_finite()) {
            return Err(Error::InvalidConfig("intra_class_noise must be >= 0".into()));
        }
        if !(self.text_noise >= 0.0 && self.text_noise.is_finite()) {
            return Err(Error::InvalidConfig("text_noise must be >= 0".into()));
        }
        if !(0.0..1.0).contains(&self.distractor_fraction) {
            return Err(Error::InvalidConfig(
                "distractor_fraction must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    /// Class counts for (train, val, test): 70/15/15 by class.
    pub fn split_sizes(&self) -> (usize, usize, usize) {
        let n = self.n_classes;
        let train = n * 7 / 10;
        let val = n * 15 / 100;
        (train, val, n - train - val)
    }

    pub fn class_name(&self, c: usize) -> String {
        format!("{}{c:04}", self.class_prefix)
    }

    pub fn split_of(&self, c: usize) -> Split {
        let (train, val, _) = self.split_sizes();
        if c < train {
            Split::Train
        } else if c < train + val {
            Split::Val
        } else {
            Split::Test
        }
    }

    pub fn distractor_count(&self) -> usize {
        let class_rows = (self.n_classes * self.corpus_per_class) as f64;
        let f = self.distractor_fraction;
        libm::round(class_rows * f / (1.0 - f)) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub eval: EmbeddingCorpus,
    pub retrieval: EmbeddingCorpus,
    pub text: ClassTextEmbeddings,
}

fn gaussian(rng: &mut StreamRng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn unit(v: &[f64]) -> Vec<f64> {
    // A Gaussian draw has zero norm with probability zero; fall back to e0.
    math::normalized(v).unwrap_or_else(|| {
        let mut e = alloc::vec![0.0; v.len()];
        e[0] = 1.0;
        e
    })
}

fn noisy(centroid: &[f64], sigma: f64, rng: &mut StreamRng) -> Vec<f32> {
    let z = gaussian(rng, centroid.len());
    let v: Vec<f64> = centroid
        .iter()
        .zip(&z)
        .map(|(m, n)| m + sigma * n)
        .collect();
    math::to_f32(&unit(&v))
}

/// Pure function of `spec`: the same spec yields bit-identical corpora.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let dim = spec.dim;
    let mut rng = stream_rng(spec.seed, domain::SYNTH_CENTROIDS, 0);
    let centroids: Vec<Vec<f64>> = (0..spec.n_classes)
        .map(|_| unit(&gaussian(&mut rng, dim)))
        .collect();

    let mut eval_vecs = Vec::with_capacity(spec.n_classes * spec.per_class * dim);
    let mut eval_meta = Vec::with_capacity(spec.n_classes * spec.per_class);
    let mut retr_vecs = Vec::new();
    let mut retr_meta = Vec::new();
    let mut text = Vec::with_capacity(spec.n_classes);
    for (c, mu) in centroids.iter().enumerate() {
        let label = spec.class_name(c);
        let split = spec.split_of(c);
        let c_stream = c as u64;
        let mut rng = stream_rng(spec.seed, domain::SYNTH_EVAL, c_stream);
        for i in 0..spec.per_class {
            eval_vecs.extend(noisy(mu, spec.intra_class_noise, &mut rng));
            eval_meta.push(RowMeta::new(
                format!("{}e{c:04}-{i:05}", spec.class_prefix),
                label.clone(),
                split,
            ));
        }
        let mut rng = stream_rng(spec.seed, domain::SYNTH_RETRIEVAL, c_stream);
        for i in 0..spec.corpus_per_class {
            retr_vecs.extend(noisy(mu, spec.intra_class_noise, &mut rng));
            retr_meta.push(RowMeta::new(
                format!("{}r{c:04}-{i:05}", spec.class_prefix),
                label.clone(),
                split,
            ));
        }
        let mut rng = stream_rng(spec.seed, domain::SYNTH_TEXT, c_stream);
        text.push((label, noisy(mu, spec.text_noise, &mut rng)));
    }
    let mut rng = stream_rng(spec.seed, domain::SYNTH_DISTRACTOR, 0);
    for i in 0..spec.distractor_count() {
        retr_vecs.extend(math::to_f32(&unit(&gaussian(&mut rng, dim))));
        retr_meta.push(RowMeta::new(
            format!("{}d{i:06}", spec.class_prefix),
            DISTRACTOR_LABEL,
            Split::Train,
        ));
    }

    Ok(SyntheticData {
        eval: EmbeddingCorpus::new(dim, eval_vecs, eval_meta)?,
        retrieval: EmbeddingCorpus::new(dim, retr_vecs, retr_meta)?,
        text: ClassTextEmbeddings::new(dim, text)?,
    })
}
