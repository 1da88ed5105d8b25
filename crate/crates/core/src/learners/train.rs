//! Episodic meta-training and evaluation of the four methods.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use super::lr::LogisticRegression;
use super::maml::{MamlConfig, MamlLearner};
use super::protonet::{ProtoConfig, ProtoNetLearner};
use super::zeroshot::zero_shot_predict;
use super::accuracy;
use crate::augment::{augment, build_features, FeatureMatrix};
use crate::corpus::{ClassTextEmbeddings, EmbeddingCorpus, Split};
use crate::episodes::{Episode, EpisodeConfig, EpisodeSampler};
use crate::error::{Error, Result};
use crate::index::VectorIndex;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "lr")]
    Lr,
    #[serde(rename = "maml")]
    Maml,
    #[serde(rename = "protonet")]
    ProtoNet,
    #[serde(rename = "zs")]
    ZeroShot,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lr => "lr",
            Method::Maml => "maml",
            Method::ProtoNet => "protonet",
            Method::ZeroShot => "zs",
        }
    }

    /// Whether the method meta-trains across episodes.
    pub fn is_meta(self) -> bool {
        matches!(self, Method::Maml | Method::ProtoNet)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lr" => Ok(Method::Lr),
            "maml" => Ok(Method::Maml),
            "protonet" => Ok(Method::ProtoNet),
            "zs" => Ok(Method::ZeroShot),
            other => Err(Error::InvalidConfig(alloc::format!("unknown method {other:?}"))),
        }
    }
}

/// Which retrieval meta-learning techniques are on. Fine-grained appends the
/// similarity channel; coarse-grained learns separate inner rates and weights
/// the retrieved-row loss (MAML only).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetaRetrieval {
    None,
    Fine,
    Coarse,
    Both,
}

impl MetaRetrieval {
    pub const ALL: [MetaRetrieval; 4] = [
        MetaRetrieval::None,
        MetaRetrieval::Fine,
        MetaRetrieval::Coarse,
        MetaRetrieval::Both,
    ];

    pub fn fine(self) -> bool {
        matches!(self, MetaRetrieval::Fine | MetaRetrieval::Both)
    }

    pub fn coarse(self) -> bool {
        matches!(self, MetaRetrieval::Coarse | MetaRetrieval::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetaRetrieval::None => "none",
            MetaRetrieval::Fine => "fine",
            MetaRetrieval::Coarse => "coarse",
            MetaRetrieval::Both => "both",
        }
    }
}

impl fmt::Display for MetaRetrieval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetaRetrieval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(MetaRetrieval::None),
            "fine" => Ok(MetaRetrieval::Fine),
            "coarse" => Ok(MetaRetrieval::Coarse),
            "both" => Ok(MetaRetrieval::Both),
            other => Err(Error::InvalidConfig(alloc::format!(
                "unknown meta-retrieval mode {other:?}"
            ))),
        }
    }
}

/// One dataset: evaluation corpus, its class text embeddings and the
/// retrieval index used to augment its episodes.
#[derive(Debug, Clone, Copy)]
pub struct TaskData<'a> {
    pub corpus: &'a EmbeddingCorpus,
    pub text: &'a ClassTextEmbeddings,
    pub index: &'a VectorIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainOptions {
    pub max_steps: usize,
    pub batch_size: usize,
    /// Validate every this many steps (and after the last one).
    pub val_every: usize,
    pub val_episodes: usize,
    pub test_episodes: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self {
            max_steps: 200,
            batch_size: 8,
            val_every: 50,
            val_episodes: 50,
            test_episodes: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// The seed field is replaced by the run seed.
    pub episode: EpisodeConfig,
    pub maml: MamlConfig,
    pub proto: ProtoConfig,
    pub lr: LogisticRegression,
    pub meta_retrieval: MetaRetrieval,
    pub options: TrainOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            episode: EpisodeConfig::default(),
            maml: MamlConfig::default(),
            proto: ProtoConfig::default(),
            lr: LogisticRegression::default(),
            meta_retrieval: MetaRetrieval::None,
            options: TrainOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub steps: usize,
    pub train_loss_curve: Vec<f64>,
    /// `(step, accuracy)` pairs, starting at step 0.
    pub val_accuracy_curve: Vec<(usize, f64)>,
    /// Step whose parameters were tested: the best validation accuracy,
    /// earliest on ties.
    pub selected_step: usize,
    /// Mean accuracy over the test episodes.
    pub test_accuracy: f64,
    /// Standard deviation of per-episode test accuracy.
    pub test_accuracy_std: f64,
    /// Width of the learner's feature rows.
    pub input_width: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub method: Method,
    pub runs: Vec<SeedRun>,
    pub mean_test_accuracy: f64,
    /// Across seeds.
    pub std_test_accuracy: f64,
}

#[derive(Clone)]
enum Model {
    Lr(LogisticRegression),
    Maml(MamlLearner),
    Proto(ProtoNetLearner),
    ZeroShot,
}

impl Model {
    fn predict(&self, prepared: &Prepared) -> Result<Vec<usize>> {
        match (self, prepared) {
            (Model::ZeroShot, Prepared::Raw(ep)) => {
                let q: Vec<&[f32]> = ep.query.iter().map(|r| r.vector.as_slice()).collect();
                zero_shot_predict(&q, &ep.class_text)
            }
            (Model::Lr(lr), Prepared::Features(s, q)) => lr.fit(s)?.predict(q),
            (Model::Maml(m), Prepared::Features(s, q)) => m.predict(s, q),
            (Model::Proto(p), Prepared::Features(s, q)) => p.predict(s, q),
            _ => unreachable!("episode prepared for a different method"),
        }
    }
}

enum Prepared {
    Raw(Episode),
    Features(FeatureMatrix, FeatureMatrix),
}

impl Prepared {
    fn truth(&self) -> Vec<usize> {
        match self {
            Prepared::Raw(ep) => ep.query.iter().map(|r| r.class).collect(),
            Prepared::Features(_, q) => q.labels.clone(),
        }
    }

    fn into_features(self) -> (FeatureMatrix, FeatureMatrix) {
        match self {
            Prepared::Features(s, q) => (s, q),
            Prepared::Raw(_) => unreachable!("raw episodes are never trained on"),
        }
    }
}

struct Source<'a> {
    sampler: EpisodeSampler<'a>,
    index: &'a VectorIndex,
}

impl<'a> Source<'a> {
    fn new(data: &TaskData<'a>, split: Split) -> Self {
        Self {
            sampler: EpisodeSampler::new(data.corpus, data.text, split),
            index: data.index,
        }
    }

    fn prepare(&self, method: Method, ep_cfg: &EpisodeConfig, channel: bool, i: u64) -> Result<Prepared> {
        let ep = self.sampler.sample(ep_cfg, i)?;
        if method == Method::ZeroShot {
            return Ok(Prepared::Raw(ep));
        }
        let aug = augment(ep, self.index, ep_cfg)?;
        let (s, q) = build_features(&aug, channel)?;
        Ok(Prepared::Features(s, q))
    }

    fn prepare_all(&self, method: Method, ep_cfg: &EpisodeConfig, channel: bool, episodes: usize) -> Result<Vec<Prepared>> {
        (0..episodes as u64).map(|i| self.prepare(method, ep_cfg, channel, i)).collect()
    }
}

fn evaluate(model: &Model, episodes: &[Prepared]) -> Result<Vec<f64>> {
    episodes
        .iter()
        .map(|p| Ok(accuracy(&model.predict(p)?, &p.truth())))
        .collect()
}

/// Trains on `train` (train split, validating on its val split) and tests on
/// the test split of `eval`. LR and zero-shot have nothing to meta-train.
pub fn run_seed(method: Method, train: &TaskData, eval: &TaskData, cfg: &RunConfig, seed: u64) -> Result<SeedRun> {
    let mut runs = run_seed_multi(method, train, core::slice::from_ref(eval), cfg, seed)?;
    Ok(runs.remove(0))
}

/// Like [`run_seed`], but trains once and tests on every dataset in `evals`.
pub fn run_seed_multi(
    method: Method,
    train: &TaskData,
    evals: &[TaskData],
    cfg: &RunConfig,
    seed: u64,
) -> Result<Vec<SeedRun>> {
    let ep_cfg = EpisodeConfig { seed, ..cfg.episode };
    ep_cfg.validate()?;
    let channel = cfg.meta_retrieval.fine() && method != Method::ZeroShot;
    let dim = train.corpus.dim();
    for eval in evals {
        if eval.corpus.dim() != dim {
            return Err(Error::DimMismatch {
                expected: dim,
                got: eval.corpus.dim(),
            });
        }
    }
    let width = dim + usize::from(channel);
    let mut model = match method {
        Method::Lr => Model::Lr(cfg.lr),
        Method::ZeroShot => Model::ZeroShot,
        Method::Maml => {
            let maml = MamlConfig {
                learn_inner_lrs: cfg.meta_retrieval.coarse(),
                weighted_loss: cfg.meta_retrieval.coarse(),
                ..cfg.maml.clone()
            };
            Model::Maml(MamlLearner::new(width, ep_cfg.n_way, maml, seed))
        }
        Method::ProtoNet => Model::Proto(ProtoNetLearner::new(width, cfg.proto.clone(), seed)),
    };

    let opts = &cfg.options;
    let mut train_loss_curve = Vec::new();
    let mut val_accuracy_curve = Vec::new();
    let mut steps = 0;
    let mut selected_step = 0;
    if method.is_meta() && opts.max_steps > 0 {
        let train_src = Source::new(train, Split::Train);
        let val_src = Source::new(train, Split::Val);
        let validate = opts.val_episodes > 0;
        // Validation episodes are fixed, so retrieval runs once for all checks.
        let val_set = val_src.prepare_all(method, &ep_cfg, channel, opts.val_episodes)?;
        let mut best: Option<(f64, Model)> = None;
        if validate {
            let acc = math::mean(&evaluate(&model, &val_set)?);
            val_accuracy_curve.push((0, acc));
            best = Some((acc, model.clone()));
        }
        for step in 0..opts.max_steps {
            let first = (step * opts.batch_size) as u64;
            let batch = (0..opts.batch_size as u64)
                .map(|b| Ok(train_src.prepare(method, &ep_cfg, channel, first + b)?.into_features()))
                .collect::<Result<Vec<_>>>()?;
            let loss = match &mut model {
                Model::Maml(m) => m.outer_step(&batch)?,
                Model::Proto(p) => p.outer_step(&batch)?,
                _ => unreachable!(),
            };
            train_loss_curve.push(loss);
            steps = step + 1;
            let due = opts.val_every > 0 && steps % opts.val_every == 0;
            if validate && (due || steps == opts.max_steps) {
                let acc = math::mean(&evaluate(&model, &val_set)?);
                val_accuracy_curve.push((steps, acc));
                if best.as_ref().is_some_and(|(b, _)| acc > *b) {
                    best = Some((acc, model.clone()));
                    selected_step = steps;
                }
            }
        }
        match best {
            Some((_, m)) => model = m,
            None => selected_step = steps,
        }
    }

    evals
        .iter()
        .map(|eval| {
            let test_src = Source::new(eval, Split::Test);
            let accs = evaluate(&model, &test_src.prepare_all(method, &ep_cfg, channel, opts.test_episodes)?)?;
            Ok(SeedRun {
                seed,
                steps,
                train_loss_curve: train_loss_curve.clone(),
                val_accuracy_curve: val_accuracy_curve.clone(),
                selected_step,
                test_accuracy: math::mean(&accs),
                test_accuracy_std: math::sample_std(&accs),
                input_width: if method == Method::ZeroShot { dim } else { width },
            })
        })
        .collect()
}

/// Runs `run_seed` on one dataset for every seed and summarizes across seeds.
pub fn train_learner(method: Method, data: &TaskData, cfg: &RunConfig, seeds: &[u64]) -> Result<TrainReport> {
    let runs = seeds
        .iter()
        .map(|&s| run_seed(method, data, data, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let accs: Vec<f64> = runs.iter().map(|r| r.test_accuracy).collect();
    Ok(TrainReport {
        method,
        mean_test_accuracy: math::mean(&accs),
        std_test_accuracy: math::sample_std(&accs),
        runs,
    })
}

/// Test accuracy of a method without any meta-training.
pub fn evaluate_untrained(method: Method, data: &TaskData, cfg: &RunConfig, seed: u64) -> Result<SeedRun> {
    let cfg = RunConfig {
        options: TrainOptions {
            max_steps: 0,
            ..cfg.options
        },
        ..cfg.clone()
    };
    run_seed(method, data, data, &cfg, seed)
}
