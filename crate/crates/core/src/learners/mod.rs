//! Classifiers over feature matrices.
//!
//! All of them share a small MLP with hand-written reverse mode
//! ([`mlp`]) and a weighted softmax cross-entropy ([`loss`]).

pub mod adam;
pub mod loss;
pub mod lr;
pub mod maml;
pub mod mlp;
pub mod protonet;
pub mod train;
pub mod zeroshot;

pub use loss::{cross_entropy, softmax, LossGrad};
pub use lr::{lr_fit_predict, LogisticRegression, LrModel};
pub use maml::{maml_inner_adapt, Adaptation, InnerRates, MamlConfig, MamlLearner, MetaGradient};
pub use mlp::{mlp_backward, mlp_forward, Dense, Forward, MlpParams};
pub use protonet::{protonet_episode, ProtoConfig, ProtoNetLearner, ProtoOutput};
pub use train::{
    evaluate_untrained, run_seed, run_seed_multi, train_learner, MetaRetrieval, Method, RunConfig, SeedRun,
    TaskData, TrainOptions, TrainReport,
};
pub use zeroshot::zero_shot_predict;

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Fraction of positions where `predicted` equals `truth`.
pub fn accuracy(predicted: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}
