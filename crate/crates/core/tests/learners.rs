//! End-to-end learner checks: zero-noise sanity, the pinned logistic
//! regression baseline, a hand-derived meta-gradient and run determinism.

use rafic_core::learners::*;
use rafic_core::*;

struct Fixture {
    data: SyntheticData,
    index: VectorIndex,
}

impl Fixture {
    fn new(spec: SyntheticSpec) -> Self {
        let data = generate_synthetic(&spec).unwrap();
        let index = VectorIndex::build(data.retrieval.clone(), IndexKind::Exact).unwrap();
        Self { data, index }
    }

    fn task(&self) -> TaskData<'_> {
        TaskData {
            corpus: &self.data.eval,
            text: &self.data.text,
            index: &self.index,
        }
    }
}

fn quick(a: usize, steps: usize, test_episodes: usize) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.episode.a_augment = a;
    cfg.options = TrainOptions {
        max_steps: steps,
        val_every: 10,
        val_episodes: 10,
        test_episodes,
        ..TrainOptions::default()
    };
    cfg
}

#[test]
fn zero_noise_is_solved() {
    let fx = Fixture::new(SyntheticSpec {
        intra_class_noise: 0.0,
        text_noise: 0.0,
        corpus_per_class: 30,
        ..SyntheticSpec::default()
    });
    for method in [Method::ZeroShot, Method::Lr, Method::ProtoNet] {
        for a in [0, 5] {
            let run = run_seed(method, &fx.task(), &fx.task(), &quick(a, 20, 100), 0).unwrap();
            assert_eq!(run.test_accuracy, 1.0, "{method:?} A={a}");
        }
    }
}

/// Measured once on the fixed synthetic data and pinned: seed 0, 200 test
/// episodes, N=10, K=1, A=0.
#[test]
fn logistic_regression_baseline_is_pinned() {
    let fx = Fixture::new(SyntheticSpec::default());
    let run = run_seed(Method::Lr, &fx.task(), &fx.task(), &quick(0, 0, 200), 0).unwrap();
    assert!((run.test_accuracy - 0.765).abs() < 1e-9, "{}", run.test_accuracy);
}

/// Two classes, one-layer model from zero, one support row of class 0 at
/// `x_s`, one query row of class 1 at `x_q`, one inner step of rate η.
/// From zero logits the support gradient is `(p − y) x_sᵀ` with p = ½, so the
/// adapted logits are `±η(1 + x_s·x_q)/2`. With `u = η(1 + x_s·x_q)` the
/// query softmax is `(σ(u), 1 − σ(u))` and the first-order meta-gradient is
/// `(σ(u), −σ(u)) ⊗ (x_q, 1)`.
#[test]
fn first_order_meta_gradient_matches_hand_derivation() {
    let eta = 0.3;
    let xs = [0.6, 0.8];
    let xq = [1.0, -0.5];
    let mut support = FeatureMatrix::new(2, 2);
    support.push(xs, 0, 1.0, Origin::Support);
    let mut query = FeatureMatrix::new(2, 2);
    query.push(xq, 1, 1.0, Origin::Query);
    let config = MamlConfig {
        hidden: Vec::new(),
        inner_steps: 1,
        inner_lr_support: eta,
        inner_lr_retrieval: eta,
        ..MamlConfig::default()
    };
    let learner = MamlLearner::from_params(MlpParams::zeros(&[2, 2]), config);
    let mg = learner.meta_gradient(&[(support, query)]).unwrap();

    let u = eta * (1.0 + xs[0] * xq[0] + xs[1] * xq[1]);
    let s = 1.0 / (1.0 + (-u).exp());
    let g = &mg.params.layers[0];
    let want_w = [s * xq[0], s * xq[1], -s * xq[0], -s * xq[1]];
    for (got, want) in g.weights.iter().zip(want_w) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    assert!((g.bias[0] - s).abs() < 1e-12);
    assert!((g.bias[1] + s).abs() < 1e-12);
    // Query loss is −ln(1 − σ(u)).
    assert!((mg.query_loss + (1.0 - s).ln()).abs() < 1e-12);
    // Rate sensitivity is −g · (−½, ½) ⊗ (x_s, 1) = σ(u)(1 + x_s·x_q).
    assert!((mg.d_support_lr - s * u / eta).abs() < 1e-12);
    assert_eq!(mg.d_retrieval_lr, 0.0);
}

#[test]
fn runs_replay_bit_for_bit() {
    let fx = Fixture::new(SyntheticSpec {
        corpus_per_class: 30,
        ..SyntheticSpec::default()
    });
    for method in [Method::Maml, Method::ProtoNet] {
        let mut cfg = quick(2, 6, 10);
        cfg.meta_retrieval = MetaRetrieval::Both;
        let a = run_seed(method, &fx.task(), &fx.task(), &cfg, 4).unwrap();
        let b = run_seed(method, &fx.task(), &fx.task(), &cfg, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.input_width, 65);
        assert_eq!(a.val_accuracy_curve.first().map(|p| p.0), Some(0));
    }
}

#[test]
fn untrained_report_has_no_steps() {
    let fx = Fixture::new(SyntheticSpec {
        corpus_per_class: 30,
        ..SyntheticSpec::default()
    });
    let run = evaluate_untrained(Method::ProtoNet, &fx.task(), &quick(0, 50, 20), 1).unwrap();
    assert_eq!(run.steps, 0);
    assert!(run.train_loss_curve.is_empty());
    assert!((0.0..=1.0).contains(&run.test_accuracy));
}

#[test]
fn validation_selects_the_best_checkpoint() {
    let fx = Fixture::new(SyntheticSpec {
        corpus_per_class: 30,
        ..SyntheticSpec::default()
    });
    let run = run_seed(Method::ProtoNet, &fx.task(), &fx.task(), &quick(0, 30, 20), 2).unwrap();
    let best = run
        .val_accuracy_curve
        .iter()
        .fold((0, f64::MIN), |b, &(s, a)| if a > b.1 { (s, a) } else { b });
    assert_eq!(run.selected_step, best.0);
    assert_eq!(run.steps, 30);
    assert_eq!(run.train_loss_curve.len(), 30);
}
