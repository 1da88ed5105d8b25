use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rafic::core::index::{build_compact_index, measure_recall, DEFAULT_PER_CLASS_K, DEFAULT_PER_IMAGE_K};
use rafic::core::learners::{MetaRetrieval, Method};
use rafic::core::{episode_queries, generate_synthetic, EpisodeConfig, EpisodeSampler, IndexKind, IvfParams, Split, SyntheticSpec, VectorIndex};
use rafic::harness::{self, Dataset, ExperimentSpec};
use rafic::{index_file, io, results, Error, Result};

#[derive(Parser)]
#[command(name = "rafic", version, about = "Retrieval-augmented few-shot classification on embedding corpora")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic evaluation corpus, retrieval corpus and class text embeddings.
    GenSynthetic(GenArgs),
    /// Build an exact or IVF index over a retrieval corpus.
    BuildIndex(BuildIndexArgs),
    /// Build an exact index over the rows an evaluation corpus can reach.
    BuildCompactIndex(CompactArgs),
    /// Recall@a of a candidate index against a reference on episode queries.
    EvalRecall(RecallArgs),
    /// Run an experiment and write its result CSV.
    Run(RunArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output directory; receives eval.rafc, retrieval.rafc and text.rafc.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 70)]
    n_classes: usize,
    /// Evaluation rows per class.
    #[arg(long, default_value_t = 20)]
    per_class: usize,
    /// Retrieval rows per class.
    #[arg(long, default_value_t = 500)]
    corpus_per_class: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 0.2)]
    noise: f64,
    #[arg(long, default_value_t = 0.1)]
    text_noise: f64,
    #[arg(long, default_value_t = 0.3)]
    distractor_fraction: f64,
    #[arg(long, default_value = "class-")]
    class_prefix: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Exact,
    Ivf,
}

#[derive(Args)]
struct BuildIndexArgs {
    #[arg(long)]
    retrieval_corpus: PathBuf,
    /// Index descriptor to write; payload files go beside it.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "ivf")]
    mode: Mode,
    #[arg(long, default_value_t = 64)]
    nlist: usize,
    #[arg(long, default_value_t = 8)]
    nprobe: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct CompactArgs {
    /// The full index to draw rows from.
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    text_embeddings: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PER_IMAGE_K)]
    per_image_k: usize,
    #[arg(long, default_value_t = DEFAULT_PER_CLASS_K)]
    per_class_k: usize,
}

#[derive(Args)]
struct RecallArgs {
    /// Reference index.
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    candidate: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    text_embeddings: PathBuf,
    #[arg(long, default_value_t = 200)]
    num_queries: usize,
    /// Number of neighbors compared.
    #[arg(long, default_value_t = 20)]
    top: usize,
    /// Override the candidate's nprobe.
    #[arg(long)]
    nprobe: Option<usize>,
    #[arg(long, default_value = "test")]
    split: Split,
    #[command(flatten)]
    episode: EpisodeArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct EpisodeArgs {
    #[arg(long, default_value_t = 10)]
    n_way: usize,
    #[arg(long, default_value_t = 1)]
    k_shot: usize,
    /// Query rows per class.
    #[arg(long, default_value_t = 5)]
    queries: usize,
    #[arg(long, default_value_t = 0.8)]
    alpha_t: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Experiment {
    Sweep,
    Ablation,
    CrossEval,
}

#[derive(Args)]
struct RunArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    text_embeddings: PathBuf,
    /// Retrieval index built over the retrieval corpus.
    #[arg(long)]
    index: PathBuf,
    /// Dataset name in the CSV; defaults to the corpus directory name.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    corpus_b: Option<PathBuf>,
    #[arg(long)]
    text_embeddings_b: Option<PathBuf>,
    #[arg(long)]
    index_b: Option<PathBuf>,
    #[arg(long)]
    name_b: Option<String>,
    #[command(flatten)]
    episode: EpisodeArgs,
    /// Retrieved rows per class; repeat for a sweep.
    #[arg(long = "augment")]
    augment: Vec<usize>,
    /// Repeat for several methods; defaults to all four.
    #[arg(long = "method")]
    method: Vec<Method>,
    #[arg(long, default_value = "none")]
    meta_retrieval: MetaRetrieval,
    /// Comma-separated run seeds; defaults to five seeds starting at --seed.
    #[arg(long, value_delimiter = ',', conflicts_with = "seed")]
    seeds: Vec<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    inner_steps: Option<usize>,
    #[arg(long)]
    max_steps: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    test_episodes: Option<usize>,
    #[arg(long)]
    val_episodes: Option<usize>,
    /// Value of the experiment column; defaults to the experiment kind.
    #[arg(long)]
    experiment_name: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

impl EpisodeArgs {
    fn config(&self, seed: u64) -> EpisodeConfig {
        EpisodeConfig {
            n_way: self.n_way,
            k_shot: self.k_shot,
            q_query: self.queries,
            a_augment: 0,
            alpha_t: self.alpha_t,
            seed,
        }
    }
}

fn gen_synthetic(args: GenArgs) -> Result<()> {
    let spec = SyntheticSpec {
        n_classes: args.n_classes,
        per_class: args.per_class,
        corpus_per_class: args.corpus_per_class,
        dim: args.dim,
        intra_class_noise: args.noise,
        text_noise: args.text_noise,
        distractor_fraction: args.distractor_fraction,
        seed: args.seed,
        class_prefix: args.class_prefix,
    };
    let data = generate_synthetic(&spec)?;
    fs::create_dir_all(&args.out).map_err(|e| Error::Io {
        path: args.out.clone(),
        source: e,
    })?;
    io::write_corpus(&args.out.join("eval.rafc"), &data.eval)?;
    io::write_corpus(&args.out.join("retrieval.rafc"), &data.retrieval)?;
    io::write_text_embeddings(&args.out.join("text.rafc"), &data.text)?;
    eprintln!(
        "wrote {} eval rows, {} retrieval rows, {} classes to {}",
        data.eval.len(),
        data.retrieval.len(),
        data.text.len(),
        args.out.display()
    );
    Ok(())
}

fn build_index(args: BuildIndexArgs) -> Result<()> {
    let corpus = io::read_corpus(&args.retrieval_corpus)?;
    let kind = match args.mode {
        Mode::Exact => IndexKind::Exact,
        Mode::Ivf => IndexKind::Ivf(IvfParams {
            nlist: args.nlist,
            nprobe: args.nprobe,
            seed: args.seed,
        }),
    };
    let index = VectorIndex::build(corpus, kind)?;
    index_file::save_index(&index, &args.out)?;
    eprintln!("indexed {} rows into {}", index.len(), args.out.display());
    Ok(())
}

fn build_compact(args: CompactArgs) -> Result<()> {
    let full = index_file::load_index(&args.index)?;
    let eval = io::read_corpus(&args.corpus)?;
    let text = io::read_text_embeddings(&args.text_embeddings)?;
    let compact = build_compact_index(&full, &eval, &text, args.per_image_k, args.per_class_k)?;
    index_file::save_index(&compact, &args.out)?;
    eprintln!("kept {} of {} rows in {}", compact.len(), full.len(), args.out.display());
    Ok(())
}

fn eval_recall(args: RecallArgs) -> Result<()> {
    let reference = index_file::load_index(&args.index)?;
    let mut candidate = index_file::load_index(&args.candidate)?;
    if let Some(nprobe) = args.nprobe {
        candidate.set_nprobe(nprobe)?;
    }
    let eval = io::read_corpus(&args.corpus)?;
    let text = io::read_text_embeddings(&args.text_embeddings)?;
    let cfg = args.episode.config(args.seed);
    let sampler = EpisodeSampler::new(&eval, &text, args.split);
    let mut queries = Vec::with_capacity(args.num_queries);
    let mut i = 0;
    while queries.len() < args.num_queries {
        queries.extend(episode_queries(&sampler.sample(&cfg, i)?, cfg.alpha_t)?);
        i += 1;
    }
    queries.truncate(args.num_queries);
    let recall = measure_recall(&reference, &candidate, &queries, args.top)?;
    println!("recall@{}\t{recall:.6}\t{} queries", args.top, queries.len());
    Ok(())
}

fn dataset_name(explicit: Option<String>, corpus: &Path) -> String {
    explicit.unwrap_or_else(|| {
        corpus
            .parent()
            .and_then(Path::file_name)
            .or_else(|| corpus.file_stem())
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    })
}

fn run(args: RunArgs) -> Result<()> {
    let seeds = if args.seeds.is_empty() {
        let base = args.seed.unwrap_or(0);
        (base..base + 5).collect()
    } else {
        args.seeds
    };
    let methods = if args.method.is_empty() {
        vec![Method::Lr, Method::Maml, Method::ProtoNet, Method::ZeroShot]
    } else {
        args.method
    };
    let a_sweep = if args.augment.is_empty() {
        EpisodeConfig::A_SWEEP.to_vec()
    } else {
        args.augment
    };
    let kind = match args.experiment {
        Experiment::Sweep => "sweep",
        Experiment::Ablation => "ablation",
        Experiment::CrossEval => "cross-eval",
    };
    let mut spec = ExperimentSpec::new(args.experiment_name.unwrap_or_else(|| kind.into()), methods, a_sweep, seeds);
    spec.meta_retrieval = args.meta_retrieval;
    spec.run.episode = args.episode.config(0);
    spec.run.episode.validate()?;
    if let Some(n) = args.inner_steps {
        spec.run.maml.inner_steps = n;
    }
    let opts = &mut spec.run.options;
    if let Some(n) = args.max_steps {
        opts.max_steps = n;
    }
    if let Some(n) = args.batch_size {
        opts.batch_size = n;
    }
    if let Some(n) = args.test_episodes {
        opts.test_episodes = n;
    }
    if let Some(n) = args.val_episodes {
        opts.val_episodes = n;
    }

    let a = Dataset::load(
        dataset_name(args.name, &args.corpus),
        &args.corpus,
        &args.text_embeddings,
        &args.index,
    )?;
    let rows = match args.experiment {
        Experiment::Sweep => harness::run_sweep(&spec, &a)?,
        Experiment::Ablation => harness::run_ablation(&spec, &a)?,
        Experiment::CrossEval => {
            let (Some(corpus), Some(text), Some(index)) = (args.corpus_b, args.text_embeddings_b, args.index_b) else {
                return Err(Error::Usage(
                    "cross-eval needs --corpus-b, --text-embeddings-b and --index-b".into(),
                ));
            };
            let b = Dataset::load(dataset_name(args.name_b, &corpus), &corpus, &text, &index)?;
            harness::run_cross_eval(&spec, &a, &b)?
        }
    };
    results::emit_csv(&rows, &args.out)?;

    let mut summary: BTreeMap<_, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        summary
            .entry((r.dataset_train.as_str(), r.dataset_eval.as_str(), r.method, r.meta_retrieval, r.a))
            .or_default()
            .push(r.test_accuracy);
    }
    for ((train, eval, method, mr, a), accs) in summary {
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        println!("{train}->{eval}\t{method}\t{mr}\tA={a}\t{mean:.4}\t(n={})", accs.len());
    }
    eprintln!("wrote {} rows to {}", rows.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::GenSynthetic(a) => gen_synthetic(a),
        Command::BuildIndex(a) => build_index(a),
        Command::BuildCompactIndex(a) => build_compact(a),
        Command::EvalRecall(a) => eval_recall(a),
        Command::Run(a) => run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
