//! Experiment runners: augmentation sweep, retrieval meta-learning ablation
//! and cross-dataset evaluation. Each produces one [`ResultRow`] per
//! (method, A, meta-retrieval setting, seed, train/eval pair).

use std::path::Path;
use std::time::Instant;

use rafic_core::learners::{run_seed_multi, MetaRetrieval, Method, RunConfig, TaskData};
use rafic_core::{ClassTextEmbeddings, EmbeddingCorpus, VectorIndex};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::results::ResultRow;
use crate::{index_file, io};

/// An evaluation corpus with its class text embeddings and retrieval index.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub corpus: EmbeddingCorpus,
    pub text: ClassTextEmbeddings,
    pub index: VectorIndex,
}

impl Dataset {
    pub fn new(name: impl Into<String>, corpus: EmbeddingCorpus, text: ClassTextEmbeddings, index: VectorIndex) -> Result<Self> {
        text.covers(&corpus)?;
        for got in [text.dim(), index.dim()] {
            if got != corpus.dim() {
                return Err(rafic_core::Error::DimMismatch {
                    expected: corpus.dim(),
                    got,
                }
                .into());
            }
        }
        Ok(Self {
            name: name.into(),
            corpus,
            text,
            index,
        })
    }

    pub fn load(name: impl Into<String>, corpus: &Path, text: &Path, index: &Path) -> Result<Self> {
        Self::new(
            name,
            io::read_corpus(corpus)?,
            io::read_text_embeddings(text)?,
            index_file::load_index(index)?,
        )
    }

    pub fn task(&self) -> TaskData<'_> {
        TaskData {
            corpus: &self.corpus,
            text: &self.text,
            index: &self.index,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    /// Written to the `experiment` column.
    pub name: String,
    pub methods: Vec<Method>,
    pub a_sweep: Vec<usize>,
    /// Setting used by the sweep and cross-eval runners; the ablation
    /// always covers all four.
    pub meta_retrieval: MetaRetrieval,
    pub seeds: Vec<u64>,
    /// Episode shape, learner and training options. `episode.a_augment`,
    /// `episode.seed` and `meta_retrieval` are set per cell.
    pub run: RunConfig,
}

impl ExperimentSpec {
    pub fn new(name: impl Into<String>, methods: Vec<Method>, a_sweep: Vec<usize>, seeds: Vec<u64>) -> Self {
        Self {
            name: name.into(),
            methods,
            a_sweep,
            meta_retrieval: MetaRetrieval::None,
            seeds,
            run: RunConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(Error::Usage("no methods given".into()));
        }
        if self.a_sweep.is_empty() {
            return Err(Error::Usage("the A sweep is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Usage("no seeds given".into()));
        }
        Ok(())
    }

    fn methods(&self) -> Vec<Method> {
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        m
    }

    fn a_values(&self, method: Method) -> Vec<usize> {
        let mut a = self.a_sweep.clone();
        if method == Method::Lr {
            a.push(0);
        }
        a.sort_unstable();
        a.dedup();
        a
    }
}

struct Cell<'d> {
    method: Method,
    a: usize,
    meta_retrieval: MetaRetrieval,
    seed: u64,
    train: &'d Dataset,
    evals: Vec<&'d Dataset>,
}

fn run_cell(spec: &ExperimentSpec, cell: &Cell) -> Result<Vec<ResultRow>> {
    let mut cfg = spec.run.clone();
    cfg.episode.a_augment = cell.a;
    cfg.meta_retrieval = cell.meta_retrieval;
    let start = Instant::now();
    let evals: Vec<TaskData> = cell.evals.iter().map(|d| d.task()).collect();
    let runs = run_seed_multi(cell.method, &cell.train.task(), &evals, &cfg, cell.seed)?;
    let wall = start.elapsed().as_secs_f64();
    Ok(runs
        .into_iter()
        .zip(&cell.evals)
        .map(|(run, eval)| ResultRow {
            experiment: spec.name.clone(),
            dataset_train: cell.train.name.clone(),
            dataset_eval: eval.name.clone(),
            method: cell.method,
            a: cell.a,
            meta_retrieval: cell.meta_retrieval,
            seed: cell.seed,
            test_accuracy: run.test_accuracy,
            accuracy_std: run.test_accuracy_std,
            wall_time_seconds: wall,
            input_width: run.input_width,
        })
        .collect())
}

fn run_cells(spec: &ExperimentSpec, cells: Vec<Cell>) -> Result<Vec<ResultRow>> {
    let mut rows: Vec<ResultRow> = cells
        .par_iter()
        .map(|c| run_cell(spec, c))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    rows.sort_by(ResultRow::order);
    Ok(rows)
}

/// Cells for one training dataset. Zero-shot ignores A and the
/// meta-retrieval setting, so it gets one cell per seed.
fn cells_for<'d>(
    spec: &ExperimentSpec,
    settings: &[MetaRetrieval],
    train: &'d Dataset,
    evals: Vec<&'d Dataset>,
) -> Vec<Cell<'d>> {
    let mut cells = Vec::new();
    for method in spec.methods() {
        let (a_values, settings) = if method == Method::ZeroShot {
            (vec![0], &[MetaRetrieval::None][..])
        } else {
            (spec.a_values(method), settings)
        };
        for &meta_retrieval in settings {
            for &a in &a_values {
                for &seed in &spec.seeds {
                    cells.push(Cell {
                        method,
                        a,
                        meta_retrieval,
                        seed,
                        train,
                        evals: evals.clone(),
                    });
                }
            }
        }
    }
    cells
}

/// Every method over the A sweep and seeds. LR always includes A = 0.
pub fn run_sweep(spec: &ExperimentSpec, data: &Dataset) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    run_cells(spec, cells_for(spec, &[spec.meta_retrieval], data, vec![data]))
}

/// Like [`run_sweep`] for each of none, fine, coarse and both.
pub fn run_ablation(spec: &ExperimentSpec, data: &Dataset) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    run_cells(spec, cells_for(spec, &MetaRetrieval::ALL, data, vec![data]))
}

/// Trains on each dataset and tests on both, giving the pairs a->a, a->b,
/// b->b and b->a. Each trained model is evaluated on both test splits.
pub fn run_cross_eval(spec: &ExperimentSpec, a: &Dataset, b: &Dataset) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    let settings = [spec.meta_retrieval];
    let mut cells = cells_for(spec, &settings, a, vec![a, b]);
    cells.extend(cells_for(spec, &settings, b, vec![b, a]));
    run_cells(spec, cells)
}
