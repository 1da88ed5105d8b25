//! Result rows and their CSV form.

use std::cmp::Ordering;
use std::path::Path;

use rafic_core::learners::{MetaRetrieval, Method};

use crate::error::{Error, Result};

pub const HEADER: [&str; 11] = [
    "experiment",
    "dataset_train",
    "dataset_eval",
    "method",
    "A",
    "meta_retrieval",
    "seed",
    "test_accuracy",
    "accuracy_std",
    "wall_time_seconds",
    "input_width",
];

/// Column index of `wall_time_seconds`, the only nondeterministic field.
pub const WALL_TIME_COLUMN: usize = 9;

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub experiment: String,
    pub dataset_train: String,
    pub dataset_eval: String,
    pub method: Method,
    pub a: usize,
    pub meta_retrieval: MetaRetrieval,
    pub seed: u64,
    /// Mean over test episodes.
    pub test_accuracy: f64,
    /// Standard deviation over test episodes.
    pub accuracy_std: f64,
    pub wall_time_seconds: f64,
    pub input_width: usize,
}

impl ResultRow {
    /// Output order: experiment, method, A, seed, then the remaining keys.
    pub fn order(&self, other: &Self) -> Ordering {
        (&self.experiment, self.method, self.a, self.seed, self.meta_retrieval)
            .cmp(&(&other.experiment, other.method, other.a, other.seed, other.meta_retrieval))
            .then_with(|| self.dataset_train.cmp(&other.dataset_train))
            .then_with(|| self.dataset_eval.cmp(&other.dataset_eval))
    }

    fn record(&self) -> [String; 11] {
        [
            self.experiment.clone(),
            self.dataset_train.clone(),
            self.dataset_eval.clone(),
            self.method.to_string(),
            self.a.to_string(),
            self.meta_retrieval.to_string(),
            self.seed.to_string(),
            format!("{:.4}", self.test_accuracy),
            format!("{:.4}", self.accuracy_std),
            format!("{:.3}", self.wall_time_seconds),
            self.input_width.to_string(),
        ]
    }
}

fn csv_err(path: &Path, source: csv::Error) -> Error {
    Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv<W: std::io::Write>(rows: &[ResultRow], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

/// Header plus one RFC 4180 line per row.
pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(rows, file).map_err(|e| csv_err(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header = r.headers().map_err(|e| csv_err(path, e))?;
    if header.iter().ne(HEADER) {
        return Err(Error::Data(format!("{}: unexpected CSV header", path.display())));
    }
    let bad = |line: u64, col: &str| Error::Data(format!("{}:{line}: bad {col}", path.display()));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let field = |i: usize| rec.get(i).unwrap_or_default();
        macro_rules! parse {
            ($i:expr) => {
                field($i).parse().map_err(|_| bad(line, HEADER[$i]))?
            };
        }
        rows.push(ResultRow {
            experiment: field(0).to_string(),
            dataset_train: field(1).to_string(),
            dataset_eval: field(2).to_string(),
            method: parse!(3),
            a: parse!(4),
            meta_retrieval: parse!(5),
            seed: parse!(6),
            test_accuracy: parse!(7),
            accuracy_std: parse!(8),
            wall_time_seconds: parse!(9),
            input_width: parse!(10),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_has_four_decimals() {
        let row = ResultRow {
            experiment: "e".into(),
            dataset_train: "a".into(),
            dataset_eval: "a".into(),
            method: Method::Lr,
            a: 0,
            meta_retrieval: MetaRetrieval::None,
            seed: 1,
            test_accuracy: 0.123456,
            accuracy_std: 0.5,
            wall_time_seconds: 1.0,
            input_width: 64,
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().nth(1).unwrap().contains(",0.1235,0.5000,"));
    }
}
