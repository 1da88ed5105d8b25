//! Binary embedding matrices with a JSON sidecar manifest.
//!
//! Layout: `"RAFC"`, version `u32`, dim `u32`, count `u64`, then `count * dim`
//! little-endian `f32` values, row-major. The manifest lives next to the
//! binary at `<file>.json`.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rafic_core::{ClassTextEmbeddings, EmbeddingCorpus, RowMeta};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"RAFC";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub rows: Vec<RowMeta>,
    pub classes: Vec<String>,
}

impl Manifest {
    pub fn of(corpus: &EmbeddingCorpus) -> Self {
        Self {
            dim: Some(corpus.dim()),
            rows: corpus.metas().to_vec(),
            classes: corpus.classes(),
        }
    }
}

/// `corpus.rafc` -> `corpus.rafc.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".json");
    path.with_file_name(name)
}

pub fn write_matrix(path: &Path, dim: usize, data: &[f32]) -> Result<()> {
    if dim == 0 || data.len() % dim != 0 {
        return Err(Error::Data(format!(
            "{} values do not form rows of width {dim}",
            data.len()
        )));
    }
    let dim32 = u32::try_from(dim).map_err(|_| Error::Data(format!("dim {dim} too large")))?;
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&dim32.to_le_bytes());
    header.extend_from_slice(&((data.len() / dim) as u64).to_le_bytes());
    w.write_all(&header).map_err(|e| Error::io(path, e))?;
    for x in data {
        w.write_all(&x.to_le_bytes()).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Returns `(dim, row-major values)`. Values are returned as stored.
pub fn read_matrix(path: &Path) -> Result<(usize, Vec<f32>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_LEN {
        return Err(Error::header(path, format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::header(path, "bad magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::header(path, format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if dim == 0 {
        return Err(Error::header(path, "dim is 0"));
    }
    let payload = &bytes[HEADER_LEN..];
    let expected = usize::try_from(count)
        .ok()
        .and_then(|c| c.checked_mul(dim))
        .and_then(|n| n.checked_mul(4));
    if expected != Some(payload.len()) {
        return Err(Error::header(
            path,
            format!("declares {count} rows of dim {dim} but payload holds {} bytes", payload.len()),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dim, data))
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let json = serde_json::to_vec_pretty(manifest).map_err(|e| Error::json(path, e))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))
}

pub fn write_corpus(path: &Path, corpus: &EmbeddingCorpus) -> Result<()> {
    write_matrix(path, corpus.dim(), corpus.vectors())?;
    write_manifest(&manifest_path(path), &Manifest::of(corpus))
}

/// Loads a corpus and its manifest, normalizing rows that are not unit norm.
pub fn read_corpus(path: &Path) -> Result<EmbeddingCorpus> {
    let (dim, data) = read_matrix(path)?;
    let mpath = manifest_path(path);
    let manifest = read_manifest(&mpath)?;
    if let Some(d) = manifest.dim {
        if d != dim {
            return Err(rafic_core::Error::DimMismatch { expected: d, got: dim }.into());
        }
    }
    let rows = data.len() / dim;
    if manifest.rows.len() != rows {
        return Err(rafic_core::Error::RowCountMismatch(format!(
            "manifest lists {} ids, binary holds {rows} rows",
            manifest.rows.len()
        ))
        .into());
    }
    let labels: BTreeSet<&str> = manifest.rows.iter().map(|r| r.label.as_str()).collect();
    let classes: BTreeSet<&str> = manifest.classes.iter().map(String::as_str).collect();
    if labels != classes {
        return Err(Error::Data(format!(
            "{}: class list does not match the row labels",
            mpath.display()
        )));
    }
    Ok(EmbeddingCorpus::new(dim, data, manifest.rows)?)
}

/// Text embeddings reuse the corpus format with label = class name.
pub fn write_text_embeddings(path: &Path, text: &ClassTextEmbeddings) -> Result<()> {
    write_corpus(path, &text.to_corpus()?)
}

pub fn read_text_embeddings(path: &Path) -> Result<ClassTextEmbeddings> {
    Ok(ClassTextEmbeddings::from_corpus(&read_corpus(path)?)?)
}
