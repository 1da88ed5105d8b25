//! On-disk vector indexes: a JSON descriptor plus corpus-format payloads.
//!
//! IVF indexes store their vectors grouped by inverted list, so list `i`
//! is the row range `list_offsets[i]..list_offsets[i + 1]`.

use std::fs;
use std::path::{Path, PathBuf};

use rafic_core::index::IvfLayout;
use rafic_core::VectorIndex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Ivf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexDescriptor {
    pub mode: Mode,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nlist: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nprobe: Option<usize>,
    /// Relative to the descriptor's directory.
    pub vectors: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroids: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub list_offsets: Option<Vec<usize>>,
}

fn sibling(path: &Path, suffix: &str) -> (String, PathBuf) {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = format!("{stem}.{suffix}");
    (name.clone(), path.with_file_name(name))
}

/// Writes `index` to the descriptor at `path` and its payload files beside it.
pub fn save_index(index: &VectorIndex, path: &Path) -> Result<()> {
    let (vectors_name, vectors_path) = sibling(path, "vectors.rafc");
    let desc = match index.ivf() {
        None => {
            io::write_corpus(&vectors_path, index.corpus())?;
            IndexDescriptor {
                mode: Mode::Exact,
                dim: index.dim(),
                nlist: None,
                nprobe: None,
                vectors: vectors_name,
                centroids: None,
                list_offsets: None,
            }
        }
        Some(ivf) => {
            let order: Vec<usize> = ivf.lists.iter().flatten().copied().collect();
            io::write_corpus(&vectors_path, &index.corpus().subset(&order)?)?;
            let mut offsets = vec![0];
            for list in &ivf.lists {
                offsets.push(offsets.last().unwrap() + list.len());
            }
            let (centroids_name, centroids_path) = sibling(path, "centroids.rafc");
            io::write_matrix(&centroids_path, index.dim(), &ivf.centroids)?;
            IndexDescriptor {
                mode: Mode::Ivf,
                dim: index.dim(),
                nlist: Some(ivf.nlist),
                nprobe: Some(ivf.nprobe),
                vectors: vectors_name,
                centroids: Some(centroids_name),
                list_offsets: Some(offsets),
            }
        }
    };
    let json = serde_json::to_vec_pretty(&desc).map_err(|e| Error::json(path, e))?;
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_index(path: &Path) -> Result<VectorIndex> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let desc: IndexDescriptor = serde_json::from_slice(&bytes).map_err(|e| Error::json(path, e))?;
    let resolve = |name: &str| path.with_file_name(name);
    let corpus = io::read_corpus(&resolve(&desc.vectors))?;
    if corpus.dim() != desc.dim {
        return Err(rafic_core::Error::DimMismatch {
            expected: desc.dim,
            got: corpus.dim(),
        }
        .into());
    }
    let ivf = match desc.mode {
        Mode::Exact => None,
        Mode::Ivf => {
            let missing = |f: &str| Error::Data(format!("{}: ivf index without {f}", path.display()));
            let nlist = desc.nlist.ok_or_else(|| missing("nlist"))?;
            let nprobe = desc.nprobe.ok_or_else(|| missing("nprobe"))?;
            let offsets = desc.list_offsets.as_ref().ok_or_else(|| missing("list_offsets"))?;
            let cpath = resolve(desc.centroids.as_deref().ok_or_else(|| missing("centroids"))?);
            let (cdim, centroids) = io::read_matrix(&cpath)?;
            if cdim != desc.dim {
                return Err(rafic_core::Error::DimMismatch {
                    expected: desc.dim,
                    got: cdim,
                }
                .into());
            }
            if offsets.len() != nlist + 1
                || offsets.first() != Some(&0)
                || offsets.last() != Some(&corpus.len())
                || offsets.windows(2).any(|w| w[0] > w[1])
            {
                return Err(Error::Data(format!("{}: inconsistent list_offsets", path.display())));
            }
            let lists = offsets.windows(2).map(|w| (w[0]..w[1]).collect()).collect();
            Some(IvfLayout {
                nlist,
                nprobe,
                centroids,
                lists,
            })
        }
    };
    Ok(VectorIndex::from_parts(corpus, ivf)?)
}
