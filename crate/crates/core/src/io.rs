//! JSON file formats for chains and vertex sets.
//!
//! A chain file is either
//! `{"format": "weighted-edges", "n": .., "edges": [[x, y, w], ..], "family": ..}`
//! or `{"format": "kernel", "P": [[..], ..], "pi": [..], "laziness_applied": ..}`.
//! `family` is optional metadata. A set file is `{"indices": [..]}`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{validation, Result};
use crate::families::FamilySpec;
use crate::set::VertexSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ChainFile {
    WeightedEdges {
        n: usize,
        edges: Vec<(usize, usize, f64)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        family: Option<FamilySpec>,
    },
    Kernel {
        #[serde(rename = "P")]
        p: Vec<Vec<f64>>,
        pi: Vec<f64>,
        #[serde(default)]
        laziness_applied: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        family: Option<FamilySpec>,
    },
}

impl ChainFile {
    /// Weighted edges when the chain still carries them, else the kernel.
    pub fn from_chain(chain: &Chain) -> Self {
        let family = chain.family().cloned();
        match chain.source_edges() {
            Some(edges) => ChainFile::WeightedEdges {
                n: chain.n(),
                edges: edges.to_vec(),
                family,
            },
            None => {
                let k = chain.kernel();
                ChainFile::Kernel {
                    p: (0..chain.n())
                        .map(|x| k.row(x).iter().copied().collect())
                        .collect(),
                    pi: chain.pi().to_vec(),
                    laziness_applied: chain.laziness_applied(),
                    family,
                }
            }
        }
    }

    pub fn build(&self) -> Result<Chain> {
        match self {
            ChainFile::WeightedEdges { n, edges, family } => {
                let chain = Chain::from_weights(*n, edges)?;
                Ok(match family {
                    Some(f) => chain.with_family(f.clone()),
                    None => chain,
                })
            }
            ChainFile::Kernel {
                p,
                pi,
                laziness_applied,
                family,
            } => {
                let n = pi.len();
                if p.len() != n || p.iter().any(|row| row.len() != n) {
                    return Err(validation(format!("kernel must be {n} x {n} to match pi")));
                }
                let kernel = DMatrix::from_fn(n, n, |i, j| p[i][j]);
                let chain =
                    Chain::from_kernel(kernel, pi.clone())?.with_laziness_flag(*laziness_applied);
                Ok(match family {
                    Some(f) => chain.with_family(f.clone()),
                    None => chain,
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetFile {
    pub indices: Vec<usize>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn load_chain(path: &Path) -> Result<Chain> {
    read_json::<ChainFile>(path)?.build()
}

pub fn save_chain(path: &Path, chain: &Chain) -> Result<()> {
    write_json(path, &ChainFile::from_chain(chain))
}

pub fn load_set(path: &Path, n: usize) -> Result<VertexSet> {
    let file: SetFile = read_json(path)?;
    VertexSet::new(n, file.indices)
}

pub fn save_set(path: &Path, set: &VertexSet) -> Result<()> {
    write_json(
        path,
        &SetFile {
            indices: set.indices().to_vec(),
        },
    )
}
