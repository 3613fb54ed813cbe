//! Binary checkpoints holding model weights and optimizer state.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "ABCL"                      magic
//! u32 version                 (1)
//! u32 vocab_size, u32 hidden_size, u32 num_layers
//! f64 dropout
//! u64 adam_step
//! u32 epochs_completed
//! u32 tensor_count            3 * (3 * num_layers + 2)
//! tensor_count x { u32 rank, rank x u32 dim, prod(dims) x f64 }
//! ```
//!
//! Tensors come in three groups of the same declaration order: the
//! parameters, Adam's first moments, Adam's second moments. Biases have
//! rank 1, everything else rank 2.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::adam::AdamState;
use crate::model::{tensor_specs, ModelConfig, ModelParams, TensorSpec};
use crate::numerics::Matrix;

pub const MAGIC: &[u8; 4] = b"ABCL";
pub const VERSION: u32 = 1;
/// Bytes before the first tensor.
pub const HEADER_LEN: usize = 4 + 4 + 3 * 4 + 8 + 8 + 4 + 4;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("not a checkpoint: bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("checkpoint truncated at byte {0}")]
    Truncated(usize),
    #[error("{0} trailing bytes after last tensor")]
    TrailingBytes(usize),
    #[error("tensor {name}: stored shape {got:?} does not match config {expected:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("invalid config in checkpoint: {0}")]
    BadConfig(String),
}

/// Training progress stored alongside the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Progress {
    pub epochs_completed: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub adam: AdamState,
    pub progress: Progress,
}

fn dims(spec: &TensorSpec) -> Vec<usize> {
    if spec.is_bias {
        vec![spec.cols]
    } else {
        vec![spec.rows, spec.cols]
    }
}

/// Exact file size for a model of this shape.
pub fn expected_size(cfg: &ModelConfig) -> usize {
    let per_group: usize = tensor_specs(cfg)
        .iter()
        .map(|s| 4 + 4 * dims(s).len() + 8 * s.rows * s.cols)
        .sum();
    HEADER_LEN + 3 * per_group
}

pub fn encode(ckpt: &Checkpoint) -> Vec<u8> {
    let cfg = &ckpt.params.config;
    let specs = tensor_specs(cfg);
    let mut buf = Vec::with_capacity(expected_size(cfg));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    for n in [cfg.vocab_size, cfg.hidden_size, cfg.num_layers] {
        buf.extend_from_slice(&(n as u32).to_le_bytes());
    }
    buf.extend_from_slice(&cfg.dropout.to_le_bytes());
    buf.extend_from_slice(&ckpt.adam.t.to_le_bytes());
    buf.extend_from_slice(&ckpt.progress.epochs_completed.to_le_bytes());
    buf.extend_from_slice(&(3 * specs.len() as u32).to_le_bytes());
    let groups: [Vec<&Matrix>; 3] = [
        ckpt.params.tensors(),
        ckpt.adam.m.iter().collect(),
        ckpt.adam.v.iter().collect(),
    ];
    for group in groups {
        for (m, spec) in group.into_iter().zip(&specs) {
            let d = dims(spec);
            buf.extend_from_slice(&(d.len() as u32).to_le_bytes());
            for x in d {
                buf.extend_from_slice(&(x as u32).to_le_bytes());
            }
            for x in m.data() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).ok_or(CheckpointError::Truncated(self.pos))?;
        if end > self.bytes.len() {
            return Err(CheckpointError::Truncated(self.bytes.len()));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64, CheckpointError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint, CheckpointError> {
    let mut r = Reader { bytes, pos: 0 };
    let magic: [u8; 4] = r.take(4)?.try_into().expect("4 bytes");
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic(magic));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let vocab_size = r.u32()? as usize;
    let hidden_size = r.u32()? as usize;
    let num_layers = r.u32()? as usize;
    let dropout = r.f64()?;
    let config = ModelConfig {
        vocab_size,
        hidden_size,
        num_layers,
        dropout,
    };
    config
        .validate()
        .map_err(|e| CheckpointError::BadConfig(e.to_string()))?;
    let adam_step = r.u64()?;
    let epochs_completed = r.u32()?;
    let specs = tensor_specs(&config);
    let count = r.u32()? as usize;
    if count != 3 * specs.len() {
        return Err(CheckpointError::BadConfig(format!(
            "tensor count {count}, expected {}",
            3 * specs.len()
        )));
    }

    let mut groups: Vec<Vec<Matrix>> = Vec::with_capacity(3);
    for _ in 0..3 {
        let mut group = Vec::with_capacity(specs.len());
        for spec in &specs {
            let rank = r.u32()? as usize;
            if rank > 2 {
                return Err(CheckpointError::ShapeMismatch {
                    name: spec.name.clone(),
                    expected: dims(spec),
                    got: vec![rank],
                });
            }
            let got: Vec<usize> = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<_, _>>()?;
            if got != dims(spec) {
                return Err(CheckpointError::ShapeMismatch {
                    name: spec.name.clone(),
                    expected: dims(spec),
                    got,
                });
            }
            let n = spec.rows * spec.cols;
            let raw = r.take(8 * n)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            group.push(Matrix::from_vec(spec.rows, spec.cols, data).expect("length checked"));
        }
        groups.push(group);
    }
    if r.pos != bytes.len() {
        return Err(CheckpointError::TrailingBytes(bytes.len() - r.pos));
    }
    let v = groups.pop().expect("three groups");
    let m = groups.pop().expect("three groups");
    let weights = groups.pop().expect("three groups");
    let params = ModelParams::from_tensors(config, weights)
        .map_err(|e| CheckpointError::BadConfig(e.to_string()))?;
    Ok(Checkpoint {
        params,
        adam: AdamState { m, v, t: adam_step },
        progress: Progress { epochs_completed },
    })
}

/// Writes to a sibling temp file and renames it into place.
pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<(), CheckpointError> {
    let io = |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    };
    let bytes = encode(ckpt);
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}
