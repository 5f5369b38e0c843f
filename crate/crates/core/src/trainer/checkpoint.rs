//! Model checkpoint: one JSON header line, then the parameters as f32
//! little-endian in the order video W, video b, text W, text b.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::encoder::{DualEncoder, Projection};
use super::train::TrainConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "cmaug-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub video_dim: usize,
    pub text_dim: usize,
    pub embed_dim: usize,
    pub seed: u64,
    pub param_count: usize,
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: CheckpointHeader,
    pub encoder: DualEncoder,
}

impl Checkpoint {
    pub fn new(encoder: DualEncoder, config: &TrainConfig) -> Self {
        let header = CheckpointHeader {
            format: CHECKPOINT_FORMAT.to_owned(),
            version: CHECKPOINT_VERSION,
            video_dim: encoder.video_dim(),
            text_dim: encoder.text_dim(),
            embed_dim: encoder.embed_dim(),
            seed: config.seed,
            param_count: encoder.num_params(),
            config: config.clone(),
        };
        Checkpoint { header, encoder }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec(&self.header).expect("header serializes");
        out.push(b'\n');
        for &p in self.encoder.params() {
            out.extend_from_slice(&(p as f32).to_le_bytes());
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let format_err = |offset: usize, message: String| Error::Format {
            path: path.to_path_buf(),
            offset: offset as u64,
            message,
        };
        let newline = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| format_err(bytes.len(), "missing header line".into()))?;
        let header: CheckpointHeader =
            serde_json::from_slice(&bytes[..newline]).map_err(|e| format_err(0, format!("bad header: {e}")))?;
        if header.format != CHECKPOINT_FORMAT || header.version != CHECKPOINT_VERSION {
            return Err(format_err(
                0,
                format!("unsupported checkpoint {} v{}", header.format, header.version),
            ));
        }
        let expected_params = (header.video_dim + 1) * header.embed_dim + (header.text_dim + 1) * header.embed_dim;
        if header.param_count != expected_params {
            return Err(format_err(
                0,
                format!("param_count {} does not match dims", header.param_count),
            ));
        }
        let blob = &bytes[newline + 1..];
        if blob.len() != 4 * expected_params {
            return Err(format_err(
                newline + 1,
                format!("expected {} weight bytes, found {}", 4 * expected_params, blob.len()),
            ));
        }
        let mut encoder = DualEncoder {
            video: Projection::zeros(header.video_dim, header.embed_dim),
            text: Projection::zeros(header.text_dim, header.embed_dim),
        };
        for (p, chunk) in encoder.params_mut().zip(blob.chunks_exact(4)) {
            *p = f64::from(f32::from_le_bytes(chunk.try_into().unwrap()));
        }
        Ok(Checkpoint { header, encoder })
    }
}
