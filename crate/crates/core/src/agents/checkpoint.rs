//! Binary checkpoint: `u64` LE header length, a JSON header, then the
//! network parameters followed by the normalizer's `mean` and `m2`, all as
//! little-endian `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::a2c::{A2CConfig, A2CPolicy};
use super::mlp::MlpParams;
use super::normalize::ObsNormalizer;
use super::AgentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub label: String,
    pub sizes: [usize; 4],
    pub n_params: usize,
    pub normalizer_dim: usize,
    pub normalizer_count: f64,
    pub config: A2CConfig,
    pub tickers: Vec<String>,
    pub total_timesteps: usize,
}

const FORMAT: &str = "holdtrade-a2c-v1";

pub fn write_checkpoint(
    path: impl AsRef<Path>,
    policy: &A2CPolicy,
    config: &A2CConfig,
    tickers: &[String],
) -> Result<CheckpointHeader, AgentError> {
    let header = CheckpointHeader {
        format: FORMAT.into(),
        label: policy.label_string(),
        sizes: policy.params.sizes(),
        n_params: policy.params.len(),
        normalizer_dim: policy.normalizer.dim(),
        normalizer_count: policy.normalizer.count(),
        config: config.clone(),
        tickers: tickers.to_vec(),
        total_timesteps: config.total_timesteps,
    };
    let json = serde_json::to_vec(&header).map_err(|e| AgentError::Checkpoint(e.to_string()))?;
    let mut buf = Vec::with_capacity(8 + json.len() + 8 * (header.n_params + 2 * header.normalizer_dim));
    buf.extend_from_slice(&(json.len() as u64).to_le_bytes());
    buf.extend_from_slice(&json);
    let floats = policy.params.as_slice().iter().chain(policy.normalizer.mean()).chain(policy.normalizer.m2());
    for v in floats {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path)?;
    f.write_all(&buf)?;
    Ok(header)
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<(CheckpointHeader, A2CPolicy), AgentError> {
    let bytes = fs::read(path)?;
    let bad = |m: &str| AgentError::Checkpoint(m.to_string());
    if bytes.len() < 8 {
        return Err(bad("truncated header length"));
    }
    let hlen = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
    let body = bytes.get(8..8usize.saturating_add(hlen)).ok_or_else(|| bad("truncated header"))?;
    let header: CheckpointHeader = serde_json::from_slice(body).map_err(|e| bad(&e.to_string()))?;
    if header.format != FORMAT {
        return Err(bad(&format!("unsupported format `{}`", header.format)));
    }
    let payload = &bytes[8 + hlen..];
    let expected = header.n_params + 2 * header.normalizer_dim;
    if payload.len() != 8 * expected {
        return Err(bad(&format!("payload holds {} bytes, expected {}", payload.len(), 8 * expected)));
    }
    let floats: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let (p, rest) = floats.split_at(header.n_params);
    let (mean, m2) = rest.split_at(header.normalizer_dim);
    let params = MlpParams::from_flat(header.sizes, p.to_vec())?;
    if params.input_len() != header.normalizer_dim {
        return Err(bad("normalizer dimension does not match network input"));
    }
    let normalizer = ObsNormalizer::from_parts(header.normalizer_count, mean.to_vec(), m2.to_vec())
        .ok_or_else(|| bad("inconsistent normalizer"))?;
    let policy = A2CPolicy::new(params, normalizer, header.label.clone());
    Ok((header, policy))
}
