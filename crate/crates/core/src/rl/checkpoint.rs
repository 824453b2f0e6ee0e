//! Versioned JSON policy checkpoints.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::OBS_DIM;
use crate::episode::write_atomic;
use crate::error::{Error, Result};
use crate::rl::policy::PolicyParameters;

pub const CHECKPOINT_FORMAT: &str = "croprl-policy";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: String,
    version: u32,
    params: PolicyParameters,
}

pub fn checkpoint_bytes(params: &PolicyParameters) -> Result<Vec<u8>> {
    let file = CheckpointFile {
        format: CHECKPOINT_FORMAT.into(),
        version: CHECKPOINT_VERSION,
        params: params.clone(),
    };
    serde_json::to_vec_pretty(&file).map_err(|e| Error::Checkpoint(e.to_string()))
}

/// Writes via a temporary file and rename.
pub fn save_checkpoint(path: impl AsRef<Path>, params: &PolicyParameters) -> Result<()> {
    write_atomic(path, &checkpoint_bytes(params)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<PolicyParameters> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&bytes)
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<PolicyParameters> {
    let file: CheckpointFile =
        serde_json::from_slice(bytes).map_err(|e| Error::Checkpoint(e.to_string()))?;
    if file.format != CHECKPOINT_FORMAT {
        return Err(Error::Checkpoint(format!(
            "unexpected format `{}`",
            file.format
        )));
    }
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {} (expected {CHECKPOINT_VERSION})",
            file.version
        )));
    }
    let p = file.params;
    let expected = p.policy_shape.num_params() + p.value_shape.num_params() + 1;
    let shapes_ok = p.policy_shape.input_dim() == OBS_DIM
        && p.value_shape.input_dim() == OBS_DIM
        && p.policy_shape.sizes.last() == Some(&1)
        && p.value_shape.sizes.last() == Some(&1)
        && p.obs_norm.dim() == OBS_DIM
        && p.obs_norm.var.len() == OBS_DIM;
    if !shapes_ok || p.theta.len() != expected {
        return Err(Error::Checkpoint(
            "parameter shapes are inconsistent".into(),
        ));
    }
    p.check_finite()
        .map_err(|_| Error::Checkpoint("non-finite parameters".into()))?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trips_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut params = PolicyParameters::init(&[8, 8], 10.0, 0.3, &mut rng);
        params.obs_norm.update([[1.0 / 3.0; OBS_DIM].as_slice()]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        save_checkpoint(&path, &params).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, params);
        let bits = |p: &PolicyParameters| p.theta.iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&params));
    }

    #[test]
    fn rejects_wrong_version_and_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = PolicyParameters::init(&[4], 10.0, 0.0, &mut rng);
        let bytes = checkpoint_bytes(&params).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        let bumped = text.replace("\"version\": 1", "\"version\": 99");
        assert!(parse_checkpoint(bumped.as_bytes()).is_err());
        assert!(parse_checkpoint(&bytes[..bytes.len() / 2]).is_err());
    }
}
