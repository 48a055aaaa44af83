//! Run configuration file: one JSON document with a section per campaign.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ll_campaign::SweepConfig;
use crate::sl_campaign::PrrSweepConfig;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ll: SweepConfig,
    pub sl: PrrSweepConfig,
}

/// Parses JSON text, mapping failures to line/column diagnostics against `path`.
pub fn parse_json<T: DeserializeOwned>(text: &str, path: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: strip_position(&e.to_string()),
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_json(&text, path)
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// Short SHA-256 of the canonical JSON form of `value`.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes =
        serde_json::to_vec(value).map_err(|e| Error::Invariant(format!("config does not serialize: {e}")))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_fills_defaults() {
        let cfg: RunConfig = parse_json(r#"{"ll": {"blocks_per_point": 500}}"#, Path::new("x.json")).unwrap();
        assert_eq!(cfg.ll.blocks_per_point, 500);
        assert_eq!(cfg.sl, PrrSweepConfig::default());
    }

    #[test]
    fn diagnostics_carry_position() {
        let err = parse_json::<RunConfig>("{\n  \"ll\": {\n    \"blocks\": 5\n  }\n}", Path::new("c.json"))
            .unwrap_err();
        match &err {
            Error::Parse { line, message, .. } => {
                assert_eq!(*line, 3);
                assert!(message.contains("unknown field `blocks`"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = a.clone();
        assert_eq!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        b.ll.seed = 2;
        assert_ne!(config_hash(&a).unwrap(), config_hash(&b).unwrap());
        assert_eq!(config_hash(&a).unwrap().len(), 16);
    }
}
