//! Run manifests: a reproducibility record for every CLI command — command
//! name, input digests, parameter map, tool version, output digests.
//! Identical manifests imply byte-identical outputs.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

/// 64-bit FNV-1a digest, hex-encoded. Stable, dependency-free content
/// fingerprint for determinism checks (not a cryptographic hash).
pub fn digest_bytes(bytes: &[u8]) -> String {
    const OFFSET: u64 = 0xcbf29ce484222325;
    const PRIME: u64 = 0x100000001b3;
    let mut h = OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(PRIME);
    }
    format!("{h:016x}")
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(digest_bytes(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub parameters: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            parameters: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn input_file(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs
            .insert(path.display().to_string(), digest_file(path)?);
        Ok(self)
    }

    pub fn output_bytes(&mut self, name: &str, bytes: &[u8]) -> &mut Self {
        self.outputs.insert(name.to_string(), digest_bytes(bytes));
        self
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(Error::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_is_stable() {
        // Standard test vectors for the 64-bit FNV-1a function.
        assert_eq!(digest_bytes(b""), "cbf29ce484222325");
        assert_eq!(digest_bytes(b"a"), "af63dc4c8601ec8c");
        assert_eq!(digest_bytes(b"hello"), "a430d84680aabd0b");
    }

    #[test]
    fn identical_runs_produce_identical_manifests() {
        let mut a = RunManifest::new("demo");
        a.param("radius", 3).output_bytes("out.json", b"{}");
        let mut b = RunManifest::new("demo");
        b.param("radius", 3).output_bytes("out.json", b"{}");
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn parameter_order_is_canonical() {
        let mut a = RunManifest::new("demo");
        a.param("zeta", 1).param("alpha", 2);
        let text = a.to_json().unwrap();
        let alpha = text.find("alpha").unwrap();
        let zeta = text.find("zeta").unwrap();
        assert!(alpha < zeta);
    }
}
