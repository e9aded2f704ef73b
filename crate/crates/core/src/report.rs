use std::fmt;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Outcome of an independent validator. Failures are report content, not
/// errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "result", content = "violation", rename_all = "lowercase")]
pub enum ValidationReport<V> {
    Pass,
    Fail(V),
}

impl<V> ValidationReport<V> {
    pub fn passed(&self) -> bool {
        matches!(self, ValidationReport::Pass)
    }

    pub fn violation(&self) -> Option<&V> {
        match self {
            ValidationReport::Pass => None,
            ValidationReport::Fail(v) => Some(v),
        }
    }
}

impl<V: fmt::Display> fmt::Display for ValidationReport<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValidationReport::Pass => f.write_str("pass"),
            ValidationReport::Fail(v) => write!(f, "fail: {v}"),
        }
    }
}

/// Lowercase hex sha256 of an artifact's bytes.
pub fn content_hash(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
