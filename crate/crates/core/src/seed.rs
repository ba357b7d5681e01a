//! Master seeds and domain-separated generator streams.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::Error;

/// A 32-byte master seed. Every random draw in a run descends from one of these.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct MasterSeed([u8; 32]);

impl MasterSeed {
    pub fn new(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }

    pub fn from_u64(v: u64) -> Self {
        let mut b = [0u8; 32];
        b[24..].copy_from_slice(&v.to_be_bytes());
        Self(b)
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    /// Generator for `(label, index)`: ChaCha20 keyed by
    /// `SHA-256(seed || u32 len(label) || label || u64 index)`.
    pub fn derive(&self, label: &str, index: u64) -> ChaCha20Rng {
        let mut h = Sha256::new();
        h.update(self.0);
        h.update((label.len() as u32).to_le_bytes());
        h.update(label.as_bytes());
        h.update(index.to_le_bytes());
        ChaCha20Rng::from_seed(h.finalize().into())
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Debug for MasterSeed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MasterSeed({})", self.to_hex())
    }
}

/// Parses up to 64 hex digits (optional `0x`), right-aligned into 32 bytes.
impl FromStr for MasterSeed {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let s = s.strip_prefix("0x").unwrap_or(s);
        if s.is_empty() || s.len() > 64 {
            return Err(Error::Params(format!("seed must be 1 to 64 hex digits, got {:?}", s)));
        }
        let padded = format!("{s:0>64}");
        let bytes = hex::decode(&padded).map_err(|e| Error::Params(format!("bad hex seed: {e}")))?;
        Ok(Self(bytes.try_into().expect("64 hex digits are 32 bytes")))
    }
}
