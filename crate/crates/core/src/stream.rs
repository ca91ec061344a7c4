//! Deterministic random streams derived from a master seed and a label.
//!
//! Every stochastic operation takes a [`Stream`] rather than a bare RNG. A
//! stream is identified by `(master_seed, label)`; children append a path
//! segment to the label, so the bits a trial sees depend only on where it
//! sits in the experiment tree and never on scheduling.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};
use std::fmt;

/// The generator every stream hands out.
pub type StreamRng = ChaCha12Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Stream {
    master_seed: u64,
    label: String,
}

impl Stream {
    pub fn new(master_seed: u64, label: impl Into<String>) -> Self {
        Self {
            master_seed,
            label: label.into(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Derives a sub-stream; `child("trial").child(17)` has label `.../trial/17`.
    pub fn child(&self, segment: impl fmt::Display) -> Self {
        Self {
            master_seed: self.master_seed,
            label: format!("{}/{}", self.label, segment),
        }
    }

    pub fn seed_bytes(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(self.master_seed.to_le_bytes());
        hasher.update((self.label.len() as u64).to_le_bytes());
        hasher.update(self.label.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        seed
    }

    /// A fresh generator positioned at the start of this stream.
    pub fn rng(&self) -> StreamRng {
        StreamRng::from_seed(self.seed_bytes())
    }
}

impl fmt::Display for Stream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.master_seed, self.label)
    }
}
