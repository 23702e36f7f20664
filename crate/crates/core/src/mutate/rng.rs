//! Per-case random streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Independent stream for one (global seed, case, operator) triple, so that
/// neither case order nor the set of selected operators changes output.
pub fn case_rng(seed: u64, origin: &str, tag: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((origin.len() as u64).to_le_bytes());
    h.update(origin.as_bytes());
    h.update(tag.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(digest)
}
