//! Counter-based randomness keyed by `(seed, sample id)`.
//!
//! Each draw hashes the seed, a domain tag and the sample identifier, so a
//! sample's draw does not depend on its position in the batch or on which
//! thread evaluates it.

use sha2::{Digest, Sha256};

/// Uniform draw in `[0, 1)` for one sample.
pub fn unit_draw(seed: u64, domain: &str, id: &str) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((domain.len() as u64).to_le_bytes());
    hasher.update(domain.as_bytes());
    hasher.update(id.as_bytes());
    let digest = hasher.finalize();
    let mut word = [0u8; 8];
    word.copy_from_slice(&digest[..8]);
    // top 53 bits -> exact double in [0, 1)
    (u64::from_le_bytes(word) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
