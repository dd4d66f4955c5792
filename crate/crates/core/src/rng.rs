//! Deterministic substream derivation.
//!
//! Every random draw in the crate comes from a [`ChaCha12Rng`] keyed by a
//! hash of (master seed, domain, index, retry). Substreams are independent
//! of each other and of scheduling, so parallel and serial generation
//! produce identical results.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// Namespaces keeping unrelated consumers of the same master seed apart.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Domain {
    DatasetSample = 1,
    Split = 2,
    CrossValidation = 3,
    Measurement = 4,
    ValidationSample = 5,
}

/// RNG for one (domain, index) cell of a master seed.
pub fn substream(master_seed: u64, domain: Domain, index: u64) -> ChaCha12Rng {
    substream_retry(master_seed, domain, index, 0)
}

/// Same as [`substream`] with an extra retry counter, used when a draw must
/// be discarded (e.g. a singular solve) without disturbing its neighbors.
pub fn substream_retry(master_seed: u64, domain: Domain, index: u64, retry: u64) -> ChaCha12Rng {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update((domain as u64).to_le_bytes());
    hasher.update(index.to_le_bytes());
    hasher.update(retry.to_le_bytes());
    let digest = hasher.finalize();
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    ChaCha12Rng::from_seed(seed)
}

/// Derives a child master seed, used to give e.g. validation sets a seed
/// domain disjoint from training sets.
pub fn subseed(master_seed: u64, tag: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master_seed.to_le_bytes());
    hasher.update(tag.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn substreams_are_deterministic() {
        let mut a = substream(42, Domain::DatasetSample, 7);
        let mut b = substream(42, Domain::DatasetSample, 7);
        assert_eq!(a.next_u64(), b.next_u64());
    }

    #[test]
    fn substreams_differ_across_index_domain_and_retry() {
        let mut base = substream(42, Domain::DatasetSample, 7);
        let mut other_index = substream(42, Domain::DatasetSample, 8);
        let mut other_domain = substream(42, Domain::Split, 7);
        let mut other_retry = substream_retry(42, Domain::DatasetSample, 7, 1);
        let x = base.next_u64();
        assert_ne!(x, other_index.next_u64());
        assert_ne!(x, other_domain.next_u64());
        assert_ne!(x, other_retry.next_u64());
    }

    #[test]
    fn subseed_depends_on_tag() {
        assert_ne!(subseed(1, "validation"), subseed(1, "train"));
        assert_eq!(subseed(1, "validation"), subseed(1, "validation"));
    }
}
