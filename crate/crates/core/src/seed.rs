//! Seed derivation. Every random stream in a run is split off one master seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used everywhere. ChaCha output is specified, so a seed
/// reproduces the same stream on every platform.
pub type Rng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derives the seed of a named sub-stream.
pub fn derive(master: u64, label: &str) -> u64 {
    splitmix64(master ^ splitmix64(fnv1a(label.as_bytes())))
}

/// Derives the seed of an indexed sub-stream, e.g. one per epoch.
pub fn derive_indexed(master: u64, label: &str, index: u64) -> u64 {
    splitmix64(derive(master, label) ^ splitmix64(index.wrapping_add(1)))
}

pub fn rng(master: u64, label: &str) -> Rng {
    Rng::seed_from_u64(derive(master, label))
}

pub fn rng_indexed(master: u64, label: &str, index: u64) -> Rng {
    Rng::seed_from_u64(derive_indexed(master, label, index))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_split_streams() {
        assert_ne!(derive(7, "split"), derive(7, "train"));
        assert_eq!(derive(7, "split"), derive(7, "split"));
        assert_ne!(derive_indexed(7, "epoch", 0), derive_indexed(7, "epoch", 1));
    }
}
