//! Deterministic seed derivation so a whole experiment replays from one master seed.

use rand_chacha::ChaCha8Rng;

/// The generator used by every chain and oracle.
pub type ChainRng = ChaCha8Rng;

/// Independent random streams belonging to one chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Sampler = 1,
    Respondent = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one stream of chain `chain` on object `object`.
pub fn derive_seed(master: u64, object: usize, chain: usize, stream: Stream) -> u64 {
    [object as u64, chain as u64, stream as u64]
        .into_iter()
        .fold(splitmix64(master), |acc, part| splitmix64(acc ^ splitmix64(part)))
}
