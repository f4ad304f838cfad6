//! Reproducible random streams.
//!
//! Every Monte Carlo replicate draws from its own ChaCha8 stream: the key is
//! derived from the master seed and the stream id is the replicate index.
//! ChaCha is counter-based, so replicate `i` sees the same numbers no matter
//! which thread runs it or in what order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Name recorded in outputs so a table can be regenerated.
pub const GENERATOR_NAME: &str = "chacha8-stream-per-replicate";

pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` standard normal draws from stream `index`.
pub fn standard_normals(seed: u64, index: u64, n: usize) -> Vec<f64> {
    let mut rng = replicate_rng(seed, index);
    (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
}

/// Derives an independent master seed for a labelled sub-task, so that e.g.
/// the null simulation and the power simulation of one run never share
/// streams.
pub fn derive_seed(seed: u64, label: u64) -> u64 {
    // SplitMix64 finalizer on the combined value.
    let mut z = seed ^ label.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
