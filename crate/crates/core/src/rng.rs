//! Deterministic random streams.
//!
//! Every stochastic operation in the crate draws from a stream derived from
//! a master seed plus a path of identifiers (domain tag, tree id, node id,
//! candidate index, ...). Results therefore never depend on execution order
//! or on how work is distributed across threads.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keeping unrelated streams apart.
pub mod tags {
    pub const DATASET: u64 = 0x01;
    pub const TASK: u64 = 0x02;
    pub const EXPAND: u64 = 0x03;
    pub const SIMULATE: u64 = 0x04;
    pub const KMEANS: u64 = 0x05;
    pub const PAIR: u64 = 0x06;
    pub const PAIR_RETRY: u64 = 0x07;
    pub const LOCAL_EDGE: u64 = 0x08;
    pub const RUN: u64 = 0x09;
    pub const CANDIDATE: u64 = 0x0a;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a master seed with a path of identifiers into a single child seed.
pub fn derive(master: u64, parts: &[u64]) -> u64 {
    let mut acc = splitmix(master ^ 0xA076_1D64_78BD_642F);
    for (i, p) in parts.iter().enumerate() {
        acc = splitmix(acc ^ p.wrapping_add(1).rotate_left((i as u32 % 63) + 1));
    }
    acc
}

/// Deterministic stream for a derived seed.
pub fn stream(master: u64, parts: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, parts))
}

/// Stream seeded directly (no derivation).
pub fn stream_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw from the closed unit disc, by rejection.
///
/// Rejection keeps the draw free of transcendental functions, so streams are
/// bit-identical across platforms.
pub fn unit_disc(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let x: f64 = rng.random_range(-1.0..=1.0);
        let y: f64 = rng.random_range(-1.0..=1.0);
        if x * x + y * y <= 1.0 {
            return (x, y);
        }
    }
}
