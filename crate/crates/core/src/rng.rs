//! Seeded random streams.
//!
//! Every random draw in the crate comes from a [`ChaCha8Rng`] keyed by a
//! 64-bit seed (expanded with `SeedableRng::seed_from_u64`). Independent
//! streams under one key are selected with ChaCha's 64-bit stream id:
//!
//! * tree replicate `i` under `master_seed` uses stream `i`;
//! * bootstrap resample `b` under `bootstrap_seed` uses stream `2^63 + b`.
//!
//! The two ranges never overlap, so tree generation and resampling stay
//! independent even when both seeds are equal. A stream depends only on
//! `(seed, index)`, never on which thread draws it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TreeRng = ChaCha8Rng;

const BOOTSTRAP_STREAM_BASE: u64 = 1 << 63;

/// Stream 0 of `seed`; what [`crate::tree::random_tree`] uses.
pub fn seeded(seed: u64) -> TreeRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Child stream for replicate `index` of a simulation.
pub fn replicate_stream(master_seed: u64, index: u64) -> TreeRng {
    assert!(index < BOOTSTRAP_STREAM_BASE, "replicate index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Child stream for bootstrap resample `index`.
pub fn bootstrap_stream(bootstrap_seed: u64, index: u64) -> TreeRng {
    assert!(index < BOOTSTRAP_STREAM_BASE, "bootstrap index out of range");
    let mut rng = ChaCha8Rng::seed_from_u64(bootstrap_seed);
    rng.set_stream(BOOTSTRAP_STREAM_BASE | index);
    rng
}
