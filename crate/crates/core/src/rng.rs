//! Reproducible random number streams.
//!
//! Every stochastic routine in this crate draws from a [`RngStream`], a
//! (seed, stream index) pair backing a ChaCha8 generator. ChaCha has 2^64
//! independent streams per seed, so ensembles get one stream per member and
//! the full run is reproducible bit-for-bit on any platform and with any
//! thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Number of member slots reserved inside each stream.
const MEMBER_BLOCK: u64 = 1 << 32;
/// Phase slots reserved inside each stream for multi-stage estimators.
const PHASES: u64 = 8;

/// Identifier of one deterministic random stream.
///
/// Identical `(seed, stream_index)` reproduce the identical value sequence
/// everywhere. Top-level code hands out small stream indices (one per
/// estimator, below 2^29); estimators with several sampling stages split
/// with [`RngStream::substream`], and ensembles derive per-member streams
/// with [`RngStream::member`]. Keeping to that discipline makes every
/// member stream disjoint by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub stream_index: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        Self { seed, stream_index }
    }

    /// One of eight phase streams (measure estimation, ensemble runs, ...)
    /// inside this stream.
    pub fn substream(&self, phase: u64) -> Self {
        debug_assert!(phase < PHASES);
        Self {
            seed: self.seed,
            stream_index: self.stream_index.wrapping_mul(PHASES).wrapping_add(phase),
        }
    }

    /// Stream for ensemble member `i` (i below 2^32).
    pub fn member(&self, i: u64) -> Self {
        debug_assert!(i < MEMBER_BLOCK);
        Self {
            seed: self.seed,
            stream_index: self
                .stream_index
                .wrapping_mul(MEMBER_BLOCK)
                .wrapping_add(i),
        }
    }

    /// Instantiate the generator positioned at the start of the stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

/// Uniform draw in the open interval (0, 1).
///
/// Rejects the (probability 2^-53) exact zero so callers can take logs and
/// map through `asin(2u-1)` without hitting the boundary.
pub fn unit_open(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
