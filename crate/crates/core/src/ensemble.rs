//! Deterministic data-parallel ensemble evaluation.
//!
//! Every ensemble member gets its own random stream derived from the member
//! index, results are collected in index order and reduced sequentially, so
//! outputs are bit-identical for any thread count.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dynamics::{default_burn_in, sample_unchecked, PhasePoint, SystemSpec};
use crate::rng::RngStream;

/// Evaluate `f(member_index, rng)` for members `0..n`, in index order.
pub(crate) fn map_members<T, F>(stream: &RngStream, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.member(i).rng();
            f(i, &mut rng)
        })
        .collect()
}

/// Like [`map_members`], but hands the closure the member's generator by
/// value (orbit generators keep it for tail bits).
pub(crate) fn map_member_rngs<T, F>(stream: &RngStream, n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, ChaCha8Rng) -> T + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| f(i, stream.member(i).rng()))
        .collect()
}

/// Sorted distances from `center` of `n` invariant samples. Ball and annulus
/// masses at any radius are then consistent counts on one shared sample set.
pub(crate) fn distance_pool(
    spec: &SystemSpec,
    center: &PhasePoint,
    stream: &RngStream,
    n: u64,
) -> Vec<f64> {
    let burn = default_burn_in(spec);
    let mut d: Vec<f64> = map_members(stream, n, |_, rng| {
        let y = sample_unchecked(spec, rng, burn);
        crate::dynamics::dist_unchecked(spec, center, &y)
    });
    d.sort_unstable_by(|a, b| a.partial_cmp(b).expect("NaN distance"));
    d
}

/// Number of pool entries strictly below `radius` (open-ball count).
pub(crate) fn count_below(sorted: &[f64], radius: f64) -> u64 {
    sorted.partition_point(|&d| d < radius) as u64
}
