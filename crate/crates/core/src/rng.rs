//! Seeded randomness.
//!
//! Every random stream in the crate is a ChaCha8 generator
//! ([`rand_chacha::ChaCha8Rng`]) seeded through `SeedableRng::seed_from_u64`.
//! Integer ranges are drawn over `u64` and normal variates by inverting the
//! normal CDF on open-interval uniforms, so streams do not depend on the
//! platform's pointer width.

use rand::distributions::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::normal;

/// The crate-wide generator type.
pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64) -> StreamRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// An independent stream for the same seed, selected by ChaCha's stream id.
pub fn substream(seed: u64, id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Uniform draw on the open interval (0, 1).
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Open01.sample(rng)
}

/// `N(mean, sd²)` via inverse-CDF sampling.
pub fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    mean + sd * normal::quantile(open_uniform(rng))
}

/// Uniform index in `0..=upper`.
fn index_inclusive<R: Rng + ?Sized>(rng: &mut R, upper: usize) -> usize {
    rng.gen_range(0..=upper as u64) as usize
}

/// Moves a uniformly random `k`-subset of `items` to the front (partial
/// Fisher–Yates) and returns it. Order of the prefix is random.
pub fn choose_prefix<'a, T, R: Rng + ?Sized>(rng: &mut R, items: &'a mut [T], k: usize) -> &'a mut [T] {
    let n = items.len();
    let k = k.min(n);
    for i in 0..k {
        let j = i + index_inclusive(rng, n - 1 - i);
        items.swap(i, j);
    }
    &mut items[..k]
}
