//! Shared inputs for the benchmarks.

use hplab_core::{Complex64, RngStream};

pub const SEED: u64 = 0x5eed;

pub fn rng() -> RngStream {
    RngStream::new(SEED, 0)
}

/// Deterministic evaluation points on a spiral inside `|z| <= 0.9`.
pub fn spiral(count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|k| {
            let t = (k as f64 + 0.5) / count as f64;
            Complex64::from_polar(0.9 * t.sqrt(), 2.399_963 * k as f64)
        })
        .collect()
}
