//! Seeded resampling helpers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for replicate `index` of a run seeded with `seed`.
pub fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03)))
}

/// `n` row indices drawn with replacement.
pub fn resample_indices<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// Type-7 quantile of unsorted values (`q` in [0,1]).
pub fn percentile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Some(crate::metrics::quantile_sorted(&v, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Percentile interval at level `1 - alpha`.
pub fn percentile_interval(values: &[f64], alpha: f64) -> Option<Interval> {
    Some(Interval {
        lower: percentile(values, alpha / 2.0)?,
        upper: percentile(values, 1.0 - alpha / 2.0)?,
    })
}

/// Two-sided bootstrap p-value for a zero effect: twice the smaller tail share.
pub fn bootstrap_pvalue(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let below = values.iter().filter(|&&v| v <= 0.0).count() as f64;
    let above = values.iter().filter(|&&v| v >= 0.0).count() as f64;
    Some((2.0 * below.min(above) / n).min(1.0))
}
