//! Monte Carlo estimates and the deterministic chunked reduction used by
//! every parallel estimator.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// A mean with its standard error over `n` observations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
}

impl Estimate {
    /// Frequency `hits / n` with the binomial standard error.
    pub fn binomial(hits: u64, n: u64) -> Self {
        if n == 0 {
            return Estimate {
                value: f64::NAN,
                std_error: f64::NAN,
                n,
            };
        }
        let p = hits as f64 / n as f64;
        Estimate {
            value: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        }
    }

    /// `|value - target| <= k * std_error`.
    pub fn within_sigmas(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Running sums for a mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    #[inline]
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn estimate(&self) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = if self.n > 1 {
            ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_error: (var / n).sqrt(),
            n: self.n,
        }
    }
}

/// Chunk length for index-parallel work.
pub(crate) const CHUNK: u64 = 1 << 14;

/// Applies `f` to consecutive index ranges of length [`CHUNK`] covering
/// `0..n` and returns the results in range order. The partition depends only
/// on `n`, so folding the output sequentially gives the same answer for any
/// thread count.
pub(crate) fn map_chunks<T, F>(n: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<u64>) -> T + Sync,
{
    let chunks = n.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| f(c * CHUNK..((c + 1) * CHUNK).min(n)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_and_binomial() {
        let mut m = Moments::default();
        for v in [1.0, 2.0, 3.0, 4.0] {
            m.push(v);
        }
        let e = m.estimate();
        assert_eq!(e.value, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        let b = Estimate::binomial(25, 100);
        assert_eq!(b.value, 0.25);
        assert!((b.std_error - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn chunks_cover_range_in_order() {
        let n = 3 * CHUNK + 5;
        let parts = map_chunks(n, |r| (r.start, r.end));
        assert_eq!(parts.len(), 4);
        assert_eq!(parts[0].0, 0);
        assert_eq!(parts[3].1, n);
        assert!(parts.windows(2).all(|w| w[0].1 == w[1].0));
    }
}
