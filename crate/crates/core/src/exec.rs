//! Data-parallel execution with a sequential fallback.
//!
//! Work is always split into the same fixed batches and the per-batch results
//! are returned in batch order, so results do not depend on whether rayon is
//! enabled or how many threads it uses.

use std::ops::Range;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How batch work is scheduled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is enabled, else sequential.
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this schedule will actually run on the rayon pool.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }

    /// `f(i)` for `i in 0..count`, results in index order.
    pub fn map<R, F>(self, count: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self == Execution::Parallel {
            use rayon::prelude::*;
            return (0..count).into_par_iter().map(f).collect();
        }
        (0..count).map(f).collect()
    }

    /// Splits `0..total` into batches of `batch` items and maps each batch.
    pub fn map_batches<R, F>(self, total: u64, batch: u64, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(u64, Range<u64>) -> R + Sync + Send,
    {
        let ranges = batch_ranges(total, batch);
        self.map(ranges.len(), |b| f(b as u64, ranges[b].clone()))
    }
}

/// `0..total` cut into consecutive ranges of length `batch` (last one shorter).
pub fn batch_ranges(total: u64, batch: u64) -> Vec<Range<u64>> {
    assert!(batch > 0);
    (0..total.div_ceil(batch))
        .map(|b| b * batch..((b + 1) * batch).min(total))
        .collect()
}

/// Default Monte Carlo batch size.
pub const DEFAULT_BATCH: u64 = 4096;

/// A ChaCha8 stream keyed by `seed`, selecting independent stream `stream`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives a sub-seed from a parent seed and a tag (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
