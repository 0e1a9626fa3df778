//! Estimates with standard errors and order-stable accumulation.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::exec::{rng_stream, Execution, DEFAULT_BATCH};

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }

    /// Whether `other` lies within `sigmas` combined standard errors, with a
    /// relative slack of 1e-12 so two exact values can agree up to rounding.
    pub fn agrees_with(&self, other: &Estimate, sigmas: f64) -> bool {
        let se = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        let slack = 1e-12 * self.value.abs().max(other.value.abs());
        (self.value - other.value).abs() <= sigmas * se + slack
    }
}

/// Count, mean and centred second moment; merged with Chan's update.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        Self { n, mean, m2 }
    }

    /// Merges a slice in a fixed pairwise tree.
    pub fn merge_all(parts: &[Self]) -> Self {
        match parts.len() {
            0 => Self::default(),
            1 => parts[0],
            len => {
                let (a, b) = parts.split_at(len / 2);
                Self::merge_all(a).merge(&Self::merge_all(b))
            }
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            return f64::NAN;
        }
        (self.variance() / self.n as f64).sqrt()
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.mean,
            stderr: self.stderr(),
        }
    }
}

/// Pairwise (cascade) summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Sample proportion with its binomial standard error.
pub fn proportion(hits: u64, n: u64) -> Estimate {
    let p = hits as f64 / n as f64;
    Estimate {
        value: p,
        stderr: (p * (1.0 - p) / n as f64).sqrt(),
    }
}

/// Fills `buf` with iid standard normals.
pub fn fill_normal(rng: &mut ChaCha8Rng, buf: &mut [f64]) {
    for x in buf {
        *x = rng.sample(StandardNormal);
    }
}

/// Accumulates `f(rng)` over `samples` draws. Batch `b` draws from stream `b`
/// of `seed`, so the result is the same under every schedule.
pub fn monte_carlo<F>(samples: u64, seed: u64, exec: Execution, f: F) -> RunningStats
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
{
    let parts = exec.map_batches(samples, DEFAULT_BATCH, |b, range| {
        let mut rng = rng_stream(seed, b);
        let mut acc = RunningStats::new();
        for _ in range {
            acc.push(f(&mut rng));
        }
        acc
    });
    RunningStats::merge_all(&parts)
}

/// Like [`monte_carlo`] for `width` quantities observed on each draw.
pub fn monte_carlo_multi<F>(samples: u64, seed: u64, exec: Execution, width: usize, f: F) -> Vec<RunningStats>
where
    F: Fn(&mut ChaCha8Rng, &mut [f64]) + Sync + Send,
{
    let parts = exec.map_batches(samples, DEFAULT_BATCH, |b, range| {
        let mut rng = rng_stream(seed, b);
        let mut acc = vec![RunningStats::new(); width];
        let mut out = vec![0.0; width];
        for _ in range {
            f(&mut rng, &mut out);
            for (a, x) in acc.iter_mut().zip(&out) {
                a.push(*x);
            }
        }
        acc
    });
    (0..width)
        .map(|i| RunningStats::merge_all(&parts.iter().map(|p| p[i]).collect::<Vec<_>>()))
        .collect()
}
