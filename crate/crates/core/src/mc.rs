//! Monte Carlo accumulation with deterministic parallel reduction.
//!
//! Samples are processed in fixed-size chunks. Chunks may run on any number
//! of rayon workers, but each chunk accumulates sequentially in sample order
//! and chunk partials are merged in chunk order, so the floating-point result
//! is bit-identical for every worker count.

use rayon::prelude::*;

/// A Monte Carlo point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
}

impl Estimate {
    /// Distance to `target` in units of the standard error.
    pub fn sigmas_from(&self, target: f64) -> f64 {
        (self.value - target).abs() / self.std_error
    }
}

/// Running first and second moments of a scalar sample.
#[derive(Debug, Clone, Copy, Default)]
pub struct MomentAccumulator {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl MomentAccumulator {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.n as f64
    }

    pub fn variance(&self) -> f64 {
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    pub fn estimate(&self) -> Estimate {
        Estimate {
            value: self.mean(),
            std_error: (self.variance() / self.n as f64).sqrt(),
            n: self.n,
        }
    }
}

/// Joint moments of a pair, enough for ratio estimates by the delta method.
#[derive(Debug, Clone, Copy, Default)]
pub struct RatioAccumulator {
    pub n: u64,
    pub sum_a: f64,
    pub sum_b: f64,
    pub sum_aa: f64,
    pub sum_bb: f64,
    pub sum_ab: f64,
}

impl RatioAccumulator {
    #[inline]
    pub fn push(&mut self, a: f64, b: f64) {
        self.n += 1;
        self.sum_a += a;
        self.sum_b += b;
        self.sum_aa += a * a;
        self.sum_bb += b * b;
        self.sum_ab += a * b;
    }

    pub fn merge(&mut self, other: &Self) {
        self.n += other.n;
        self.sum_a += other.sum_a;
        self.sum_b += other.sum_b;
        self.sum_aa += other.sum_aa;
        self.sum_bb += other.sum_bb;
        self.sum_ab += other.sum_ab;
    }

    /// Estimate of `E[a]/E[b]` with a delta-method standard error.
    pub fn ratio(&self) -> Estimate {
        let n = self.n as f64;
        let ma = self.sum_a / n;
        let mb = self.sum_b / n;
        let r = ma / mb;
        let var_a = (self.sum_aa / n - ma * ma).max(0.0);
        let var_b = (self.sum_bb / n - mb * mb).max(0.0);
        let cov = self.sum_ab / n - ma * mb;
        let var_r = (var_a - 2.0 * r * cov + r * r * var_b) / (mb * mb);
        Estimate {
            value: r,
            std_error: (var_r.max(0.0) / n).sqrt(),
            n: self.n,
        }
    }
}

/// Number of samples a single chunk processes sequentially.
pub const CHUNK: u64 = 4096;

/// Deterministic chunked map-reduce over `n` sample indices.
///
/// `per_sample(index, &mut acc)` must fold sample `index` into the chunk
/// accumulator; `A::default()` starts each chunk and `merge` combines chunk
/// partials in chunk order.
pub fn reduce_samples<A, F>(n: u64, per_sample: F) -> A
where
    A: Default + Send,
    F: Fn(u64, &mut A) + Sync,
    A: Mergeable,
{
    let n_chunks = n.div_ceil(CHUNK);
    let partials: Vec<A> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = A::default();
            let lo = c * CHUNK;
            let hi = ((c + 1) * CHUNK).min(n);
            for i in lo..hi {
                per_sample(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut total = A::default();
    for p in partials {
        total.merge_from(p);
    }
    total
}

/// Accumulators that can absorb a partial result.
pub trait Mergeable {
    fn merge_from(&mut self, other: Self);
}

impl Mergeable for MomentAccumulator {
    fn merge_from(&mut self, other: Self) {
        self.merge(&other);
    }
}

impl Mergeable for RatioAccumulator {
    fn merge_from(&mut self, other: Self) {
        self.merge(&other);
    }
}

impl<T: Mergeable, U: Mergeable> Mergeable for (T, U) {
    fn merge_from(&mut self, other: Self) {
        self.0.merge_from(other.0);
        self.1.merge_from(other.1);
    }
}

impl<T: Mergeable> Mergeable for Vec<T> {
    /// Element-wise merge; an empty accumulator adopts the other side, so
    /// `Vec::new()` works as the `Default` seed.
    fn merge_from(&mut self, other: Self) {
        if self.is_empty() {
            *self = other;
            return;
        }
        assert_eq!(self.len(), other.len());
        for (a, b) in self.iter_mut().zip(other) {
            a.merge_from(b);
        }
    }
}

impl Mergeable for u64 {
    fn merge_from(&mut self, other: Self) {
        *self += other;
    }
}

impl Mergeable for f64 {
    fn merge_from(&mut self, other: Self) {
        *self += other;
    }
}
