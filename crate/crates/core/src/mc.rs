//! Deterministic parallel Monte Carlo accumulation.
//!
//! Trials are cut into fixed-size blocks independent of the worker count.
//! Each block is summed sequentially with Neumaier compensation and the
//! block partials are merged in block order, so estimates are bit-identical
//! for any number of threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BLOCK: u64 = 4096;

/// Monte Carlo run settings shared by every estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McSettings {
    pub n_trials: u64,
    pub seed: u64,
    /// Worker threads; 0 lets the pool pick.
    pub threads: usize,
}

impl McSettings {
    pub fn new(n_trials: u64, seed: u64) -> Self {
        McSettings {
            n_trials,
            seed,
            threads: 0,
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(Error::Invalid("n_trials must be at least 1".into()));
        }
        Ok(())
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.comp += other.comp;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Accumulator {
    sum: CompensatedSum,
    sum_sq: CompensatedSum,
    n: u64,
}

impl Accumulator {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.sum.add(x);
        self.sum_sq.add(x * x);
        self.n += 1;
    }

    pub fn merge(&mut self, other: &Accumulator) {
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
        self.n += other.n;
    }

    pub fn estimate(&self) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum.value() / n;
        let var = if self.n > 1 {
            ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            std_error: (var / n).sqrt(),
            n: self.n,
        }
    }
}

fn blocks(n_trials: u64) -> Vec<(u64, u64)> {
    (0..n_trials.div_ceil(BLOCK))
        .map(|b| (b * BLOCK, ((b + 1) * BLOCK).min(n_trials)))
        .collect()
}

fn in_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 1 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Invalid(format!("thread pool: {e}")))?;
    Ok(pool.install(job))
}

/// Runs `trial(index, out)` for every trial, where `trial` writes
/// `n_outputs` values into `out`, and returns one accumulator per output.
pub fn accumulate<F>(settings: &McSettings, n_outputs: usize, trial: F) -> Result<Vec<Accumulator>>
where
    F: Fn(u64, &mut [f64]) + Sync,
{
    settings.validate()?;
    let run_block = |&(lo, hi): &(u64, u64)| {
        let mut accs = vec![Accumulator::default(); n_outputs];
        let mut out = vec![0.0; n_outputs];
        for t in lo..hi {
            trial(t, &mut out);
            for (acc, &x) in accs.iter_mut().zip(&out) {
                acc.push(x);
            }
        }
        accs
    };
    let parts = blocks(settings.n_trials);
    let partials: Vec<Vec<Accumulator>> = if settings.threads == 1 {
        parts.iter().map(run_block).collect()
    } else {
        in_pool(settings.threads, || parts.par_iter().map(run_block).collect())?
    };
    let mut total = vec![Accumulator::default(); n_outputs];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total)
}

/// Maps every trial index to a value, preserving trial order.
pub fn map_trials<T, F>(settings: &McSettings, trial: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> T + Sync,
{
    settings.validate()?;
    let run_block = |&(lo, hi): &(u64, u64)| (lo..hi).map(&trial).collect::<Vec<T>>();
    let parts = blocks(settings.n_trials);
    let chunks: Vec<Vec<T>> = if settings.threads == 1 {
        parts.iter().map(run_block).collect()
    } else {
        in_pool(settings.threads, || parts.par_iter().map(run_block).collect())?
    };
    Ok(chunks.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let settings = McSettings::new(10_000, 1).with_threads(1);
        let acc = accumulate(&settings, 1, |_, out| out[0] = 0.25).unwrap();
        let e = acc[0].estimate();
        assert_eq!(e.mean, 0.25);
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.n, 10_000);
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let f = |t: u64, out: &mut [f64]| {
            let x = ((t * 2_654_435_761) % 1_000_003) as f64 / 1_000_003.0;
            out[0] = x;
            out[1] = x.powi(7) * 1e-9;
        };
        let one = accumulate(&McSettings::new(50_000, 0).with_threads(1), 2, f).unwrap();
        let four = accumulate(&McSettings::new(50_000, 0).with_threads(4), 2, f).unwrap();
        assert_eq!(one, four);
    }

    #[test]
    fn map_preserves_order() {
        let v = map_trials(&McSettings::new(10_000, 0).with_threads(3), |t| t).unwrap();
        assert!(v.iter().enumerate().all(|(i, &t)| i as u64 == t));
    }

    #[test]
    fn zero_trials_rejected() {
        assert!(accumulate(&McSettings::new(0, 0), 1, |_, _| {}).is_err());
    }
}
