//! Seeded Born-rule sampling and outcome statistics.
//!
//! Every trial draws from its own ChaCha stream keyed by `(seed, trial index)`,
//! so counts do not depend on scheduling or on the number of worker threads.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type TrialRng = ChaCha8Rng;

/// Weight sums further than this from one are rejected.
pub const WEIGHT_SUM_TOL: f64 = 1e-6;

/// Independent generator for trial `index` under `seed`.
pub fn trial_rng(seed: u64, index: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws a branch index with probability proportional to its weight.
///
/// Zero-weight branches are never returned.
pub fn sample_outcome<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<usize> {
    if weights.is_empty() {
        return Err(Error::InvalidArgument("no branches to sample".into()));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidArgument("branch weights must be nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::NotNormalized(format!("branch weights sum to {total}")));
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        acc += w;
        last = i;
        if u < acc {
            return Ok(i);
        }
    }
    Ok(last)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialStats {
    pub trials: u64,
    pub counts: BTreeMap<usize, u64>,
    pub frequencies: BTreeMap<usize, f64>,
    /// Binomial standard error `√(f(1 − f)/trials)`.
    pub std_errors: BTreeMap<usize, f64>,
}

impl TrialStats {
    fn from_counts(trials: u64, counts: BTreeMap<usize, u64>) -> Self {
        let n = trials as f64;
        let frequencies: BTreeMap<_, _> =
            counts.iter().map(|(&k, &c)| (k, c as f64 / n)).collect();
        let std_errors = frequencies
            .iter()
            .map(|(&k, &f)| (k, (f * (1.0 - f) / n).sqrt()))
            .collect();
        TrialStats { trials, counts, frequencies, std_errors }
    }

    pub fn count(&self, branch: usize) -> u64 {
        self.counts.get(&branch).copied().unwrap_or(0)
    }

    pub fn frequency(&self, branch: usize) -> f64 {
        self.frequencies.get(&branch).copied().unwrap_or(0.0)
    }

    /// Half-width of the `k`-sigma binomial band around `p` for this many trials.
    pub fn band(&self, p: f64, k: f64) -> f64 {
        k * (p * (1.0 - p) / self.trials as f64).sqrt()
    }

    /// Whether the observed frequency of `branch` lies within `k` binomial
    /// sigmas of the analytic probability `p`.
    pub fn within(&self, branch: usize, p: f64, k: f64) -> bool {
        (self.frequency(branch) - p).abs() <= self.band(p, k)
    }
}

/// Runs `trials` independent trials of `protocol` and tallies the returned
/// outcome labels.
///
/// Trial `i` receives `trial_rng(seed, i)`. Trials run on the current rayon
/// pool; the tally is an integer sum, so the result is identical for any
/// thread count.
pub fn estimate_success<F>(protocol: F, trials: u64, seed: u64) -> Result<TrialStats>
where
    F: Fn(&mut TrialRng) -> Result<usize> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let counts = (0..trials)
        .into_par_iter()
        .map(|i| protocol(&mut trial_rng(seed, i)))
        .try_fold(BTreeMap::new, |mut acc: BTreeMap<usize, u64>, outcome| {
            *acc.entry(outcome?).or_insert(0) += 1;
            Ok::<_, Error>(acc)
        })
        .try_reduce(BTreeMap::new, |mut a, b| {
            for (k, v) in b {
                *a.entry(k).or_insert(0) += v;
            }
            Ok(a)
        })?;
    Ok(TrialStats::from_counts(trials, counts))
}

/// `ceil(log2(branches))`: bits needed to name one of `branches` outcomes.
pub fn message_bits(branches: usize) -> u32 {
    if branches <= 1 {
        0
    } else {
        usize::BITS - (branches - 1).leading_zeros()
    }
}
