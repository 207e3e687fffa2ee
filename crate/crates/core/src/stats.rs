//! Seed derivation and binomial confidence intervals.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.575_829_303_548_900_4;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed for sub-stream `stream`, item `index` of a run with `master` seed.
/// Depends only on its arguments, never on scheduling.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ stream) ^ index)
}

pub fn derived_rng(master: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, stream, index))
}

/// Wilson score interval for `errors` successes in `trials` at normal quantile `z`.
pub fn wilson(errors: f64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Error-rate estimate. Exact evaluations carry a zero-width interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimate {
    pub trials: u64,
    pub errors: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ci_half_width: f64,
}

impl ErrorEstimate {
    pub fn monte_carlo(errors: f64, trials: u64) -> Self {
        let (lo, hi) = wilson(errors, trials, Z99);
        let p_hat = if trials == 0 { 0.0 } else { errors / trials as f64 };
        ErrorEstimate {
            trials,
            errors,
            p_hat,
            // Wilson centres away from p_hat; keep the reported interval around it.
            ci_low: lo.min(p_hat),
            ci_high: hi.max(p_hat),
            ci_half_width: (hi - lo) / 2.0,
        }
    }

    pub fn exact(p: f64, patterns: u64) -> Self {
        ErrorEstimate {
            trials: patterns,
            errors: p * patterns as f64,
            p_hat: p,
            ci_low: p,
            ci_high: p,
            ci_half_width: 0.0,
        }
    }

    /// Binomial standard error of `p_hat`.
    pub fn sigma(&self) -> f64 {
        if self.trials == 0 {
            return 0.0;
        }
        (self.p_hat * (1.0 - self.p_hat) / self.trials as f64).sqrt()
    }
}
