//! Seeded Monte Carlo experiments: per-trial RNG streams, binomial statistics, config-driven validation,
//! empirical estimators and lower-bound runs.

mod config;
mod estimators;
pub mod stats;

pub use config::{run_validation, BoundCheck, BoundSpec, ExperimentConfig, NoiseSpec, Quantity, TrialRecord, ValidationReport, Verdict};
pub use estimators::{
    cal_curve, estimate_m, quantile_nhat, run_lower_bound, run_noisy_lower_bound, CalCurveRow, LowerBoundReport, LowerBoundRow, MEstimate,
    NhatQuantile,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// Description of the stream derivation, written into every output header.
pub const RNG_DESCRIPTION: &str = "ChaCha8Rng::seed_from_u64(splitmix64(master + 0x9E3779B97F4A7C15 * (trial + 1)))";

fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the independent stream for trial `i`.
pub fn stream_seed(master: u64, i: usize) -> u64 {
    splitmix64(master.wrapping_add(GOLDEN.wrapping_mul(i as u64 + 1)))
}

pub fn trial_rng(master: u64, i: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(master, i))
}

fn tag_trial(i: usize, e: Error) -> Error {
    match e {
        Error::Budget(msg) => Error::Budget(format!("trial {i}: {msg}")),
        Error::Capacity(msg) => Error::Capacity(format!("trial {i}: {msg}")),
        Error::Domain(msg) => Error::Domain(format!("trial {i}: {msg}")),
        other => other,
    }
}

/// Runs `f` for every trial index on a pool of `workers` threads (0 picks the rayon default) and returns the
/// results in index order.
pub fn run_trials<T, F>(master: u64, trials: usize, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::param("workers", e.to_string()))?;
    pool.install(|| {
        (0..trials)
            .into_par_iter()
            .map(|i| {
                let mut rng = trial_rng(master, i);
                f(i, &mut rng).map_err(|e| tag_trial(i, e))
            })
            .collect()
    })
}
