//! Deterministic per-trial random streams.
//!
//! Every draw in a run comes from a stream keyed by `(seed, iteration, trial,
//! stream kind)`. Environment noise and policy sampling use separate streams,
//! so changing how many policy draws happen inside a trial never perturbs the
//! environment's noise, and a run resumed at a later start iteration replays
//! exactly the draws the full run would have made there.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent sub-streams within one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Environment = 1,
    Policy = 2,
}

/// ChaCha stream for one `(seed, iteration, trial, stream)` cell.
pub fn trial_rng(seed: u64, iteration: u32, trial: usize, stream: Stream) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(iteration as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(trial as u64).to_le_bytes());
    key[24..32].copy_from_slice(&(stream as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}
