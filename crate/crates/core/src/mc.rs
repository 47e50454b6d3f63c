//! Seeded, order-independent Monte Carlo plumbing.
//!
//! Every replication draws from its own ChaCha8 stream selected by
//! `(seed, replication index)`, and results are gathered in replication
//! order, so output does not depend on the number of worker threads.
//! Long runs proceed in chunks and can persist a checkpoint after each one.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Replications per chunk between checkpoints.
pub const CHUNK: usize = 10_000;

/// Generator for replication `stream` of the run keyed by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Derives an independent seed for a sub-task (SplitMix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x632B_E59B_D9B4_E019);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Runs `f` for replications `range`, each with its own stream, in parallel.
pub fn replicate_range<T, F>(seed: u64, range: std::ops::Range<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    range
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            f(&mut rng, i)
        })
        .collect()
}

pub fn replicate<T, F>(seed: u64, reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> T + Sync,
{
    replicate_range(seed, 0..reps, f)
}

/// Runs `f` inside a dedicated thread pool of `workers` threads
/// (`None` uses the global pool).
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidParameter(format!("cannot start {w} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

pub type ProgressFn = Arc<dyn Fn(&str, usize, usize) + Send + Sync>;

/// Checkpointing and progress options for long simulations.
#[derive(Clone, Default)]
pub struct RunControl {
    pub checkpoint: Option<PathBuf>,
    pub progress: Option<ProgressFn>,
}

impl RunControl {
    pub fn report(&self, label: &str, done: usize, total: usize) {
        if let Some(p) = &self.progress {
            p(label, done, total);
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Checkpoint {
    key: String,
    total: usize,
    rows: Vec<Vec<f64>>,
}

fn load_checkpoint(path: &Path, key: &str, total: usize) -> Result<Vec<Vec<f64>>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let cp: Checkpoint = serde_json::from_slice(&fs::read(path)?)?;
    if cp.key != key || cp.total != total || cp.rows.len() > total {
        return Err(Error::CheckpointMismatch { path: path.display().to_string() });
    }
    Ok(cp.rows)
}

fn save_checkpoint(path: &Path, key: &str, total: usize, rows: &[Vec<f64>]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let cp = Checkpoint { key: key.to_string(), total, rows: rows.to_vec() };
    fs::write(&tmp, serde_json::to_vec(&cp)?)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Runs `reps` replications producing one row of values each, in chunks of
/// [`CHUNK`], resuming from and updating the checkpoint in `control`.
///
/// `key` must identify the run configuration; a checkpoint written under a
/// different key is refused.
pub fn run_chunked<F>(key: &str, seed: u64, reps: usize, control: &RunControl, f: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&mut ChaCha8Rng, usize) -> Result<Vec<f64>> + Sync,
{
    let mut rows = match &control.checkpoint {
        Some(path) => load_checkpoint(path, key, reps)?,
        None => Vec::new(),
    };
    rows.reserve(reps - rows.len());
    while rows.len() < reps {
        let start = rows.len();
        let end = (start + CHUNK).min(reps);
        let chunk = replicate_range(seed, start..end, &f);
        for row in chunk {
            rows.push(row?);
        }
        if let Some(path) = &control.checkpoint {
            save_checkpoint(path, key, reps, &rows)?;
        }
        control.report(key, rows.len(), reps);
    }
    Ok(rows)
}
