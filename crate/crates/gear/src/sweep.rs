//! Independent runs over a range of seeds, in parallel.

use std::ops::Range;
use std::path::{Path, PathBuf};

use gear_core::harness::RunConfig;
use rayon::prelude::*;

use crate::error::{GearError, Result};
use crate::run::run_logged;

pub fn seed_log_path(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed-{seed}.jsonl"))
}

/// Parses `A..B` (half-open) or a single seed.
pub fn parse_seed_range(text: &str) -> Result<Range<u64>> {
    let bad = || GearError::Usage(format!("invalid seed range '{text}', expected A..B"));
    let range = match text.split_once("..") {
        Some((a, b)) => a.trim().parse().map_err(|_| bad())?..b.trim().parse().map_err(|_| bad())?,
        None => {
            let s: u64 = text.trim().parse().map_err(|_| bad())?;
            s..s + 1
        }
    };
    if range.is_empty() {
        return Err(bad());
    }
    Ok(range)
}

/// One log per seed in `dir`. Returns the paths in seed order.
pub fn sweep(base: &RunConfig, seeds: Range<u64>, workers: usize, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| GearError::io(dir, e))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| GearError::Usage(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| {
        seeds
            .into_par_iter()
            .map(|seed| {
                let config = RunConfig { seed, ..base.clone() };
                let path = seed_log_path(dir, seed);
                run_logged(&config, &path)?;
                Ok(path)
            })
            .collect()
    })
}
