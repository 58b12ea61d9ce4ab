//! Threaded clip preparation. Jobs are pure functions of their seeds, so
//! splitting them across threads cannot change results; `ASCNET_THREADS`
//! caps the worker count.

use ascnet_core::Result;
use ascnet_core::augment::AugmentConfig;
use ascnet_core::synth::SyntheticVideo;
use ascnet_core::trainer::{ClipJob, ClipPrep, prepare_clip};

pub const THREADS_ENV: &str = "ASCNET_THREADS";

pub struct ThreadedPrep {
    threads: usize,
}

impl ThreadedPrep {
    /// Worker count from `ASCNET_THREADS`, defaulting to the available
    /// parallelism (capped at 8; clip prep saturates quickly).
    pub fn from_env() -> Self {
        let default = std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
            .min(8);
        let threads = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .map(|n| n.clamp(1, default.max(1)))
            .unwrap_or(default);
        ThreadedPrep { threads }
    }

    pub fn with_threads(threads: usize) -> Self {
        ThreadedPrep {
            threads: threads.max(1),
        }
    }
}

impl ClipPrep for ThreadedPrep {
    fn prepare(
        &self,
        corpus: &[SyntheticVideo],
        aug: &AugmentConfig,
        jobs: &[ClipJob],
    ) -> Result<Vec<Vec<f32>>> {
        if self.threads <= 1 || jobs.len() <= 1 {
            return jobs.iter().map(|job| prepare_clip(corpus, aug, job)).collect();
        }
        let chunk = jobs.len().div_ceil(self.threads);
        let results: Vec<Result<Vec<Vec<f32>>>> = std::thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .chunks(chunk)
                .map(|chunk_jobs| {
                    scope.spawn(move || {
                        chunk_jobs
                            .iter()
                            .map(|job| prepare_clip(corpus, aug, job))
                            .collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("prep worker panicked"))
                .collect()
        });
        let mut out = Vec::with_capacity(jobs.len());
        for chunk_result in results {
            out.extend(chunk_result?);
        }
        Ok(out)
    }
}
