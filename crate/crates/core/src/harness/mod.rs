//! Experiment runner behind the `fcm-crlb` command line.

pub mod config;
pub mod experiments;
pub mod output;

pub use config::{ExperimentConfig, ExperimentKind, ProfileChoice};
pub use experiments::{
    run_bound_tightness, run_eig_fit, run_experiment, run_histograms, run_mse_vs_nt, run_sir_scan,
    summarize_cells, ExperimentOutput,
};
pub use output::write_csv;

use crate::error::{Error, Result};

/// Run `cfg` on a dedicated pool of `workers` threads (0 = rayon default).
pub fn run_with_workers(cfg: &ExperimentConfig, workers: usize) -> Result<ExperimentOutput> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
    pool.install(|| run_experiment(cfg))
}

/// Run and render the CSV bytes.
pub fn run_to_csv(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<u8>> {
    let output = run_with_workers(cfg, workers)?;
    let mut buf = Vec::new();
    write_csv(cfg, &output, &mut buf)?;
    Ok(buf)
}
