use std::fs;
use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use clap::Parser;

use fcm_crlb::harness::{run_to_csv, ExperimentConfig, ExperimentKind};
use fcm_crlb::link::LinkMode;

/// Frequency correlation matrix estimation and CRLB experiments.
#[derive(Debug, Parser)]
#[command(name = "fcm-crlb", version)]
struct Args {
    /// eig-fit | mse-vs-nt | bound-tightness | histograms | sir-scan
    experiment: ExperimentKind,

    /// TOML config; experiment defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    /// Output CSV (stdout when absent and the config names none).
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    mode: Option<LinkMode>,

    /// Run Monte Carlo experiments at N = 128.
    #[arg(long = "paper-scale")]
    full_scale: bool,

    /// Worker threads, 0 for one per core. Does not affect results.
    #[arg(long, default_value_t = 0)]
    workers: usize,

    /// Print the resolved config as TOML and exit.
    #[arg(long)]
    print_config: bool,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();

    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path, Some(args.experiment))
            .with_context(|| format!("loading {}", path.display()))?,
        None => ExperimentConfig::defaults(args.experiment),
    };
    if let Some(seed) = args.seed {
        cfg.master_seed = seed;
    }
    if let Some(mode) = args.mode {
        cfg.mode = mode;
    }
    if args.full_scale {
        cfg.apply_full_scale();
    }
    if let Some(out) = args.out {
        cfg.out_path = Some(out);
    }
    cfg.validate()?;

    if args.print_config {
        print!("{}", cfg.to_toml_string()?);
        return Ok(());
    }

    log::info!("running {} (config {})", cfg.experiment, cfg.config_hash()?);
    let csv = run_to_csv(&cfg, args.workers)?;
    match &cfg.out_path {
        Some(path) => {
            fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?
        }
        None => std::io::stdout().write_all(&csv)?,
    }
    Ok(())
}
