//! CSV serialization of experiment results.
//!
//! Every file opens with a `#` comment line carrying the experiment name,
//! config hash and master seed, followed by the header row of the
//! experiment's schema.

use std::io::Write;

use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiments::ExperimentOutput;
use crate::error::Result;

pub fn schema(output: &ExperimentOutput) -> &'static [&'static str] {
    match output {
        ExperimentOutput::EigFit(_) => &["N", "fdts", "lambda_numeric", "lambda_fit", "rel_dev"],
        ExperimentOutput::MseVsNt(_) => &["N_t", "avgmse_empirical", "avgmse_lb", "mode"],
        ExperimentOutput::BoundTightness(_) => &[
            "N_t",
            "avgmse_mean_over_pilots",
            "lb_pilot_free",
            "lb_insightful",
        ],
        ExperimentOutput::Histograms(_) => {
            &["gamma_db", "f_d_hz", "trial", "avgmse", "signed_diag_err"]
        }
        ExperimentOutput::SirScan(_) => &["fdts", "sir_db", "n_trials"],
    }
}

fn write_rows<W: Write, R: Serialize>(out: W, header: &[&str], rows: &[R]) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv<W: Write>(
    cfg: &ExperimentConfig,
    output: &ExperimentOutput,
    mut out: W,
) -> Result<()> {
    writeln!(
        out,
        "# experiment={} config_hash={} master_seed={}",
        cfg.experiment,
        cfg.config_hash()?,
        cfg.master_seed
    )?;
    let header = schema(output);
    match output {
        ExperimentOutput::EigFit(rows) => write_rows(out, header, rows),
        ExperimentOutput::MseVsNt(rows) => write_rows(out, header, rows),
        ExperimentOutput::BoundTightness(res) => write_rows(out, header, &res.rows),
        ExperimentOutput::Histograms(rows) => write_rows(out, header, rows),
        ExperimentOutput::SirScan(rows) => write_rows(out, header, rows),
    }
}
