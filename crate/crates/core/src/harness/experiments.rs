//! The five experiments. Trials fan out over rayon; each trial owns a
//! stream derived from `(master_seed, trial index)` and results are folded
//! in index order, so output does not depend on the worker count.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentKind};
use crate::bounds::{
    avgmse_lb_closed, avgmse_lb_insightful, avgmse_lb_pilot_free, lambda_max_fit,
    lambda_max_numeric, ls_covariance, pilot_omega,
};
use crate::channel::{
    build_delay_transform, build_tcm, build_true_fcm, measure_sir, CirSampler, DopplerSpec,
    OfdmConfig, PathProfile, TimeCorrMatrix, TrueFcm,
};
use crate::error::Result;
use crate::estimation::{
    avg_mse, mle_fcm_with_omega, signed_diag_error, FcmEstimate, SfcmAccumulator,
};
use crate::link::{
    generate_qpsk_pilots, LinkMode, LsSource, ModelSampler, NoiseSpec, PilotSequence, WaveformLink,
};
use crate::numerics::RngStream;

const TAG_PILOT: u64 = 1;
const TAG_TRIAL: u64 = 2;
const TAG_SIR: u64 = 3;

/// Stream id layout: 8-bit tag, 24-bit group, 32-bit index.
pub fn stream_id(tag: u64, group: u64, index: u64) -> u64 {
    debug_assert!(group < (1 << 24) && index < (1 << 32));
    (tag << 56) | (group << 32) | index
}

fn stream(cfg: &ExperimentConfig, tag: u64, group: u64, index: u64) -> RngStream {
    RngStream::new(cfg.master_seed, stream_id(tag, group, index))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EigFitRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub fdts: f64,
    pub lambda_numeric: f64,
    pub lambda_fit: f64,
    pub rel_dev: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MseVsNtRow {
    #[serde(rename = "N_t")]
    pub n_t: usize,
    pub avgmse_empirical: f64,
    pub avgmse_lb: f64,
    pub mode: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundTightnessRow {
    #[serde(rename = "N_t")]
    pub n_t: usize,
    pub avgmse_mean_over_pilots: f64,
    pub lb_pilot_free: f64,
    pub lb_insightful: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HistogramRow {
    pub gamma_db: f64,
    pub f_d_hz: f64,
    pub trial: usize,
    pub avgmse: f64,
    pub signed_diag_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SirRow {
    pub fdts: f64,
    pub sir_db: f64,
    pub n_trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundTightnessResult {
    pub rows: Vec<BoundTightnessRow>,
    /// ω of every pilot sequence tested.
    pub pilot_omegas: Vec<f64>,
    /// `pilot_lbs[g][p]`: pilot p's AvgMSE bound at the g-th N_t.
    pub pilot_lbs: Vec<Vec<f64>>,
}

/// Mean and spread of one (γ, f_d) histogram cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellSummary {
    pub gamma_db: f64,
    pub f_d_hz: f64,
    pub runs: usize,
    pub mean_avgmse: f64,
    pub mean_signed_err: f64,
    /// Standard error of `mean_signed_err`.
    pub signed_err_sem: f64,
}

pub fn summarize_cells(rows: &[HistogramRow]) -> Vec<CellSummary> {
    let mut out: Vec<CellSummary> = Vec::new();
    for chunk in rows.chunk_by(|a, b| a.gamma_db == b.gamma_db && a.f_d_hz == b.f_d_hz) {
        let n = chunk.len() as f64;
        let mean_avgmse = chunk.iter().map(|r| r.avgmse).sum::<f64>() / n;
        let mean_err = chunk.iter().map(|r| r.signed_diag_err).sum::<f64>() / n;
        let var = chunk
            .iter()
            .map(|r| (r.signed_diag_err - mean_err).powi(2))
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        out.push(CellSummary {
            gamma_db: chunk[0].gamma_db,
            f_d_hz: chunk[0].f_d_hz,
            runs: chunk.len(),
            mean_avgmse,
            mean_signed_err: mean_err,
            signed_err_sem: (var / n).sqrt(),
        });
    }
    out
}

/// Statistics shared by one simulated scenario.
struct Scenario {
    ofdm: OfdmConfig,
    prof: PathProfile,
    dop: DopplerSpec,
    tcm: TimeCorrMatrix,
    r_p: TrueFcm,
    noise: NoiseSpec,
}

impl Scenario {
    fn new(cfg: &ExperimentConfig, f_d_hz: f64, snr_db: f64) -> Result<Self> {
        let ofdm = cfg.ofdm()?;
        let prof = cfg.profile.resolve(&ofdm)?;
        let dop = DopplerSpec::new(f_d_hz, &ofdm)?;
        let tcm = build_tcm(&ofdm, &dop)?;
        let r_p = build_true_fcm(&build_delay_transform(&ofdm, &prof), &prof)?;
        Ok(Self {
            ofdm,
            prof,
            dop,
            tcm,
            r_p,
            noise: NoiseSpec::from_snr_db(snr_db)?,
        })
    }

    fn source(&self, mode: LinkMode, pilots: &PilotSequence) -> Result<LsSource> {
        Ok(match mode {
            LinkMode::Model => {
                let cov = ls_covariance(&self.r_p, pilots, &self.tcm, self.noise.sigma_n2, 1)?;
                LsSource::Model(ModelSampler::new(&cov.sigma)?)
            }
            LinkMode::Waveform => LsSource::Waveform(WaveformLink {
                cir: CirSampler::new(&self.tcm, &self.prof)?,
                ft: build_delay_transform(&self.ofdm, &self.prof),
                pilots: pilots.clone(),
                noise: self.noise,
            }),
        })
    }
}

/// One MLE from `n_t` fresh LS estimates.
pub fn estimate_once(
    source: &LsSource,
    n_t: usize,
    pilots: &PilotSequence,
    omega: f64,
    sigma_n2: f64,
    stream: &mut RngStream,
) -> Result<FcmEstimate> {
    let mut acc = SfcmAccumulator::new(pilots.len());
    for _ in 0..n_t {
        acc.accumulate(&source.sample(stream)?)?;
    }
    mle_fcm_with_omega(&acc.finalize()?, pilots, omega, sigma_n2)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn run_eig_fit(cfg: &ExperimentConfig) -> Result<Vec<EigFitRow>> {
    let grid: Vec<(usize, f64)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| cfg.fdts_list.iter().map(move |&f| (n, f)))
        .collect();
    grid.into_par_iter()
        .map(|(n, fdts)| {
            let ofdm = OfdmConfig::new(n, cfg.cp_len, cfg.sample_period_s)?;
            let tcm = build_tcm(&ofdm, &DopplerSpec::from_normalized(fdts, &ofdm)?)?;
            let lambda_numeric = lambda_max_numeric(&tcm);
            let lambda_fit = lambda_max_fit(n, fdts)?;
            Ok(EigFitRow {
                n,
                fdts,
                lambda_numeric,
                lambda_fit,
                rel_dev: (lambda_numeric - lambda_fit).abs() / lambda_numeric,
            })
        })
        .collect()
}

pub fn run_mse_vs_nt(cfg: &ExperimentConfig) -> Result<Vec<MseVsNtRow>> {
    let sc = Scenario::new(cfg, cfg.f_d_hz, cfg.snr_db)?;
    let pilots = generate_qpsk_pilots(&mut stream(cfg, TAG_PILOT, 0, 0), cfg.n_tones)?;
    let omega = pilot_omega(&pilots, &sc.tcm)?;
    let source = sc.source(cfg.mode, &pilots)?;
    let mut rows = Vec::with_capacity(cfg.n_t_list.len());
    for (g, &n_t) in cfg.n_t_list.iter().enumerate() {
        let mses = (0..cfg.n_trials)
            .into_par_iter()
            .map(|t| {
                let mut s = stream(cfg, TAG_TRIAL, g as u64, t as u64);
                let est = estimate_once(&source, n_t, &pilots, omega, sc.noise.sigma_n2, &mut s)?;
                avg_mse(&est, &sc.r_p)
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(MseVsNtRow {
            n_t,
            avgmse_empirical: mean(&mses),
            avgmse_lb: avgmse_lb_closed(n_t, omega, sc.noise.sigma_n2),
            mode: cfg.mode.as_str(),
        });
    }
    Ok(rows)
}

pub fn run_bound_tightness(cfg: &ExperimentConfig) -> Result<BoundTightnessResult> {
    let sc = Scenario::new(cfg, cfg.f_d_hz, cfg.snr_db)?;
    let n = cfg.n_tones;
    let pilots = (0..cfg.n_pilot_seqs)
        .map(|p| generate_qpsk_pilots(&mut stream(cfg, TAG_PILOT, 0, p as u64), n))
        .collect::<Result<Vec<_>>>()?;
    let pilot_omegas = pilots
        .iter()
        .map(|x| pilot_omega(x, &sc.tcm))
        .collect::<Result<Vec<_>>>()?;
    let sources = pilots
        .par_iter()
        .map(|x| sc.source(cfg.mode, x))
        .collect::<Result<Vec<_>>>()?;
    let lambda_max = lambda_max_numeric(&sc.tcm);
    let per_pilot = cfg.n_trials;

    let mut rows = Vec::with_capacity(cfg.n_t_list.len());
    let mut pilot_lbs = Vec::with_capacity(cfg.n_t_list.len());
    for (g, &n_t) in cfg.n_t_list.iter().enumerate() {
        let mses = (0..cfg.n_pilot_seqs * per_pilot)
            .into_par_iter()
            .map(|idx| {
                let p = idx / per_pilot;
                let mut s = stream(cfg, TAG_TRIAL, g as u64, idx as u64);
                let est = estimate_once(
                    &sources[p],
                    n_t,
                    &pilots[p],
                    pilot_omegas[p],
                    sc.noise.sigma_n2,
                    &mut s,
                )?;
                avg_mse(&est, &sc.r_p)
            })
            .collect::<Result<Vec<f64>>>()?;
        let pilot_means: Vec<f64> = mses.chunks(per_pilot).map(mean).collect();
        rows.push(BoundTightnessRow {
            n_t,
            avgmse_mean_over_pilots: mean(&pilot_means),
            lb_pilot_free: avgmse_lb_pilot_free(n, n_t, sc.noise.gamma, lambda_max),
            lb_insightful: avgmse_lb_insightful(n, n_t, sc.noise.gamma, sc.dop.normalized)?,
        });
        pilot_lbs.push(
            pilot_omegas
                .iter()
                .map(|&w| avgmse_lb_closed(n_t, w, sc.noise.sigma_n2))
                .collect(),
        );
    }
    Ok(BoundTightnessResult {
        rows,
        pilot_omegas,
        pilot_lbs,
    })
}

/// One fixed pilot sequence for all cells; trial t uses the same stream
/// in every cell so cells differ only through γ and f_d.
pub fn run_histograms(cfg: &ExperimentConfig) -> Result<Vec<HistogramRow>> {
    let n_t = cfg.n_t_list[0];
    let pilots = generate_qpsk_pilots(&mut stream(cfg, TAG_PILOT, 0, 0), cfg.n_tones)?;
    let mut rows = Vec::with_capacity(cfg.snr_db_list.len() * cfg.f_d_hz_list.len() * cfg.n_trials);
    for &gamma_db in &cfg.snr_db_list {
        for &f_d_hz in &cfg.f_d_hz_list {
            let sc = Scenario::new(cfg, f_d_hz, gamma_db)?;
            let omega = pilot_omega(&pilots, &sc.tcm)?;
            let source = sc.source(cfg.mode, &pilots)?;
            let cell = (0..cfg.n_trials)
                .into_par_iter()
                .map(|t| {
                    let mut s = stream(cfg, TAG_TRIAL, 0, t as u64);
                    let est =
                        estimate_once(&source, n_t, &pilots, omega, sc.noise.sigma_n2, &mut s)?;
                    Ok(HistogramRow {
                        gamma_db,
                        f_d_hz,
                        trial: t,
                        avgmse: avg_mse(&est, &sc.r_p)?,
                        signed_diag_err: signed_diag_error(&est, &sc.r_p)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            rows.extend(cell);
        }
    }
    Ok(rows)
}

pub fn run_sir_scan(cfg: &ExperimentConfig) -> Result<Vec<SirRow>> {
    let ofdm = cfg.ofdm()?;
    let prof = cfg.profile.resolve(&ofdm)?;
    cfg.fdts_list
        .par_iter()
        .enumerate()
        .map(|(i, &fdts)| {
            let dop = DopplerSpec::from_normalized(fdts, &ofdm)?;
            let mut s = stream(cfg, TAG_SIR, 0, i as u64);
            Ok(SirRow {
                fdts,
                sir_db: measure_sir(&ofdm, &prof, &dop, cfg.n_trials, &mut s)?,
                n_trials: cfg.n_trials,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExperimentOutput {
    EigFit(Vec<EigFitRow>),
    MseVsNt(Vec<MseVsNtRow>),
    BoundTightness(BoundTightnessResult),
    Histograms(Vec<HistogramRow>),
    SirScan(Vec<SirRow>),
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    Ok(match cfg.experiment {
        ExperimentKind::EigFit => ExperimentOutput::EigFit(run_eig_fit(cfg)?),
        ExperimentKind::MseVsNt => ExperimentOutput::MseVsNt(run_mse_vs_nt(cfg)?),
        ExperimentKind::BoundTightness => {
            ExperimentOutput::BoundTightness(run_bound_tightness(cfg)?)
        }
        ExperimentKind::Histograms => ExperimentOutput::Histograms(run_histograms(cfg)?),
        ExperimentKind::SirScan => ExperimentOutput::SirScan(run_sir_scan(cfg)?),
    })
}
