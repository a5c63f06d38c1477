//! Doubly selective channel statistics and realizations.
//!
//! Builds the time correlation matrix Ω, the non-sample-spaced delay
//! transform F_τ, the true frequency correlation matrix `R_p = F_τ·D·F_τᴴ`,
//! and draws channel impulse responses whose vectorization is
//! `CN(0, Ω⊗D)`. The per-symbol transfer matrix keeps the inter-carrier
//! interference terms produced by intra-symbol fading.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bessel_j0, psd_factor, to_complex, CMatrix, RngStream, PSD_REL_TOL};

/// Above this normalized Doppler the eigenvalue fit is no longer trusted.
pub const MAX_FIT_FDTS: f64 = 0.35;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OfdmConfig {
    n_tones: usize,
    cp_len: usize,
    sample_period: f64,
}

impl OfdmConfig {
    pub fn new(n_tones: usize, cp_len: usize, sample_period: f64) -> Result<Self> {
        if n_tones < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 tones, got {n_tones}"
            )));
        }
        if !(sample_period > 0.0 && sample_period.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample period must be positive, got {sample_period}"
            )));
        }
        Ok(Self {
            n_tones,
            cp_len,
            sample_period,
        })
    }

    pub fn n_tones(&self) -> usize {
        self.n_tones
    }

    pub fn cp_len(&self) -> usize {
        self.cp_len
    }

    pub fn sample_period(&self) -> f64 {
        self.sample_period
    }

    /// `T_s = (N + L_cp)·T`.
    pub fn symbol_duration(&self) -> f64 {
        (self.n_tones + self.cp_len) as f64 * self.sample_period
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuiltinProfile {
    #[serde(rename = "EVA")]
    Eva,
    #[serde(rename = "ETU")]
    Etu,
}

impl BuiltinProfile {
    pub fn name(self) -> &'static str {
        match self {
            BuiltinProfile::Eva => "EVA",
            BuiltinProfile::Etu => "ETU",
        }
    }

    pub fn definition(self) -> ProfileDef {
        let (delays_ns, powers_db): (&[f64], &[f64]) = match self {
            BuiltinProfile::Eva => (
                &[
                    0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0,
                ],
                &[0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9],
            ),
            BuiltinProfile::Etu => (
                &[
                    0.0, 50.0, 120.0, 200.0, 230.0, 500.0, 1600.0, 2300.0, 5000.0,
                ],
                &[-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, -3.0, -5.0, -7.0],
            ),
        };
        ProfileDef {
            name: self.name().to_string(),
            delays_ns: delays_ns.to_vec(),
            powers_db: powers_db.to_vec(),
        }
    }
}

impl std::str::FromStr for BuiltinProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EVA" => Ok(BuiltinProfile::Eva),
            "ETU" => Ok(BuiltinProfile::Etu),
            _ => Err(Error::UnknownProfile(s.to_string())),
        }
    }
}

/// Power-delay profile as written in a config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDef {
    pub name: String,
    pub delays_ns: Vec<f64>,
    pub powers_db: Vec<f64>,
}

impl ProfileDef {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathProfile {
    pub name: String,
    /// Path delays in seconds.
    pub delays: Vec<f64>,
    pub powers_db: Vec<f64>,
    /// Delays in units of the sample period (not necessarily integer).
    pub tau: Vec<f64>,
    /// Linear path powers, summing to one.
    pub sigma2: Vec<f64>,
}

impl PathProfile {
    pub fn from_def(def: &ProfileDef, cfg: &OfdmConfig) -> Result<Self> {
        let l = def.delays_ns.len();
        if l == 0 {
            return Err(Error::InvalidArgument("profile has no paths".into()));
        }
        if def.powers_db.len() != l {
            return Err(Error::Dimension {
                expected: l,
                got: def.powers_db.len(),
            });
        }
        if def
            .delays_ns
            .iter()
            .chain(&def.powers_db)
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidArgument(
                "profile values must be finite".into(),
            ));
        }
        if def.delays_ns[0] < 0.0 || def.delays_ns.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "path delays must be nonnegative and strictly increasing".into(),
            ));
        }
        let delays: Vec<f64> = def.delays_ns.iter().map(|d| d * 1e-9).collect();
        let tau: Vec<f64> = delays.iter().map(|d| d / cfg.sample_period()).collect();
        let max_tau = tau[l - 1];
        if max_tau > cfg.cp_len() as f64 {
            return Err(Error::Precondition(format!(
                "profile {} spans {max_tau:.3} samples, cyclic prefix holds {}",
                def.name,
                cfg.cp_len()
            )));
        }
        let linear: Vec<f64> = def.powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
        let total: f64 = linear.iter().sum();
        Ok(Self {
            name: def.name.clone(),
            delays,
            powers_db: def.powers_db.clone(),
            tau,
            sigma2: linear.iter().map(|p| p / total).collect(),
        })
    }

    pub fn n_paths(&self) -> usize {
        self.tau.len()
    }
}

pub fn builtin_profile(name: BuiltinProfile, cfg: &OfdmConfig) -> Result<PathProfile> {
    PathProfile::from_def(&name.definition(), cfg)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DopplerSpec {
    pub f_d: f64,
    /// `f_d·T_s`.
    pub normalized: f64,
}

impl DopplerSpec {
    pub fn new(f_d: f64, cfg: &OfdmConfig) -> Result<Self> {
        if !(f_d >= 0.0 && f_d.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "maximum Doppler must be a nonnegative frequency, got {f_d}"
            )));
        }
        let normalized = f_d * cfg.symbol_duration();
        if normalized > MAX_FIT_FDTS {
            log::warn!(
                "normalized Doppler {normalized:.4} exceeds {MAX_FIT_FDTS}; eigenvalue fit not valid"
            );
        }
        Ok(Self { f_d, normalized })
    }

    /// Spec with a given normalized Doppler `f_d·T_s`.
    pub fn from_normalized(fdts: f64, cfg: &OfdmConfig) -> Result<Self> {
        Self::new(fdts / cfg.symbol_duration(), cfg)
    }
}

/// Ω, with `[Ω]_{m1,m2} = J0(2π f_d (m1−m2) T)` over the in-symbol samples.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeCorrMatrix {
    pub omega: DMatrix<f64>,
}

impl TimeCorrMatrix {
    pub fn n(&self) -> usize {
        self.omega.nrows()
    }

    /// `B` with `B·Bᴴ = Ω`, numerically rank-truncated.
    pub fn factor(&self) -> Result<CMatrix> {
        psd_factor(&to_complex(&self.omega), PSD_REL_TOL)
    }
}

pub fn build_tcm(cfg: &OfdmConfig, dop: &DopplerSpec) -> Result<TimeCorrMatrix> {
    let n = cfg.n_tones();
    let step = 2.0 * PI * dop.f_d * cfg.sample_period();
    let lags = (0..n)
        .map(|d| bessel_j0(step * d as f64))
        .collect::<Result<Vec<f64>>>()?;
    let omega = DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)]);
    Ok(TimeCorrMatrix { omega })
}

/// F_τ, with `[F_τ]_{k,l} = exp(−j2πkτ_l/N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayTransform {
    pub f_tau: CMatrix,
}

pub fn build_delay_transform(cfg: &OfdmConfig, prof: &PathProfile) -> DelayTransform {
    let n = cfg.n_tones();
    let f_tau = CMatrix::from_fn(n, prof.n_paths(), |k, l| {
        Complex64::from_polar(1.0, -2.0 * PI * k as f64 * prof.tau[l] / n as f64)
    });
    DelayTransform { f_tau }
}

/// The true frequency correlation matrix `R_p`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrueFcm {
    pub r_p: CMatrix,
}

impl TrueFcm {
    pub fn n(&self) -> usize {
        self.r_p.nrows()
    }
}

pub fn build_true_fcm(ft: &DelayTransform, prof: &PathProfile) -> Result<TrueFcm> {
    let l = ft.f_tau.ncols();
    if prof.n_paths() != l {
        return Err(Error::Dimension {
            expected: l,
            got: prof.n_paths(),
        });
    }
    let mut weighted = ft.f_tau.clone();
    for (c, s2) in prof.sigma2.iter().enumerate() {
        weighted.column_mut(c).scale_mut(*s2);
    }
    Ok(TrueFcm {
        r_p: weighted * ft.f_tau.adjoint(),
    })
}

/// L×N channel impulse response of one symbol; column m is the tap vector at sample m.
#[derive(Clone, Debug, PartialEq)]
pub struct CirMatrix {
    pub h_t: CMatrix,
}

/// Draws CIR matrices from `CN(0, Ω⊗D)`, reusing one factorization of Ω.
#[derive(Clone, Debug)]
pub struct CirSampler {
    factor: CMatrix,
    path_std: Vec<f64>,
}

impl CirSampler {
    pub fn new(tcm: &TimeCorrMatrix, prof: &PathProfile) -> Result<Self> {
        Ok(Self {
            factor: tcm.factor()?,
            path_std: prof.sigma2.iter().map(|s| s.sqrt()).collect(),
        })
    }

    pub fn sample(&self, stream: &mut RngStream) -> CirMatrix {
        let n = self.factor.nrows();
        let r = self.factor.ncols();
        let l = self.path_std.len();
        // Rows of g are independent paths; each row is mapped through Bᵀ.
        let g = CMatrix::from_fn(l, r, |_, _| stream.cn());
        let mut h_t = g * self.factor.transpose();
        for (row, s) in self.path_std.iter().enumerate() {
            h_t.row_mut(row).scale_mut(*s);
        }
        debug_assert_eq!(h_t.ncols(), n);
        CirMatrix { h_t }
    }
}

pub fn sample_cir(
    stream: &mut RngStream,
    tcm: &TimeCorrMatrix,
    prof: &PathProfile,
) -> Result<CirMatrix> {
    Ok(CirSampler::new(tcm, prof)?.sample(stream))
}

/// Per-symbol channel transfer matrix, diagonal plus ICI bands.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    pub h_f: CMatrix,
}

/// `F_τ·H_t`: the frequency response of tone k at in-symbol sample m.
pub fn time_frequency_response(cir: &CirMatrix, ft: &DelayTransform) -> Result<CMatrix> {
    if ft.f_tau.ncols() != cir.h_t.nrows() {
        return Err(Error::Dimension {
            expected: ft.f_tau.ncols(),
            got: cir.h_t.nrows(),
        });
    }
    Ok(&ft.f_tau * &cir.h_t)
}

/// `[H_f]_{k+υ,k} = (1/N) Σ_m Σ_l h_l(m) exp(−j2π(υm + kτ_l)/N)`, υ taken modulo N.
pub fn build_transfer_matrix(cir: &CirMatrix, ft: &DelayTransform) -> Result<TransferMatrix> {
    let g = time_frequency_response(cir, ft)?;
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: g.ncols(),
        });
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let inv_n = 1.0 / n as f64;
    let mut h_f = CMatrix::zeros(n, n);
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    for k in 0..n {
        for (m, v) in row.iter_mut().enumerate() {
            *v = g[(k, m)];
        }
        fft.process(&mut row);
        for (nu, v) in row.iter().enumerate() {
            h_f[((k + nu) % n, k)] = v * inv_n;
        }
    }
    Ok(TransferMatrix { h_f })
}

/// Diagonal and off-diagonal energies of a transfer matrix.
pub fn transfer_energies(hf: &TransferMatrix) -> (f64, f64) {
    let mut diag = 0.0;
    let mut total = 0.0;
    for (idx, v) in hf.h_f.iter().enumerate() {
        let e = v.norm_sqr();
        total += e;
        if idx % (hf.h_f.nrows() + 1) == 0 {
            diag += e;
        }
    }
    (diag, total - diag)
}

/// Signal-to-interference ratio in dB, averaged over `n_trials` symbols.
///
/// Returns `+∞` when the interference energy is below 1e-20 of the signal
/// energy (a time-invariant channel).
pub fn measure_sir(
    cfg: &OfdmConfig,
    prof: &PathProfile,
    dop: &DopplerSpec,
    n_trials: usize,
    stream: &mut RngStream,
) -> Result<f64> {
    if n_trials < 100 {
        return Err(Error::InvalidArgument(format!(
            "SIR needs at least 100 trials, got {n_trials}"
        )));
    }
    let tcm = build_tcm(cfg, dop)?;
    let ft = build_delay_transform(cfg, prof);
    let sampler = CirSampler::new(&tcm, prof)?;
    let mut signal = 0.0;
    let mut interference = 0.0;
    for _ in 0..n_trials {
        let hf = build_transfer_matrix(&sampler.sample(stream), &ft)?;
        let (d, o) = transfer_energies(&hf);
        signal += d;
        interference += o;
    }
    if interference <= 1e-20 * signal {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / interference).log10())
}
