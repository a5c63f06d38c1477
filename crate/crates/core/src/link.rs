//! Pilot symbols, noisy reception and least-squares channel estimates.
//!
//! Two sources of LS estimates are provided: the waveform path pushes the
//! pilot through a simulated transfer matrix (ICI included), and the model
//! path draws the estimate directly from its Gaussian law `CN(0, Σ)`.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    build_transfer_matrix, time_frequency_response, CirMatrix, CirSampler, DelayTransform,
    TransferMatrix,
};
use crate::error::{Error, Result};
use crate::numerics::{psd_factor, CMatrix, CVector, RngStream, PSD_REL_TOL};

#[derive(Clone, Debug, PartialEq)]
pub struct PilotSequence {
    x: CVector,
    /// `(master_seed, stream_id)` the sequence was drawn from, if random.
    pub provenance: Option<(u64, u64)>,
}

impl PilotSequence {
    /// Wraps explicit pilot symbols; every entry must have unit modulus.
    pub fn new(x: CVector) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidArgument("empty pilot sequence".into()));
        }
        if let Some(bad) = x.iter().find(|z| (z.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "pilot symbol {bad} does not have unit modulus"
            )));
        }
        Ok(Self {
            x,
            provenance: None,
        })
    }

    pub fn all_ones(n: usize) -> Self {
        Self {
            x: CVector::from_element(n, Complex64::new(1.0, 0.0)),
            provenance: None,
        }
    }

    pub fn symbols(&self) -> &CVector {
        &self.x
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// i.i.d. uniform QPSK symbols `(±1 ± j)/√2`.
pub fn generate_qpsk_pilots(stream: &mut RngStream, n: usize) -> Result<PilotSequence> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "pilot length must be positive".into(),
        ));
    }
    let x = CVector::from_fn(n, |_, _| {
        let bits: u8 = stream.random_range(0..4);
        let re = if bits & 1 == 0 {
            FRAC_1_SQRT_2
        } else {
            -FRAC_1_SQRT_2
        };
        let im = if bits & 2 == 0 {
            FRAC_1_SQRT_2
        } else {
            -FRAC_1_SQRT_2
        };
        Complex64::new(re, im)
    });
    Ok(PilotSequence {
        x,
        provenance: Some((stream.master_seed(), stream.stream_id())),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    /// Linear SNR γ.
    pub gamma: f64,
    /// Noise variance per frequency-domain sample, `1/γ`.
    pub sigma_n2: f64,
}

impl NoiseSpec {
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        if !snr_db.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "SNR {snr_db} dB is not finite"
            )));
        }
        let gamma = 10f64.powf(snr_db / 10.0);
        Ok(Self {
            snr_db,
            gamma,
            sigma_n2: 1.0 / gamma,
        })
    }

    /// Noise of the given variance; zero gives a noiseless link (γ = ∞).
    pub fn from_variance(sigma_n2: f64) -> Result<Self> {
        if !(sigma_n2 >= 0.0 && sigma_n2.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be nonnegative, got {sigma_n2}"
            )));
        }
        let gamma = 1.0 / sigma_n2;
        Ok(Self {
            snr_db: 10.0 * gamma.log10(),
            gamma,
            sigma_n2,
        })
    }
}

fn add_noise(mut y: CVector, noise: &NoiseSpec, stream: &mut RngStream) -> CVector {
    if noise.sigma_n2 > 0.0 {
        let s = noise.sigma_n2.sqrt();
        for v in y.iter_mut() {
            *v += stream.cn() * s;
        }
    }
    y
}

/// `y_p = H_f·x_p + n_p` with `n_p ~ CN(0, σ_n²I)`.
pub fn simulate_pilot_rx(
    hf: &TransferMatrix,
    x_p: &PilotSequence,
    noise: &NoiseSpec,
    stream: &mut RngStream,
) -> Result<CVector> {
    if hf.h_f.ncols() != x_p.len() {
        return Err(Error::Dimension {
            expected: hf.h_f.ncols(),
            got: x_p.len(),
        });
    }
    Ok(add_noise(&hf.h_f * x_p.symbols(), noise, stream))
}

/// Reception through the time-frequency response `F_τ·H_t` applied to the
/// pilot vector, the linear form under which the LS estimate is exactly
/// `CN(0, Σ)`.
pub fn linear_model_rx(
    cir: &CirMatrix,
    ft: &DelayTransform,
    x_p: &PilotSequence,
    noise: &NoiseSpec,
    stream: &mut RngStream,
) -> Result<CVector> {
    let hp = time_frequency_response(cir, ft)?;
    if hp.ncols() != x_p.len() {
        return Err(Error::Dimension {
            expected: hp.ncols(),
            got: x_p.len(),
        });
    }
    Ok(add_noise(hp * x_p.symbols(), noise, stream))
}

/// Per-tone LS estimate `X_p⁻¹·y_p`.
pub fn ls_estimate(y_p: &CVector, x_p: &PilotSequence) -> Result<CVector> {
    if y_p.len() != x_p.len() {
        return Err(Error::Dimension {
            expected: x_p.len(),
            got: y_p.len(),
        });
    }
    if x_p.symbols().iter().any(|z| z.norm_sqr() == 0.0) {
        return Err(Error::InvalidArgument("zero pilot symbol".into()));
    }
    Ok(y_p.component_div(x_p.symbols()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMode {
    /// LS estimates drawn from `CN(0, Σ)`.
    Model,
    /// LS estimates from a simulated OFDM pilot symbol with ICI.
    Waveform,
}

impl LinkMode {
    pub fn as_str(self) -> &'static str {
        match self {
            LinkMode::Model => "model",
            LinkMode::Waveform => "waveform",
        }
    }
}

impl std::str::FromStr for LinkMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "model" => Ok(LinkMode::Model),
            "waveform" => Ok(LinkMode::Waveform),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

/// Draws LS estimates as `B·g` with `B·Bᴴ = Σ`.
#[derive(Clone, Debug)]
pub struct ModelSampler {
    factor: CMatrix,
}

impl ModelSampler {
    pub fn new(sigma: &CMatrix) -> Result<Self> {
        Ok(Self {
            factor: psd_factor(sigma, PSD_REL_TOL)?,
        })
    }

    pub fn sample(&self, stream: &mut RngStream) -> CVector {
        let g = CVector::from_fn(self.factor.ncols(), |_, _| stream.cn());
        &self.factor * g
    }
}

/// Pilot symbol through a freshly drawn doubly selective channel.
#[derive(Clone, Debug)]
pub struct WaveformLink {
    pub cir: CirSampler,
    pub ft: DelayTransform,
    pub pilots: PilotSequence,
    pub noise: NoiseSpec,
}

impl WaveformLink {
    pub fn sample(&self, stream: &mut RngStream) -> Result<CVector> {
        let hf = build_transfer_matrix(&self.cir.sample(stream), &self.ft)?;
        let y = simulate_pilot_rx(&hf, &self.pilots, &self.noise, stream)?;
        ls_estimate(&y, &self.pilots)
    }
}

/// Source of independent LS estimates, one per pilot symbol.
#[derive(Clone, Debug)]
pub enum LsSource {
    Model(ModelSampler),
    Waveform(WaveformLink),
}

impl LsSource {
    pub fn sample(&self, stream: &mut RngStream) -> Result<CVector> {
        match self {
            LsSource::Model(m) => Ok(m.sample(stream)),
            LsSource::Waveform(w) => w.sample(stream),
        }
    }
}
