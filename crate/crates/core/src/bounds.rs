//! LS covariance, the Cramér–Rao bound of the FCM and its relaxations.
//!
//! The CRLB is `(1/N_t)·A⊗Aᵀ` with `A = R_p + (σ_n²/ω)·I`. At N = 128 that
//! is a 16384² matrix, so only `A`, an entry accessor and trace-derived
//! scalars are exposed.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::channel::{DopplerSpec, TimeCorrMatrix, TrueFcm, MAX_FIT_FDTS};
use crate::error::{Error, Result};
use crate::link::{NoiseSpec, PilotSequence};
use crate::numerics::{bessel_j0, CMatrix};

/// Fit constant of the λ_max law `N·J0(2π·c·f_dT_s)`.
pub const FIT_C: f64 = 0.35;

/// `ω = x_pᴴ·Ω·x_p`.
pub fn pilot_omega(x_p: &PilotSequence, tcm: &TimeCorrMatrix) -> Result<f64> {
    let n = tcm.n();
    if x_p.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x_p.len(),
        });
    }
    let x = x_p.symbols();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..n {
        let mut col = Complex64::new(0.0, 0.0);
        for i in 0..n {
            col += x[i].conj() * tcm.omega[(i, j)];
        }
        acc += col * x[j];
    }
    Ok(acc.re)
}

/// Covariance Σ of the LS estimate and the Wishart scale `Σ' = Σ/N_t`.
#[derive(Clone, Debug)]
pub struct LsCovariance {
    pub sigma: CMatrix,
    pub omega: f64,
    pub sigma_prime: CMatrix,
}

/// `Σ = ω·X_p⁻¹(R_p + (σ_n²/ω)I)X_p⁻ᴴ`.
pub fn ls_covariance(
    r_p: &TrueFcm,
    x_p: &PilotSequence,
    tcm: &TimeCorrMatrix,
    sigma_n2: f64,
    n_t: usize,
) -> Result<LsCovariance> {
    let n = r_p.n();
    if x_p.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x_p.len(),
        });
    }
    if n_t == 0 {
        return Err(Error::InvalidArgument("N_t must be positive".into()));
    }
    let omega = pilot_omega(x_p, tcm)?;
    if omega <= 0.0 {
        return Err(Error::Precondition(format!(
            "ω = {omega:e} is not positive"
        )));
    }
    let x = x_p.symbols();
    let sigma = CMatrix::from_fn(n, n, |i, j| {
        let mut v = r_p.r_p[(i, j)] * omega;
        if i == j {
            v += sigma_n2;
        }
        v / (x[i] * x[j].conj())
    });
    let sigma_prime = &sigma / Complex64::new(n_t as f64, 0.0);
    Ok(LsCovariance {
        sigma,
        omega,
        sigma_prime,
    })
}

/// The factor `A = R_p + (σ_n²/ω)·I` of `CRLB = (1/N_t)·A⊗Aᵀ`.
#[derive(Clone, Debug)]
pub struct CrlbFactor {
    pub a: CMatrix,
    pub n_t: usize,
}

impl CrlbFactor {
    pub fn new(r_p: &TrueFcm, omega: f64, sigma_n2: f64, n_t: usize) -> Result<Self> {
        if omega <= 0.0 {
            return Err(Error::Precondition(format!(
                "ω = {omega:e} is not positive"
            )));
        }
        if n_t == 0 {
            return Err(Error::InvalidArgument("N_t must be positive".into()));
        }
        let n = r_p.n();
        let a = &r_p.r_p + CMatrix::identity(n, n) * Complex64::new(sigma_n2 / omega, 0.0);
        Ok(Self { a, n_t })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Entry `((i·N+j), (k·N+l))` of `(1/N_t)·A⊗Aᵀ`, i.e. `A_ik·A_lj / N_t`.
    pub fn crlb_entry(&self, i: usize, j: usize, k: usize, l: usize) -> Result<Complex64> {
        let n = self.n();
        if let Some(&bad) = [i, j, k, l].iter().find(|&&v| v >= n) {
            return Err(Error::InvalidArgument(format!(
                "index {bad} out of range for N = {n}"
            )));
        }
        Ok(self.a[(i, k)] * self.a[(l, j)] / self.n_t as f64)
    }

    /// `tr(CRLB) = tr(A)²/N_t`.
    pub fn tmse_lb(&self) -> f64 {
        let tr = self.a.trace().re;
        tr * tr / self.n_t as f64
    }

    pub fn avgmse_lb(&self) -> f64 {
        let n = self.n() as f64;
        self.tmse_lb() / (n * n)
    }
}

/// `(1/N_t)(1 + 1/(ωγ))²`, written with σ_n² so that γ = ∞ is exact.
pub fn avgmse_lb_closed(n_t: usize, omega: f64, sigma_n2: f64) -> f64 {
    let t = 1.0 + sigma_n2 / omega;
    t * t / n_t as f64
}

/// Largest eigenvalue of Ω by a full symmetric eigensolve.
pub fn lambda_max_numeric(tcm: &TimeCorrMatrix) -> f64 {
    tcm.omega.clone().symmetric_eigenvalues().max()
}

/// `N·J0(2π·0.35·f_dT_s)`.
pub fn lambda_max_fit(n: usize, fdts: f64) -> Result<f64> {
    if fdts > MAX_FIT_FDTS {
        log::warn!("f_dT_s = {fdts} is outside the fitted range (<= {MAX_FIT_FDTS})");
    }
    Ok(n as f64 * bessel_j0(2.0 * PI * FIT_C * fdts)?)
}

/// Pilot-independent bound `(1/N_t)(1 + 1/(N·λ_max·γ))²`.
pub fn avgmse_lb_pilot_free(n: usize, n_t: usize, gamma: f64, lambda_max: f64) -> f64 {
    let t = 1.0 + 1.0 / (n as f64 * lambda_max * gamma);
    t * t / n_t as f64
}

/// `(1/N_t)(1 + 1/(N²·J0(2π·0.35·f_dT_s)·γ))²`.
pub fn avgmse_lb_insightful(n: usize, n_t: usize, gamma: f64, fdts: f64) -> Result<f64> {
    let lambda = lambda_max_fit(n, fdts)?;
    Ok(avgmse_lb_pilot_free(n, n_t, gamma, lambda))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub omega: f64,
    pub tmse_lb: f64,
    pub avgmse_lb: f64,
    pub avgmse_lb_pilot_free: f64,
    pub avgmse_lb_insightful: f64,
    pub lambda_max: f64,
    pub c_fit: f64,
}

impl BoundReport {
    pub fn compute(
        r_p: &TrueFcm,
        x_p: &PilotSequence,
        tcm: &TimeCorrMatrix,
        dop: &DopplerSpec,
        noise: &NoiseSpec,
        n_t: usize,
    ) -> Result<Self> {
        let n = r_p.n();
        let omega = pilot_omega(x_p, tcm)?;
        let factor = CrlbFactor::new(r_p, omega, noise.sigma_n2, n_t)?;
        let lambda_max = lambda_max_numeric(tcm);
        Ok(Self {
            omega,
            tmse_lb: factor.tmse_lb(),
            avgmse_lb: factor.avgmse_lb(),
            avgmse_lb_pilot_free: avgmse_lb_pilot_free(n, n_t, noise.gamma, lambda_max),
            avgmse_lb_insightful: avgmse_lb_insightful(n, n_t, noise.gamma, dop.normalized)?,
            lambda_max,
            c_fit: FIT_C,
        })
    }
}
