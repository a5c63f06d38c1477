//! Sample frequency correlation matrix, its ML correction and error metrics.

use num_complex::Complex64;

use crate::bounds::pilot_omega;
use crate::channel::{TimeCorrMatrix, TrueFcm};
use crate::error::{Error, Result};
use crate::link::PilotSequence;
use crate::numerics::{frobenius_sq, psd_factor, CMatrix, CVector, RngStream, PSD_REL_TOL};

/// Running sum of `h·hᴴ` over LS estimates.
#[derive(Clone, Debug, PartialEq)]
pub struct SfcmAccumulator {
    running_sum: CMatrix,
    count: usize,
}

impl SfcmAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            running_sum: CMatrix::zeros(n, n),
            count: 0,
        }
    }

    pub fn n(&self) -> usize {
        self.running_sum.nrows()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn accumulate(&mut self, h_ls: &CVector) -> Result<()> {
        if h_ls.len() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: h_ls.len(),
            });
        }
        self.running_sum.gerc(
            Complex64::new(1.0, 0.0),
            h_ls,
            h_ls,
            Complex64::new(1.0, 0.0),
        );
        self.count += 1;
        Ok(())
    }

    /// Fold another accumulator over the same dimension into this one.
    pub fn merge(&mut self, other: &SfcmAccumulator) -> Result<()> {
        if other.n() != self.n() {
            return Err(Error::Dimension {
                expected: self.n(),
                got: other.n(),
            });
        }
        self.running_sum += &other.running_sum;
        self.count += other.count;
        Ok(())
    }

    pub fn finalize(&self) -> Result<Sfcm> {
        if self.count == 0 {
            return Err(Error::InvalidArgument("no samples accumulated".into()));
        }
        Ok(Sfcm {
            r_hat: &self.running_sum / Complex64::new(self.count as f64, 0.0),
            n_t: self.count,
        })
    }
}

/// `R̂ = (1/N_t) Σ h·hᴴ`, complex Wishart with N_t degrees of freedom.
#[derive(Clone, Debug, PartialEq)]
pub struct Sfcm {
    pub r_hat: CMatrix,
    pub n_t: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FcmEstimate {
    pub r_est: CMatrix,
}

/// `(X_p·R̂·X_pᴴ − σ_n²·I)/ω` with `ω = x_pᴴΩx_p`.
///
/// The result is not projected onto the PSD cone.
pub fn mle_fcm(
    sfcm: &Sfcm,
    x_p: &PilotSequence,
    tcm: &TimeCorrMatrix,
    sigma_n2: f64,
) -> Result<FcmEstimate> {
    let omega = pilot_omega(x_p, tcm)?;
    mle_fcm_with_omega(sfcm, x_p, omega, sigma_n2)
}

/// [`mle_fcm`] with a precomputed ω.
pub fn mle_fcm_with_omega(
    sfcm: &Sfcm,
    x_p: &PilotSequence,
    omega: f64,
    sigma_n2: f64,
) -> Result<FcmEstimate> {
    let n = sfcm.r_hat.nrows();
    if x_p.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x_p.len(),
        });
    }
    if omega.is_nan() || omega <= 0.0 {
        return Err(Error::Precondition(format!(
            "ω = {omega:e} is not positive"
        )));
    }
    let x = x_p.symbols();
    let r_est = CMatrix::from_fn(n, n, |i, j| {
        let mut v = x[i] * sfcm.r_hat[(i, j)] * x[j].conj();
        if i == j {
            v -= sigma_n2;
        }
        v / omega
    });
    Ok(FcmEstimate { r_est })
}

fn check_dims(est: &FcmEstimate, truth: &TrueFcm) -> Result<()> {
    if est.r_est.shape() != truth.r_p.shape() {
        return Err(Error::Dimension {
            expected: truth.n(),
            got: est.r_est.nrows(),
        });
    }
    Ok(())
}

/// `‖R_est − R_p‖_F²`.
pub fn total_mse(est: &FcmEstimate, truth: &TrueFcm) -> Result<f64> {
    check_dims(est, truth)?;
    Ok(frobenius_sq(&(&est.r_est - &truth.r_p)))
}

/// `‖R_est − R_p‖_F² / N²`.
pub fn avg_mse(est: &FcmEstimate, truth: &TrueFcm) -> Result<f64> {
    let n = truth.n() as f64;
    Ok(total_mse(est, truth)? / (n * n))
}

/// Mean signed error on the diagonal, `Re tr(R_est − R_p)/N`.
pub fn signed_diag_error(est: &FcmEstimate, truth: &TrueFcm) -> Result<f64> {
    check_dims(est, truth)?;
    Ok((est.r_est.trace() - truth.r_p.trace()).re / truth.n() as f64)
}

/// Empirical versus closed-form second central moments of a complex Wishart matrix.
#[derive(Clone, Debug)]
pub struct WishartMomentReport {
    pub n: usize,
    /// `E[(S_ij − E S_ij)(S_kl − E S_kl)]`, flattened as `((i·N + j)·N + k)·N + l`.
    pub empirical: Vec<Complex64>,
    /// `N_t·Σ'_kj·Σ'_il` in the same layout.
    pub theoretical: Vec<Complex64>,
    /// Largest `|empirical − theoretical| / (N_t·√(Σ'_ii Σ'_jj Σ'_kk Σ'_ll))`.
    pub max_rel_dev: f64,
}

impl WishartMomentReport {
    pub fn index(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }
}

/// Largest supported dimension for the moment check (N⁴ moment entries).
pub const WISHART_CHECK_MAX_N: usize = 6;

/// Draws `n_runs` matrices `S = Σ_{t<N_t} y_t·y_tᴴ`, `y_t ~ CN(0, Σ')`, and
/// compares their empirical second central moments with `N_t·Σ'_kj·Σ'_il`.
///
/// Deviations are scaled by the Cauchy–Schwarz bound of each moment,
/// `N_t·√(Σ'_ii Σ'_jj Σ'_kk Σ'_ll)`, so near-zero moments are judged on the
/// same footing as the variances.
pub fn wishart_second_moments(
    sigma_prime: &CMatrix,
    n_t: usize,
    n_runs: usize,
    stream: &mut RngStream,
) -> Result<WishartMomentReport> {
    let n = sigma_prime.nrows();
    if n == 0 || n > WISHART_CHECK_MAX_N {
        return Err(Error::InvalidArgument(format!(
            "moment check supports 1 <= N <= {WISHART_CHECK_MAX_N}, got {n}"
        )));
    }
    if n_t == 0 || n_runs < 2 {
        return Err(Error::InvalidArgument(
            "need N_t >= 1 and at least two runs".into(),
        ));
    }
    let b = psd_factor(sigma_prime, PSD_REL_TOL)?;
    let nn = n * n;
    let mean = sigma_prime * Complex64::new(n_t as f64, 0.0);
    // Accumulate deviations from the known mean to limit cancellation.
    let mut first = vec![Complex64::new(0.0, 0.0); nn];
    let mut second = vec![Complex64::new(0.0, 0.0); nn * nn];
    let mut d = vec![Complex64::new(0.0, 0.0); nn];
    for _ in 0..n_runs {
        let mut s = CMatrix::zeros(n, n);
        for _ in 0..n_t {
            let g = CVector::from_fn(b.ncols(), |_, _| stream.cn());
            let y = &b * g;
            s.gerc(Complex64::new(1.0, 0.0), &y, &y, Complex64::new(1.0, 0.0));
        }
        for i in 0..n {
            for j in 0..n {
                d[i * n + j] = s[(i, j)] - mean[(i, j)];
            }
        }
        for (a, da) in d.iter().enumerate() {
            first[a] += da;
            let row = &mut second[a * nn..(a + 1) * nn];
            for (acc, db) in row.iter_mut().zip(&d) {
                *acc += da * db;
            }
        }
    }
    let runs = n_runs as f64;
    for v in first.iter_mut() {
        *v /= runs;
    }
    let mut empirical = vec![Complex64::new(0.0, 0.0); nn * nn];
    let mut theoretical = vec![Complex64::new(0.0, 0.0); nn * nn];
    let mut max_rel_dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let a = i * n + j;
                    let c = k * n + l;
                    let idx = a * nn + c;
                    let emp = (second[idx] / runs - first[a] * first[c]) * (runs / (runs - 1.0));
                    let theo = sigma_prime[(k, j)] * sigma_prime[(i, l)] * n_t as f64;
                    let scale = n_t as f64
                        * (sigma_prime[(i, i)].re
                            * sigma_prime[(j, j)].re
                            * sigma_prime[(k, k)].re
                            * sigma_prime[(l, l)].re)
                            .sqrt();
                    if scale > 0.0 {
                        max_rel_dev = max_rel_dev.max((emp - theo).norm() / scale);
                    }
                    empirical[idx] = emp;
                    theoretical[idx] = theo;
                }
            }
        }
    }
    Ok(WishartMomentReport {
        n,
        empirical,
        theoretical,
        max_rel_dev,
    })
}

/// Max relative deviation of [`wishart_second_moments`].
pub fn wishart_second_moment_check(
    sigma_prime: &CMatrix,
    n_t: usize,
    n_runs: usize,
    stream: &mut RngStream,
) -> Result<f64> {
    Ok(wishart_second_moments(sigma_prime, n_t, n_runs, stream)?.max_rel_dev)
}
