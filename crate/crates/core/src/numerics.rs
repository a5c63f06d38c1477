//! Scalar special functions, seeded complex Gaussian streams and PSD
//! factorization shared by the channel, link and estimation layers.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default truncation threshold for [`psd_factor`], relative to the largest eigenvalue.
pub const PSD_REL_TOL: f64 = 1e-12;

/// Switch point between the power series and the Hankel asymptotic expansion.
const J0_SERIES_LIMIT: f64 = 12.0;

/// Bessel function of the first kind, order zero.
///
/// Power series for `|x| <= 12`, Hankel asymptotic expansion beyond. The
/// absolute error stays below 1e-9 up to `|x| = 1000` (and well beyond).
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!(
            "bessel_j0 argument {x} is not finite"
        )));
    }
    let x = x.abs();
    if x <= J0_SERIES_LIMIT {
        Ok(j0_series(x))
    } else {
        Ok(j0_asymptotic(x))
    }
}

fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        let k = k as f64;
        term *= q / (k * k);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && k > 0.5 * x {
            break;
        }
    }
    sum
}

fn j0_asymptotic(x: f64) -> f64 {
    // a_k = prod_{i<=k} (-(2i-1)^2) / (k! 8^k); P takes the even terms, Q the odd.
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        term *= -(odd * odd) / (8.0 * k as f64 * x);
        let mag = term.abs();
        if mag >= prev || mag < 1e-17 {
            break;
        }
        prev = mag;
        // (-1)^{floor(k/2)} sign pattern of the Hankel P/Q series
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 0 {
            p += sign * term;
        } else {
            q += sign * term;
        }
    }
    let (s, c) = x.sin_cos();
    let cos_chi = (c + s) * std::f64::consts::FRAC_1_SQRT_2;
    let sin_chi = (s - c) * std::f64::consts::FRAC_1_SQRT_2;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// A deterministic random stream identified by `(master_seed, stream_id)`.
///
/// The master seed keys a ChaCha12 generator and the stream id selects its
/// stream counter, so distinct ids never overlap and parallel workers can
/// own their streams independently of scheduling.
#[derive(Clone, Debug)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// One circularly-symmetric complex normal draw with unit variance.
    pub fn cn(&mut self) -> Complex64 {
        let re: f64 = StandardNormal.sample(&mut self.rng);
        let im: f64 = StandardNormal.sample(&mut self.rng);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// `n` i.i.d. draws from CN(0, 1).
pub fn sample_cn(stream: &mut RngStream, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| stream.cn())
}

/// Largest `|M_ij - conj(M_ji)|`.
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

/// Factor a Hermitian PSD matrix as `B·Bᴴ` through its eigendecomposition.
///
/// Eigenvalues at or below `rel_tol·λ_max` are dropped, so the returned
/// factor is `n×r` with `r` the numerical rank. Eigenvalues below
/// `-rel_tol·λ_max` are rejected. Unlike Cholesky this tolerates the
/// numerically rank-deficient correlation matrices of slow fading.
pub fn psd_factor(m: &CMatrix, rel_tol: f64) -> Result<CMatrix> {
    if !m.is_square() {
        return Err(Error::Dimension {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    let n = m.nrows();
    let scale = max_abs(m);
    let defect = hermitian_defect(m);
    if defect > 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian(defect));
    }
    if scale == 0.0 {
        return Ok(CMatrix::zeros(n, 0));
    }
    let eig = SymmetricEigen::new(m.clone());
    let lambda_max = eig.eigenvalues.max();
    let tol = rel_tol * lambda_max.max(0.0);
    let lambda_min = eig.eigenvalues.min();
    if lambda_max <= 0.0 || lambda_min < -tol {
        return Err(Error::NotPsd {
            eigenvalue: lambda_min,
            tol,
        });
    }
    let keep: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i] > tol).collect();
    let mut b = CMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        let s = eig.eigenvalues[i].sqrt();
        b.set_column(c, &(eig.eigenvectors.column(i) * Complex64::new(s, 0.0)));
    }
    Ok(b)
}

/// Lift a real matrix into the complex type.
pub fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|v| Complex64::new(v, 0.0))
}

pub fn frobenius_sq(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum()
}
