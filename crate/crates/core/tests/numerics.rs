#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

use fcm_crlb::numerics::{bessel_j0, hermitian_defect, psd_factor, PSD_REL_TOL};
use fcm_crlb::{CMatrix, Complex64, RngStream};
use proptest::prelude::*;

// Reference values from mpmath.besselj(0, x) at 30 digits.
const J0_REFERENCE: [(f64, f64); 10] = [
    (1.0, 0.76519768655796655145),
    (2.5, -0.048383776468197996327),
    (7.3, 0.28821694763501439904),
    (10.0, -0.2459357644513483352),
    (12.0, 0.047689310796833536624),
    (15.5, -0.10923065090005016848),
    (41.0, -0.10074578912447979774),
    (100.0, 0.019985850304223122424),
    (250.25, -0.014544124120026991067),
    (1000.0, 0.024786686152420175921),
];

/// `J0(x) = (1/2π)∫cos(x·sin θ)dθ`; the trapezoid rule on a periodic
/// integrand converges geometrically once the node count exceeds x.
fn j0_quadrature(x: f64) -> f64 {
    let m = 512;
    (0..m)
        .map(|k| (x * (2.0 * PI * k as f64 / m as f64).sin()).cos())
        .sum::<f64>()
        / m as f64
}

#[test]
fn j0_matches_reference_values() {
    for (x, want) in J0_REFERENCE {
        let got = bessel_j0(x).unwrap();
        assert!((got - want).abs() < 1e-12, "J0({x}) = {got}, want {want}");
        assert_eq!(bessel_j0(-x).unwrap(), got);
    }
}

#[test]
fn j0_matches_quadrature_on_dense_grid() {
    let mut worst = 0.0f64;
    for i in 0..=10_000 {
        let x = 100.0 * i as f64 / 10_000.0;
        worst = worst.max((bessel_j0(x).unwrap() - j0_quadrature(x)).abs());
    }
    assert!(worst < 1e-9, "max deviation {worst:e}");
}

#[test]
fn j0_vanishes_at_first_zero() {
    let z = 2.404825557695773;
    // Maclaurin series, 60 terms.
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        term *= -(z * z / 4.0) / (k * k) as f64;
        sum += term;
    }
    assert!(sum.abs() < 1e-14);
    assert!(bessel_j0(z).unwrap().abs() < 1e-14);
    assert_eq!(bessel_j0(0.0).unwrap(), 1.0);
}

#[test]
fn j0_rejects_non_finite() {
    assert!(bessel_j0(f64::NAN).is_err());
    assert!(bessel_j0(f64::INFINITY).is_err());
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let a: Vec<Complex64> = (0..8)
        .map({
            let mut s = RngStream::new(11, 3);
            move |_| s.cn()
        })
        .collect();
    let b: Vec<Complex64> = (0..8)
        .map({
            let mut s = RngStream::new(11, 3);
            move |_| s.cn()
        })
        .collect();
    let c: Vec<Complex64> = (0..8)
        .map({
            let mut s = RngStream::new(11, 4);
            move |_| s.cn()
        })
        .collect();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn cn_draws_have_unit_variance() {
    let mut s = RngStream::new(5, 0);
    let n = 200_000;
    let mut power = 0.0;
    let mut pseudo = Complex64::new(0.0, 0.0);
    for _ in 0..n {
        let z = s.cn();
        power += z.norm_sqr();
        pseudo += z * z;
    }
    assert!((power / n as f64 - 1.0).abs() < 0.01);
    assert!((pseudo / n as f64).norm() < 0.01);
}

fn psd_from_seed(seed: u64, n: usize, rank: usize) -> CMatrix {
    let mut s = RngStream::new(seed, 0);
    let a = CMatrix::from_fn(n, rank, |_, _| s.cn());
    &a * a.adjoint()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn psd_factor_reconstructs(seed in any::<u64>(), n in 1usize..=32, rank_frac in 0.1f64..=1.0) {
        let rank = ((n as f64 * rank_frac).ceil() as usize).max(1);
        let m = psd_from_seed(seed, n, rank);
        let b = psd_factor(&m, PSD_REL_TOL).unwrap();
        let err = (&b * b.adjoint() - &m).norm() / m.norm();
        prop_assert!(err <= 1e-10, "relative error {err:e}");
    }
}

#[test]
fn psd_factor_rejects_indefinite_and_non_hermitian() {
    let mut m = CMatrix::identity(3, 3);
    m[(2, 2)] = Complex64::new(-0.5, 0.0);
    assert!(psd_factor(&m, PSD_REL_TOL).is_err());
    let mut h = CMatrix::identity(3, 3);
    h[(0, 1)] = Complex64::new(0.3, 0.0);
    assert!(hermitian_defect(&h) > 0.0);
    assert!(psd_factor(&h, PSD_REL_TOL).is_err());
}
