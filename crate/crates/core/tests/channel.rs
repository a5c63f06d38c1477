use std::f64::consts::PI;

use fcm_crlb::bounds::{lambda_max_fit, lambda_max_numeric};
use fcm_crlb::channel::*;
use fcm_crlb::{CMatrix, Complex64, Error, RngStream};

fn cfg(n: usize) -> OfdmConfig {
    OfdmConfig::new(n, 16, 0.8e-6).unwrap()
}

#[test]
fn omega_is_symmetric_toeplitz_of_j0() {
    let c = cfg(16);
    let dop = DopplerSpec::new(300.0, &c).unwrap();
    let tcm = build_tcm(&c, &dop).unwrap();
    for i in 0..16 {
        for j in 0..16 {
            let lag = i as f64 - j as f64;
            let want = fcm_crlb::numerics::bessel_j0(2.0 * PI * 300.0 * lag * 0.8e-6).unwrap();
            assert_eq!(tcm.omega[(i, j)], want);
        }
    }
    assert!((tcm.omega.trace() - 16.0).abs() < 1e-14);
}

#[test]
fn static_channel_omega_is_all_ones() {
    let c = cfg(8);
    let tcm = build_tcm(&c, &DopplerSpec::new(0.0, &c).unwrap()).unwrap();
    assert!(tcm.omega.iter().all(|&v| v == 1.0));
    assert!((lambda_max_numeric(&tcm) - 8.0).abs() < 1e-12);
}

#[test]
fn true_fcm_has_unit_diagonal_and_is_hermitian() {
    for p in [BuiltinProfile::Eva, BuiltinProfile::Etu] {
        let c = cfg(32);
        let prof = builtin_profile(p, &c).unwrap();
        let r = build_true_fcm(&build_delay_transform(&c, &prof), &prof).unwrap();
        for k in 0..32 {
            assert!((r.r_p[(k, k)] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(fcm_crlb::numerics::hermitian_defect(&r.r_p) < 1e-13);
    }
}

#[test]
fn custom_profile_from_toml() {
    let def = ProfileDef::from_toml_str(
        "name = \"two-ray\"\ndelays_ns = [0.0, 800.0]\npowers_db = [0.0, -3.0]\n",
    )
    .unwrap();
    let p = PathProfile::from_def(&def, &cfg(64)).unwrap();
    assert!((p.tau[1] - 1.0).abs() < 1e-12);
    assert!((p.sigma2[0] / p.sigma2[1] - 10f64.powf(0.3)).abs() < 1e-12);
    assert!(ProfileDef::from_toml_str(
        "name = \"x\"\ndelays_ns = [0.0]\npowers_db = [0.0]\nextra = 1\n"
    )
    .is_err());
}

#[test]
fn unknown_profile_name() {
    assert!(matches!(
        "XYZ".parse::<BuiltinProfile>(),
        Err(Error::UnknownProfile(_))
    ));
    assert_eq!(
        "eva".parse::<BuiltinProfile>().unwrap(),
        BuiltinProfile::Eva
    );
}

#[test]
fn cir_covariance_matches_omega_kron_d() {
    let c = cfg(8);
    let prof = builtin_profile(BuiltinProfile::Etu, &c).unwrap();
    let dop = DopplerSpec::from_normalized(0.2, &c).unwrap();
    let tcm = build_tcm(&c, &dop).unwrap();
    let sampler = CirSampler::new(&tcm, &prof).unwrap();
    let mut s = RngStream::new(21, 0);
    let l = prof.n_paths();
    let runs = 20_000;
    let dim = l * 8;
    let mut cov = CMatrix::zeros(dim, dim);
    for _ in 0..runs {
        let h = sampler.sample(&mut s).h_t;
        // column-major vec: path index fastest, matching Ω⊗D
        let v = fcm_crlb::CVector::from_iterator(dim, h.iter().copied());
        cov.gerc(Complex64::new(1.0, 0.0), &v, &v, Complex64::new(1.0, 0.0));
    }
    cov /= Complex64::new(runs as f64, 0.0);
    let mut worst = 0.0f64;
    for m1 in 0..8 {
        for m2 in 0..8 {
            for l1 in 0..l {
                for l2 in 0..l {
                    let want = if l1 == l2 {
                        tcm.omega[(m1, m2)] * prof.sigma2[l1]
                    } else {
                        0.0
                    };
                    let got = cov[(m1 * l + l1, m2 * l + l2)];
                    worst = worst.max((got - want).norm());
                }
            }
        }
    }
    assert!(worst < 0.02, "max covariance error {worst}");
}

fn literal_transfer(cir: &CirMatrix, prof: &PathProfile, n: usize) -> CMatrix {
    let mut h = CMatrix::zeros(n, n);
    for k in 0..n {
        for nu in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for m in 0..n {
                for l in 0..prof.n_paths() {
                    let phase =
                        -2.0 * PI * (nu as f64 * m as f64 + k as f64 * prof.tau[l]) / n as f64;
                    acc += cir.h_t[(l, m)] * Complex64::from_polar(1.0, phase);
                }
            }
            h[((k + nu) % n, k)] = acc / n as f64;
        }
    }
    h
}

#[test]
fn transfer_matrix_matches_double_sum() {
    let mut s = RngStream::new(4, 0);
    for n in 2..=8 {
        for fdts in [0.0, 0.05, 0.3] {
            let c = cfg(n);
            let prof = builtin_profile(BuiltinProfile::Eva, &c).unwrap();
            let tcm = build_tcm(&c, &DopplerSpec::from_normalized(fdts, &c).unwrap()).unwrap();
            let cir = sample_cir(&mut s, &tcm, &prof).unwrap();
            let hf = build_transfer_matrix(&cir, &build_delay_transform(&c, &prof)).unwrap();
            let err = (&hf.h_f - literal_transfer(&cir, &prof, n)).norm();
            assert!(err < 1e-10, "N={n} fdts={fdts} err={err:e}");
        }
    }
}

#[test]
fn static_channel_has_no_ici() {
    let c = cfg(16);
    let prof = builtin_profile(BuiltinProfile::Eva, &c).unwrap();
    let tcm = build_tcm(&c, &DopplerSpec::new(0.0, &c).unwrap()).unwrap();
    let ft = build_delay_transform(&c, &prof);
    let cir = sample_cir(&mut RngStream::new(8, 0), &tcm, &prof).unwrap();
    let hf = build_transfer_matrix(&cir, &ft).unwrap();
    let (diag, off) = transfer_energies(&hf);
    assert!(off <= 1e-20 * diag);
    let g = &ft.f_tau * cir.h_t.column(0);
    for k in 0..16 {
        assert!((hf.h_f[(k, k)] - g[k]).norm() < 1e-12);
    }
}

#[test]
fn sir_falls_with_doppler() {
    let c = cfg(64);
    let prof = builtin_profile(BuiltinProfile::Eva, &c).unwrap();
    let sir = |fdts: f64| {
        let dop = DopplerSpec::from_normalized(fdts, &c).unwrap();
        measure_sir(&c, &prof, &dop, 200, &mut RngStream::new(3, 0)).unwrap()
    };
    assert_eq!(sir(0.0), f64::INFINITY);
    let (a, b, d) = (sir(0.02), sir(0.1), sir(0.2));
    assert!(a > b && b > d, "{a} {b} {d}");
    let dop = DopplerSpec::from_normalized(0.1, &c).unwrap();
    assert!(measure_sir(&c, &prof, &dop, 99, &mut RngStream::new(3, 0)).is_err());
}

#[test]
fn profile_must_fit_cyclic_prefix() {
    let c = OfdmConfig::new(64, 2, 0.8e-6).unwrap();
    assert!(matches!(
        builtin_profile(BuiltinProfile::Etu, &c),
        Err(Error::Precondition(_))
    ));
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration.
fn power_iteration(m: &nalgebra::DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut v = nalgebra::DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w = m * &v;
        let next = v.dot(&w);
        v = &w / w.norm();
        if (next - lambda).abs() < 1e-15 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda
}

#[test]
fn lambda_max_matches_power_iteration() {
    let c = cfg(128);
    let tcm = build_tcm(&c, &DopplerSpec::from_normalized(0.1, &c).unwrap()).unwrap();
    let numeric = lambda_max_numeric(&tcm);
    let oracle = power_iteration(&tcm.omega);
    assert!(
        (numeric - oracle).abs() < 1e-8 * oracle,
        "{numeric} vs {oracle}"
    );
    assert!(numeric <= 128.0 + 1e-9);
    let fit = lambda_max_fit(128, 0.1).unwrap();
    assert!((fit - numeric).abs() / numeric < 0.05);
}

#[test]
fn lambda_fit_is_linear_in_n() {
    assert_eq!(lambda_max_fit(64, 0.0).unwrap(), 64.0);
    let a = lambda_max_fit(128, 0.2).unwrap();
    let b = lambda_max_fit(256, 0.2).unwrap();
    assert!((b - 2.0 * a).abs() < 1e-12);
}
