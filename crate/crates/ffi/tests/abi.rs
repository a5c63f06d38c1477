use std::ffi::CStr;
use std::ptr;

use fcm_crlb_ffi::*;

fn params(n: usize) -> FcmScenarioParams {
    FcmScenarioParams {
        profile: FcmProfile::Eva as u32,
        n_tones: n,
        cp_len: 16,
        sample_period_s: 0.8e-6,
        f_d_hz: 200.0,
        snr_db: 20.0,
        pilot_seed: 2009,
        pilots: ptr::null(),
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(fcm_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

fn new_scenario(p: &FcmScenarioParams) -> *mut FcmScenario {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { fcm_scenario_new(p, &mut s) },
        FcmStatus::Ok,
        "{}",
        last_error()
    );
    s
}

#[test]
fn scalar_functions() {
    let mut v = 0.0;
    assert_eq!(unsafe { fcm_bessel_j0(10.0, &mut v) }, FcmStatus::Ok);
    assert!((v + 0.245_935_764_451_348_3).abs() < 1e-12);
    assert_eq!(
        unsafe { fcm_bessel_j0(f64::NAN, &mut v) },
        FcmStatus::Domain
    );
    assert!(last_error().contains("not finite"));
    assert_eq!(
        unsafe { fcm_lambda_max_fit(128, 0.0, &mut v) },
        FcmStatus::Ok
    );
    assert_eq!(v, 128.0);
    assert_eq!(
        unsafe { fcm_bessel_j0(1.0, ptr::null_mut()) },
        FcmStatus::NullPointer
    );
    let version = unsafe { CStr::from_ptr(fcm_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn scenario_bounds_and_entries() {
    let p = params(16);
    let s = new_scenario(&p);
    let mut n = 0usize;
    let mut omega = 0.0;
    let mut b = FcmBounds::default();
    unsafe {
        assert_eq!(fcm_scenario_n_tones(s, &mut n), FcmStatus::Ok);
        assert_eq!(fcm_scenario_omega(s, &mut omega), FcmStatus::Ok);
        assert_eq!(fcm_scenario_bounds(s, 200, &mut b), FcmStatus::Ok);
    }
    assert_eq!(n, 16);
    assert_eq!(b.omega, omega);
    assert!(b.avgmse_lb >= b.avgmse_lb_pilot_free);
    assert_eq!(b.c_fit, 0.35);
    assert!((b.tmse_lb / 256.0 - b.avgmse_lb).abs() < 1e-15);

    let mut diag = 0.0;
    for i in 0..16 {
        for j in 0..16 {
            let mut e = FcmComplex::default();
            assert_eq!(
                unsafe { fcm_scenario_crlb_entry(s, 200, i, j, i, j, &mut e) },
                FcmStatus::Ok
            );
            diag += e.re;
        }
    }
    assert!((diag - b.tmse_lb).abs() < 1e-10 * b.tmse_lb);
    let mut e = FcmComplex::default();
    assert_eq!(
        unsafe { fcm_scenario_crlb_entry(s, 200, 16, 0, 0, 0, &mut e) },
        FcmStatus::InvalidArgument
    );
    unsafe { fcm_scenario_free(s) };
}

#[test]
fn explicit_pilots_and_mle() {
    let n = 8;
    let ones = vec![FcmComplex { re: 1.0, im: 0.0 }; n];
    let mut p = params(n);
    p.pilots = ones.as_ptr();
    let s = new_scenario(&p);
    let mut got = vec![FcmComplex::default(); n];
    let mut truth = vec![FcmComplex::default(); n * n];
    let mut est = vec![FcmComplex::default(); n * n];
    let mut mse = 0.0;
    unsafe {
        assert_eq!(fcm_scenario_pilots(s, got.as_mut_ptr(), n), FcmStatus::Ok);
        assert_eq!(
            fcm_scenario_true_fcm(s, truth.as_mut_ptr(), n * n),
            FcmStatus::Ok
        );
        assert_eq!(
            fcm_scenario_run_mle(s, 500, 1, est.as_mut_ptr(), n * n, &mut mse),
            FcmStatus::Ok
        );
        assert_eq!(
            fcm_scenario_run_mle(s, 500, 1, est.as_mut_ptr(), n * n - 1, ptr::null_mut()),
            FcmStatus::BufferTooSmall
        );
    }
    assert_eq!(got, ones);
    for k in 0..n {
        assert!((truth[k * n + k].re - 1.0).abs() < 1e-12);
    }
    // row-major: (0,1) is the conjugate of (1,0)
    assert!((truth[1].re - truth[n].re).abs() < 1e-15 && (truth[1].im + truth[n].im).abs() < 1e-15);
    assert!(mse > 0.0 && mse < 0.01, "{mse}");
    unsafe { fcm_scenario_free(s) };
}

#[test]
fn invalid_inputs_report_errors() {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { fcm_scenario_new(ptr::null(), &mut s) },
        FcmStatus::NullPointer
    );
    assert!(s.is_null());

    let mut p = params(8);
    p.profile = 9;
    assert_eq!(
        unsafe { fcm_scenario_new(&p, &mut s) },
        FcmStatus::InvalidArgument
    );
    assert!(last_error().contains("unknown profile"));

    let mut p = params(8);
    p.cp_len = 1;
    assert_eq!(
        unsafe { fcm_scenario_new(&p, &mut s) },
        FcmStatus::Precondition
    );

    let bad = [FcmComplex { re: 2.0, im: 0.0 }; 8];
    let mut p = params(8);
    p.pilots = bad.as_ptr();
    assert_eq!(
        unsafe { fcm_scenario_new(&p, &mut s) },
        FcmStatus::InvalidArgument
    );

    let mut w = 0.0;
    assert_eq!(
        unsafe { fcm_scenario_omega(ptr::null(), &mut w) },
        FcmStatus::NullPointer
    );
    unsafe { fcm_scenario_free(ptr::null_mut()) };
}

#[test]
fn header_is_generated() {
    let header =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/fcm_crlb.h"))
            .unwrap();
    for name in [
        "FCM_STATUS_OK",
        "FCM_PROFILE_ETU",
        "typedef struct FcmScenario FcmScenario;",
        "fcm_scenario_new",
        "fcm_scenario_free",
        "fcm_scenario_run_mle",
        "fcm_last_error_message",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
