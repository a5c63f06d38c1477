//! C ABI over `fcm-crlb`.
//!
//! Every fallible function returns an [`FcmStatus`] and writes results
//! through out-pointers. On failure a message is kept per thread and can
//! be read with [`fcm_last_error_message`]. Scenarios are opaque handles
//! created by [`fcm_scenario_new`] and released with [`fcm_scenario_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fcm_crlb::bounds::{lambda_max_fit, ls_covariance, pilot_omega, BoundReport, CrlbFactor};
use fcm_crlb::channel::{
    build_delay_transform, build_tcm, build_true_fcm, builtin_profile, BuiltinProfile, DopplerSpec,
    OfdmConfig, TimeCorrMatrix, TrueFcm,
};
use fcm_crlb::estimation::avg_mse;
use fcm_crlb::harness::experiments::estimate_once;
use fcm_crlb::link::{generate_qpsk_pilots, LsSource, ModelSampler, NoiseSpec, PilotSequence};
use fcm_crlb::numerics::bessel_j0;
use fcm_crlb::{CVector, Complex64, Error, RngStream};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FcmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Precondition = 4,
    Numerical = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FcmProfile {
    Eva = 0,
    Etu = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FcmComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for FcmComplex {
    fn from(z: Complex64) -> Self {
        Self { re: z.re, im: z.im }
    }
}

/// Scenario description. `pilots` may be null, in which case QPSK pilots
/// are drawn from `pilot_seed`; otherwise it must point to `n_tones`
/// unit-modulus symbols.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct FcmScenarioParams {
    /// One of the `FcmProfile` values.
    pub profile: u32,
    pub n_tones: usize,
    pub cp_len: usize,
    pub sample_period_s: f64,
    pub f_d_hz: f64,
    pub snr_db: f64,
    pub pilot_seed: u64,
    pub pilots: *const FcmComplex,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FcmBounds {
    pub omega: f64,
    pub tmse_lb: f64,
    pub avgmse_lb: f64,
    pub avgmse_lb_pilot_free: f64,
    pub avgmse_lb_insightful: f64,
    pub lambda_max: f64,
    pub c_fit: f64,
}

/// Opaque scenario handle.
pub struct FcmScenario {
    dop: DopplerSpec,
    tcm: TimeCorrMatrix,
    r_p: TrueFcm,
    noise: NoiseSpec,
    pilots: PilotSequence,
    omega: f64,
    sampler: ModelSampler,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> FcmStatus {
    match err {
        Error::Domain(_) => FcmStatus::Domain,
        Error::Precondition(_) => FcmStatus::Precondition,
        Error::NotPsd { .. } | Error::NotHermitian(_) => FcmStatus::Numerical,
        _ => FcmStatus::InvalidArgument,
    }
}

enum Failure {
    Status(FcmStatus, String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(FcmStatus::NullPointer, format!("{what} is null"))
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> FcmStatus {
    let (status, msg) = match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => return FcmStatus::Ok,
        Ok(Err(Failure::Status(s, m))) => (s, m),
        Ok(Err(Failure::Core(e))) => (status_of(&e), e.to_string()),
        Err(p) => {
            let m = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            (FcmStatus::Panic, format!("internal panic: {m}"))
        }
    };
    set_last_error(&msg);
    status
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn scenario<'a>(s: *const FcmScenario) -> Result<&'a FcmScenario, Failure> {
    s.as_ref().ok_or_else(|| null("scenario"))
}

fn build_scenario(p: &FcmScenarioParams) -> Result<FcmScenario, Failure> {
    let ofdm = OfdmConfig::new(p.n_tones, p.cp_len, p.sample_period_s)?;
    let which = match p.profile {
        x if x == FcmProfile::Eva as u32 => BuiltinProfile::Eva,
        x if x == FcmProfile::Etu as u32 => BuiltinProfile::Etu,
        other => {
            return Err(Failure::Status(
                FcmStatus::InvalidArgument,
                format!("unknown profile {other}"),
            ))
        }
    };
    let prof = builtin_profile(which, &ofdm)?;
    let dop = DopplerSpec::new(p.f_d_hz, &ofdm)?;
    let tcm = build_tcm(&ofdm, &dop)?;
    let r_p = build_true_fcm(&build_delay_transform(&ofdm, &prof), &prof)?;
    let noise = NoiseSpec::from_snr_db(p.snr_db)?;
    let pilots = if p.pilots.is_null() {
        generate_qpsk_pilots(&mut RngStream::new(p.pilot_seed, 0), p.n_tones)?
    } else {
        // SAFETY: caller guarantees n_tones readable symbols.
        let raw = unsafe { std::slice::from_raw_parts(p.pilots, p.n_tones) };
        PilotSequence::new(CVector::from_iterator(
            p.n_tones,
            raw.iter().map(|z| Complex64::new(z.re, z.im)),
        ))?
    };
    let omega = pilot_omega(&pilots, &tcm)?;
    let cov = ls_covariance(&r_p, &pilots, &tcm, noise.sigma_n2, 1)?;
    Ok(FcmScenario {
        dop,
        tcm,
        r_p,
        noise,
        omega,
        sampler: ModelSampler::new(&cov.sigma)?,
        pilots,
    })
}

/// Thread-local message of the last failed call on this thread; empty if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fcm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fcm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_bessel_j0(x: f64, out: *mut f64) -> FcmStatus {
    guard(|| write(out, bessel_j0(x)?, "out"))
}

/// `N·J0(2π·0.35·f_dT_s)`.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_lambda_max_fit(n: usize, fdts: f64, out: *mut f64) -> FcmStatus {
    guard(|| write(out, lambda_max_fit(n, fdts)?, "out"))
}

/// # Safety
/// `params` must be null or point to a valid struct whose `pilots` is null
/// or readable for `n_tones` elements; `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_scenario_new(
    params: *const FcmScenarioParams,
    out: *mut *mut FcmScenario,
) -> FcmStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        out.write(ptr::null_mut());
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let s = build_scenario(p)?;
        out.write(Box::into_raw(Box::new(s)));
        Ok(())
    })
}

/// Releases a scenario. Null is ignored.
///
/// # Safety
/// `s` must be null or a handle from [`fcm_scenario_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fcm_scenario_free(s: *mut FcmScenario) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// # Safety
/// `s` must be a live handle or null; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_scenario_n_tones(s: *const FcmScenario, out: *mut usize) -> FcmStatus {
    guard(|| write(out, scenario(s)?.pilots.len(), "out"))
}

/// `ω = x_pᴴΩx_p` of the scenario's pilots.
///
/// # Safety
/// `s` must be a live handle or null; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_scenario_omega(s: *const FcmScenario, out: *mut f64) -> FcmStatus {
    guard(|| write(out, scenario(s)?.omega, "out"))
}

/// Pilot symbols, `len` must be at least N.
///
/// # Safety
/// `s` must be a live handle or null; `out` null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_scenario_pilots(
    s: *const FcmScenario,
    out: *mut FcmComplex,
    len: usize,
) -> FcmStatus {
    guard(|| {
        let sc = scenario(s)?;
        copy_out(
            sc.pilots.symbols().iter().copied(),
            sc.pilots.len(),
            out,
            len,
        )
    })
}

/// # Safety
/// `s` must be a live handle or null; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_scenario_bounds(
    s: *const FcmScenario,
    n_t: usize,
    out: *mut FcmBounds,
) -> FcmStatus {
    guard(|| {
        let sc = scenario(s)?;
        let r = BoundReport::compute(&sc.r_p, &sc.pilots, &sc.tcm, &sc.dop, &sc.noise, n_t)?;
        write(
            out,
            FcmBounds {
                omega: r.omega,
                tmse_lb: r.tmse_lb,
                avgmse_lb: r.avgmse_lb,
                avgmse_lb_pilot_free: r.avgmse_lb_pilot_free,
                avgmse_lb_insightful: r.avgmse_lb_insightful,
                lambda_max: r.lambda_max,
                c_fit: r.c_fit,
            },
            "out",
        )
    })
}

/// Entry `((i·N+j), (k·N+l))` of the CRLB matrix.
///
/// # Safety
/// `s` must be a live handle or null; `out` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_scenario_crlb_entry(
    s: *const FcmScenario,
    n_t: usize,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    out: *mut FcmComplex,
) -> FcmStatus {
    guard(|| {
        let sc = scenario(s)?;
        let f = CrlbFactor::new(&sc.r_p, sc.omega, sc.noise.sigma_n2, n_t)?;
        write(out, f.crlb_entry(i, j, k, l)?.into(), "out")
    })
}

/// True FCM in row-major order; `len` must be at least N².
///
/// # Safety
/// `s` must be a live handle or null; `out` null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_scenario_true_fcm(
    s: *const FcmScenario,
    out: *mut FcmComplex,
    len: usize,
) -> FcmStatus {
    guard(|| {
        let sc = scenario(s)?;
        let n = sc.r_p.n();
        let m = sc.r_p.r_p.transpose();
        copy_out(m.iter().copied(), n * n, out, len)
    })
}

/// One MLE from `n_t` model-mode LS estimates drawn with `seed`. Writes
/// the estimate row-major into `out` (`len` ≥ N²) and its AvgMSE
/// against the true FCM into `avgmse` (may be null).
///
/// # Safety
/// `s` must be a live handle or null; `out` null or valid for `len`
/// writes; `avgmse` null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn fcm_scenario_run_mle(
    s: *const FcmScenario,
    n_t: usize,
    seed: u64,
    out: *mut FcmComplex,
    len: usize,
    avgmse: *mut f64,
) -> FcmStatus {
    guard(|| {
        let sc = scenario(s)?;
        if n_t == 0 {
            return Err(Failure::Status(
                FcmStatus::InvalidArgument,
                "n_t must be positive".into(),
            ));
        }
        let n = sc.pilots.len();
        check_buffer(out, n * n, len)?;
        let source = LsSource::Model(sc.sampler.clone());
        let est = estimate_once(
            &source,
            n_t,
            &sc.pilots,
            sc.omega,
            sc.noise.sigma_n2,
            &mut RngStream::new(seed, 0),
        )?;
        if !avgmse.is_null() {
            avgmse.write(avg_mse(&est, &sc.r_p)?);
        }
        copy_out(est.r_est.transpose().iter().copied(), n * n, out, len)
    })
}

fn check_buffer<T>(out: *mut T, need: usize, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    if len < need {
        return Err(Failure::Status(
            FcmStatus::BufferTooSmall,
            format!("buffer holds {len} elements, {need} needed"),
        ));
    }
    Ok(())
}

unsafe fn copy_out(
    values: impl Iterator<Item = Complex64>,
    need: usize,
    out: *mut FcmComplex,
    len: usize,
) -> Result<(), Failure> {
    check_buffer(out, need, len)?;
    for (idx, z) in values.take(need).enumerate() {
        out.add(idx).write(z.into());
    }
    Ok(())
}
