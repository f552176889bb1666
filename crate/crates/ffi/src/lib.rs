//! C ABI over the `secbeam` designer.
//!
//! Problems and solutions are opaque heap handles owned by the caller and
//! released with the matching `*_free` function. Every entry point returns a
//! [`SecbeamStatus`]; on failure a message is kept per thread and can be read
//! with [`secbeam_last_error`]. Complex data crosses the boundary as
//! interleaved `(re, im)` doubles, matrices in row-major order.

use secbeam::beamformer::{BeamformerSolution, PowerMinOptions, SolveError};
use secbeam::channel::{substream, RandomScenario, ScenarioKind, ScenarioSpec, SystemConfig};
use secbeam::cli::{Interleaved, LAYOUT};
use secbeam::montecarlo::empirical_outage;
use secbeam::rate::{max_secrecy_rate, solve_powermin, RateOptions};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecbeamStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// No beamformer meets the request.
    Infeasible = 3,
    Solver = 4,
    /// The problem handle has no channel model yet.
    NoScenario = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SecbeamScenario {
    StatisticalEcsi = 0,
    ImperfectEcsi = 1,
    ImperfectBoth = 2,
}

impl From<SecbeamScenario> for ScenarioKind {
    fn from(s: SecbeamScenario) -> Self {
        match s {
            SecbeamScenario::StatisticalEcsi => ScenarioKind::StatisticalEcsi,
            SecbeamScenario::ImperfectEcsi => ScenarioKind::ImperfectEcsi,
            SecbeamScenario::ImperfectBoth => ScenarioKind::ImperfectBoth,
        }
    }
}

/// System parameters in linear units. `noise_eves` and `outage` point to
/// `n_eves` doubles each.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SecbeamSystem {
    pub n_tx: usize,
    pub n_eves: usize,
    pub noise_bob: f64,
    pub noise_eves: *const f64,
    pub power: f64,
    pub outage: *const f64,
}

/// Opaque system configuration plus channel model.
pub struct SecbeamProblem {
    cfg: SystemConfig,
    spec: Option<ScenarioSpec>,
}

/// Opaque designed beamformer.
pub struct SecbeamSolution {
    rate: f64,
    sol: BeamformerSolution,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SecbeamStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(code: SecbeamStatus, msg: impl Into<String>) -> FfiResult<T> {
    Err(Failure(code, msg.into()))
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SecbeamStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SecbeamStatus::Ok,
        Ok(Err(Failure(code, msg))) => {
            set_error(&msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            SecbeamStatus::Panic
        }
    }
}

fn solve_failure(e: SolveError) -> Failure {
    let code = if e == SolveError::Infeasible { SecbeamStatus::Infeasible } else { SecbeamStatus::Solver };
    Failure(code, e.to_string())
}

/// # Safety
/// `p` must be null or valid for `len` reads.
unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(SecbeamStatus::NullPointer, format!("{what} is null"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| Failure(SecbeamStatus::NullPointer, format!("{what} is null")))
}

fn interleaved(data: &[f64]) -> Interleaved {
    Interleaved { layout: LAYOUT.into(), data: data.to_vec() }
}

fn invalid(e: impl ToString) -> Failure {
    Failure(SecbeamStatus::InvalidArgument, e.to_string())
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn secbeam_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// NUL-terminated library version.
#[no_mangle]
pub extern "C" fn secbeam_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `sys` must point to a valid [`SecbeamSystem`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn secbeam_problem_new(
    sys: *const SecbeamSystem,
    out: *mut *mut SecbeamProblem,
) -> SecbeamStatus {
    guard(|| {
        if out.is_null() {
            return fail(SecbeamStatus::NullPointer, "out is null");
        }
        let s = handle(sys, "system")?;
        let cfg = SystemConfig {
            n_tx: s.n_tx,
            noise_bob: s.noise_bob,
            noise_eves: slice(s.noise_eves, s.n_eves, "noise_eves")?.to_vec(),
            power_budget: s.power,
            outage_probs: slice(s.outage, s.n_eves, "outage")?.to_vec(),
            n_eves: s.n_eves,
        };
        cfg.validate().map_err(invalid)?;
        *out = Box::into_raw(Box::new(SecbeamProblem { cfg, spec: None }));
        Ok(())
    })
}

/// # Safety
/// `p` must be null or a handle from [`secbeam_problem_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn secbeam_problem_free(p: *mut SecbeamProblem) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn set_spec(
    p: *mut SecbeamProblem,
    build: impl FnOnce(usize, usize) -> FfiResult<ScenarioSpec>,
) -> SecbeamStatus {
    guard(|| {
        let prob = p.as_mut().ok_or_else(|| Failure(SecbeamStatus::NullPointer, "problem is null".into()))?;
        let spec = build(prob.cfg.n_tx, prob.cfg.n_eves)?;
        prob.spec = Some(secbeam::channel::validate(&prob.cfg, &spec).map_err(invalid)?);
        Ok(())
    })
}

unsafe fn vectors(p: *const f64, n: usize, k: usize, what: &str) -> FfiResult<Vec<secbeam::hermitian::CVector>> {
    let data = slice(p, 2 * n * k, what)?;
    data.chunks(2 * n).map(|c| interleaved(c).to_vector(n, what).map_err(invalid)).collect()
}

unsafe fn matrices(p: *const f64, n: usize, k: usize, what: &str) -> FfiResult<Vec<secbeam::hermitian::HMatrix>> {
    let data = slice(p, 2 * n * n * k, what)?;
    data.chunks(2 * n * n).map(|c| interleaved(c).to_hermitian(n, what).map_err(invalid)).collect()
}

/// Exact `h` (`2 n_tx` doubles) and one covariance per Eve
/// (`n_eves * 2 n_tx^2` doubles).
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn secbeam_problem_set_statistical(
    p: *mut SecbeamProblem,
    h: *const f64,
    eve_covs: *const f64,
) -> SecbeamStatus {
    set_spec(p, |n, k| {
        let h = vectors(h, n, 1, "h")?.remove(0);
        Ok(ScenarioSpec::StatisticalEcsi { h, eve_covs: matrices(eve_covs, n, k, "eve_covs")? })
    })
}

/// Exact `h`, Eve estimates `g_hat` (`n_eves * 2 n_tx` doubles) and error
/// covariances.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn secbeam_problem_set_imperfect_ecsi(
    p: *mut SecbeamProblem,
    h: *const f64,
    g_hat: *const f64,
    eve_err_covs: *const f64,
) -> SecbeamStatus {
    set_spec(p, |n, k| {
        Ok(ScenarioSpec::ImperfectEcsi {
            h: vectors(h, n, 1, "h")?.remove(0),
            g_hat: vectors(g_hat, n, k, "g_hat")?,
            eve_err_covs: matrices(eve_err_covs, n, k, "eve_err_covs")?,
        })
    })
}

/// Estimated `h_hat` with error covariance `bob_err_cov` (`2 n_tx^2`
/// doubles) plus Eves as in [`secbeam_problem_set_imperfect_ecsi`].
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn secbeam_problem_set_imperfect_both(
    p: *mut SecbeamProblem,
    h_hat: *const f64,
    bob_err_cov: *const f64,
    g_hat: *const f64,
    eve_err_covs: *const f64,
) -> SecbeamStatus {
    set_spec(p, |n, k| {
        Ok(ScenarioSpec::ImperfectBoth {
            h_hat: vectors(h_hat, n, 1, "h_hat")?.remove(0),
            bob_err_cov: matrices(bob_err_cov, n, 1, "bob_err_cov")?.remove(0),
            g_hat: vectors(g_hat, n, k, "g_hat")?,
            eve_err_covs: matrices(eve_err_covs, n, k, "eve_err_covs")?,
        })
    })
}

/// Channels drawn from the built-in random instance family.
///
/// # Safety
/// `p` must be a live problem handle.
#[no_mangle]
pub unsafe extern "C" fn secbeam_problem_set_random(
    p: *mut SecbeamProblem,
    kind: SecbeamScenario,
    eps_b: f64,
    eps_e: f64,
    seed: u64,
) -> SecbeamStatus {
    set_spec(p, |n, k| {
        if !(eps_b >= 0.0 && eps_e >= 0.0) {
            return fail(SecbeamStatus::InvalidArgument, "variances must be nonnegative");
        }
        Ok(RandomScenario { kind: kind.into(), eps_b, eps_e }.draw(n, k, &mut substream(seed, &[], 0)))
    })
}

unsafe fn ready<'a>(p: *const SecbeamProblem) -> FfiResult<(&'a SystemConfig, &'a ScenarioSpec)> {
    let prob = handle(p, "problem")?;
    match &prob.spec {
        Some(s) => Ok((&prob.cfg, s)),
        None => fail(SecbeamStatus::NoScenario, "no channel model has been set"),
    }
}

unsafe fn emit(out: *mut *mut SecbeamSolution, s: SecbeamSolution) -> FfiResult<()> {
    if out.is_null() {
        return fail(SecbeamStatus::NullPointer, "out is null");
    }
    *out = Box::into_raw(Box::new(s));
    Ok(())
}

/// Minimum-power beamformer for secrecy rate `rate`.
///
/// # Safety
/// `p` must be a live problem handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn secbeam_powermin(
    p: *const SecbeamProblem,
    rate: f64,
    seed: u64,
    out: *mut *mut SecbeamSolution,
) -> SecbeamStatus {
    guard(|| {
        let (cfg, spec) = ready(p)?;
        let opts = PowerMinOptions { seed, ..PowerMinOptions::default() };
        let sol = solve_powermin(cfg, spec, rate, &opts).map_err(solve_failure)?;
        emit(out, SecbeamSolution { rate, sol })
    })
}

/// Largest secrecy rate within the power budget, to tolerance `tol`
/// (0 selects the default). A zero rate is reported as `Infeasible`.
///
/// # Safety
/// `p` must be a live problem handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn secbeam_maxrate(
    p: *const SecbeamProblem,
    tol: f64,
    seed: u64,
    out: *mut *mut SecbeamSolution,
) -> SecbeamStatus {
    guard(|| {
        let (cfg, spec) = ready(p)?;
        let mut ropts = RateOptions::default();
        if tol != 0.0 {
            ropts.tol = tol;
        }
        let opts = PowerMinOptions { seed, ..PowerMinOptions::default() };
        let res = max_secrecy_rate(cfg, spec, &ropts, &opts).map_err(solve_failure)?;
        if res.rate_opt <= 0.0 {
            return fail(SecbeamStatus::Infeasible, "no positive secrecy rate is attainable");
        }
        emit(out, SecbeamSolution { rate: res.rate_opt, sol: res.solution })
    })
}

/// # Safety
/// `s` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn secbeam_solution_free(s: *mut SecbeamSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Target rate of the design; NaN for a null handle.
///
/// # Safety
/// `s` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn secbeam_solution_rate(s: *const SecbeamSolution) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.rate)
}

/// Transmit power `||w||^2`; NaN for a null handle.
///
/// # Safety
/// `s` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn secbeam_solution_power(s: *const SecbeamSolution) -> f64 {
    s.as_ref().map_or(f64::NAN, |s| s.sol.power)
}

/// Length of `w`.
///
/// # Safety
/// `s` must be null or a live solution handle.
#[no_mangle]
pub unsafe extern "C" fn secbeam_solution_len(s: *const SecbeamSolution) -> usize {
    s.as_ref().map_or(0, |s| s.sol.w.len())
}

/// Copies `w` into `buf` as `2 * len` interleaved doubles.
///
/// # Safety
/// `buf` must be valid for `cap` writes.
#[no_mangle]
pub unsafe extern "C" fn secbeam_solution_beamformer(
    s: *const SecbeamSolution,
    buf: *mut f64,
    cap: usize,
) -> SecbeamStatus {
    guard(|| {
        let s = handle(s, "solution")?;
        let data = Interleaved::from_vector(&s.sol.w).data;
        if buf.is_null() {
            return fail(SecbeamStatus::NullPointer, "buffer is null");
        }
        if cap < data.len() {
            return fail(SecbeamStatus::BufferTooSmall, format!("need {} doubles, got {cap}", data.len()));
        }
        ptr::copy_nonoverlapping(data.as_ptr(), buf, data.len());
        Ok(())
    })
}

/// Monte Carlo outage of `w` (`2 n_tx` doubles) at `rate` over `samples`
/// channel draws. Writes one outage per Eve to `per_eve` (`n_eves` doubles)
/// and the worst-Eve secrecy outage to `worst`.
///
/// # Safety
/// Pointers must be valid for the stated lengths.
#[no_mangle]
pub unsafe extern "C" fn secbeam_verify(
    p: *const SecbeamProblem,
    w: *const f64,
    rate: f64,
    samples: usize,
    seed: u64,
    per_eve: *mut f64,
    worst: *mut f64,
) -> SecbeamStatus {
    guard(|| {
        let (cfg, spec) = ready(p)?;
        let w = vectors(w, cfg.n_tx, 1, "w")?.remove(0);
        if per_eve.is_null() || worst.is_null() {
            return fail(SecbeamStatus::NullPointer, "output pointer is null");
        }
        let rep = empirical_outage(&w, cfg, spec, rate, samples, seed).map_err(invalid)?;
        ptr::copy_nonoverlapping(rep.per_eve_outage.as_ptr(), per_eve, rep.per_eve_outage.len());
        *worst = rep.outage;
        Ok(())
    })
}
