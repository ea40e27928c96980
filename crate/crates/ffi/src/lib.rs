//! C ABI over the `impsel` library.
//!
//! Profiles and mechanisms are opaque heap handles created by `*_load`,
//! `*_parse` or a generator and released with the matching `*_free`. Every
//! fallible call returns an [`ImpselStatus`]; on failure a description is
//! available from [`impsel_last_error_message`] on the same thread. Panics
//! never cross the boundary and surface as `IMPSEL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use impsel::exact::{self, format_rational};
use impsel::generators;
use impsel::montecarlo::{self, GapReport, TrialPlan};
use impsel::rng::RandomnessSource;
use impsel::{Error, MechanismSpec, Model, NominationProfile};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpselStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    ModelViolation = 5,
    EnumerationTooLarge = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImpselModel {
    Single = 0,
    Multi = 1,
}

/// Opaque nomination profile.
pub struct ImpselProfile {
    inner: NominationProfile,
}

/// Opaque mechanism spec.
pub struct ImpselMechanism {
    inner: MechanismSpec,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ImpselGapReport {
    pub n: usize,
    pub k: usize,
    pub delta: usize,
    pub mean_degree: f64,
    pub gap: f64,
    pub std_err: f64,
    pub ci95_half_width: f64,
    pub no_winner_rate: f64,
    pub trials: u64,
    pub master_seed: u64,
    pub exact: bool,
}

impl From<&GapReport> for ImpselGapReport {
    fn from(r: &GapReport) -> Self {
        Self {
            n: r.n,
            k: r.k,
            delta: r.delta,
            mean_degree: r.mean_degree,
            gap: r.gap,
            std_err: r.std_err,
            ci95_half_width: r.ci95_half_width,
            no_winner_rate: r.no_winner_rate,
            trials: r.trials,
            master_seed: r.master_seed,
            exact: r.exact,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(ImpselStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io(_) => ImpselStatus::Io,
            Error::Parse { .. } => ImpselStatus::Parse,
            Error::ModelViolation(_) | Error::ModelMismatch { .. } | Error::SelfLoop(_) | Error::DuplicateEdge(..) => {
                ImpselStatus::ModelViolation
            }
            Error::EnumerationTooLarge { .. } => ImpselStatus::EnumerationTooLarge,
            _ => ImpselStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(ImpselStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ImpselStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            ImpselStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            ImpselStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(ImpselStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn profile_arg<'a>(p: *const ImpselProfile) -> Result<&'a NominationProfile, Failure> {
    p.as_ref().map(|h| &h.inner).ok_or_else(|| null("profile"))
}

unsafe fn mechanism_arg<'a>(m: *const ImpselMechanism) -> Result<&'a MechanismSpec, Failure> {
    m.as_ref().map(|h| &h.inner).ok_or_else(|| null("mechanism"))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_profile(out: *mut *mut ImpselProfile, p: NominationProfile) -> Result<(), Failure> {
    put(out, Box::into_raw(Box::new(ImpselProfile { inner: p })))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the
/// same thread.
#[no_mangle]
pub extern "C" fn impsel_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Loads a profile file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn impsel_profile_load(path: *const c_char, out: *mut *mut ImpselProfile) -> ImpselStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        put_profile(out, impsel::io::load_profile(path)?)
    })
}

/// Writes a profile file.
///
/// # Safety
/// `profile` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn impsel_profile_save(profile: *const ImpselProfile, path: *const c_char) -> ImpselStatus {
    guard(|| {
        let p = profile_arg(profile)?;
        let path = str_arg(path, "path")?;
        Ok(impsel::io::save_profile(p, path)?)
    })
}

/// Builds a profile on `n` vertices from `m` edges `from[i] -> to[i]`.
///
/// # Safety
/// `from` and `to` must point to `m` readable values each (they may be null
/// when `m == 0`); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_profile_from_edges(
    n: usize,
    model: ImpselModel,
    from: *const usize,
    to: *const usize,
    m: usize,
    out: *mut *mut ImpselProfile,
) -> ImpselStatus {
    guard(|| {
        if m > 0 && (from.is_null() || to.is_null()) {
            return Err(null("edge array"));
        }
        let (from, to) = if m == 0 {
            (&[][..], &[][..])
        } else {
            (std::slice::from_raw_parts(from, m), std::slice::from_raw_parts(to, m))
        };
        let mut sets = vec![Vec::new(); n];
        for (&u, &v) in from.iter().zip(to) {
            if u >= n {
                return Err(Error::VertexOutOfRange { vertex: u, n }.into());
            }
            if sets[u].contains(&v) {
                return Err(Error::DuplicateEdge(u, v).into());
            }
            sets[u].push(v);
        }
        let model = match model {
            ImpselModel::Single => Model::Single,
            ImpselModel::Multi => Model::Multi,
        };
        put_profile(out, NominationProfile::new(model, sets)?)
    })
}

/// Releases a profile handle. Null is ignored.
///
/// # Safety
/// `profile` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn impsel_profile_free(profile: *mut ImpselProfile) {
    if !profile.is_null() {
        drop(Box::from_raw(profile));
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `profile` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn impsel_profile_n(profile: *const ImpselProfile) -> usize {
    profile.as_ref().map_or(0, |h| h.inner.n())
}

/// # Safety
/// `profile` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_profile_in_degree(
    profile: *const ImpselProfile,
    vertex: usize,
    out: *mut usize,
) -> ImpselStatus {
    guard(|| {
        let p = profile_arg(profile)?;
        put(out, p.in_degree(vertex)?)
    })
}

/// Maximum in-degree and the least vertex attaining it.
///
/// # Safety
/// `profile` must be a live handle; `delta` and `vertex` writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_profile_max_degree(
    profile: *const ImpselProfile,
    delta: *mut usize,
    vertex: *mut usize,
) -> ImpselStatus {
    guard(|| {
        let p = profile_arg(profile)?;
        put(delta, p.delta())?;
        put(vertex, p.top_vertex())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_gen_single_worst(n: usize, delta: usize, out: *mut *mut ImpselProfile) -> ImpselStatus {
    guard(|| put_profile(out, generators::gen_single_worst(n, delta)?))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_gen_fixed_sample_adversary(
    n: usize,
    v: usize,
    out: *mut *mut ImpselProfile,
) -> ImpselStatus {
    guard(|| put_profile(out, generators::gen_fixed_sample_adversary(n, v)?))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_gen_sqrt_adversary(n: usize, out: *mut *mut ImpselProfile) -> ImpselStatus {
    guard(|| put_profile(out, generators::gen_sqrt_adversary(n)?))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_gen_bound_stress(n: usize, k: usize, out: *mut *mut ImpselProfile) -> ImpselStatus {
    guard(|| put_profile(out, generators::gen_bound_stress(n, k)?))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_gen_random_single(n: usize, seed: u64, out: *mut *mut ImpselProfile) -> ImpselStatus {
    guard(|| put_profile(out, generators::gen_random_single(n, seed)?))
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_gen_random_multi(
    n: usize,
    p: f64,
    seed: u64,
    out: *mut *mut ImpselProfile,
) -> ImpselStatus {
    guard(|| put_profile(out, generators::gen_random_multi(n, p, seed)?))
}

/// Parses a mechanism string such as `random-k:auto` or `fixed:0,3`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_mechanism_parse(spec: *const c_char, out: *mut *mut ImpselMechanism) -> ImpselStatus {
    guard(|| {
        let s = str_arg(spec, "spec")?;
        let m: MechanismSpec = s.parse()?;
        put(out, Box::into_raw(Box::new(ImpselMechanism { inner: m })))
    })
}

/// Releases a mechanism handle. Null is ignored.
///
/// # Safety
/// `mechanism` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn impsel_mechanism_free(mechanism: *mut ImpselMechanism) {
    if !mechanism.is_null() {
        drop(Box::from_raw(mechanism));
    }
}

/// One seeded run. Writes the winner, or -1 when there is none.
///
/// # Safety
/// Handles must be live and `winner` writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_run_once(
    mechanism: *const ImpselMechanism,
    profile: *const ImpselProfile,
    seed: u64,
    winner: *mut i64,
) -> ImpselStatus {
    guard(|| {
        let m = mechanism_arg(mechanism)?;
        let p = profile_arg(profile)?;
        let trace = m.run(p, &mut RandomnessSource::from_seed(seed))?;
        put(winner, trace.winner.map_or(-1, |w| w as i64))
    })
}

/// Monte Carlo estimate over `trials` seeded runs.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_estimate(
    mechanism: *const ImpselMechanism,
    profile: *const ImpselProfile,
    trials: u64,
    seed: u64,
    out: *mut ImpselGapReport,
) -> ImpselStatus {
    guard(|| {
        let m = mechanism_arg(mechanism)?;
        let p = profile_arg(profile)?;
        let r = montecarlo::estimate(m, p, &TrialPlan::new(m.clone(), trials, seed))?;
        put(out, ImpselGapReport::from(&r))
    })
}

/// Report from exact enumeration of at most `budget` draw sequences.
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_exact_report(
    mechanism: *const ImpselMechanism,
    profile: *const ImpselProfile,
    budget: u64,
    out: *mut ImpselGapReport,
) -> ImpselStatus {
    guard(|| {
        let m = mechanism_arg(mechanism)?;
        let p = profile_arg(profile)?;
        let r = montecarlo::exact_report(m, p, budget as u128)?;
        put(out, ImpselGapReport::from(&r))
    })
}

/// Exact winner distribution as JSON, with the expected degree and gap as
/// `num/den` strings. Free the result with [`impsel_string_free`].
///
/// # Safety
/// Handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn impsel_exact_json(
    mechanism: *const ImpselMechanism,
    profile: *const ImpselProfile,
    budget: u64,
    out: *mut *mut c_char,
) -> ImpselStatus {
    guard(|| {
        let m = mechanism_arg(mechanism)?;
        let p = profile_arg(profile)?;
        let dist = exact::exact_distribution_with_cap(m, p, budget as u128)?;
        let mut doc = dist.to_json();
        doc["expected_degree"] = format_rational(&exact::expected_winner_degree(&dist, p)).into();
        doc["gap"] = format_rational(&exact::additive_gap(&dist, p)).into();
        let s = CString::new(doc.to_string()).expect("JSON has no NUL bytes");
        put(out, s.into_raw())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn impsel_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
