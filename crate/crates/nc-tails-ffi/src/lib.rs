//! C ABI over the nc-tails laboratory.
//!
//! Handles are opaque pointers created and destroyed by this library; every
//! fallible call returns an [`NcStatus`] and writes results through out
//! pointers. After a non-OK status, [`nc_last_error_message`] returns a
//! thread-local, NUL-terminated description valid until the next call on
//! the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::ptr;

use nc_tails::sequences::{k12_exact, k12_holmstedt, lorentz_norm, lp_norm, RealSequence};
use nc_tails::series::{monte_carlo, SampleSet, SeriesKind};
use nc_tails::verify::{run_scenario, Scenario};

/// Status codes for every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    IoError = 4,
    RuntimeError = 5,
}

/// Opaque handle: a finite real sequence.
pub struct NcSequence(RealSequence);

/// Opaque handle: a parsed and validated scenario configuration.
pub struct NcScenario(Scenario);

/// Opaque handle: Monte Carlo samples of one series kind.
pub struct NcSampleSet(SampleSet);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn classify(err: &nc_tails::Error) -> NcStatus {
    match err {
        nc_tails::Error::Io { .. } => NcStatus::IoError,
        nc_tails::Error::Config { .. } | nc_tails::Error::SequenceParse { .. } => {
            NcStatus::ParseError
        }
        nc_tails::Error::InvalidParameter(_) | nc_tails::Error::EmptySampleSet => {
            NcStatus::InvalidArgument
        }
        nc_tails::Error::SvdNonConvergence { .. } => NcStatus::RuntimeError,
    }
}

fn fail(err: &nc_tails::Error) -> NcStatus {
    set_error(&err.to_string());
    classify(err)
}

fn null_arg(name: &str) -> NcStatus {
    set_error(&format!("null pointer argument: {name}"));
    NcStatus::NullPointer
}

/// Message for the most recent error on this thread. Never null; empty
/// before the first error. Invalidated by the next failing call.
#[no_mangle]
pub extern "C" fn nc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Create a sequence from `len` doubles. On success writes a handle that
/// must be released with `nc_sequence_free`.
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` to a writable
/// pointer slot.
#[no_mangle]
pub unsafe extern "C" fn nc_sequence_new(
    values: *const f64,
    len: usize,
    out: *mut *mut NcSequence,
) -> NcStatus {
    if out.is_null() {
        return null_arg("out");
    }
    if values.is_null() && len > 0 {
        return null_arg("values");
    }
    let slice = if len == 0 {
        &[][..]
    } else {
        std::slice::from_raw_parts(values, len)
    };
    match RealSequence::new(slice.to_vec()) {
        Ok(seq) => {
            *out = Box::into_raw(Box::new(NcSequence(seq)));
            NcStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// # Safety
/// `seq` must be a pointer returned by `nc_sequence_new` (or null).
#[no_mangle]
pub unsafe extern "C" fn nc_sequence_free(seq: *mut NcSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}

unsafe fn scalar_op(
    seq: *const NcSequence,
    out: *mut f64,
    op: impl FnOnce(&RealSequence) -> nc_tails::Result<f64>,
) -> NcStatus {
    if seq.is_null() {
        return null_arg("seq");
    }
    if out.is_null() {
        return null_arg("out");
    }
    match op(&(*seq).0) {
        Ok(v) => {
            *out = v;
            NcStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Exact (ℓ₁, ℓ₂) K-functional at parameter `t ≥ 0`.
///
/// # Safety
/// `seq` must be a live sequence handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nc_k12_exact(seq: *const NcSequence, t: f64, out: *mut f64) -> NcStatus {
    scalar_op(seq, out, |s| k12_exact(s, t))
}

/// Head/tail split form of the K-functional.
///
/// # Safety
/// As `nc_k12_exact`.
#[no_mangle]
pub unsafe extern "C" fn nc_k12_holmstedt(
    seq: *const NcSequence,
    t: f64,
    out: *mut f64,
) -> NcStatus {
    scalar_op(seq, out, |s| k12_holmstedt(s, t))
}

/// `ℓ_p` norm; pass `INFINITY` for the max norm.
///
/// # Safety
/// As `nc_k12_exact`.
#[no_mangle]
pub unsafe extern "C" fn nc_lp_norm(seq: *const NcSequence, p: f64, out: *mut f64) -> NcStatus {
    scalar_op(seq, out, |s| lp_norm(s, p))
}

/// Lorentz `ℓ_{q,r}` norm; pass `INFINITY` as `r` for the weak norm.
///
/// # Safety
/// As `nc_k12_exact`.
#[no_mangle]
pub unsafe extern "C" fn nc_lorentz_norm(
    seq: *const NcSequence,
    q: f64,
    r: f64,
    out: *mut f64,
) -> NcStatus {
    scalar_op(seq, out, |s| lorentz_norm(s, q, r))
}

/// Parse and validate a scenario from a JSON string. The scenario must
/// carry its own seed. Release with `nc_scenario_free`.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nc_scenario_parse_json(
    json: *const c_char,
    out: *mut *mut NcScenario,
) -> NcStatus {
    if json.is_null() {
        return null_arg("json");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let text = match CStr::from_ptr(json).to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("config JSON is not valid UTF-8");
            return NcStatus::ParseError;
        }
    };
    match Scenario::from_json(text, None) {
        Ok(s) => {
            *out = Box::into_raw(Box::new(NcScenario(s)));
            NcStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// # Safety
/// `scenario` must be a pointer returned by `nc_scenario_parse_json`
/// (or null).
#[no_mangle]
pub unsafe extern "C" fn nc_scenario_free(scenario: *mut NcScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Configured trial count of a scenario handle (0 for null).
///
/// # Safety
/// `scenario` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nc_scenario_trials(scenario: *const NcScenario) -> u64 {
    if scenario.is_null() {
        0
    } else {
        (*scenario).0.trials as u64
    }
}

/// Draw Monte Carlo samples of the given kind ("epsilon", "gauss",
/// "gauss-trunc", "gauss-split-trunc", "commutative"). `trials = 0` uses
/// the scenario's configured count. Release with `nc_sample_set_free`.
///
/// # Safety
/// `scenario` must be a live handle, `kind` NUL-terminated, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nc_monte_carlo(
    scenario: *const NcScenario,
    kind: *const c_char,
    trials: u64,
    out: *mut *mut NcSampleSet,
) -> NcStatus {
    if scenario.is_null() {
        return null_arg("scenario");
    }
    if kind.is_null() {
        return null_arg("kind");
    }
    if out.is_null() {
        return null_arg("out");
    }
    let scn = &(*scenario).0;
    let kind_str = match CStr::from_ptr(kind).to_str() {
        Ok(k) => k,
        Err(_) => {
            set_error("kind is not valid UTF-8");
            return NcStatus::InvalidArgument;
        }
    };
    let kind = match SeriesKind::parse(kind_str, scn.lambda) {
        Ok(k) => k,
        Err(e) => return fail(&e),
    };
    let n = if trials == 0 {
        scn.trials
    } else {
        trials as usize
    };
    match monte_carlo(&scn.blocks, &kind, n, scn.master_seed) {
        Ok(set) => {
            *out = Box::into_raw(Box::new(NcSampleSet(set)));
            NcStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Number of samples held by the handle (0 for null).
///
/// # Safety
/// `set` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn nc_sample_set_len(set: *const NcSampleSet) -> usize {
    if set.is_null() {
        0
    } else {
        (*set).0.samples.len()
    }
}

/// Copy samples (trial order) into a caller buffer of capacity `len`.
///
/// # Safety
/// `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nc_sample_set_copy(
    set: *const NcSampleSet,
    buf: *mut f64,
    len: usize,
) -> NcStatus {
    if set.is_null() {
        return null_arg("set");
    }
    if buf.is_null() {
        return null_arg("buf");
    }
    let samples = &(*set).0.samples;
    if len < samples.len() {
        set_error(&format!(
            "buffer holds {len} values but the sample set has {}",
            samples.len()
        ));
        return NcStatus::InvalidArgument;
    }
    ptr::copy_nonoverlapping(samples.as_ptr(), buf, samples.len());
    NcStatus::Ok
}

/// Summary statistics of a sample set.
///
/// # Safety
/// All out pointers must be writable; `set` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn nc_sample_set_stats(
    set: *const NcSampleSet,
    mean: *mut f64,
    std_dev: *mut f64,
    min: *mut f64,
    max: *mut f64,
) -> NcStatus {
    if set.is_null() {
        return null_arg("set");
    }
    if mean.is_null() || std_dev.is_null() || min.is_null() || max.is_null() {
        return null_arg("stats out");
    }
    let s = &(*set).0;
    *mean = s.mean();
    *std_dev = s.std();
    *min = s.min();
    *max = s.max();
    NcStatus::Ok
}

/// # Safety
/// `set` must be a pointer returned by `nc_monte_carlo` (or null).
#[no_mangle]
pub unsafe extern "C" fn nc_sample_set_free(set: *mut NcSampleSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// Luxemburg gauge of the samples for the Orlicz function exp(t^p) − 1.
///
/// # Safety
/// `set` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nc_orlicz_exp_norm(
    set: *const NcSampleSet,
    p: f64,
    out: *mut f64,
) -> NcStatus {
    if set.is_null() {
        return null_arg("set");
    }
    if out.is_null() {
        return null_arg("out");
    }
    match nc_tails::ri_norms::orlicz_exp_norm(&(*set).0.samples, p) {
        Ok(v) => {
            *out = v;
            NcStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Run every check of a scenario config file and write the report JSON
/// (plus per-check tables next to it). `all_passed` receives the verdict:
/// true iff every non-inconclusive check passed.
///
/// # Safety
/// Both paths must be NUL-terminated strings; `all_passed` writable.
#[no_mangle]
pub unsafe extern "C" fn nc_run_scenario(
    config_path: *const c_char,
    report_path: *const c_char,
    all_passed: *mut bool,
) -> NcStatus {
    if config_path.is_null() {
        return null_arg("config_path");
    }
    if report_path.is_null() {
        return null_arg("report_path");
    }
    if all_passed.is_null() {
        return null_arg("all_passed");
    }
    let config = match CStr::from_ptr(config_path).to_str() {
        Ok(p) => p,
        Err(_) => {
            set_error("config path is not valid UTF-8");
            return NcStatus::InvalidArgument;
        }
    };
    let report = match CStr::from_ptr(report_path).to_str() {
        Ok(p) => p,
        Err(_) => {
            set_error("report path is not valid UTF-8");
            return NcStatus::InvalidArgument;
        }
    };
    match run_scenario(Path::new(config), Path::new(report), None) {
        Ok(summary) => {
            *all_passed = summary.all_passed();
            NcStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    unsafe fn make_sequence(values: &[f64]) -> *mut NcSequence {
        let mut handle: *mut NcSequence = ptr::null_mut();
        let status = nc_sequence_new(values.as_ptr(), values.len(), &mut handle);
        assert_eq!(status, NcStatus::Ok);
        handle
    }

    #[test]
    fn sequence_norms_through_the_abi() {
        unsafe {
            let seq = make_sequence(&[3.0, 4.0]);
            let mut v = 0.0;
            assert_eq!(nc_lp_norm(seq, 2.0, &mut v), NcStatus::Ok);
            assert!((v - 5.0).abs() < 1e-12);
            assert_eq!(nc_lp_norm(seq, f64::INFINITY, &mut v), NcStatus::Ok);
            assert!((v - 4.0).abs() < 1e-12);
            assert_eq!(
                nc_lorentz_norm(seq, 2.0, f64::INFINITY, &mut v),
                NcStatus::Ok
            );
            nc_sequence_free(seq);
        }
    }

    #[test]
    fn k_functional_through_the_abi() {
        unsafe {
            let seq = make_sequence(&[1.0, 1.0, 1.0, 1.0]);
            let mut exact = 0.0;
            let mut split = 0.0;
            assert_eq!(nc_k12_exact(seq, 1.0, &mut exact), NcStatus::Ok);
            assert_eq!(nc_k12_holmstedt(seq, 1.0, &mut split), NcStatus::Ok);
            assert!((exact - 2.0).abs() < 1e-12);
            assert!((split - (1.0 + 3.0_f64.sqrt())).abs() < 1e-12);

            // Errors surface as status + message.
            assert_eq!(
                nc_k12_exact(seq, -1.0, &mut exact),
                NcStatus::InvalidArgument
            );
            let msg = CStr::from_ptr(nc_last_error_message());
            assert!(msg.to_str().unwrap().contains("t ≥ 0"));
            nc_sequence_free(seq);
        }
    }

    #[test]
    fn null_pointers_are_rejected() {
        unsafe {
            let mut v = 0.0;
            assert_eq!(
                nc_k12_exact(ptr::null(), 1.0, &mut v),
                NcStatus::NullPointer
            );
            let mut out: *mut NcSequence = ptr::null_mut();
            assert_eq!(
                nc_sequence_new(ptr::null(), 3, &mut out),
                NcStatus::NullPointer
            );
            assert_eq!(nc_sample_set_len(ptr::null()), 0);
            nc_sequence_free(ptr::null_mut());
            nc_sample_set_free(ptr::null_mut());
            nc_scenario_free(ptr::null_mut());
        }
    }

    #[test]
    fn non_finite_sequence_is_invalid() {
        unsafe {
            let values = [1.0, f64::NAN];
            let mut out: *mut NcSequence = ptr::null_mut();
            assert_eq!(
                nc_sequence_new(values.as_ptr(), 2, &mut out),
                NcStatus::InvalidArgument
            );
            assert!(out.is_null());
        }
    }

    const SCENARIO_JSON: &str = r#"{
        "name": "ffi",
        "blocks": [
            {"d": 1, "singular_values": [3.0]},
            {"d": 2, "singular_values": [2.0, 1.0]}
        ],
        "trials": 10000,
        "seed": 7,
        "t_grid": [0.5, 1.0],
        "lambda": 4.0,
        "checks": ["commutative_comparison"]
    }"#;

    #[test]
    fn scenario_and_monte_carlo_through_the_abi() {
        unsafe {
            let json = CString::new(SCENARIO_JSON).unwrap();
            let mut scn: *mut NcScenario = ptr::null_mut();
            assert_eq!(
                nc_scenario_parse_json(json.as_ptr(), &mut scn),
                NcStatus::Ok
            );
            assert_eq!(nc_scenario_trials(scn), 10_000);

            let kind = CString::new("epsilon").unwrap();
            let mut set: *mut NcSampleSet = ptr::null_mut();
            assert_eq!(
                nc_monte_carlo(scn, kind.as_ptr(), 2000, &mut set),
                NcStatus::Ok
            );
            assert_eq!(nc_sample_set_len(set), 2000);

            let mut buf = vec![0.0_f64; 2000];
            assert_eq!(
                nc_sample_set_copy(set, buf.as_mut_ptr(), buf.len()),
                NcStatus::Ok
            );
            // Samples are bounded by ‖s‖₁ = 9.
            assert!(buf.iter().all(|v| v.abs() <= 9.0 * (1.0 + 1e-9)));

            let (mut mean, mut std_dev, mut min, mut max) = (0.0, 0.0, 0.0, 0.0);
            assert_eq!(
                nc_sample_set_stats(set, &mut mean, &mut std_dev, &mut min, &mut max),
                NcStatus::Ok
            );
            assert!(std_dev > 0.0 && min < max);

            let mut orlicz = 0.0;
            assert_eq!(nc_orlicz_exp_norm(set, 2.0, &mut orlicz), NcStatus::Ok);
            assert!(orlicz > 0.0);

            // Undersized buffer and bad kind are invalid arguments.
            assert_eq!(
                nc_sample_set_copy(set, buf.as_mut_ptr(), 10),
                NcStatus::InvalidArgument
            );
            let bad_kind = CString::new("nosuch").unwrap();
            let mut set2: *mut NcSampleSet = ptr::null_mut();
            assert_eq!(
                nc_monte_carlo(scn, bad_kind.as_ptr(), 0, &mut set2),
                NcStatus::InvalidArgument
            );

            nc_sample_set_free(set);
            nc_scenario_free(scn);
        }
    }

    #[test]
    fn bad_json_is_a_parse_error_with_message() {
        unsafe {
            let json = CString::new(r#"{"name": 3}"#).unwrap();
            let mut scn: *mut NcScenario = ptr::null_mut();
            assert_eq!(
                nc_scenario_parse_json(json.as_ptr(), &mut scn),
                NcStatus::ParseError
            );
            let msg = CStr::from_ptr(nc_last_error_message()).to_str().unwrap();
            assert!(!msg.is_empty());
        }
    }

    #[test]
    fn run_scenario_end_to_end() {
        unsafe {
            let dir = tempfile::tempdir().unwrap();
            let config = dir.path().join("scenario.json");
            std::fs::write(&config, SCENARIO_JSON).unwrap();
            let report = dir.path().join("report.json");

            let config_c = CString::new(config.to_str().unwrap()).unwrap();
            let report_c = CString::new(report.to_str().unwrap()).unwrap();
            let mut all_passed = false;
            assert_eq!(
                nc_run_scenario(config_c.as_ptr(), report_c.as_ptr(), &mut all_passed),
                NcStatus::Ok
            );
            assert!(all_passed);
            assert!(report.exists());

            // Missing config is an I/O error.
            let missing = CString::new("/nonexistent/config.json").unwrap();
            assert_eq!(
                nc_run_scenario(missing.as_ptr(), report_c.as_ptr(), &mut all_passed),
                NcStatus::IoError
            );
        }
    }

    #[test]
    fn generated_header_covers_the_surface() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("include")
            .join("nc_tails.h");
        let text = std::fs::read_to_string(header).expect("header generated by build.rs");
        for symbol in [
            "nc_sequence_new",
            "nc_k12_exact",
            "nc_k12_holmstedt",
            "nc_lorentz_norm",
            "nc_scenario_parse_json",
            "nc_monte_carlo",
            "nc_sample_set_copy",
            "nc_orlicz_exp_norm",
            "nc_run_scenario",
            "nc_last_error_message",
            "NcStatus",
        ] {
            assert!(text.contains(symbol), "header missing {symbol}");
        }
    }
}
