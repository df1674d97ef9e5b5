//! C interface to `floquet-ap`.
//!
//! Objects are opaque handles created by `fap_*` constructors and released
//! by the matching `*_free`. Every fallible call returns a [`FapStatus`];
//! on failure [`fap_last_error`] describes what went wrong.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use floquet_ap::error::Error;
use floquet_ap::io::{parse_model, solution_to_json, to_deterministic_json};
use floquet_ap::monodromy::MonodromyOperator;
use floquet_ap::phasespace::FdeModel;
use floquet_ap::solver::{
    check_resonance_with, solve_ap_with, ApSolution, Classification, SolverConfig,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FapStatus {
    Ok = 0,
    InvalidArgument = 1,
    ParseError = 2,
    PropagationError = 3,
    NearSingular = 4,
    NearResonant = 10,
    Resonant = 11,
    Panic = 99,
}

/// Resolution and tolerances. Start from [`fap_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FapConfig {
    pub m: u32,
    pub substeps: u32,
    pub unit_band_tol: f64,
    pub resonance_tol: f64,
    pub guard: f64,
    pub force: bool,
}

pub struct FapModel(FdeModel);

pub struct FapSpectrum {
    eigenvalues: Vec<[f64; 2]>,
    unit_circle: Vec<f64>,
}

pub struct FapSolution(ApSolution);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> FapStatus {
    match e {
        Error::Parse(_) | Error::Io(_) => FapStatus::ParseError,
        Error::Domain(_) | Error::Config(_) | Error::Precondition(_) => FapStatus::InvalidArgument,
        Error::NearSingular { .. } => FapStatus::NearSingular,
        Error::NearResonant { .. } => FapStatus::NearResonant,
        Error::Resonant { .. } => FapStatus::Resonant,
        _ => FapStatus::PropagationError,
    }
}

fn guarded(f: impl FnOnce() -> Result<(), Error>) -> FapStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FapStatus::Ok,
        Ok(Err(e)) => {
            set_error(&e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic");
            FapStatus::Panic
        }
    }
}

fn invalid(what: &str) -> Error {
    Error::Domain(format!("{what} is null"))
}

impl FapConfig {
    fn to_solver(self) -> SolverConfig {
        let mut cfg = SolverConfig {
            resonance_tol: self.resonance_tol,
            guard: self.guard,
            force: self.force,
            ..SolverConfig::default()
        };
        cfg.monodromy.m = self.m as usize;
        cfg.monodromy.stepper.substeps = self.substeps as usize;
        cfg.monodromy.unit_band_tol = self.unit_band_tol;
        cfg
    }
}

unsafe fn config_or_default(cfg: *const FapConfig) -> SolverConfig {
    if cfg.is_null() {
        fap_config_default().to_solver()
    } else {
        (*cfg).to_solver()
    }
}

fn assemble(model: &FdeModel, cfg: &SolverConfig) -> Result<MonodromyOperator, Error> {
    if !(cfg.resonance_tol > 0.0 && cfg.guard > 0.0) {
        return Err(Error::Config("tolerances must be positive".into()));
    }
    cfg.monodromy.stepper.validate(model)?;
    MonodromyOperator::assemble(model, 1.0, &cfg.monodromy)
}

#[no_mangle]
pub extern "C" fn fap_config_default() -> FapConfig {
    let d = SolverConfig::default();
    FapConfig {
        m: d.monodromy.m as u32,
        substeps: d.monodromy.stepper.substeps as u32,
        unit_band_tol: d.monodromy.unit_band_tol,
        resonance_tol: d.resonance_tol,
        guard: d.guard,
        force: d.force,
    }
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call; never null.
#[no_mangle]
pub extern "C" fn fap_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses a model document (UTF-8 JSON, NUL terminated).
///
/// # Safety
/// `json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fap_model_from_json(
    json: *const c_char,
    out: *mut *mut FapModel,
) -> FapStatus {
    guarded(|| {
        if json.is_null() || out.is_null() {
            return Err(invalid("argument"));
        }
        *out = ptr::null_mut();
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|e| Error::Parse(format!("model is not UTF-8: {e}")))?;
        let model = parse_model(text)?;
        *out = Box::into_raw(Box::new(FapModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must come from [`fap_model_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fap_model_free(model: *mut FapModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Assembles the monodromy operator at base time 1 and collects its
/// eigenvalues and confirmed unit-circle angles. `cfg` may be null.
///
/// # Safety
/// Pointers must be valid; `out` receives a handle for [`fap_spectrum_free`].
#[no_mangle]
pub unsafe extern "C" fn fap_spectrum(
    model: *const FapModel,
    cfg: *const FapConfig,
    out: *mut *mut FapSpectrum,
) -> FapStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return Err(invalid("argument"));
        }
        *out = ptr::null_mut();
        let cfg = config_or_default(cfg);
        let m = assemble(&(*model).0, &cfg)?;
        let report = m.unit_circle_report()?;
        *out = Box::into_raw(Box::new(FapSpectrum {
            eigenvalues: m.eigenvalues().iter().map(|z| [z.re, z.im]).collect(),
            unit_circle: report.set.angles().to_vec(),
        }));
        Ok(())
    })
}

/// # Safety
/// `s` must be a valid spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn fap_spectrum_len(s: *const FapSpectrum) -> usize {
    if s.is_null() {
        0
    } else {
        (*s).eigenvalues.len()
    }
}

/// Eigenvalues are ordered by decreasing modulus.
///
/// # Safety
/// `s` must be a valid spectrum handle; `re` and `im` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn fap_spectrum_eigenvalue(
    s: *const FapSpectrum,
    index: usize,
    re: *mut f64,
    im: *mut f64,
) -> FapStatus {
    guarded(|| {
        if s.is_null() || re.is_null() || im.is_null() {
            return Err(invalid("argument"));
        }
        let s = &*s;
        let z = s
            .eigenvalues
            .get(index)
            .ok_or_else(|| Error::Domain(format!("eigenvalue index {index} out of range")))?;
        *re = z[0];
        *im = z[1];
        Ok(())
    })
}

/// # Safety
/// `s` must be a valid spectrum handle.
#[no_mangle]
pub unsafe extern "C" fn fap_spectrum_unit_circle_len(s: *const FapSpectrum) -> usize {
    if s.is_null() {
        0
    } else {
        (*s).unit_circle.len()
    }
}

/// Angle in `[0, 2 pi)` of a confirmed unit-circle multiplier.
///
/// # Safety
/// `s` must be a valid spectrum handle; `angle` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fap_spectrum_unit_circle_angle(
    s: *const FapSpectrum,
    index: usize,
    angle: *mut f64,
) -> FapStatus {
    guarded(|| {
        if s.is_null() || angle.is_null() {
            return Err(invalid("argument"));
        }
        let s = &*s;
        *angle = *s
            .unit_circle
            .get(index)
            .ok_or_else(|| Error::Domain(format!("angle index {index} out of range")))?;
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`fap_spectrum`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fap_spectrum_free(s: *mut FapSpectrum) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Writes 0 (non-resonant), 10 (near-resonant) or 11 (resonant) to
/// `classification`.
///
/// # Safety
/// Pointers must be valid; `cfg` may be null.
#[no_mangle]
pub unsafe extern "C" fn fap_check(
    model: *const FapModel,
    cfg: *const FapConfig,
    classification: *mut i32,
) -> FapStatus {
    guarded(|| {
        if model.is_null() || classification.is_null() {
            return Err(invalid("argument"));
        }
        let cfg = config_or_default(cfg);
        let model = &(*model).0;
        let m = assemble(model, &cfg)?;
        let report = check_resonance_with(&m, model.forcing(), &cfg)?;
        *classification = match report.classification {
            Classification::NonResonant => 0,
            Classification::NearResonant => 10,
            Classification::Resonant => 11,
        };
        Ok(())
    })
}

/// Constructs the almost periodic solution. Fails with `Resonant`, or with
/// `NearResonant` unless `cfg->force` is set.
///
/// # Safety
/// Pointers must be valid; `cfg` may be null.
#[no_mangle]
pub unsafe extern "C" fn fap_solve(
    model: *const FapModel,
    cfg: *const FapConfig,
    out: *mut *mut FapSolution,
) -> FapStatus {
    guarded(|| {
        if model.is_null() || out.is_null() {
            return Err(invalid("argument"));
        }
        *out = ptr::null_mut();
        let cfg = config_or_default(cfg);
        let m = assemble(&(*model).0, &cfg)?;
        let sol = solve_ap_with(&m, &cfg)?;
        *out = Box::into_raw(Box::new(FapSolution(sol)));
        Ok(())
    })
}

/// # Safety
/// `sol` must be a valid solution handle.
#[no_mangle]
pub unsafe extern "C" fn fap_solution_dim(sol: *const FapSolution) -> usize {
    if sol.is_null() {
        0
    } else {
        (*sol).0.model().dim()
    }
}

/// Evaluates `u(t)` into `re[0..len]` and `im[0..len]`; `len` must equal
/// the model dimension.
///
/// # Safety
/// `re` and `im` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn fap_solution_eval(
    sol: *const FapSolution,
    t: f64,
    re: *mut f64,
    im: *mut f64,
    len: usize,
) -> FapStatus {
    guarded(|| {
        if sol.is_null() || re.is_null() || im.is_null() {
            return Err(invalid("argument"));
        }
        let sol = &(*sol).0;
        if len != sol.model().dim() {
            return Err(Error::Domain(format!(
                "buffer length {len}, dimension {}",
                sol.model().dim()
            )));
        }
        if !t.is_finite() {
            return Err(Error::Domain(format!("time {t} is not finite")));
        }
        let v = sol.eval(t);
        for (i, z) in v.iter().enumerate() {
            *re.add(i) = z.re;
            *im.add(i) = z.im;
        }
        Ok(())
    })
}

/// Serializes the solution; release the string with [`fap_string_free`].
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn fap_solution_to_json(
    sol: *const FapSolution,
    out: *mut *mut c_char,
) -> FapStatus {
    guarded(|| {
        if sol.is_null() || out.is_null() {
            return Err(invalid("argument"));
        }
        *out = ptr::null_mut();
        let text = to_deterministic_json(&solution_to_json(&(*sol).0));
        *out = CString::new(text)
            .map_err(|e| Error::Parse(e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn fap_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `sol` must come from [`fap_solve`] or be null.
#[no_mangle]
pub unsafe extern "C" fn fap_solution_free(sol: *mut FapSolution) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}
