//! C ABI over `lrinv`.
//!
//! Every fallible call returns an [`LrinvStatus`]. On failure the message is
//! kept per thread and can be read with [`lrinv_last_error_message`].
//! Handles are opaque; release each with its matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use lrinv::cli::{classification_report, solve_core, CliError, RunConfig, SolveRun};
use lrinv::engine::{iec_two_level, nmr_exact, schrodinger_oracle, evolution_operator, IecAnsatz, NmrParams, SolverOptions, TimeGrid};
use lrinv::lie::{AdjointMatrix, Coefficient, HamiltonianSpec};

/// Result codes. Zero is success.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrinvStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Config = 3,
    Integration = 4,
    Io = 5,
    Verification = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// A two-qubit Hamiltonian with nine coefficient functions.
pub struct LrinvHamiltonian(HamiltonianSpec);

/// The outcome of a configured solve.
pub struct LrinvSolution(SolveRun);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LrinvNmrResult {
    pub max_di_residual: f64,
    pub lr_oracle_distance: f64,
    pub transport_defect: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct LrinvIecResult {
    pub inversion_fidelity: f64,
    pub boundary_commutator_start: f64,
    pub boundary_commutator_end: f64,
    pub max_di_residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(LrinvStatus, String);

impl From<CliError> for Failure {
    fn from(e: CliError) -> Self {
        let status = match &e {
            CliError::Config { .. } => LrinvStatus::Config,
            CliError::Integration { .. } => LrinvStatus::Integration,
            CliError::Io { .. } => LrinvStatus::Io,
            CliError::Verification(_) => LrinvStatus::Verification,
        };
        Failure(status, e.to_string())
    }
}

impl From<lrinv::engine::EngineError> for Failure {
    fn from(e: lrinv::engine::EngineError) -> Self {
        CliError::from(e).into()
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(LrinvStatus::InvalidArgument, msg.into())
}

fn null(what: &str) -> Failure {
    Failure(LrinvStatus::NullArgument, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LrinvStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LrinvStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LrinvStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, need: usize) -> Result<&'a mut [f64], Failure> {
    if p.is_null() {
        return Err(null("output buffer"));
    }
    if len < need {
        return Err(Failure(LrinvStatus::BufferTooSmall, format!("buffer holds {len} values, {need} needed")));
    }
    Ok(std::slice::from_raw_parts_mut(p, need))
}

fn grid(t0: f64, tf: f64) -> Result<TimeGrid, Failure> {
    TimeGrid::new(t0, tf, 2).map_err(|e| invalid(e.to_string()))
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn lrinv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn lrinv_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lrinv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a Hamiltonian from nine coefficient expressions in the order
/// J_x, J_y, J_z, h1_x, h1_y, h1_z, h2_x, h2_y, h2_z. A NULL entry is zero.
///
/// # Safety
/// `exprs` must point to nine entries, each NULL or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lrinv_hamiltonian_new(
    exprs: *const *const c_char,
    out: *mut *mut LrinvHamiltonian,
) -> LrinvStatus {
    guard(|| {
        if exprs.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let mut coeffs: [Coefficient; 9] = std::array::from_fn(|_| Coefficient::zero());
        for (k, c) in coeffs.iter_mut().enumerate() {
            let p = *exprs.add(k);
            if !p.is_null() {
                let text = str_arg(p, "expression")?;
                *c = Coefficient::parse(text).map_err(|e| Failure(LrinvStatus::Config, e.to_string()))?;
            }
        }
        let h = HamiltonianSpec::new(coeffs).map_err(|e| Failure(LrinvStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(LrinvHamiltonian(h)));
        Ok(())
    })
}

/// Builds a constant Hamiltonian from nine numbers.
///
/// # Safety
/// `coeffs` must point to nine doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrinv_hamiltonian_constant(coeffs: *const f64, out: *mut *mut LrinvHamiltonian) -> LrinvStatus {
    guard(|| {
        if coeffs.is_null() || out.is_null() {
            return Err(null("argument"));
        }
        let mut v = [0.0; 9];
        v.copy_from_slice(std::slice::from_raw_parts(coeffs, 9));
        let h = HamiltonianSpec::constant(v).map_err(|e| Failure(LrinvStatus::Config, e.to_string()))?;
        *out = Box::into_raw(Box::new(LrinvHamiltonian(h)));
        Ok(())
    })
}

/// # Safety
/// `h` must come from a constructor above and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lrinv_hamiltonian_free(h: *mut LrinvHamiltonian) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Writes the real 15×15 generator `iA(t)` of the adjoint equation in the
/// spinor basis, row-major, into `buf`.
///
/// # Safety
/// `h` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lrinv_adjoint_at(h: *const LrinvHamiltonian, t: f64, buf: *mut f64, len: usize) -> LrinvStatus {
    guard(|| {
        let h = ref_arg(h, "hamiltonian")?;
        let m = AdjointMatrix::spinor(&h.0)
            .real_generator_at(t)
            .map_err(|e| Failure(LrinvStatus::Integration, e.to_string()))?;
        let dst = out_slice(buf, len, 225)?;
        for r in 0..15 {
            for c in 0..15 {
                dst[15 * r + c] = m[(r, c)];
            }
        }
        Ok(())
    })
}

/// Sector block sizes of the adjoint matrix sampled over `[t0, tf]`.
/// `n_blocks` receives the count even when `cap` is too small.
///
/// # Safety
/// `h` must be a live handle, `sizes` must hold `cap` entries and
/// `n_blocks` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrinv_block_sizes(
    h: *const LrinvHamiltonian,
    t0: f64,
    tf: f64,
    sizes: *mut usize,
    cap: usize,
    n_blocks: *mut usize,
) -> LrinvStatus {
    guard(|| {
        let h = ref_arg(h, "hamiltonian")?;
        if sizes.is_null() || n_blocks.is_null() {
            return Err(null("output"));
        }
        let d = lrinv::cli::config::decompose(&h.0, &grid(t0, tf)?)?;
        let b = d.block_sizes();
        *n_blocks = b.len();
        if b.len() > cap {
            return Err(Failure(LrinvStatus::BufferTooSmall, format!("{} blocks, room for {cap}", b.len())));
        }
        std::slice::from_raw_parts_mut(sizes, b.len()).copy_from_slice(&b);
        Ok(())
    })
}

/// Full classification document as JSON. Free with [`lrinv_string_free`].
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lrinv_classify_json(
    h: *const LrinvHamiltonian,
    t0: f64,
    tf: f64,
    out: *mut *mut c_char,
) -> LrinvStatus {
    guard(|| {
        let h = ref_arg(h, "hamiltonian")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let report = classification_report(&h.0, &grid(t0, tf)?)?;
        let text = serde_json::to_string(&report).map_err(|e| invalid(e.to_string()))?;
        *out = CString::new(text).map_err(|e| invalid(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Runs a solve described by a JSON run configuration. Nothing is written
/// to disk.
///
/// # Safety
/// `config_json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lrinv_solve(config_json: *const c_char, out: *mut *mut LrinvSolution) -> LrinvStatus {
    guard(|| {
        let text = str_arg(config_json, "config")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = RunConfig::parse_str(text)?;
        let run = solve_core(&cfg, None)?;
        *out = Box::into_raw(Box::new(LrinvSolution(run)));
        Ok(())
    })
}

/// # Safety
/// `s` must come from [`lrinv_solve`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lrinv_solution_free(s: *mut LrinvSolution) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Number of time samples, or 0 for a NULL handle.
///
/// # Safety
/// `s` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lrinv_solution_samples(s: *const LrinvSolution) -> usize {
    s.as_ref().map_or(0, |s| s.0.grid.len())
}

/// Number of solved components per sample, or 0 for a NULL handle.
///
/// # Safety
/// `s` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lrinv_solution_components(s: *const LrinvSolution) -> usize {
    s.as_ref().map_or(0, |s| s.0.trajectory.dim())
}

/// Copies the sample times.
///
/// # Safety
/// `s` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lrinv_solution_times(s: *const LrinvSolution, buf: *mut f64, len: usize) -> LrinvStatus {
    guard(|| {
        let s = ref_arg(s, "solution")?;
        let times = s.0.grid.times();
        out_slice(buf, len, times.len())?.copy_from_slice(&times);
        Ok(())
    })
}

/// Copies the coefficient trajectory, one sample per row.
///
/// # Safety
/// `s` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lrinv_solution_trajectory(s: *const LrinvSolution, buf: *mut f64, len: usize) -> LrinvStatus {
    guard(|| {
        let s = ref_arg(s, "solution")?;
        let n = s.0.trajectory.dim();
        let dst = out_slice(buf, len, n * s.0.trajectory.vectors.len())?;
        for (row, g) in dst.chunks_mut(n).zip(&s.0.trajectory.vectors) {
            row.copy_from_slice(g);
        }
        Ok(())
    })
}

/// Oracle propagator at sample `k` as 16 interleaved `re, im` pairs,
/// row-major.
///
/// # Safety
/// `s` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn lrinv_solution_propagator(
    s: *const LrinvSolution,
    k: usize,
    buf: *mut f64,
    len: usize,
) -> LrinvStatus {
    guard(|| {
        let s = ref_arg(s, "solution")?;
        let u = s.0.oracle.matrices.get(k).ok_or_else(|| invalid(format!("sample {k} out of range")))?;
        let dst = out_slice(buf, len, 32)?;
        for r in 0..4 {
            for c in 0..4 {
                dst[8 * r + 2 * c] = u[(r, c)].re;
                dst[8 * r + 2 * c + 1] = u[(r, c)].im;
            }
        }
        Ok(())
    })
}

/// Largest DI residual over the grid.
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lrinv_solution_max_residual(s: *const LrinvSolution, out: *mut f64) -> LrinvStatus {
    guard(|| {
        let s = ref_arg(s, "solution")?;
        *out.as_mut().ok_or_else(|| null("out"))? = s.0.summary.max_di_residual;
        Ok(())
    })
}

/// Run summary as JSON. Free with [`lrinv_string_free`].
///
/// # Safety
/// `s` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lrinv_solution_summary_json(s: *const LrinvSolution, out: *mut *mut c_char) -> LrinvStatus {
    guard(|| {
        let s = ref_arg(s, "solution")?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let text = serde_json::to_string(&s.0.summary).map_err(|e| invalid(e.to_string()))?;
        *out = CString::new(text).map_err(|e| invalid(e.to_string()))?.into_raw();
        Ok(())
    })
}

/// Closed-form NMR invariant over one drive period, checked against the
/// Schrödinger oracle.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrinv_nmr_check(
    j: f64,
    hx: f64,
    b: f64,
    omega: f64,
    steps: usize,
    out: *mut LrinvNmrResult,
) -> LrinvStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let params = NmrParams::new(j, hx, b, omega)?;
        if !params.period().is_finite() {
            return Err(invalid("omega must be non-zero"));
        }
        let grid = TimeGrid::new(0.0, params.period(), steps)?;
        let sol = nmr_exact(params, &grid)?;
        let residual = lrinv::engine::verify_with_oracle(&sol.invariant, &sol.hamiltonian, None, &[])?;
        let spectrum = sol.spectrum(None)?;
        let oracle = schrodinger_oracle(&sol.hamiltonian, &grid, &SolverOptions::default())?;
        *out = LrinvNmrResult {
            max_di_residual: residual.max_di_residual,
            lr_oracle_distance: evolution_operator(&spectrum)?.max_distance(&oracle),
            transport_defect: spectrum.transport_defect(&oracle)?,
        };
        Ok(())
    })
}

/// Two-level inversion with the boundary-fixed polynomial ansatz.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrinv_iec_run(
    epsilon: f64,
    delta: f64,
    t_final: f64,
    omega0: f64,
    steps: usize,
    out: *mut LrinvIecResult,
) -> LrinvStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let ansatz = IecAnsatz::boundary(epsilon, delta, t_final, omega0)?;
        let r = iec_two_level(&ansatz, steps, &SolverOptions::default())?;
        *out = LrinvIecResult {
            inversion_fidelity: r.inversion_fidelity,
            boundary_commutator_start: r.boundary_commutators[0],
            boundary_commutator_end: r.boundary_commutators[1],
            max_di_residual: r.max_di_residual,
        };
        Ok(())
    })
}
