//! C ABI over the poschoice solver.
//!
//! Problems and value grids are opaque handles created by `poschoice_*`
//! constructors and released with the matching `_free`. Every fallible call
//! returns a [`PoschoiceStatus`]; on failure the message is available from
//! [`poschoice_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use poschoice::envelope::classify_kinks;
use poschoice::{build_scenario, lipschitz_estimate, parse_problem, Error, ProblemKind, SolveConfig, ValueGrid};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoschoiceStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    ParseError = 4,
    ParameterError = 5,
    UnknownScenario = 6,
    Unsupported = 7,
    Boundary = 8,
    Precondition = 9,
    WindowTooSmall = 10,
    BufferTooSmall = 11,
    Io = 12,
    Panic = 13,
}

impl From<&Error> for PoschoiceStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Input(_) => PoschoiceStatus::InvalidInput,
            Error::Parse(_) => PoschoiceStatus::ParseError,
            Error::Parameter { .. } => PoschoiceStatus::ParameterError,
            Error::UnknownScenario(_) => PoschoiceStatus::UnknownScenario,
            Error::Unsupported(_) => PoschoiceStatus::Unsupported,
            Error::Boundary(_) => PoschoiceStatus::Boundary,
            Error::Precondition(_) => PoschoiceStatus::Precondition,
            Error::WindowTooSmall { .. } => PoschoiceStatus::WindowTooSmall,
            Error::Io(_) => PoschoiceStatus::Io,
        }
    }
}

/// A problem: box, ring or plane-bound pair.
pub struct PoschoiceProblem {
    inner: ProblemKind,
}

/// Value function samples on a regular grid.
pub struct PoschoiceGrid {
    inner: ValueGrid,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(PoschoiceStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn fail(status: PoschoiceStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, recording its error message and turning panics into a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PoschoiceStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PoschoiceStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PoschoiceStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(PoschoiceStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PoschoiceStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn read_slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(fail(PoschoiceStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn check_out<T>(p: *mut T, what: &str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(fail(PoschoiceStatus::NullPointer, format!("{what} is null")));
    }
    Ok(())
}

unsafe fn problem_ref<'a>(p: *const PoschoiceProblem) -> Result<&'a ProblemKind, Failure> {
    p.as_ref()
        .map(|p| &p.inner)
        .ok_or_else(|| fail(PoschoiceStatus::NullPointer, "problem is null"))
}

unsafe fn grid_ref<'a>(g: *const PoschoiceGrid) -> Result<&'a ValueGrid, Failure> {
    g.as_ref()
        .map(|g| &g.inner)
        .ok_or_else(|| fail(PoschoiceStatus::NullPointer, "grid is null"))
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next `poschoice_*` call on this thread.
#[no_mangle]
pub extern "C" fn poschoice_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn poschoice_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a registered scenario. `keys` and `values` hold `n_params`
/// parameter overrides (both may be null when `n_params == 0`).
///
/// # Safety
/// `name` and every `keys[i]` must be NUL-terminated strings; `keys` and
/// `values` must point to `n_params` readable elements; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn poschoice_problem_from_scenario(
    name: *const c_char,
    keys: *const *const c_char,
    values: *const f64,
    n_params: usize,
    out: *mut *mut PoschoiceProblem,
) -> PoschoiceStatus {
    guard(|| {
        check_out(out, "out")?;
        let name = read_str(name, "name")?;
        let keys = read_slice(keys, n_params, "keys")?;
        let values = read_slice(values, n_params, "values")?;
        let mut params = BTreeMap::new();
        for (k, v) in keys.iter().zip(values) {
            params.insert(read_str(*k, "parameter key")?.to_string(), *v);
        }
        let s = build_scenario(name, &params)?;
        *out = Box::into_raw(Box::new(PoschoiceProblem { inner: s.problem }));
        Ok(())
    })
}

/// Parses a TOML problem file held in memory.
///
/// # Safety
/// `src` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn poschoice_problem_from_toml(
    src: *const c_char,
    out: *mut *mut PoschoiceProblem,
) -> PoschoiceStatus {
    guard(|| {
        check_out(out, "out")?;
        let problem = parse_problem(read_str(src, "src")?)?;
        *out = Box::into_raw(Box::new(PoschoiceProblem { inner: problem }));
        Ok(())
    })
}

/// Number of anchor coordinates, 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn poschoice_problem_dim(problem: *const PoschoiceProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.inner.dim())
}

/// # Safety
/// `problem` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn poschoice_problem_free(problem: *mut PoschoiceProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Solves at anchor `x` (`dim` coordinates). Writes `V(x)` to `value`, the
/// number of maximizers to `argmax_count`, and up to `argmax_capacity`
/// maximizers (each `dim` coordinates) into `argmax`. Returns
/// `BufferTooSmall` when the set did not fit; `argmax_count` is set anyway.
///
/// # Safety
/// `x` must hold `dim` readable values, `argmax` room for
/// `argmax_capacity * dim` values, and the scalar outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn poschoice_solve(
    problem: *const PoschoiceProblem,
    x: *const f64,
    dim: usize,
    value: *mut f64,
    argmax: *mut f64,
    argmax_capacity: usize,
    argmax_count: *mut usize,
) -> PoschoiceStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        check_out(value, "value")?;
        check_out(argmax_count, "argmax_count")?;
        if dim != p.dim() {
            return Err(fail(
                PoschoiceStatus::InvalidInput,
                format!("anchor has {dim} coordinates, problem needs {}", p.dim()),
            ));
        }
        let x = read_slice(x, dim, "x")?;
        let sol = p.solve(x, &SolveConfig::for_dim(dim))?;
        *value = sol.value;
        *argmax_count = sol.argmax_set.len();
        if argmax_capacity > 0 {
            check_out(argmax, "argmax")?;
        }
        for (i, y) in sol.argmax_set.iter().take(argmax_capacity).enumerate() {
            ptr::copy_nonoverlapping(y.as_ptr(), argmax.add(i * dim), dim);
        }
        if sol.argmax_set.len() > argmax_capacity {
            return Err(fail(
                PoschoiceStatus::BufferTooSmall,
                format!("{} maximizers, room for {argmax_capacity}", sol.argmax_set.len()),
            ));
        }
        Ok(())
    })
}

/// Samples `V` on a grid with `cells` cells per axis over the anchor domain.
///
/// # Safety
/// `problem` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn poschoice_value_function(
    problem: *const PoschoiceProblem,
    cells: usize,
    out: *mut *mut PoschoiceGrid,
) -> PoschoiceStatus {
    guard(|| {
        let p = problem_ref(problem)?;
        check_out(out, "out")?;
        let grid = p.value_grid(cells, &SolveConfig::for_dim(p.dim()))?;
        *out = Box::into_raw(Box::new(PoschoiceGrid { inner: grid }));
        Ok(())
    })
}

/// Node count, 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn poschoice_grid_len(grid: *const PoschoiceGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.inner.len())
}

/// Coordinates per node, 0 for a null handle.
///
/// # Safety
/// `grid` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn poschoice_grid_dim(grid: *const PoschoiceGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.inner.dim())
}

/// Writes the coordinates of node `index` (`dim` values) and its value.
///
/// # Safety
/// `grid` must be a live handle, `coords` room for `poschoice_grid_dim`
/// values and `value` writable.
#[no_mangle]
pub unsafe extern "C" fn poschoice_grid_node(
    grid: *const PoschoiceGrid,
    index: usize,
    coords: *mut f64,
    value: *mut f64,
) -> PoschoiceStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        check_out(coords, "coords")?;
        check_out(value, "value")?;
        if index >= g.len() {
            return Err(fail(PoschoiceStatus::InvalidInput, format!("node {index} out of range")));
        }
        let c = g.coord(index);
        ptr::copy_nonoverlapping(c.as_ptr(), coords, c.len());
        *value = g.value(index);
        Ok(())
    })
}

/// Copies all node values (axis 0 fastest) into `values`.
///
/// # Safety
/// `grid` must be a live handle and `values` room for `capacity` values.
#[no_mangle]
pub unsafe extern "C" fn poschoice_grid_values(
    grid: *const PoschoiceGrid,
    values: *mut f64,
    capacity: usize,
) -> PoschoiceStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        check_out(values, "values")?;
        if capacity < g.len() {
            return Err(fail(
                PoschoiceStatus::BufferTooSmall,
                format!("{} values, room for {capacity}", g.len()),
            ));
        }
        ptr::copy_nonoverlapping(g.values().as_ptr(), values, g.len());
        Ok(())
    })
}

/// Largest adjacent-node slope of the grid.
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn poschoice_grid_lipschitz(grid: *const PoschoiceGrid, out: *mut f64) -> PoschoiceStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        check_out(out, "out")?;
        *out = lipschitz_estimate(g);
        Ok(())
    })
}

/// Fraction of interior nodes flagged as kinks (default tolerance).
///
/// # Safety
/// `grid` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn poschoice_grid_kink_fraction(grid: *const PoschoiceGrid, out: *mut f64) -> PoschoiceStatus {
    guard(|| {
        let g = grid_ref(grid)?;
        check_out(out, "out")?;
        *out = classify_kinks(g, None)?.fraction;
        Ok(())
    })
}

/// # Safety
/// `grid` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn poschoice_grid_free(grid: *mut PoschoiceGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}
