//! C interface to the `evolim` solvers.
//!
//! Every fallible function returns an `int32_t` status (`EVOLIM_OK` or a
//! negative code) and writes results through out-pointers. The message of
//! the last failure on the calling thread is available from
//! [`evolim_last_error`]. Handles are opaque and must be released with their
//! `_free` function; passing NULL to a `_free` function is a no-op.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use evolim::cli::{run_scenario, RunOptions};
use evolim::metastable::{minimize_entropy, FeasibleSet, Landscape, MinimizeOptions};
use evolim::model::{resource_response, GrowthFunction, MutationKernel, ResourceModel, TraitGrid};
use evolim::Error;

pub const EVOLIM_OK: i32 = 0;
/// A required pointer argument was NULL.
pub const EVOLIM_NULL_POINTER: i32 = -1;
/// Arguments out of range, malformed strings or mismatched lengths.
pub const EVOLIM_INVALID_INPUT: i32 = -2;
/// Scenario or solver configuration rejected.
pub const EVOLIM_CONFIG: i32 = -3;
/// An exponent left its admissible window or a run blew up.
pub const EVOLIM_BLOW_UP: i32 = -4;
pub const EVOLIM_NON_CONVERGENCE: i32 = -5;
pub const EVOLIM_IO: i32 = -6;
/// An output buffer is too small; the required size was written back.
pub const EVOLIM_BUFFER_TOO_SMALL: i32 = -7;
/// Internal panic caught at the boundary.
pub const EVOLIM_PANIC: i32 = -8;

/// Mutation kernel handle.
pub struct EvolimKernel(MutationKernel);

/// Resource model handle.
pub struct EvolimModel(ResourceModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(i32, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidInput(_) => EVOLIM_INVALID_INPUT,
            Error::Config(_) => EVOLIM_CONFIG,
            Error::Range { .. } | Error::BlowUp { .. } => EVOLIM_BLOW_UP,
            Error::NonConvergence { .. } => EVOLIM_NON_CONVERGENCE,
            Error::Io { .. } => EVOLIM_IO,
        };
        Failure(code, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(EVOLIM_INVALID_INPUT, msg.into())
}

fn null(what: &str) -> Failure {
    Failure(EVOLIM_NULL_POINTER, format!("{what} is NULL"))
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> i32 {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => EVOLIM_OK,
        Ok(Err(Failure(code, msg))) => {
            set_error(msg);
            code
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            EVOLIM_PANIC
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn write<T>(ptr: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    ptr.write(value);
    Ok(())
}

unsafe fn string(ptr: *const c_char, what: &str) -> Result<String, Failure> {
    if ptr.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| invalid(format!("{what} is not UTF-8")))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn evolim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length including the NUL,
/// or 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn evolim_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes_with_nul();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len);
                std::ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
                *buf.add(n - 1) = 0;
            }
            bytes.len()
        }
    })
}

/// Normalized `cos^2` kernel on `[-radius, radius]` with `nodes` quadrature
/// nodes.
///
/// # Safety
/// `out` must point to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn evolim_kernel_cos2(
    radius: f64,
    nodes: usize,
    out: *mut *mut EvolimKernel,
) -> i32 {
    guard(|| {
        let k = MutationKernel::cos2(radius, nodes)?;
        write(out, Box::into_raw(Box::new(EvolimKernel(k))), "out")
    })
}

/// Kernel from a table `(z[i], density[i])`, resampled onto `nodes` nodes.
///
/// # Safety
/// `z` and `density` must point to `len` readable values; `out` to one handle.
#[no_mangle]
pub unsafe extern "C" fn evolim_kernel_from_table(
    z: *const f64,
    density: *const f64,
    len: usize,
    nodes: usize,
    out: *mut *mut EvolimKernel,
) -> i32 {
    guard(|| {
        let z = slice(z, len, "z")?;
        let d = slice(density, len, "density")?;
        let k = MutationKernel::from_table(z, d, nodes)?;
        write(out, Box::into_raw(Box::new(EvolimKernel(k))), "out")
    })
}

/// # Safety
/// `kernel` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evolim_kernel_free(kernel: *mut EvolimKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// `H(p) = int K(z) (exp(p z) - 1) dz`.
///
/// # Safety
/// `kernel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn evolim_kernel_hamiltonian(
    kernel: *const EvolimKernel,
    p: f64,
    out: *mut f64,
) -> i32 {
    guard(|| {
        let k = kernel.as_ref().ok_or_else(|| null("kernel"))?;
        write(out, k.0.hamiltonian(p)?, "out")
    })
}

/// Model with `count` Gaussian growth functions
/// `eta_i(x) = amplitude_i exp(-((x - center_i) / width_i)^2)`.
///
/// # Safety
/// The three arrays must hold `count` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evolim_model_gaussians(
    amplitudes: *const f64,
    centers: *const f64,
    widths: *const f64,
    count: usize,
    out: *mut *mut EvolimModel,
) -> i32 {
    guard(|| {
        let a = slice(amplitudes, count, "amplitudes")?;
        let c = slice(centers, count, "centers")?;
        let w = slice(widths, count, "widths")?;
        let eta = (0..count)
            .map(|i| GrowthFunction::gaussian(a[i], c[i], w[i]))
            .collect();
        let m = ResourceModel::new(eta)?;
        write(out, Box::into_raw(Box::new(EvolimModel(m))), "out")
    })
}

/// # Safety
/// `model` must be NULL or a handle from this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn evolim_model_free(model: *mut EvolimModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of resources of `model` (0 for NULL).
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn evolim_model_resource_count(model: *const EvolimModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.k())
}

fn model_ref<'a>(model: *const EvolimModel) -> Result<&'a ResourceModel, Failure> {
    // SAFETY: callers pass a live handle or NULL
    unsafe { model.as_ref() }
        .map(|m| &m.0)
        .ok_or_else(|| null("model"))
}

/// Resources `I_i = 1 / (1 + int eta_i u)` of the density `u` sampled at the
/// `n` nodes of `[x_min, x_max]`; writes `k` values to `resources`.
///
/// # Safety
/// `u` must hold `n` values and `resources` room for `k` values.
#[no_mangle]
pub unsafe extern "C" fn evolim_model_resources(
    model: *const EvolimModel,
    x_min: f64,
    x_max: f64,
    n: usize,
    u: *const f64,
    resources: *mut f64,
    k: usize,
) -> i32 {
    guard(|| {
        let m = model_ref(model)?;
        if k != m.k() {
            return Err(invalid(format!(
                "{k} resource slots for a {}-resource model",
                m.k()
            )));
        }
        let grid = TraitGrid::new(x_min, x_max, n)?;
        let r = resource_response(slice(u, n, "u")?, &grid, m)?;
        slice_mut(resources, k, "resources")?.copy_from_slice(r.as_slice());
        Ok(())
    })
}

/// Metastable measure of the nodes of `[omega_lo, omega_hi]` on the grid of
/// `n` nodes over `[x_min, x_max]`, certified at `cert_tol`.
///
/// Writes the `k` resources, then up to `atom_capacity` atoms (positions and
/// weights) and the atom count. If the count exceeds the capacity the
/// status is `EVOLIM_BUFFER_TOO_SMALL` and only the count is meaningful.
///
/// # Safety
/// `resources` must have room for `k` values, `atom_x` and `atom_weight`
/// for `atom_capacity` values, and `atom_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn evolim_metastable_minimize(
    model: *const EvolimModel,
    x_min: f64,
    x_max: f64,
    n: usize,
    omega_lo: f64,
    omega_hi: f64,
    cert_tol: f64,
    resources: *mut f64,
    k: usize,
    atom_x: *mut f64,
    atom_weight: *mut f64,
    atom_capacity: usize,
    atom_count: *mut usize,
) -> i32 {
    guard(|| {
        let m = model_ref(model)?;
        if k != m.k() {
            return Err(invalid(format!(
                "{k} resource slots for a {}-resource model",
                m.k()
            )));
        }
        if omega_lo.is_nan() || omega_hi.is_nan() || omega_lo > omega_hi {
            return Err(invalid("omega_lo must not exceed omega_hi"));
        }
        let grid = TraitGrid::new(x_min, x_max, n)?;
        let omega = FeasibleSet::interval(&grid, omega_lo, omega_hi);
        let land = Landscape::new(grid, m.clone());
        let opts = MinimizeOptions {
            cert_tol,
            ..MinimizeOptions::default()
        };
        let cert = minimize_entropy(&land, &omega, &opts)?;
        slice_mut(resources, k, "resources")?.copy_from_slice(cert.resources.as_slice());
        let atoms = cert.measure.atoms();
        write(atom_count, atoms.len(), "atom_count")?;
        if atoms.len() > atom_capacity {
            return Err(Failure(
                EVOLIM_BUFFER_TOO_SMALL,
                format!("{} atoms do not fit in {atom_capacity}", atoms.len()),
            ));
        }
        let xs = slice_mut(atom_x, atoms.len(), "atom_x")?;
        let ws = slice_mut(atom_weight, atoms.len(), "atom_weight")?;
        for (i, a) in atoms.iter().enumerate() {
            xs[i] = a.x;
            ws[i] = a.weight;
        }
        Ok(())
    })
}

/// Runs a scenario file as `evolim run` would, writing the artifacts to
/// `out_dir` (NULL: the scenario's own output directory). Writes the final
/// resources (up to `capacity`) and their number to `count`.
///
/// # Safety
/// `path` must be a NUL-terminated string, `out_dir` NULL or one,
/// `resources` must have room for `capacity` values and `count` be writable.
#[no_mangle]
pub unsafe extern "C" fn evolim_scenario_run(
    path: *const c_char,
    out_dir: *const c_char,
    resources: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> i32 {
    guard(|| {
        let path = string(path, "path")?;
        let out = if out_dir.is_null() {
            None
        } else {
            Some(PathBuf::from(string(out_dir, "out_dir")?))
        };
        let summary = run_scenario(&path, &RunOptions { out, seed: None })?;
        let r = &summary.final_resources;
        write(count, r.len(), "count")?;
        if r.len() > capacity {
            return Err(Failure(
                EVOLIM_BUFFER_TOO_SMALL,
                format!("{} resources do not fit in {capacity}", r.len()),
            ));
        }
        slice_mut(resources, r.len(), "resources")?.copy_from_slice(r);
        Ok(())
    })
}
