//! C ABI over `fsi-core`.
//!
//! Models are opaque handles created by [`fsi_model_new`] and released with
//! [`fsi_model_free`]. Every fallible call returns an [`FsiStatus`]; on
//! failure a message is kept per thread and can be copied out with
//! [`fsi_last_error_message`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use fsi_core::evolution::{fit_decay, settle, simulate_reduced};
use fsi_core::generator::{assemble, build_ambient_field, OperatorPair, PhysicalParams};
use fsi_core::grid::{build_grid, GeometryConfig};
use fsi_core::spectral::{resolvent_norm, spectral_abscissa_complement};
use fsi_core::FsiError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    Geometry = 4,
    Parameters = 5,
    Solver = 6,
    Spectrum = 7,
    Compatibility = 8,
    Io = 9,
    Internal = 10,
    Panic = 11,
}

impl From<&FsiError> for FsiStatus {
    fn from(e: &FsiError) -> Self {
        match e {
            FsiError::Geometry(_) => Self::Geometry,
            FsiError::Parameters(_) | FsiError::Config(_) => Self::Parameters,
            FsiError::Solver(_) | FsiError::Eigen(_) => Self::Solver,
            FsiError::Spectrum(_) => Self::Spectrum,
            FsiError::Compatibility(_) => Self::Compatibility,
            FsiError::Io(_) => Self::Io,
            FsiError::Dimension { .. } | FsiError::Degenerate(_) | FsiError::Format(_) => Self::InvalidArgument,
            _ => Self::Internal,
        }
    }
}

/// Assembled operators for one grid and parameter set.
pub struct FsiModel {
    pair: OperatorPair,
}

/// Geometry and physics of a model. `amplitude` scales the ambient flow.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FsiModelParams {
    pub lx: f64,
    pub ly: f64,
    pub nx: usize,
    pub ny: usize,
    pub eta: f64,
    pub lambda: f64,
    pub nu: f64,
    pub amplitude: f64,
}

/// Outcome of [`fsi_model_simulate`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FsiDecay {
    pub delta: f64,
    pub m: f64,
    pub r_squared: f64,
    pub energy_balance_residual: f64,
    pub max_complement_defect: f64,
    pub monotone: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

/// Runs `f`, turning errors and panics into a status and a stored message.
fn guard(f: impl FnOnce() -> Result<(), (FsiStatus, String)>) -> FsiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            FsiStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            FsiStatus::Panic
        }
    }
}

fn core<T>(r: fsi_core::Result<T>) -> Result<T, (FsiStatus, String)> {
    r.map_err(|e| (FsiStatus::from(&e), e.to_string()))
}

fn null(what: &str) -> (FsiStatus, String) {
    (FsiStatus::NullPointer, format!("{what} is null"))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn fsi_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Copies the calling thread's last error message into `buf` (always
/// NUL-terminated when `len > 0`) and returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn fsi_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Default parameters: unit square, 64×64 cells, η = 1, λ = 0.5, ν = 1,
/// amplitude 0.5.
#[no_mangle]
pub extern "C" fn fsi_model_params_default() -> FsiModelParams {
    let g = GeometryConfig::default();
    let p = PhysicalParams::default();
    FsiModelParams {
        lx: g.lx,
        ly: g.ly,
        nx: g.nx,
        ny: g.ny,
        eta: p.eta,
        lambda: p.lambda,
        nu: p.nu,
        amplitude: 0.5,
    }
}

/// Assembles a model and stores a new handle in `*out`.
///
/// # Safety
/// `params` must point to a valid [`FsiModelParams`]; `out` must be a valid
/// pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn fsi_model_new(params: *const FsiModelParams, out: *mut *mut FsiModel) -> FsiStatus {
    guard(|| {
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let grid = core(build_grid(GeometryConfig::new(p.lx, p.ly, p.nx, p.ny)))?;
        let field = core(build_ambient_field(p.amplitude, &grid))?;
        let phys = PhysicalParams {
            eta: p.eta,
            lambda: p.lambda,
            nu: p.nu,
        };
        let pair = core(assemble(&grid, phys, &field))?;
        *out = Box::into_raw(Box::new(FsiModel { pair }));
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from [`fsi_model_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fsi_model_free(model: *mut FsiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; the output pointers must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn fsi_model_dims(
    model: *const FsiModel,
    full_dim: *mut usize,
    reduced_dim: *mut usize,
) -> FsiStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if let Some(o) = full_dim.as_mut() {
            *o = m.pair.dofs.full_dim();
        }
        if let Some(o) = reduced_dim.as_mut() {
            *o = m.pair.dim();
        }
        Ok(())
    })
}

/// Relative residual of the null vector, of `K` or of its transpose.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fsi_model_null_residual(model: *const FsiModel, adjoint: bool, out: *mut f64) -> FsiStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        *out = core(m.pair.null_residual(adjoint))?;
        Ok(())
    })
}

/// Energy-norm resolvent estimate at `iβ` on the null-vector complement.
///
/// # Safety
/// `model` must be a live handle; `norm` must be valid, `converged` may be null.
#[no_mangle]
pub unsafe extern "C" fn fsi_model_resolvent_norm(
    model: *const FsiModel,
    beta: f64,
    tol: f64,
    norm: *mut f64,
    converged: *mut bool,
) -> FsiStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let norm = norm.as_mut().ok_or_else(|| null("norm"))?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err((FsiStatus::InvalidArgument, format!("tol must be positive, got {tol}")));
        }
        let s = core(resolvent_norm(&m.pair, beta, tol))?;
        *norm = s.norm_estimate;
        if let Some(c) = converged.as_mut() {
            *c = s.converged;
        }
        Ok(())
    })
}

/// Largest real part among the `count` least-damped complement eigenvalues.
///
/// # Safety
/// `model` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fsi_model_spectral_abscissa(model: *const FsiModel, count: usize, out: *mut f64) -> FsiStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        if count == 0 {
            return Err((FsiStatus::InvalidArgument, "count must be positive".into()));
        }
        *out = core(spectral_abscissa_complement(&m.pair, count))?;
        Ok(())
    })
}

/// Crank–Nicolson run from seeded smooth data on the complement, settled
/// for `settle_time` (0 disables) with step `dt / 10`.
///
/// Energies at every step are written to `energies` when it is non-null and
/// `capacity` suffices; `*len` always receives the number of samples. A
/// short buffer yields `BUFFER_TOO_SMALL` and leaves `energies` untouched.
///
/// # Safety
/// `model` must be a live handle; `energies` must be null or hold
/// `capacity` doubles; `len` and `decay` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn fsi_model_simulate(
    model: *const FsiModel,
    seed: u64,
    settle_time: f64,
    t_end: f64,
    dt: f64,
    energies: *mut f64,
    capacity: usize,
    len: *mut usize,
    decay: *mut FsiDecay,
) -> FsiStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if !(settle_time >= 0.0 && settle_time.is_finite()) {
            return Err((FsiStatus::InvalidArgument, format!("settle_time must be nonnegative, got {settle_time}")));
        }
        let mut x = m.pair.random_smooth_complement(seed, false);
        if settle_time > 0.0 {
            x = core(settle(&m.pair, &x, settle_time, 0.1 * dt))?;
        }
        let rec = core(simulate_reduced(&m.pair, &x, t_end, dt))?;
        if let Some(l) = len.as_mut() {
            *l = rec.len();
        }
        if let Some(d) = decay.as_mut() {
            let fit = core(fit_decay(&rec, 0.5))?;
            *d = FsiDecay {
                delta: fit.delta,
                m: fit.m,
                r_squared: fit.r_squared,
                energy_balance_residual: rec.energy_balance_residual(),
                max_complement_defect: rec.max_complement_defect(),
                monotone: rec.is_monotone(1e-12),
            };
        }
        if !energies.is_null() {
            if capacity < rec.len() {
                return Err((
                    FsiStatus::BufferTooSmall,
                    format!("need {} doubles, buffer holds {capacity}", rec.len()),
                ));
            }
            std::ptr::copy_nonoverlapping(rec.energies.as_ptr(), energies, rec.len());
        }
        Ok(())
    })
}
