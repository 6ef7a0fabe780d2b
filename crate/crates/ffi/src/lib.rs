//! C ABI over `snls-core`.
//!
//! Objects live behind opaque handles created by `snls_*_new`/`_solve`
//! functions and released with the matching `_free`. Every fallible call
//! returns an [`SnlsStatus`]; the message of the last failure on the
//! calling thread is available from [`snls_last_error`]. Panics never cross
//! the boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use num_complex::Complex64;
use snls_core::classify::{self, Basis, Caveat, ClassifyOptions, Symmetry, VerdictKind};
use snls_core::evolution::{self, EvolutionConfig, Termination, TrajectoryRecord};
use snls_core::functionals::FunctionalReport;
use snls_core::groundstate::{self, Branch, GroundStateConstants, GroundStateSolution, SolverOptions};
use snls_core::spectral::snapshot;
use snls_core::{ComplexField, Error, GridSpec, StatePair};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnlsStatus {
    Ok = 0,
    NullPointer = 1,
    Validation = 2,
    NumericalFault = 3,
    Convergence = 4,
    Io = 5,
    Unsupported = 6,
    BufferTooSmall = 7,
    Panic = 8,
    Other = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnlsTermination {
    HorizonReached = 0,
    BlowUpDetected = 1,
    DtFloor = 2,
    NumericalFault = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnlsSymmetry {
    Radial = 0,
    Cylindrical = 1,
    None = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnlsVerdictKind {
    GlobalScattering = 0,
    BlowUp = 1,
    Indeterminate = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnlsBasis {
    EnergyNegative = 0,
    BelowThreshold = 1,
    AboveThreshold = 2,
    Boundary = 3,
}

/// Bits of `SnlsVerdict::caveats`.
pub const SNLS_CAVEAT_NON_RADIAL_GAMMA_FAR: u32 = 1;
pub const SNLS_CAVEAT_NO_SYMMETRY_BLOW_UP_OPEN: u32 = 2;
pub const SNLS_CAVEAT_ENERGY_ABOVE_THRESHOLD: u32 = 4;

/// Opaque grid handle.
pub struct SnlsGrid {
    inner: GridSpec,
}

/// Opaque field pair handle.
pub struct SnlsState {
    inner: StatePair,
}

/// Opaque ground-state handle.
pub struct SnlsGroundState {
    inner: GroundStateSolution,
}

/// Opaque trajectory handle.
pub struct SnlsTrajectory {
    inner: TrajectoryRecord,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SnlsFunctionals {
    pub time: f64,
    pub mass_mu: f64,
    pub mass_3gamma: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy_mu: f64,
    pub pohozaev: f64,
    pub action_omega: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct SnlsGroundStateConstants {
    pub gamma: f64,
    pub k_gs: f64,
    pub m_gs: f64,
    pub e_gs: f64,
    pub p_gs: f64,
    pub c_opt: f64,
    pub residual_1: f64,
    pub residual_2: f64,
    pub iterations: usize,
    /// 1 when the profile lies on the `(0, g)` branch.
    pub semi_trivial: i32,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SnlsEvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    pub output_stride: usize,
    pub blowup_trigger: f64,
    pub adapt: bool,
    pub growth_trigger: f64,
    pub dt_floor: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SnlsVerdict {
    pub kind: SnlsVerdictKind,
    pub basis: SnlsBasis,
    /// Bitwise OR of `SNLS_CAVEAT_*`.
    pub caveats: u32,
    pub energy_mu: f64,
    pub energy_product: f64,
    pub energy_threshold: f64,
    pub kinetic_product: f64,
    pub kinetic_threshold: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SnlsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Validation(_) | Error::Configuration(_) | Error::UnknownSeries(_) | Error::Structural(_) | Error::Seed(_) => {
                SnlsStatus::Validation
            }
            Error::UnsupportedMode { .. } | Error::UndefinedPoint(_) => SnlsStatus::Unsupported,
            Error::NumericalFault { .. } => SnlsStatus::NumericalFault,
            Error::Convergence { .. } | Error::Triviality => SnlsStatus::Convergence,
            Error::Io(_) | Error::Snapshot(_) | Error::Json(_) => SnlsStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail<T>(status: SnlsStatus, msg: &str) -> Result<T, Failure> {
    Err(Failure(status, msg.to_string()))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SnlsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SnlsStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            SnlsStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(SnlsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure(SnlsStatus::NullPointer, format!("{what} is null")))
}

unsafe fn path_arg(p: *const c_char) -> Result<PathBuf, Failure> {
    if p.is_null() {
        return fail(SnlsStatus::NullPointer, "path is null");
    }
    match CStr::from_ptr(p).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => fail(SnlsStatus::Validation, "path is not UTF-8"),
    }
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn snls_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the last error message of this thread into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns the full length
/// including the terminator.
#[no_mangle]
pub unsafe extern "C" fn snls_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let bytes = e.borrow();
        let bytes = bytes.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

fn make_grid(out: *mut *mut SnlsGrid, build: impl FnOnce() -> snls_core::Result<GridSpec>) -> SnlsStatus {
    guard(|| {
        let out = unsafe { out_ptr(out, "out")? };
        *out = boxed(SnlsGrid { inner: build()? });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snls_grid_radial(points: usize, extent: f64, out: *mut *mut SnlsGrid) -> SnlsStatus {
    make_grid(out, || GridSpec::radial(points, extent))
}

#[no_mangle]
pub unsafe extern "C" fn snls_grid_cartesian(points: usize, extent: f64, out: *mut *mut SnlsGrid) -> SnlsStatus {
    make_grid(out, || GridSpec::cartesian(points, extent))
}

#[no_mangle]
pub unsafe extern "C" fn snls_grid_cylindrical(
    rho_points: usize,
    z_points: usize,
    rho_extent: f64,
    z_extent: f64,
    out: *mut *mut SnlsGrid,
) -> SnlsStatus {
    make_grid(out, || GridSpec::cylindrical(rho_points, z_points, rho_extent, z_extent))
}

/// Number of samples per component; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn snls_grid_len(grid: *const SnlsGrid) -> usize {
    grid.as_ref().map_or(0, |g| g.inner.len())
}

#[no_mangle]
pub unsafe extern "C" fn snls_grid_free(grid: *mut SnlsGrid) {
    if !grid.is_null() {
        drop(Box::from_raw(grid));
    }
}

unsafe fn read_component(re: *const f64, im: *const f64, len: usize, grid: GridSpec) -> Result<ComplexField, Failure> {
    if re.is_null() {
        return fail(SnlsStatus::NullPointer, "real part is null");
    }
    let re = std::slice::from_raw_parts(re, len);
    let samples = if im.is_null() {
        re.iter().map(|&x| Complex64::new(x, 0.0)).collect()
    } else {
        let im = std::slice::from_raw_parts(im, len);
        re.iter().zip(im).map(|(&a, &b)| Complex64::new(a, b)).collect()
    };
    Ok(ComplexField::new(grid, samples)?)
}

/// Builds a pair from sample arrays of length `len` (the grid length).
/// Imaginary parts may be null.
#[no_mangle]
pub unsafe extern "C" fn snls_state_new(
    grid: *const SnlsGrid,
    gamma: f64,
    mu: f64,
    u_re: *const f64,
    u_im: *const f64,
    v_re: *const f64,
    v_im: *const f64,
    len: usize,
    out: *mut *mut SnlsState,
) -> SnlsStatus {
    guard(|| {
        let grid = deref(grid, "grid")?.inner;
        let out = out_ptr(out, "out")?;
        if len != grid.len() {
            return fail(SnlsStatus::Validation, &format!("expected {} samples, got {len}", grid.len()));
        }
        let u = read_component(u_re, u_im, len, grid)?;
        let v = read_component(v_re, v_im, len, grid)?;
        *out = boxed(SnlsState { inner: StatePair::new(u, v, gamma, mu)? });
        Ok(())
    })
}

/// Copies the samples out; any of the four buffers may be null.
#[no_mangle]
pub unsafe extern "C" fn snls_state_copy(
    state: *const SnlsState,
    u_re: *mut f64,
    u_im: *mut f64,
    v_re: *mut f64,
    v_im: *mut f64,
    len: usize,
) -> SnlsStatus {
    guard(|| {
        let s = &deref(state, "state")?.inner;
        let n = s.grid().len();
        if len < n {
            return fail(SnlsStatus::BufferTooSmall, &format!("need {n} samples, buffer holds {len}"));
        }
        for (field, re, im) in [(&s.u, u_re, u_im), (&s.v, v_re, v_im)] {
            for (i, z) in field.samples().iter().enumerate() {
                if !re.is_null() {
                    *re.add(i) = z.re;
                }
                if !im.is_null() {
                    *im.add(i) = z.im;
                }
            }
        }
        Ok(())
    })
}

/// Time stamp of the pair; NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn snls_state_time(state: *const SnlsState) -> f64 {
    state.as_ref().map_or(f64::NAN, |s| s.inner.time)
}

#[no_mangle]
pub unsafe extern "C" fn snls_state_functionals(state: *const SnlsState, omega: f64, out: *mut SnlsFunctionals) -> SnlsStatus {
    guard(|| {
        let s = &deref(state, "state")?.inner;
        let out = out_ptr(out, "out")?;
        let r = FunctionalReport::compute(s, omega)?;
        *out = SnlsFunctionals {
            time: r.time,
            mass_mu: r.mass_mu,
            mass_3gamma: r.mass_3gamma,
            kinetic: r.kinetic,
            potential: r.potential,
            energy_mu: r.energy_mu,
            pohozaev: r.pohozaev,
            action_omega: r.action_omega,
        };
        Ok(())
    })
}

/// Writes the pair as a CRF1 snapshot.
#[no_mangle]
pub unsafe extern "C" fn snls_state_write(state: *const SnlsState, path: *const c_char) -> SnlsStatus {
    guard(|| {
        let s = &deref(state, "state")?.inner;
        snapshot::write_pair(&path_arg(path)?, s)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snls_state_read(path: *const c_char, gamma: f64, mu: f64, out: *mut *mut SnlsState) -> SnlsStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = boxed(SnlsState { inner: snapshot::read_pair(&path_arg(path)?, gamma, mu)? });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snls_state_free(state: *mut SnlsState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Solves for the ground state at `gamma` on a radial grid from the default
/// seed. `tol <= 0` and `max_iter == 0` select the defaults. Returns
/// `SNLS_STATUS_CONVERGENCE` if the iteration stalls.
#[no_mangle]
pub unsafe extern "C" fn snls_ground_state_solve(
    gamma: f64,
    grid: *const SnlsGrid,
    tol: f64,
    max_iter: usize,
    out: *mut *mut SnlsGroundState,
) -> SnlsStatus {
    guard(|| {
        let grid = deref(grid, "grid")?.inner;
        let out = out_ptr(out, "out")?;
        let mut opts = SolverOptions::default();
        if tol > 0.0 {
            opts.tol = tol;
        }
        if max_iter > 0 {
            opts.max_iter = max_iter;
        }
        let gs = groundstate::solve_ground_state(gamma, &grid, None, &opts)?;
        if !gs.converged() {
            return fail(
                SnlsStatus::Convergence,
                &format!("no convergence after {} iterations (residuals {:.3e}, {:.3e})", gs.iterations, gs.residual_1, gs.residual_2),
            );
        }
        *out = boxed(SnlsGroundState { inner: gs });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snls_ground_state_constants(
    gs: *const SnlsGroundState,
    out: *mut SnlsGroundStateConstants,
) -> SnlsStatus {
    guard(|| {
        let gs = &deref(gs, "ground state")?.inner;
        let out = out_ptr(out, "out")?;
        let c = &gs.constants;
        *out = SnlsGroundStateConstants {
            gamma: c.gamma,
            k_gs: c.k_gs,
            m_gs: c.m_gs,
            e_gs: c.e_gs,
            p_gs: c.p_gs,
            c_opt: c.c_opt,
            residual_1: c.residuals[0],
            residual_2: c.residuals[1],
            iterations: c.iterations,
            semi_trivial: i32::from(gs.branch == Branch::SemiTrivial),
        };
        Ok(())
    })
}

/// The profile `(φ, ψ)` as a new pair with `μ = 3γ`.
#[no_mangle]
pub unsafe extern "C" fn snls_ground_state_profile(gs: *const SnlsGroundState, out: *mut *mut SnlsState) -> SnlsStatus {
    guard(|| {
        let gs = &deref(gs, "ground state")?.inner;
        let out = out_ptr(out, "out")?;
        *out = boxed(SnlsState { inner: gs.state() });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snls_ground_state_free(gs: *mut SnlsGroundState) {
    if !gs.is_null() {
        drop(Box::from_raw(gs));
    }
}

#[no_mangle]
pub extern "C" fn snls_evolve_options_default() -> SnlsEvolveOptions {
    let c = EvolutionConfig::new(1e-3, 1.0);
    SnlsEvolveOptions {
        dt: c.dt,
        t_end: c.t_end,
        output_stride: c.output_stride,
        blowup_trigger: c.blowup_trigger,
        adapt: c.adapt.enabled,
        growth_trigger: c.adapt.growth_trigger,
        dt_floor: c.adapt.dt_floor,
    }
}

/// Evolves `state`. A trajectory is produced for every termination; a
/// numerical fault additionally returns `SNLS_STATUS_NUMERICAL_FAULT` with
/// `*out` still set.
#[no_mangle]
pub unsafe extern "C" fn snls_evolve(
    state: *const SnlsState,
    options: *const SnlsEvolveOptions,
    out: *mut *mut SnlsTrajectory,
) -> SnlsStatus {
    guard(|| {
        let s = &deref(state, "state")?.inner;
        let o = *deref(options, "options")?;
        let out = out_ptr(out, "out")?;
        let mut cfg = EvolutionConfig::new(o.dt, o.t_end);
        cfg.output_stride = o.output_stride;
        cfg.blowup_trigger = o.blowup_trigger;
        cfg.adapt.enabled = o.adapt;
        cfg.adapt.growth_trigger = o.growth_trigger;
        cfg.adapt.dt_floor = o.dt_floor;
        let record = evolution::evolve(s, &cfg)?;
        let check = record.check();
        *out = boxed(SnlsTrajectory { inner: record });
        check.map_err(Failure::from)
    })
}

#[no_mangle]
pub unsafe extern "C" fn snls_trajectory_termination(t: *const SnlsTrajectory, out: *mut SnlsTermination) -> SnlsStatus {
    guard(|| {
        let t = &deref(t, "trajectory")?.inner;
        *out_ptr(out, "out")? = match t.termination {
            Termination::HorizonReached => SnlsTermination::HorizonReached,
            Termination::BlowUpDetected => SnlsTermination::BlowUpDetected,
            Termination::DtFloor => SnlsTermination::DtFloor,
            Termination::NumericalFault => SnlsTermination::NumericalFault,
        };
        Ok(())
    })
}

/// Number of reports; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn snls_trajectory_len(t: *const SnlsTrajectory) -> usize {
    t.as_ref().map_or(0, |t| t.inner.reports.len())
}

/// Copies the named series (`time`, a functional or a monitor) into `out`.
#[no_mangle]
pub unsafe extern "C" fn snls_trajectory_series(
    t: *const SnlsTrajectory,
    name: *const c_char,
    out: *mut f64,
    len: usize,
) -> SnlsStatus {
    guard(|| {
        let t = &deref(t, "trajectory")?.inner;
        let name = deref(name, "name")?;
        let name = CStr::from_ptr(name).to_str().map_err(|_| Failure(SnlsStatus::Validation, "name is not UTF-8".into()))?;
        let values = t.series(name)?;
        if out.is_null() {
            return fail(SnlsStatus::NullPointer, "out is null");
        }
        if len < values.len() {
            return fail(SnlsStatus::BufferTooSmall, &format!("need {} values, buffer holds {len}", values.len()));
        }
        ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snls_trajectory_final_state(t: *const SnlsTrajectory, out: *mut *mut SnlsState) -> SnlsStatus {
    guard(|| {
        let t = &deref(t, "trajectory")?.inner;
        *out_ptr(out, "out")? = boxed(SnlsState { inner: t.final_state.clone() });
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn snls_trajectory_free(t: *mut SnlsTrajectory) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// Threshold classification with the default band and energy convention.
#[no_mangle]
pub unsafe extern "C" fn snls_classify(
    state: *const SnlsState,
    constants: *const SnlsGroundStateConstants,
    symmetry: SnlsSymmetry,
    out: *mut SnlsVerdict,
) -> SnlsStatus {
    guard(|| {
        let s = &deref(state, "state")?.inner;
        let c = deref(constants, "constants")?;
        let out = out_ptr(out, "out")?;
        let gs = GroundStateConstants {
            gamma: c.gamma,
            k_gs: c.k_gs,
            m_gs: c.m_gs,
            e_gs: c.e_gs,
            p_gs: c.p_gs,
            c_opt: c.c_opt,
            residuals: [c.residual_1, c.residual_2],
            iterations: c.iterations,
        };
        let sym = match symmetry {
            SnlsSymmetry::Radial => Symmetry::Radial,
            SnlsSymmetry::Cylindrical => Symmetry::Cylindrical,
            SnlsSymmetry::None => Symmetry::None,
        };
        let v = classify::classify(s, &gs, sym, &ClassifyOptions::default())?;
        let caveats = v
            .caveats
            .iter()
            .map(|c| match c {
                Caveat::NonRadialGammaFar => SNLS_CAVEAT_NON_RADIAL_GAMMA_FAR,
                Caveat::NoSymmetryBlowUpOpen => SNLS_CAVEAT_NO_SYMMETRY_BLOW_UP_OPEN,
                Caveat::EnergyAboveThreshold => SNLS_CAVEAT_ENERGY_ABOVE_THRESHOLD,
            })
            .fold(0, |a, b| a | b);
        *out = SnlsVerdict {
            kind: match v.kind {
                VerdictKind::GlobalScattering => SnlsVerdictKind::GlobalScattering,
                VerdictKind::BlowUp => SnlsVerdictKind::BlowUp,
                VerdictKind::Indeterminate => SnlsVerdictKind::Indeterminate,
            },
            basis: match v.basis {
                Basis::EnergyNegative => SnlsBasis::EnergyNegative,
                Basis::BelowThreshold => SnlsBasis::BelowThreshold,
                Basis::AboveThreshold => SnlsBasis::AboveThreshold,
                Basis::Boundary => SnlsBasis::Boundary,
            },
            caveats,
            energy_mu: v.energy_mu,
            energy_product: v.energy_product,
            energy_threshold: v.energy_threshold,
            kinetic_product: v.kinetic_product,
            kinetic_threshold: v.kinetic_threshold,
        };
        Ok(())
    })
}
