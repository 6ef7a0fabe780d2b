//! Exact linear propagators and the pointwise nonlinear flow.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::{ComplexField, StatePair};
use crate::grid::{GeometryMode, GridSpec};
use crate::spectral::{self, Wavevector};

/// Number of RK4 substeps per nonlinear step.
pub const NONLINEAR_SUBSTEPS: usize = 4;

/// Spectral factors of `S1(dt) = e^{i dt (Δ - 1)}` and
/// `S2(dt) = e^{i (dt/γ)(Δ - μ)}` for one grid and one `dt`.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: GridSpec,
    dt: f64,
    gamma: f64,
    mu: f64,
    factors_u: Vec<Complex64>,
    factors_v: Vec<Complex64>,
}

impl Propagator {
    pub fn new(grid: &GridSpec, gamma: f64, mu: f64, dt: f64) -> Result<Self> {
        if !dt.is_finite() {
            return Err(Error::config(format!("time step must be finite, got {dt}")));
        }
        let waves = spectral::spectral_wavevectors(grid);
        let phase = |w: &Wavevector, scale: f64, shift: f64| Complex64::from_polar(1.0, -scale * (w.norm_sq + shift));
        Ok(Propagator {
            grid: *grid,
            dt,
            gamma,
            mu,
            factors_u: waves.iter().map(|w| phase(w, dt, 1.0)).collect(),
            factors_v: waves.iter().map(|w| phase(w, dt / gamma, mu)).collect(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn matches(&self, state: &StatePair, dt: f64) -> bool {
        self.dt == dt && self.gamma == state.gamma() && self.mu == state.mu() && self.grid == *state.grid()
    }

    /// Advances `state` by this propagator's `dt`.
    pub fn apply(&self, state: &StatePair) -> Result<StatePair> {
        if !(self.gamma == state.gamma() && self.mu == state.mu() && self.grid == *state.grid()) {
            return Err(Error::structural("propagator was built for a different grid or parameters"));
        }
        Ok(StatePair {
            u: spectral::apply_factors(&state.u, &self.factors_u)?,
            v: spectral::apply_factors(&state.v, &self.factors_v)?,
            params: state.params,
            time: state.time + self.dt,
        })
    }
}

/// Exact free flow over `dt` (any sign).
pub fn linear_step(state: &StatePair, dt: f64) -> Result<StatePair> {
    if dt == 0.0 {
        return Ok(state.clone());
    }
    Propagator::new(state.grid(), state.gamma(), state.mu(), dt)?.apply(state)
}

/// `(u_t, v_t) = (i F1, i F2 / γ)` in real arithmetic.
#[inline(always)]
fn rhs(u: Complex64, v: Complex64, inv_gamma: f64) -> (Complex64, Complex64) {
    let (ur, ui, vr, vi) = (u.re, u.im, v.re, v.im);
    let a = ur * ur + ui * ui;
    let b = vr * vr + vi * vi;
    // conj(u)² v and u³
    let (u2r, u2i) = (ur * ur - ui * ui, 2.0 * ur * ui);
    let (c2v_r, c2v_i) = (u2r * vr + u2i * vi, u2r * vi - u2i * vr);
    let (u3r, u3i) = (u2r * ur - u2i * ui, u2r * ui + u2i * ur);
    let s1 = a / 9.0 + 2.0 * b;
    let f1r = s1 * ur + c2v_r / 3.0;
    let f1i = s1 * ui + c2v_i / 3.0;
    let s2 = 9.0 * b + 2.0 * a;
    let f2r = (s2 * vr + u3r / 9.0) * inv_gamma;
    let f2i = (s2 * vi + u3i / 9.0) * inv_gamma;
    (Complex64::new(-f1i, f1r), Complex64::new(-f2i, f2r))
}

#[inline]
fn rk4_point(mut u: Complex64, mut v: Complex64, h: f64, steps: usize, inv_gamma: f64) -> (Complex64, Complex64) {
    let (h2, h6) = (0.5 * h, h / 6.0);
    for _ in 0..steps {
        let (k1u, k1v) = rhs(u, v, inv_gamma);
        let (k2u, k2v) = rhs(u + k1u * h2, v + k1v * h2, inv_gamma);
        let (k3u, k3v) = rhs(u + k2u * h2, v + k2v * h2, inv_gamma);
        let (k4u, k4v) = rhs(u + k3u * h, v + k3v * h, inv_gamma);
        u += (k1u + 2.0 * (k2u + k3u) + k4u) * h6;
        v += (k1v + 2.0 * (k2v + k3v) + k4v) * h6;
    }
    (u, v)
}

/// Pointwise nonlinear flow over `dt` by classical RK4 with
/// [`NONLINEAR_SUBSTEPS`] internal substeps.
pub fn nonlinear_step(state: &StatePair, dt: f64) -> Result<StatePair> {
    if dt == 0.0 {
        return Ok(state.clone());
    }
    let h = dt / NONLINEAR_SUBSTEPS as f64;
    let inv_gamma = 1.0 / state.gamma();
    let (us, vs): (Vec<Complex64>, Vec<Complex64>) = state
        .u
        .samples()
        .par_iter()
        .zip(state.v.samples().par_iter())
        .map(|(&u, &v)| rk4_point(u, v, h, NONLINEAR_SUBSTEPS, inv_gamma))
        .unzip();
    let finite = |z: &Complex64| z.re.is_finite() && z.im.is_finite();
    if !(us.iter().all(finite) && vs.iter().all(finite)) {
        return Err(Error::NumericalFault { time: state.time, reason: "nonlinear substep produced a non-finite value".into() });
    }
    let grid = *state.grid();
    Ok(StatePair {
        u: ComplexField::from_raw(grid, us),
        v: ComplexField::from_raw(grid, vs),
        params: state.params,
        time: state.time + dt,
    })
}

/// Cached Strang stepper; the linear factors are rebuilt only when `dt`
/// changes.
#[derive(Debug, Clone, Default)]
pub struct Stepper {
    cache: Option<Propagator>,
}

impl Stepper {
    pub fn new() -> Self {
        Stepper { cache: None }
    }

    /// `N(dt/2) ∘ L(dt) ∘ N(dt/2)`.
    pub fn step(&mut self, state: &StatePair, dt: f64) -> Result<StatePair> {
        let t0 = state.time;
        if !self.cache.as_ref().is_some_and(|p| p.matches(state, dt)) {
            self.cache = Some(Propagator::new(state.grid(), state.gamma(), state.mu(), dt)?);
        }
        let prop = self.cache.as_ref().expect("set above");
        let half = nonlinear_step(state, 0.5 * dt)?;
        let lin = prop.apply(&half)?;
        let mut out = nonlinear_step(&lin, 0.5 * dt)?;
        out.time = t0 + dt;
        Ok(out)
    }
}

pub fn strang_step(state: &StatePair, dt: f64) -> Result<StatePair> {
    Stepper::new().step(state, dt)
}

/// Galilean map `u → e^{ix·ξ} e^{-it|ξ|²} u(x - 2tξ)`,
/// `v → e^{3ix·ξ} e^{-3it|ξ|²} v(x - 2tξ)`. The translation is a Fourier
/// phase, so `ξ` should be a multiple of `π / L` to keep the result periodic.
pub fn galilean_boost(state: &StatePair, xi: [f64; 3], t: f64) -> Result<StatePair> {
    let grid = *state.grid();
    if grid.mode() != GeometryMode::Cart3D {
        return Err(Error::UnsupportedMode { op: "galilean_boost", mode: grid.mode().as_str() });
    }
    let shift = [2.0 * t * xi[0], 2.0 * t * xi[1], 2.0 * t * xi[2]];
    let translate = |f: &ComplexField| {
        spectral::apply_multiplier(f, |w| {
            Complex64::from_polar(1.0, -(w.k[0] * shift[0] + w.k[1] * shift[1] + w.k[2] * shift[2]))
        })
    };
    let (mut u, mut v) = (translate(&state.u)?, translate(&state.v)?);
    let xi2 = xi.iter().map(|x| x * x).sum::<f64>();
    for ((zu, zv), p) in u.samples_mut().iter_mut().zip(v.samples_mut().iter_mut()).zip(grid.positions()) {
        let th = xi[0] * p[0] + xi[1] * p[1] + xi[2] * p[2] - t * xi2;
        *zu *= Complex64::from_polar(1.0, th);
        *zv *= Complex64::from_polar(1.0, 3.0 * th);
    }
    Ok(StatePair { u, v, params: state.params, time: state.time })
}

/// `(S1(-t) u, S2(-t) v)`: the state pulled back along the free flow.
pub fn scattering_profile(state: &StatePair, t: f64) -> Result<StatePair> {
    let mut out = linear_step(state, -t)?;
    out.time = state.time;
    Ok(out)
}

/// `(||a - b||²_{H¹})^{1/2}` summed over both components.
pub fn h1_distance(a: &StatePair, b: &StatePair) -> Result<f64> {
    let du = a.u.sub(&b.u)?;
    let dv = a.v.sub(&b.v)?;
    let l2 = spectral::l2_norm_sq(&du) + spectral::l2_norm_sq(&dv);
    let h1 = spectral::gradient_norm_sq(&du)? + spectral::gradient_norm_sq(&dv)?;
    Ok((l2 + h1).sqrt())
}
