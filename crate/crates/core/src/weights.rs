//! Localization weights.
//!
//! All cutoffs use the quintic smoothstep `s(t) = t^3 (10 - 15 t + 6 t^2)`:
//!
//! ```text
//! zeta(r)   = 2 on [0,1],  2 s(2 - r) on (1,2),  0 beyond
//! theta(r)  = ∫_0^r ∫_0^t zeta          (closed form below)
//! chi(r)    = 1 on [0,1-σ], s((1 - r)/σ) on (1-σ,1), 0 beyond
//! varrho(r) = 1 on [0,1/2], s(2(1 - r)) on (1/2,1), 0 beyond
//! ```
//!
//! The Morawetz family `Φ_R`, `Φ_{1,R}`, `Ψ_R`, `Θ_R` is built from FFT
//! self-convolutions of `χ_R²` on a Cartesian grid and stored as radial
//! tables with step `h/2`.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{GeometryMode, GridSpec};
use crate::spectral::{circular_convolution, lerp_table};

pub const DEFAULT_SIGMA: f64 = 0.1;

/// Quintic smoothstep, clamped to `[0, 1]`.
pub fn smoothstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

fn smoothstep_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

/// `∫_0^t s`.
fn smoothstep_int(t: f64) -> f64 {
    t.powi(4) * (2.5 + t * (-3.0 + t))
}

/// `∫_0^t ∫_0^τ s`.
fn smoothstep_int2(t: f64) -> f64 {
    t.powi(5) * (0.5 + t * (-0.5 + t / 7.0))
}

pub fn zeta(r: f64) -> f64 {
    if r <= 1.0 {
        2.0
    } else if r < 2.0 {
        2.0 * smoothstep(2.0 - r)
    } else {
        0.0
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::config(format!("radius must be non-negative, got {r}")));
    }
    Ok(())
}

fn theta_raw(r: f64) -> f64 {
    if r <= 1.0 {
        r * r
    } else if r < 2.0 {
        1.0 + 3.0 * (r - 1.0) - 2.0 / 7.0 + 2.0 * smoothstep_int2(2.0 - r)
    } else {
        26.0 / 7.0 + 3.0 * (r - 2.0)
    }
}

fn theta_prime_raw(r: f64) -> f64 {
    if r <= 1.0 {
        2.0 * r
    } else if r < 2.0 {
        3.0 - 2.0 * smoothstep_int(2.0 - r)
    } else {
        3.0
    }
}

/// `ϑ(r) = ∫_0^r ∫_0^τ ζ(s) ds dτ`.
pub fn vartheta(r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(theta_raw(r))
}

pub fn vartheta_prime(r: f64) -> Result<f64> {
    check_radius(r)?;
    Ok(theta_prime_raw(r))
}

/// `ϑ'(r) / r`, equal to 2 on the plateau (including `r = 0`).
fn theta_prime_over_r(r: f64) -> f64 {
    if r <= 1.0 {
        2.0
    } else {
        theta_prime_raw(r) / r
    }
}

pub fn chi(r: f64, sigma: f64) -> f64 {
    smoothstep((1.0 - r) / sigma)
}

pub fn chi_prime(r: f64, sigma: f64) -> f64 {
    -smoothstep_prime((1.0 - r) / sigma) / sigma
}

pub fn varrho(r: f64) -> f64 {
    smoothstep(2.0 * (1.0 - r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutoffKind {
    Zeta,
    Vartheta,
    Chi,
    Varrho,
}

/// A radial cutoff evaluated at `|x| / scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    pub kind: CutoffKind,
    pub scale: f64,
    pub sigma: f64,
}

impl CutoffProfile {
    pub fn new(kind: CutoffKind, scale: f64, sigma: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::config(format!("cutoff scale must be positive, got {scale}")));
        }
        if kind == CutoffKind::Chi && !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::config(format!("sigma must lie in (0, 1), got {sigma}")));
        }
        Ok(CutoffProfile { kind, scale, sigma })
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        check_radius(r)?;
        let t = r / self.scale;
        Ok(match self.kind {
            CutoffKind::Zeta => zeta(t),
            CutoffKind::Vartheta => theta_raw(t),
            CutoffKind::Chi => chi(t, self.sigma),
            CutoffKind::Varrho => varrho(t),
        })
    }
}

/// A weight `φ` sampled on a grid with analytic derivatives.
///
/// `gradient` follows the component layout of
/// [`crate::spectral::gradient`]; `second` is the second radial derivative
/// of the profile (`φ''_R(r)` or `ψ''_R(ρ)`).
#[derive(Debug, Clone, PartialEq)]
pub struct VirialWeight {
    pub scale: f64,
    pub phi: Vec<f64>,
    pub gradient: Vec<Vec<f64>>,
    pub laplacian: Vec<f64>,
    pub second: Vec<f64>,
}

fn check_scale(scale: f64, room: f64) -> Result<()> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::config(format!("weight scale must be positive, got {scale}")));
    }
    if 2.0 * scale > room {
        return Err(Error::config(format!("weight scale {scale} needs 2R <= {room}")));
    }
    Ok(())
}

/// `φ_R(x) = R² ϑ(|x| / R)` on any grid mode.
pub fn radial_virial_weight(scale: f64, grid: &GridSpec) -> Result<VirialWeight> {
    check_scale(scale, grid.extent())?;
    let pos = grid.positions();
    let n = pos.len();
    let mut phi = Vec::with_capacity(n);
    let mut lap = Vec::with_capacity(n);
    let mut second = Vec::with_capacity(n);
    let ncomp = match grid.mode() {
        GeometryMode::Radial3D => 1,
        GeometryMode::Cart3D => 3,
        GeometryMode::Cyl3D => 2,
    };
    let mut grad = vec![Vec::with_capacity(n); ncomp];
    for p in pos {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let t = r / scale;
        // φ'/r
        let q = theta_prime_over_r(t);
        phi.push(scale * scale * theta_raw(t));
        second.push(zeta(t));
        lap.push(zeta(t) + 2.0 * q);
        match grid.mode() {
            GeometryMode::Radial3D => grad[0].push(q * r),
            GeometryMode::Cart3D => {
                for (j, g) in grad.iter_mut().enumerate() {
                    g.push(q * p[j]);
                }
            }
            GeometryMode::Cyl3D => {
                grad[0].push(q * p[0]);
                grad[1].push(q * p[2]);
            }
        }
    }
    Ok(VirialWeight { scale, phi, gradient: grad, laplacian: lap, second })
}

/// `ψ_R(ρ) + z²` with `ψ_R = R² ϑ(ρ / R)` on a cylindrical grid.
pub fn cylindrical_weight(scale: f64, grid: &GridSpec) -> Result<VirialWeight> {
    if grid.mode() != GeometryMode::Cyl3D {
        return Err(Error::UnsupportedMode { op: "cylindrical_weight", mode: grid.mode().as_str() });
    }
    check_scale(scale, grid.extent())?;
    let pos = grid.positions();
    let n = pos.len();
    let mut w = VirialWeight {
        scale,
        phi: Vec::with_capacity(n),
        gradient: vec![Vec::with_capacity(n), Vec::with_capacity(n)],
        laplacian: Vec::with_capacity(n),
        second: Vec::with_capacity(n),
    };
    for p in pos {
        let (rho, z) = (p[0], p[2]);
        let t = rho / scale;
        let q = theta_prime_over_r(t);
        w.phi.push(scale * scale * theta_raw(t) + z * z);
        w.gradient[0].push(q * rho);
        w.gradient[1].push(2.0 * z);
        // two-dimensional Laplacian in y plus ∂_z² z² = 2
        w.laplacian.push(zeta(t) + q + 2.0);
        w.second.push(zeta(t));
    }
    Ok(w)
}

/// `P(x) = I - x x^T / |x|²`.
pub fn tangential_projector(x: [f64; 3]) -> Result<[[f64; 3]; 3]> {
    let n2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    if n2 == 0.0 || !n2.is_finite() {
        return Err(Error::UndefinedPoint(x));
    }
    let mut p = [[0.0; 3]; 3];
    for j in 0..3 {
        for k in 0..3 {
            p[j][k] = if j == k { 1.0 } else { 0.0 } - x[j] * x[k] / n2;
        }
    }
    Ok(p)
}

/// Radial profiles of the interaction-Morawetz weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MorawetzWeights {
    pub radius: f64,
    pub sigma: f64,
    pub grid: GridSpec,
    /// Table step; entry `m` sits at `r = m * dr`.
    pub dr: f64,
    pub phi: Vec<f64>,
    pub phi1: Option<Vec<f64>>,
    pub psi: Vec<f64>,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightsMetadata {
    pub radius: f64,
    pub sigma: f64,
    pub grid: GridSpec,
    pub grid_hash: String,
    pub table_step: f64,
    pub table_len: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightIdentityReport {
    /// `max |ΔΘ - 2Ψ - Φ|` over interior table points.
    pub laplacian_residual: f64,
    pub phi_max: f64,
    /// `max |Θ' - rΨ|`.
    pub gradient_residual: f64,
    pub min_psi_minus_phi: f64,
    pub min_phi: f64,
    pub min_psi: f64,
    /// Fitted `c` in `|Φ'| ≤ c / (σR)`.
    pub grad_phi_constant: f64,
    /// Fitted `c` in `|Ψ| ≤ c min(1, R/r)`.
    pub psi_decay_constant: f64,
    /// Fitted `c` in `|Ψ - Φ| ≤ (c/σ) min(r/R, R/r)`.
    pub psi_minus_phi_constant: f64,
    /// `max |Φ - Φ_1|` and its ratio to `σ`, when `Φ_1` was built.
    pub phi_minus_phi1: Option<f64>,
    pub phi_minus_phi1_over_sigma: Option<f64>,
}

/// `F[i] = ∫_0^{i dr} f` with the cubic rule
/// `∫_{x_i}^{x_{i+1}} f ≈ dr (-f_{i-1} + 13 f_i + 13 f_{i+1} - f_{i+2}) / 24`.
fn cumulative(m: usize, dr: f64, f: impl Fn(isize) -> f64) -> Vec<f64> {
    let mut out = vec![0.0; m];
    for i in 1..m {
        let j = (i - 1) as isize;
        out[i] = out[i - 1] + dr * (-f(j - 1) + 13.0 * f(j) + 13.0 * f(j + 1) - f(j + 2)) / 24.0;
    }
    out
}

/// Wraps an offset into `[-L, L)`.
pub(crate) fn wrap(d: f64, half: f64) -> f64 {
    d - 2.0 * half * ((d + half) / (2.0 * half)).floor()
}

/// Values of the line `f` shifted by half a sample, by a Fourier phase
/// shift (the Nyquist mode keeps its cosine part).
fn half_shift(line: &[f64]) -> Vec<f64> {
    let n = line.len();
    let mut planner = FftPlanner::<f64>::new();
    let mut buf: Vec<Complex64> = line.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut buf);
    for (q, z) in buf.iter_mut().enumerate() {
        let k = if q <= n / 2 { q as f64 } else { q as f64 - n as f64 };
        let phase = PI * k / n as f64;
        *z *= if q == n / 2 { Complex64::new(phase.cos(), 0.0) } else { Complex64::from_polar(1.0, phase) };
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter().map(|z| z.re / n as f64).collect()
}

impl MorawetzWeights {
    /// Builds `Φ_R` (and `Φ_{1,R}`) on `grid`, which must be Cartesian with
    /// half-width `L >= 2R`.
    pub fn build(radius: f64, sigma: f64, grid: &GridSpec) -> Result<Self> {
        Self::build_with(radius, sigma, grid, true)
    }

    pub fn build_with(radius: f64, sigma: f64, grid: &GridSpec, with_phi1: bool) -> Result<Self> {
        if grid.mode() != GeometryMode::Cart3D {
            return Err(Error::UnsupportedMode { op: "build_morawetz_weights", mode: grid.mode().as_str() });
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::config(format!("radius must be positive, got {radius}")));
        }
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::config(format!("sigma must lie in (0, 1), got {sigma}")));
        }
        let l = grid.extent();
        if l < 2.0 * radius {
            return Err(Error::config(format!("grid half-width {l} must be at least 2R = {}", 2.0 * radius)));
        }
        let n = grid.counts()[0];
        let h = grid.spacing()[0];
        let half = l;
        let chi2_at = |d: [f64; 3]| {
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            chi(r / radius, sigma).powi(2)
        };
        let offsets: Vec<[f64; 3]> = {
            let idx: Vec<f64> = (0..n).map(|q| wrap(q as f64 * h, half)).collect();
            let mut out = Vec::with_capacity(grid.len());
            for &a in &idx {
                for &b in &idx {
                    for &c in &idx {
                        out.push([a, b, c]);
                    }
                }
            }
            out
        };
        let field = ComplexField::from_fn(*grid, |p| Complex64::new(chi2_at(p), 0.0))?;
        let kernel: Vec<f64> = offsets.iter().map(|&d| chi2_at(d)).collect();
        let norm = h * h * h / (4.0 * PI / 3.0 * radius.powi(3));
        let phi_grid: Vec<f64> = circular_convolution(&field, &kernel)?.iter().map(|x| x * norm).collect();
        let phi = Self::radialize(&phi_grid, n);
        let phi1 = if with_phi1 {
            let kernel4: Vec<f64> = kernel.iter().map(|x| x * x).collect();
            let g: Vec<f64> = circular_convolution(&field, &kernel4)?.iter().map(|x| x * norm).collect();
            Some(Self::radialize(&g, n))
        } else {
            None
        };
        let dr = h / 2.0;
        let (psi, theta) = Self::integrate_tables(&phi, dr);
        Ok(MorawetzWeights { radius, sigma, grid: *grid, dr, phi, phi1, psi, theta })
    }

    /// Samples the positive x-axis (y = z = 0) at step h/2.
    fn radialize(values: &[f64], n: usize) -> Vec<f64> {
        let c = n / 2;
        let line: Vec<f64> = (0..n).map(|i| values[(i * n + c) * n + c]).collect();
        let shifted = half_shift(&line);
        let mut out = Vec::with_capacity(n);
        for i in c..n {
            out.push(line[i]);
            out.push(shifted[i]);
        }
        out
    }

    /// Cumulative four-point quadrature: `Ψ = (1/r)∫_0^r Φ`,
    /// `Θ = ∫_0^r s Ψ(s) ds`. `Φ` is even at the origin and vanishes past
    /// the table end.
    fn integrate_tables(phi: &[f64], dr: f64) -> (Vec<f64>, Vec<f64>) {
        let m = phi.len();
        let get = |i: isize| if i < 0 { phi[(-i) as usize] } else if (i as usize) < m { phi[i as usize] } else { 0.0 };
        let prim = cumulative(m, dr, get);
        let mut psi = vec![phi[0]; m];
        for i in 1..m {
            psi[i] = prim[i] / (i as f64 * dr);
        }
        // r Ψ(r) is odd at the origin and constant past the end
        let f = |i: isize| {
            if i < 0 {
                -prim[(-i) as usize]
            } else {
                prim[(i as usize).min(m - 1)]
            }
        };
        let theta = cumulative(m, dr, f);
        (psi, theta)
    }

    pub fn table_radii(&self) -> Vec<f64> {
        (0..self.phi.len()).map(|i| i as f64 * self.dr).collect()
    }

    fn r_max(&self) -> f64 {
        (self.phi.len() - 1) as f64 * self.dr
    }

    pub fn phi_at(&self, r: f64) -> f64 {
        if r > self.r_max() {
            return 0.0;
        }
        lerp_table(&self.phi, 0.0, self.dr, r)
    }

    /// Beyond the table `Φ = 0`, so `Ψ` decays like `1/r`.
    pub fn psi_at(&self, r: f64) -> f64 {
        let rm = self.r_max();
        if r > rm {
            return *self.psi.last().unwrap() * rm / r;
        }
        lerp_table(&self.psi, 0.0, self.dr, r)
    }

    pub fn theta_at(&self, r: f64) -> f64 {
        let rm = self.r_max();
        if r > rm {
            return *self.theta.last().unwrap() + *self.psi.last().unwrap() * rm * (r - rm);
        }
        lerp_table(&self.theta, 0.0, self.dr, r)
    }

    /// `∇Θ_R(d) = d Ψ_R(|d|)`.
    pub fn grad_theta(&self, d: [f64; 3]) -> [f64; 3] {
        let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
        let p = self.psi_at(r);
        [d[0] * p, d[1] * p, d[2] * p]
    }

    /// `∇Θ_R` at the wrapped offsets of a Cartesian grid, in FFT index
    /// order (index 0 is the zero offset).
    pub fn theta_gradient_kernel(&self, grid: &GridSpec) -> Result<[Vec<f64>; 3]> {
        if grid.mode() != GeometryMode::Cart3D {
            return Err(Error::UnsupportedMode { op: "theta_gradient_kernel", mode: grid.mode().as_str() });
        }
        let [n0, n1, n2] = grid.counts();
        let h = grid.spacing();
        let l = grid.extent();
        let ax = |n: usize, h: f64| -> Vec<f64> { (0..n).map(|q| wrap(q as f64 * h, l)).collect() };
        let (a, b, c) = (ax(n0, h[0]), ax(n1, h[1]), ax(n2, h[2]));
        let mut out = [Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len()), Vec::with_capacity(grid.len())];
        for &x in &a {
            for &y in &b {
                for &z in &c {
                    let g = self.grad_theta([x, y, z]);
                    for j in 0..3 {
                        out[j].push(g[j]);
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn metadata(&self) -> WeightsMetadata {
        WeightsMetadata {
            radius: self.radius,
            sigma: self.sigma,
            grid: self.grid,
            grid_hash: format!("{:016x}", self.grid.fingerprint()),
            table_step: self.dr,
            table_len: self.phi.len(),
        }
    }

    /// Writes `phi.dat`, `psi.dat`, `theta.dat` (and `phi1.dat`) as
    /// two-column `(r, value)` tables plus `weights.json`.
    pub fn export(&self, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let radii = self.table_radii();
        let mut tables: Vec<(&str, &[f64])> = vec![("phi", &self.phi), ("psi", &self.psi), ("theta", &self.theta)];
        if let Some(p1) = &self.phi1 {
            tables.push(("phi1", p1));
        }
        let mut paths = Vec::new();
        for (name, vals) in tables {
            let path = dir.join(format!("{name}.dat"));
            let mut f = std::io::BufWriter::new(std::fs::File::create(&path)?);
            writeln!(f, "# r {name}")?;
            for (r, v) in radii.iter().zip(vals) {
                writeln!(f, "{r:.16e} {v:.16e}")?;
            }
            f.flush()?;
            paths.push(path);
        }
        let meta = dir.join("weights.json");
        std::fs::write(&meta, serde_json::to_string_pretty(&self.metadata())?)?;
        paths.push(meta);
        Ok(paths)
    }

    pub fn verify(&self) -> WeightIdentityReport {
        let dr = self.dr;
        let m = self.phi.len();
        let (rr, ss) = (self.radius, self.sigma);
        let mut rep = WeightIdentityReport {
            laplacian_residual: 0.0,
            phi_max: self.phi.iter().fold(0.0f64, |a, b| a.max(b.abs())),
            gradient_residual: 0.0,
            min_psi_minus_phi: f64::INFINITY,
            min_phi: self.phi.iter().copied().fold(f64::INFINITY, f64::min),
            min_psi: self.psi.iter().copied().fold(f64::INFINITY, f64::min),
            grad_phi_constant: 0.0,
            psi_decay_constant: 0.0,
            psi_minus_phi_constant: 0.0,
            phi_minus_phi1: None,
            phi_minus_phi1_over_sigma: None,
        };
        for i in 0..m {
            let r = i as f64 * dr;
            let d = self.psi[i] - self.phi[i];
            rep.min_psi_minus_phi = rep.min_psi_minus_phi.min(d);
            rep.psi_decay_constant = rep.psi_decay_constant.max(self.psi[i].abs() / (1.0f64).min(rr / r));
            if i > 0 {
                let env = (r / rr).min(rr / r) / ss;
                rep.psi_minus_phi_constant = rep.psi_minus_phi_constant.max(d.abs() / env);
            }
            if i > 0 && i + 2 < m {
                // fourth-order central differences, Θ even at the origin
                let t = |k: isize| self.theta[k.unsigned_abs()];
                let k = i as isize;
                let t1 = (-t(k + 2) + 8.0 * t(k + 1) - 8.0 * t(k - 1) + t(k - 2)) / (12.0 * dr);
                let t2 = (-t(k + 2) + 16.0 * t(k + 1) - 30.0 * t(k) + 16.0 * t(k - 1) - t(k - 2)) / (12.0 * dr * dr);
                let lap = t2 + 2.0 * t1 / r;
                rep.laplacian_residual = rep.laplacian_residual.max((lap - 2.0 * self.psi[i] - self.phi[i]).abs());
                rep.gradient_residual = rep.gradient_residual.max((t1 - r * self.psi[i]).abs());
                let dphi = (self.phi[i + 1] - self.phi[i - 1]) / (2.0 * dr);
                rep.grad_phi_constant = rep.grad_phi_constant.max(dphi.abs() * ss * rr);
            }
        }
        if let Some(p1) = &self.phi1 {
            let d = self.phi.iter().zip(p1).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
            rep.phi_minus_phi1 = Some(d);
            rep.phi_minus_phi1_over_sigma = Some(d / ss);
        }
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn vartheta_closed_form() {
        assert_eq!(vartheta(0.0).unwrap(), 0.0);
        assert_eq!(vartheta_prime(0.0).unwrap(), 0.0);
        assert_eq!(vartheta(0.5).unwrap(), 0.25);
        assert!(vartheta(-1.0).is_err());
        // 10^6-point midpoint quadrature of ζ and of ϑ'
        let n = 1_000_000;
        let h = 3.0 / n as f64;
        let mut slope = 0.0;
        let mut value = 0.0;
        for i in 0..n {
            let r = (i as f64 + 0.5) * h;
            value += theta_prime_raw(r) * h;
            slope += zeta(r) * h;
        }
        assert!((slope - 3.0).abs() < 1e-9);
        assert!((vartheta_prime(2.5).unwrap() - 3.0).abs() < 1e-15);
        assert!((value - vartheta(3.0).unwrap()).abs() < 1e-9);
        // continuity at the joints
        for r in [1.0, 2.0] {
            assert!((theta_raw(r - 1e-12) - theta_raw(r + 1e-12)).abs() < 1e-10);
            assert!((theta_prime_raw(r - 1e-12) - theta_prime_raw(r + 1e-12)).abs() < 1e-10);
        }
    }

    #[test]
    fn cutoff_shapes() {
        let s = 0.1;
        assert_eq!(chi(0.89, s), 1.0);
        assert_eq!(chi(1.0, s), 0.0);
        let mut worst = 0.0f64;
        for i in 0..=100_000 {
            let r = i as f64 * 2e-5;
            assert!((0.0..=2.0).contains(&zeta(r)));
            assert!(zeta(r + 2e-5) <= zeta(r));
            assert!(chi(r + 2e-5, s) <= chi(r, s) + 1e-14);
            assert!((0.0..=1.0).contains(&varrho(r)));
            worst = worst.max(chi_prime(r, s).abs());
        }
        assert!(worst <= 4.0 / s);
        assert!((worst - 15.0 / 8.0 / s).abs() < 1e-3);
        assert_eq!(varrho(0.5), 1.0);
        assert_eq!(varrho(1.0), 0.0);
        let p = CutoffProfile::new(CutoffKind::Vartheta, 2.0, 0.1).unwrap();
        assert_eq!(p.eval(1.0).unwrap(), 0.25);
        assert!(CutoffProfile::new(CutoffKind::Chi, 1.0, 1.5).is_err());
    }

    #[test]
    fn virial_weight_bounds() {
        let g = GridSpec::radial(512, 20.0).unwrap();
        let w = radial_virial_weight(4.0, &g).unwrap();
        for (i, r) in g.radii().into_iter().enumerate() {
            if r <= 4.0 {
                assert!((w.phi[i] - r * r).abs() < 1e-12 * r * r.max(1.0));
            }
            assert!(w.second[i] <= 2.0 && w.second[i] >= 0.0);
            assert!(6.0 - w.laplacian[i] >= -1e-12);
            assert!(2.0 - w.gradient[0][i] / r >= -1e-12);
            if r >= 8.0 {
                assert!((w.gradient[0][i] - 12.0).abs() < 1e-12);
            }
        }
        assert!(radial_virial_weight(11.0, &g).is_err());
        let c = GridSpec::cartesian(16, 8.0).unwrap();
        let wc = radial_virial_weight(2.0, &c).unwrap();
        assert!(wc.laplacian.iter().all(|&x| x <= 6.0 + 1e-12));
    }

    #[test]
    fn virial_weight_scaling() {
        for r in [0.3, 1.3, 1.9, 3.5, 7.0] {
            let a = 4.0 * 4.0 * theta_raw(r / 4.0);
            let b = 8.0 * 8.0 * theta_raw(2.0 * r / 8.0);
            assert!((b - 4.0 * a).abs() <= 1e-12 * b.abs());
        }
    }

    #[test]
    fn cylindrical_weight_plateau() {
        let g = GridSpec::cylindrical(64, 32, 8.0, 4.0).unwrap();
        let w = cylindrical_weight(2.0, &g).unwrap();
        for (i, p) in g.positions().into_iter().enumerate() {
            if p[0] <= 2.0 {
                let r2 = p[0] * p[0] + p[2] * p[2];
                assert!((w.phi[i] - r2).abs() < 1e-12 * r2.max(1.0));
                assert!((w.laplacian[i] - 6.0).abs() < 1e-12);
            }
            assert!(w.second[i] <= 2.0);
        }
        assert!(cylindrical_weight(2.0, &GridSpec::radial(64, 8.0).unwrap()).is_err());
    }

    #[test]
    fn projector_examples() {
        let p = tangential_projector([1.0, 0.0, 0.0]).unwrap();
        assert_eq!(p, [[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(matches!(tangential_projector([0.0; 3]), Err(Error::UndefinedPoint(_))));
    }

    #[test]
    fn morawetz_profiles() {
        let g = GridSpec::cartesian(64, 4.0).unwrap();
        let w = MorawetzWeights::build(2.0, 0.25, &g).unwrap();
        // Φ(0) = ∫χ⁴ / (ω₃R³), checked by 1D radial quadrature
        let n = 100_000;
        let h = 1.0 / n as f64;
        let chi4: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                3.0 * r * r * chi(r, 0.25).powi(4) * h
            })
            .sum();
        assert!((w.phi[0] - chi4).abs() < 2e-3, "{} {chi4}", w.phi[0]);
        assert!(w.phi[0] >= 0.75f64.powi(3) && w.phi[0] <= 1.0 + 1e-9);
        for (r, v) in w.table_radii().iter().zip(&w.phi) {
            if *r >= 4.0 {
                assert!(v.abs() < 1e-12);
            }
        }
        let rep = w.verify();
        assert!(rep.min_psi_minus_phi >= -1e-10);
        assert!(rep.laplacian_residual <= 1e-3 * rep.phi_max);
        assert!(rep.psi_decay_constant <= 2.0);
        assert!(MorawetzWeights::build(3.0, 0.1, &g).is_err());
        assert!(MorawetzWeights::build(1.0, 1.0, &g).is_err());
    }

    #[test]
    fn export_writes_tables() {
        let g = GridSpec::cartesian(16, 4.0).unwrap();
        let w = MorawetzWeights::build(1.5, 0.2, &g).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = w.export(dir.path()).unwrap();
        assert_eq!(paths.len(), 5);
        let text = std::fs::read_to_string(dir.path().join("psi.dat")).unwrap();
        assert_eq!(text.lines().count(), w.psi.len() + 1);
        let meta: WeightsMetadata =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("weights.json")).unwrap()).unwrap();
        assert_eq!(meta.grid_hash, format!("{:016x}", g.fingerprint()));
    }

    proptest! {
        #[test]
        fn projector_is_idempotent(x in -5.0f64..5.0, y in -5.0f64..5.0, z in 0.1f64..5.0) {
            let p = tangential_projector([x, y, z]).unwrap();
            let v = [x, y, z];
            let mut tr = 0.0;
            for j in 0..3 {
                tr += p[j][j];
                let pv: f64 = (0..3).map(|k| p[j][k] * v[k]).sum();
                prop_assert!(pv.abs() < 1e-12);
                for k in 0..3 {
                    prop_assert_eq!(p[j][k], p[k][j]);
                    let pp: f64 = (0..3).map(|l| p[j][l] * p[l][k]).sum();
                    prop_assert!((pp - p[j][k]).abs() < 1e-14);
                }
            }
            prop_assert!((tr - 2.0).abs() < 1e-14);
        }

        #[test]
        fn theta_convex_on_transition(r in 0.0f64..1.99) {
            prop_assert!(theta_prime_raw(r + 0.01) >= theta_prime_raw(r));
        }
    }
}
