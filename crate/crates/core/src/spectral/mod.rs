//! Quadrature and spectral differential operators.
//!
//! Cartesian grids use the periodic FFT. Radial grids work with
//! `w = r u`, whose odd extension to `[-L, L)` is differentiated and
//! propagated with an FFT of length `2N` (a sine transform in disguise;
//! the extension enforces `w(0) = w(L) = 0`). Cylindrical grids use the
//! FFT in `z` and conservative second-order differences in `rho`.

mod plan;
pub mod snapshot;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::{GeometryMode, GridSpec};

use plan::{fft_axis, plan_for, CylBasis, Plan, PlanKind};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// A wavevector of the spectral basis. Radial grids report `[|k|, 0, 0]`,
/// cylindrical grids `[sqrt(lambda_rho), 0, k_z]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavevector {
    pub k: [f64; 3],
    pub norm_sq: f64,
}

/// Quadrature of a real integrand with the grid's measure.
pub fn integrate(grid: &GridSpec, values: &[f64]) -> Result<f64> {
    if values.len() != grid.len() {
        return Err(Error::structural(format!(
            "integrand has {} values, grid {} needs {}",
            values.len(),
            grid,
            grid.len()
        )));
    }
    Ok(dot_volumes(grid, values))
}

pub(crate) fn dot_volumes(grid: &GridSpec, values: &[f64]) -> f64 {
    let vol = grid.cell_volumes();
    vol.iter().zip(values).map(|(w, f)| w * f).sum()
}

/// `||f||^2_{L^2}`.
pub fn l2_norm_sq(field: &ComplexField) -> f64 {
    dot_volumes(field.grid(), &field.norm_sqr_values())
}

fn plan(field: &ComplexField) -> std::sync::Arc<Plan> {
    plan_for(field.grid())
}

fn radial_forward(n: usize, fft: &plan::FftHandle, r: &[f64], u: &[Complex64]) -> Vec<Complex64> {
    let mut buf = vec![ZERO; 2 * n];
    for j in 0..n {
        let w = u[j] * r[j];
        buf[n + j] = w;
        buf[n - 1 - j] = -w;
    }
    fft.process(&mut buf);
    buf
}

/// Returns `w` on the positive half-line.
fn radial_inverse_w(n: usize, fft: &plan::FftHandle, mut spec: Vec<Complex64>) -> Vec<Complex64> {
    fft.process(&mut spec);
    let scale = 1.0 / (2 * n) as f64;
    spec[n..].iter().map(|z| z * scale).collect()
}

fn cart_forward(dims: [usize; 3], fwd: &[plan::FftHandle; 3], data: &mut [Complex64]) {
    for axis in (0..3).rev() {
        fft_axis(data, dims, axis, &fwd[axis]);
    }
}

fn cart_inverse(dims: [usize; 3], inv: &[plan::FftHandle; 3], data: &mut [Complex64]) {
    for axis in (0..3).rev() {
        fft_axis(data, dims, axis, &inv[axis]);
    }
    let scale = 1.0 / data.len() as f64;
    data.par_iter_mut().for_each(|z| *z *= scale);
}

fn z_transform(data: &mut [Complex64], nz: usize, fft: &plan::FftHandle) {
    data.par_chunks_mut(nz).for_each(|line| fft.process(line));
}

fn cyl_basis<'a>(plan: &'a Plan) -> &'a CylBasis {
    match &plan.kind {
        PlanKind::Cyl { rho, basis, .. } => {
            basis.get_or_init(|| CylBasis::build(rho, plan.grid.spacing()[0]))
        }
        _ => unreachable!(),
    }
}

/// Wavevectors of the spectral basis, in the same order as the factors
/// accepted by [`apply_factors`].
pub fn spectral_wavevectors(grid: &GridSpec) -> Vec<Wavevector> {
    let plan = plan_for(grid);
    match &plan.kind {
        PlanKind::Radial { k, .. } => k
            .iter()
            .map(|&q| Wavevector { k: [q.abs(), 0.0, 0.0], norm_sq: q * q })
            .collect(),
        PlanKind::Cart { k, .. } => {
            let mut out = Vec::with_capacity(grid.len());
            for &a in &k[0] {
                for &b in &k[1] {
                    for &c in &k[2] {
                        out.push(Wavevector { k: [a, b, c], norm_sq: a * a + b * b + c * c });
                    }
                }
            }
            out
        }
        PlanKind::Cyl { kz, .. } => {
            let basis = cyl_basis(&plan);
            let mut out = Vec::with_capacity(grid.len());
            for &lam in &basis.lambda {
                for &q in kz {
                    out.push(Wavevector { k: [lam.max(0.0).sqrt(), 0.0, q], norm_sq: lam + q * q });
                }
            }
            out
        }
    }
}

/// `inverse(symbol(k) * forward(field))`, exact on the grid's spectral basis.
pub fn apply_multiplier(
    field: &ComplexField,
    symbol: impl Fn(&Wavevector) -> Complex64,
) -> Result<ComplexField> {
    let factors: Vec<Complex64> = spectral_wavevectors(field.grid()).iter().map(symbol).collect();
    if factors.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::config("multiplier symbol is not finite on every grid wavevector"));
    }
    apply_factors(field, &factors)
}

/// Multiplies the spectrum by precomputed factors laid out like
/// [`spectral_wavevectors`].
pub fn apply_factors(field: &ComplexField, factors: &[Complex64]) -> Result<ComplexField> {
    let plan = plan(field);
    let grid = *field.grid();
    match &plan.kind {
        PlanKind::Radial { n, fwd, inv, r, .. } => {
            if factors.len() != 2 * n {
                return Err(Error::structural("radial multiplier needs 2N factors"));
            }
            let mut spec = radial_forward(*n, fwd, r, field.samples());
            spec.iter_mut().zip(factors).for_each(|(s, f)| *s *= f);
            let w = radial_inverse_w(*n, inv, spec);
            Ok(ComplexField::from_raw(grid, w.iter().zip(r).map(|(w, r)| w / r).collect()))
        }
        PlanKind::Cart { fwd, inv, .. } => {
            if factors.len() != grid.len() {
                return Err(Error::structural("multiplier length does not match grid"));
            }
            let dims = grid.counts();
            let mut data = field.samples().to_vec();
            cart_forward(dims, fwd, &mut data);
            data.par_iter_mut().zip(factors.par_iter()).for_each(|(s, f)| *s *= f);
            cart_inverse(dims, inv, &mut data);
            Ok(ComplexField::from_raw(grid, data))
        }
        PlanKind::Cyl { fwd_z, inv_z, .. } => {
            if factors.len() != grid.len() {
                return Err(Error::structural("multiplier length does not match grid"));
            }
            let [nr, nz, _] = grid.counts();
            let basis = cyl_basis(&plan);
            let mut data = field.samples().to_vec();
            z_transform(&mut data, nz, fwd_z);
            // Columns 0..nz hold real parts, nz..2nz imaginary parts.
            let mut c = nalgebra::DMatrix::<f64>::zeros(nr, 2 * nz);
            for i in 0..nr {
                for q in 0..nz {
                    let z = data[i * nz + q] * basis.sqrt_rho[i];
                    c[(i, q)] = z.re;
                    c[(i, nz + q)] = z.im;
                }
            }
            let a = basis.vectors.transpose() * c;
            let mut b = nalgebra::DMatrix::<f64>::zeros(nr, 2 * nz);
            for m in 0..nr {
                for q in 0..nz {
                    let z = Complex64::new(a[(m, q)], a[(m, nz + q)]) * factors[m * nz + q];
                    b[(m, q)] = z.re;
                    b[(m, nz + q)] = z.im;
                }
            }
            let c = &basis.vectors * b;
            for i in 0..nr {
                for q in 0..nz {
                    data[i * nz + q] = Complex64::new(c[(i, q)], c[(i, nz + q)]) / basis.sqrt_rho[i];
                }
            }
            z_transform(&mut data, nz, inv_z);
            let scale = 1.0 / nz as f64;
            data.iter_mut().for_each(|z| *z *= scale);
            Ok(ComplexField::from_raw(grid, data))
        }
    }
}

/// Spectral (radial, Cartesian) or mixed spectral/difference (cylindrical)
/// Laplacian.
pub fn laplacian(field: &ComplexField) -> Result<ComplexField> {
    let plan = plan(field);
    let grid = *field.grid();
    match &plan.kind {
        PlanKind::Radial { n, fwd, inv, k, r } => {
            let mut spec = radial_forward(*n, fwd, r, field.samples());
            spec.iter_mut().zip(k).for_each(|(s, q)| *s *= -q * q);
            let w2 = radial_inverse_w(*n, inv, spec);
            Ok(ComplexField::from_raw(grid, w2.iter().zip(r).map(|(w, r)| w / r).collect()))
        }
        PlanKind::Cart { .. } => apply_multiplier(field, |w| Complex64::new(-w.norm_sq, 0.0)),
        PlanKind::Cyl { fwd_z, inv_z, kz, rho, .. } => {
            let [nr, nz, _] = grid.counts();
            let h = grid.spacing()[0];
            let u = field.samples();
            let mut out = vec![ZERO; grid.len()];
            for i in 0..nr {
                let face_out = (i as f64 + 1.0) * h;
                let face_in = i as f64 * h;
                for q in 0..nz {
                    let c = u[i * nz + q];
                    let up = if i + 1 < nr { u[(i + 1) * nz + q] } else { ZERO };
                    let dn = if i > 0 { u[(i - 1) * nz + q] } else { ZERO };
                    out[i * nz + q] = (face_out * (up - c) - face_in * (c - dn)) / (rho[i] * h * h);
                }
            }
            let mut zz = u.to_vec();
            z_transform(&mut zz, nz, fwd_z);
            for row in zz.chunks_mut(nz) {
                row.iter_mut().zip(kz).for_each(|(s, q)| *s *= -q * q / nz as f64);
            }
            z_transform(&mut zz, nz, inv_z);
            out.iter_mut().zip(&zz).for_each(|(o, z)| *o += z);
            Ok(ComplexField::from_raw(grid, out))
        }
    }
}

/// Gradient components: `[d_r]` (radial), `[d_x, d_y, d_z]` (Cartesian),
/// `[d_rho, d_z]` (cylindrical). Nyquist modes are dropped.
pub fn gradient(field: &ComplexField) -> Result<Vec<ComplexField>> {
    let plan = plan(field);
    let grid = *field.grid();
    match &plan.kind {
        PlanKind::Radial { n, fwd, inv, k, r } => {
            let mut spec = radial_forward(*n, fwd, r, field.samples());
            for (q, s) in spec.iter_mut().enumerate() {
                *s = if q == *n { ZERO } else { *s * I * k[q] };
            }
            let dw = radial_inverse_w(*n, inv, spec);
            let u = field.samples();
            let du = dw.iter().zip(u).zip(r).map(|((dw, u), r)| (dw - u) / r).collect();
            Ok(vec![ComplexField::from_raw(grid, du)])
        }
        PlanKind::Cart { fwd, inv, k } => {
            let dims = grid.counts();
            let mut spec = field.samples().to_vec();
            cart_forward(dims, fwd, &mut spec);
            let [_, n1, n2] = dims;
            let mut out = Vec::with_capacity(3);
            for axis in 0..3 {
                let kk = &k[axis];
                let nyq = dims[axis] / 2;
                let mut d = spec.clone();
                d.par_chunks_mut(n1 * n2).enumerate().for_each(|(i, slab)| {
                    for j in 0..n1 {
                        for l in 0..n2 {
                            let q = [i, j, l][axis];
                            let s = &mut slab[j * n2 + l];
                            *s = if q == nyq { ZERO } else { *s * I * kk[q] };
                        }
                    }
                });
                cart_inverse(dims, inv, &mut d);
                out.push(ComplexField::from_raw(grid, d));
            }
            Ok(out)
        }
        PlanKind::Cyl { fwd_z, inv_z, kz, .. } => {
            let [nr, nz, _] = grid.counts();
            let h = grid.spacing()[0];
            let u = field.samples();
            let mut drho = vec![ZERO; grid.len()];
            for i in 0..nr {
                for q in 0..nz {
                    let up = if i + 1 < nr { u[(i + 1) * nz + q] } else { ZERO };
                    // even reflection across the axis
                    let dn = if i > 0 { u[(i - 1) * nz + q] } else { u[q] };
                    drho[i * nz + q] = (up - dn) / (2.0 * h);
                }
            }
            let mut dz = u.to_vec();
            z_transform(&mut dz, nz, fwd_z);
            for row in dz.chunks_mut(nz) {
                for (q, s) in row.iter_mut().enumerate() {
                    *s = if q == nz / 2 { ZERO } else { *s * I * kz[q] / nz as f64 };
                }
            }
            z_transform(&mut dz, nz, inv_z);
            Ok(vec![ComplexField::from_raw(grid, drho), ComplexField::from_raw(grid, dz)])
        }
    }
}

/// `||grad f||^2_{L^2}`.
///
/// Cylindrical grids use the face-difference form in `rho`, which is the
/// quadratic form of the discrete Laplacian (so that the discrete energy
/// is the one the propagator conserves).
pub fn gradient_norm_sq(field: &ComplexField) -> Result<f64> {
    let grid = *field.grid();
    match grid.mode() {
        GeometryMode::Radial3D | GeometryMode::Cart3D => {
            let grads = gradient(field)?;
            let mut dens = vec![0.0; grid.len()];
            for g in &grads {
                for (d, z) in dens.iter_mut().zip(g.samples()) {
                    *d += z.norm_sqr();
                }
            }
            Ok(dot_volumes(&grid, &dens))
        }
        GeometryMode::Cyl3D => {
            let [nr, nz, _] = grid.counts();
            let [hr, hz, _] = grid.spacing();
            let u = field.samples();
            let mut radial = 0.0;
            for i in 0..nr {
                let face = (i as f64 + 1.0) * hr;
                for q in 0..nz {
                    let up = if i + 1 < nr { u[(i + 1) * nz + q] } else { ZERO };
                    radial += face * (up - u[i * nz + q]).norm_sqr();
                }
            }
            radial *= 2.0 * std::f64::consts::PI * hz / hr;
            let dz = &gradient(field)?[1];
            Ok(radial + l2_norm_sq(dz))
        }
    }
}

/// Ratio of the largest modulus on the outer shell to the global maximum.
/// Experiments keep this below `1e-8`.
pub fn support_margin(field: &ComplexField) -> f64 {
    let max = field.max_abs();
    if max == 0.0 {
        return 0.0;
    }
    let s = field.samples();
    let edge = field
        .grid()
        .boundary_shell()
        .into_iter()
        .map(|i| s[i].norm())
        .fold(0.0, f64::max);
    edge / max
}

pub const SUPPORT_MARGIN_TOL: f64 = 1e-8;

/// Periodic convolution on a Cartesian grid without the cell volume:
/// `out[i] = sum_j f[j] kernel[(i - j) mod n]` per axis, real part returned.
/// `kernel` is indexed like the field, with index 0 the zero offset.
pub fn circular_convolution(field: &ComplexField, kernel: &[f64]) -> Result<Vec<f64>> {
    let grid = *field.grid();
    if grid.mode() != GeometryMode::Cart3D {
        return Err(Error::UnsupportedMode { op: "circular_convolution", mode: grid.mode().as_str() });
    }
    if kernel.len() != grid.len() {
        return Err(Error::structural("kernel length does not match grid"));
    }
    let plan = plan_for(&grid);
    let PlanKind::Cart { fwd, inv, .. } = &plan.kind else { unreachable!() };
    let dims = grid.counts();
    let mut a = field.samples().to_vec();
    let mut b: Vec<Complex64> = kernel.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    cart_forward(dims, fwd, &mut a);
    cart_forward(dims, fwd, &mut b);
    a.par_iter_mut().zip(b.par_iter()).for_each(|(x, y)| *x *= y);
    cart_inverse(dims, inv, &mut a);
    Ok(a.into_iter().map(|z| z.re).collect())
}

/// Linear interpolation helper for radial tables sampled at `r0 + i*dr`.
pub(crate) fn lerp_table(table: &[f64], r0: f64, dr: f64, r: f64) -> f64 {
    let x = (r - r0) / dr;
    if x <= 0.0 {
        return table[0];
    }
    let i = x.floor() as usize;
    if i + 1 >= table.len() {
        return *table.last().unwrap();
    }
    let t = x - i as f64;
    table[i] * (1.0 - t) + table[i + 1] * t
}

#[cfg(test)]
mod tests;
