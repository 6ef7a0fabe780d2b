//! Transform plans, cached per grid.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use once_cell::sync::{Lazy, OnceCell};
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::grid::{GeometryMode, GridSpec};

pub(crate) type FftHandle = Arc<dyn Fft<f64>>;

static PLANS: Lazy<Mutex<HashMap<u64, Arc<Plan>>>> = Lazy::new(|| Mutex::new(HashMap::new()));

pub(crate) fn plan_for(grid: &GridSpec) -> Arc<Plan> {
    let key = grid.fingerprint();
    let mut cache = PLANS.lock().expect("plan cache poisoned");
    if let Some(p) = cache.get(&key) {
        if p.grid == *grid {
            return Arc::clone(p);
        }
    }
    let plan = Arc::new(Plan::new(*grid));
    cache.insert(key, Arc::clone(&plan));
    plan
}

pub(crate) struct Plan {
    pub grid: GridSpec,
    pub kind: PlanKind,
}

pub(crate) enum PlanKind {
    /// Odd extension of `w = r u` onto `[-L, L)` with `2N` half-shifted nodes.
    Radial {
        n: usize,
        fwd: FftHandle,
        inv: FftHandle,
        /// Signed wavenumber per spectral slot (length `2N`).
        k: Vec<f64>,
        r: Vec<f64>,
    },
    Cart {
        fwd: [FftHandle; 3],
        inv: [FftHandle; 3],
        k: [Vec<f64>; 3],
    },
    Cyl {
        fwd_z: FftHandle,
        inv_z: FftHandle,
        kz: Vec<f64>,
        rho: Vec<f64>,
        basis: OnceCell<CylBasis>,
    },
}

/// Signed FFT wavenumbers for `n` samples over a period `period`.
/// The Nyquist slot is reported as positive.
pub(crate) fn fft_wavenumbers(n: usize, period: f64) -> Vec<f64> {
    let dk = 2.0 * PI / period;
    (0..n)
        .map(|q| if q <= n / 2 { q as f64 * dk } else { (q as f64 - n as f64) * dk })
        .collect()
}

impl Plan {
    fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let [n0, n1, n2] = grid.counts();
        let [l0, l1, _] = grid.extents();
        let kind = match grid.mode() {
            GeometryMode::Radial3D => PlanKind::Radial {
                n: n0,
                fwd: planner.plan_fft_forward(2 * n0),
                inv: planner.plan_fft_inverse(2 * n0),
                k: fft_wavenumbers(2 * n0, 2.0 * l0),
                r: grid.radii(),
            },
            GeometryMode::Cart3D => PlanKind::Cart {
                fwd: [
                    planner.plan_fft_forward(n0),
                    planner.plan_fft_forward(n1),
                    planner.plan_fft_forward(n2),
                ],
                inv: [
                    planner.plan_fft_inverse(n0),
                    planner.plan_fft_inverse(n1),
                    planner.plan_fft_inverse(n2),
                ],
                k: [
                    fft_wavenumbers(n0, 2.0 * l0),
                    fft_wavenumbers(n1, 2.0 * l0),
                    fft_wavenumbers(n2, 2.0 * l0),
                ],
            },
            GeometryMode::Cyl3D => PlanKind::Cyl {
                fwd_z: planner.plan_fft_forward(n1),
                inv_z: planner.plan_fft_inverse(n1),
                kz: fft_wavenumbers(n1, 2.0 * l1),
                rho: grid.rho_nodes(),
                basis: OnceCell::new(),
            },
        };
        Plan { grid, kind }
    }
}

/// Eigen-decomposition of the discrete radial operator of the cylindrical
/// Laplacian, symmetrized by the `rho` quadrature weight.
pub(crate) struct CylBasis {
    /// Eigenvalues of `-Delta_rho` (non-negative).
    pub lambda: Vec<f64>,
    /// Orthonormal eigenvectors of the symmetrized operator, by column.
    pub vectors: DMatrix<f64>,
    pub sqrt_rho: Vec<f64>,
}

impl CylBasis {
    pub fn build(rho: &[f64], h: f64) -> Self {
        let n = rho.len();
        let mut s = DMatrix::<f64>::zeros(n, n);
        let h2 = h * h;
        for i in 0..n {
            let face_out = (i as f64 + 1.0) * h;
            let face_in = i as f64 * h;
            s[(i, i)] = -(face_out + face_in) / (rho[i] * h2);
            if i + 1 < n {
                let off = face_out / (h2 * (rho[i] * rho[i + 1]).sqrt());
                s[(i, i + 1)] = off;
                s[(i + 1, i)] = off;
            }
        }
        let eig = SymmetricEigen::new(s);
        CylBasis {
            lambda: eig.eigenvalues.iter().map(|&l| -l).collect(),
            vectors: eig.eigenvectors,
            sqrt_rho: rho.iter().map(|r| r.sqrt()).collect(),
        }
    }
}

/// In-place transform of every line along `axis` of a row-major 3D array.
pub(crate) fn fft_axis(data: &mut [Complex64], dims: [usize; 3], axis: usize, fft: &FftHandle) {
    let [n0, n1, n2] = dims;
    match axis {
        2 => data.par_chunks_mut(n2).for_each(|line| fft.process(line)),
        1 => data.par_chunks_mut(n1 * n2).for_each(|slab| {
            let mut line = vec![Complex64::new(0.0, 0.0); n1];
            for k in 0..n2 {
                for j in 0..n1 {
                    line[j] = slab[j * n2 + k];
                }
                fft.process(&mut line);
                for j in 0..n1 {
                    slab[j * n2 + k] = line[j];
                }
            }
        }),
        0 => {
            let stride = n1 * n2;
            let src: &[Complex64] = data;
            let lines: Vec<Vec<Complex64>> = (0..stride)
                .into_par_iter()
                .map(|jk| {
                    let mut line: Vec<Complex64> = (0..n0).map(|i| src[i * stride + jk]).collect();
                    fft.process(&mut line);
                    line
                })
                .collect();
            for (jk, line) in lines.into_iter().enumerate() {
                for (i, z) in line.into_iter().enumerate() {
                    data[i * stride + jk] = z;
                }
            }
        }
        _ => unreachable!("axis out of range"),
    }
}
