//! Discretized spatial domains.
//!
//! Three geometries share one [`GridSpec`]:
//!
//! * `Radial3D`: radially symmetric fields on `[0, L]`, sampled at cell
//!   midpoints `r_j = (j + 1/2) h` with `h = L / N`.
//! * `Cart3D`: the periodic box `[-L, L)^3`, nodes `x_i = -L + i h`
//!   with `h = 2L / n` on each axis.
//! * `Cyl3D`: axisymmetric fields on `[0, L_rho] x [-L_z, L_z)`, midpoints
//!   in `rho`, periodic nodes in `z`. Samples are stored rho-major.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 8;
pub const MAX_CART_POINTS: usize = 256;
pub const MAX_RADIAL_POINTS: usize = 1 << 16;
pub const MAX_CYL_POINTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeometryMode {
    Radial3D,
    Cart3D,
    Cyl3D,
}

impl GeometryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            GeometryMode::Radial3D => "radial",
            GeometryMode::Cart3D => "cartesian",
            GeometryMode::Cyl3D => "cylindrical",
        }
    }

    /// Byte tag used by the CRF1 snapshot header.
    pub fn tag(self) -> u8 {
        match self {
            GeometryMode::Radial3D => 0,
            GeometryMode::Cart3D => 1,
            GeometryMode::Cyl3D => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(GeometryMode::Radial3D),
            1 => Some(GeometryMode::Cart3D),
            2 => Some(GeometryMode::Cyl3D),
            _ => None,
        }
    }
}

impl fmt::Display for GeometryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Immutable description of a sampled domain.
///
/// `counts` and `extents` always have three slots so that the layout maps
/// one-to-one onto the snapshot header; unused count slots hold 1 and
/// unused extent slots hold 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    mode: GeometryMode,
    counts: [usize; 3],
    extents: [f64; 3],
}

impl GridSpec {
    pub fn radial(points: usize, extent: f64) -> Result<Self> {
        Self::from_parts(GeometryMode::Radial3D, [points, 1, 1], [extent, 0.0, 0.0])
    }

    pub fn cartesian(points: usize, extent: f64) -> Result<Self> {
        Self::cartesian_axes([points; 3], extent)
    }

    pub fn cartesian_axes(points: [usize; 3], extent: f64) -> Result<Self> {
        Self::from_parts(GeometryMode::Cart3D, points, [extent; 3])
    }

    pub fn cylindrical(rho_points: usize, z_points: usize, rho_extent: f64, z_extent: f64) -> Result<Self> {
        Self::from_parts(
            GeometryMode::Cyl3D,
            [rho_points, z_points, 1],
            [rho_extent, z_extent, 0.0],
        )
    }

    /// Validating constructor shared by all modes and by the snapshot reader.
    pub fn from_parts(mode: GeometryMode, counts: [usize; 3], extents: [f64; 3]) -> Result<Self> {
        let (axes, transform_axes): (usize, &[usize]) = match mode {
            GeometryMode::Radial3D => (1, &[0]),
            GeometryMode::Cart3D => (3, &[0, 1, 2]),
            GeometryMode::Cyl3D => (2, &[1]),
        };
        let n_extents = match mode {
            GeometryMode::Radial3D => 1,
            GeometryMode::Cart3D => 3,
            GeometryMode::Cyl3D => 2,
        };
        for (i, &e) in extents.iter().enumerate().take(n_extents) {
            if !(e.is_finite() && e > 0.0) {
                return Err(Error::config(format!("extent[{i}] must be positive and finite, got {e}")));
            }
        }
        if mode == GeometryMode::Cart3D && (extents[0] != extents[1] || extents[0] != extents[2]) {
            return Err(Error::config("cartesian grids use one extent for all axes"));
        }
        for (i, &n) in counts.iter().enumerate() {
            if i < axes {
                if n < MIN_POINTS {
                    return Err(Error::config(format!("axis {i} has {n} points, need at least {MIN_POINTS}")));
                }
                if transform_axes.contains(&i) && !n.is_power_of_two() {
                    return Err(Error::config(format!("transform axis {i} needs a power-of-two count, got {n}")));
                }
            } else if n != 1 {
                return Err(Error::config(format!("unused axis {i} must have count 1, got {n}")));
            }
        }
        for (i, &e) in extents.iter().enumerate().skip(n_extents) {
            if e != 0.0 {
                return Err(Error::config(format!("unused extent[{i}] must be 0, got {e}")));
            }
        }
        let limit = match mode {
            GeometryMode::Radial3D => MAX_RADIAL_POINTS,
            GeometryMode::Cart3D => MAX_CART_POINTS,
            GeometryMode::Cyl3D => MAX_CYL_POINTS,
        };
        if counts.iter().any(|&n| n > limit) {
            return Err(Error::config(format!("{mode} grids allow at most {limit} points per axis")));
        }
        Ok(GridSpec { mode, counts, extents })
    }

    pub fn mode(&self) -> GeometryMode {
        self.mode
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn extents(&self) -> [f64; 3] {
        self.extents
    }

    /// Radial or Cartesian half-width `L` (rho extent for cylindrical grids).
    pub fn extent(&self) -> f64 {
        self.extents[0]
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Step size per axis; unused axes report 0.
    pub fn spacing(&self) -> [f64; 3] {
        let [n0, n1, n2] = self.counts;
        let [l0, l1, l2] = self.extents;
        match self.mode {
            GeometryMode::Radial3D => [l0 / n0 as f64, 0.0, 0.0],
            GeometryMode::Cart3D => [
                2.0 * l0 / n0 as f64,
                2.0 * l1 / n1 as f64,
                2.0 * l2 / n2 as f64,
            ],
            GeometryMode::Cyl3D => [l0 / n0 as f64, 2.0 * l1 / n1 as f64, 0.0],
        }
    }

    /// Stable identifier for caches and weight metadata.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the defining bytes.
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(&[self.mode.tag()]);
        for c in self.counts {
            eat(&(c as u64).to_le_bytes());
        }
        for e in self.extents {
            eat(&e.to_bits().to_le_bytes());
        }
        h
    }

    /// Radial midpoints; panics on non-radial grids.
    pub fn radii(&self) -> Vec<f64> {
        assert_eq!(self.mode, GeometryMode::Radial3D);
        let h = self.spacing()[0];
        (0..self.counts[0]).map(|j| (j as f64 + 0.5) * h).collect()
    }

    /// Node coordinates along one Cartesian axis.
    pub fn axis_nodes(&self, axis: usize) -> Vec<f64> {
        assert_eq!(self.mode, GeometryMode::Cart3D);
        let h = self.spacing()[axis];
        let l = self.extents[axis];
        (0..self.counts[axis]).map(|i| -l + i as f64 * h).collect()
    }

    pub fn rho_nodes(&self) -> Vec<f64> {
        assert_eq!(self.mode, GeometryMode::Cyl3D);
        let h = self.spacing()[0];
        (0..self.counts[0]).map(|i| (i as f64 + 0.5) * h).collect()
    }

    pub fn z_nodes(&self) -> Vec<f64> {
        assert_eq!(self.mode, GeometryMode::Cyl3D);
        let h = self.spacing()[1];
        let l = self.extents[1];
        (0..self.counts[1]).map(|j| -l + j as f64 * h).collect()
    }

    /// Physical position of every sample, in sample order.
    ///
    /// Radial samples sit on the positive x-axis; cylindrical samples sit
    /// in the half plane `y = 0, x = rho`.
    pub fn positions(&self) -> Vec<[f64; 3]> {
        match self.mode {
            GeometryMode::Radial3D => self.radii().into_iter().map(|r| [r, 0.0, 0.0]).collect(),
            GeometryMode::Cart3D => {
                let xs = self.axis_nodes(0);
                let ys = self.axis_nodes(1);
                let zs = self.axis_nodes(2);
                let mut out = Vec::with_capacity(self.len());
                for &x in &xs {
                    for &y in &ys {
                        for &z in &zs {
                            out.push([x, y, z]);
                        }
                    }
                }
                out
            }
            GeometryMode::Cyl3D => {
                let rs = self.rho_nodes();
                let zs = self.z_nodes();
                let mut out = Vec::with_capacity(self.len());
                for &r in &rs {
                    for &z in &zs {
                        out.push([r, 0.0, z]);
                    }
                }
                out
            }
        }
    }

    /// Euclidean distance of every sample from the origin.
    pub fn distances(&self) -> Vec<f64> {
        self.positions()
            .into_iter()
            .map(|p| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt())
            .collect()
    }

    /// Quadrature weight of every sample: `4 pi r^2 h`, `h^3`, or
    /// `2 pi rho h_rho h_z`.
    pub fn cell_volumes(&self) -> Vec<f64> {
        let sp = self.spacing();
        match self.mode {
            GeometryMode::Radial3D => self.radii().into_iter().map(|r| 4.0 * PI * r * r * sp[0]).collect(),
            GeometryMode::Cart3D => vec![sp[0] * sp[1] * sp[2]; self.len()],
            GeometryMode::Cyl3D => {
                let nz = self.counts[1];
                let mut out = Vec::with_capacity(self.len());
                for r in self.rho_nodes() {
                    let w = 2.0 * PI * r * sp[0] * sp[1];
                    out.extend(std::iter::repeat_n(w, nz));
                }
                out
            }
        }
    }

    /// Indices of the samples lying on the outermost layer of the domain.
    pub fn boundary_shell(&self) -> Vec<usize> {
        let [n0, n1, n2] = self.counts;
        match self.mode {
            GeometryMode::Radial3D => vec![n0 - 1],
            GeometryMode::Cart3D => {
                let mut out = Vec::new();
                for i in 0..n0 {
                    for j in 0..n1 {
                        for k in 0..n2 {
                            if i == 0 || j == 0 || k == 0 {
                                out.push((i * n1 + j) * n2 + k);
                            }
                        }
                    }
                }
                out
            }
            GeometryMode::Cyl3D => {
                let mut out = Vec::new();
                for i in 0..n0 {
                    for j in 0..n1 {
                        if i == n0 - 1 || j == 0 {
                            out.push(i * n1 + j);
                        }
                    }
                }
                out
            }
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.mode {
            GeometryMode::Radial3D => write!(f, "radial N={} L={}", self.counts[0], self.extents[0]),
            GeometryMode::Cart3D => write!(
                f,
                "cartesian {}x{}x{} L={}",
                self.counts[0], self.counts[1], self.counts[2], self.extents[0]
            ),
            GeometryMode::Cyl3D => write!(
                f,
                "cylindrical {}x{} L_rho={} L_z={}",
                self.counts[0], self.counts[1], self.extents[0], self.extents[1]
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_reproducible_from_parts() {
        let g = GridSpec::radial(1024, 12.0).unwrap();
        assert_eq!(g.spacing()[0], 12.0 / 1024.0);
        let c = GridSpec::cartesian(64, 8.0).unwrap();
        assert_eq!(c.spacing(), [0.25; 3]);
        let y = GridSpec::cylindrical(100, 64, 10.0, 8.0).unwrap();
        assert_eq!(y.spacing()[0], 0.1);
        assert_eq!(y.spacing()[1], 0.25);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::radial(1000, 1.0).is_err());
        assert!(GridSpec::radial(4, 1.0).is_err());
        assert!(GridSpec::radial(64, 0.0).is_err());
        assert!(GridSpec::radial(64, f64::NAN).is_err());
        assert!(GridSpec::cartesian(512, 1.0).is_err());
        assert!(GridSpec::cylindrical(100, 60, 1.0, 1.0).is_err());
        assert!(GridSpec::from_parts(GeometryMode::Radial3D, [64, 2, 1], [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn cartesian_nodes_include_origin() {
        let g = GridSpec::cartesian(16, 4.0).unwrap();
        let xs = g.axis_nodes(0);
        assert_eq!(xs[8], 0.0);
        assert_eq!(xs[0], -4.0);
    }

    #[test]
    fn fingerprint_distinguishes_grids() {
        let a = GridSpec::radial(64, 8.0).unwrap();
        let b = GridSpec::radial(64, 8.5).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), GridSpec::radial(64, 8.0).unwrap().fingerprint());
    }
}
