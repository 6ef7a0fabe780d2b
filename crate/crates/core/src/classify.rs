//! Threshold classification of initial data against ground-state constants.
//!
//! With `(φ, ψ)` a ground state at `ω = 0`, `μ = 3γ`, data are compared
//! through the products
//!
//! ```text
//! energy:  E(u0, v0) M(u0, v0)  vs  E(φ, ψ) M(φ, ψ) / 2
//! kinetic: K(u0, v0) M(u0, v0)  vs  K(φ, ψ) M(φ, ψ)
//! ```
//!
//! where `M = M_{3γ}`. Below both thresholds the solution scatters; below
//! the energy threshold and above the kinetic one, radial or cylindrical
//! data blow up; `E_μ < 0` with symmetry also blows up.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, StatePair};
use crate::functionals::FunctionalReport;
use crate::grid::GeometryMode;
use crate::groundstate::GroundStateConstants;
use crate::spectral::dot_volumes;

pub const DEFAULT_BAND: f64 = 1e-9;
/// Largest relative deviation from the symmetric average accepted by
/// [`validate_symmetry`].
pub const SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    GlobalScattering,
    BlowUp,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    EnergyNegative,
    BelowThreshold,
    AboveThreshold,
    Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    Radial,
    /// Invariant under rotations of `(x1, x2)` with `z u, z v ∈ L²`.
    Cylindrical,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Caveat {
    /// Non-radial scattering for `γ ≠ 3` needs `|γ - 3| < η` with `η`
    /// not quantified.
    NonRadialGammaFar,
    /// `E_μ >= 0` blow-up without symmetry is an open problem.
    NoSymmetryBlowUpOpen,
    /// The energy threshold is not met, so neither theorem applies.
    EnergyAboveThreshold,
}

/// Which energy enters the energy product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyConvention {
    /// `E_μ = (K + M_μ)/2 - P` on both sides.
    Full,
    /// `K/2 - P` on both sides (the mass part removed).
    Reduced,
    /// `Reduced` when `μ = 3γ` (the ground-state setting), `Full` otherwise.
    Auto,
}

impl EnergyConvention {
    fn resolve(self, gamma: f64, mu: f64) -> EnergyConvention {
        match self {
            EnergyConvention::Auto if (mu - 3.0 * gamma).abs() <= 1e-12 * mu => EnergyConvention::Reduced,
            EnergyConvention::Auto => EnergyConvention::Full,
            other => other,
        }
    }

    fn energy(self, kinetic: f64, potential: f64, mass_mu: f64) -> f64 {
        match self {
            EnergyConvention::Reduced => 0.5 * kinetic - potential,
            _ => 0.5 * (kinetic + mass_mu) - potential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub band: f64,
    pub convention: EnergyConvention,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions { band: DEFAULT_BAND, convention: EnergyConvention::Auto }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub basis: Basis,
    pub symmetry: Symmetry,
    pub caveats: Vec<Caveat>,
    pub convention: EnergyConvention,
    pub energy_mu: f64,
    pub energy_product: f64,
    pub energy_threshold: f64,
    pub kinetic_product: f64,
    pub kinetic_threshold: f64,
}

fn near(x: f64, thr: f64, band: f64) -> bool {
    (x - thr).abs() <= band * thr.abs()
}

/// Classifies `initial` against `gs`. `symmetry` is taken as declared; see
/// [`validate_symmetry`] for the numerical check.
pub fn classify(
    initial: &StatePair,
    gs: &GroundStateConstants,
    symmetry: Symmetry,
    options: &ClassifyOptions,
) -> Result<Verdict> {
    if (initial.gamma() - gs.gamma).abs() > 1e-12 * gs.gamma {
        return Err(Error::Validation(vec![format!(
            "data have gamma = {} but the ground state was computed at gamma = {}",
            initial.gamma(),
            gs.gamma
        )]));
    }
    let rep = FunctionalReport::compute(initial, 0.0)?;
    let gamma = initial.gamma();
    let convention = options.convention.resolve(gamma, initial.mu());
    let m = rep.mass_3gamma;
    let e = convention.energy(rep.kinetic, rep.potential, rep.mass_mu);
    // ground-state side uses M_{3γ} for the mass term
    let e_gs = convention.energy(gs.k_gs, gs.p_gs, gs.m_gs);
    let energy_product = e * m;
    let energy_threshold = 0.5 * e_gs * gs.m_gs;
    let kinetic_product = rep.kinetic * m;
    let kinetic_threshold = gs.k_gs * gs.m_gs;
    let symmetric = matches!(symmetry, Symmetry::Radial | Symmetry::Cylindrical);

    let mut caveats = Vec::new();
    let (kind, basis) = if rep.energy_mu < 0.0 {
        if symmetric {
            (VerdictKind::BlowUp, Basis::EnergyNegative)
        } else {
            caveats.push(Caveat::NoSymmetryBlowUpOpen);
            (VerdictKind::Indeterminate, Basis::EnergyNegative)
        }
    } else if near(energy_product, energy_threshold, options.band) || near(kinetic_product, kinetic_threshold, options.band) {
        (VerdictKind::Indeterminate, Basis::Boundary)
    } else if energy_product >= energy_threshold {
        caveats.push(Caveat::EnergyAboveThreshold);
        (VerdictKind::Indeterminate, Basis::AboveThreshold)
    } else if kinetic_product < kinetic_threshold {
        if symmetry != Symmetry::Radial && (gamma - 3.0).abs() > 1e-12 {
            caveats.push(Caveat::NonRadialGammaFar);
        }
        (VerdictKind::GlobalScattering, Basis::BelowThreshold)
    } else if symmetric {
        (VerdictKind::BlowUp, Basis::AboveThreshold)
    } else {
        caveats.push(Caveat::NoSymmetryBlowUpOpen);
        (VerdictKind::Indeterminate, Basis::AboveThreshold)
    };
    Ok(Verdict {
        kind,
        basis,
        symmetry,
        caveats,
        convention,
        energy_mu: rep.energy_mu,
        energy_product,
        energy_threshold,
        kinetic_product,
        kinetic_threshold,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub symmetry: Symmetry,
    /// `max |f - avg f| / max |f|` over both components.
    pub max_deviation: f64,
    /// `∫ z² (|u|² + |v|²)` for the cylindrical class.
    pub z_variance: Option<f64>,
    pub passed: bool,
}

/// Groups sample indices into orbits and returns the largest deviation
/// from the orbit mean relative to the field maximum.
fn orbit_deviation(field: &ComplexField, orbits: &BTreeMap<(i64, i64), Vec<usize>>) -> f64 {
    let peak = field.max_abs();
    if peak == 0.0 {
        return 0.0;
    }
    let s = field.samples();
    let mut worst: f64 = 0.0;
    for idx in orbits.values() {
        let mean = idx.iter().map(|&i| s[i]).sum::<num_complex::Complex64>() / idx.len() as f64;
        for &i in idx {
            worst = worst.max((s[i] - mean).norm());
        }
    }
    worst / peak
}

/// Checks the declared symmetry numerically. On Cartesian grids the
/// orbits are the sets of nodes with equal integer `|x|²` (radial) or equal
/// `(x1² + x2², x3)` (cylindrical), measured from the centre node.
pub fn validate_symmetry(state: &StatePair, symmetry: Symmetry) -> Result<SymmetryCheck> {
    let grid = *state.grid();
    let mode = grid.mode();
    let deviation = |key: &dyn Fn([i64; 3]) -> (i64, i64)| -> f64 {
        let [n0, n1, n2] = grid.counts();
        let mut orbits: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
        for i in 0..n0 {
            for j in 0..n1 {
                for k in 0..n2 {
                    let c = [i as i64 - (n0 / 2) as i64, j as i64 - (n1 / 2) as i64, k as i64 - (n2 / 2) as i64];
                    orbits.entry(key(c)).or_default().push((i * n1 + j) * n2 + k);
                }
            }
        }
        orbit_deviation(&state.u, &orbits).max(orbit_deviation(&state.v, &orbits))
    };
    let z_variance = |st: &StatePair| -> f64 {
        let dens: Vec<f64> = grid
            .positions()
            .iter()
            .zip(st.u.samples().iter().zip(st.v.samples()))
            .map(|(p, (u, v))| p[2] * p[2] * (u.norm_sqr() + v.norm_sqr()))
            .collect();
        dot_volumes(&grid, &dens)
    };
    let (max_deviation, zv) = match (symmetry, mode) {
        (Symmetry::None, _) => (0.0, None),
        (Symmetry::Radial, GeometryMode::Radial3D) => (0.0, None),
        (Symmetry::Radial, GeometryMode::Cart3D) => {
            (deviation(&|c| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2], 0)), None)
        }
        (Symmetry::Cylindrical, GeometryMode::Cyl3D) => (0.0, Some(z_variance(state))),
        (Symmetry::Cylindrical, GeometryMode::Radial3D) => (0.0, Some(z_variance(state))),
        (Symmetry::Cylindrical, GeometryMode::Cart3D) => {
            (deviation(&|c| (c[0] * c[0] + c[1] * c[1], c[2])), Some(z_variance(state)))
        }
        (Symmetry::Radial, GeometryMode::Cyl3D) => {
            return Err(Error::UnsupportedMode { op: "validate_radial_symmetry", mode: mode.as_str() })
        }
    };
    let passed = max_deviation <= SYMMETRY_TOL && zv.is_none_or(f64::is_finite);
    Ok(SymmetryCheck { symmetry, max_deviation, z_variance: zv, passed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use num_complex::Complex64;

    /// Constants of a synthetic ground state with `K = 3P`, `M = P`.
    fn gs(p: f64) -> GroundStateConstants {
        GroundStateConstants {
            gamma: 3.0,
            k_gs: 3.0 * p,
            m_gs: p,
            e_gs: p,
            p_gs: p,
            c_opt: 1.0 / (3.0 * (3.0 * p * p).sqrt()),
            residuals: [0.0; 2],
            iterations: 0,
        }
    }

    fn gaussian(grid: GridSpec, a: f64, gamma: f64) -> StatePair {
        let f = |p: [f64; 3]| Complex64::new(a * (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp(), 0.0);
        StatePair::new(ComplexField::from_fn(grid, f).unwrap(), ComplexField::from_fn(grid, f).unwrap(), gamma, 9.0)
            .unwrap()
    }

    #[test]
    fn zero_data_scatter() {
        let s = StatePair::zeros(GridSpec::radial(64, 8.0).unwrap(), 3.0, 9.0).unwrap();
        let v = classify(&s, &gs(1.0), Symmetry::Radial, &ClassifyOptions::default()).unwrap();
        assert_eq!((v.kind, v.basis), (VerdictKind::GlobalScattering, Basis::BelowThreshold));
    }

    #[test]
    fn negative_energy_radial_blows_up() {
        let s = gaussian(GridSpec::radial(512, 10.0).unwrap(), 8.0, 3.0);
        assert!(crate::functionals::energy(&s).unwrap() < 0.0);
        let v = classify(&s, &gs(1.0), Symmetry::Radial, &ClassifyOptions::default()).unwrap();
        assert_eq!((v.kind, v.basis), (VerdictKind::BlowUp, Basis::EnergyNegative));
        let v = classify(&s, &gs(1.0), Symmetry::None, &ClassifyOptions::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::Indeterminate);
    }

    #[test]
    fn gamma_mismatch_is_rejected() {
        let s = gaussian(GridSpec::radial(64, 8.0).unwrap(), 1.0, 2.0);
        assert!(classify(&s, &gs(1.0), Symmetry::Radial, &ClassifyOptions::default()).is_err());
    }

    #[test]
    fn boundary_band_is_indeterminate() {
        let s = gaussian(GridSpec::radial(512, 10.0).unwrap(), 0.3, 3.0);
        let rep = FunctionalReport::compute(&s, 0.0).unwrap();
        // ground state whose kinetic threshold equals the data's product
        let mut c = gs(1.0);
        c.m_gs = rep.mass_3gamma;
        c.k_gs = rep.kinetic;
        c.p_gs = 1e-6;
        let v = classify(&s, &c, Symmetry::Radial, &ClassifyOptions { convention: EnergyConvention::Full, ..Default::default() })
            .unwrap();
        assert_eq!((v.kind, v.basis), (VerdictKind::Indeterminate, Basis::Boundary), "{v:?}");
    }

    #[test]
    fn never_blow_up_without_symmetry_at_nonnegative_energy() {
        for a in [0.1, 0.5, 1.0, 2.0, 3.0] {
            let s = gaussian(GridSpec::radial(256, 10.0).unwrap(), a, 3.0);
            let v = classify(&s, &gs(0.05), Symmetry::None, &ClassifyOptions::default()).unwrap();
            if v.energy_mu >= 0.0 {
                assert_ne!(v.kind, VerdictKind::BlowUp);
            }
        }
    }

    #[test]
    fn non_radial_caveat() {
        let s = gaussian(GridSpec::radial(256, 10.0).unwrap(), 0.01, 2.0);
        let mut c = gs(1.0);
        c.gamma = 2.0;
        let v = classify(&s, &c, Symmetry::None, &ClassifyOptions::default()).unwrap();
        assert_eq!(v.kind, VerdictKind::GlobalScattering);
        assert_eq!(v.caveats, vec![Caveat::NonRadialGammaFar]);
        let v = classify(&s, &c, Symmetry::Radial, &ClassifyOptions::default()).unwrap();
        assert!(v.caveats.is_empty());
    }

    #[test]
    fn symmetry_validation_on_cartesian_grid() {
        let g = GridSpec::cartesian(16, 4.0).unwrap();
        let s = gaussian(g, 1.0, 3.0);
        let r = validate_symmetry(&s, Symmetry::Radial).unwrap();
        assert!(r.passed && r.max_deviation < 1e-14);
        let shifted = StatePair::new(
            ComplexField::from_fn(g, |p| Complex64::new((-((p[0] - 0.5).powi(2) + p[1] * p[1] + p[2] * p[2])).exp(), 0.0))
                .unwrap(),
            ComplexField::zeros(g),
            3.0,
            9.0,
        )
        .unwrap();
        assert!(!validate_symmetry(&shifted, Symmetry::Radial).unwrap().passed);
        // shifted along x3 keeps the cylindrical symmetry
        let along_z = StatePair::new(
            ComplexField::from_fn(g, |p| Complex64::new((-(p[0] * p[0] + p[1] * p[1] + (p[2] - 0.5).powi(2))).exp(), 0.0))
                .unwrap(),
            ComplexField::zeros(g),
            3.0,
            9.0,
        )
        .unwrap();
        let c = validate_symmetry(&along_z, Symmetry::Cylindrical).unwrap();
        assert!(c.passed && c.z_variance.unwrap() > 0.0);
        let cyl = StatePair::zeros(GridSpec::cylindrical(16, 16, 4.0, 4.0).unwrap(), 3.0, 9.0).unwrap();
        assert!(validate_symmetry(&cyl, Symmetry::Radial).is_err());
    }
}
