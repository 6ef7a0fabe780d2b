//! Conserved and variational functionals evaluated on a state snapshot.
//!
//! ```text
//! M_w(u, v) = ||u||^2 + w ||v||^2
//! K(u, v)   = ||grad u||^2 + ||grad v||^2
//! P(u, v)   = ∫ N(u, v),   N = |u|^4/36 + 9|v|^4/4 + |u|^2|v|^2 + Re(conj(u)^3 v)/9
//! E_mu      = (K + M_mu)/2 - P
//! G         = K - 3P
//! S_omega   = E_mu + omega M_{3 gamma} / 2
//! ```

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{check_same_grid, ComplexField, StatePair};
use crate::grid::GeometryMode;
use crate::spectral::{self, dot_volumes, gradient, gradient_norm_sq, l2_norm_sq};
use crate::weights::MorawetzWeights;

/// One row of the trajectory log. Field order is the serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub time: f64,
    pub mass_mu: f64,
    pub mass_3gamma: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub energy_mu: f64,
    pub pohozaev: f64,
    pub action_omega: f64,
}

impl FunctionalReport {
    pub const FIELDS: [&'static str; 8] = [
        "time",
        "mass_mu",
        "mass_3gamma",
        "kinetic",
        "potential",
        "energy_mu",
        "pohozaev",
        "action_omega",
    ];

    /// Evaluates every functional once; derived entries are formed from
    /// the same `K`, `M` and `P` so the algebraic identities hold exactly.
    pub fn compute(state: &StatePair, omega: f64) -> Result<Self> {
        let g = state.gamma();
        let (mu_u, mu_v) = (l2_norm_sq(&state.u), l2_norm_sq(&state.v));
        let kinetic = kinetic(state)?;
        let potential = potential(state)?;
        Ok(Self::from_parts(
            state.time,
            mu_u + state.mu() * mu_v,
            mu_u + 3.0 * g * mu_v,
            kinetic,
            potential,
            omega,
        ))
    }

    pub fn from_parts(time: f64, mass_mu: f64, mass_3gamma: f64, kinetic: f64, potential: f64, omega: f64) -> Self {
        let energy_mu = 0.5 * (kinetic + mass_mu) - potential;
        FunctionalReport {
            time,
            mass_mu,
            mass_3gamma,
            kinetic,
            potential,
            energy_mu,
            pohozaev: kinetic - 3.0 * potential,
            action_omega: energy_mu + 0.5 * omega * mass_3gamma,
        }
    }

    pub fn values(&self) -> [f64; 8] {
        [
            self.time,
            self.mass_mu,
            self.mass_3gamma,
            self.kinetic,
            self.potential,
            self.energy_mu,
            self.pohozaev,
            self.action_omega,
        ]
    }

    pub fn csv_header() -> String {
        Self::FIELDS.join(",")
    }

    /// Comma-separated row with round-trip (17 significant digit) floats.
    pub fn to_csv_row(&self) -> String {
        self.values().iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",")
    }
}

/// 17 significant digits; parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// `||u||^2 + weight ||v||^2`.
pub fn mass(state: &StatePair, weight: f64) -> f64 {
    l2_norm_sq(&state.u) + weight * l2_norm_sq(&state.v)
}

pub fn kinetic(state: &StatePair) -> Result<f64> {
    Ok(gradient_norm_sq(&state.u)? + gradient_norm_sq(&state.v)?)
}

pub fn interaction_density(u: Complex64, v: Complex64) -> f64 {
    let (a, b) = (u.norm_sqr(), v.norm_sqr());
    a * a / 36.0 + 2.25 * b * b + a * b + (u.conj().powi(3) * v).re / 9.0
}

pub fn potential(state: &StatePair) -> Result<f64> {
    check_same_grid(state.u.grid(), state.v.grid())?;
    let dens: Vec<f64> = state
        .u
        .samples()
        .iter()
        .zip(state.v.samples())
        .map(|(&u, &v)| interaction_density(u, v))
        .collect();
    Ok(dot_volumes(state.grid(), &dens))
}

pub fn energy(state: &StatePair) -> Result<f64> {
    Ok(FunctionalReport::compute(state, 0.0)?.energy_mu)
}

pub fn action(state: &StatePair, omega: f64) -> Result<f64> {
    Ok(FunctionalReport::compute(state, omega)?.action_omega)
}

pub fn pohozaev(state: &StatePair) -> Result<f64> {
    Ok(kinetic(state)? - 3.0 * potential(state)?)
}

/// `Im(conj(u) grad u + gamma conj(v) grad v)`, one real array per
/// gradient component (see [`spectral::gradient`] for the layout).
pub fn momentum_density(state: &StatePair) -> Result<Vec<Vec<f64>>> {
    let gu = gradient(&state.u)?;
    let gv = gradient(&state.v)?;
    let g = state.gamma();
    Ok(gu
        .iter()
        .zip(&gv)
        .map(|(du, dv)| {
            state
                .u
                .samples()
                .iter()
                .zip(du.samples())
                .zip(state.v.samples().iter().zip(dv.samples()))
                .map(|((u, du), (v, dv))| (u.conj() * du).im + g * (v.conj() * dv).im)
                .collect()
        })
        .collect())
}

/// `2 ∫ grad(phi) · Im(conj(u) grad u + gamma conj(v) grad v)`.
pub fn virial_quantity(state: &StatePair, weight_gradient: &[Vec<f64>]) -> Result<f64> {
    let p = momentum_density(state)?;
    if weight_gradient.len() != p.len() || weight_gradient.iter().any(|c| c.len() != state.grid().len()) {
        return Err(Error::structural(format!(
            "weight gradient must have {} components of {} samples",
            p.len(),
            state.grid().len()
        )));
    }
    let mut dens = vec![0.0; state.grid().len()];
    for (pc, wc) in p.iter().zip(weight_gradient) {
        for ((d, a), b) in dens.iter_mut().zip(pc).zip(wc) {
            *d += a * b;
        }
    }
    Ok(2.0 * dot_volumes(state.grid(), &dens))
}

/// `∫_{|x| <= R} |u|^2 + 3 gamma |v|^2`; a cell counts when its centre is inside.
pub fn local_mass(state: &StatePair, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::config(format!("local mass radius must be positive, got {radius}")));
    }
    let w = 3.0 * state.gamma();
    let dens: Vec<f64> = state
        .grid()
        .distances()
        .iter()
        .zip(state.u.samples().iter().zip(state.v.samples()))
        .map(|(&r, (u, v))| if r <= radius { u.norm_sqr() + w * v.norm_sqr() } else { 0.0 })
        .collect();
    Ok(dot_volumes(state.grid(), &dens))
}

/// `∫ u^3 conj(v)` imaginary part, the source term of the mass flux laws.
pub fn flux_source(state: &StatePair) -> f64 {
    let dens: Vec<f64> = state
        .u
        .samples()
        .iter()
        .zip(state.v.samples())
        .map(|(u, v)| (u.powi(3) * v.conj()).im)
        .collect();
    dot_volumes(state.grid(), &dens)
}

/// `∫_{|x| <= radius} |u|^p + |v|^p`.
pub fn local_lp(state: &StatePair, p: f64, radius: f64) -> f64 {
    let dens: Vec<f64> = state
        .grid()
        .distances()
        .iter()
        .zip(state.u.samples().iter().zip(state.v.samples()))
        .map(|(&r, (u, v))| if r <= radius { u.norm().powf(p) + v.norm().powf(p) } else { 0.0 })
        .collect();
    dot_volumes(state.grid(), &dens)
}

/// `L_gamma = |u|^2 + gamma^2 |v|^2`.
pub fn mass_density(state: &StatePair) -> Vec<f64> {
    let g2 = state.gamma() * state.gamma();
    state
        .u
        .samples()
        .iter()
        .zip(state.v.samples())
        .map(|(u, v)| u.norm_sqr() + g2 * v.norm_sqr())
        .collect()
}

/// `2 ∬ L_gamma(y) grad Theta_R(x - y) · p(x) dx dy` on a periodic box,
/// with `x - y` taken modulo the box.
pub fn interaction_morawetz(state: &StatePair, weights: &MorawetzWeights) -> Result<f64> {
    let grid = *state.grid();
    if grid.mode() != GeometryMode::Cart3D {
        return Err(Error::UnsupportedMode { op: "interaction_morawetz", mode: grid.mode().as_str() });
    }
    let p = momentum_density(state)?;
    let mass = ComplexField::from_real(grid, &mass_density(state))?;
    let kernel = weights.theta_gradient_kernel(&grid)?;
    let cell = grid.spacing().iter().product::<f64>();
    let mut total = 0.0;
    for (j, kj) in kernel.iter().enumerate() {
        let conv = spectral::circular_convolution(&mass, kj)?;
        total += conv.iter().zip(&p[j]).map(|(c, p)| c * p).sum::<f64>();
    }
    Ok(2.0 * total * cell * cell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const GAUSS_M: f64 = 1.968_701_243_215_302;

    fn r2(p: [f64; 3]) -> f64 {
        p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
    }

    fn gaussian_pair(grid: GridSpec, a: f64, b: f64) -> StatePair {
        let u = ComplexField::from_fn(grid, |p| Complex64::new(a * (-r2(p)).exp(), 0.0)).unwrap();
        let v = ComplexField::from_fn(grid, |p| Complex64::new(b * (-r2(p)).exp(), 0.0)).unwrap();
        StatePair::new(u, v, 3.0, 9.0).unwrap()
    }

    #[test]
    fn density_arithmetic() {
        let one = Complex64::new(1.0, 0.0);
        assert_eq!(interaction_density(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), 0.0);
        assert!((interaction_density(one, one) - 3.388_888_888_888_889).abs() < 1e-15);
        assert!((interaction_density(one, -one) - 3.166_666_666_666_667).abs() < 1e-15);
    }

    #[test]
    fn gaussian_oracles_radial() {
        let g = GridSpec::radial(1024, 12.0).unwrap();
        let s = gaussian_pair(g, 1.0, 0.0);
        assert!((mass(&s, 9.0) - GAUSS_M).abs() < 1e-9);
        assert!((kinetic(&s).unwrap() - 3.0 * GAUSS_M).abs() < 1e-9);
        let p = (PI / 4.0).powf(1.5) / 36.0;
        assert!((potential(&s).unwrap() - p).abs() < 1e-12);
        assert!((energy(&s).unwrap() - 3.918_067_8).abs() < 1e-6);
        assert!((pohozaev(&s).unwrap() - 5.848_099_6).abs() < 1e-6);
        let t = gaussian_pair(g, 0.0, 1.0);
        assert!((mass(&t, 9.0) - 9.0 * GAUSS_M).abs() < 1e-8);
        let both = gaussian_pair(g, 1.0, 1.0);
        assert!((kinetic(&both).unwrap() - 6.0 * GAUSS_M).abs() < 1e-8);
    }

    #[test]
    fn zero_state_is_zero() {
        let s = StatePair::zeros(GridSpec::cartesian(8, 2.0).unwrap(), 3.0, 9.0).unwrap();
        let r = FunctionalReport::compute(&s, 1.5).unwrap();
        assert_eq!(r.values()[1..], [0.0; 7]);
        assert_eq!(local_mass(&s, 1.0).unwrap(), 0.0);
        assert!(local_mass(&s, 0.0).is_err());
    }

    #[test]
    fn action_at_zero_omega_is_energy() {
        let s = gaussian_pair(GridSpec::radial(256, 8.0).unwrap(), 0.7, 0.4);
        assert_eq!(action(&s, 0.0).unwrap(), energy(&s).unwrap());
    }

    #[test]
    fn cross_term_of_potential() {
        let g = GridSpec::cartesian(8, 2.0).unwrap();
        let f = |p: [f64; 3]| (-r2(p)).exp() * (1.0 + 0.3 * p[0]);
        let h = |p: [f64; 3]| 0.5 * (-0.5 * r2(p)).exp();
        let plus = StatePair::new(
            ComplexField::from_fn(g, |p| Complex64::new(f(p), 0.0)).unwrap(),
            ComplexField::from_fn(g, |p| Complex64::new(h(p), 0.0)).unwrap(),
            3.0,
            9.0,
        )
        .unwrap();
        let minus = StatePair { v: plus.v.scale(-1.0), ..plus.clone() };
        let brute: f64 = g.positions().iter().map(|&p| f(p).powi(3) * h(p)).sum::<f64>() * 0.125;
        let diff = potential(&plus).unwrap() - potential(&minus).unwrap();
        assert!((diff - 2.0 / 9.0 * brute).abs() < 1e-14);
    }

    #[test]
    fn momentum_of_boosted_gaussian() {
        let g = GridSpec::cartesian(64, 6.0).unwrap();
        let u = ComplexField::from_fn(g, |p| Complex64::from_polar((-r2(p)).exp(), p[0])).unwrap();
        let s = StatePair::new(u.clone(), ComplexField::zeros(g), 3.0, 9.0).unwrap();
        let p = momentum_density(&s).unwrap();
        for (i, z) in u.samples().iter().enumerate() {
            assert!((p[0][i] - z.norm_sqr()).abs() < 1e-8);
            assert!(p[1][i].abs() < 1e-8 && p[2][i].abs() < 1e-8);
        }
        let e1 = vec![vec![1.0; g.len()], vec![0.0; g.len()], vec![0.0; g.len()]];
        assert!((virial_quantity(&s, &e1).unwrap() - 2.0 * GAUSS_M).abs() < 1e-7);
        let grad_r2: Vec<Vec<f64>> = (0..3).map(|j| g.positions().iter().map(|p| 2.0 * p[j]).collect()).collect();
        assert!(virial_quantity(&s, &grad_r2).unwrap().abs() < 1e-10);
        let real = gaussian_pair(g, 1.0, 0.5);
        assert!(virial_quantity(&real, &grad_r2).unwrap().abs() < 1e-14);
    }

    #[test]
    fn momentum_is_gamma_weighted() {
        let g = GridSpec::cartesian(16, 4.0).unwrap();
        let w = |p: [f64; 3]| Complex64::from_polar((-r2(p)).exp(), 0.5 * p[1] + p[2]);
        let u = ComplexField::from_fn(g, w).unwrap();
        let v = ComplexField::from_fn(g, |p| w(p) * 0.3).unwrap();
        let s1 = StatePair::new(u.clone(), v.clone(), 3.0, 9.0).unwrap();
        let s2 = StatePair::new(u.clone(), v.scale(2.0), 3.0, 9.0).unwrap();
        let s0 = StatePair::new(u, ComplexField::zeros(g), 3.0, 9.0).unwrap();
        let (p0, p1, p2) = (
            momentum_density(&s0).unwrap(),
            momentum_density(&s1).unwrap(),
            momentum_density(&s2).unwrap(),
        );
        for j in 0..3 {
            for i in 0..g.len() {
                let pv = p1[j][i] - p0[j][i];
                assert!((p2[j][i] - p0[j][i] - 4.0 * pv).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn local_mass_against_radial_quadrature() {
        let g = GridSpec::cartesian(32, 5.0).unwrap();
        let s = gaussian_pair(g, 1.0, 0.0);
        assert_eq!(local_mass(&s, 100.0).unwrap(), mass(&s, 9.0));
        // 1D oracle: ∫_0^1 4 pi r^2 e^{-2 r^2} dr by a fine midpoint rule
        let n = 200_000;
        let h = 1.0 / n as f64;
        let oracle: f64 = (0..n)
            .map(|i| {
                let r = (i as f64 + 0.5) * h;
                4.0 * PI * r * r * (-2.0 * r * r).exp() * h
            })
            .sum();
        let fine = GridSpec::radial(8192, 6.0).unwrap();
        let got = local_mass(&gaussian_pair(fine, 1.0, 0.0), 1.0).unwrap();
        assert!((got - oracle).abs() < 1e-3, "{got} {oracle}");
        let coarse = local_mass(&s, 1.0).unwrap();
        assert!((coarse - oracle).abs() < 0.1 * oracle);
    }

    #[test]
    fn morawetz_rejects_non_cartesian() {
        let s = gaussian_pair(GridSpec::radial(64, 8.0).unwrap(), 1.0, 0.0);
        let w = MorawetzWeights::build(1.0, 0.1, &GridSpec::cartesian(16, 4.0).unwrap()).unwrap();
        assert!(matches!(interaction_morawetz(&s, &w), Err(Error::UnsupportedMode { .. })));
    }

    fn random_state(vals: &[(f64, f64, f64, f64)]) -> StatePair {
        let g = GridSpec::cartesian(8, 2.0).unwrap();
        let u = vals.iter().map(|&(a, b, _, _)| Complex64::new(a, b)).collect();
        let v = vals.iter().map(|&(_, _, c, d)| Complex64::new(c, d)).collect();
        StatePair::new(ComplexField::new(g, u).unwrap(), ComplexField::new(g, v).unwrap(), 3.0, 9.0).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn identities_hold(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 512),
                           omega in -2.0f64..2.0) {
            let r = FunctionalReport::compute(&random_state(&vals), omega).unwrap();
            let scale = r.kinetic.abs() + r.mass_mu.abs() + r.potential.abs();
            prop_assert!((r.pohozaev + r.kinetic / 2.0 - (3.0 * r.energy_mu - 1.5 * r.mass_mu)).abs() <= 1e-12 * scale);
            prop_assert_eq!(r.energy_mu, 0.5 * (r.kinetic + r.mass_mu) - r.potential);
        }

        #[test]
        fn potential_bounded_by_moduli(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 512)) {
            let s = random_state(&vals);
            let m = StatePair { u: s.u.modulus(), v: s.v.modulus(), ..s.clone() };
            prop_assert!(potential(&s).unwrap() <= potential(&m).unwrap() * (1.0 + 1e-14));
        }

        #[test]
        fn gauge_invariance(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0), 512),
                            theta in -3.2f64..3.2) {
            let s = random_state(&vals);
            let t = StatePair {
                u: s.u.map(|z| z * Complex64::from_polar(1.0, theta)),
                v: s.v.map(|z| z * Complex64::from_polar(1.0, 3.0 * theta)),
                ..s.clone()
            };
            let (a, b) = (FunctionalReport::compute(&s, 0.0).unwrap(), FunctionalReport::compute(&t, 0.0).unwrap());
            for (x, y) in [(a.mass_mu, b.mass_mu), (a.kinetic, b.kinetic), (a.potential, b.potential)] {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
            }
        }
    }
}
