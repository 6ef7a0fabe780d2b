//! Ground states of the elliptic system at `ω = 0`, `μ = 3γ`:
//!
//! ```text
//! -Δf + f    = N1(f, g) = f³/9 + 2 f g² + f² g / 3
//! -Δg + 3γ g = N2(f, g) = 9 g³ + 2 f² g + f³ / 9
//! ```
//!
//! solved on a radial grid by Petviashvili iteration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{check_same_grid, ComplexField, StatePair};
use crate::functionals::{self, FunctionalReport};
use crate::grid::{GeometryMode, GridSpec};
use crate::spectral::{self, dot_volumes, l2_norm_sq, laplacian};

pub const DEFAULT_GAMMA: f64 = 3.0;
pub const DEFAULT_TOL: f64 = 1e-8;
/// `‖φ‖/‖ψ‖` below this marks the semi-trivial `(0, g)` branch.
pub const SEMI_TRIVIAL_RATIO: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Amplitudes `(A, B)` of the default seed `(A e^{-r²}, B e^{-r²})`.
    pub seed_amplitudes: (f64, f64),
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: DEFAULT_TOL, max_iter: 4000, seed_amplitudes: (3.0, 1.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Vector,
    SemiTrivial,
}

/// Constants persisted next to the snapshot pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateConstants {
    pub gamma: f64,
    #[serde(rename = "K_gs")]
    pub k_gs: f64,
    #[serde(rename = "M_gs")]
    pub m_gs: f64,
    #[serde(rename = "E_gs")]
    pub e_gs: f64,
    #[serde(rename = "P_gs")]
    pub p_gs: f64,
    #[serde(rename = "C_opt")]
    pub c_opt: f64,
    pub residuals: [f64; 2],
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateSolution {
    pub phi: ComplexField,
    pub psi: ComplexField,
    pub gamma: f64,
    pub omega: f64,
    pub mu_eff: f64,
    pub residual_1: f64,
    pub residual_2: f64,
    pub iterations: usize,
    pub branch: Branch,
    pub tol: f64,
    pub residual_history: Vec<f64>,
    pub constants: GroundStateConstants,
}

impl GroundStateSolution {
    pub fn state(&self) -> StatePair {
        StatePair::new(self.phi.clone(), self.psi.clone(), self.gamma, self.mu_eff).expect("validated at solve time")
    }

    pub fn converged(&self) -> bool {
        self.residual_1 <= self.tol && self.residual_2 <= self.tol
    }

    /// `(P/E - 1, E/M - 1, K/(3P) - 1)`.
    pub fn pohozaev_ratios(&self) -> [f64; 3] {
        let c = &self.constants;
        [c.p_gs / c.e_gs - 1.0, c.e_gs / c.m_gs - 1.0, c.k_gs / (3.0 * c.p_gs) - 1.0]
    }
}

fn n1(f: f64, g: f64) -> f64 {
    f * f * f / 9.0 + 2.0 * f * g * g + f * f * g / 3.0
}

fn n2(f: f64, g: f64) -> f64 {
    9.0 * g * g * g + 2.0 * f * f * g + f * f * f / 9.0
}

fn real_parts(f: &ComplexField) -> Vec<f64> {
    f.samples().iter().map(|z| z.re).collect()
}

/// `L²` norms of the residuals of both equations (spectral Laplacian).
pub fn elliptic_residual(f: &ComplexField, g: &ComplexField, gamma: f64) -> Result<(f64, f64)> {
    check_same_grid(f.grid(), g.grid())?;
    let lf = laplacian(f)?;
    let lg = laplacian(g)?;
    let grid = *f.grid();
    let mut r1 = Vec::with_capacity(grid.len());
    let mut r2 = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let (a, b) = (f.samples()[i], g.samples()[i]);
        let (na, nb) = nonlinearity_complex(a, b);
        r1.push((-lf.samples()[i] + a - na).norm_sqr());
        r2.push((-lg.samples()[i] + 3.0 * gamma * b - nb).norm_sqr());
    }
    Ok((dot_volumes(&grid, &r1).sqrt(), dot_volumes(&grid, &r2).sqrt()))
}

/// `∂N/∂conj` form of the nonlinearities, which reduces to `(N1, N2)` on
/// real fields.
fn nonlinearity_complex(u: Complex64, v: Complex64) -> (Complex64, Complex64) {
    let (a, b) = (u.norm_sqr(), v.norm_sqr());
    let f1 = u * (a / 9.0 + 2.0 * b) + u.conj() * u.conj() * v / 3.0;
    let f2 = v * (9.0 * b + 2.0 * a) + u * u * u / 9.0;
    (f1, f2)
}

fn gaussian_seed(grid: &GridSpec, a: f64, b: f64) -> Result<(ComplexField, ComplexField)> {
    let e = |p: [f64; 3]| (-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp();
    Ok((
        ComplexField::from_fn(*grid, |p| Complex64::new(a * e(p), 0.0))?,
        ComplexField::from_fn(*grid, |p| Complex64::new(b * e(p), 0.0))?,
    ))
}

fn inner(grid: &GridSpec, a: &[f64], b: &[f64]) -> f64 {
    let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
    dot_volumes(grid, &prod)
}

/// Petviashvili iteration for the pair.
pub fn solve_ground_state(
    gamma: f64,
    grid: &GridSpec,
    seed: Option<(&ComplexField, &ComplexField)>,
    options: &SolverOptions,
) -> Result<GroundStateSolution> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::config(format!("gamma must be positive, got {gamma}")));
    }
    if grid.mode() != GeometryMode::Radial3D {
        return Err(Error::UnsupportedMode { op: "solve_ground_state", mode: grid.mode().as_str() });
    }
    let (f0, g0) = match seed {
        Some((f, g)) => {
            check_same_grid(f.grid(), grid)?;
            check_same_grid(g.grid(), grid)?;
            (f.clone(), g.clone())
        }
        None => gaussian_seed(grid, options.seed_amplitudes.0, options.seed_amplitudes.1)?,
    };
    let mut f = real_parts(&f0);
    let mut g = real_parts(&g0);
    let c2 = 3.0 * gamma;

    let seed_norm = inner(grid, &f, &f) + inner(grid, &g, &g);
    if !(seed_norm > 0.0) {
        return Err(Error::Seed("seed pair is zero".into()));
    }
    let wave = spectral::spectral_wavevectors(grid);
    let inv1: Vec<Complex64> = wave.iter().map(|w| Complex64::new(1.0 / (1.0 + w.norm_sq), 0.0)).collect();
    let inv2: Vec<Complex64> = wave.iter().map(|w| Complex64::new(1.0 / (c2 + w.norm_sq), 0.0)).collect();
    let sym1: Vec<Complex64> = wave.iter().map(|w| Complex64::new(1.0 + w.norm_sq, 0.0)).collect();
    let sym2: Vec<Complex64> = wave.iter().map(|w| Complex64::new(c2 + w.norm_sq, 0.0)).collect();
    let as_field = |v: &[f64]| ComplexField::from_raw(*grid, v.iter().map(|&x| Complex64::new(x, 0.0)).collect());

    let mut history = Vec::new();
    for it in 1..=options.max_iter {
        let nf: Vec<f64> = f.iter().zip(&g).map(|(&a, &b)| n1(a, b)).collect();
        let ng: Vec<f64> = f.iter().zip(&g).map(|(&a, &b)| n2(a, b)).collect();
        let lf = real_parts(&spectral::apply_factors(&as_field(&f), &sym1)?);
        let lg = real_parts(&spectral::apply_factors(&as_field(&g), &sym2)?);
        let num = inner(grid, &f, &lf) + inner(grid, &g, &lg);
        let den = inner(grid, &f, &nf) + inner(grid, &g, &ng);
        if !(den > 0.0 && num > 0.0) || !den.is_finite() {
            return Err(if f.iter().chain(&g).all(|x| x.abs() < 1e-300) {
                Error::Triviality
            } else {
                Error::Seed(format!("stabilizing factor undefined at iteration {it} (num {num:.3e}, den {den:.3e})"))
            });
        }
        // residuals of the current iterate, in the same spectral form
        let res1: Vec<f64> = lf.iter().zip(&nf).map(|(a, b)| (a - b) * (a - b)).collect();
        let res2: Vec<f64> = lg.iter().zip(&ng).map(|(a, b)| (a - b) * (a - b)).collect();
        let (r1, r2) = (dot_volumes(grid, &res1).sqrt(), dot_volumes(grid, &res2).sqrt());
        history.push(r1.max(r2));
        if r1 <= options.tol && r2 <= options.tol {
            return finish(gamma, grid, f, g, it - 1, options.tol, history);
        }
        let m = (num / den).powf(1.5);
        let nf_s = spectral::apply_factors(&as_field(&nf), &inv1)?;
        let ng_s = spectral::apply_factors(&as_field(&ng), &inv2)?;
        f = nf_s.samples().iter().map(|z| m * z.re).collect();
        g = ng_s.samples().iter().map(|z| m * z.re).collect();
        let size = inner(grid, &f, &f) + inner(grid, &g, &g);
        if !size.is_finite() {
            return Err(Error::Convergence { iterations: it, last: f64::INFINITY, history });
        }
        if size < 1e-20 * seed_norm {
            return Err(Error::Triviality);
        }
    }
    let last = history.last().copied().unwrap_or(f64::INFINITY);
    Err(Error::Convergence { iterations: options.max_iter, last, history })
}

fn finish(
    gamma: f64,
    grid: &GridSpec,
    f: Vec<f64>,
    g: Vec<f64>,
    iterations: usize,
    tol: f64,
    history: Vec<f64>,
) -> Result<GroundStateSolution> {
    let phi = ComplexField::from_real(*grid, &f)?;
    let psi = ComplexField::from_real(*grid, &g)?;
    let (nf, ng) = (l2_norm_sq(&phi).sqrt(), l2_norm_sq(&psi).sqrt());
    if nf == 0.0 && ng == 0.0 {
        return Err(Error::Triviality);
    }
    let branch = if ng > 0.0 && nf / ng < SEMI_TRIVIAL_RATIO { Branch::SemiTrivial } else { Branch::Vector };
    let (r1, r2) = elliptic_residual(&phi, &psi, gamma)?;
    let mu = 3.0 * gamma;
    let state = StatePair::new(phi.clone(), psi.clone(), gamma, mu)?;
    let rep = FunctionalReport::compute(&state, 0.0)?;
    let constants = GroundStateConstants {
        gamma,
        k_gs: rep.kinetic,
        m_gs: rep.mass_3gamma,
        e_gs: rep.energy_mu,
        p_gs: rep.potential,
        c_opt: (1.0 / 3.0) / (rep.kinetic * rep.mass_3gamma).sqrt(),
        residuals: [r1, r2],
        iterations,
    };
    Ok(GroundStateSolution {
        phi,
        psi,
        gamma,
        omega: 0.0,
        mu_eff: mu,
        residual_1: r1,
        residual_2: r2,
        iterations,
        branch,
        tol,
        residual_history: history,
        constants,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnConstant {
    /// `(1/3)(K M)^{-1/2}`.
    pub c_opt: f64,
    /// `P / (K^{3/2} M^{1/2})`.
    pub c_alt: f64,
    pub relative_gap: f64,
}

fn require_converged(gs: &GroundStateSolution) -> Result<()> {
    if !gs.converged() {
        return Err(Error::Convergence {
            iterations: gs.iterations,
            last: gs.residual_1.max(gs.residual_2),
            history: gs.residual_history.clone(),
        });
    }
    Ok(())
}

/// Both expressions of the sharp constant; errors if they disagree by
/// more than `1e-3` relative.
pub fn gn_constant(gs: &GroundStateSolution) -> Result<GnConstant> {
    require_converged(gs)?;
    let c = &gs.constants;
    let c_alt = c.p_gs / (c.k_gs.powf(1.5) * c.m_gs.sqrt());
    let gap = (c.c_opt - c_alt).abs() / c.c_opt;
    if gap > 1e-3 {
        return Err(Error::Validation(vec![format!("C_opt formulas disagree by {gap:.3e}")]));
    }
    Ok(GnConstant { c_opt: c.c_opt, c_alt, relative_gap: gap })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// `K_gs M_gs`.
    pub gwp: f64,
    /// `E_gs M_gs / 2`.
    pub energy: f64,
}

pub fn threshold_constants(gs: &GroundStateSolution) -> Result<Thresholds> {
    require_converged(gs)?;
    Ok(Thresholds::from_constants(&gs.constants))
}

impl Thresholds {
    pub fn from_constants(c: &GroundStateConstants) -> Self {
        Thresholds { gwp: c.k_gs * c.m_gs, energy: 0.5 * c.e_gs * c.m_gs }
    }
}

/// `‖∇(e^{ix·ξ} f)‖² = ‖∇f‖² + 2 ξ·∫Im(conj(f) ∇f) + |ξ|² ‖f‖²`.
pub fn boosted_kinetic(f: &ComplexField, xi: [f64; 3]) -> Result<f64> {
    let grid = *f.grid();
    let base = spectral::gradient_norm_sq(f)?;
    let xi2 = xi.iter().map(|x| x * x).sum::<f64>();
    let grads = spectral::gradient(f)?;
    // component directions: radial fields carry no net momentum
    let dirs: Vec<usize> = match grid.mode() {
        GeometryMode::Radial3D => vec![],
        GeometryMode::Cart3D => vec![0, 1, 2],
        GeometryMode::Cyl3D => vec![2],
    };
    let comps: Vec<&ComplexField> = match grid.mode() {
        GeometryMode::Radial3D => vec![],
        GeometryMode::Cart3D => grads.iter().collect(),
        GeometryMode::Cyl3D => vec![&grads[1]],
    };
    let mut cross = 0.0;
    for (d, c) in dirs.iter().zip(comps) {
        let dens: Vec<f64> = f.samples().iter().zip(c.samples()).map(|(a, b)| (a.conj() * b).im).collect();
        cross += xi[*d] * dot_volumes(&grid, &dens);
    }
    Ok(base + 2.0 * cross + xi2 * l2_norm_sq(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinedGnCheck {
    pub xi1: [f64; 3],
    pub xi2: [f64; 3],
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnReport {
    pub potential: f64,
    pub bound: f64,
    /// `(bound - P) / bound`; zero for the zero sample.
    pub slack: f64,
    pub holds: bool,
    pub refined: Vec<RefinedGnCheck>,
}

/// Sharp and refined Gagliardo–Nirenberg checks on one sample.
pub fn gn_test(sample: &StatePair, constants: &GroundStateConstants, boosts: &[([f64; 3], [f64; 3])]) -> Result<GnReport> {
    let rep = FunctionalReport::compute(sample, 0.0)?;
    let m = functionals::mass(sample, 3.0 * sample.gamma());
    let bound = constants.c_opt * rep.kinetic.powf(1.5) * m.sqrt();
    let holds = rep.potential <= bound * (1.0 + 1e-6);
    let slack = if bound > 0.0 { (bound - rep.potential) / bound } else { 0.0 };
    let modulus = StatePair { u: sample.u.modulus(), v: sample.v.modulus(), ..sample.clone() };
    let p_abs = functionals::potential(&modulus)?;
    let scale = (1.0 / 3.0) * (rep.kinetic * m / (constants.k_gs * constants.m_gs)).sqrt();
    let mut refined = Vec::with_capacity(boosts.len());
    for &(xi1, xi2) in boosts {
        let k = boosted_kinetic(&sample.u, xi1)? + boosted_kinetic(&sample.v, xi2)?;
        let rhs = scale * k;
        refined.push(RefinedGnCheck { xi1, xi2, lhs: p_abs, rhs, holds: p_abs <= rhs * (1.0 + 1e-6) });
    }
    Ok(GnReport { potential: rep.potential, bound, slack, holds, refined })
}

/// Seeded test pair: each component is a sum of three Gaussians with
/// random complex amplitudes and widths, centred at the origin on radial
/// grids, on the axis on cylindrical grids and anywhere in the inner half
/// of a Cartesian box (with a random plane-wave phase).
pub fn random_sample(grid: &GridSpec, gamma: f64, mu: f64, seed: u64) -> Result<StatePair> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let half = grid.extent();
    let wmax = (half / 6.0).min(2.0);
    let component = |rng: &mut rand_chacha::ChaCha8Rng| {
        let terms: Vec<(Complex64, f64, [f64; 3], [f64; 3])> = (0..3)
            .map(|_| {
                let a = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                let w = rng.gen_range(0.4 * wmax..wmax);
                let mut c = [0.0; 3];
                let mut k = [0.0; 3];
                match grid.mode() {
                    GeometryMode::Radial3D => {}
                    GeometryMode::Cyl3D => c[2] = rng.gen_range(-0.25 * half..0.25 * half),
                    GeometryMode::Cart3D => {
                        for i in 0..3 {
                            c[i] = rng.gen_range(-0.25 * half..0.25 * half);
                            k[i] = rng.gen_range(-1.0..1.0);
                        }
                    }
                }
                (a, w, c, k)
            })
            .collect();
        ComplexField::from_fn(*grid, move |p| {
            terms
                .iter()
                .map(|(a, w, c, k)| {
                    let d2 = (0..3).map(|i| (p[i] - c[i]).powi(2)).sum::<f64>();
                    let ph = (0..3).map(|i| k[i] * p[i]).sum::<f64>();
                    a * (-d2 / (w * w)).exp() * Complex64::from_polar(1.0, ph)
                })
                .sum()
        })
    };
    let u = component(&mut rng)?;
    let v = component(&mut rng)?;
    StatePair::new(u, v, gamma, mu)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::radial(1024, 24.0).unwrap()
    }

    #[test]
    fn zero_seed_is_rejected() {
        let g = grid();
        let z = ComplexField::zeros(g);
        let err = solve_ground_state(3.0, &g, Some((&z, &z)), &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Seed(_)));
    }

    #[test]
    fn zero_pair_has_zero_residual() {
        let z = ComplexField::zeros(grid());
        assert_eq!(elliptic_residual(&z, &z, 3.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn converges_with_pohozaev_identities() {
        let g = grid();
        let gs = solve_ground_state(3.0, &g, None, &SolverOptions::default()).unwrap();
        assert!(gs.converged(), "{} {}", gs.residual_1, gs.residual_2);
        // the default seed relaxes onto the (0, g) branch at gamma = 3
        assert_eq!(gs.branch, Branch::SemiTrivial);
        for r in gs.pohozaev_ratios() {
            assert!(r.abs() < 1e-4, "{:?}", gs.pohozaev_ratios());
        }
        // positive up to spectral ringing in the far tail
        let peak = gs.psi.max_abs();
        assert!(gs.psi.samples().iter().all(|z| z.im == 0.0 && z.re > -1e-12 * peak));
        assert!(gs.psi.samples()[0].re > 0.5 * peak);
        let c = gn_constant(&gs).unwrap();
        assert!(c.c_opt > 0.0 && c.relative_gap < 1e-3);
        let t = threshold_constants(&gs).unwrap();
        assert!((t.energy - t.gwp / 6.0).abs() < 1e-6 * t.gwp);
        // perturbation is detected
        let bumped = gs.psi.map(|z| z * 1.1);
        let (_, r2) = elliptic_residual(&gs.phi, &bumped, 3.0).unwrap();
        assert!(r2 > 1e3 * gs.tol);
    }

    #[test]
    fn non_convergence_reports_history() {
        let opts = SolverOptions { max_iter: 3, ..SolverOptions::default() };
        match solve_ground_state(3.0, &grid(), None, &opts) {
            Err(Error::Convergence { iterations, history, .. }) => {
                assert_eq!(iterations, 3);
                assert_eq!(history.len(), 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_non_radial_grid() {
        let g = GridSpec::cartesian(16, 4.0).unwrap();
        assert!(solve_ground_state(3.0, &g, None, &SolverOptions::default()).is_err());
    }

    #[test]
    fn semi_trivial_branch_is_flagged() {
        let g = grid();
        let opts = SolverOptions { seed_amplitudes: (0.0, 1.0), ..SolverOptions::default() };
        let gs = solve_ground_state(3.0, &g, None, &opts).unwrap();
        assert_eq!(gs.branch, Branch::SemiTrivial);
    }

    #[test]
    fn boosted_kinetic_matches_direct_gradient() {
        let g = GridSpec::cartesian(32, 6.0).unwrap();
        let f = ComplexField::from_fn(g, |p| {
            Complex64::from_polar((-(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])).exp(), 0.5 * p[2])
        })
        .unwrap();
        // ξ on the grid lattice (multiples of π/6)
        let xi = [std::f64::consts::PI / 6.0, 0.0, -std::f64::consts::PI / 3.0];
        let boosted = f
            .samples()
            .iter()
            .zip(g.positions())
            .map(|(z, p)| z * Complex64::from_polar(1.0, xi[0] * p[0] + xi[1] * p[1] + xi[2] * p[2]))
            .collect();
        let direct = spectral::gradient_norm_sq(&ComplexField::new(g, boosted).unwrap()).unwrap();
        let formula = boosted_kinetic(&f, xi).unwrap();
        assert!((direct - formula).abs() < 1e-8 * direct);
    }
}
