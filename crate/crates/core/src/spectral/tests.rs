use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use super::*;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn gauss_integral() -> f64 {
    (PI / 2.0).powf(1.5)
}

fn r2(p: [f64; 3]) -> f64 {
    p[0] * p[0] + p[1] * p[1] + p[2] * p[2]
}

#[test]
fn integrate_zero_is_zero() {
    for g in [
        GridSpec::radial(64, 5.0).unwrap(),
        GridSpec::cartesian(16, 4.0).unwrap(),
        GridSpec::cylindrical(16, 16, 4.0, 4.0).unwrap(),
    ] {
        assert_eq!(integrate(&g, &vec![0.0; g.len()]).unwrap(), 0.0);
    }
}

#[test]
fn integrate_gaussian_all_modes() {
    let expect = gauss_integral();
    let cases = [
        (GridSpec::radial(512, 8.0).unwrap(), 1e-12),
        (GridSpec::cartesian(32, 5.0).unwrap(), 1e-10),
        // midpoint in rho is second order for odd integrands
        (GridSpec::cylindrical(256, 64, 6.0, 6.0).unwrap(), 2e-4),
    ];
    for (g, tol) in cases {
        let vals: Vec<f64> = g.positions().into_iter().map(|p| (-2.0 * r2(p)).exp()).collect();
        let got = integrate(&g, &vals).unwrap();
        assert!(((got - expect) / expect).abs() < tol, "{g}: {got} vs {expect}");
    }
}

#[test]
fn integrate_ball_volume() {
    let g = GridSpec::radial(4096, 2.0).unwrap();
    let vals: Vec<f64> = g.radii().into_iter().map(|r| if r <= 1.0 { 1.0 } else { 0.0 }).collect();
    let got = integrate(&g, &vals).unwrap();
    let h = g.spacing()[0];
    assert!((got - 4.0 * PI / 3.0).abs() < 4.0 * PI * h * 2.0, "{got}");
}

#[test]
fn integrate_shape_mismatch() {
    let g = GridSpec::radial(64, 5.0).unwrap();
    assert!(matches!(integrate(&g, &[1.0; 10]), Err(Error::Structural(_))));
}

#[test]
fn laplacian_constant_cartesian_vanishes() {
    let g = GridSpec::cartesian(16, 3.0).unwrap();
    let f = ComplexField::from_fn(g, |_| c(2.5)).unwrap();
    assert!(laplacian(&f).unwrap().max_abs() < 1e-12);
    for d in gradient(&f).unwrap() {
        assert!(d.max_abs() < 1e-12);
    }
}

#[test]
fn plane_wave_is_an_eigenfunction() {
    let g = GridSpec::cartesian(16, PI).unwrap();
    // on-grid wavevector: multiples of pi / L = 1
    let k = [2.0, -1.0, 3.0];
    let f = ComplexField::from_fn(g, |p| Complex64::from_polar(1.0, k[0] * p[0] + k[1] * p[1] + k[2] * p[2])).unwrap();
    let lap = laplacian(&f).unwrap();
    let kk = k.iter().map(|x| x * x).sum::<f64>();
    for (a, b) in lap.samples().iter().zip(f.samples()) {
        assert!((a + b * kk).norm() < 1e-10);
    }
    let grad = gradient(&f).unwrap();
    for j in 0..3 {
        for (a, b) in grad[j].samples().iter().zip(f.samples()) {
            assert!((a - b * Complex64::new(0.0, k[j])).norm() < 1e-10);
        }
    }
}

#[test]
fn laplacian_of_gaussian_pointwise() {
    let exact = |r: f64| (4.0 * r * r - 6.0) * (-r * r).exp();
    let g = GridSpec::radial(256, 10.0).unwrap();
    let f = ComplexField::from_fn(g, |p| c((-r2(p)).exp())).unwrap();
    let lap = laplacian(&f).unwrap();
    for (z, r) in lap.samples().iter().zip(g.radii()) {
        assert!((z.re - exact(r)).abs() < 1e-10 && z.im.abs() < 1e-10, "r={r}");
    }
    let g = GridSpec::cartesian(64, 6.0).unwrap();
    let f = ComplexField::from_fn(g, |p| c((-r2(p)).exp())).unwrap();
    let lap = laplacian(&f).unwrap();
    for (z, p) in lap.samples().iter().zip(g.positions()) {
        assert!((z.re - exact(r2(p).sqrt())).abs() < 1e-8);
    }
    // second-order differences in rho: error O(h^2)
    let g = GridSpec::cylindrical(256, 64, 6.0, 6.0).unwrap();
    let f = ComplexField::from_fn(g, |p| c((-r2(p)).exp())).unwrap();
    let lap = laplacian(&f).unwrap();
    let h = g.spacing()[0];
    for (z, p) in lap.samples().iter().zip(g.positions()) {
        assert!((z.re - exact(r2(p).sqrt())).abs() < 20.0 * h * h);
    }
}

#[test]
fn gaussian_gradient_norm() {
    let expect = 3.0 * gauss_integral();
    let g = GridSpec::radial(1024, 12.0).unwrap();
    let f = ComplexField::from_fn(g, |p| c((-r2(p)).exp())).unwrap();
    let got = gradient_norm_sq(&f).unwrap();
    assert!(((got - expect) / expect).abs() < 1e-12, "{got}");
    let g = GridSpec::cartesian(32, 5.0).unwrap();
    let f = ComplexField::from_fn(g, |p| c((-r2(p)).exp())).unwrap();
    let got = gradient_norm_sq(&f).unwrap();
    assert!(((got - expect) / expect).abs() < 1e-9, "{got}");
    let g = GridSpec::cylindrical(512, 64, 6.0, 6.0).unwrap();
    let f = ComplexField::from_fn(g, |p| c((-r2(p)).exp())).unwrap();
    let got = gradient_norm_sq(&f).unwrap();
    assert!(((got - expect) / expect).abs() < 1e-4, "{got}");
}

#[test]
fn radial_gradient_matches_derivative() {
    let g = GridSpec::radial(512, 10.0).unwrap();
    let f = ComplexField::from_fn(g, |p| c((-r2(p)).exp())).unwrap();
    let d = &gradient(&f).unwrap()[0];
    for (z, r) in d.samples().iter().zip(g.radii()) {
        assert!((z.re + 2.0 * r * (-r * r).exp()).abs() < 1e-10);
    }
}

#[test]
fn multiplier_identity_and_laplacian_equivalence() {
    let g = GridSpec::cartesian(16, 4.0).unwrap();
    let f = ComplexField::from_fn(g, |p| Complex64::new((-r2(p)).exp(), p[0] * (-r2(p)).exp())).unwrap();
    let same = apply_multiplier(&f, |_| c(1.0)).unwrap();
    assert!(same.sup_distance(&f).unwrap() < 1e-14);
    let via_symbol = apply_multiplier(&f, |w| c(-w.norm_sq)).unwrap();
    assert_eq!(via_symbol, laplacian(&f).unwrap());
}

#[test]
fn cylindrical_multiplier_matches_difference_laplacian() {
    let g = GridSpec::cylindrical(32, 32, 5.0, 5.0).unwrap();
    let f = ComplexField::from_fn(g, |p| c((-r2(p)).exp())).unwrap();
    let a = apply_multiplier(&f, |w| c(-w.norm_sq)).unwrap();
    let b = laplacian(&f).unwrap();
    assert!(a.sup_distance(&b).unwrap() < 1e-9 * b.max_abs());
}

#[test]
fn unit_modulus_multiplier_preserves_norm() {
    let fields = [
        GridSpec::radial(256, 10.0).unwrap(),
        GridSpec::cartesian(16, 4.0).unwrap(),
        GridSpec::cylindrical(32, 32, 5.0, 5.0).unwrap(),
    ]
    .map(|g| ComplexField::from_fn(g, |p| Complex64::new((-r2(p)).exp(), 0.3 * (-2.0 * r2(p)).exp())).unwrap());
    for f in fields {
        let prop = apply_multiplier(&f, |w| Complex64::from_polar(1.0, -0.7 * (w.norm_sq + 1.0))).unwrap();
        let (a, b) = (l2_norm_sq(&f), l2_norm_sq(&prop));
        assert!(((a - b) / a).abs() < 1e-12, "{} {a} {b}", f.grid());
    }
}

#[test]
fn rejects_non_finite_symbol() {
    let g = GridSpec::radial(64, 4.0).unwrap();
    let f = ComplexField::zeros(g);
    assert!(apply_multiplier(&f, |w| c(1.0 / w.norm_sq)).is_err());
}

#[test]
fn support_margin_flags_boundary_mass() {
    let g = GridSpec::cartesian(16, 6.0).unwrap();
    let tight = ComplexField::from_fn(g, |p| c((-r2(p)).exp())).unwrap();
    assert!(support_margin(&tight) < SUPPORT_MARGIN_TOL);
    let wide = ComplexField::from_fn(g, |p| c((-0.01 * r2(p)).exp())).unwrap();
    assert!(support_margin(&wide) > SUPPORT_MARGIN_TOL);
}

fn cart_field(vals: &[(f64, f64)]) -> ComplexField {
    let g = GridSpec::cartesian(8, 2.0).unwrap();
    ComplexField::new(g, vals.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval_round_trip(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 512)) {
        let f = cart_field(&vals);
        let back = apply_multiplier(&f, |_| c(1.0)).unwrap();
        let (a, b) = (l2_norm_sq(&f), l2_norm_sq(&back));
        prop_assert!(((a - b) / a).abs() < 1e-12);
    }

    #[test]
    fn integrate_linear_and_monotone(
        a in proptest::collection::vec(0.0f64..1.0, 64),
        b in proptest::collection::vec(0.0f64..1.0, 64),
        s in -3.0f64..3.0,
    ) {
        let g = GridSpec::radial(64, 3.0).unwrap();
        let ia = integrate(&g, &a).unwrap();
        let ib = integrate(&g, &b).unwrap();
        let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x + s * y).collect();
        let im = integrate(&g, &mix).unwrap();
        prop_assert!((im - (ia + s * ib)).abs() < 1e-12 * (1.0 + ia.abs() + ib.abs() * s.abs()));
        prop_assert!(ia >= 0.0);
        let bigger: Vec<f64> = a.iter().map(|x| x + 0.5).collect();
        prop_assert!(integrate(&g, &bigger).unwrap() >= ia);
    }

    #[test]
    fn derivatives_commute_with_cyclic_shifts(
        vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 512),
        shift in 0usize..8,
    ) {
        let f = cart_field(&vals);
        // shift along axis 0 by `shift` nodes
        let n = 8;
        let stride = 64;
        let shifted_samples = |s: &[Complex64]| -> Vec<Complex64> {
            (0..s.len()).map(|idx| {
                let i = idx / stride;
                let rest = idx % stride;
                s[((i + n - shift) % n) * stride + rest]
            }).collect()
        };
        let g = *f.grid();
        let fs = ComplexField::new(g, shifted_samples(f.samples())).unwrap();
        let lap_then_shift = shifted_samples(laplacian(&f).unwrap().samples());
        let shift_then_lap = laplacian(&fs).unwrap();
        for (a, b) in lap_then_shift.iter().zip(shift_then_lap.samples()) {
            prop_assert!((a - b).norm() < 1e-11);
        }
        let ga = gradient(&f).unwrap();
        let gb = gradient(&fs).unwrap();
        for j in 0..3 {
            let sa = shifted_samples(ga[j].samples());
            for (a, b) in sa.iter().zip(gb[j].samples()) {
                prop_assert!((a - b).norm() < 1e-11);
            }
        }
    }
}
