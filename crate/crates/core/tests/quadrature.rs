use fraclab::quadrature::{
    kernel_moments, radial_fraclap, richardson_gradient, tail_integral, DensityTail, RadialDensity, TailDescriptor,
};
use fraclab::specfun::{
    ball_complement_integral, gamma, normalization_constant, sphere_measures, weighted_tail_constant,
};
use fraclab::{fraclap_pv, FracParams, QuadConfig, ScalarField};
use proptest::prelude::*;
use std::f64::consts::PI;

fn poisson(n: usize) -> ScalarField {
    ScalarField::radial(
        n,
        |r| 1.0 / (1.0 + r * r),
        TailDescriptor::PowerLaw { coefficient: 1.0, exponent: 2.0, onset: 1.0, exact: false },
    )
    .with_nonneg(true)
}

fn bump(r: f64) -> f64 {
    if r <= 2.0 || r >= 3.0 {
        0.0
    } else {
        16.0 * ((r - 2.0) * (3.0 - r)).powi(4)
    }
}

fn pv(f: &ScalarField, x: &[f64], p: &FracParams) -> f64 {
    fraclap_pv(f, x, p, &QuadConfig::default()).unwrap().value
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

#[test]
fn normalization_constants() {
    assert!((normalization_constant(1, 0.5).unwrap() - 1.0 / PI).abs() < 1e-15);
    assert!((normalization_constant(3, 0.5).unwrap() - 1.0 / (PI * PI)).abs() < 1e-15);
    assert!((normalization_constant(2, 0.5).unwrap() - 1.0 / (2.0 * PI)).abs() < 1e-15);
    assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-14);
    assert!((gamma(5.0) - 24.0).abs() < 1e-12);
}

#[test]
fn sphere_areas() {
    assert_eq!(sphere_measures(1).unwrap(), (2.0, 2.0));
    let (a, v) = sphere_measures(4).unwrap();
    assert!(rel(a, 2.0 * PI * PI) < 1e-14 && rel(v, PI * PI / 2.0) < 1e-14);
    assert!(sphere_measures(0).is_err());
}

#[test]
fn weighted_tail_examples() {
    assert!(rel(weighted_tail_constant(1, 0.5, 1.0).unwrap(), 1.0) < 1e-15);
    assert!(rel(ball_complement_integral(1, 0.5, 3.0, 0.0).unwrap(), 2.0 / 3.0) < 1e-15);
    assert!(weighted_tail_constant(1, 0.5, -1.0).is_err());
}

#[test]
fn tail_of_one_and_of_power_law() {
    let cfg = QuadConfig::default();
    for (n, s) in [(1, 0.5), (2, 0.25), (3, 0.75)] {
        let p = FracParams::new(n, s).unwrap();
        let x = vec![0.0; n];
        for r in [2.0, 10.0] {
            let one = tail_integral(&ScalarField::constant(n, 1.0), &x, r, &p, &cfg).unwrap().value;
            assert!(rel(one, p.c * p.gamma_tail * r.powf(-2.0 * s)) < 1e-8, "n={n} r={r}");
            let q = 1.5;
            let f = ScalarField::radial(
                n,
                move |t| t.powf(-q),
                TailDescriptor::PowerLaw { coefficient: 1.0, exponent: q, onset: 1.0, exact: true },
            );
            let got = tail_integral(&f, &x, r, &p, &cfg).unwrap().value;
            let want = p.c * p.weighted_tail(q).unwrap() * r.powf(-2.0 * s - q);
            assert!(rel(got, want) < 1e-8, "n={n} r={r}: {got} vs {want}");
        }
    }
}

#[test]
fn radial_path_matches_ray_path() {
    let cfg = QuadConfig::default();
    for (n, s) in [(1, 0.5), (2, 0.5), (2, 0.25), (3, 0.75)] {
        let p = FracParams::new(n, s).unwrap();
        let f = fraclab::constructions::make_v_j(16.0, &p, &cfg).unwrap().v;
        for r in [0.0, 1.0, 2.0] {
            let a = radial_fraclap(&f, r, &p, &cfg).unwrap().value;
            let mut x = vec![0.0; n];
            x[0] = r;
            let b = pv(&f, &x, &p);
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0), "n={n} s={s} r={r}: {a} vs {b}");
        }
    }
}

#[test]
fn kernel_gradient_matches_richardson() {
    let cfg = QuadConfig { rel_tol: 1e-12, abs_tol: 1e-14, ..QuadConfig::default() };
    let p = FracParams::new(2, 0.5).unwrap();
    let d = RadialDensity::new(|s| 1.0 + (s - 3.0).cos(), 3.0, 7.0).with_tail(DensityTail::Terms(vec![(2.0, 1.0)]));
    for x in [[0.3, -0.5], [1.2, 0.4], [-0.9, -1.1]] {
        let m = kernel_moments(&d, &x, &p, &cfg).unwrap();
        let f = |y: &[f64]| fraclab::quadrature::kernel_integral(&d, y, &p, &cfg).unwrap().value;
        let g = richardson_gradient(f, &x, 0.1, 4);
        for k in 0..2 {
            assert!((g[k] - m.gradient[k]).abs() < 1e-7 * m.value, "{x:?}");
        }
    }
}

#[test]
fn poisson_closed_form_in_one_dimension() {
    let p = FracParams::new(1, 0.5).unwrap();
    for x in [0.0, 0.3, 1.0, 4.0] {
        let want = (1.0 - x * x) / ((1.0 + x * x) * (1.0 + x * x));
        assert!((pv(&poisson(1), &[x], &p) - want).abs() < 1e-8, "x={x}");
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let p = FracParams::new(2, 0.5).unwrap();
    assert!(fraclap_pv(&poisson(2), &[0.0], &p, &QuadConfig::default()).is_err());
    assert!(FracParams::new(1, 1.0).is_err());
    assert!(FracParams::new(1, 0.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn gamma_tail_times_two_sigma_is_sphere_area(n in 1usize..6, s in 0.01f64..0.99) {
        let p = FracParams::new(n, s).unwrap();
        prop_assert!(rel(p.gamma_tail * 2.0 * s, p.sphere_area) < 1e-14);
    }

    #[test]
    fn unit_ball_complement_is_weighted_constant(n in 1usize..5, s in 0.05f64..0.95, q in 0.0f64..4.0) {
        let a = ball_complement_integral(n, s, 1.0, q).unwrap();
        prop_assert!(rel(a, weighted_tail_constant(n, s, q).unwrap()) < 1e-14);
    }

    #[test]
    fn constants_are_harmonic(n in 1usize..4, s in 0.1f64..0.9, c in -5.0f64..5.0, x in prop::collection::vec(-4.0f64..4.0, 3)) {
        let p = FracParams::new(n, s).unwrap();
        let v = pv(&ScalarField::constant(n, c), &x[..n], &p);
        prop_assert!(v.abs() <= 1e-9, "{v}");
    }

    #[test]
    fn translation_invariance(n in 1usize..3, s in 0.2f64..0.8, h in prop::collection::vec(-2.0f64..2.0, 2), x in prop::collection::vec(-1.5f64..1.5, 2)) {
        let p = FracParams::new(n, s).unwrap();
        let u = poisson(n);
        let xh: Vec<f64> = x[..n].iter().zip(&h).map(|(a, b)| a + b).collect();
        let a = pv(&u.translated(&h[..n]), &xh, &p);
        let b = pv(&u, &x[..n], &p);
        prop_assert!(rel(a, b) <= 1e-6 || (a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn scaling_identity(n in 1usize..3, s in 0.2f64..0.8, mu in 0.5f64..3.0, x in prop::collection::vec(-1.5f64..1.5, 2)) {
        let p = FracParams::new(n, s).unwrap();
        let u = poisson(n);
        let mx: Vec<f64> = x[..n].iter().map(|v| mu * v).collect();
        let a = pv(&u.dilated(mu), &x[..n], &p);
        let b = mu.powf(2.0 * s) * pv(&u, &mx, &p);
        prop_assert!(rel(a, b) <= 1e-6 || (a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn comparison_principle(n in 1usize..3, s in 0.2f64..0.8, t in 0.0f64..1.5, k in 0.1f64..2.0) {
        let p = FracParams::new(n, s).unwrap();
        let u = poisson(n);
        let v = ScalarField::radial(n, move |r| 1.0 / (1.0 + r * r) + k * bump(r), TailDescriptor::PowerLaw {
            coefficient: 1.0,
            exponent: 2.0,
            onset: 3.0,
            exact: false,
        })
        .with_breaks(vec![2.0, 3.0]);
        let mut x = vec![0.0; n];
        x[0] = t;
        let cfg = QuadConfig::default();
        let a = fraclap_pv(&u, &x, &p, &cfg).unwrap();
        let b = fraclap_pv(&v, &x, &p, &cfg).unwrap();
        prop_assert!(a.value >= b.value - a.err_est - b.err_est, "{} < {}", a.value, b.value);
    }

    #[test]
    fn tail_mass_is_monotone(n in 1usize..3, s in 0.2f64..0.8, r0 in 2.0f64..6.0, t in 0.0f64..0.9) {
        let p = FracParams::new(n, s).unwrap();
        let mut x = vec![0.0; n];
        x[n - 1] = t;
        let cfg = QuadConfig::default();
        let vals: Vec<f64> = [r0, 1.5 * r0, 3.0 * r0]
            .iter()
            .map(|&r| tail_integral(&poisson(n), &x, r, &p, &cfg).unwrap().value)
            .collect();
        prop_assert!(vals[0] > vals[1] && vals[1] > vals[2] && vals[2] > 0.0, "{vals:?}");
    }
}
