use std::f64::consts::PI;

use lidl::density::{
    build_backend, fit_gaussian_log_density, log_density_box_conv, log_density_gaussian_conv,
    log_density_point_set, log_density_quadrature, log_density_sphere, BackendConfig, LogDensity,
    QuadratureSpec, Ridge,
};
use lidl::lidl::{perturb, theory::point_set_excess};
use lidl::manifolds::{generate, Dataset, ManifoldKind, ManifoldSpec};
use ndarray::{array, Array2};
use proptest::prelude::*;

const LN_2PI: f64 = 1.837_877_066_409_345_3;

#[test]
fn gaussian_conv_closed_form_at_origin() {
    let v = log_density_gaussian_conv(&[1.0; 10], 0.05, &[0.0; 10]).unwrap();
    let want = -5.0 * (2.0 * PI).ln() - 5.0 * 1.0025f64.ln();
    assert!((v - want).abs() < 1e-12);

    let v = log_density_gaussian_conv(&[1.0], 1e-8, &[0.0]).unwrap();
    assert!((v + 0.5 * LN_2PI).abs() < 1e-6);
}

#[test]
fn gaussian_conv_log_slope() {
    let f = |d: f64| log_density_gaussian_conv(&[1.0; 10], d, &[0.0; 10]).unwrap();
    let (delta, h) = (0.05f64, 1e-5);
    let fd = (f(delta * (1.0 + h)) - f(delta * (1.0 - h))) / ((1.0 + h).ln() - (1.0 - h).ln());
    let want = -10.0 * delta * delta / (1.0 + delta * delta);
    assert!((want + 0.024938).abs() < 1e-6);
    assert!((fd - want).abs() < 1e-8, "{fd} vs {want}");
}

#[test]
fn box_conv_interior_and_endpoint() {
    let centre = log_density_box_conv(&[0.0], &[1.0], 0.05, &[0.5]).unwrap();
    assert!(centre.abs() < 1e-12);
    let edge = log_density_box_conv(&[0.0], &[1.0], 0.05, &[0.0]).unwrap();
    assert!((edge - 0.5f64.ln()).abs() < 1e-12);
    assert!(log_density_box_conv(&[1.0], &[1.0], 0.05, &[0.5]).is_err());
}

#[test]
fn box_conv_separates_up_to_4000_dims() {
    for (delta, x) in [(0.05, 0.5), (0.05, 0.02), (0.01, 0.999)] {
        let one = log_density_box_conv(&[0.0], &[1.0], delta, &[x]).unwrap();
        for d in [10usize, 1000, 4000] {
            let v = log_density_box_conv(&vec![0.0; d], &vec![1.0; d], delta, &vec![x; d]).unwrap();
            assert!(v.is_finite());
            let want = d as f64 * one;
            assert!((v - want).abs() <= 1e-12 * want.abs().max(1e-300), "d={d}: {v} vs {want}");
        }
    }
}

#[test]
fn box_conv_far_tail_is_finite() {
    for x in [-2.0, 3.0, 50.0] {
        let v = log_density_box_conv(&[0.0], &[1.0], 0.01, &[x]).unwrap();
        assert!(v.is_finite());
        let gap = if x < 0.0 { -x } else { x - 1.0 };
        // leading term of the Mills ratio
        let z = gap / 0.01;
        let approx = -0.5 * z * z - z.ln() - 0.5 * LN_2PI;
        assert!((v - approx).abs() < 1e-3, "{x}: {v} vs {approx}");
    }
}

#[test]
fn point_set_examples() {
    let pts = array![[0.0], [1.0]];
    let delta: f64 = 0.1;
    let v = log_density_point_set(pts.view(), delta, &[0.0]).unwrap();
    let eps = (-50.0f64).exp();
    let want = -(2.0f64).ln() - delta.ln() - 0.5 * LN_2PI + eps.ln_1p();
    assert!((v - want).abs() < 1e-14);

    let one = array![[0.3, -1.0, 2.0]];
    let v = log_density_point_set(one.view(), 0.2, &[0.3, -1.0, 2.0]).unwrap();
    assert!((v - (-3.0 * 0.2f64.ln() - 1.5 * LN_2PI)).abs() < 1e-12);

    let empty = Array2::<f64>::zeros((0, 1));
    assert!(log_density_point_set(empty.view(), 0.1, &[0.0]).is_err());
}

#[test]
fn point_set_excess_bound_on_a_line() {
    let positions: Vec<f64> = (0..10).map(|k| k as f64 * 1.0 + if k > 4 { 0.5 } else { 0.0 }).collect();
    let points = Array2::from_shape_fn((10, 1), |(k, _)| positions[k]);
    for lambda in [1.0f64, 2.0, 3.0] {
        let delta = 0.999 / (2f64.sqrt() * lambda);
        let bound = 4.0 * (-lambda * lambda).exp();
        for n in 0..10 {
            let excess = point_set_excess(&positions, n, delta);
            assert!(excess <= bound, "λ={lambda} n={n}: {excess} > {bound}");
            let v = log_density_point_set(points.view(), delta, &[positions[n]]).unwrap();
            let base = -(10f64).ln() - delta.ln() - 0.5 * LN_2PI;
            assert!(((v - base) - excess.ln_1p()).abs() < 1e-12);
        }
    }
}

#[test]
fn power_law_slopes_at_small_delta() {
    let slope = |f: &dyn Fn(f64) -> f64, delta: f64| {
        let h = 1e-3;
        (f(delta * (1.0 + h)) - f(delta / (1.0 + h))) / (2.0 * (1.0 + h).ln())
    };
    let d = 6;
    let full = |delta: f64| log_density_gaussian_conv(&vec![1.0; d], delta, &vec![0.0; d]).unwrap();
    assert!(slope(&full, 1e-3).abs() < 1e-3);

    let spec = ManifoldSpec::with_ambient_dim(
        ManifoldKind::PointsOnLine {
            positions: (0..10).map(f64::from).collect(),
            min_gap: 1.0,
        },
        4,
    )
    .unwrap();
    let data = generate(&spec, 10, 0).unwrap();
    let backend = build_backend(&BackendConfig::PointSet);
    let atom = |delta: f64| {
        backend
            .prepare(&data, delta, 0)
            .unwrap()
            .log_density(&[3.0, 0.0, 0.0, 0.0])
            .unwrap()
    };
    assert!((slope(&atom, 1e-3) + 4.0).abs() < 1e-3);
}

#[test]
fn sphere_matches_independent_colatitude_integral() {
    let delta: f64 = 0.01;
    let mut x = vec![0.0; 8];
    x[0] = 0.6;
    x[3] = -0.8;
    let got = log_density_sphere(7, 8, delta, &x, 1e-10).unwrap();

    // composite Simpson over θ ∈ [0, 0.3] of sin⁶θ e^{−(2−2cosθ)/2δ²}
    let m = 60_000;
    let h = 0.3 / m as f64;
    let g = |t: f64| t.sin().powi(6) * (-(1.0 - t.cos()) / (delta * delta)).exp();
    let mut sum = g(0.0) + g(0.3);
    for i in 1..m {
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    let integral = sum * h / 3.0;
    // ∫_0^π sin⁶ = 5π/16
    let want = integral.ln() - (5.0 * PI / 16.0).ln() - 8.0 * (delta.ln() + 0.5 * LN_2PI);
    assert!((got - want).abs() < 1e-7, "{got} vs {want}");
}

#[test]
fn quadrature_circle_gives_one_dimensional_estimate() {
    let q = QuadratureSpec::from_manifold(&ManifoldSpec::new(ManifoldKind::UnitCircle)).unwrap();
    let delta: f64 = 0.05;
    let a = log_density_quadrature(&q, delta, &[1.0, 0.0]).unwrap();
    let b = log_density_quadrature(&q, 1.05 * delta, &[1.0, 0.0]).unwrap();
    let d_hat = 2.0 + (b - a) / 1.05f64.ln();
    assert!((0.9..=1.1).contains(&d_hat), "{d_hat}");
}

fn riemann_2d(f: impl Fn(f64, f64) -> f64, lo: f64, hi: f64, h: f64) -> f64 {
    let n = ((hi - lo) / h).round() as usize;
    let mut total = 0.0;
    for i in 0..=n {
        for j in 0..=n {
            total += f(lo + i as f64 * h, lo + j as f64 * h);
        }
    }
    total * h * h
}

fn riemann_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, h: f64) -> f64 {
    let n = ((hi - lo) / h).round() as usize;
    (0..=n).map(|i| f(lo + i as f64 * h)).sum::<f64>() * h
}

#[test]
fn analytic_densities_integrate_to_one() {
    let delta = 0.15;
    let g1 = riemann_1d(|x| log_density_gaussian_conv(&[0.7], delta, &[x]).unwrap().exp(), -8.0, 8.0, 0.01);
    assert!((g1 - 1.0).abs() < 1e-6, "{g1}");
    let b1 = riemann_1d(|x| log_density_box_conv(&[0.0], &[1.0], delta, &[x]).unwrap().exp(), -2.0, 3.0, 0.01);
    assert!((b1 - 1.0).abs() < 1e-6, "{b1}");
    let pts = array![[0.0, 0.0], [1.0, 0.5], [-0.5, 1.0]];
    let p2 = riemann_2d(|x, y| log_density_point_set(pts.view(), delta, &[x, y]).unwrap().exp(), -2.0, 3.0, 0.02);
    assert!((p2 - 1.0).abs() < 1e-6, "{p2}");
    let box2 = riemann_2d(
        |x, y| log_density_box_conv(&[0.0, 0.0], &[1.0, 0.5], delta, &[x, y]).unwrap().exp(),
        -1.5,
        2.5,
        0.02,
    );
    assert!((box2 - 1.0).abs() < 1e-6, "{box2}");
}

#[test]
fn quadrature_circle_integrates_to_one() {
    let q = QuadratureSpec::from_manifold(&ManifoldSpec::new(ManifoldKind::UnitCircle)).unwrap();
    let total = riemann_2d(|x, y| log_density_quadrature(&q, 0.2, &[x, y]).unwrap().exp(), -2.6, 2.6, 0.04);
    assert!((total - 1.0).abs() < 1e-6, "{total}");
}

#[test]
fn gaussian_fit_recovers_standard_normal() {
    let spec = ManifoldSpec::new(ManifoldKind::GaussianDiag { sigmas: vec![1.0, 1.0] });
    let data = generate(&spec, 100_000, 3).unwrap();
    let fit = fit_gaussian_log_density(&data, Ridge::Relative).unwrap();
    let v = fit.log_density(&[0.0, 0.0]).unwrap();
    assert!((v + (2.0 * PI).ln()).abs() < 0.02);
}

#[test]
fn gaussian_fit_of_repeated_point_is_a_kernel() {
    let delta: f64 = 0.05;
    let p = [0.4, -1.2];
    let data = Dataset::from_points(Array2::from_shape_fn((30, 2), |(_, j)| p[j])).unwrap();
    let fit = fit_gaussian_log_density(&data, Ridge::Fixed(delta * delta)).unwrap();
    let atom = array![[0.4, -1.2]];
    for x in [[0.4, -1.2], [0.45, -1.1], [0.0, 0.0]] {
        let a = fit.log_density(&x).unwrap();
        let b = log_density_point_set(atom.view(), delta, &x).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    assert!(fit_gaussian_log_density(&data, Ridge::None).is_err());
}

#[test]
fn gaussian_fit_variances_include_noise() {
    let sigmas = vec![1.0, 0.5, 0.1];
    let delta = 0.2;
    let spec = ManifoldSpec::new(ManifoldKind::GaussianDiag { sigmas: sigmas.clone() });
    let clean = generate(&spec, 50_000, 8).unwrap();
    let noisy = perturb(&clean, delta, 9).unwrap();
    let fit = fit_gaussian_log_density(&noisy, Ridge::Relative).unwrap();
    for (k, s) in sigmas.iter().enumerate() {
        let v = s * s + delta * delta;
        let se = v * (2.0 / 50_000f64).sqrt();
        assert!((fit.covariance[(k, k)] - v).abs() < 5.0 * se, "axis {k}");
    }
}

#[test]
fn backend_models_are_deterministic() {
    let spec = ManifoldSpec::new(ManifoldKind::UnitCircle);
    let data = generate(&spec, 10, 0).unwrap();
    let backend = build_backend(&BackendConfig::quadrature());
    let m = backend.prepare(&data, 0.1, 1).unwrap();
    let a = m.log_density(&[0.3, 0.9]).unwrap();
    let b = m.log_density(&[0.3, 0.9]).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn box_and_quadrature_agree(x in -0.5f64..1.5, delta in 0.005f64..0.5) {
        let spec = ManifoldSpec::new(ManifoldKind::UniformInterval { a: 0.0, b: 1.0 });
        let q = QuadratureSpec::from_manifold(&spec).unwrap();
        let a = log_density_box_conv(&[0.0], &[1.0], delta, &[x]).unwrap();
        let b = log_density_quadrature(&q, delta, &[x]).unwrap();
        prop_assert!((a - b).abs() <= 1e-7, "x={} δ={}: {} vs {}", x, delta, a, b);
    }
}
