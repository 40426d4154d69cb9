use std::f64::consts::PI;

use blowuplab::grid::{
    derivative, integrate, interior_weighted_integral, second_derivative, sobolev_norm, sup_norm, weighted_integral,
    Axis, Domain, Grid,
};
use blowuplab::Error;

fn cube(nx: usize, nz: usize) -> Grid {
    Grid::new(Domain::bounded(PI, PI).unwrap(), nx, nz).unwrap()
}

/// Closed form of the trapezoid sum of `sin` over `n` panels of `[0, pi]`.
fn trapezoid_sine(n: usize) -> f64 {
    let h = PI / n as f64;
    h / (h / 2.0).tan()
}

#[test]
fn constant_integrates_to_volume() {
    let g = cube(8, 12);
    let v = integrate(&g.constant(2.5)).unwrap();
    assert!((v - 2.5 * PI.powi(3)).abs() < 1e-12);
}

#[test]
fn separable_sine_matches_discrete_closed_form() {
    let g = cube(16, 24);
    let f = g.from_fn(|x1, x2, z| x1.sin() * x2.sin() * z.sin());
    let expected = trapezoid_sine(16).powi(2) * trapezoid_sine(24);
    assert!((integrate(&f).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn quadrature_converges_at_second_order() {
    // int sin x1 sin x2 e^{-z} over (0,pi)^2 x (0,20)
    let exact = 4.0 * (1.0 - (-20.0f64).exp());
    let err = |n: usize| {
        let g = Grid::new(Domain::semi_infinite(PI, 20.0).unwrap(), n, 8 * n).unwrap();
        (integrate(&g.from_fn(|x1, x2, z| x1.sin() * x2.sin() * (-z).exp())).unwrap() - exact).abs()
    };
    let ratio = err(16) / err(32);
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn weighted_integral_equals_integral_of_product() {
    let g = cube(6, 10);
    let f = g.from_fn(|x1, x2, z| x1 + x2 * z);
    let w = g.from_fn(|x1, _, z| (x1 * z).cos());
    let prod = f.zip_map(&w, |a, b| a * b).unwrap();
    assert!((weighted_integral(&f, &w).unwrap() - integrate(&prod).unwrap()).abs() < 1e-12);
}

#[test]
fn interior_integral_skips_every_face() {
    let g = cube(4, 4);
    let mut f = g.constant(1.0);
    // poison the faces; log of them would be -inf or NaN
    for i in 0..g.nxp() {
        for k in 0..g.nxp() {
            f.set(i, k, 0, 0.0);
            f.set(0, i, k, -1.0);
        }
    }
    let w = g.constant(1.0);
    let v = interior_weighted_integral(&f, &w, f64::ln).unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn derivatives_are_exact_on_quadratics() {
    let g = cube(8, 10);
    let f = g.from_fn(|x1, _, z| 3.0 * z * z - x1 * z + 1.0);
    let fz = derivative(&f, Axis::Z);
    let fzz = second_derivative(&f, Axis::Z);
    for j in 0..g.nzp() {
        let (x1, z) = (g.x(3), g.z(j));
        assert!((fz.get(3, 2, j) - (6.0 * z - x1)).abs() < 1e-9);
        assert!((fzz.get(3, 2, j) - 6.0).abs() < 1e-8);
    }
}

#[test]
fn sobolev_norm_orders() {
    let g = cube(8, 8);
    let f = g.from_fn(|x1, _, _| x1);
    let s0 = sobolev_norm(&f, 0).unwrap();
    assert!((s0 - integrate(&f.map(|x| x * x)).unwrap().sqrt()).abs() < 1e-12);
    // derivative of x1 is one everywhere, second derivatives vanish
    let s1 = sobolev_norm(&f, 1).unwrap();
    assert!((s1 * s1 - s0 * s0 - PI.powi(3)).abs() < 1e-9);
    let s2 = sobolev_norm(&f, 2).unwrap();
    assert!((s2 - s1).abs() < 1e-9);
    assert!(matches!(sobolev_norm(&f, 3), Err(Error::UnsupportedOrder(3))));
}

#[test]
fn sup_norm_and_extrema() {
    let g = cube(4, 4);
    let f = g.from_fn(|x1, _, z| x1 - z - 1.0);
    assert!((sup_norm(&f) - (PI + 1.0)).abs() < 1e-12);
    assert!((f.max() - (PI - 1.0)).abs() < 1e-12);
    assert!((f.min() + PI + 1.0).abs() < 1e-12);
}

#[test]
fn shape_mismatch_is_reported() {
    let f = cube(4, 4).constant(1.0);
    let g = cube(4, 6).constant(1.0);
    assert!(matches!(weighted_integral(&f, &g), Err(Error::ShapeMismatch(_))));
    assert!(matches!(f.zip_map(&g, |a, b| a + b), Err(Error::ShapeMismatch(_))));
}

#[test]
fn invalid_domains_are_rejected() {
    assert!(matches!(Domain::bounded(-1.0, 1.0), Err(Error::Parameter(_))));
    assert!(matches!(Domain::semi_infinite(PI, f64::NAN), Err(Error::Parameter(_))));
}

#[test]
fn node_coordinates_are_uniform() {
    let g = Grid::new(Domain::semi_infinite(2.0, 10.0).unwrap(), 4, 5).unwrap();
    assert_eq!(g.x(2), 1.0);
    assert_eq!(g.z(5), 10.0);
    assert_eq!(g.hz(), 2.0);
    assert_eq!(g.len(), 5 * 5 * 6);
}
