use std::f64::consts::{PI, SQRT_2};

use blowuplab::elliptic::{
    resonance_check, solve_mode_bvp, solve_mode_kernel, solve_poisson, Bottom, PoissonSolver, ResonanceSet, Sign,
    Top, ZBoundaryCondition,
};
use blowuplab::grid::{sup_norm, Domain, Grid, ScalarField};
use blowuplab::Error;

fn max_diff(a: &ScalarField, b: &ScalarField) -> f64 {
    let mut d = a.clone();
    d.axpy(-1.0, b).unwrap();
    sup_norm(&d)
}

/// `-Delta` of `sin x1 sin x2 g(z)` on `a = pi` is `(2 g - g'') sin x1 sin x2`.
fn mode_rhs(g: &Grid, p: impl Fn(f64) -> f64, pzz: impl Fn(f64) -> f64) -> (ScalarField, ScalarField) {
    let v = g.from_fn(|x1, x2, z| x1.sin() * x2.sin() * p(z));
    let f = g.from_fn(|x1, x2, z| x1.sin() * x2.sin() * (2.0 * p(z) - pzz(z)));
    (v, f)
}

#[test]
fn quadratic_profiles_are_reproduced_exactly() {
    // second differences and the centered ghost-node closure are exact on
    // quadratics, so every z-condition reproduces them to round-off
    let b = PI;
    let g = Grid::new(Domain::bounded(PI, b).unwrap(), 8, 40).unwrap();
    let beta = 1.8;
    let c = (1.0 - beta * b) / b;
    type Profile = Box<dyn Fn(f64) -> f64>;
    let cases: Vec<(ZBoundaryCondition, Profile, f64)> = vec![
        // (b - z)(1 + c z): Robin at 0, zero at b
        (
            ZBoundaryCondition::new(Bottom::Robin(beta), Top::Dirichlet),
            Box::new(move |z| (b - z) * (1.0 + c * z)),
            -2.0 * c,
        ),
        // z (b - z): zero at both faces
        (ZBoundaryCondition::new(Bottom::Dirichlet, Top::Dirichlet), Box::new(move |z| z * (b - z)), -2.0),
        // 1 - beta z + beta z^2 / (2 b): Robin at 0, zero slope at b
        (
            ZBoundaryCondition::new(Bottom::Robin(beta), Top::Neumann),
            Box::new(move |z| 1.0 - beta * z + beta / (2.0 * b) * z * z),
            beta / b,
        ),
    ];
    for (bc, p, pzz) in cases {
        let (v, f) = mode_rhs(&g, &p, |_| pzz);
        let sol = solve_poisson(&f, bc, Sign::Standard).unwrap();
        assert!(max_diff(&sol, &v) < 1e-9 * sup_norm(&v), "{bc:?}: {}", max_diff(&sol, &v));
    }
}

#[test]
fn neumann_and_periodic_trig_profiles_converge() {
    let err = |nz: usize, bc: ZBoundaryCondition, p: fn(f64) -> f64, k2: f64| {
        let g = Grid::new(Domain::bounded(PI, PI).unwrap(), 8, nz).unwrap();
        let v = g.from_fn(|x1, x2, z| x1.sin() * x2.sin() * p(z));
        let f = v.map(|x| (2.0 + k2) * x);
        let sol = solve_poisson(&f, bc, Sign::Standard).unwrap();
        max_diff(&sol, &v)
    };
    let neumann = ZBoundaryCondition::new(Bottom::Neumann, Top::Neumann);
    let r = err(32, neumann, f64::cos, 1.0) / err(64, neumann, f64::cos, 1.0);
    assert!((3.5..4.5).contains(&r), "neumann ratio {r}");
    let periodic = ZBoundaryCondition::new(Bottom::Neumann, Top::Periodic);
    let p: fn(f64) -> f64 = |z| (2.0 * z).cos();
    let r = err(32, periodic, p, 4.0) / err(64, periodic, p, 4.0);
    assert!((3.5..4.5).contains(&r), "periodic ratio {r}");
}

#[test]
fn flipped_sign_negates_the_solution() {
    let g = Grid::new(Domain::bounded(PI, PI).unwrap(), 8, 16).unwrap();
    let f = g.from_fn(|x1, x2, z| x1.sin() * (2.0 * x2).sin() * (1.0 + z));
    let bc = ZBoundaryCondition::new(Bottom::Neumann, Top::Neumann);
    let s = PoissonSolver::new(g, bc).unwrap();
    let a = s.solve(&f, Sign::Standard).unwrap();
    let b = s.solve(&f, Sign::Flipped).unwrap();
    let mut sum = a.clone();
    sum.axpy(1.0, &b).unwrap();
    assert!(sup_norm(&sum) < 1e-14 * sup_norm(&a));
}

#[test]
fn apply_inverts_solve() {
    let g = Grid::new(Domain::semi_infinite(PI, 12.0).unwrap(), 8, 96).unwrap();
    let f = g.from_fn(|x1, x2, z| x1 * (PI - x1) * (2.0 * x2).sin() * z * (-z).exp());
    let s = PoissonSolver::new(g, ZBoundaryCondition::new(Bottom::Robin(1.8), Top::Decay)).unwrap();
    let v = s.solve(&f, Sign::Standard).unwrap();
    let back = s.apply(&v);
    // rows that carry data, i.e. everything but the Dirichlet truncation node
    let mut worst = 0.0f64;
    for i1 in 1..g.nx {
        for i2 in 1..g.nx {
            for j in 0..g.nz {
                worst = worst.max((back.get(i1, i2, j) - f.get(i1, i2, j)).abs());
            }
        }
    }
    assert!(worst < 1e-9 * sup_norm(&f), "{worst}");
}

/// Exact half-line solution of `k^2 v - v'' = e^{-z}` with `v' + beta v = 0`.
fn exact_exponential(kappa: f64, beta: f64, z: f64) -> f64 {
    let c = (1.0 - beta) / ((kappa * kappa - 1.0) * (beta - kappa));
    (-z).exp() / (kappa * kappa - 1.0) + c * (-kappa * z).exp()
}

#[test]
fn mode_paths_agree_with_exact_solution() {
    let d = Domain::semi_infinite(PI, 20.0).unwrap();
    let kappa = (5.0f64).sqrt();
    let beta = 1.8;
    let errs = |nz: usize| {
        let h = 20.0 / nz as f64;
        let f: Vec<f64> = (0..=nz).map(|j| (-(j as f64) * h).exp()).collect();
        let exact: Vec<f64> = (0..=nz).map(|j| exact_exponential(kappa, beta, j as f64 * h)).collect();
        let bc = ZBoundaryCondition::new(Bottom::Robin(beta), Top::Decay);
        let fd = solve_mode_bvp(&d, (1, 2), &f, bc).unwrap();
        let kern = solve_mode_kernel(&d, (1, 2), &f, beta).unwrap();
        let e = |v: &[f64]| v.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        (e(&fd.v), e(&kern), fd.truncation_warning)
    };
    let (fd1, k1, warn) = errs(200);
    let (fd2, k2, _) = errs(400);
    assert!(!warn);
    assert!(fd1 < 5e-2 && k1 < 1e-2, "{fd1} {k1}");
    assert!((3.5..4.5).contains(&(fd1 / fd2)), "fd ratio {}", fd1 / fd2);
    assert!((3.5..4.5).contains(&(k1 / k2)), "kernel ratio {}", k1 / k2);
}

#[test]
fn truncation_warning_when_data_reaches_the_cut() {
    let d = Domain::semi_infinite(PI, 2.0).unwrap();
    let f = vec![1.0; 33];
    let bc = ZBoundaryCondition::new(Bottom::Robin(1.8), Top::Decay);
    assert!(solve_mode_bvp(&d, (1, 1), &f, bc).unwrap().truncation_warning);
}

#[test]
fn resonant_betas_are_rejected() {
    let half = Domain::semi_infinite(PI, 20.0).unwrap();
    assert!(resonance_check(SQRT_2, &half, 8));
    assert!(resonance_check(1.0, &half, 8), "k = (1, 0)");
    assert!(!resonance_check(1.8, &half, 32));

    let boxed = Domain::bounded(PI, PI).unwrap();
    let e = (-2.0 * PI).exp();
    assert!(ResonanceSet::new(&boxed, Top::Dirichlet, 4).excluded((1.0 + e) / (1.0 - e)));
    assert!(ResonanceSet::new(&boxed, Top::Neumann, 4).excluded((1.0 - e) / (1.0 + e)));
    assert!(!ResonanceSet::new(&boxed, Top::Neumann, 4).excluded((1.0 + e) / (1.0 - e)));

    let r = solve_mode_bvp(&half, (1, 0), &[0.0; 9], ZBoundaryCondition::new(Bottom::Robin(1.0), Top::Decay));
    assert!(matches!(r, Err(Error::Resonance { .. })));
    assert!(matches!(solve_mode_kernel(&half, (1, 1), &[0.0; 9], SQRT_2), Err(Error::Resonance { .. })));
}

#[test]
fn bad_arguments() {
    let half = Domain::semi_infinite(PI, 20.0).unwrap();
    let bc = ZBoundaryCondition::new(Bottom::Neumann, Top::Decay);
    assert!(matches!(solve_mode_bvp(&half, (0, 0), &[0.0; 9], bc), Err(Error::Parameter(_))));
    let boxed = Domain::bounded(PI, PI).unwrap();
    assert!(matches!(solve_mode_kernel(&boxed, (1, 1), &[0.0; 9], 1.8), Err(Error::Parameter(_))));
}
