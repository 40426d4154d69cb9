use std::f64::consts::PI;

use proptest::prelude::*;

use blowuplab::diagnostics::h_coth;
use blowuplab::dynamics::dz;
use blowuplab::elliptic::{resonance_check, Bottom, PoissonSolver, Sign, Top, ZBoundaryCondition};
use blowuplab::grid::{integrate, sup_norm, Domain, Grid, ScalarField};
use blowuplab::harness::report::format_number;
use blowuplab::transform::{dst_forward, dst_inverse};

fn small_grid() -> Grid {
    Grid::new(Domain::bounded(PI, 2.0).unwrap(), 6, 8).unwrap()
}

/// A field with the given values and zero side walls.
fn field_from(g: &Grid, vals: &[f64]) -> ScalarField {
    let mut f = g.zeros();
    let mut it = vals.iter().cycle();
    for i1 in 1..g.nx {
        for i2 in 1..g.nx {
            for j in 0..g.nzp() {
                f.set(i1, i2, j, *it.next().unwrap());
            }
        }
    }
    f
}

fn values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, 1..64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sine_transform_round_trips(vals in values()) {
        let g = small_grid();
        let f = field_from(&g, &vals);
        let mut d = dst_inverse(&dst_forward(&f));
        d.axpy(-1.0, &f).unwrap();
        prop_assert!(sup_norm(&d) <= 1e-12 * (1.0 + sup_norm(&f)));
    }

    #[test]
    fn solve_then_apply_recovers_data(vals in values(), beta in 1.5f64..4.0) {
        let g = small_grid();
        let bc = ZBoundaryCondition::new(Bottom::Robin(beta), Top::Neumann);
        prop_assume!(PoissonSolver::new(g, bc).is_ok());
        let s = PoissonSolver::new(g, bc).unwrap();
        let f = field_from(&g, &vals);
        let v = s.solve(&f, Sign::Standard).unwrap();
        let mut back = s.apply(&v);
        back.axpy(-1.0, &f).unwrap();
        prop_assert!(sup_norm(&back) <= 1e-8 * (1.0 + sup_norm(&f)));
    }

    #[test]
    fn quadrature_is_linear(a in values(), b in values(), c in -5.0f64..5.0) {
        let g = small_grid();
        let (fa, fb) = (field_from(&g, &a), field_from(&g, &b));
        let mut sum = fa.clone();
        sum.axpy(c, &fb).unwrap();
        let lhs = integrate(&sum).unwrap();
        let rhs = integrate(&fa).unwrap() + c * integrate(&fb).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn constants_integrate_to_volume(c in -100.0f64..100.0, side in 0.5f64..4.0, height in 0.5f64..4.0) {
        let g = Grid::new(Domain::bounded(side, height).unwrap(), 5, 7).unwrap();
        let v = integrate(&g.constant(c)).unwrap();
        prop_assert!((v - c * side * side * height).abs() <= 1e-12 * (1.0 + v.abs()));
    }

    #[test]
    fn numbers_survive_formatting(x in any::<f64>()) {
        let s = format_number(x);
        if x.is_nan() {
            prop_assert_eq!(s, "NaN");
        } else {
            let back: f64 = s.parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn lattice_wavenumbers_are_resonant(k1 in 0usize..6, k2 in 1usize..6, a in 0.5f64..5.0) {
        let d = Domain::semi_infinite(a, 20.0).unwrap();
        let kappa = PI / a * ((k1 * k1 + k2 * k2) as f64).sqrt();
        prop_assert!(resonance_check(kappa, &d, 6));
        prop_assert!(resonance_check(kappa + 5e-7, &d, 6));
    }

    #[test]
    fn h_coth_decreases(x in 0.01f64..1.4, dx in 1e-4f64..0.01, b in 0.5f64..10.0) {
        prop_assert!(h_coth(x + dx, PI, b) < h_coth(x, PI, b));
    }

    #[test]
    fn sbp_derivative_is_exact_on_linear_profiles(p in -5.0f64..5.0, q in -5.0f64..5.0) {
        let g = small_grid();
        let f = g.from_fn(|_, _, z| p + q * z);
        let d = dz(&f, false);
        prop_assert!(d.values().iter().all(|v| (v - q).abs() <= 1e-12 * (1.0 + q.abs())));
    }
}
