use std::f64::consts::PI;

use blowuplab::grid::{sup_norm, Domain, Grid};
use blowuplab::transform::{dst_forward, dst_inverse, mode_eigenvalue};

fn grid() -> Grid {
    Grid::new(Domain::bounded(PI, 2.0).unwrap(), 16, 10).unwrap()
}

#[test]
fn single_mode_lands_in_one_coefficient() {
    let g = grid();
    let f = g.from_fn(|x1, x2, z| x1.sin() * x2.sin() * (1.0 + z * z));
    let fhat = dst_forward(&f);
    for (j, v) in fhat.profile(1, 1).iter().enumerate() {
        let z = g.z(j);
        assert!((v - (1.0 + z * z)).abs() < 1e-12);
    }
    for k1 in 1..g.nx {
        for k2 in 1..g.nx {
            if (k1, k2) != (1, 1) {
                assert!(fhat.profile(k1, k2).iter().all(|v| v.abs() < 1e-12), "({k1},{k2})");
            }
        }
    }
}

#[test]
fn higher_mode_with_amplitude() {
    let g = grid();
    let f = g.from_fn(|x1, x2, z| -0.5 * (3.0 * x1).sin() * (2.0 * x2).sin() * z);
    let fhat = dst_forward(&f);
    for (j, v) in fhat.profile(3, 2).iter().enumerate() {
        assert!((v + 0.5 * g.z(j)).abs() < 1e-12);
    }
}

#[test]
fn inverse_undoes_forward() {
    let g = grid();
    let f = g.from_fn(|x1, x2, z| x1 * (PI - x1) * x2.powi(2) * (PI - x2) * (z - 0.3).cos());
    let back = dst_inverse(&dst_forward(&f));
    let mut d = back.clone();
    d.axpy(-1.0, &f).unwrap();
    assert!(sup_norm(&d) < 1e-12 * sup_norm(&f));
}

#[test]
fn eigenvalues() {
    assert!((mode_eigenvalue(PI, 1, 1) - 2.0).abs() < 1e-15);
    assert!((mode_eigenvalue(2.0 * PI, 2, 4) - 5.0).abs() < 1e-14);
    assert!((mode_eigenvalue(1.0, 1, 0) - PI * PI).abs() < 1e-12);
}
