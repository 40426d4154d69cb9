//! Two-dimensional type-I discrete sine transform in `(x1, x2)`, applied at
//! every z-level.
//!
//! Coefficients are defined so that
//! `f(x1, x2, z) = sum_k fhat(k, z) sin(k1 pi x1 / a) sin(k2 pi x2 / a)` on
//! interior nodes, i.e. the forward map carries the `(2/a)^2` normalization
//! of the continuous sine transform. Direct `O(n^2)` summation per
//! direction; every output entry is produced by one task in a fixed order,
//! so results do not depend on the thread count.

use rayon::prelude::*;

use crate::grid::{Grid, ScalarField};
use crate::{Error, Result};

/// Sine coefficients `fhat(k1, k2, z_j)` for `k1, k2 = 1..nx-1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        let n = grid.nx - 1;
        Self { grid, coeffs: vec![0.0; n * n * grid.nzp()] }
    }

    pub fn new(grid: Grid, coeffs: Vec<f64>) -> Result<Self> {
        let n = grid.nx - 1;
        if coeffs.len() != n * n * grid.nzp() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients, expected {}",
                coeffs.len(),
                n * n * grid.nzp()
            )));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Number of sine modes per direction.
    pub fn modes(&self) -> usize {
        self.grid.nx - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// z-profile of mode `(k1, k2)`, both 1-based.
    pub fn profile(&self, k1: usize, k2: usize) -> &[f64] {
        let start = self.offset(k1, k2);
        &self.coeffs[start..start + self.grid.nzp()]
    }

    pub fn profile_mut(&mut self, k1: usize, k2: usize) -> &mut [f64] {
        let start = self.offset(k1, k2);
        let nzp = self.grid.nzp();
        &mut self.coeffs[start..start + nzp]
    }

    fn offset(&self, k1: usize, k2: usize) -> usize {
        let n = self.modes();
        assert!((1..=n).contains(&k1) && (1..=n).contains(&k2), "mode ({k1},{k2}) out of range");
        ((k1 - 1) * n + (k2 - 1)) * self.grid.nzp()
    }
}

/// Eigenvalue of `-Delta_x` for the sine mode `(k1, k2)` on a side of length `a`.
pub fn mode_eigenvalue(a: f64, k1: usize, k2: usize) -> f64 {
    let s = std::f64::consts::PI / a;
    s * s * ((k1 * k1 + k2 * k2) as f64)
}

/// `sin(k i pi / nx)` for `k, i = 1..nx-1`, row-major in `k`.
fn sine_table(nx: usize) -> Vec<f64> {
    let n = nx - 1;
    let mut s = Vec::with_capacity(n * n);
    for k in 1..=n {
        for i in 1..=n {
            // reduce k*i mod 2nx first so large products keep full accuracy
            let m = (k * i) % (2 * nx);
            s.push((std::f64::consts::PI * m as f64 / nx as f64).sin());
        }
    }
    s
}

/// Applies the sine matrix along x2 then x1. `read(i1, i2)` returns the
/// z-line at a 1-based index pair; the result is laid out `(k1, k2, j)`.
fn separable_transform<'a>(
    grid: &Grid,
    read: impl Fn(usize, usize) -> &'a [f64] + Sync,
    scale: f64,
) -> Vec<f64> {
    let n = grid.nx - 1;
    let nzp = grid.nzp();
    let table = sine_table(grid.nx);

    // stage 1: tmp[i1][k2][:] = sum_i2 S[k2][i2] f[i1][i2][:]
    let mut tmp = vec![0.0; n * n * nzp];
    tmp.par_chunks_mut(n * nzp).enumerate().for_each(|(a, block)| {
        let i1 = a + 1;
        for (b, row) in block.chunks_mut(nzp).enumerate() {
            let srow = &table[b * n..(b + 1) * n];
            for (c, &s) in srow.iter().enumerate() {
                let line = read(i1, c + 1);
                for (o, &v) in row.iter_mut().zip(line) {
                    *o += s * v;
                }
            }
        }
    });

    // stage 2: out[k1][k2][:] = scale * sum_i1 S[k1][i1] tmp[i1][k2][:]
    let mut out = vec![0.0; n * n * nzp];
    out.par_chunks_mut(n * nzp).enumerate().for_each(|(a, block)| {
        let srow = &table[a * n..(a + 1) * n];
        for (c, &s) in srow.iter().enumerate() {
            let src = &tmp[c * n * nzp..(c + 1) * n * nzp];
            for (o, &v) in block.iter_mut().zip(src) {
                *o += s * v;
            }
        }
        if scale != 1.0 {
            block.iter_mut().for_each(|v| *v *= scale);
        }
    });
    out
}

/// Forward transform of the interior values of `f`. Side-wall values are
/// ignored; they are taken to be zero.
pub fn dst_forward(f: &ScalarField) -> SpectralField {
    let grid = *f.grid();
    let nzp = grid.nzp();
    let vals = f.values();
    let scale = (2.0 / grid.nx as f64).powi(2);
    let coeffs = separable_transform(
        &grid,
        |i1, i2| {
            let s = grid.idx(i1, i2, 0);
            &vals[s..s + nzp]
        },
        scale,
    );
    SpectralField { grid, coeffs }
}

/// Nodal synthesis of the sine series; side-wall values are set to zero.
pub fn dst_inverse(fhat: &SpectralField) -> ScalarField {
    let grid = fhat.grid;
    let n = grid.nx - 1;
    let nzp = grid.nzp();
    let coeffs = &fhat.coeffs;
    let interior = separable_transform(
        &grid,
        |k1, k2| {
            let s = ((k1 - 1) * n + (k2 - 1)) * nzp;
            &coeffs[s..s + nzp]
        },
        1.0,
    );
    let mut out = grid.zeros();
    let vals = out.values_mut();
    for i1 in 1..=n {
        for i2 in 1..=n {
            let src = ((i1 - 1) * n + (i2 - 1)) * nzp;
            let dst = grid.idx(i1, i2, 0);
            vals[dst..dst + nzp].copy_from_slice(&interior[src..src + nzp]);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_maps_to_delta() {
        let g = Grid::new(Domain::bounded(2.0, 1.0).unwrap(), 8, 4).unwrap();
        let f = g.from_fn(|x1, x2, z| (2.0 * PI * x1 / 2.0).sin() * (3.0 * PI * x2 / 2.0).sin() * (1.0 + z));
        let fh = dst_forward(&f);
        for k1 in 1..8 {
            for k2 in 1..8 {
                for (j, &c) in fh.profile(k1, k2).iter().enumerate() {
                    let expect = if (k1, k2) == (2, 3) { 1.0 + g.z(j) } else { 0.0 };
                    assert!((c - expect).abs() < 1e-13, "({k1},{k2}) j={j}: {c}");
                }
            }
        }
    }
}
