//! Tensor-product grid over `(0,a)^2 x (0,Lz)`, nodal fields on it,
//! trapezoidal quadrature and finite-difference Sobolev norms.
//!
//! Fields store every node, side walls included. Side-wall values are zero
//! for anything that goes through the sine transform, but constants and the
//! regularity variant's `v = -4` need the full node set.

use serde::Serialize;

use crate::{Error, Result};

/// Extent of the domain in z.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ZExtent {
    /// `(0, b)`.
    Bounded(f64),
    /// `(0, inf)` cut at `z = truncation`.
    SemiInfinite { truncation: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Domain {
    /// Side of the square cross-section.
    pub a: f64,
    pub z: ZExtent,
}

impl Domain {
    pub fn bounded(a: f64, b: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("b", b)?;
        Ok(Self { a, z: ZExtent::Bounded(b) })
    }

    pub fn semi_infinite(a: f64, truncation: f64) -> Result<Self> {
        check_positive("a", a)?;
        check_positive("truncation length", truncation)?;
        Ok(Self { a, z: ZExtent::SemiInfinite { truncation } })
    }

    /// Length of the computational z-interval (b, or the truncation L).
    pub fn z_length(&self) -> f64 {
        match self.z {
            ZExtent::Bounded(b) => b,
            ZExtent::SemiInfinite { truncation } => truncation,
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self.z, ZExtent::Bounded(_))
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be positive and finite, got {v}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
    Z,
}

/// Uniform grid: `x_i = i a / nx` for `i = 0..=nx` in both cross-section
/// directions and `z_j = j h_z` for `j = 0..=nz`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub domain: Domain,
    pub nx: usize,
    pub nz: usize,
}

impl Grid {
    pub fn new(domain: Domain, nx: usize, nz: usize) -> Result<Self> {
        if nx < 4 || nz < 4 {
            return Err(Error::Parameter(format!(
                "grid needs nx >= 4 and nz >= 4, got nx = {nx}, nz = {nz}"
            )));
        }
        Ok(Self { domain, nx, nz })
    }

    pub fn hx(&self) -> f64 {
        self.domain.a / self.nx as f64
    }

    pub fn hz(&self) -> f64 {
        self.domain.z_length() / self.nz as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.hx()
    }

    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.hz()
    }

    /// Nodes per cross-section direction, walls included.
    pub fn nxp(&self) -> usize {
        self.nx + 1
    }

    pub fn nzp(&self) -> usize {
        self.nz + 1
    }

    pub fn len(&self) -> usize {
        self.nxp() * self.nxp() * self.nzp()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn idx(&self, i1: usize, i2: usize, j: usize) -> usize {
        (i1 * self.nxp() + i2) * self.nzp() + j
    }

    /// Trapezoid weight of a cross-section node index.
    #[inline]
    pub fn x_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.nx {
            0.5 * self.hx()
        } else {
            self.hx()
        }
    }

    #[inline]
    pub fn z_weight(&self, j: usize) -> f64 {
        if j == 0 || j == self.nz {
            0.5 * self.hz()
        } else {
            self.hz()
        }
    }

    pub fn weight(&self, i1: usize, i2: usize, j: usize) -> f64 {
        self.x_weight(i1) * self.x_weight(i2) * self.z_weight(j)
    }

    /// True for nodes strictly inside the box.
    pub fn is_interior(&self, i1: usize, i2: usize, j: usize) -> bool {
        (1..self.nx).contains(&i1) && (1..self.nx).contains(&i2) && (1..self.nz).contains(&j)
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X1 | Axis::X2 => self.hx(),
            Axis::Z => self.hz(),
        }
    }

    fn stride_and_count(&self, axis: Axis) -> (usize, usize) {
        match axis {
            Axis::X1 => (self.nxp() * self.nzp(), self.nxp()),
            Axis::X2 => (self.nzp(), self.nxp()),
            Axis::Z => (1, self.nzp()),
        }
    }

    /// Starting offsets of every grid line along `axis`.
    fn line_starts(&self, axis: Axis) -> Vec<usize> {
        let (nxp, nzp) = (self.nxp(), self.nzp());
        let mut starts = Vec::new();
        match axis {
            Axis::X1 => {
                for i2 in 0..nxp {
                    for j in 0..nzp {
                        starts.push(self.idx(0, i2, j));
                    }
                }
            }
            Axis::X2 => {
                for i1 in 0..nxp {
                    for j in 0..nzp {
                        starts.push(self.idx(i1, 0, j));
                    }
                }
            }
            Axis::Z => {
                for i1 in 0..nxp {
                    for i2 in 0..nxp {
                        starts.push(self.idx(i1, i2, 0));
                    }
                }
            }
        }
        starts
    }

    pub fn zeros(&self) -> ScalarField {
        ScalarField { grid: *self, values: vec![0.0; self.len()] }
    }

    pub fn constant(&self, c: f64) -> ScalarField {
        ScalarField { grid: *self, values: vec![c; self.len()] }
    }

    /// Samples `f(x1, x2, z)` at every node.
    pub fn from_fn(&self, f: impl Fn(f64, f64, f64) -> f64) -> ScalarField {
        let mut values = Vec::with_capacity(self.len());
        for i1 in 0..self.nxp() {
            let x1 = self.x(i1);
            for i2 in 0..self.nxp() {
                let x2 = self.x(i2);
                for j in 0..self.nzp() {
                    values.push(f(x1, x2, self.z(j)));
                }
            }
        }
        ScalarField { grid: *self, values }
    }
}

/// Real nodal values indexed `(i1, i2, j)` with z fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i1: usize, i2: usize, j: usize) -> f64 {
        self.values[self.grid.idx(i1, i2, j)]
    }

    #[inline]
    pub fn set(&mut self, i1: usize, i2: usize, j: usize, v: f64) {
        let k = self.grid.idx(i1, i2, j);
        self.values[k] = v;
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        same_shape(self, other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }

    /// `self += c * other`.
    pub fn axpy(&mut self, c: f64, other: &Self) -> Result<()> {
        same_shape(self, other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

pub(crate) fn same_shape(a: &ScalarField, b: &ScalarField) -> Result<()> {
    if a.grid != b.grid || a.values.len() != b.values.len() {
        return Err(Error::ShapeMismatch("fields live on different grids".into()));
    }
    Ok(())
}

fn check_field(f: &ScalarField) -> Result<()> {
    if f.values.len() != f.grid.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} values for a grid of {} nodes",
            f.values.len(),
            f.grid.len()
        )));
    }
    Ok(())
}

/// Trapezoidal tensor quadrature of `f` over the whole box.
pub fn integrate(f: &ScalarField) -> Result<f64> {
    check_field(f)?;
    let g = &f.grid;
    let mut total = 0.0;
    for i1 in 0..g.nxp() {
        let w1 = g.x_weight(i1);
        for i2 in 0..g.nxp() {
            let w12 = w1 * g.x_weight(i2);
            let base = g.idx(i1, i2, 0);
            let mut line = 0.0;
            for j in 0..g.nzp() {
                line += g.z_weight(j) * f.values[base + j];
            }
            total += w12 * line;
        }
    }
    Ok(total)
}

/// Quadrature of `f * w` with the same rule as [`integrate`].
pub fn weighted_integral(f: &ScalarField, w: &ScalarField) -> Result<f64> {
    check_field(f)?;
    same_shape(f, w)?;
    let g = &f.grid;
    let mut total = 0.0;
    for i1 in 0..g.nxp() {
        let w1 = g.x_weight(i1);
        for i2 in 0..g.nxp() {
            let w12 = w1 * g.x_weight(i2);
            let base = g.idx(i1, i2, 0);
            let mut line = 0.0;
            for j in 0..g.nzp() {
                line += g.z_weight(j) * f.values[base + j] * w.values[base + j];
            }
            total += w12 * line;
        }
    }
    Ok(total)
}

/// Quadrature of `integrand(f) * w` over interior nodes only. Boundary nodes
/// are skipped, which is how `log u` integrals avoid `log 0` on the walls.
pub fn interior_weighted_integral(
    f: &ScalarField,
    w: &ScalarField,
    integrand: impl Fn(f64) -> f64,
) -> Result<f64> {
    check_field(f)?;
    same_shape(f, w)?;
    let g = &f.grid;
    let cell = g.hx() * g.hx() * g.hz();
    let mut total = 0.0;
    for i1 in 1..g.nx {
        for i2 in 1..g.nx {
            let base = g.idx(i1, i2, 0);
            let mut line = 0.0;
            for j in 1..g.nz {
                line += integrand(f.values[base + j]) * w.values[base + j];
            }
            total += line;
        }
    }
    Ok(total * cell)
}

pub fn sup_norm(f: &ScalarField) -> f64 {
    f.values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn first_derivative_line(line: &[f64], h: f64, out: &mut [f64]) {
    let n = line.len();
    let inv = 0.5 / h;
    out[0] = (-3.0 * line[0] + 4.0 * line[1] - line[2]) * inv;
    for i in 1..n - 1 {
        out[i] = (line[i + 1] - line[i - 1]) * inv;
    }
    out[n - 1] = (3.0 * line[n - 1] - 4.0 * line[n - 2] + line[n - 3]) * inv;
}

fn second_derivative_line(line: &[f64], h: f64, out: &mut [f64]) {
    let n = line.len();
    let inv = 1.0 / (h * h);
    out[0] = (2.0 * line[0] - 5.0 * line[1] + 4.0 * line[2] - line[3]) * inv;
    for i in 1..n - 1 {
        out[i] = (line[i + 1] - 2.0 * line[i] + line[i - 1]) * inv;
    }
    out[n - 1] = (2.0 * line[n - 1] - 5.0 * line[n - 2] + 4.0 * line[n - 3] - line[n - 4]) * inv;
}

fn apply_along(f: &ScalarField, axis: Axis, op: fn(&[f64], f64, &mut [f64])) -> ScalarField {
    let g = f.grid;
    let (stride, count) = g.stride_and_count(axis);
    let h = g.spacing(axis);
    let mut out = vec![0.0; g.len()];
    let mut line = vec![0.0; count];
    let mut res = vec![0.0; count];
    for start in g.line_starts(axis) {
        for (k, slot) in line.iter_mut().enumerate() {
            *slot = f.values[start + k * stride];
        }
        op(&line, h, &mut res);
        for (k, &r) in res.iter().enumerate() {
            out[start + k * stride] = r;
        }
    }
    ScalarField { grid: g, values: out }
}

/// First derivative: centered in the interior, second-order one-sided at the
/// two ends of every line.
pub fn derivative(f: &ScalarField, axis: Axis) -> ScalarField {
    apply_along(f, axis, first_derivative_line)
}

/// Second derivative: centered in the interior, second-order one-sided at
/// the ends.
pub fn second_derivative(f: &ScalarField, axis: Axis) -> ScalarField {
    apply_along(f, axis, second_derivative_line)
}

/// Finite-difference Laplacian built from [`second_derivative`].
pub fn laplacian_fd(f: &ScalarField) -> ScalarField {
    let mut out = second_derivative(f, Axis::X1);
    out.axpy(1.0, &second_derivative(f, Axis::X2)).expect("same grid");
    out.axpy(1.0, &second_derivative(f, Axis::Z)).expect("same grid");
    out
}

fn squared_integral(f: &ScalarField) -> f64 {
    weighted_integral(f, f).expect("field is well-shaped")
}

/// Discrete `H^s` norm for `s` in `{0, 1, 2}`: square root of the summed
/// squared L2 norms of all finite-difference derivatives of order `<= s`.
/// Only relative growth is used downstream, so this is a proxy and not the
/// exact continuous norm.
pub fn sobolev_norm(f: &ScalarField, s: usize) -> Result<f64> {
    check_field(f)?;
    if s > 2 {
        return Err(Error::UnsupportedOrder(s));
    }
    let mut sum = squared_integral(f);
    if s >= 1 {
        let axes = [Axis::X1, Axis::X2, Axis::Z];
        let firsts: Vec<ScalarField> = axes.iter().map(|&ax| derivative(f, ax)).collect();
        for d in &firsts {
            sum += squared_integral(d);
        }
        if s == 2 {
            for (a, &ax) in axes.iter().enumerate() {
                sum += squared_integral(&second_derivative(f, ax));
                for &other in &axes[a + 1..] {
                    sum += squared_integral(&derivative(&firsts[a], other));
                }
            }
        }
    }
    Ok(sum.sqrt())
}
