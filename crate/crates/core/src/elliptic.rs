//! Per-mode solves of `-Delta v = f` with homogeneous Dirichlet side walls.
//!
//! After the sine transform each mode obeys `kappa^2 vhat - vhat'' = fhat`
//! with `kappa^2 = (pi/a)^2 (k1^2 + k2^2)`. The z-direction is discretized
//! with second-order differences; a Robin face uses the ghost value
//! `v[-1] = v[1] + 2 h beta v[0]`, a Neumann face the mirror ghost. The
//! analytic half-line kernel is kept as an independent path for
//! cross-checking the truncated semi-infinite solves.

use rayon::prelude::*;
use serde::Serialize;

use crate::grid::{Domain, Grid, ScalarField, ZExtent};
use crate::transform::{dst_forward, dst_inverse, mode_eigenvalue, SpectralField};
use crate::{Error, Result};

/// Distance below which `beta` counts as resonant.
pub const RESONANCE_TOL: f64 = 1e-6;

/// Allowed discrete residual, relative to `max |fhat|`.
pub const RESIDUAL_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Bottom {
    Robin(f64),
    Neumann,
    Dirichlet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Top {
    /// Semi-infinite decay; homogeneous Dirichlet at the truncation.
    Decay,
    Dirichlet,
    Neumann,
    /// Periodic in z. The bottom condition is then unused.
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZBoundaryCondition {
    pub bottom: Bottom,
    pub top: Top,
}

impl ZBoundaryCondition {
    pub fn new(bottom: Bottom, top: Top) -> Self {
        Self { bottom, top }
    }

    pub fn robin_beta(&self) -> Option<f64> {
        match (self.bottom, self.top) {
            (_, Top::Periodic) => None,
            (Bottom::Robin(b), _) => Some(b),
            _ => None,
        }
    }

    /// `beta` entering the boundary term of the energy; zero unless the
    /// bottom face is Robin.
    pub fn boundary_beta(&self) -> f64 {
        self.robin_beta().unwrap_or(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Sign {
    /// `-Delta v = f`.
    Standard,
    /// `Delta v = f`, solved as the negated standard problem.
    Flipped,
}

/// Values of `beta` for which the Robin problem loses unique solvability.
#[derive(Clone, Copy, Debug)]
pub struct ResonanceSet {
    a: f64,
    z: ZExtent,
    top: Top,
    kmax: usize,
}

impl ResonanceSet {
    /// Excluded values over `k in Z^2 \ {0}` with `|k1|, |k2| <= kmax`.
    pub fn new(domain: &Domain, top: Top, kmax: usize) -> Self {
        Self { a: domain.a, z: domain.z, top, kmax }
    }

    /// Excluded values attached to a single wavenumber `kappa = pi |k| / a`.
    pub fn mode_exclusions(&self, kappa: f64) -> Vec<f64> {
        let mut out = vec![kappa];
        if let ZExtent::Bounded(b) = self.z {
            let e = (-2.0 * kappa * b).exp();
            match self.top {
                Top::Dirichlet | Top::Decay => out.push(kappa * (1.0 + e) / (1.0 - e)),
                Top::Neumann => out.push(kappa * (1.0 - e) / (1.0 + e)),
                Top::Periodic => {}
            }
        }
        out
    }

    /// Closest excluded value within [`RESONANCE_TOL`] of `beta`, if any.
    pub fn nearest_excluded(&self, beta: f64) -> Option<f64> {
        let s = std::f64::consts::PI / self.a;
        let mut best: Option<f64> = None;
        for k1 in 0..=self.kmax {
            for k2 in 0..=self.kmax {
                if k1 == 0 && k2 == 0 {
                    continue;
                }
                let kappa = s * ((k1 * k1 + k2 * k2) as f64).sqrt();
                for x in self.mode_exclusions(kappa) {
                    if (x - beta).abs() <= RESONANCE_TOL
                        && best.is_none_or(|b| (x - beta).abs() < (b - beta).abs())
                    {
                        best = Some(x);
                    }
                }
            }
        }
        best
    }

    pub fn excluded(&self, beta: f64) -> bool {
        self.nearest_excluded(beta).is_some()
    }
}

/// True when `beta` is (within 1e-6 of) an excluded value for some
/// wavenumber with components up to `kmax`. Bounded domains use the
/// Dirichlet-top exclusion set.
pub fn resonance_check(beta: f64, domain: &Domain, kmax: usize) -> bool {
    let top = if domain.is_bounded() { Top::Dirichlet } else { Top::Decay };
    ResonanceSet::new(domain, top, kmax).excluded(beta)
}

/// Thomas factorization of a tridiagonal matrix.
#[derive(Clone, Debug)]
struct Thomas {
    sub: Vec<f64>,
    cp: Vec<f64>,
    inv: Vec<f64>,
}

impl Thomas {
    fn factor(sub: &[f64], diag: &[f64], sup: &[f64]) -> Result<Self> {
        let m = diag.len();
        let mut cp = vec![0.0; m];
        let mut inv = vec![0.0; m];
        let mut prev = 0.0;
        for i in 0..m {
            let d = diag[i] - if i > 0 { sub[i] * prev } else { 0.0 };
            let scale = diag[i].abs() + sub[i].abs() + sup[i].abs();
            if d.abs() <= 1e-14 * scale {
                return Err(Error::Solver(format!("zero pivot in row {i}")));
            }
            inv[i] = 1.0 / d;
            cp[i] = sup[i] * inv[i];
            prev = cp[i];
        }
        Ok(Self { sub: sub.to_vec(), cp, inv })
    }

    fn solve(&self, rhs: &[f64], x: &mut [f64]) {
        let m = self.cp.len();
        let mut prev = 0.0;
        for i in 0..m {
            let v = (rhs[i] - if i > 0 { self.sub[i] * prev } else { 0.0 }) * self.inv[i];
            x[i] = v;
            prev = v;
        }
        for i in (0..m - 1).rev() {
            x[i] -= self.cp[i] * x[i + 1];
        }
    }
}

#[derive(Clone, Debug)]
enum Factor {
    Plain(Thomas),
    /// Sherman-Morrison correction for the two corner entries.
    Cyclic { thomas: Thomas, zvec: Vec<f64>, gamma: f64, corner_hi: f64, denom: f64 },
}

/// Discrete `kappa^2 - d^2/dz^2` with the z-face conditions of `bc`, acting
/// on one mode profile of length `nzp`.
#[derive(Clone, Debug)]
pub struct ModeOperator {
    kappa2: f64,
    h: f64,
    bc: ZBoundaryCondition,
    nzp: usize,
    sub: Vec<f64>,
    diag: Vec<f64>,
    sup: Vec<f64>,
    factor: Factor,
}

impl ModeOperator {
    pub fn new(kappa2: f64, h: f64, nzp: usize, bc: ZBoundaryCondition) -> Result<Self> {
        if nzp < 3 {
            return Err(Error::Parameter("mode profile needs at least 3 nodes".into()));
        }
        let periodic = bc.top == Top::Periodic;
        let m = if periodic { nzp - 1 } else { nzp };
        let ih2 = 1.0 / (h * h);
        let mut sub = vec![-ih2; m];
        let mut diag = vec![kappa2 + 2.0 * ih2; m];
        let mut sup = vec![-ih2; m];
        if periodic {
            // corners are handled by the cyclic correction
        } else {
            sub[0] = 0.0;
            sup[m - 1] = 0.0;
            match bc.bottom {
                Bottom::Robin(beta) => {
                    diag[0] = kappa2 + (2.0 - 2.0 * h * beta) * ih2;
                    sup[0] = -2.0 * ih2;
                }
                Bottom::Neumann => sup[0] = -2.0 * ih2,
                Bottom::Dirichlet => {
                    diag[0] = 1.0;
                    sup[0] = 0.0;
                }
            }
            match bc.top {
                Top::Decay | Top::Dirichlet => {
                    diag[m - 1] = 1.0;
                    sub[m - 1] = 0.0;
                }
                Top::Neumann => sub[m - 1] = -2.0 * ih2,
                Top::Periodic => unreachable!(),
            }
        }
        let factor = if periodic {
            let corner_lo = sub[0];
            let corner_hi = sup[m - 1];
            let gamma = -diag[0];
            let mut d = diag.clone();
            d[0] -= gamma;
            d[m - 1] -= corner_lo * corner_hi / gamma;
            let mut s = sub.clone();
            s[0] = 0.0;
            let mut p = sup.clone();
            p[m - 1] = 0.0;
            let thomas = Thomas::factor(&s, &d, &p)?;
            let mut uvec = vec![0.0; m];
            uvec[0] = gamma;
            uvec[m - 1] = corner_lo;
            let mut zvec = vec![0.0; m];
            thomas.solve(&uvec, &mut zvec);
            let denom = 1.0 + zvec[0] + corner_hi * zvec[m - 1] / gamma;
            if denom.abs() < 1e-14 {
                return Err(Error::Solver("singular periodic mode operator".into()));
            }
            Factor::Cyclic { thomas, zvec, gamma, corner_hi, denom }
        } else {
            Factor::Plain(Thomas::factor(&sub, &diag, &sup)?)
        };
        Ok(Self { kappa2, h, bc, nzp, sub, diag, sup, factor })
    }

    pub fn kappa2(&self) -> f64 {
        self.kappa2
    }

    fn unknowns(&self) -> usize {
        self.diag.len()
    }

    fn is_dirichlet_row(&self, j: usize) -> bool {
        let m = self.unknowns();
        if self.bc.top == Top::Periodic {
            return false;
        }
        (j == 0 && self.bc.bottom == Bottom::Dirichlet)
            || (j == m - 1 && matches!(self.bc.top, Top::Decay | Top::Dirichlet))
    }

    /// Rows where the differential equation is imposed.
    pub fn equation_rows(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.unknowns()).filter(move |&j| !self.is_dirichlet_row(j))
    }

    /// Matrix-vector product on a full profile. Dirichlet rows return the
    /// node value itself; the periodic copy at `j = nz` mirrors `j = 0`.
    pub fn apply(&self, v: &[f64], out: &mut [f64]) {
        let m = self.unknowns();
        for j in 0..m {
            let mut s = self.diag[j] * v[j];
            if self.bc.top == Top::Periodic {
                s += self.sub[j] * v[(j + m - 1) % m] + self.sup[j] * v[(j + 1) % m];
            } else {
                if j > 0 {
                    s += self.sub[j] * v[j - 1];
                }
                if j + 1 < m {
                    s += self.sup[j] * v[j + 1];
                }
            }
            out[j] = s;
        }
        if self.bc.top == Top::Periodic {
            out[m] = out[0];
        }
    }

    /// Solves for `v` given `fhat`, then checks the discrete residual.
    pub fn solve(&self, f: &[f64], v: &mut [f64]) -> Result<()> {
        let m = self.unknowns();
        let mut rhs: Vec<f64> = f[..m].to_vec();
        for j in 0..m {
            if self.is_dirichlet_row(j) {
                rhs[j] = 0.0;
            }
        }
        match &self.factor {
            Factor::Plain(t) => t.solve(&rhs, &mut v[..m]),
            Factor::Cyclic { thomas, zvec, gamma, corner_hi, denom } => {
                thomas.solve(&rhs, &mut v[..m]);
                let c = (v[0] + corner_hi * v[m - 1] / gamma) / denom;
                for j in 0..m {
                    v[j] -= c * zvec[j];
                }
                v[m] = v[0];
            }
        }
        let fmax = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let res = self.residual(v, &rhs);
        if res > RESIDUAL_TOL * fmax || !res.is_finite() {
            return Err(Error::Solver(format!(
                "mode residual {res:e} exceeds {RESIDUAL_TOL:e} * {fmax:e} (kappa^2 = {})",
                self.kappa2
            )));
        }
        Ok(())
    }

    fn residual(&self, v: &[f64], rhs: &[f64]) -> f64 {
        let mut av = vec![0.0; self.nzp];
        self.apply(v, &mut av);
        (0..self.unknowns()).fold(0.0f64, |a, j| a.max((av[j] - rhs[j]).abs()))
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }
}

/// Profile returned by [`solve_mode_bvp`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSolution {
    pub v: Vec<f64>,
    /// Set when the data has not decayed at the truncation of a
    /// semi-infinite domain.
    pub truncation_warning: bool,
}

fn truncation_warning(domain: &Domain, f: &[f64]) -> bool {
    if domain.is_bounded() {
        return false;
    }
    let fmax = f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    fmax > 0.0 && f[f.len() - 1].abs() > 1e-8 * fmax
}

fn check_mode_resonance(domain: &Domain, bc: &ZBoundaryCondition, kappa: f64) -> Result<()> {
    if let Some(beta) = bc.robin_beta() {
        let set = ResonanceSet::new(domain, bc.top, 0);
        for x in set.mode_exclusions(kappa) {
            if (x - beta).abs() <= RESONANCE_TOL {
                return Err(Error::Resonance { beta, excluded: x });
            }
        }
    }
    Ok(())
}

/// Finite-difference solve of `kappa^2 v - v'' = fhat` for the wavenumber
/// pair `k` (components may be zero) on the z-grid implied by `fhat.len()`.
pub fn solve_mode_bvp(
    domain: &Domain,
    k: (usize, usize),
    fhat: &[f64],
    bc: ZBoundaryCondition,
) -> Result<ModeSolution> {
    if k == (0, 0) {
        return Err(Error::Parameter("wavenumber must be nonzero".into()));
    }
    if fhat.len() < 3 {
        return Err(Error::Parameter("profile needs at least 3 nodes".into()));
    }
    let kappa2 = mode_eigenvalue(domain.a, k.0, k.1);
    check_mode_resonance(domain, &bc, kappa2.sqrt())?;
    let h = domain.z_length() / (fhat.len() - 1) as f64;
    let op = ModeOperator::new(kappa2, h, fhat.len(), bc)?;
    let mut v = vec![0.0; fhat.len()];
    op.solve(fhat, &mut v)?;
    Ok(ModeSolution { v, truncation_warning: truncation_warning(domain, fhat) })
}

/// `(1 - e^{-x} - x e^{-x}) / x^2`, accurate for small `x`.
fn linear_moment(x: f64) -> f64 {
    if x < 1e-2 {
        0.5 - x / 3.0 + x * x / 8.0 - x * x * x / 30.0 + x.powi(4) / 144.0
    } else {
        (-(-x).exp_m1() - x * (-x).exp()) / (x * x)
    }
}

/// Half-line solution from the analytic kernels, with `fhat` taken as
/// piecewise linear between nodes and zero beyond the truncation:
///
/// ```text
/// v(z) = (1/2k) int f(z') e^{-k|z-z'|} dz' + (C2/k) e^{-kz},
/// C1 = (1/2) int f e^{-kz'} dz',  C2 = (k + beta)/(k - beta) C1.
/// ```
pub fn solve_mode_kernel(domain: &Domain, k: (usize, usize), fhat: &[f64], beta: f64) -> Result<Vec<f64>> {
    if domain.is_bounded() {
        return Err(Error::Parameter("kernel path is only defined on the half-line".into()));
    }
    if k == (0, 0) {
        return Err(Error::Parameter("wavenumber must be nonzero".into()));
    }
    let kappa = mode_eigenvalue(domain.a, k.0, k.1).sqrt();
    if (kappa - beta).abs() <= RESONANCE_TOL {
        return Err(Error::Resonance { beta, excluded: kappa });
    }
    let n = fhat.len();
    let h = domain.z_length() / (n - 1) as f64;
    let x = kappa * h;
    let decay = (-x).exp();
    let m0 = -(-x).exp_m1() / kappa;
    let near = h * linear_moment(x); // weight on the node nearer the far end
    let far = m0 - near;

    let mut left = vec![0.0; n];
    for j in 0..n - 1 {
        left[j + 1] = decay * left[j] + near * fhat[j] + far * fhat[j + 1];
    }
    let mut right = vec![0.0; n];
    for j in (0..n - 1).rev() {
        right[j] = decay * right[j + 1] + far * fhat[j] + near * fhat[j + 1];
    }
    let c1 = 0.5 * right[0];
    let c2 = (kappa + beta) / (kappa - beta) * c1;
    Ok((0..n)
        .map(|j| {
            let z = j as f64 * h;
            (left[j] + right[j]) / (2.0 * kappa) + c2 / kappa * (-kappa * z).exp()
        })
        .collect())
}

/// Cached per-mode factorizations for repeated solves on one grid.
#[derive(Clone, Debug)]
pub struct PoissonSolver {
    grid: Grid,
    bc: ZBoundaryCondition,
    ops: Vec<ModeOperator>,
}

impl PoissonSolver {
    pub fn new(grid: Grid, bc: ZBoundaryCondition) -> Result<Self> {
        if bc.top == Top::Decay && grid.domain.is_bounded() {
            return Err(Error::Parameter("decay condition needs a semi-infinite domain".into()));
        }
        let n = grid.nx - 1;
        let mut ops = Vec::with_capacity(n * n);
        for k1 in 1..=n {
            for k2 in 1..=n {
                let kappa2 = mode_eigenvalue(grid.domain.a, k1, k2);
                // only the sine modes present on the grid can resonate
                check_mode_resonance(&grid.domain, &bc, kappa2.sqrt())?;
                ops.push(ModeOperator::new(kappa2, grid.hz(), grid.nzp(), bc)?);
            }
        }
        Ok(Self { grid, bc, ops })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn bc(&self) -> ZBoundaryCondition {
        self.bc
    }

    pub fn mode_operator(&self, k1: usize, k2: usize) -> &ModeOperator {
        &self.ops[(k1 - 1) * (self.grid.nx - 1) + (k2 - 1)]
    }

    /// Solves mode by mode in spectral space.
    pub fn solve_spectral(&self, fhat: &SpectralField) -> Result<SpectralField> {
        let nzp = self.grid.nzp();
        let mut out = SpectralField::zeros(self.grid);
        out.coeffs_mut()
            .par_chunks_mut(nzp)
            .zip(fhat.coeffs().par_chunks(nzp))
            .zip(self.ops.par_iter())
            .map(|((v, f), op)| op.solve(f, v))
            .collect::<Result<Vec<()>>>()?;
        Ok(out)
    }

    pub fn solve(&self, f: &ScalarField, sign: Sign) -> Result<ScalarField> {
        if f.grid() != &self.grid {
            return Err(Error::ShapeMismatch("right-hand side lives on another grid".into()));
        }
        let vhat = self.solve_spectral(&dst_forward(f))?;
        let mut v = dst_inverse(&vhat);
        if sign == Sign::Flipped {
            v.scale(-1.0);
        }
        Ok(v)
    }

    /// Discrete `-Delta_h v`: spectral in x, the mode operators in z.
    /// Dirichlet z-rows return zero.
    pub fn apply(&self, v: &ScalarField) -> ScalarField {
        let nzp = self.grid.nzp();
        let vhat = dst_forward(v);
        let mut out = SpectralField::zeros(self.grid);
        out.coeffs_mut()
            .par_chunks_mut(nzp)
            .zip(vhat.coeffs().par_chunks(nzp))
            .zip(self.ops.par_iter())
            .for_each(|((o, x), op)| {
                op.apply(x, o);
                for j in 0..nzp.min(op.unknowns()) {
                    if op.is_dirichlet_row(j) {
                        o[j] = 0.0;
                    }
                }
            });
        dst_inverse(&out)
    }
}

/// One-shot convenience wrapper around [`PoissonSolver`].
pub fn solve_poisson(f: &ScalarField, bc: ZBoundaryCondition, sign: Sign) -> Result<ScalarField> {
    PoissonSolver::new(*f.grid(), bc)?.solve(f, sign)
}
