//! Eigen-weights, blowup constants, and runtime checks of the weighted
//! identities.
//!
//! Every weight has the form `phi = phi1(x) * eta(z)` with
//! `phi1 = sin(pi x1 / a) sin(pi x2 / a)`, so `-Delta phi = lambda1 phi` and
//! `phi_zz = lambda2 phi`.

use serde::Serialize;

use crate::dynamics::dz;
use crate::elliptic::{ResonanceSet, Top};
use crate::grid::{
    derivative, integrate, interior_weighted_integral, laplacian_fd, second_derivative, sobolev_norm,
    sup_norm, weighted_integral, Axis, Domain, Grid, ScalarField, ZExtent,
};
use crate::transform::{dst_forward, mode_eigenvalue};
use crate::{Error, Result};

use std::f64::consts::{PI, SQRT_2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WeightVariant {
    /// Half-line, Robin bottom: `e^{-alpha z}`, `alpha = 2 pi^2 / (beta a^2)`.
    MixedSemiInfinite,
    /// Bounded, Robin bottom, Dirichlet top: `cosh(alpha (z - b))`.
    MixedBounded,
    /// Bounded, Robin bottom, Neumann top: `sinh(alpha (b - z))`.
    MixedBoundedNeumannTop,
    /// Sign-flipped model: `sin(pi z / b)`.
    Generalized,
    /// Partially viscous, half-line: same profile as the mixed half-line case.
    ViscousSemiInfinite,
    /// Neumann bottom, half-line: `e^{-alpha z}`, `alpha = pi / a`.
    ConservedSemiInfinite,
    /// Neumann at both z-faces: `sinh(alpha (b - z))`, `alpha = pi / a`.
    ConservedBoundedNeumann,
    /// Periodic in z: `(e^{-alpha z} + e^{alpha (z - b)}) / 2`.
    ConservedPeriodic,
    /// Dirichlet in z: `cosh(alpha (z - b))`, `alpha = pi / a`.
    ConservedDirichlet,
}

impl WeightVariant {
    pub const ALL: [WeightVariant; 9] = [
        WeightVariant::MixedSemiInfinite,
        WeightVariant::MixedBounded,
        WeightVariant::MixedBoundedNeumannTop,
        WeightVariant::Generalized,
        WeightVariant::ViscousSemiInfinite,
        WeightVariant::ConservedSemiInfinite,
        WeightVariant::ConservedBoundedNeumann,
        WeightVariant::ConservedPeriodic,
        WeightVariant::ConservedDirichlet,
    ];

    pub fn is_conserved(self) -> bool {
        matches!(
            self,
            WeightVariant::ConservedSemiInfinite
                | WeightVariant::ConservedBoundedNeumann
                | WeightVariant::ConservedPeriodic
                | WeightVariant::ConservedDirichlet
        )
    }

    pub fn is_semi_infinite(self) -> bool {
        matches!(
            self,
            WeightVariant::MixedSemiInfinite
                | WeightVariant::ViscousSemiInfinite
                | WeightVariant::ConservedSemiInfinite
        )
    }

    fn needs_beta(self) -> bool {
        matches!(
            self,
            WeightVariant::MixedSemiInfinite
                | WeightVariant::MixedBounded
                | WeightVariant::MixedBoundedNeumannTop
                | WeightVariant::ViscousSemiInfinite
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightSpec {
    pub variant: WeightVariant,
    pub a: f64,
    /// Height of a bounded box; ignored on the half-line.
    pub b: Option<f64>,
    /// Robin coefficient for the mixed variants.
    pub beta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
enum Profile {
    Exp,
    Cosh,
    SinhTop,
    Sine,
    PeriodicPair,
}

/// A weight sampled on a grid together with its parameters.
#[derive(Clone, Debug)]
pub struct Weight {
    pub spec: WeightSpec,
    pub alpha: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    profile: Profile,
    height: f64,
    field: ScalarField,
    dz_field: ScalarField,
}

impl Weight {
    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    /// Analytic `phi_z` sampled on the grid.
    pub fn dz_field(&self) -> &ScalarField {
        &self.dz_field
    }

    /// z-profile `eta(z)`.
    pub fn eta(&self, z: f64) -> f64 {
        profile_value(self.profile, self.alpha, self.height, z).0
    }

    /// Closed-form `int eta dz` over the z-range; the half-line uses the
    /// untruncated integral.
    pub fn eta_integral(&self) -> f64 {
        let (al, b) = (self.alpha, self.height);
        match self.profile {
            Profile::Exp => 1.0 / al,
            Profile::Cosh => (al * b).sinh() / al,
            Profile::SinhTop => ((al * b).cosh() - 1.0) / al,
            Profile::Sine => 2.0 * b / PI,
            Profile::PeriodicPair => -(-al * b).exp_m1() / al,
        }
    }

    /// Closed-form `int phi` over the domain.
    pub fn integral(&self) -> f64 {
        (2.0 * self.spec.a / PI).powi(2) * self.eta_integral()
    }

    /// `sqrt(int phi)`, the constant in `int (log u) phi <= c (int u^2 phi)^{1/2}`.
    pub fn log_bound_constant(&self) -> f64 {
        self.integral().sqrt()
    }
}

fn profile_value(p: Profile, al: f64, b: f64, z: f64) -> (f64, f64) {
    match p {
        Profile::Exp => {
            let e = (-al * z).exp();
            (e, -al * e)
        }
        Profile::Cosh => ((al * (z - b)).cosh(), al * (al * (z - b)).sinh()),
        Profile::SinhTop => ((al * (b - z)).sinh(), -al * (al * (b - z)).cosh()),
        Profile::Sine => ((PI * z / b).sin(), PI / b * (PI * z / b).cos()),
        Profile::PeriodicPair => {
            let (lo, hi) = ((-al * z).exp(), (al * (z - b)).exp());
            (0.5 * (lo + hi), 0.5 * al * (hi - lo))
        }
    }
}

/// `2 (pi/a)^2 coth(alpha b) / alpha`.
pub fn h_coth(alpha: f64, a: f64, b: f64) -> f64 {
    2.0 * (PI / a).powi(2) / (alpha * (alpha * b).tanh())
}

/// `2 (pi/a)^2 tanh(alpha b) / alpha`, the Neumann-top analogue of [`h_coth`].
pub fn h_tanh(alpha: f64, a: f64, b: f64) -> f64 {
    2.0 * (PI / a).powi(2) * (alpha * b).tanh() / alpha
}

fn bisect_decreasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Unique `alpha` in `(0, sqrt(2) pi / a)` with `h_coth(alpha) = beta`.
pub fn solve_alpha(beta: f64, a: f64, b: f64) -> Result<f64> {
    let top = SQRT_2 * PI / a;
    let floor = h_coth(top, a, b);
    if !(beta > floor) {
        return Err(Error::Parameter(format!("beta = {beta} must exceed h(sqrt(2) pi / a) = {floor}")));
    }
    Ok(bisect_decreasing(|x| h_coth(x, a, b), beta, 0.0, top))
}

/// Unique `alpha` in `(0, sqrt(2) pi / a)` with `h_tanh(alpha) = beta`.
pub fn solve_alpha_neumann_top(beta: f64, a: f64, b: f64) -> Result<f64> {
    let top = SQRT_2 * PI / a;
    let (lo, hi) = (h_tanh(top, a, b), 2.0 * b * (PI / a).powi(2));
    if !(beta > lo && beta < hi) {
        return Err(Error::Parameter(format!("beta = {beta} must lie in ({lo}, {hi})")));
    }
    Ok(bisect_decreasing(|x| h_tanh(x, a, b), beta, 0.0, top))
}

fn mixed_alpha(beta: f64, a: f64) -> Result<f64> {
    if !(beta > SQRT_2 * PI / a) {
        return Err(Error::Parameter(format!("beta = {beta} must exceed sqrt(2) pi / a = {}", SQRT_2 * PI / a)));
    }
    Ok(2.0 * PI * PI / (beta * a * a))
}

/// Samples the weight of `spec` on `grid`.
pub fn make_weight(spec: WeightSpec, grid: &Grid) -> Result<Weight> {
    let a = spec.a;
    if (grid.domain.a - a).abs() > 1e-12 * a {
        return Err(Error::Parameter("weight and grid disagree on the side length".into()));
    }
    if spec.variant.is_semi_infinite() == grid.domain.is_bounded() {
        return Err(Error::Parameter(format!("{:?} does not fit this domain", spec.variant)));
    }
    let height = match grid.domain.z {
        ZExtent::Bounded(b) => {
            if spec.b.is_some_and(|sb| (sb - b).abs() > 1e-12 * b) {
                return Err(Error::Parameter("weight and grid disagree on the height".into()));
            }
            b
        }
        ZExtent::SemiInfinite { .. } => f64::INFINITY,
    };
    let beta = spec.beta;
    if spec.variant.needs_beta() && beta.is_none() {
        return Err(Error::Parameter(format!("{:?} needs beta", spec.variant)));
    }
    let beta = beta.unwrap_or(0.0);
    let s2 = (PI / a).powi(2);
    use WeightVariant::*;
    let (profile, alpha) = match spec.variant {
        MixedSemiInfinite | ViscousSemiInfinite => (Profile::Exp, mixed_alpha(beta, a)?),
        MixedBounded => (Profile::Cosh, solve_alpha(beta, a, height)?),
        MixedBoundedNeumannTop => (Profile::SinhTop, solve_alpha_neumann_top(beta, a, height)?),
        Generalized => (Profile::Sine, PI / height),
        ConservedSemiInfinite => (Profile::Exp, PI / a),
        ConservedBoundedNeumann => (Profile::SinhTop, PI / a),
        ConservedPeriodic => (Profile::PeriodicPair, PI / a),
        ConservedDirichlet => (Profile::Cosh, PI / a),
    };
    let (lambda1, lambda2) = if profile == Profile::Sine {
        (2.0 * s2 + alpha * alpha, -alpha * alpha)
    } else {
        (2.0 * s2 - alpha * alpha, alpha * alpha)
    };
    if lambda1 <= 0.0 {
        return Err(Error::Parameter(format!("alpha = {alpha} gives a non-positive eigenvalue")));
    }
    let phi1 = |x1: f64, x2: f64| (PI * x1 / a).sin() * (PI * x2 / a).sin();
    let field = grid.from_fn(|x1, x2, z| phi1(x1, x2) * profile_value(profile, alpha, height, z).0);
    let dz_field = grid.from_fn(|x1, x2, z| phi1(x1, x2) * profile_value(profile, alpha, height, z).1);
    let mut field = field;
    zero_side_walls(&mut field);
    let mut dz_field = dz_field;
    zero_side_walls(&mut dz_field);
    Ok(Weight { spec, alpha, lambda1, lambda2, profile, height, field, dz_field })
}

fn zero_side_walls(f: &mut ScalarField) {
    let g = *f.grid();
    for i1 in 0..g.nxp() {
        for i2 in 0..g.nxp() {
            if i1 == 0 || i2 == 0 || i1 == g.nx || i2 == g.nx {
                for j in 0..g.nzp() {
                    f.set(i1, i2, j, 0.0);
                }
            }
        }
    }
}

/// Relative interior residuals `max|-Delta_h phi - lambda1 phi| / max|phi|`
/// and the same for `D_zz phi - lambda2 phi`.
pub fn eigen_residuals(w: &Weight) -> (f64, f64) {
    let g = *w.field.grid();
    let lap = laplacian_fd(&w.field);
    let dzz = second_derivative(&w.field, Axis::Z);
    let scale = sup_norm(&w.field);
    let (mut r1, mut r2) = (0.0f64, 0.0f64);
    for i1 in 1..g.nx {
        for i2 in 1..g.nx {
            for j in 1..g.nz {
                let p = w.field.get(i1, i2, j);
                r1 = r1.max((-lap.get(i1, i2, j) - w.lambda1 * p).abs());
                r2 = r2.max((dzz.get(i1, i2, j) - w.lambda2 * p).abs());
            }
        }
    }
    (r1 / scale, r2 / scale)
}

// ---------------------------------------------------------------- quadrature

const GK_NODES: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c);
    let mut k = K15_WEIGHTS[7] * fc;
    let mut g = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += K15_WEIGHTS[i] * s;
        if i % 2 == 1 {
            g += G7_WEIGHTS[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature to absolute tolerance `tol`.
pub fn integrate_adaptive(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> f64 {
    fn rec(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64, depth: usize) -> f64 {
        let (v, err) = gk15(f, lo, hi);
        if err <= tol || depth >= 50 {
            return v;
        }
        let mid = 0.5 * (lo + hi);
        rec(f, lo, mid, 0.5 * tol, depth + 1) + rec(f, mid, hi, 0.5 * tol, depth + 1)
    }
    rec(&f, lo, hi, tol, 0)
}

const QUAD_TOL: f64 = 1e-13;

fn head(x: f64) -> f64 {
    integrate_adaptive(|y| 1.0 / (y * y * y + 1.0).sqrt(), 0.0, x, QUAD_TOL)
}

/// Tail from `x >= 1` to infinity, after `y = 1/x` and `y = s^2`.
fn tail(x: f64) -> f64 {
    integrate_adaptive(|s| 2.0 / (1.0 + s.powi(6)).sqrt(), 0.0, 1.0 / x.sqrt(), QUAD_TOL)
}

/// `I(x) = int_0^x dy / sqrt(y^3 + 1)`.
pub fn quad_i(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x <= 1.0 {
        head(x)
    } else if x.is_infinite() {
        quad_i_infinity()
    } else {
        head(1.0) + tail(1.0) - tail(x)
    }
}

/// `I(infinity) = 2.80436...`.
pub fn quad_i_infinity() -> f64 {
    head(1.0) + tail(1.0)
}

// ----------------------------------------------------------------- constants

/// Dynamics the constants refer to.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum BlowupKind {
    Mixed,
    Generalized,
    Viscous { nu: f64 },
    Conserved,
}

impl BlowupKind {
    pub fn for_weight(w: WeightVariant, nu: f64) -> Self {
        use WeightVariant::*;
        match w {
            MixedSemiInfinite | MixedBounded | MixedBoundedNeumannTop => BlowupKind::Mixed,
            Generalized => BlowupKind::Generalized,
            ViscousSemiInfinite => BlowupKind::Viscous { nu },
            _ => BlowupKind::Conserved,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BlowupConstants {
    pub weight: WeightVariant,
    pub alpha: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `int (log u0) phi` over interior nodes.
    pub a: f64,
    /// `2 int psi0_z phi`, or `-int omega0 phi_z` for the viscous model.
    pub b: f64,
    /// Coefficient `D` of the closed-form blowup time.
    pub d: f64,
    /// Coefficient of `F^2` in the comparison inequality `F'' >= D_F F^2`.
    pub d_f: f64,
    /// `F'(0)`.
    pub df0: f64,
    /// `C = F'(0)^2`.
    pub c: f64,
    /// `J = (3 C / (2 D_F))^{1/3}`.
    pub j: f64,
    pub i_inf: f64,
    /// `sqrt(int phi)`.
    pub kappa_w: f64,
    /// Coefficient of `int u^2 phi` in `d/dt int psi_z phi` (or its viscous
    /// analogue); the log integral then has second derivative `c_log * g`.
    pub c_log: f64,
    /// Blowup bound from the closed-form estimate; `None` when A or B fails.
    pub t_star: Option<f64>,
    /// Bound rederived from `D_F` and `F'(0)`.
    pub t_star_log_bound: Option<f64>,
    /// Viscous decay rate `nu (2 (pi/a)^2 - alpha^2)`.
    pub lambda: Option<f64>,
    /// `log 2 / lambda`.
    pub t0: Option<f64>,
    pub a_positive: bool,
    pub b_positive: bool,
    /// `T* < T0`; `None` outside the viscous model.
    pub t_star_before_t0: Option<bool>,
}

impl BlowupConstants {
    /// Fails with [`Error::Hypothesis`] listing every violated hypothesis.
    pub fn verify_hypotheses(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !self.a_positive {
            bad.push(format!("A = {} is not positive", self.a));
        }
        if !self.b_positive {
            bad.push(format!("B = {} is not positive", self.b));
        }
        if self.t_star_before_t0 == Some(false) {
            bad.push(format!("T* = {:?} is not below T0 = {:?}", self.t_star, self.t0));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Hypothesis(bad.join("; ")))
        }
    }
}

/// Blowup constants for the given dynamics. `psi0` is used for every model but the
/// viscous one, which reads `omega0`.
pub fn compute_constants(
    u0: &ScalarField,
    psi0: &ScalarField,
    omega0: Option<&ScalarField>,
    w: &Weight,
    kind: BlowupKind,
) -> Result<BlowupConstants> {
    let a_side = w.spec.a;
    let alpha = w.alpha;
    let lambda1 = w.lambda1;
    let kappa_w = w.log_bound_constant();
    let i_inf = quad_i_infinity();

    let log_a = interior_weighted_integral(u0, &w.field, f64::ln)?;
    let psi_z_int = weighted_integral(&derivative_z(psi0, w), &w.field)?;
    let c_psi = match kind {
        BlowupKind::Generalized => -w.lambda2 / lambda1,
        _ => alpha * alpha / lambda1,
    };

    let (b, d, c_log, b_lin, lambda) = match kind {
        BlowupKind::Viscous { nu } => {
            let om = omega0.ok_or_else(|| Error::Parameter("viscous constants need omega0".into()))?;
            let b = -weighted_integral(om, &w.dz_field)?;
            let d = 2.0 / lambda1;
            (b, d, 0.5 * d * alpha * alpha, 0.5 * d * b, Some(nu * lambda1))
        }
        BlowupKind::Mixed => {
            let b = 2.0 * psi_z_int;
            let d = PI * alpha.powf(2.5) / (a_side * lambda1);
            (b, d, 2.0 * c_psi, b, None)
        }
        BlowupKind::Generalized => {
            let b = 2.0 * psi_z_int;
            (b, 2.0 * c_psi / kappa_w, 2.0 * c_psi, b, None)
        }
        BlowupKind::Conserved => {
            let b = 2.0 * psi_z_int;
            (b, 2.0 * c_psi / kappa_w, 2.0 * c_psi, 0.5 * b, None)
        }
    };
    let d_f = c_log / kappa_w;
    let df0 = b_lin / kappa_w;
    let c = df0 * df0;
    let j = (3.0 * c / (2.0 * d_f)).cbrt();
    let a_positive = log_a > 0.0;
    let b_positive = b > 0.0;
    let ok = a_positive && b_positive;

    let t_star = ok.then(|| match kind {
        BlowupKind::Mixed => (2.0 * d * b / 3.0 * (alpha.sqrt() * PI / (2.0 * a_side))).powf(-1.0 / 3.0) * i_inf,
        BlowupKind::Generalized => (4.0 * b / (9.0 * kappa_w * kappa_w)).powf(-1.0 / 3.0) * i_inf,
        BlowupKind::Viscous { .. } => {
            (PI * alpha.powi(3) * d * d * b / (12.0 * a_side)).powf(-1.0 / 3.0) * i_inf
        }
        BlowupKind::Conserved => (2.0 * d_f * df0 / 3.0).powf(-1.0 / 3.0) * i_inf,
    });
    let t_star_log_bound = ok.then(|| (2.0 * d_f * df0 / 3.0).powf(-1.0 / 3.0) * i_inf);
    let t0 = lambda.map(|l| if l > 0.0 { 2f64.ln() / l } else { f64::INFINITY });
    let t_star_before_t0 = match (t0, t_star) {
        (Some(t0), Some(ts)) => Some(ts < t0),
        (Some(_), None) => Some(false),
        _ => None,
    };
    Ok(BlowupConstants {
        weight: w.spec.variant,
        alpha,
        lambda1,
        lambda2: w.lambda2,
        a: log_a,
        b,
        d,
        d_f,
        df0,
        c,
        j,
        i_inf,
        kappa_w,
        c_log,
        t_star,
        t_star_log_bound,
        lambda,
        t0,
        a_positive,
        b_positive,
        t_star_before_t0,
    })
}

fn derivative_z(f: &ScalarField, w: &Weight) -> ScalarField {
    dz(f, w.profile == Profile::PeriodicPair)
}

// ---------------------------------------------------------------- F tracking

/// One sample of the comparison functional.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FSample {
    pub f: f64,
    pub df: f64,
    pub ddf: f64,
    /// `ddf - D_F f^2 + 1e-6 (1 + f^2)`; negative means the inequality fails.
    pub margin: f64,
}

/// `F(t) = D_F int_0^t int_0^s g + F'(0) t` from samples of
/// `g = int u^2 phi`, by cumulative trapezoid sums. `F''` comes from
/// centered second differences of `F` (three-point stencil at the ends).
pub fn track_f(times: &[f64], g: &[f64], d_f: f64, df0: f64) -> Vec<FSample> {
    let n = times.len();
    assert_eq!(n, g.len(), "series lengths differ");
    let mut g1 = vec![0.0; n];
    let mut g2 = vec![0.0; n];
    for i in 1..n {
        let h = times[i] - times[i - 1];
        g1[i] = g1[i - 1] + 0.5 * h * (g[i] + g[i - 1]);
        g2[i] = g2[i - 1] + 0.5 * h * (g1[i] + g1[i - 1]);
    }
    let f: Vec<f64> = (0..n).map(|i| d_f * g2[i] + df0 * (times[i] - times[0])).collect();
    let second = |i: usize| {
        let (h0, h1) = (times[i] - times[i - 1], times[i + 1] - times[i]);
        2.0 * (h0 * f[i + 1] - (h0 + h1) * f[i] + h1 * f[i - 1]) / (h0 * h1 * (h0 + h1))
    };
    (0..n)
        .map(|i| {
            let ddf = if n < 3 {
                d_f * g[i]
            } else {
                second(i.clamp(1, n - 2))
            };
            let df = d_f * g1[i] + df0;
            FSample { f: f[i], df, ddf, margin: ddf - d_f * f[i] * f[i] + 1e-6 * (1.0 + f[i] * f[i]) }
        })
        .collect()
}

/// `kappa_w (int u^2 phi)^{1/2} - int (log u) phi`; nonnegative when the
/// log-bound chain holds.
pub fn log_bound_margin(u: &ScalarField, w: &Weight) -> Result<f64> {
    let g = weighted_integral(&u.map(|x| x * x), &w.field)?;
    let lhs = interior_weighted_integral(u, &w.field, f64::ln)?;
    Ok(w.log_bound_constant() * g.sqrt() - lhs)
}

// -------------------------------------------------------------------- energy

/// Discrete energy `int (u^2 + 2 |grad psi|^2) - 2 beta int_{z=0} psi^2`.
/// The x-gradient is taken spectrally, the z-gradient by forward
/// differences; with these choices the energy is conserved exactly by the
/// semi-discrete inviscid dynamics.
pub fn energy(u: &ScalarField, psi: &ScalarField, beta: f64) -> Result<f64> {
    let (grad2, trace2) = gradient_terms(psi)?;
    Ok(integrate(&u.map(|x| x * x))? + 2.0 * grad2 - 2.0 * beta * trace2)
}

/// `(int |grad psi|^2, int_{z=0} psi^2)`.
pub fn gradient_terms(psi: &ScalarField) -> Result<(f64, f64)> {
    let g = *psi.grid();
    let a = g.domain.a;
    let hz = g.hz();
    let coeffs = dst_forward(psi);
    let n = g.nx - 1;
    let mut x_part = 0.0;
    for k1 in 1..=n {
        for k2 in 1..=n {
            let kappa2 = mode_eigenvalue(a, k1, k2);
            let line = coeffs.profile(k1, k2);
            let s: f64 = line.iter().enumerate().map(|(j, v)| g.z_weight(j) * v * v).sum();
            x_part += kappa2 * s;
        }
    }
    x_part *= (a / 2.0).powi(2);
    let cell = g.hx() * g.hx();
    let mut z_part = 0.0;
    let mut trace = 0.0;
    for i1 in 1..g.nx {
        for i2 in 1..g.nx {
            for j in 0..g.nz {
                let d = psi.get(i1, i2, j + 1) - psi.get(i1, i2, j);
                z_part += d * d;
            }
            trace += psi.get(i1, i2, 0).powi(2);
        }
    }
    Ok((x_part + z_part * cell / hz, trace * cell))
}

/// Bound `int (u^2 + 2 (1 - beta b) |grad psi|^2) <= E(0)`, checked only
/// when `beta < 1/b`.
pub fn energy_bound_holds(u: &ScalarField, psi: &ScalarField, beta: f64, e0: f64) -> Result<Option<bool>> {
    let b = match psi.grid().domain.z {
        ZExtent::Bounded(b) => b,
        ZExtent::SemiInfinite { .. } => return Ok(None),
    };
    if beta * b >= 1.0 {
        return Ok(None);
    }
    let (grad2, _) = gradient_terms(psi)?;
    let lhs = integrate(&u.map(|x| x * x))? + 2.0 * (1.0 - beta * b) * grad2;
    Ok(Some(lhs <= e0 * (1.0 + 1e-12) + 1e-14))
}

// ----------------------------------------------------------------- r monitor

/// `int_{Omega_x} f(x, 0) phi1(x) dx`.
fn bottom_trace(f: &ScalarField) -> f64 {
    let g = *f.grid();
    let a = g.domain.a;
    let mut s = 0.0;
    for i1 in 1..g.nx {
        for i2 in 1..g.nx {
            s += f.get(i1, i2, 0) * (PI * g.x(i1) / a).sin() * (PI * g.x(i2) / a).sin();
        }
    }
    s * g.hx() * g.hx()
}

/// Boundary functional whose smallness (`r <= B/2`) keeps the conserved
/// comparison argument alive. `None` for non-conserved weights.
pub fn r_monitor(psi: &ScalarField, psi0: &ScalarField, w: &Weight) -> Result<Option<f64>> {
    let a = w.spec.a;
    let al = w.alpha;
    let s2 = (PI / a).powi(2);
    let mut diff = psi.clone();
    diff.axpy(-1.0, psi0)?;
    let value_trace = || bottom_trace(&diff);
    let slope_trace = || {
        let d = if w.profile == Profile::PeriodicPair { dz(&diff, true) } else { derivative(&diff, Axis::Z) };
        bottom_trace(&d)
    };
    let b = w.height;
    let r = match w.spec.variant {
        WeightVariant::ConservedSemiInfinite => 4.0 * s2 / w.lambda1 * value_trace(),
        WeightVariant::ConservedBoundedNeumann => {
            2.0 * s2 * ((al * b).exp() - (-al * b).exp()) / w.lambda1 * value_trace()
        }
        WeightVariant::ConservedPeriodic => 2.0 * al * (1.0 - (-al * b).exp()) / w.lambda1 * slope_trace(),
        WeightVariant::ConservedDirichlet => {
            al * ((al * b).exp() - (-al * b).exp()) / w.lambda1 * slope_trace()
        }
        _ => return Ok(None),
    };
    Ok(Some(r))
}

// ------------------------------------------------------ viscous kernel check

/// Exponential-kernel prediction of `K(t) = int omega phi_z`:
/// `K(t) = e^{-lambda t} K(0) - alpha^2 int_0^t e^{-lambda (t - s)} g(s) ds`,
/// marched sample to sample with a derivative-corrected trapezoid rule on
/// each interval. `dg` holds `d/dt int u^2 phi`.
pub fn viscous_kernel_prediction(times: &[f64], g: &[f64], dg: &[f64], k0: f64, lambda: f64, alpha: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut k = k0;
    out.push(k);
    for i in 1..times.len() {
        let h = times[i] - times[i - 1];
        let e = (-lambda * h).exp();
        let (y0, y1) = (e * g[i - 1], g[i]);
        let (d0, d1) = (e * (lambda * g[i - 1] + dg[i - 1]), lambda * g[i] + dg[i]);
        let q = 0.5 * h * (y0 + y1) + h * h / 12.0 * (d0 - d1);
        k = e * k - alpha * alpha * q;
        out.push(k);
    }
    out
}

/// Largest `|measured - predicted|` relative to the largest `|measured|`.
pub fn viscous_kernel_check(
    times: &[f64],
    measured: &[f64],
    g: &[f64],
    dg: &[f64],
    lambda: f64,
    alpha: f64,
) -> f64 {
    if measured.is_empty() {
        return 0.0;
    }
    let pred = viscous_kernel_prediction(times, g, dg, measured[0], lambda, alpha);
    let scale = measured.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let worst = measured.iter().zip(&pred).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

// --------------------------------------------------------------- decay check

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayStatus {
    /// `max|u(t)| <= max|u0| e^{-7t} (1 + 1e-6)`.
    pub u_bound: bool,
    /// `max v <= -2`.
    pub v_bound: bool,
}

pub fn decay_check(t: f64, u: &ScalarField, u0_sup: f64, v: &ScalarField) -> DecayStatus {
    DecayStatus {
        u_bound: sup_norm(u) <= u0_sup * (-7.0 * t).exp() * (1.0 + 1e-6),
        v_bound: v.max() <= -2.0,
    }
}

/// `delta (4 C_s + 1) (|v0| + C_s |u0|)` with the discrete `H^2` norm in
/// place of the higher Sobolev norm; the small-data hypothesis asks for a
/// value below one.
pub fn regularity_smallness(delta: f64, cs: f64, u0: &ScalarField, v0: &ScalarField) -> Result<f64> {
    Ok(delta * (4.0 * cs + 1.0) * (sobolev_norm(v0, 2)? + cs * sobolev_norm(u0, 2)?))
}

// ------------------------------------------------------------ identity check

/// Both sides of `d/dt int psi_z phi = c int u^2 phi` at one state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentitySample {
    pub measured: f64,
    pub predicted: f64,
}

impl IdentitySample {
    pub fn relative_residual(&self) -> f64 {
        (self.measured - self.predicted).abs() / self.predicted.abs().max(f64::MIN_POSITIVE)
    }
}

/// `measured = int D_z(psi_t) phi` with `psi_t` taken from the right-hand
/// side; `predicted` uses `alpha^2 / lambda1` (or `-lambda2 / lambda1` for
/// the sine weight).
pub fn identity_check_psi(u: &ScalarField, psi_t: &ScalarField, w: &Weight) -> Result<IdentitySample> {
    let measured = weighted_integral(&derivative_z(psi_t, w), &w.field)?;
    let c = if w.profile == Profile::Sine { -w.lambda2 / w.lambda1 } else { w.alpha * w.alpha / w.lambda1 };
    let predicted = c * weighted_integral(&u.map(|x| x * x), &w.field)?;
    Ok(IdentitySample { measured, predicted })
}

/// Weight with `alpha` overridden, for negative controls: the boundary term
/// of the identity no longer cancels.
pub fn with_alpha(w: &Weight, alpha: f64) -> Weight {
    let grid = *w.field.grid();
    let a = w.spec.a;
    let phi1 = |x1: f64, x2: f64| (PI * x1 / a).sin() * (PI * x2 / a).sin();
    let (p, h) = (w.profile, w.height);
    let mut field = grid.from_fn(|x1, x2, z| phi1(x1, x2) * profile_value(p, alpha, h, z).0);
    let mut dz_field = grid.from_fn(|x1, x2, z| phi1(x1, x2) * profile_value(p, alpha, h, z).1);
    zero_side_walls(&mut field);
    zero_side_walls(&mut dz_field);
    let s2 = (PI / a).powi(2);
    Weight {
        spec: w.spec,
        alpha,
        lambda1: 2.0 * s2 - alpha * alpha,
        lambda2: alpha * alpha,
        profile: p,
        height: h,
        field,
        dz_field,
    }
}

/// True when `beta` avoids every excluded value for wavenumbers up to the
/// grid's resolution, with the exclusion set matching the top condition.
pub fn beta_admissible(beta: f64, domain: &Domain, top: Top, kmax: usize) -> bool {
    !ResonanceSet::new(domain, top, kmax).excluded(beta)
}
