//! Right-hand sides of the model variants and the RK4 driver.
//!
//! The z-derivative used by the dynamics is the summation-by-parts pair to
//! the trapezoid rule: centered in the interior, one-sided first order at
//! the two ends. With it the semi-discrete inviscid system conserves the
//! discrete energy exactly, which the first-order closure buys at the cost
//! of a local boundary error.

use serde::Serialize;

use crate::elliptic::{Bottom, PoissonSolver, Sign, Top, ZBoundaryCondition};
use crate::grid::{second_derivative, sobolev_norm, sup_norm, Axis, Grid, ScalarField};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Variant {
    Inviscid,
    /// Diffusion `nu * Delta omega` in the vorticity equation; `gamma` is
    /// the Robin coefficient of `omega` at `z = 0`.
    Viscous { nu: f64, gamma: f64 },
    /// Laplacian with the opposite sign, Neumann on both z-faces.
    Generalized,
    /// Small-box regime in the variables `(u^2, psi_z)`, box side `delta`.
    Regularity { delta: f64 },
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub grid: Grid,
    /// z-face conditions of `psi` (ignored by the regularity variant, whose
    /// `v` carries homogeneous Dirichlet fluctuations on every face).
    pub psi_bc: ZBoundaryCondition,
}

/// Value `v` takes on every face in the regularity variant.
pub const REGULARITY_WALL_VALUE: f64 = -4.0;

/// Evolving solution. In the regularity variant `psi` holds `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub u: ScalarField,
    pub psi: ScalarField,
    /// Vorticity, viscous variant only.
    pub omega: Option<ScalarField>,
}

impl SimState {
    pub fn new(u: ScalarField, psi: ScalarField) -> Self {
        Self { t: 0.0, u, psi, omega: None }
    }

    pub fn with_omega(u: ScalarField, psi: ScalarField, omega: ScalarField) -> Self {
        Self { t: 0.0, u, psi, omega: Some(omega) }
    }

    fn all_finite(&self) -> bool {
        self.u.all_finite() && self.psi.all_finite() && self.omega.as_ref().is_none_or(|w| w.all_finite())
    }
}

/// Time derivatives at one state.
#[derive(Clone, Debug)]
pub struct Rates {
    pub u: ScalarField,
    /// Derivative of the second evolved field: `psi`, `omega` or `v`.
    pub second: ScalarField,
    /// `D_z psi` for the stream-function variants, `v` for regularity.
    pub psi_z: ScalarField,
}

/// Summation-by-parts z-derivative. Periodic lines wrap, with node `nz`
/// a copy of node 0.
pub fn dz(f: &ScalarField, periodic: bool) -> ScalarField {
    let g = *f.grid();
    let nzp = g.nzp();
    let n = g.nz;
    let inv2h = 0.5 / g.hz();
    let invh = 1.0 / g.hz();
    let mut out = g.zeros();
    let src = f.values();
    for (o, line) in out.values_mut().chunks_mut(nzp).zip(src.chunks(nzp)) {
        if periodic {
            for j in 0..n {
                let up = line[(j + 1) % n];
                let down = line[(j + n - 1) % n];
                o[j] = (up - down) * inv2h;
            }
            o[n] = o[0];
        } else {
            o[0] = (line[1] - line[0]) * invh;
            for j in 1..n {
                o[j] = (line[j + 1] - line[j - 1]) * inv2h;
            }
            o[n] = (line[n] - line[n - 1]) * invh;
        }
    }
    out
}

/// A model with its elliptic factorizations cached.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ModelSpec,
    psi_solver: PoissonSolver,
    omega_op: Option<PoissonSolver>,
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        let psi_bc = match spec.variant {
            Variant::Regularity { delta } => {
                if !spec.grid.domain.is_bounded() || (spec.grid.domain.a - delta).abs() > 1e-12 * delta {
                    return Err(Error::Parameter("regularity variant needs the bounded box (0, delta)^3".into()));
                }
                ZBoundaryCondition::new(Bottom::Dirichlet, Top::Dirichlet)
            }
            Variant::Generalized => {
                if spec.psi_bc != ZBoundaryCondition::new(Bottom::Neumann, Top::Neumann) {
                    return Err(Error::Parameter("generalized variant needs Neumann on both z-faces".into()));
                }
                spec.psi_bc
            }
            _ => spec.psi_bc,
        };
        let psi_solver = PoissonSolver::new(spec.grid, psi_bc)?;
        let omega_op = match spec.variant {
            Variant::Viscous { nu, gamma } => {
                if nu < 0.0 {
                    return Err(Error::Parameter(format!("viscosity {nu} is negative")));
                }
                let top = if spec.grid.domain.is_bounded() { Top::Dirichlet } else { Top::Decay };
                Some(PoissonSolver::new(spec.grid, ZBoundaryCondition::new(Bottom::Robin(gamma), top))?)
            }
            _ => None,
        };
        Ok(Self { spec, psi_solver, omega_op })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.spec.grid
    }

    pub fn psi_solver(&self) -> &PoissonSolver {
        &self.psi_solver
    }

    pub fn periodic_z(&self) -> bool {
        self.psi_solver.bc().top == Top::Periodic
    }

    fn sign(&self) -> Sign {
        if self.spec.variant == Variant::Generalized {
            Sign::Flipped
        } else {
            Sign::Standard
        }
    }

    /// `psi` recovered from `omega` (viscous variant).
    pub fn stream_function(&self, omega: &ScalarField) -> Result<ScalarField> {
        self.psi_solver.solve(omega, Sign::Standard)
    }

    /// `omega = -Delta_h psi`, consistent with the discrete solve.
    pub fn vorticity(&self, psi: &ScalarField) -> ScalarField {
        self.psi_solver.apply(psi)
    }

    fn dz(&self, f: &ScalarField) -> ScalarField {
        dz(f, self.periodic_z())
    }

    fn transport(&self, u: &ScalarField, psi_z: &ScalarField, factor: f64) -> ScalarField {
        u.zip_map(psi_z, |a, b| factor * a * b).expect("same grid")
    }

    /// `u_t = 2 u psi_z`, `psi_t = solve((u^2)_z)`.
    pub fn rhs_inviscid(&self, s: &SimState) -> Result<Rates> {
        let psi_z = self.dz(&s.psi);
        let u_t = self.transport(&s.u, &psi_z, 2.0);
        let u2z = self.dz(&s.u.map(|x| x * x));
        let psi_t = self.psi_solver.solve(&u2z, self.sign())?;
        Ok(Rates { u: u_t, second: psi_t, psi_z })
    }

    /// Same as [`Model::rhs_inviscid`]; the sign flip and Neumann faces
    /// come from the model.
    pub fn rhs_generalized(&self, s: &SimState) -> Result<Rates> {
        self.rhs_inviscid(s)
    }

    /// `u_t = 2 u psi_z`, `omega_t = (u^2)_z + nu Delta_h omega`, with `psi`
    /// recovered from `omega`. The `psi` slot of `s` is ignored.
    pub fn rhs_viscous(&self, s: &SimState) -> Result<Rates> {
        let (nu, op) = match (self.spec.variant, &self.omega_op) {
            (Variant::Viscous { nu, .. }, Some(op)) => (nu, op),
            _ => return Err(Error::Parameter("model is not viscous".into())),
        };
        let omega = s.omega.as_ref().ok_or_else(|| Error::Parameter("viscous state lacks omega".into()))?;
        let psi = self.stream_function(omega)?;
        let psi_z = self.dz(&psi);
        let u_t = self.transport(&s.u, &psi_z, 2.0);
        let mut omega_t = self.dz(&s.u.map(|x| x * x));
        if nu != 0.0 {
            omega_t.axpy(-nu, &op.apply(omega))?;
        }
        // homogeneous Dirichlet data at the top face
        let g = self.spec.grid;
        for i1 in 0..g.nxp() {
            for i2 in 0..g.nxp() {
                omega_t.set(i1, i2, g.nz, 0.0);
            }
        }
        Ok(Rates { u: u_t, second: omega_t, psi_z })
    }

    /// `u_t = 4 u v`, `-Delta v_t = u_zz` with `v_t = 0` on every face.
    pub fn rhs_regularity(&self, s: &SimState) -> Result<Rates> {
        let u_t = self.transport(&s.u, &s.psi, 4.0);
        let u_zz = second_derivative(&s.u, Axis::Z);
        let v_t = self.psi_solver.solve(&u_zz, Sign::Standard)?;
        Ok(Rates { u: u_t, second: v_t, psi_z: s.psi.clone() })
    }

    pub fn rhs(&self, s: &SimState) -> Result<Rates> {
        match self.spec.variant {
            Variant::Inviscid => self.rhs_inviscid(s),
            Variant::Generalized => self.rhs_generalized(s),
            Variant::Viscous { .. } => self.rhs_viscous(s),
            Variant::Regularity { .. } => self.rhs_regularity(s),
        }
    }

    /// Largest stable step for the given rates:
    /// `cfl / max(1, speed, nu * lambda_max / 4)`.
    pub fn stable_dt(&self, rates: &Rates, cfl: f64) -> f64 {
        let speed = match self.spec.variant {
            Variant::Regularity { .. } => 2.0 * sup_norm(&rates.psi_z),
            _ => sup_norm(&rates.psi_z),
        };
        let stiff = match self.spec.variant {
            Variant::Viscous { nu, .. } => {
                let g = self.spec.grid;
                let kx = std::f64::consts::PI * (g.nx - 1) as f64 / g.domain.a;
                nu * (2.0 * kx * kx + 4.0 / (g.hz() * g.hz())) / 4.0
            }
            _ => 0.0,
        };
        cfl / 1f64.max(speed).max(stiff)
    }

    fn combine(&self, s: &SimState, pairs: &[(f64, &Rates)]) -> Result<SimState> {
        let mut u = s.u.clone();
        let viscous = s.omega.is_some();
        let mut second = if viscous { s.omega.clone().expect("checked") } else { s.psi.clone() };
        for (c, r) in pairs {
            u.axpy(*c, &r.u)?;
            second.axpy(*c, &r.second)?;
        }
        let t = s.t + pairs.iter().map(|(c, _)| *c).sum::<f64>();
        if viscous {
            Ok(SimState { t, u, psi: s.psi.clone(), omega: Some(second) })
        } else {
            Ok(SimState { t, u, psi: second, omega: None })
        }
    }

    fn finalize(&self, mut next: SimState) -> Result<(SimState, bool)> {
        if !next.all_finite() {
            return Err(Error::BlowupDetected { t_last: next.t });
        }
        let mut clipped = false;
        let min = next.u.min();
        if min < 0.0 {
            if min < -1e-12 {
                return Err(Error::StepRejected(format!("u undershoots to {min:e}")));
            }
            next.u = next.u.map(|x| x.max(0.0));
            clipped = true;
        }
        if let Some(omega) = &next.omega {
            next.psi = self.stream_function(omega)?;
        }
        if self.periodic_z() {
            let g = self.spec.grid;
            for f in [&mut next.u, &mut next.psi] {
                for i1 in 0..g.nxp() {
                    for i2 in 0..g.nxp() {
                        let v = f.get(i1, i2, 0);
                        f.set(i1, i2, g.nz, v);
                    }
                }
            }
        }
        Ok((next, clipped))
    }

    /// One classical RK4 step reusing `k1 = rhs(s)`. `dt` may be negative.
    fn advance(&self, s: &SimState, k1: &Rates, dt: f64) -> Result<(SimState, bool)> {
        let mid = |r: &Rates| self.combine(s, &[(0.5 * dt, r)]);
        let s2 = mid(k1)?;
        let k2 = self.rhs(&self.finalize_stage(s2)?)?;
        let s3 = mid(&k2)?;
        let k3 = self.rhs(&self.finalize_stage(s3)?)?;
        let s4 = self.combine(s, &[(dt, &k3)])?;
        let k4 = self.rhs(&self.finalize_stage(s4)?)?;
        let mut next = self.combine(
            s,
            &[(dt / 6.0, k1), (dt / 3.0, &k2), (dt / 3.0, &k3), (dt / 6.0, &k4)],
        )?;
        next.t = s.t + dt;
        self.finalize(next)
    }

    fn finalize_stage(&self, s: SimState) -> Result<SimState> {
        if !s.all_finite() {
            return Err(Error::BlowupDetected { t_last: s.t });
        }
        Ok(s)
    }

    /// Advances `s` by one RK4 step of size `dt > 0`.
    pub fn step(&self, s: &SimState, dt: f64) -> Result<SimState> {
        if dt <= 0.0 || !dt.is_finite() {
            return Err(Error::Parameter(format!("time step {dt} must be positive")));
        }
        let k1 = self.rhs(s)?;
        Ok(self.advance(s, &k1, dt)?.0)
    }
}

/// Driver settings.
#[derive(Clone, Debug, Serialize)]
pub struct Controls {
    pub t_end: f64,
    /// Upper bound on the step; `None` leaves only the stability limit.
    pub dt_max: Option<f64>,
    pub cfl: f64,
    /// Observer is called every `cadence` accepted steps (and at both ends).
    pub cadence: usize,
    /// Blowup when `H^2(u)` exceeds this multiple of its initial value.
    pub growth_limit: f64,
    pub dt_min: f64,
    pub max_steps: usize,
}

impl Default for Controls {
    fn default() -> Self {
        Self {
            t_end: 1.0,
            dt_max: None,
            cfl: 0.25,
            cadence: 1,
            growth_limit: 1e6,
            dt_min: 1e-10,
            max_steps: 1_000_000,
        }
    }
}

/// Data handed to the observer at each recorded step.
pub struct Sample<'a> {
    pub state: &'a SimState,
    pub rates: &'a Rates,
    /// Step about to be taken from this state (0 at the final record).
    pub dt: f64,
    pub step: usize,
    /// `u` was clipped at zero on the step that produced this state.
    pub clipped: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum BlowupReason {
    NormGrowth,
    StepUnderflow,
    NonFinite,
}

#[derive(Clone, Debug, Serialize)]
pub struct Blowup {
    /// Time of the last finite, accepted state.
    pub t_last: f64,
    pub reason: BlowupReason,
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub final_state: SimState,
    pub steps: usize,
    pub blowup: Option<Blowup>,
}

/// Integrates from `initial` to `controls.t_end` or until blowup. The
/// observer sees the initial state, every `cadence`-th state and the last
/// accepted state.
pub fn run(
    model: &Model,
    initial: SimState,
    controls: &Controls,
    mut observer: impl FnMut(&Sample) -> Result<()>,
) -> Result<RunOutcome> {
    if controls.cadence == 0 || controls.cfl <= 0.0 || controls.t_end < initial.t {
        return Err(Error::Parameter("cadence and cfl must be positive, t_end not before t0".into()));
    }
    let h2_start = sobolev_norm(&initial.u, 2)?;
    let limit = controls.growth_limit * h2_start;
    let mut state = initial;
    let mut rates = model.rhs(&state)?;
    let mut steps = 0;
    let mut clipped = false;
    let mut blowup = None;
    let tol = 1e-12 * controls.t_end.abs().max(1.0);

    loop {
        let remaining = controls.t_end - state.t;
        if remaining <= tol {
            observer(&Sample { state: &state, rates: &rates, dt: 0.0, step: steps, clipped })?;
            break;
        }
        let mut dt = model.stable_dt(&rates, controls.cfl);
        if let Some(m) = controls.dt_max {
            dt = dt.min(m);
        }
        if dt < controls.dt_min {
            observer(&Sample { state: &state, rates: &rates, dt, step: steps, clipped })?;
            blowup = Some(Blowup { t_last: state.t, reason: BlowupReason::StepUnderflow });
            break;
        }
        dt = dt.min(remaining);
        if steps % controls.cadence == 0 {
            observer(&Sample { state: &state, rates: &rates, dt, step: steps, clipped })?;
        }
        if steps >= controls.max_steps {
            return Err(Error::Parameter(format!("step budget {} exhausted", controls.max_steps)));
        }

        let mut attempt = dt;
        let accepted = loop {
            match model.advance(&state, &rates, attempt) {
                Ok(next) => break Some(next),
                Err(Error::StepRejected(_)) if attempt * 0.5 >= controls.dt_min => attempt *= 0.5,
                Err(Error::StepRejected(_)) => {
                    blowup = Some(Blowup { t_last: state.t, reason: BlowupReason::StepUnderflow });
                    break None;
                }
                Err(Error::BlowupDetected { .. }) => {
                    blowup = Some(Blowup { t_last: state.t, reason: BlowupReason::NonFinite });
                    break None;
                }
                Err(e) => return Err(e),
            }
        };
        let Some((next, was_clipped)) = accepted else {
            observer(&Sample { state: &state, rates: &rates, dt: 0.0, step: steps, clipped })?;
            break;
        };
        let next_rates = match model.rhs(&next) {
            Ok(r) => r,
            Err(Error::BlowupDetected { .. }) => {
                blowup = Some(Blowup { t_last: state.t, reason: BlowupReason::NonFinite });
                break;
            }
            Err(e) => return Err(e),
        };
        state = next;
        rates = next_rates;
        clipped = was_clipped;
        steps += 1;

        let h2 = sobolev_norm(&state.u, 2)?;
        if !h2.is_finite() || !rates.u.all_finite() || !rates.second.all_finite() {
            blowup = Some(Blowup { t_last: state.t, reason: BlowupReason::NonFinite });
            break;
        }
        if h2 > limit && h2_start > 0.0 {
            observer(&Sample { state: &state, rates: &rates, dt: 0.0, step: steps, clipped })?;
            blowup = Some(Blowup { t_last: state.t, reason: BlowupReason::NormGrowth });
            break;
        }
    }
    Ok(RunOutcome { final_state: state, steps, blowup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Domain;
    use std::f64::consts::PI;

    fn inviscid_model() -> Model {
        let g = Grid::new(Domain::bounded(PI, PI).unwrap(), 8, 32).unwrap();
        let bc = ZBoundaryCondition::new(Bottom::Robin(1.8), Top::Dirichlet);
        Model::new(ModelSpec { variant: Variant::Inviscid, grid: g, psi_bc: bc }).unwrap()
    }

    #[test]
    fn forward_then_backward_step_returns_to_start() {
        let m = inviscid_model();
        let g = *m.grid();
        let u = g.from_fn(|x1, x2, z| x1.sin() * x2.sin() * z.sin() * 1.5);
        let psi = g.from_fn(|x1, x2, z| -x1.sin() * x2.sin() * (PI - z) * 0.3);
        let s0 = SimState::new(u, psi);
        let mut errs = Vec::new();
        for dt in [0.02, 0.01] {
            let k1 = m.rhs(&s0).unwrap();
            let (s1, _) = m.advance(&s0, &k1, dt).unwrap();
            let k1b = m.rhs(&s1).unwrap();
            let (back, _) = m.advance(&s1, &k1b, -dt).unwrap();
            let mut d = back.u.clone();
            d.axpy(-1.0, &s0.u).unwrap();
            errs.push(sup_norm(&d));
        }
        assert!(errs[0] < 1e-6, "{errs:?}");
        assert!(errs[0] / errs[1] > 20.0, "{errs:?}");
    }
}
