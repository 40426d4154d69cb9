//! Named presets: geometry, boundary conditions, weight and initial data.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::diagnostics::{WeightSpec, WeightVariant};
use crate::dynamics::{ModelSpec, SimState, Variant, REGULARITY_WALL_VALUE};
use crate::elliptic::{Bottom, PoissonSolver, Top, ZBoundaryCondition};
use crate::grid::{Domain, Grid, ScalarField};
use crate::harness::config::{Overrides, Settings};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum ScenarioName {
    /// Robin bottom on the half-line.
    MixedHalfLine,
    /// Robin bottom, Dirichlet top.
    MixedBox,
    /// Robin bottom, Neumann top.
    MixedBoxNeumannTop,
    /// Sign-flipped Laplacian, Neumann on both z-faces.
    Flipped,
    /// Partial viscosity on the half-line.
    Viscous,
    /// Neumann bottom on the half-line.
    ConservedHalfLine,
    /// Neumann on both z-faces.
    ConservedBox,
    ConservedPeriodic,
    ConservedDirichlet,
    /// Small-box regime with decaying `u`.
    Regularity,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 10] = [
        ScenarioName::MixedHalfLine,
        ScenarioName::MixedBox,
        ScenarioName::MixedBoxNeumannTop,
        ScenarioName::Flipped,
        ScenarioName::Viscous,
        ScenarioName::ConservedHalfLine,
        ScenarioName::ConservedBox,
        ScenarioName::ConservedPeriodic,
        ScenarioName::ConservedDirichlet,
        ScenarioName::Regularity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::MixedHalfLine => "thm3.1",
            ScenarioName::MixedBox => "thm3.3",
            ScenarioName::MixedBoxNeumannTop => "rem3.2",
            ScenarioName::Flipped => "thm3.4",
            ScenarioName::Viscous => "thm4.1",
            ScenarioName::ConservedHalfLine => "thm5.1",
            ScenarioName::ConservedBox => "thm5.2",
            ScenarioName::ConservedPeriodic => "s5.3-periodic",
            ScenarioName::ConservedDirichlet => "s5.3-dirichlet",
            ScenarioName::Regularity => "sec6-regularity",
        }
    }

    pub fn is_semi_infinite(self) -> bool {
        matches!(self, ScenarioName::MixedHalfLine | ScenarioName::Viscous | ScenarioName::ConservedHalfLine)
    }

    /// Scenarios that expect a singularity.
    pub fn expects_blowup(self) -> bool {
        self != ScenarioName::Regularity
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "sec6" {
            return Ok(ScenarioName::Regularity);
        }
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ScenarioName::ALL.iter().map(|n| n.as_str()).collect();
                Error::Config(format!("unknown scenario '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// A fully resolved scenario.
#[derive(Clone, Debug, Serialize)]
pub struct Scenario {
    pub name: ScenarioName,
    pub model: ModelSpec,
    /// `None` for the regularity scenario, which has no weight.
    pub weight: Option<WeightSpec>,
    pub settings: Settings,
}

impl Scenario {
    pub fn new(name: ScenarioName, overrides: &Overrides) -> Result<Self> {
        let s = Settings::resolve(name, overrides);
        let a = if name == ScenarioName::Regularity { s.delta } else { PI };
        let domain = if name.is_semi_infinite() {
            Domain::semi_infinite(a, s.truncation)?
        } else if name == ScenarioName::Regularity {
            Domain::bounded(s.delta, s.delta)?
        } else {
            Domain::bounded(a, s.height)?
        };
        let grid = Grid::new(domain, s.nx, s.nz)?;
        let beta = s.beta;
        let top_decay = if domain.is_bounded() { Top::Dirichlet } else { Top::Decay };
        use ScenarioName::*;
        let (variant, bc, weight) = match name {
            MixedHalfLine => (Variant::Inviscid, ZBoundaryCondition::new(Bottom::Robin(beta), Top::Decay), WeightVariant::MixedSemiInfinite),
            MixedBox => (Variant::Inviscid, ZBoundaryCondition::new(Bottom::Robin(beta), Top::Dirichlet), WeightVariant::MixedBounded),
            MixedBoxNeumannTop => (
                Variant::Inviscid,
                ZBoundaryCondition::new(Bottom::Robin(beta), Top::Neumann),
                WeightVariant::MixedBoundedNeumannTop,
            ),
            Flipped => (Variant::Generalized, ZBoundaryCondition::new(Bottom::Neumann, Top::Neumann), WeightVariant::Generalized),
            Viscous => {
                let gamma = 2.0 * PI * PI / (beta * a * a);
                (
                    Variant::Viscous { nu: s.nu, gamma },
                    ZBoundaryCondition::new(Bottom::Robin(beta), Top::Decay),
                    WeightVariant::ViscousSemiInfinite,
                )
            }
            ConservedHalfLine => (Variant::Inviscid, ZBoundaryCondition::new(Bottom::Neumann, top_decay), WeightVariant::ConservedSemiInfinite),
            ConservedBox => (Variant::Inviscid, ZBoundaryCondition::new(Bottom::Neumann, Top::Neumann), WeightVariant::ConservedBoundedNeumann),
            ConservedPeriodic => (Variant::Inviscid, ZBoundaryCondition::new(Bottom::Neumann, Top::Periodic), WeightVariant::ConservedPeriodic),
            ConservedDirichlet => (Variant::Inviscid, ZBoundaryCondition::new(Bottom::Dirichlet, Top::Dirichlet), WeightVariant::ConservedDirichlet),
            Regularity => (
                Variant::Regularity { delta: s.delta },
                ZBoundaryCondition::new(Bottom::Dirichlet, Top::Dirichlet),
                WeightVariant::Generalized,
            ),
        };
        let weight = (name != Regularity).then(|| WeightSpec {
            variant: weight,
            a,
            b: domain.is_bounded().then_some(s.height),
            beta: bc.robin_beta(),
        });
        Ok(Self { name, model: ModelSpec { variant, grid, psi_bc: bc }, weight, settings: s })
    }

    pub fn grid(&self) -> &Grid {
        &self.model.grid
    }

    /// Initial state. The viscous preset carries `omega0 = -Delta_h psi0`
    /// computed with the same discrete operator the solver inverts.
    pub fn initial_state(&self, psi_solver: &PoissonSolver) -> Result<SimState> {
        let g = *self.grid();
        let a = g.domain.a;
        let phi1 = move |x1: f64, x2: f64| (PI * x1 / a).sin() * (PI * x2 / a).sin();
        let amp = self.settings.u_amplitude;
        let b = g.domain.z_length();
        use ScenarioName::*;

        if self.name == Regularity {
            let d = self.settings.delta;
            let mut u = g.from_fn(|x1, x2, z| amp * (PI * x1 / d).sin() * (PI * x2 / d).sin() * (PI * z / d).sin());
            clean_walls(&mut u, true);
            let v = g.constant(REGULARITY_WALL_VALUE);
            return Ok(SimState::new(u, v));
        }

        let profile: Box<dyn Fn(f64) -> f64> = match self.name {
            // the periodic weight is symmetric about b/2, so u0 is too
            Flipped | ConservedPeriodic => Box::new(move |z: f64| (PI * z / b).sin()),
            _ if self.name.is_semi_infinite() => Box::new(|z: f64| z * (-z).exp()),
            _ => Box::new(move |z: f64| z * (1.0 - z / b) * (-z).exp()),
        };
        let mut u = g.from_fn(|x1, x2, z| amp * phi1(x1, x2) * profile(z));
        clean_walls(&mut u, true);

        let stream = self.stream_profile(b)?;
        let mut psi = g.from_fn(|x1, x2, z| phi1(x1, x2) * stream(z));
        clean_walls(&mut psi, false);
        if self.name.is_semi_infinite() {
            // homogeneous data at the truncation
            for i1 in 0..g.nxp() {
                for i2 in 0..g.nxp() {
                    psi.set(i1, i2, g.nz, 0.0);
                }
            }
        }
        if self.name == ConservedPeriodic {
            for i1 in 0..g.nxp() {
                for i2 in 0..g.nxp() {
                    let v = psi.get(i1, i2, 0);
                    psi.set(i1, i2, g.nz, v);
                }
            }
        }
        if matches!(self.model.variant, Variant::Viscous { .. }) {
            let omega = psi_solver.apply(&psi);
            return Ok(SimState::with_omega(u, psi, omega));
        }
        Ok(SimState::new(u, psi))
    }

    /// z-profile of `psi0`, built to satisfy the z-face conditions exactly.
    fn stream_profile(&self, b: f64) -> Result<Box<dyn Fn(f64) -> f64>> {
        let beta = self.settings.beta;
        use ScenarioName::*;
        Ok(match self.name {
            MixedHalfLine => {
                // c1 (beta - 1) + c2 (beta - 2) = 0 with c1 = -1
                let c2 = (beta - 1.0) / (beta - 2.0);
                Box::new(move |z: f64| -(-z).exp() + c2 * (-2.0 * z).exp())
            }
            MixedBox | MixedBoxNeumannTop => {
                let sign = if self.name == MixedBox { -1.0 } else { 1.0 };
                // mirrored exponentials meeting the top condition exactly
                let s = move |m: f64, z: f64| (-m * z).exp() + sign * (-m * (2.0 * b - z)).exp();
                let ds = move |m: f64, z: f64| -m * (-m * z).exp() + sign * m * (-m * (2.0 * b - z)).exp();
                let c2 = (ds(1.0, 0.0) + beta * s(1.0, 0.0)) / (ds(2.0, 0.0) + beta * s(2.0, 0.0));
                Box::new(move |z: f64| -s(1.0, z) + c2 * s(2.0, z))
            }
            Flipped => Box::new(move |z: f64| -(PI * z / b).cos()),
            Viscous => {
                let (c2, c3) = viscous_coefficients(beta, self.gamma());
                Box::new(move |z: f64| -(-z).exp() + c2 * (-2.0 * z).exp() + c3 * (-3.0 * z).exp())
            }
            ConservedHalfLine => Box::new(|z: f64| -(2.0 * (-z).exp() - (-2.0 * z).exp())),
            ConservedBox => Box::new(move |z: f64| -(PI * z / b).cos()),
            ConservedPeriodic => Box::new(move |z: f64| b / (2.0 * PI) * (2.0 * PI * z / b).sin()),
            ConservedDirichlet => Box::new(move |z: f64| (PI * z / b).sin()),
            Regularity => unreachable!("regularity data is built separately"),
        })
    }

    fn gamma(&self) -> f64 {
        match self.model.variant {
            Variant::Viscous { gamma, .. } => gamma,
            _ => f64::NAN,
        }
    }

    /// Robin coefficient of the energy boundary term.
    pub fn energy_beta(&self) -> f64 {
        self.model.psi_bc.boundary_beta()
    }
}

/// `(c2, c3)` in `g = -e^{-z} + c2 e^{-2z} + c3 e^{-3z}` so that `g` meets
/// Robin(`beta`) and `2 g - g''` meets Robin(`gamma`) at `z = 0`.
pub fn viscous_coefficients(beta: f64, gamma: f64) -> (f64, f64) {
    let (m11, m12, r1) = (beta - 2.0, beta - 3.0, beta - 1.0);
    let (m21, m22, r2) = (4.0 - 2.0 * gamma, 21.0 - 7.0 * gamma, gamma - 1.0);
    let det = m11 * m22 - m12 * m21;
    ((r1 * m22 - m12 * r2) / det, (m11 * r2 - r1 * m21) / det)
}

/// Zeroes side walls, and with `all_faces` the z-faces too. The last node of
/// a truncated half-line counts as a face.
fn clean_walls(f: &mut ScalarField, all_faces: bool) {
    let g = *f.grid();
    for i1 in 0..g.nxp() {
        for i2 in 0..g.nxp() {
            let wall = i1 == 0 || i2 == 0 || i1 == g.nx || i2 == g.nx;
            for j in 0..g.nzp() {
                if wall || (all_faces && (j == 0 || j == g.nz)) {
                    f.set(i1, i2, j, 0.0);
                }
            }
        }
    }
}
