//! Runs a scenario and assembles its diagnostics.

use serde::Serialize;

use crate::diagnostics::{
    compute_constants, decay_check, energy, identity_check_psi, log_bound_margin, make_weight, r_monitor,
    regularity_smallness, track_f, viscous_kernel_check, BlowupConstants, DecayStatus, IdentitySample, BlowupKind,
    Weight,
};
use crate::dynamics::{dz, run, Blowup, Controls, Model, Sample, SimState, Variant};
use crate::grid::{interior_weighted_integral, sobolev_norm, sup_norm, weighted_integral};
use crate::harness::report::{self, flags, DiagnosticsRecord};
use crate::harness::scenario::{Scenario, ScenarioName};
use crate::{Error, Result};

/// Extra per-record quantities that are not part of the emitted columns.
#[derive(Clone, Debug, Serialize)]
pub struct TraceSample {
    pub t: f64,
    pub identity: Option<IdentitySample>,
    /// `int omega phi_z` (viscous model).
    pub omega_phi_z: Option<f64>,
    /// `d/dt int u^2 phi`.
    pub dg: f64,
    pub log_margin: f64,
    pub decay: Option<DecayStatus>,
}

/// Run-level verdicts, also written to the summary file.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Checks {
    pub hypotheses_ok: bool,
    pub hypothesis_message: Option<String>,
    /// Regularity small-data quantity; below one when the hypothesis holds.
    pub smallness: Option<f64>,
    pub t_blow: Option<f64>,
    pub blowup_within_t_star: Option<bool>,
    /// Largest identity residual over `t <= t_blow / 2` (or the whole run).
    pub identity_residual: Option<f64>,
    /// Largest `|E - E0| / |E0|` over `t <= 0.9 t_blow` (or the whole run).
    pub energy_drift: Option<f64>,
    pub min_f_margin: Option<f64>,
    pub min_log_margin: Option<f64>,
    /// First time with `r > B/2`.
    pub r_exceeds_half_b_at: Option<f64>,
    /// Smallest F margin over records before `r` first exceeds `B/2`.
    pub min_f_margin_while_r_small: Option<f64>,
    pub kernel_residual: Option<f64>,
    pub decay_ok: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub scenario: Scenario,
    pub constants: Option<BlowupConstants>,
    pub records: Vec<DiagnosticsRecord>,
    pub trace: Vec<TraceSample>,
    pub steps: usize,
    pub blowup: Option<Blowup>,
    pub checks: Checks,
}

#[derive(Serialize)]
struct Summary<'a> {
    scenario: &'a str,
    build: &'a str,
    settings: &'a crate::harness::config::Settings,
    nx: usize,
    nz: usize,
    constants: &'a Option<BlowupConstants>,
    steps: usize,
    blowup: &'a Option<Blowup>,
    records: usize,
    checks: &'a Checks,
}

impl RunReport {
    pub fn write(&self, out: &std::path::Path) -> Result<()> {
        report::emit(&self.records, out, self.scenario.settings.format)?;
        let g = self.scenario.grid();
        let summary = Summary {
            scenario: self.scenario.name.as_str(),
            build: report::build_tag(),
            settings: &self.scenario.settings,
            nx: g.nx,
            nz: g.nz,
            constants: &self.constants,
            steps: self.steps,
            blowup: &self.blowup,
            records: self.records.len(),
            checks: &self.checks,
        };
        report::write_summary(&summary, &report::summary_path(out))
    }
}

/// Configures the global thread pool from `BLOWUPLAB_THREADS`, once.
pub fn init_threads() {
    if let Some(n) = std::env::var("BLOWUPLAB_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        // a second call finds the pool already built; that is fine
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Everything a run needs before stepping.
pub struct Prepared {
    pub model: Model,
    pub initial: SimState,
    pub weight: Option<Weight>,
    pub constants: Option<BlowupConstants>,
    pub checks: Checks,
}

/// Builds the model, initial data, weight and constants, and verifies the
/// scenario's hypotheses.
pub fn prepare(scenario: &Scenario) -> Result<Prepared> {
    let model = Model::new(scenario.model.clone())?;
    let initial = scenario.initial_state(model.psi_solver())?;
    let mut checks = Checks::default();
    let (weight, constants) = match scenario.weight {
        Some(spec) => {
            let w = make_weight(spec, scenario.grid())?;
            let nu = match scenario.model.variant {
                Variant::Viscous { nu, .. } => nu,
                _ => 0.0,
            };
            let kind = BlowupKind::for_weight(spec.variant, nu);
            let c = compute_constants(&initial.u, &initial.psi, initial.omega.as_ref(), &w, kind)?;
            (Some(w), Some(c))
        }
        None => (None, None),
    };
    let verdict = match (&constants, scenario.name) {
        (Some(c), _) => c.verify_hypotheses(),
        (None, ScenarioName::Regularity) => {
            let s = regularity_smallness(scenario.settings.delta, scenario.settings.cs, &initial.u, &initial.psi)?;
            checks.smallness = Some(s);
            if s < 1.0 {
                Ok(())
            } else {
                Err(Error::Hypothesis(format!("smallness quantity {s} is not below 1")))
            }
        }
        (None, _) => Ok(()),
    };
    checks.hypotheses_ok = verdict.is_ok();
    checks.hypothesis_message = verdict.err().map(|e| match e {
        Error::Hypothesis(m) => m,
        other => other.to_string(),
    });
    Ok(Prepared { model, initial, weight, constants, checks })
}

/// Result of the static checks on `t = 0` data.
#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub constants: Option<BlowupConstants>,
    pub checks: Checks,
    pub identity: Option<IdentitySample>,
}

/// Static checks only: hypotheses, constants and the weighted identity at
/// `t = 0`, without stepping.
pub fn verify_scenario(scenario: &Scenario) -> Result<Verification> {
    let p = prepare(scenario)?;
    if let Some(msg) = &p.checks.hypothesis_message {
        return Err(Error::Hypothesis(msg.clone()));
    }
    let identity = match (&p.weight, scenario.model.variant) {
        (Some(w), Variant::Inviscid | Variant::Generalized) if !w.spec.variant.is_conserved() => {
            let rates = p.model.rhs(&p.initial)?;
            Some(identity_check_psi(&p.initial.u, &rates.second, w)?)
        }
        _ => None,
    };
    Ok(Verification { constants: p.constants, checks: p.checks, identity })
}

pub fn controls_for(scenario: &Scenario) -> Controls {
    let s = &scenario.settings;
    Controls { t_end: s.t_end, dt_max: s.dt, cfl: s.cfl, cadence: s.cadence, ..Controls::default() }
}

/// Runs `scenario` to completion or blowup. Fails with
/// [`Error::Hypothesis`] before stepping when the preset's own hypotheses
/// do not hold.
pub fn run_scenario(scenario: &Scenario) -> Result<RunReport> {
    run_with_controls(scenario, &controls_for(scenario))
}

pub fn run_with_controls(scenario: &Scenario, controls: &Controls) -> Result<RunReport> {
    let Prepared { model, initial, weight, constants, mut checks } = prepare(scenario)?;
    if let Some(msg) = &checks.hypothesis_message {
        return Err(Error::Hypothesis(msg.clone()));
    }
    let periodic = model.periodic_z();
    let psi0 = initial.psi.clone();
    let u0_sup = sup_norm(&initial.u);
    let energy_beta = scenario.energy_beta();
    let variant = scenario.model.variant;
    let has_energy = variant == Variant::Inviscid;
    let regular = scenario.name == ScenarioName::Regularity;

    let mut records = Vec::new();
    let mut trace = Vec::new();
    let observer = |s: &Sample| -> Result<()> {
        let st = s.state;
        let u = &st.u;
        let mut rec = DiagnosticsRecord {
            t: st.t,
            dt: s.dt,
            e: f64::NAN,
            r: f64::NAN,
            f: f64::NAN,
            df: f64::NAN,
            ddf: f64::NAN,
            int_u2_phi: f64::NAN,
            int_psiz_phi: f64::NAN,
            int_logu_phi: f64::NAN,
            h2_u: sobolev_norm(u, 2)?,
            min_u: u.min(),
            max_u: u.max(),
            flags: if s.clipped { flags::CLIPPED } else { 0 },
        };
        let mut extra =
            TraceSample { t: st.t, identity: None, omega_phi_z: None, dg: f64::NAN, log_margin: f64::NAN, decay: None };
        if let Some(w) = &weight {
            let phi = w.field();
            rec.int_u2_phi = weighted_integral(&u.map(|x| x * x), phi)?;
            rec.int_psiz_phi = weighted_integral(&dz(&st.psi, periodic), phi)?;
            rec.int_logu_phi = interior_weighted_integral(u, phi, f64::ln)?;
            rec.r = r_monitor(&st.psi, &psi0, w)?.unwrap_or(f64::NAN);
            extra.dg = 2.0 * weighted_integral(&u.zip_map(&s.rates.u, |a, b| a * b)?, phi)?;
            extra.log_margin = log_bound_margin(u, w)?;
            match variant {
                Variant::Viscous { .. } => {
                    let om = st.omega.as_ref().ok_or_else(|| Error::Solver("viscous state without omega".into()))?;
                    extra.omega_phi_z = Some(weighted_integral(om, w.dz_field())?);
                }
                // conserved weights carry an extra boundary term, see r(t)
                _ if !w.spec.variant.is_conserved() => {
                    extra.identity = Some(identity_check_psi(u, &s.rates.second, w)?)
                }
                _ => {}
            }
        }
        if has_energy {
            rec.e = energy(u, &st.psi, energy_beta)?;
        }
        if regular {
            extra.decay = Some(decay_check(st.t, u, u0_sup, &st.psi));
        }
        records.push(rec);
        trace.push(extra);
        Ok(())
    };
    let outcome = run(&model, initial, controls, observer)?;

    finish_records(&mut records, &trace, constants.as_ref(), outcome.blowup.is_some());
    evaluate(&mut checks, &records, &trace, constants.as_ref(), outcome.blowup.as_ref());
    Ok(RunReport {
        scenario: scenario.clone(),
        constants,
        records,
        trace,
        steps: outcome.steps,
        blowup: outcome.blowup,
        checks,
    })
}

/// Fills `F`, `F'`, `F''` and the flag bits.
fn finish_records(records: &mut [DiagnosticsRecord], trace: &[TraceSample], c: Option<&BlowupConstants>, blew_up: bool) {
    if let Some(c) = c {
        let times: Vec<f64> = records.iter().map(|r| r.t).collect();
        let g: Vec<f64> = records.iter().map(|r| r.int_u2_phi).collect();
        let half_b = 0.5 * c.b;
        for (rec, fs) in records.iter_mut().zip(track_f(&times, &g, c.d_f, c.df0)) {
            rec.f = fs.f;
            rec.df = fs.df;
            rec.ddf = fs.ddf;
            if fs.margin < 0.0 {
                rec.flags |= flags::F_INEQ;
            }
            if rec.r > half_b {
                rec.flags |= flags::R_ABOVE_HALF_B;
            }
        }
    }
    for (rec, x) in records.iter_mut().zip(trace) {
        if x.log_margin < -1e-8 {
            rec.flags |= flags::LOG_BOUND;
        }
        if let Some(d) = x.decay {
            if !d.u_bound {
                rec.flags |= flags::DECAY;
            }
            if !d.v_bound {
                rec.flags |= flags::V_BOUND;
            }
        }
    }
    if blew_up {
        if let Some(last) = records.last_mut() {
            last.flags |= flags::BLOWUP;
        }
    }
}

fn max_of(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.max(v))))
}

fn min_of(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.fold(None, |m: Option<f64>, v| Some(m.map_or(v, |m| m.min(v))))
}

fn evaluate(
    checks: &mut Checks,
    records: &[DiagnosticsRecord],
    trace: &[TraceSample],
    c: Option<&BlowupConstants>,
    blowup: Option<&Blowup>,
) {
    let t_blow = blowup.map(|b| b.t_last);
    let t_last = records.last().map_or(0.0, |r| r.t);
    let horizon = t_blow.unwrap_or(t_last);
    checks.t_blow = t_blow;
    checks.blowup_within_t_star = match (t_blow, c.and_then(|c| c.t_star)) {
        (Some(tb), Some(ts)) => Some(tb <= ts),
        (None, Some(_)) => Some(false),
        _ => None,
    };

    checks.identity_residual = max_of(
        trace
            .iter()
            .filter(|x| x.t <= 0.5 * horizon)
            .filter_map(|x| x.identity.map(|i| i.relative_residual())),
    );

    if let Some(e0) = records.first().map(|r| r.e).filter(|e| e.is_finite()) {
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        checks.energy_drift =
            max_of(records.iter().filter(|r| r.t <= 0.9 * horizon).map(|r| (r.e - e0).abs() / scale));
    }

    if let Some(c) = c {
        let margins: Vec<f64> = {
            let times: Vec<f64> = records.iter().map(|r| r.t).collect();
            let g: Vec<f64> = records.iter().map(|r| r.int_u2_phi).collect();
            track_f(&times, &g, c.d_f, c.df0).iter().map(|s| s.margin).collect()
        };
        checks.min_f_margin = min_of(margins.iter().copied());
        checks.min_log_margin = min_of(trace.iter().map(|x| x.log_margin));
        if c.weight.is_conserved() {
            let half_b = 0.5 * c.b;
            let first = records.iter().position(|r| r.r > half_b);
            checks.r_exceeds_half_b_at = first.map(|i| records[i].t);
            let upto = first.unwrap_or(records.len());
            checks.min_f_margin_while_r_small = min_of(margins[..upto].iter().copied());
            if first.is_some() {
                // the bound is only claimed while r stays small
                checks.blowup_within_t_star = None;
            }
        }
        if let Some(lambda) = c.lambda {
            let measured: Vec<f64> = trace.iter().filter_map(|x| x.omega_phi_z).collect();
            if measured.len() == records.len() {
                let times: Vec<f64> = records.iter().map(|r| r.t).collect();
                let g: Vec<f64> = records.iter().map(|r| r.int_u2_phi).collect();
                let dg: Vec<f64> = trace.iter().map(|x| x.dg).collect();
                checks.kernel_residual = Some(viscous_kernel_check(&times, &measured, &g, &dg, lambda, c.alpha));
            }
        }
    }
    let decay: Vec<DecayStatus> = trace.iter().filter_map(|x| x.decay).collect();
    if !decay.is_empty() {
        checks.decay_ok = Some(decay.iter().all(|d| d.u_bound && d.v_bound));
    }
}
