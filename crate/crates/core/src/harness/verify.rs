//! Checks every measure-level inequality along one pulse cycle.

use serde::Serialize;

use crate::dynamics::{
    check_rotational_order, cycle_start_index, evolve, poincare, width_function, ChainState, DynamicsMode,
    IntegratorConfig,
};
use crate::error::Result;
use crate::measure::{
    avg_width, energy, interaction_force_sq, mean_displacement, project_circle,
    second_difference_sq, w1_to_lebesgue, EmpiricalMeasure,
};
use crate::numtheory::{continued_fraction, RhoInput, Rational};
use crate::potentials::ModelSpec;

/// Numerical slack allowed on every inequality.
pub const SLACK: f64 = 1e-9;
/// Bound on the cell-mean drift over an off-phase.
pub const DRIFT_TOL: f64 = 1e-8;
/// Allowance on the unit width bound.
pub const WIDTH_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Off,
    On,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Off => "off",
            Phase::On => "on",
        }
    }
}

/// Statistics of one sampled state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub phase: Phase,
    pub avg_width: f64,
    pub energy: f64,
    pub w1_leb: f64,
    /// Cell-mean displacement since the start of the cycle.
    pub mean_disp: f64,
    pub second_diff_sq: f64,
    pub force_sq: f64,
    pub max_width: f64,
    pub rotationally_ordered: bool,
}

/// Outcome of one inequality over all samples.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    /// Human-readable form of the inequality `lhs ≤ rhs`.
    pub statement: &'static str,
    pub passed: bool,
    /// `min(rhs − lhs)` over the evaluations; negative means violated.
    pub worst_margin: f64,
    pub evaluations: usize,
    /// Reported but not part of the overall verdict.
    pub advisory: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub rho: Rational,
    pub tau: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub samples: Vec<Sample>,
}

impl LemmaReport {
    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed && !c.advisory)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VerifySettings {
    pub transient_periods: u64,
    /// Interior sample times per half period.
    pub interior_samples: usize,
    /// Convergent denominators up to this enter the circle-distance check.
    pub q_max: i64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings {
            transient_periods: 50,
            interior_samples: 16,
            q_max: 233,
        }
    }
}

fn sample(state: &ChainState, start: &ChainState, phase: Phase, model: &ModelSpec) -> Result<Sample> {
    let mu = EmpiricalMeasure::new(state.clone());
    Ok(Sample {
        t: state.time(),
        phase,
        avg_width: avg_width(&mu),
        energy: energy(&mu, &model.interaction),
        w1_leb: w1_to_lebesgue(&project_circle(&mu))?,
        mean_disp: mean_displacement(&EmpiricalMeasure::new(start.clone()), &mu)?,
        second_diff_sq: second_difference_sq(&mu),
        force_sq: interaction_force_sq(&mu, &model.interaction),
        max_width: width_function(state).into_iter().fold(0.0, f64::max),
        rotationally_ordered: check_rotational_order(state),
    })
}

/// Samples a half period at its two ends and `interior` equally spaced times.
/// `mean_disp` is measured from `reference`.
pub(crate) fn sample_phase(
    start: &ChainState,
    reference: &ChainState,
    phase: Phase,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
    interior: usize,
) -> Result<(Vec<Sample>, ChainState)> {
    let tau = model.pulse.tau;
    let t0 = start.time();
    let mut out = vec![sample(start, reference, phase, model)?];
    let mut s = start.clone();
    let pieces = interior + 1;
    for j in 1..=pieces {
        let t = if j == pieces {
            t0 + tau
        } else {
            t0 + tau * j as f64 / pieces as f64
        };
        s = evolve(&s, t, model, mode, cfg)?;
        out.push(sample(&s, reference, phase, model)?);
    }
    Ok((out, s))
}

struct CheckBuilder {
    name: &'static str,
    statement: &'static str,
    worst: f64,
    n: usize,
    advisory: bool,
}

impl CheckBuilder {
    fn new(name: &'static str, statement: &'static str) -> Self {
        CheckBuilder {
            name,
            statement,
            worst: f64::INFINITY,
            n: 0,
            advisory: false,
        }
    }

    fn advisory(mut self) -> Self {
        self.advisory = true;
        self
    }

    /// Records `lhs ≤ rhs`.
    fn le(&mut self, lhs: f64, rhs: f64) {
        let m = rhs - lhs;
        self.worst = if m.is_nan() { f64::NEG_INFINITY } else { self.worst.min(m) };
        self.n += 1;
    }

    fn finish(self, slack: f64) -> Check {
        Check {
            name: self.name,
            statement: self.statement,
            passed: self.worst >= -slack,
            worst_margin: self.worst,
            evaluations: self.n,
            advisory: self.advisory,
        }
    }
}

/// Relaxes from the straight line for the transient, then checks one cycle.
pub fn verify_lemmas(
    rho: Rational,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
    settings: &VerifySettings,
) -> Result<LemmaReport> {
    let mut s = ChainState::straight_line(rho, 0.0);
    for _ in 0..settings.transient_periods {
        s = poincare(&s, model, mode, cfg)?;
    }
    verify_lemmas_from(&s, model, mode, cfg, settings)
}

/// Checks one cycle starting at `state`, whose time must be a multiple of `2τ`.
pub fn verify_lemmas_from(
    state: &ChainState,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
    settings: &VerifySettings,
) -> Result<LemmaReport> {
    let tau = model.pulse.tau;
    cycle_start_index(state.time(), tau)?;
    let rho = state.winding();
    let deltas = model.delta_bounds(rho.to_f64());
    let (dm, dp) = (deltas.minus, deltas.plus);
    let w_rho = model.interaction.value(rho.to_f64());

    let (off, mid) = sample_phase(
        state,
        state,
        Phase::Off,
        model,
        mode,
        cfg,
        settings.interior_samples,
    )?;
    let (on, _) = sample_phase(&mid, state, Phase::On, model, mode, cfg, settings.interior_samples)?;
    let all: Vec<&Sample> = off.iter().chain(on.iter()).collect();

    let mut drift = CheckBuilder::new(
        "zero_off_phase_drift",
        "|mean displacement over the off-phase| <= 1e-8",
    );
    let end_off = off.last().expect("nonempty");
    drift.le(end_off.mean_disp.abs(), DRIFT_TOL);

    let mut poincare_ineq = CheckBuilder::new(
        "poincare_inequality",
        "avg_width <= sqrt(mean (second difference)^2)",
    );
    let mut curvature = CheckBuilder::new(
        "curvature_force",
        "delta_minus^2 * mean (second difference)^2 <= mean (W' difference)^2",
    );
    let mut upper = CheckBuilder::new(
        "energy_upper",
        "energy - W(rho) <= delta_plus * avg_width",
    );
    let mut lower = CheckBuilder::new(
        "energy_lower",
        "(delta_minus / 2) * avg_width <= energy - W(rho)",
    );
    let mut lower_full = CheckBuilder::new(
        "energy_lower_full_constant",
        "delta_minus * avg_width <= energy - W(rho)",
    )
    .advisory();
    let mut jensen = CheckBuilder::new("energy_floor", "W(rho) <= energy");
    let mut order = CheckBuilder::new(
        "rotational_order",
        "every sampled state is rotationally ordered (1 if ordered, else 0) >= 1",
    );
    let mut width = CheckBuilder::new("unit_width", "max_j w_j <= 1 + 1e-6");
    for s in &all {
        poincare_ineq.le(s.avg_width, s.second_diff_sq.sqrt());
        curvature.le(dm * dm * s.second_diff_sq, s.force_sq);
        let excess = s.energy - w_rho;
        upper.le(excess, dp * s.avg_width);
        lower.le(0.5 * dm * s.avg_width, excess);
        lower_full.le(dm * s.avg_width, excess);
        jensen.le(w_rho, s.energy);
        order.le(1.0, if s.rotationally_ordered { 1.0 } else { 0.0 });
        width.le(s.max_width, 1.0 + WIDTH_TOL);
    }

    let mut lyapunov = CheckBuilder::new(
        "off_phase_lyapunov",
        "energy(t_next) <= energy(t) along the off-phase",
    );
    for pair in off.windows(2) {
        lyapunov.le(pair[1].energy, pair[0].energy);
    }

    let mut decay = CheckBuilder::new(
        "width_decay",
        "avg_width at the end of the off-phase <= dp^2 / (2 dm^3 tau + dp dm)",
    );
    decay.le(end_off.avg_width, width_decay_bound(dm, dp, tau));

    let mut circle = CheckBuilder::new(
        "circle_distance",
        "d1(projection, Lebesgue) <= (q/sqrt 3) sqrt(avg_width) + 3/(4q) for each convergent q <= q_max",
    );
    let seq = continued_fraction(&RhoInput::Exact(rho), 64, settings.q_max as i128)?;
    for s in &all {
        for q in seq.denominators().filter(|&q| q <= settings.q_max as i128) {
            let q = q as f64;
            circle.le(s.w1_leb, q / 3f64.sqrt() * s.avg_width.sqrt() + 0.75 / q);
        }
    }

    let checks = vec![
        drift.finish(0.0),
        poincare_ineq.finish(SLACK),
        curvature.finish(SLACK),
        upper.finish(SLACK),
        lower.finish(SLACK),
        lower_full.finish(SLACK),
        jensen.finish(SLACK),
        lyapunov.finish(SLACK),
        decay.finish(SLACK),
        circle.finish(SLACK),
        order.finish(0.0),
        width.finish(0.0),
    ];
    let passed = checks.iter().all(|c| c.passed || c.advisory);
    let mut samples: Vec<Sample> = off;
    samples.extend(on);
    Ok(LemmaReport {
        rho,
        tau,
        delta_minus: dm,
        delta_plus: dp,
        passed,
        checks,
        samples,
    })
}

/// `(δ⁺)² / (2 (δ⁻)³ τ + δ⁺ δ⁻)`
pub fn width_decay_bound(delta_minus: f64, delta_plus: f64, tau: f64) -> f64 {
    delta_plus * delta_plus / (2.0 * delta_minus.powi(3) * tau + delta_plus * delta_minus)
}
