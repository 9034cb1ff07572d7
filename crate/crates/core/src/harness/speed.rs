//! Transport speed of synchronized states.

use serde::Serialize;

use crate::dynamics::{poincare, ChainState, DynamicsMode, IntegratorConfig};
use crate::error::{Error, Result};
use crate::measure::{mean_displacement, EmpiricalMeasure};
use crate::numtheory::Rational;
use crate::potentials::ModelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpeedSettings {
    /// Pulse periods discarded before measuring.
    pub transient_periods: u64,
    /// Total periods (transient included) before giving up.
    pub max_periods: u64,
    /// Periods per averaging window.
    pub window: u64,
    /// Convergence threshold on the relative change between consecutive windows.
    pub speed_tol: f64,
}

impl Default for SpeedSettings {
    fn default() -> Self {
        SpeedSettings {
            transient_periods: 50,
            max_periods: 2048,
            window: 32,
            speed_tol: 1e-6,
        }
    }
}

impl SpeedSettings {
    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::Config("window must be at least 1".into()));
        }
        if self.max_periods < self.transient_periods + 2 * self.window {
            return Err(Error::Config(format!(
                "max_periods = {} leaves no room for two windows of {} after {} transient periods",
                self.max_periods, self.window, self.transient_periods
            )));
        }
        if !(self.speed_tol > 0.0) {
            return Err(Error::Config("speed_tol must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedEstimate {
    pub rho: Rational,
    pub tau: f64,
    /// Lattice units per unit time.
    pub v: f64,
    /// Periods simulated, transient included.
    pub n_periods: u64,
    pub converged: bool,
    /// `|m₂ − m₁| / max(|m₂|, 1)` for the last two window means of the
    /// per-period cell-mean displacement.
    pub residual: f64,
    /// State at the end of the run (a multiple of `2τ`).
    #[serde(skip)]
    pub final_state: ChainState,
}

/// Runs the Poincaré map from the straight line `u_k = ρ k`, discards the
/// transient, then averages the cell-mean displacement per period over
/// windows until two consecutive window means agree.
pub fn measure_speed_with(
    rho: Rational,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
    settings: &SpeedSettings,
) -> Result<SpeedEstimate> {
    measure_speed_from(ChainState::straight_line(rho, 0.0), model, mode, cfg, settings)
}

/// As [`measure_speed_with`] from a given initial state (time a multiple of `2τ`).
pub fn measure_speed_from(
    initial: ChainState,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
    settings: &SpeedSettings,
) -> Result<SpeedEstimate> {
    settings.validate()?;
    let mut state = initial;
    for _ in 0..settings.transient_periods {
        state = poincare(&state, model, mode, cfg)?;
    }
    let w = settings.window as usize;
    let mut drifts: Vec<f64> = Vec::new();
    let mut n = settings.transient_periods;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    while n < settings.max_periods {
        let next = poincare(&state, model, mode, cfg)?;
        drifts.push(mean_displacement(
            &EmpiricalMeasure::new(state),
            &EmpiricalMeasure::new(next.clone()),
        )?);
        state = next;
        n += 1;
        if drifts.len() >= 2 * w && drifts.len().is_multiple_of(w) {
            let len = drifts.len();
            let m1 = mean(&drifts[len - 2 * w..len - w]);
            let m2 = mean(&drifts[len - w..]);
            residual = (m2 - m1).abs() / m2.abs().max(1.0);
            if residual < settings.speed_tol {
                converged = true;
                break;
            }
        }
    }
    let tail = &drifts[drifts.len().saturating_sub(2 * w)..];
    let tau = model.pulse.tau;
    Ok(SpeedEstimate {
        rho: state.winding(),
        tau,
        v: mean(tail) / (2.0 * tau),
        n_periods: n,
        converged,
        residual,
        final_state: state,
    })
}

/// Speed with the default window and tolerance.
pub fn measure_speed(
    rho: Rational,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
    transient_periods: u64,
    max_periods: u64,
) -> Result<SpeedEstimate> {
    let settings = SpeedSettings {
        transient_periods,
        max_periods,
        ..SpeedSettings::default()
    };
    measure_speed_with(rho, model, mode, cfg, &settings)
}

fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return f64::NAN;
    }
    x.iter().sum::<f64>() / x.len() as f64
}
