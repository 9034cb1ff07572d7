//! Parallel `(ρ, τ)` grids: measured speed next to the transport lower bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{theorem1_bound, BoundInputs, BoundStatus};
use crate::dynamics::{DynamicsMode, IntegratorConfig};
use crate::error::{Error, Result};
use crate::numtheory::{c_rho, continued_fraction, gamma_rho_tau, GammaParams, Rational, RhoInput};
use crate::potentials::{extract_asymmetry, AsymmetryObjective, AsymmetryParams, ModelSpec};

use super::speed::{measure_speed_with, SpeedEstimate, SpeedSettings};

/// Bound-side quantities for one `(ρ, τ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub c_rho: f64,
    pub gamma: f64,
    /// `None` when the site potential fails the asymmetry condition.
    pub asymmetry: Option<AsymmetryParams>,
    /// NaN without asymmetry constants.
    pub value: f64,
    pub status: BoundStatus,
}

/// Evaluates `γ_{ρ,τ}`, the asymmetry constants and the main bound.
pub fn bound_report(rho: &RhoInput, tau: f64, model: &ModelSpec, grid_n: usize, q_cap: i128) -> Result<BoundReport> {
    let deltas = model.delta_bounds(rho.value());
    let c = c_rho(deltas.minus, deltas.plus)?;
    let seq = continued_fraction(rho, 64, q_cap)?;
    let gamma = gamma_rho_tau(&seq, &GammaParams { c_rho: c, tau });
    let asymmetry = extract_asymmetry(
        &model.site,
        model.pulse.kappa,
        deltas,
        grid_n,
        AsymmetryObjective::Theorem1 { tau, gamma },
    )?;
    let value = asymmetry.map_or(f64::NAN, |a| {
        theorem1_bound(&BoundInputs {
            alpha: a.alpha,
            beta: a.beta,
            tau,
            gamma,
        })
    });
    Ok(BoundReport {
        c_rho: c,
        gamma,
        asymmetry,
        value,
        status: BoundStatus::classify(value, gamma),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub rho: Rational,
    pub tau: f64,
    pub v_measured: f64,
    pub converged: bool,
    pub residual: f64,
    pub n_periods: u64,
    pub bound_value: f64,
    pub bound_vacuous: bool,
    pub bound_status: BoundStatus,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub c_rho: f64,
}

impl SweepRow {
    /// `v_measured ≥ bound − tol`, required only of informative, converged rows.
    pub fn satisfies_bound(&self, tol: f64) -> bool {
        self.bound_vacuous || !self.converged || self.v_measured >= self.bound_value - tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: &str =
    "rho,tau,v_measured,converged,residual,n_periods,bound_value,bound_vacuous,bound_status,gamma,alpha,beta,c_rho";

/// Round-trip-exact decimal (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            let status = match r.bound_status {
                BoundStatus::Informative => "informative",
                BoundStatus::Vacuous => "vacuous",
                BoundStatus::OutOfDomain => "out_of_domain",
            };
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.rho,
                fmt_f64(r.tau),
                fmt_f64(r.v_measured),
                r.converged,
                fmt_f64(r.residual),
                r.n_periods,
                fmt_f64(r.bound_value),
                r.bound_vacuous,
                status,
                fmt_f64(r.gamma),
                fmt_f64(r.alpha),
                fmt_f64(r.beta),
                fmt_f64(r.c_rho),
            ));
        }
        s
    }

    /// Rows that break `v_measured ≥ bound − tol`.
    pub fn violations(&self, tol: f64) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| !r.satisfies_bound(tol)).collect()
    }
}

/// Options for [`sweep`].
#[derive(Clone, Copy, Debug)]
pub struct SweepOptions {
    pub grid_n: usize,
    /// Worker threads; 0 uses the global pool.
    pub workers: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            grid_n: 4096,
            workers: 0,
        }
    }
}

fn run_cell(
    rho: Rational,
    tau: f64,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
    settings: &SpeedSettings,
    opts: &SweepOptions,
) -> Result<SweepRow> {
    let m = model.with_tau(tau);
    let est: SpeedEstimate = measure_speed_with(rho, &m, mode, cfg, settings)?;
    let b = bound_report(&RhoInput::Exact(rho), tau, &m, opts.grid_n, i128::MAX)?;
    Ok(SweepRow {
        rho,
        tau,
        v_measured: est.v,
        converged: est.converged,
        residual: est.residual,
        n_periods: est.n_periods,
        bound_value: b.value,
        bound_vacuous: b.status.is_vacuous(),
        bound_status: b.status,
        gamma: b.gamma,
        alpha: b.asymmetry.map_or(f64::NAN, |a| a.alpha),
        beta: b.asymmetry.map_or(f64::NAN, |a| a.beta),
        c_rho: b.c_rho,
    })
}

/// Measures every `(ρ, τ)` cell in parallel; rows come back sorted by `(ρ, τ)`.
pub fn sweep(
    rho_list: &[Rational],
    tau_list: &[f64],
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
    settings: &SpeedSettings,
    opts: &SweepOptions,
) -> Result<SweepResult> {
    if rho_list.is_empty() || tau_list.is_empty() {
        return Err(Error::arg("sweep needs at least one rho and one tau"));
    }
    let cells: Vec<(Rational, f64)> = rho_list
        .iter()
        .flat_map(|&r| tau_list.iter().map(move |&t| (r, t)))
        .collect();
    let work = || -> Result<Vec<SweepRow>> {
        cells
            .par_iter()
            .map(|&(r, t)| run_cell(r, t, model, mode, cfg, settings, opts))
            .collect()
    };
    let mut rows = if opts.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(work)?
    } else {
        work()?
    };
    rows.sort_by(|a, b| a.rho.cmp(&b.rho).then(a.tau.total_cmp(&b.tau)));
    Ok(SweepResult { rows })
}
