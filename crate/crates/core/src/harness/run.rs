//! Executes a [`RunSpec`]: the shared back end of the CLI subcommands and of
//! config-file runs.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::json;

use crate::bounds::{
    corollary_generic_bound, golden_mean_bound, golden_mean_validity_threshold, optimal_tau,
};
use crate::dynamics::{cycle_start_index, ChainState};
use crate::error::{Error, Result};
use crate::numtheory::{continued_fraction, Rational, RhoInput};

use super::config::{load_config, Command, RunSpec};
use super::io::{read_checkpoint, stats_csv, write_atomic, write_checkpoint};
use super::speed::measure_speed_with;
use super::sweep::{bound_report, sweep, SweepOptions};
use super::verify::{sample_phase, verify_lemmas, Phase, VerifySettings};

/// Process exit status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    InvariantViolation = 1,
    ConfigError = 2,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

/// Maps a library error to the exit status the CLI reports.
pub fn error_status(_e: &Error) -> ExitStatus {
    ExitStatus::ConfigError
}

/// A simulation cell: irrational or large-denominator targets are replaced
/// by their last convergent with `q ≤ q_max`.
pub fn resolve_rho(rho: &RhoInput, q_max: i64) -> Result<Rational> {
    if let RhoInput::Exact(r) = rho {
        return Ok(*r);
    }
    continued_fraction(rho, 64, q_max as i128)?
        .best_with_denominator(q_max as i128)
        .ok_or_else(|| Error::arg(format!("no convergent with q <= {q_max}")))
}

fn require_rho(spec: &RunSpec) -> Result<&[RhoInput]> {
    if spec.rho_list.is_empty() {
        return Err(Error::Config("this command needs `rho` or `rho_list`".into()));
    }
    Ok(&spec.rho_list)
}

fn emit(path: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_json(path: Option<&Path>, value: &impl Serialize) -> Result<()> {
    if let Some(p) = path {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Config(format!("cannot serialize summary: {e}")))?;
        write_atomic(p, format!("{text}\n").as_bytes())?;
    }
    Ok(())
}

/// Runs the command in `spec`, writing human-readable output to `out`.
pub fn execute(spec: &RunSpec, out: &mut dyn Write) -> Result<ExitStatus> {
    match spec.command {
        Command::Simulate => simulate(spec, out),
        Command::Speed => speed(spec, out),
        Command::Sweep => run_sweep(spec, out),
        Command::Bound => bound(spec, out),
        Command::Cfrac => cfrac(spec, out),
        Command::Verify => verify(spec, out),
    }
}

/// Loads and runs a config file; every failure becomes an exit status.
pub fn run_config(path: &Path) -> ExitStatus {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match load_config(path).and_then(|spec| execute(&spec, &mut out)) {
        Ok(status) => status,
        Err(e) => {
            eprintln!("error: {e}");
            error_status(&e)
        }
    }
}

fn simulate(spec: &RunSpec, out: &mut dyn Write) -> Result<ExitStatus> {
    let model = &spec.model;
    let hash = model.hash_hex();
    let initial = match &spec.resume {
        Some(path) => {
            let ck = read_checkpoint(path)?;
            if ck.model_hash != hash {
                return Err(Error::Config(format!(
                    "checkpoint {} was written for model {}, not {hash}",
                    path.display(),
                    ck.model_hash
                )));
            }
            cycle_start_index(ck.state.time(), model.pulse.tau)?;
            ck.state
        }
        None => {
            let rho = resolve_rho(&require_rho(spec)?[0], spec.q_max)?;
            ChainState::straight_line(rho, 0.0)
        }
    };
    let mut samples = Vec::new();
    let mut s = initial.clone();
    for _ in 0..spec.periods {
        let (off, mid) = sample_phase(
            &s,
            &initial,
            Phase::Off,
            model,
            spec.mode,
            &spec.integrator,
            spec.samples_per_phase,
        )?;
        let (on, end) = sample_phase(
            &mid,
            &initial,
            Phase::On,
            model,
            spec.mode,
            &spec.integrator,
            spec.samples_per_phase,
        )?;
        samples.extend(off);
        samples.extend(on);
        s = end;
    }
    emit(spec.output.as_deref(), &stats_csv(&samples), out)?;
    if let Some(path) = &spec.checkpoint {
        write_checkpoint(path, &s, &hash)?;
    }
    let elapsed = s.time() - initial.time();
    let disp = samples.last().map_or(0.0, |x| x.mean_disp);
    let mean_speed = if elapsed > 0.0 { disp / elapsed } else { 0.0 };
    emit_json(
        spec.summary.as_deref(),
        &json!({
            "command": "simulate",
            "rho": s.winding(),
            "tau": model.pulse.tau,
            "periods": spec.periods,
            "start_time": initial.time(),
            "final_time": s.time(),
            "mean_displacement": disp,
            "mean_speed": mean_speed,
            "model_hash": hash,
        }),
    )?;
    if spec.output.is_some() {
        writeln!(
            out,
            "simulated rho = {} for {} periods: mean speed {mean_speed:.6e}",
            s.winding(),
            spec.periods
        )?;
    }
    Ok(ExitStatus::Success)
}

fn speed(spec: &RunSpec, out: &mut dyn Write) -> Result<ExitStatus> {
    let mut estimates = Vec::new();
    for r in require_rho(spec)? {
        let rho = resolve_rho(r, spec.q_max)?;
        for tau in spec.taus() {
            let m = spec.model.with_tau(tau);
            let est = measure_speed_with(rho, &m, spec.mode, &spec.integrator, &spec.speed)?;
            writeln!(
                out,
                "rho = {} tau = {tau:e}: v = {:.10e} (v*tau = {:.6}), periods = {}, converged = {}, residual = {:.3e}",
                est.rho,
                est.v,
                est.v * tau,
                est.n_periods,
                est.converged,
                est.residual
            )?;
            estimates.push(est);
        }
    }
    emit_json(
        spec.summary.as_deref(),
        &json!({ "command": "speed", "estimates": estimates }),
    )?;
    Ok(ExitStatus::Success)
}

fn run_sweep(spec: &RunSpec, out: &mut dyn Write) -> Result<ExitStatus> {
    let rhos = require_rho(spec)?
        .iter()
        .map(|r| resolve_rho(r, spec.q_max))
        .collect::<Result<Vec<_>>>()?;
    let result = sweep(
        &rhos,
        &spec.taus(),
        &spec.model,
        spec.mode,
        &spec.integrator,
        &spec.speed,
        &SweepOptions {
            grid_n: spec.grid_n,
            workers: spec.workers,
        },
    )?;
    emit(spec.output.as_deref(), &result.to_csv(), out)?;
    let tol = spec.speed.speed_tol;
    let violations = result.violations(tol);
    let unconverged = result.rows.iter().filter(|r| !r.converged).count();
    emit_json(
        spec.summary.as_deref(),
        &json!({
            "command": "sweep",
            "cells": result.rows.len(),
            "invariants": {
                "speed_above_bound": {
                    "passed": violations.is_empty(),
                    "violations": violations,
                },
                "all_cells_converged": {
                    "passed": unconverged == 0,
                    "unconverged": unconverged,
                },
            },
        }),
    )?;
    if spec.output.is_some() {
        writeln!(
            out,
            "{} cells, {} unconverged, {} bound violations",
            result.rows.len(),
            unconverged,
            violations.len()
        )?;
    }
    Ok(if violations.is_empty() {
        ExitStatus::Success
    } else {
        ExitStatus::InvariantViolation
    })
}

fn bound(spec: &RunSpec, out: &mut dyn Write) -> Result<ExitStatus> {
    let mut reports = Vec::new();
    for r in require_rho(spec)? {
        for tau in spec.taus() {
            let m = spec.model.with_tau(tau);
            let b = bound_report(r, tau, &m, spec.grid_n, i128::MAX)?;
            writeln!(out, "rho = {} ({:.15}), tau = {tau:e}", describe_rho(r), r.value())?;
            writeln!(out, "  C_rho = {:.12}, gamma = {:.12}", b.c_rho, b.gamma)?;
            let Some(a) = b.asymmetry else {
                writeln!(
                    out,
                    "  site potential fails the asymmetry condition at kappa = {}; no bound",
                    m.pulse.kappa
                )?;
                reports.push(json!({ "rho": describe_rho(r), "tau": tau, "c_rho": b.c_rho, "gamma": b.gamma, "asymmetry": null }));
                continue;
            };
            writeln!(
                out,
                "  alpha = {:.6}, beta = {:.6} on [{:.6}, {:.6}]",
                a.alpha, a.beta, a.a, a.b
            )?;
            writeln!(
                out,
                "  theorem1_bound = {:.12e} [{}]",
                b.value,
                status_label(b.status)
            )?;
            let g = corollary_generic_bound(a.alpha, b.c_rho, tau, 0.0)?;
            writeln!(
                out,
                "  corollary_generic_bound = {:.12e} + o(tau^-1/8)/tau [explicit terms only; remainder unknown; coefficient {:.12}]",
                g.explicit, g.coefficient
            )?;
            let t_opt = optimal_tau(b.c_rho, a.alpha)?;
            writeln!(out, "  optimal_tau = {t_opt:.6e} [heuristic order of magnitude]")?;
            let threshold = golden_mean_validity_threshold(b.c_rho, a.alpha, a.beta);
            let golden = golden_mean_bound(b.c_rho, a.alpha, a.beta, tau).ok();
            match golden {
                Some(v) => writeln!(
                    out,
                    "  golden_mean_bound = {v:.12e} [golden-mean specialisation; valid for tau > {threshold:.6e}]"
                )?,
                None => writeln!(
                    out,
                    "  golden_mean_bound = n/a [needs tau > {threshold:.6e}]"
                )?,
            }
            reports.push(json!({
                "rho": describe_rho(r),
                "tau": tau,
                "c_rho": b.c_rho,
                "gamma": b.gamma,
                "alpha": a.alpha,
                "beta": a.beta,
                "theorem1_bound": b.value,
                "theorem1_status": b.status,
                "corollary_generic_bound": g,
                "optimal_tau": t_opt,
                "golden_mean_bound": golden,
                "golden_mean_threshold": threshold,
            }));
        }
    }
    emit_json(
        spec.summary.as_deref(),
        &json!({ "command": "bound", "bounds": reports }),
    )?;
    Ok(ExitStatus::Success)
}

fn status_label(s: crate::bounds::BoundStatus) -> &'static str {
    match s {
        crate::bounds::BoundStatus::Informative => "informative",
        crate::bounds::BoundStatus::Vacuous => "vacuous: nonpositive",
        crate::bounds::BoundStatus::OutOfDomain => "vacuous: gamma > 1",
    }
}

fn describe_rho(r: &RhoInput) -> String {
    match r {
        RhoInput::Exact(x) => x.to_string(),
        RhoInput::GoldenMean => "golden".into(),
        RhoInput::Sqrt2 => "sqrt2".into(),
        RhoInput::Float(x) => format!("{x}"),
    }
}

fn cfrac(spec: &RunSpec, out: &mut dyn Write) -> Result<ExitStatus> {
    let mut seqs = Vec::new();
    for r in require_rho(spec)? {
        let seq = continued_fraction(r, spec.max_terms, i128::MAX)?;
        let terms: Vec<String> = seq.terms.iter().map(|t| t.to_string()).collect();
        let head = terms.first().cloned().unwrap_or_default();
        let tail = terms.get(1..).unwrap_or(&[]).join(", ");
        writeln!(
            out,
            "{} = [{head}; {tail}]{}",
            describe_rho(r),
            if seq.terminated { "" } else { " ..." }
        )?;
        let conv: Vec<String> = seq
            .convergents
            .iter()
            .map(|(p, q)| format!("{p}/{q}"))
            .collect();
        writeln!(out, "convergents: {}", conv.join(" "))?;
        seqs.push(seq);
    }
    emit_json(
        spec.summary.as_deref(),
        &json!({ "command": "cfrac", "expansions": seqs }),
    )?;
    Ok(ExitStatus::Success)
}

fn verify(spec: &RunSpec, out: &mut dyn Write) -> Result<ExitStatus> {
    let settings = VerifySettings {
        transient_periods: spec.speed.transient_periods,
        interior_samples: spec.samples_per_phase,
        q_max: spec.q_max,
    };
    let mut reports = Vec::new();
    let mut all_passed = true;
    for r in require_rho(spec)? {
        let rho = resolve_rho(r, spec.q_max)?;
        for tau in spec.taus() {
            let m = spec.model.with_tau(tau);
            let report = verify_lemmas(rho, &m, spec.mode, &spec.integrator, &settings)?;
            writeln!(out, "rho = {rho} tau = {tau:e}")?;
            for c in &report.checks {
                writeln!(
                    out,
                    "  {} {:<28} margin {:+.3e}  ({})",
                    match (c.passed, c.advisory) {
                        (true, _) => "PASS",
                        (false, false) => "FAIL",
                        (false, true) => "NOTE",
                    },
                    c.name,
                    c.worst_margin,
                    c.statement
                )?;
            }
            all_passed &= report.passed;
            reports.push(report);
        }
    }
    if let (Some(path), Some(last)) = (spec.output.as_deref(), reports.last()) {
        write_atomic(path, stats_csv(&last.samples).as_bytes())?;
    }
    let summary: Vec<_> = reports
        .iter()
        .map(|r| {
            json!({
                "rho": r.rho,
                "tau": r.tau,
                "passed": r.passed,
                "invariants": r.checks,
            })
        })
        .collect();
    emit_json(
        spec.summary.as_deref(),
        &json!({ "command": "verify", "passed": all_passed, "runs": summary }),
    )?;
    Ok(if all_passed {
        ExitStatus::Success
    } else {
        ExitStatus::InvariantViolation
    })
}
