//! Python bindings: models, chain states, the integrator, measure statistics,
//! number theory, bounds and the experiment harness.
//!
//! Mean spacings are passed as strings (`"8/13"`, `"golden"`, `"sqrt2"`) or
//! floats. Reports come back as plain dicts and lists.

use std::path::PathBuf;

use fk_ratchet::bounds::{self, BoundInputs};
use fk_ratchet::dynamics::{self, DynamicsMode, IntegratorConfig};
use fk_ratchet::harness::{self, config::default_integrator, SpeedSettings, SweepOptions, VerifySettings};
use fk_ratchet::measure::{self, CircleMeasure, EmpiricalMeasure};
use fk_ratchet::numtheory::{self, GammaParams, Rational, RhoInput};
use fk_ratchet::potentials::{
    extract_asymmetry, AsymmetryObjective, InteractionPotential, ModelSpec, PulseSpec, SitePotential,
};
use fk_ratchet::Error;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;

fn err(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json_to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_bound_py_any(py)?,
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_bound_py_any(py)?,
            None => n.as_f64().unwrap_or(f64::NAN).into_bound_py_any(py)?,
        },
        Value::String(s) => s.into_bound_py_any(py)?,
        Value::Array(a) => {
            let items = a.iter().map(|x| json_to_py(py, x)).collect::<PyResult<Vec<_>>>()?;
            PyList::new(py, items)?.into_any()
        }
        Value::Object(m) => {
            let d = PyDict::new(py);
            for (k, x) in m {
                d.set_item(k, json_to_py(py, x)?)?;
            }
            d.into_any()
        }
    })
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &v)
}

fn parse_rho(obj: &Bound<'_, PyAny>) -> PyResult<RhoInput> {
    if let Ok(s) = obj.extract::<String>() {
        return s.parse().map_err(err);
    }
    if let Ok(i) = obj.extract::<i64>() {
        return Ok(RhoInput::Exact(Rational::integer(i)));
    }
    let x: f64 = obj.extract()?;
    Ok(RhoInput::Float(x))
}

fn parse_exact(obj: &Bound<'_, PyAny>, q_max: i64) -> PyResult<Rational> {
    harness::resolve_rho(&parse_rho(obj)?, q_max).map_err(err)
}

fn parse_mode(mode: &str) -> PyResult<DynamicsMode> {
    mode.parse().map_err(err)
}

fn integrator(dt_max: Option<f64>, settle_tol: Option<f64>) -> PyResult<IntegratorConfig> {
    let mut cfg = default_integrator();
    if let Some(dt) = dt_max {
        cfg.dt_max = dt;
    }
    if let Some(s) = settle_tol {
        cfg.settle_tol = s;
    }
    cfg.validate().map_err(err)?;
    Ok(cfg)
}

/// Interaction `W`, site potential `V` and pulse `(τ, κ)`.
#[pyclass(name = "Model", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyModel {
    inner: ModelSpec,
}

#[pymethods]
impl PyModel {
    /// `fourier` lists `(a_m, φ_m)` for `V(x) = Σ a_m sin(2π m x + φ_m)`;
    /// omitted, the built-in ratchet shape is used.
    #[new]
    #[pyo3(signature = (tau=100.0, kappa=3.0, w_c2=1.0, w_c4=0.0, fourier=None))]
    fn new(tau: f64, kappa: f64, w_c2: f64, w_c4: f64, fourier: Option<Vec<(f64, f64)>>) -> PyResult<Self> {
        let w = if w_c4 == 0.0 {
            InteractionPotential::quadratic(w_c2)
        } else {
            InteractionPotential::quadratic_quartic(w_c2, w_c4)
        }
        .map_err(err)?;
        let v = match fourier {
            Some(pairs) => SitePotential::from_pairs(&pairs).map_err(err)?,
            None => SitePotential::default_ratchet(),
        };
        let pulse = PulseSpec::new(tau, kappa).map_err(err)?;
        Ok(PyModel {
            inner: ModelSpec::new(w, v, pulse).map_err(err)?,
        })
    }

    /// Reads a model file (`[model]` and `[pulse]` sections).
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(PyModel {
            inner: harness::load_model(&path).map_err(err)?,
        })
    }

    fn with_tau(&self, tau: f64) -> PyResult<Self> {
        PulseSpec::new(tau, self.inner.pulse.kappa).map_err(err)?;
        Ok(PyModel {
            inner: self.inner.with_tau(tau),
        })
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.pulse.tau
    }

    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.pulse.kappa
    }

    fn hash(&self) -> String {
        self.inner.hash_hex()
    }

    fn w(&self, x: f64) -> f64 {
        self.inner.interaction.value(x)
    }

    fn v(&self, x: f64) -> f64 {
        self.inner.site.value(x)
    }

    fn dv(&self, x: f64) -> f64 {
        self.inner.site.d1(x)
    }

    fn pulse(&self, t: f64) -> f64 {
        self.inner.pulse.value(t)
    }

    /// `(δ⁻, δ⁺)` around the mean spacing `rho`.
    fn delta_bounds(&self, rho: f64) -> (f64, f64) {
        let d = self.inner.delta_bounds(rho);
        (d.minus, d.plus)
    }

    /// Asymmetry constants, or `None` if the site potential has none.
    #[pyo3(signature = (rho=0.5, grid_n=4096))]
    fn asymmetry<'py>(&self, py: Python<'py>, rho: f64, grid_n: usize) -> PyResult<Bound<'py, PyAny>> {
        let m = &self.inner;
        let a = extract_asymmetry(
            &m.site,
            m.pulse.kappa,
            m.delta_bounds(rho),
            grid_n,
            AsymmetryObjective::LongestInterval,
        )
        .map_err(err)?;
        to_py(py, &a)
    }

    fn __repr__(&self) -> String {
        format!("Model({})", self.inner.canonical_string().replace('\n', "; "))
    }
}

/// One period cell of a `(p, q)` configuration.
#[pyclass(name = "ChainState", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyChainState {
    inner: dynamics::ChainState,
}

#[pymethods]
impl PyChainState {
    #[new]
    #[pyo3(signature = (positions, p, q, time=0.0))]
    fn new(positions: Vec<f64>, p: i64, q: i64, time: f64) -> PyResult<Self> {
        let w = Rational::new(p, q).map_err(err)?;
        Ok(PyChainState {
            inner: dynamics::ChainState::new(positions, w, time).map_err(err)?,
        })
    }

    /// `u_k = ρ k + phase`, with irrational targets replaced by a convergent.
    #[staticmethod]
    #[pyo3(signature = (rho, phase=0.0, q_max=233))]
    fn straight_line(rho: &Bound<'_, PyAny>, phase: f64, q_max: i64) -> PyResult<Self> {
        Ok(PyChainState {
            inner: dynamics::ChainState::straight_line(parse_exact(rho, q_max)?, phase),
        })
    }

    #[getter]
    fn positions(&self) -> Vec<f64> {
        self.inner.positions().to_vec()
    }

    #[getter]
    fn p(&self) -> i64 {
        self.inner.winding().p
    }

    #[getter]
    fn q(&self) -> i64 {
        self.inner.winding().q
    }

    #[getter]
    fn time(&self) -> f64 {
        self.inner.time()
    }

    /// `u(k)` for any integer site index.
    fn u(&self, k: i64) -> f64 {
        self.inner.u(k)
    }

    fn width(&self) -> Vec<f64> {
        dynamics::width_function(&self.inner)
    }

    fn rotationally_ordered(&self) -> bool {
        dynamics::check_rotational_order(&self.inner)
    }

    fn avg_width(&self) -> f64 {
        measure::avg_width(&EmpiricalMeasure::new(self.inner.clone()))
    }

    fn energy(&self, model: &PyModel) -> f64 {
        measure::energy(&EmpiricalMeasure::new(self.inner.clone()), &model.inner.interaction)
    }

    /// Distance of the projected configuration to Lebesgue measure on the circle.
    fn w1_to_lebesgue(&self) -> PyResult<f64> {
        let mu = measure::project_circle(&EmpiricalMeasure::new(self.inner.clone()));
        measure::w1_to_lebesgue(&mu).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "ChainState(p={}, q={}, time={})",
            self.inner.winding().p,
            self.inner.winding().q,
            self.inner.time()
        )
    }
}

#[pyfunction]
#[pyo3(signature = (state, t, model, mode="pulsating_potential"))]
fn rhs(state: &PyChainState, t: f64, model: &PyModel, mode: &str) -> PyResult<Vec<f64>> {
    Ok(dynamics::rhs(&state.inner, t, &model.inner, parse_mode(mode)?))
}

#[pyfunction]
#[pyo3(signature = (state, t_end, model, mode="pulsating_potential", dt_max=None, settle_tol=None))]
fn evolve(
    py: Python<'_>,
    state: &PyChainState,
    t_end: f64,
    model: &PyModel,
    mode: &str,
    dt_max: Option<f64>,
    settle_tol: Option<f64>,
) -> PyResult<PyChainState> {
    let mode = parse_mode(mode)?;
    let cfg = integrator(dt_max, settle_tol)?;
    let out = py
        .detach(|| dynamics::evolve(&state.inner, t_end, &model.inner, mode, &cfg))
        .map_err(err)?;
    Ok(PyChainState { inner: out })
}

/// One full pulse cycle; the state time must be a multiple of `2τ`.
#[pyfunction]
#[pyo3(signature = (state, model, mode="pulsating_potential", dt_max=None, settle_tol=None))]
fn poincare(
    py: Python<'_>,
    state: &PyChainState,
    model: &PyModel,
    mode: &str,
    dt_max: Option<f64>,
    settle_tol: Option<f64>,
) -> PyResult<PyChainState> {
    let mode = parse_mode(mode)?;
    let cfg = integrator(dt_max, settle_tol)?;
    let out = py
        .detach(|| dynamics::poincare(&state.inner, &model.inner, mode, &cfg))
        .map_err(err)?;
    Ok(PyChainState { inner: out })
}

#[pyfunction]
#[pyo3(signature = (rho, model, mode="pulsating_potential", transient=50, max_periods=2048, q_max=233))]
fn measure_speed<'py>(
    py: Python<'py>,
    rho: &Bound<'py, PyAny>,
    model: &PyModel,
    mode: &str,
    transient: u64,
    max_periods: u64,
    q_max: i64,
) -> PyResult<Bound<'py, PyAny>> {
    let rho = parse_exact(rho, q_max)?;
    let mode = parse_mode(mode)?;
    let settings = SpeedSettings {
        transient_periods: transient,
        max_periods,
        ..SpeedSettings::default()
    };
    let cfg = default_integrator();
    let est = py
        .detach(|| harness::measure_speed_with(rho, &model.inner, mode, &cfg, &settings))
        .map_err(err)?;
    to_py(py, &est)
}

#[pyfunction]
#[pyo3(signature = (rho, model, mode="pulsating_potential", transient=50, q_max=233))]
fn verify_lemmas<'py>(
    py: Python<'py>,
    rho: &Bound<'py, PyAny>,
    model: &PyModel,
    mode: &str,
    transient: u64,
    q_max: i64,
) -> PyResult<Bound<'py, PyAny>> {
    let rho = parse_exact(rho, q_max)?;
    let mode = parse_mode(mode)?;
    let settings = VerifySettings {
        transient_periods: transient,
        q_max,
        ..VerifySettings::default()
    };
    let cfg = default_integrator();
    let report = py
        .detach(|| harness::verify_lemmas(rho, &model.inner, mode, &cfg, &settings))
        .map_err(err)?;
    to_py(py, &report)
}

/// Speed and bound on every `(rho, tau)`; returns the CSV text.
#[pyfunction]
#[pyo3(signature = (rho_list, tau_list, model, mode="pulsating_potential", workers=0, q_max=233))]
fn sweep(
    py: Python<'_>,
    rho_list: Vec<Bound<'_, PyAny>>,
    tau_list: Vec<f64>,
    model: &PyModel,
    mode: &str,
    workers: usize,
    q_max: i64,
) -> PyResult<String> {
    let rhos = rho_list
        .iter()
        .map(|r| parse_exact(r, q_max))
        .collect::<PyResult<Vec<_>>>()?;
    let mode = parse_mode(mode)?;
    let cfg = default_integrator();
    let opts = SweepOptions {
        workers,
        ..SweepOptions::default()
    };
    let result = py
        .detach(|| harness::sweep(&rhos, &tau_list, &model.inner, mode, &cfg, &SpeedSettings::default(), &opts))
        .map_err(err)?;
    Ok(result.to_csv())
}

/// `C_ρ`, `γ_{ρ,τ}`, the asymmetry constants and the main bound.
#[pyfunction]
#[pyo3(signature = (rho, tau, model, grid_n=4096))]
fn bound_report<'py>(
    py: Python<'py>,
    rho: &Bound<'py, PyAny>,
    tau: f64,
    model: &PyModel,
    grid_n: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let rho = parse_rho(rho)?;
    let rep = harness::bound_report(&rho, tau, &model.inner.with_tau(tau), grid_n, i128::MAX).map_err(err)?;
    to_py(py, &rep)
}

#[pyfunction]
fn theorem1_bound(alpha: f64, beta: f64, tau: f64, gamma: f64) -> f64 {
    bounds::theorem1_bound(&BoundInputs {
        alpha,
        beta,
        tau,
        gamma,
    })
}

#[pyfunction]
fn golden_mean_bound(c_rho: f64, alpha: f64, beta: f64, tau: f64) -> PyResult<f64> {
    bounds::golden_mean_bound(c_rho, alpha, beta, tau).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (rho, max_terms=40, q_cap=None))]
fn continued_fraction<'py>(
    py: Python<'py>,
    rho: &Bound<'py, PyAny>,
    max_terms: usize,
    q_cap: Option<i64>,
) -> PyResult<Bound<'py, PyAny>> {
    let cap = q_cap.map_or(i128::MAX, |q| q as i128);
    let seq = numtheory::continued_fraction(&parse_rho(rho)?, max_terms, cap).map_err(err)?;
    // i128 does not round-trip through JSON, so build the dict by hand
    let d = PyDict::new(py);
    d.set_item("rho", seq.rho)?;
    d.set_item("terms", seq.terms.iter().map(|&t| t as i64).collect::<Vec<_>>())?;
    d.set_item(
        "convergents",
        seq.convergents
            .iter()
            .map(|&(p, q)| (p as i64, q as i64))
            .collect::<Vec<_>>(),
    )?;
    d.set_item("terminated", seq.terminated)?;
    Ok(d.into_any())
}

#[pyfunction]
fn c_rho(delta_minus: f64, delta_plus: f64) -> PyResult<f64> {
    numtheory::c_rho(delta_minus, delta_plus).map_err(err)
}

#[pyfunction]
fn gamma_rho_tau(rho: &Bound<'_, PyAny>, tau: f64, c_rho: f64) -> PyResult<f64> {
    let seq = numtheory::continued_fraction(&parse_rho(rho)?, 80, i128::MAX).map_err(err)?;
    Ok(numtheory::gamma_rho_tau(&seq, &GammaParams { c_rho, tau }))
}

#[pyfunction]
fn levy_constant() -> f64 {
    numtheory::levy_constant()
}

/// Circular transport distance between two lists of `(position, weight)`.
#[pyfunction]
fn w1_circle(mu: Vec<(f64, f64)>, nu: Vec<(f64, f64)>) -> PyResult<f64> {
    let a = CircleMeasure::new(mu).map_err(err)?;
    let b = CircleMeasure::new(nu).map_err(err)?;
    measure::w1_circle(&a, &b).map_err(err)
}

#[pyfunction]
fn w1_to_lebesgue(mu: Vec<(f64, f64)>) -> PyResult<f64> {
    measure::w1_to_lebesgue(&CircleMeasure::new(mu).map_err(err)?).map_err(err)
}

#[pymodule]
fn fkratchet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyChainState>()?;
    m.add_function(wrap_pyfunction!(rhs, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(poincare, m)?)?;
    m.add_function(wrap_pyfunction!(measure_speed, m)?)?;
    m.add_function(wrap_pyfunction!(verify_lemmas, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(bound_report, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_bound, m)?)?;
    m.add_function(wrap_pyfunction!(golden_mean_bound, m)?)?;
    m.add_function(wrap_pyfunction!(continued_fraction, m)?)?;
    m.add_function(wrap_pyfunction!(c_rho, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_rho_tau, m)?)?;
    m.add_function(wrap_pyfunction!(levy_constant, m)?)?;
    m.add_function(wrap_pyfunction!(w1_circle, m)?)?;
    m.add_function(wrap_pyfunction!(w1_to_lebesgue, m)?)?;
    Ok(())
}
