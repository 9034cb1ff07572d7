//! Closed-form lower bounds on the transport speed.
//!
//! All functions return the bare formula value. A value `≤ 0` carries no
//! information; see [`BoundStatus`] for how the harness labels them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numtheory::levy_constant;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundInputs {
    pub alpha: f64,
    pub beta: f64,
    pub tau: f64,
    pub gamma: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 0.5) {
            return Err(Error::arg(format!("alpha must lie in (0, 1/2), got {}", self.alpha)));
        }
        if !(self.beta >= 0.0 && self.tau >= 0.0 && self.gamma >= 0.0) {
            return Err(Error::arg("beta, tau and gamma must be nonnegative"));
        }
        Ok(())
    }
}

#[inline]
fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// `(1/τ)(α − γ + γ²/2 − ½[(½ − βτ − α − γ) ∨ 0]²)`
pub fn theorem1_bound(b: &BoundInputs) -> f64 {
    let BoundInputs {
        alpha,
        beta,
        tau,
        gamma,
    } = *b;
    let clamp = pos(0.5 - beta * tau - alpha - gamma);
    (alpha - gamma + 0.5 * gamma * gamma - 0.5 * clamp * clamp) / tau
}

/// On-phase displacement floor given `ε ≥ d₁(μ*, λ)`, with the transported
/// mass `ε*` replaced by its bound `2√ε`:
/// `α − 2√ε + 2ε − ½[(½ + α − βτ − 2√ε) ∨ 0]²`.
pub fn on_phase_floor(alpha: f64, beta: f64, tau: f64, epsilon: f64) -> f64 {
    let s = 2.0 * epsilon.sqrt();
    let clamp = pos(0.5 + alpha - beta * tau - s);
    alpha - s + 2.0 * epsilon - 0.5 * clamp * clamp
}

/// Generic-ρ bound: only the explicit terms are known.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GenericBound {
    /// `(1/τ)[α − (3 C_ρ (γ_L + ε + 1))^{1/2} τ^{−1/8}]`
    pub explicit: f64,
    /// `(3 C_ρ (γ_L + ε + 1))^{1/2}`
    pub coefficient: f64,
    /// The `o(τ^{−1/8})` remainder is not computable; always `None`.
    pub remainder: Option<f64>,
}

pub fn corollary_generic_bound(alpha: f64, c_rho: f64, tau: f64, eps_margin: f64) -> Result<GenericBound> {
    if !(tau > 0.0) {
        return Err(Error::arg("tau must be positive"));
    }
    let coefficient = (3.0 * c_rho * (levy_constant() + eps_margin + 1.0)).sqrt();
    Ok(GenericBound {
        explicit: (alpha - coefficient * tau.powf(-0.125)) / tau,
        coefficient,
        remainder: None,
    })
}

/// Heuristic work-maximising half period `C_ρ⁴ α⁻⁸` (order of magnitude only).
pub fn optimal_tau(c_rho: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::arg("alpha must be positive"));
    }
    Ok(c_rho.powi(4) / alpha.powi(8))
}

/// Golden-mean specialisation `(1/τ)(α − 3 C_ρ^{1/2} τ^{−1/8})`, valid for
/// `τ > (½ − α)/β ∨ C_ρ²`.
pub fn golden_mean_bound(c_rho: f64, alpha: f64, beta: f64, tau: f64) -> Result<f64> {
    let threshold = golden_mean_validity_threshold(c_rho, alpha, beta);
    if !(tau > threshold) {
        return Err(Error::arg(format!(
            "golden-mean bound needs tau > {threshold}, got {tau}"
        )));
    }
    Ok((alpha - 3.0 * c_rho.sqrt() * tau.powf(-0.125)) / tau)
}

pub fn golden_mean_validity_threshold(c_rho: f64, alpha: f64, beta: f64) -> f64 {
    let pulse = if beta > 0.0 {
        (0.5 - alpha) / beta
    } else {
        f64::INFINITY
    };
    pulse.max(c_rho * c_rho)
}

/// How a computed bound should be read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundStatus {
    /// Positive and inside the regime the derivation covers.
    Informative,
    /// Nonpositive.
    Vacuous,
    /// Positive formula value but `γ > 1`: the on-phase estimate behind the
    /// bound needs a transported mass `≤ 1`, which `γ > 1` does not provide.
    OutOfDomain,
}

impl BoundStatus {
    pub fn classify(value: f64, gamma: f64) -> Self {
        if !(value > 0.0) {
            BoundStatus::Vacuous
        } else if gamma > 1.0 {
            BoundStatus::OutOfDomain
        } else {
            BoundStatus::Informative
        }
    }

    pub fn is_vacuous(self) -> bool {
        self != BoundStatus::Informative
    }
}
