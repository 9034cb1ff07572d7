//! Interaction potential `W`, periodic site potential `V`, the step pulse `K`,
//! and the constants the transport bounds are built from.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const TWO_PI: f64 = 2.0 * PI;

/// Strictly convex nearest-neighbour coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InteractionPotential {
    /// `W(x) = c x²`
    Quadratic { c: f64 },
    /// `W(x) = c2 x² + c4 x⁴`
    QuadraticQuartic { c2: f64, c4: f64 },
}

impl InteractionPotential {
    pub fn quadratic(c: f64) -> Result<Self> {
        let w = InteractionPotential::Quadratic { c };
        w.validate()?;
        Ok(w)
    }

    pub fn quadratic_quartic(c2: f64, c4: f64) -> Result<Self> {
        let w = InteractionPotential::QuadraticQuartic { c2, c4 };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InteractionPotential::Quadratic { c } => {
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::Validation(format!("W.c must be positive, got {c}")));
                }
            }
            InteractionPotential::QuadraticQuartic { c2, c4 } => {
                if !(c2.is_finite() && c2 > 0.0) {
                    return Err(Error::Validation(format!("W.c2 must be positive, got {c2}")));
                }
                if !(c4.is_finite() && c4 >= 0.0) {
                    return Err(Error::Validation(format!(
                        "W.c4 must be nonnegative, got {c4}"
                    )));
                }
            }
        }
        Ok(())
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match *self {
            InteractionPotential::Quadratic { c } => c * x * x,
            InteractionPotential::QuadraticQuartic { c2, c4 } => {
                let x2 = x * x;
                c2 * x2 + c4 * x2 * x2
            }
        }
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        match *self {
            InteractionPotential::Quadratic { c } => 2.0 * c * x,
            InteractionPotential::QuadraticQuartic { c2, c4 } => 2.0 * c2 * x + 4.0 * c4 * x * x * x,
        }
    }

    #[inline]
    pub fn d2(&self, x: f64) -> f64 {
        match *self {
            InteractionPotential::Quadratic { c } => 2.0 * c,
            InteractionPotential::QuadraticQuartic { c2, c4 } => 2.0 * c2 + 12.0 * c4 * x * x,
        }
    }

    /// Minimum and maximum of `W''` over `[rho - 1, rho + 1]`, in closed form.
    pub fn delta_bounds(&self, rho: f64) -> DeltaBounds {
        match *self {
            InteractionPotential::Quadratic { c } => DeltaBounds {
                minus: 2.0 * c,
                plus: 2.0 * c,
            },
            InteractionPotential::QuadraticQuartic { .. } => {
                // W'' is even and increasing in |x|.
                let (lo, hi) = (rho - 1.0, rho + 1.0);
                let nearest = if lo <= 0.0 && hi >= 0.0 {
                    0.0
                } else if lo > 0.0 {
                    lo
                } else {
                    hi
                };
                let farthest = lo.abs().max(hi.abs());
                DeltaBounds {
                    minus: self.d2(nearest),
                    plus: self.d2(farthest),
                }
            }
        }
    }
}

/// `(δ⁻, δ⁺)`: extremes of `W''` on `[ρ−1, ρ+1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DeltaBounds {
    pub minus: f64,
    pub plus: f64,
}

/// Free-function form of [`InteractionPotential::delta_bounds`].
pub fn delta_bounds(w: &InteractionPotential, rho: f64) -> DeltaBounds {
    w.delta_bounds(rho)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FourierTerm {
    pub amplitude: f64,
    pub phase: f64,
}

/// `V(x) = Σ_m a_m sin(2π m x + φ_m)`, `m = 1..=M`. One-periodic by construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SitePotential {
    terms: Vec<FourierTerm>,
}

impl SitePotential {
    pub fn new(terms: Vec<FourierTerm>) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if !t.amplitude.is_finite() || !t.phase.is_finite() {
                return Err(Error::Validation(format!(
                    "V.fourier term {} is not finite",
                    i + 1
                )));
            }
        }
        Ok(SitePotential { terms })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(amplitude, phase)| FourierTerm { amplitude, phase })
                .collect(),
        )
    }

    /// A flat potential, `V ≡ 0`.
    pub fn zero() -> Self {
        SitePotential { terms: Vec::new() }
    }

    /// Asymmetric ratchet shape shipped as the default: the rising flank
    /// `V' ≥ 1` covers `[0.24, 1]`, the steep drop the remaining quarter.
    pub fn default_ratchet() -> Self {
        Self::from_pairs(&[
            (0.5189, 2.3878),
            (0.2982, 1.6339),
            (0.1655, 0.8801),
            (0.0650, 0.1263),
        ])
        .expect("finite coefficients")
    }

    pub fn terms(&self) -> &[FourierTerm] {
        &self.terms
    }

    pub fn value(&self, x: f64) -> f64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| t.amplitude * (TWO_PI * (i + 1) as f64 * x + t.phase).sin())
            .sum()
    }

    #[inline]
    pub fn d1(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (i, t) in self.terms.iter().enumerate() {
            let k = TWO_PI * (i + 1) as f64;
            acc += t.amplitude * k * (k * x + t.phase).cos();
        }
        acc
    }

    pub fn d2(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for (i, t) in self.terms.iter().enumerate() {
            let k = TWO_PI * (i + 1) as f64;
            acc -= t.amplitude * k * k * (k * x + t.phase).sin();
        }
        acc
    }

    /// `Σ |a_m| (2πm)²`, an upper bound on `|V''|`.
    pub fn d2_bound(&self) -> f64 {
        self.terms
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let k = TWO_PI * (i + 1) as f64;
                t.amplitude.abs() * k * k
            })
            .sum()
    }
}

/// Step pulse: `K = 0` on `[2nτ, (2n+1)τ)`, `K = κ` on `[(2n+1)τ, (2n+2)τ)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PulseSpec {
    pub tau: f64,
    pub kappa: f64,
}

impl PulseSpec {
    pub fn new(tau: f64, kappa: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::Validation(format!("pulse.tau must be positive, got {tau}")));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::Validation(format!(
                "pulse.kappa must be nonnegative, got {kappa}"
            )));
        }
        Ok(PulseSpec { tau, kappa })
    }

    /// Right-continuous at the switch times.
    pub fn value(&self, t: f64) -> f64 {
        if t.rem_euclid(2.0 * self.tau) < self.tau {
            0.0
        } else {
            self.kappa
        }
    }

    /// Pulse level on the `n`-th half period `[nτ, (n+1)τ)`.
    #[inline]
    pub fn level_on_segment(&self, n: u64) -> f64 {
        if n.is_multiple_of(2) {
            0.0
        } else {
            self.kappa
        }
    }
}

pub fn pulse_value(p: &PulseSpec, t: f64) -> f64 {
    p.value(t)
}

/// Constants certifying the steepness/asymmetry condition `κ V' ≥ δ⁺ + β` on `[a, b]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AsymmetryParams {
    pub alpha: f64,
    pub beta: f64,
    /// Left end of the certified arc; `b` may exceed 1 when the arc wraps.
    pub a: f64,
    pub b: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
}

/// What [`extract_asymmetry`] maximises over the β scan.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AsymmetryObjective {
    /// Longest certified arc; ties broken by larger β.
    LongestInterval,
    /// The main transport lower bound at the caller's half period and γ.
    Theorem1 { tau: f64, gamma: f64 },
}

const BETA_SCAN_POINTS: usize = 64;

/// Scans β over a logarithmic grid and, for each β, finds the longest arc on
/// which `κ V'(x) ≥ δ⁺ + β` holds at every grid point with a margin of
/// `κ · max|V''| · h / 2`, so the inequality is certified between grid points
/// too. Returns `None` when no arc longer than ½ exists for any β > 0.
pub fn extract_asymmetry(
    v: &SitePotential,
    kappa: f64,
    deltas: DeltaBounds,
    grid_n: usize,
    objective: AsymmetryObjective,
) -> Result<Option<AsymmetryParams>> {
    if grid_n < 1000 {
        return Err(Error::arg(format!("grid_n must be at least 1000, got {grid_n}")));
    }
    if !(kappa >= 0.0) {
        return Err(Error::arg("kappa must be nonnegative"));
    }
    let h = 1.0 / grid_n as f64;
    let slack = kappa * v.d2_bound() * h / 2.0;
    let lowered: Vec<f64> = (0..grid_n)
        .map(|i| kappa * v.d1(i as f64 * h) - slack)
        .collect();
    let top = lowered.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let beta_max = top - deltas.plus;
    if !(beta_max > 0.0) {
        return Ok(None);
    }
    let beta_min = beta_max * 1e-6;
    let ratio = (beta_max / beta_min).powf(1.0 / (BETA_SCAN_POINTS - 1) as f64);

    let mut best: Option<(f64, AsymmetryParams)> = None;
    for j in 0..BETA_SCAN_POINTS {
        let beta = beta_min * ratio.powi(j as i32);
        let threshold = deltas.plus + beta;
        let Some((start, count)) = longest_circular_run(&lowered, threshold) else {
            continue;
        };
        if count >= grid_n {
            continue;
        }
        let a = start as f64 * h;
        let len = (count - 1) as f64 * h;
        if !(len > 0.5 && len < 1.0) {
            continue;
        }
        let params = AsymmetryParams {
            alpha: len - 0.5,
            beta,
            a,
            b: a + len,
            delta_minus: deltas.minus,
            delta_plus: deltas.plus,
        };
        let score = match objective {
            AsymmetryObjective::LongestInterval => len,
            AsymmetryObjective::Theorem1 { tau, gamma } => {
                crate::bounds::theorem1_bound(&crate::bounds::BoundInputs {
                    alpha: params.alpha,
                    beta,
                    tau,
                    gamma,
                })
            }
        };
        // `>=` keeps the larger β on ties, since β increases along the scan.
        if best.as_ref().is_none_or(|(s, _)| score >= *s) {
            best = Some((score, params));
        }
    }
    Ok(best.map(|(_, p)| p))
}

/// Longest run of consecutive (cyclic) indices with `values[i] >= threshold`.
fn longest_circular_run(values: &[f64], threshold: f64) -> Option<(usize, usize)> {
    let n = values.len();
    let first_fail = values.iter().position(|&x| x < threshold);
    let Some(first_fail) = first_fail else {
        return Some((0, n));
    };
    // Start scanning just after a failing index so every run is contiguous.
    let mut best: Option<(usize, usize)> = None;
    let mut run_start = 0;
    let mut run_len = 0usize;
    for step in 1..=n {
        let i = (first_fail + step) % n;
        if values[i] >= threshold {
            if run_len == 0 {
                run_start = i;
            }
            run_len += 1;
            if best.is_none_or(|(_, l)| run_len > l) {
                best = Some((run_start, run_len));
            }
        } else {
            run_len = 0;
        }
    }
    best
}

/// Interaction, site potential and pulse: everything the equations of motion need.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelSpec {
    pub interaction: InteractionPotential,
    pub site: SitePotential,
    pub pulse: PulseSpec,
}

impl ModelSpec {
    pub fn new(interaction: InteractionPotential, site: SitePotential, pulse: PulseSpec) -> Result<Self> {
        interaction.validate()?;
        PulseSpec::new(pulse.tau, pulse.kappa)?;
        Ok(ModelSpec {
            interaction,
            site,
            pulse,
        })
    }

    /// `W(x) = x²`, the default ratchet `V`, `κ = 3`.
    pub fn default_ratchet(tau: f64) -> Self {
        ModelSpec {
            interaction: InteractionPotential::Quadratic { c: 1.0 },
            site: SitePotential::default_ratchet(),
            pulse: PulseSpec { tau, kappa: 3.0 },
        }
    }

    pub fn with_tau(&self, tau: f64) -> Self {
        let mut m = self.clone();
        m.pulse.tau = tau;
        m
    }

    pub fn delta_bounds(&self, rho: f64) -> DeltaBounds {
        self.interaction.delta_bounds(rho)
    }

    /// Text form with exact (bit-level) floats; the input to [`ModelSpec::hash_hex`].
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        match self.interaction {
            InteractionPotential::Quadratic { c } => {
                let _ = write!(s, "W=quadratic:{:016x};", c.to_bits());
            }
            InteractionPotential::QuadraticQuartic { c2, c4 } => {
                let _ = write!(
                    s,
                    "W=quadratic_quartic:{:016x}:{:016x};",
                    c2.to_bits(),
                    c4.to_bits()
                );
            }
        }
        s.push_str("V=");
        for t in self.site.terms() {
            let _ = write!(s, "{:016x}:{:016x},", t.amplitude.to_bits(), t.phase.to_bits());
        }
        let _ = write!(
            s,
            ";tau={:016x};kappa={:016x}",
            self.pulse.tau.to_bits(),
            self.pulse.kappa.to_bits()
        );
        s
    }

    /// First 16 hex digits of the SHA-256 of [`ModelSpec::canonical_string`].
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.canonical_string().as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn delta_bounds_examples() {
        let w = InteractionPotential::quadratic(1.0).unwrap();
        assert_eq!(w.delta_bounds(0.37), DeltaBounds { minus: 2.0, plus: 2.0 });
        let w = InteractionPotential::quadratic(0.5).unwrap();
        assert_eq!(w.delta_bounds(5.0), DeltaBounds { minus: 1.0, plus: 1.0 });
        let w = InteractionPotential::quadratic_quartic(0.5, 1.0 / 24.0).unwrap();
        let d = w.delta_bounds(0.0);
        assert!((d.minus - 1.0).abs() < 1e-15);
        assert!((d.plus - 1.5).abs() < 1e-15);
        // interval [1, 3] excludes zero: min at 1, max at 3
        let d = w.delta_bounds(2.0);
        assert!((d.minus - 1.5).abs() < 1e-15);
        assert!((d.plus - 5.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_convex_interaction() {
        assert!(InteractionPotential::quadratic(0.0).is_err());
        assert!(InteractionPotential::quadratic_quartic(1.0, -0.1).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let ws = [
            InteractionPotential::Quadratic { c: 1.3 },
            InteractionPotential::QuadraticQuartic { c2: 0.5, c4: 0.2 },
        ];
        let h = 1e-4;
        for w in ws {
            for &x in &[-1.7, -0.2, 0.0, 0.6, 1.9] {
                let e1 = (central_diff(|y| w.value(y), x, h) - w.d1(x)).abs();
                let e2 = (central_diff(|y| w.d1(y), x, h) - w.d2(x)).abs();
                assert!(e1 < 1e-6 && e2 < 1e-6, "{w:?} at {x}: {e1} {e2}");
            }
        }
        let v = SitePotential::default_ratchet();
        for &x in &[0.0, 0.1, 0.3, 0.77, 0.95] {
            let e1 = (central_diff(|y| v.value(y), x, h) - v.d1(x)).abs();
            let e2 = (central_diff(|y| v.d1(y), x, h) - v.d2(x)).abs();
            assert!(e1 < 1e-5 && e2 < 1e-4, "at {x}: {e1} {e2}");
        }
    }

    #[test]
    fn pulse_examples() {
        let p = PulseSpec::new(1.0, 5.0).unwrap();
        assert_eq!(pulse_value(&p, 0.5), 0.0);
        assert_eq!(pulse_value(&p, 1.0), 5.0);
        assert_eq!(pulse_value(&p, 3.999), 5.0);
        assert_eq!(pulse_value(&p, 4.0), 0.0);
        assert_eq!(p.level_on_segment(0), 0.0);
        assert_eq!(p.level_on_segment(3), 5.0);
    }

    #[test]
    fn flat_potential_has_no_asymmetry() {
        let d = DeltaBounds { minus: 2.0, plus: 2.0 };
        for kappa in [0.0, 1.0, 100.0] {
            let r = extract_asymmetry(&SitePotential::zero(), kappa, d, 2000, AsymmetryObjective::LongestInterval)
                .unwrap();
            assert!(r.is_none());
        }
    }

    #[test]
    fn symmetric_two_harmonic_potential_fails_condition() {
        // V' = sin 2πx (1 + ½ cos 2πx) is positive on exactly half the circle.
        let v = SitePotential::from_pairs(&[
            (1.0 / (2.0 * PI), -PI / 2.0),
            (1.0 / (16.0 * PI), -PI / 2.0),
        ])
        .unwrap();
        assert!((v.d1(0.2) - ((0.4 * PI).sin() + 0.25 * (0.8 * PI).sin())).abs() < 1e-12);
        let d = DeltaBounds { minus: 2.0, plus: 2.0 };
        let r = extract_asymmetry(&v, 30.0, d, 20_000, AsymmetryObjective::LongestInterval).unwrap();
        assert!(r.is_none());
    }

    #[test]
    fn default_potential_passes_condition_at_default_kappa() {
        let m = ModelSpec::default_ratchet(10.0);
        let d = m.delta_bounds(0.6);
        let p = extract_asymmetry(&m.site, m.pulse.kappa, d, 20_000, AsymmetryObjective::LongestInterval)
            .unwrap()
            .expect("default model must satisfy the asymmetry condition");
        assert!((p.alpha - (p.b - p.a - 0.5)).abs() < 1e-12);
        assert!(p.alpha > 0.25 && p.alpha < 0.5, "{p:?}");
        assert!(p.beta > 0.0);
        assert!(p.b - p.a < 1.0);
        let n = 4000;
        for i in 0..=n {
            let x = p.a + (p.b - p.a) * i as f64 / n as f64;
            assert!(m.pulse.kappa * m.site.d1(x) >= d.plus + p.beta);
        }
    }

    #[test]
    fn theorem1_objective_prefers_long_pulse_beta_tradeoff() {
        let m = ModelSpec::default_ratchet(10.0);
        let d = m.delta_bounds(0.6);
        let long = extract_asymmetry(&m.site, 3.0, d, 10_000, AsymmetryObjective::LongestInterval)
            .unwrap()
            .unwrap();
        let short_tau = extract_asymmetry(
            &m.site,
            3.0,
            d,
            10_000,
            AsymmetryObjective::Theorem1 { tau: 0.5, gamma: 0.2 },
        )
        .unwrap()
        .unwrap();
        // at short pulses the βτ clamp dominates and larger β wins
        assert!(short_tau.beta >= long.beta);
    }

    #[test]
    fn model_hash_is_stable_and_sensitive() {
        let a = ModelSpec::default_ratchet(10.0);
        assert_eq!(a.hash_hex(), a.clone().hash_hex());
        assert_eq!(a.hash_hex().len(), 16);
        assert_ne!(a.hash_hex(), a.with_tau(10.5).hash_hex());
    }
}
