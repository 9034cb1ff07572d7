//! Continued fractions, convergents, `C_ρ`, `γ_{ρ,τ}` and Lévy's constant.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

/// Exact rational `p/q` in lowest terms with `q ≥ 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rational {
    pub p: i64,
    pub q: i64,
}

pub fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

impl Rational {
    pub fn new(p: i64, q: i64) -> Result<Self> {
        if q == 0 {
            return Err(Error::arg("zero denominator"));
        }
        let g = gcd(p as i128, q as i128) as i64;
        let sign = if q < 0 { -1 } else { 1 };
        Ok(Rational {
            p: sign * p / g,
            q: sign * q / g,
        })
    }

    pub fn integer(n: i64) -> Self {
        Rational { p: n, q: 1 }
    }

    pub fn to_f64(self) -> f64 {
        self.p as f64 / self.q as f64
    }
}

/// Serialized as the string `p/q`.
impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Numeric order.
impl Ord for Rational {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.p as i128 * other.q as i128).cmp(&(other.p as i128 * self.q as i128))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s, "1"),
        };
        let p: i64 = p
            .parse()
            .map_err(|_| Error::arg(format!("not a rational: `{s}`")))?;
        let q: i64 = q
            .parse()
            .map_err(|_| Error::arg(format!("not a rational: `{s}`")))?;
        Rational::new(p, q)
    }
}

/// A mean spacing as the continued-fraction machinery sees it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RhoInput {
    Exact(Rational),
    /// `(1 + √5)/2 = [1; 1, 1, …]`
    GoldenMean,
    /// `√2 = [1; 2, 2, …]`
    Sqrt2,
    /// Generic floating input; expanded with an error guard.
    Float(f64),
}

impl RhoInput {
    pub fn value(&self) -> f64 {
        match *self {
            RhoInput::Exact(r) => r.to_f64(),
            RhoInput::GoldenMean => (1.0 + 5f64.sqrt()) / 2.0,
            RhoInput::Sqrt2 => 2f64.sqrt(),
            RhoInput::Float(x) => x,
        }
    }
}

impl FromStr for RhoInput {
    type Err = Error;

    /// Accepts `p/q`, an integer, `golden`/`phi`, `sqrt2`, or a decimal.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "golden" | "phi" | "golden_mean" => return Ok(RhoInput::GoldenMean),
            "sqrt2" => return Ok(RhoInput::Sqrt2),
            _ => {}
        }
        if t.contains('/') || t.parse::<i64>().is_ok() {
            return t.parse().map(RhoInput::Exact);
        }
        let x: f64 = t
            .parse()
            .map_err(|_| Error::arg(format!("cannot parse mean spacing `{t}`")))?;
        if !x.is_finite() {
            return Err(Error::arg("mean spacing must be finite"));
        }
        Ok(RhoInput::Float(x))
    }
}

/// Partial quotients and convergents of ρ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergentSeq {
    pub rho: f64,
    pub terms: Vec<i128>,
    pub convergents: Vec<(i128, i128)>,
    /// True when the expansion ended because ρ is rational (last convergent equals ρ).
    pub terminated: bool,
}

impl ConvergentSeq {
    pub fn denominators(&self) -> impl Iterator<Item = i128> + '_ {
        self.convergents.iter().map(|&(_, q)| q)
    }

    pub fn last(&self) -> (i128, i128) {
        *self.convergents.last().expect("nonempty by construction")
    }

    /// Last convergent with denominator `≤ q_max`, as a reduced rational.
    pub fn best_with_denominator(&self, q_max: i128) -> Option<Rational> {
        self.convergents
            .iter()
            .rev()
            .find(|&&(_, q)| q <= q_max)
            .and_then(|&(p, q)| Rational::new(p.try_into().ok()?, q.try_into().ok()?).ok())
    }
}

fn build(rho: f64, terms: Vec<i128>, terminated: bool, q_cap: i128) -> ConvergentSeq {
    let (mut p2, mut q2) = (0i128, 1i128);
    let (mut p1, mut q1) = (1i128, 0i128);
    let mut kept_terms = Vec::with_capacity(terms.len());
    let mut convergents = Vec::with_capacity(terms.len());
    let mut complete = terminated;
    for (i, &a) in terms.iter().enumerate() {
        let next = a
            .checked_mul(p1)
            .and_then(|x| x.checked_add(p2))
            .zip(a.checked_mul(q1).and_then(|x| x.checked_add(q2)));
        let Some((p, q)) = next else {
            complete = false;
            break;
        };
        if i > 0 && q > q_cap {
            complete = false;
            break;
        }
        kept_terms.push(a);
        convergents.push((p, q));
        (p2, q2, p1, q1) = (p1, q1, p, q);
    }
    ConvergentSeq {
        rho,
        terms: kept_terms,
        convergents,
        terminated: complete,
    }
}

fn euclid_terms(mut num: i128, mut den: i128, max_terms: usize) -> (Vec<i128>, bool) {
    let mut terms = Vec::new();
    while terms.len() < max_terms {
        let a = num.div_euclid(den);
        terms.push(a);
        let r = num - a * den;
        if r == 0 {
            return (terms, true);
        }
        (num, den) = (den, r);
    }
    (terms, false)
}

/// Float expansion with an interval guard: the true value is assumed within one
/// relative ulp of the input; a partial quotient is emitted only when both ends
/// of the propagated interval agree on it. An iterate within its error of an
/// integer is treated as the exact end of a rational expansion.
fn float_terms(x: f64, max_terms: usize) -> (Vec<i128>, bool) {
    let eps = f64::EPSILON;
    let mut lo = x - x.abs() * eps;
    let mut hi = x + x.abs() * eps;
    let mut terms = Vec::new();
    while terms.len() < max_terms {
        let mid = 0.5 * (lo + hi);
        let nearest = mid.round();
        if (hi - lo) < 0.5 && lo <= nearest && nearest <= hi {
            if nearest.abs() > 1e30 {
                break;
            }
            terms.push(nearest as i128);
            return (terms, true);
        }
        let a = lo.floor();
        if hi.floor() != a || !a.is_finite() || a.abs() > 1e30 {
            break;
        }
        terms.push(a as i128);
        let (flo, fhi) = (lo - a, hi - a);
        if flo <= 0.0 {
            break;
        }
        let nlo = 1.0 / fhi;
        let nhi = 1.0 / flo;
        lo = nlo * (1.0 - 4.0 * eps);
        hi = nhi * (1.0 + 4.0 * eps);
    }
    (terms, false)
}

/// Continued-fraction expansion of ρ, stopping at `max_terms` partial quotients
/// or before the first convergent with denominator above `q_cap`.
pub fn continued_fraction(rho: &RhoInput, max_terms: usize, q_cap: i128) -> Result<ConvergentSeq> {
    if max_terms < 1 {
        return Err(Error::arg("max_terms must be at least 1"));
    }
    let (terms, terminated) = match *rho {
        RhoInput::Exact(r) => euclid_terms(r.p as i128, r.q as i128, max_terms),
        RhoInput::GoldenMean => (vec![1; max_terms], false),
        RhoInput::Sqrt2 => {
            let mut t = vec![2; max_terms];
            t[0] = 1;
            (t, false)
        }
        RhoInput::Float(x) => float_terms(x, max_terms),
    };
    if terms.is_empty() {
        return Err(Error::arg("value too large to expand"));
    }
    Ok(build(rho.value(), terms, terminated, q_cap))
}

/// `C_ρ = 2√6 δ⁺ / (3 (δ⁻)^{3/2})`.
pub fn c_rho(delta_minus: f64, delta_plus: f64) -> Result<f64> {
    if !(delta_minus > 0.0) {
        return Err(Error::arg(format!("delta_minus must be positive, got {delta_minus}")));
    }
    Ok(2.0 * 6f64.sqrt() * delta_plus / (3.0 * delta_minus.powf(1.5)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GammaParams {
    pub c_rho: f64,
    pub tau: f64,
}

/// `γ_{ρ,τ} = √3 · min_n (C_ρ q_n/√τ + 1/q_n)^{1/2}`.
///
/// Only convergents with `q_n < 1 + √τ/C_ρ` can attain the minimum (any larger
/// denominator does worse than `q = 1`), so the scan stops there. The first
/// convergent, with `q = 1`, is always included.
pub fn gamma_rho_tau(seq: &ConvergentSeq, g: &GammaParams) -> f64 {
    let sqrt_tau = g.tau.sqrt();
    let cap = 1.0 + sqrt_tau / g.c_rho;
    let term = |q: i128| {
        let q = q as f64;
        g.c_rho * q / sqrt_tau + 1.0 / q
    };
    let mut best = f64::INFINITY;
    for (i, q) in seq.denominators().enumerate() {
        if i > 0 && (q as f64) >= cap {
            break;
        }
        best = best.min(term(q));
    }
    3f64.sqrt() * best.sqrt()
}

/// `exp(π² / (12 ln 2))`
pub fn levy_constant() -> f64 {
    (PI * PI / (12.0 * std::f64::consts::LN_2)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_mean_denominators_are_fibonacci() {
        let s = continued_fraction(&RhoInput::GoldenMean, 40, 1_000_000).unwrap();
        assert!(s.terms.iter().all(|&a| a == 1));
        let qs: Vec<i128> = s.denominators().take(8).collect();
        assert_eq!(qs, vec![1, 1, 2, 3, 5, 8, 13, 21]);
    }

    #[test]
    fn simple_rationals() {
        let s = continued_fraction(&"1/2".parse().unwrap(), 10, 1000).unwrap();
        assert_eq!(s.convergents, vec![(0, 1), (1, 2)]);
        assert!(s.terminated);
        let s = continued_fraction(&"3".parse().unwrap(), 10, 1000).unwrap();
        assert_eq!(s.convergents, vec![(3, 1)]);
        let s = continued_fraction(&"-7/3".parse().unwrap(), 10, 1000).unwrap();
        assert_eq!(s.last(), (-7, 3));
        assert_eq!(s.terms[0], -3);
    }

    #[test]
    fn float_guard_recovers_short_rationals() {
        let s = continued_fraction(&RhoInput::Float(0.5), 20, 1 << 40).unwrap();
        assert_eq!(s.convergents, vec![(0, 1), (1, 2)]);
        let s = continued_fraction(&RhoInput::Float(0.618), 20, 1 << 40).unwrap();
        assert_eq!(s.last(), (309, 500));
    }

    #[test]
    fn float_guard_stops_before_unreliable_terms() {
        let x = 2f64.sqrt();
        let s = continued_fraction(&RhoInput::Float(x), 200, i128::MAX).unwrap();
        assert!(!s.terminated);
        // every emitted quotient agrees with the exact expansion
        assert_eq!(s.terms[0], 1);
        assert!(s.terms[1..].iter().all(|&a| a == 2), "{:?}", s.terms);
        assert!(s.terms.len() > 15 && s.terms.len() < 40);
    }

    #[test]
    fn q_cap_truncates() {
        let s = continued_fraction(&RhoInput::GoldenMean, 100, 233).unwrap();
        assert_eq!(s.last().1, 233);
        assert!(!s.terminated);
    }

    #[test]
    fn c_rho_examples() {
        assert!((c_rho(1.0, 1.0).unwrap() - 1.632_993_161_855_452).abs() < 1e-12);
        assert!((c_rho(2.0, 2.0).unwrap() - 1.154_700_538_379_251_5).abs() < 1e-12);
        assert!(c_rho(0.0, 1.0).is_err());
        let (a, b, c) = (0.7, 1.9, 3.3);
        assert!((c_rho(c * a, c * b).unwrap() - c_rho(a, b).unwrap() / c.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gamma_limits() {
        let int = continued_fraction(&"2".parse().unwrap(), 10, 1000).unwrap();
        let g = gamma_rho_tau(&int, &GammaParams { c_rho: 1.0, tau: 1e12 });
        assert!((g - 3f64.sqrt()).abs() < 1e-5);
        let r = continued_fraction(&"5/13".parse().unwrap(), 10, 1000).unwrap();
        let g = gamma_rho_tau(&r, &GammaParams { c_rho: 1.0, tau: 1e14 });
        assert!((g - (3.0f64 / 13.0).sqrt()).abs() < 1e-5);
    }

    #[test]
    fn gamma_golden_scan_example() {
        let s = continued_fraction(&RhoInput::GoldenMean, 60, 1 << 40).unwrap();
        let g = gamma_rho_tau(&s, &GammaParams { c_rho: 1.0, tau: 1e4 });
        // exhaustive scan over Fibonacci q ≤ 101
        let mut fib = vec![1.0f64, 1.0];
        while *fib.last().unwrap() <= 101.0 {
            let n = fib.len();
            fib.push(fib[n - 1] + fib[n - 2]);
        }
        let brute = fib
            .iter()
            .filter(|&&q| q <= 101.0)
            .map(|&q| 3f64.sqrt() * (q / 100.0 + 1.0 / q).sqrt())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(g, brute);
        assert!((3f64.sqrt() * (0.08f64 + 0.125).sqrt() - 0.784_219).abs() < 1e-6);
        assert!((g - 0.784_219_357_067_906_1).abs() < 1e-12, "{g}");
    }

    #[test]
    fn levy_value() {
        let l = levy_constant();
        assert!((l - 3.275_822_918_721_811).abs() < 1e-12);
        assert!((l.ln() - PI * PI / (12.0 * 2f64.ln())).abs() < 1e-15);
    }
}
