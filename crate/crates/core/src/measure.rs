//! Statistics of the shift-invariant measure carried by a periodic state, and
//! exact L¹-Wasserstein distances on the circle.

use serde::Serialize;

use crate::dynamics::ChainState;
use crate::error::{Error, Result};
use crate::potentials::InteractionPotential;

/// Uniform probability on the `q` cyclic shifts `S^k u` of a periodic state.
/// Every integral against it is an exact average over one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    base: ChainState,
}

impl EmpiricalMeasure {
    pub fn new(base: ChainState) -> Self {
        EmpiricalMeasure { base }
    }

    pub fn base(&self) -> &ChainState {
        &self.base
    }

    /// `∫ f(u_{-1}, u_0, u_1) dμ`
    fn average(&self, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
        let s = &self.base;
        let q = s.q() as i64;
        let total: f64 = (0..q).map(|k| f(s.u(k - 1), s.u(k), s.u(k + 1))).sum();
        total / q as f64
    }
}

impl From<ChainState> for EmpiricalMeasure {
    fn from(s: ChainState) -> Self {
        EmpiricalMeasure::new(s)
    }
}

/// `(1/q) Σ_k (u(k+1) − u(k) − ρ)²`
pub fn avg_width(mu: &EmpiricalMeasure) -> f64 {
    let rho = mu.base.rho();
    mu.average(|_, u0, u1| {
        let d = u1 - u0 - rho;
        d * d
    })
}

/// `(1/q) Σ_k W(u(k+1) − u(k))`
pub fn energy(mu: &EmpiricalMeasure, w: &InteractionPotential) -> f64 {
    mu.average(|_, u0, u1| w.value(u1 - u0))
}

/// Root-mean-square spacing deviation of a single state.
pub fn v_q_statistic(state: &ChainState) -> f64 {
    avg_width(&EmpiricalMeasure::new(state.clone())).sqrt()
}

/// `(1/q) Σ_k (u(k+1) − 2u(k) + u(k−1))²`
pub fn second_difference_sq(mu: &EmpiricalMeasure) -> f64 {
    mu.average(|um, u0, u1| {
        let d = u1 - 2.0 * u0 + um;
        d * d
    })
}

/// `(1/q) Σ_k (W'(u(k+1) − u(k)) − W'(u(k) − u(k−1)))²`
pub fn interaction_force_sq(mu: &EmpiricalMeasure, w: &InteractionPotential) -> f64 {
    mu.average(|um, u0, u1| {
        let f = w.d1(u1 - u0) - w.d1(u0 - um);
        f * f
    })
}

/// `(1/q) Σ_k (u_after(k) − u_before(k))`
pub fn mean_displacement(before: &EmpiricalMeasure, after: &EmpiricalMeasure) -> Result<f64> {
    let (a, b) = (&before.base, &after.base);
    if a.winding() != b.winding() {
        return Err(Error::arg(format!(
            "cells differ: {} vs {}",
            a.winding(),
            b.winding()
        )));
    }
    let total: f64 = a
        .positions()
        .iter()
        .zip(b.positions())
        .map(|(x, y)| y - x)
        .sum();
    Ok(total / a.q() as f64)
}

/// Positions closer than this (along the circle) are merged into one atom.
pub const MERGE_TOL: f64 = 1e-12;
const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CircleAtom {
    pub position: f64,
    pub weight: f64,
}

/// Finitely many atoms on `[0, 1)`, sorted by position, total weight 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleMeasure {
    atoms: Vec<CircleAtom>,
}

impl CircleMeasure {
    /// Reduces positions mod 1, sorts, merges near-coincident atoms and checks
    /// that the weights are nonnegative and sum to 1.
    pub fn new(atoms: impl IntoIterator<Item = (f64, f64)>) -> Result<Self> {
        let mut raw: Vec<CircleAtom> = Vec::new();
        for (position, weight) in atoms {
            if !position.is_finite() || !(weight >= 0.0) || !weight.is_finite() {
                return Err(Error::arg(format!("bad atom ({position}, {weight})")));
            }
            raw.push(CircleAtom {
                position: wrap_unit(position),
                weight,
            });
        }
        let total: f64 = raw.iter().map(|a| a.weight).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::arg(format!("weights sum to {total}, not 1")));
        }
        Ok(CircleMeasure {
            atoms: merge_sorted(raw),
        })
    }

    /// `q` atoms of weight `1/q` at `j/q`.
    pub fn equally_spaced(q: usize) -> Self {
        let w = 1.0 / q as f64;
        CircleMeasure {
            atoms: (0..q)
                .map(|j| CircleAtom {
                    position: j as f64 / q as f64,
                    weight: w,
                })
                .collect(),
        }
    }

    pub fn atoms(&self) -> &[CircleAtom] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

fn wrap_unit(x: f64) -> f64 {
    let y = x.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1 for tiny negative inputs
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

fn merge_sorted(mut atoms: Vec<CircleAtom>) -> Vec<CircleAtom> {
    atoms.sort_by(|a, b| a.position.total_cmp(&b.position));
    let mut out: Vec<CircleAtom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match out.last_mut() {
            Some(last) if a.position - last.position <= MERGE_TOL => last.weight += a.weight,
            _ => out.push(a),
        }
    }
    // across the seam at 0 ≡ 1
    if out.len() > 1 {
        let first = out[0].position;
        let last = out[out.len() - 1].position;
        if first + 1.0 - last <= MERGE_TOL {
            let w = out.pop().map(|a| a.weight).unwrap_or(0.0);
            out[0].weight += w;
        }
    }
    out
}

/// Pushes the cell onto the circle: one atom of weight `1/q` at `u(k) mod 1`
/// for each site, coincident positions merged.
pub fn project_circle(mu: &EmpiricalMeasure) -> CircleMeasure {
    let s = &mu.base;
    let w = 1.0 / s.q() as f64;
    let atoms = s
        .positions()
        .iter()
        .map(|&x| CircleAtom {
            position: wrap_unit(x),
            weight: w,
        })
        .collect();
    CircleMeasure {
        atoms: merge_sorted(atoms),
    }
}

/// One piece of `G = F_μ − F_ν` on `[x0, x0 + len)`: `G(x) = value − slope·(x − x0)`
/// with `slope ∈ {0, 1}`.
struct Piece {
    value: f64,
    len: f64,
    falling: bool,
}

/// `min_c ∫₀¹ |G(x) − c| dx` for a piecewise constant-or-falling `G`.
fn offset_l1(pieces: &[Piece]) -> f64 {
    let c = weighted_median(pieces);
    pieces
        .iter()
        .map(|p| {
            let a = p.value - c;
            if !p.falling {
                p.len * a.abs()
            } else {
                let b = a - p.len;
                if b >= 0.0 {
                    0.5 * (a * a - b * b)
                } else if a <= 0.0 {
                    0.5 * (b * b - a * a)
                } else {
                    0.5 * (a * a + b * b)
                }
            }
        })
        .sum()
}

/// A median of the push-forward of Lebesgue measure on `[0,1)` under `G`.
fn weighted_median(pieces: &[Piece]) -> f64 {
    // Events: a constant piece contributes a jump; a falling piece a unit-slope
    // ramp over `[value − len, value]`.
    #[derive(Clone, Copy)]
    enum Ev {
        Jump(f64),
        RampStart,
        RampEnd,
    }
    let mut events: Vec<(f64, Ev)> = Vec::with_capacity(2 * pieces.len());
    for p in pieces {
        if p.len <= 0.0 {
            continue;
        }
        if p.falling {
            events.push((p.value - p.len, Ev::RampStart));
            events.push((p.value, Ev::RampEnd));
        } else {
            events.push((p.value, Ev::Jump(p.len)));
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = 0.5;
    let mut mass = 0.0;
    let mut slope = 0.0;
    let mut at = match events.first() {
        Some(e) => e.0,
        None => return 0.0,
    };
    for &(x, ev) in &events {
        let grown = mass + slope * (x - at);
        if grown >= half && slope > 0.0 {
            return at + (half - mass) / slope;
        }
        mass = grown;
        at = x;
        match ev {
            Ev::Jump(w) => {
                mass += w;
                if mass >= half {
                    return x;
                }
            }
            Ev::RampStart => slope += 1.0,
            Ev::RampEnd => slope -= 1.0,
        }
    }
    at
}

fn check_normalized(mu: &CircleMeasure) -> Result<()> {
    let total: f64 = mu.atoms.iter().map(|a| a.weight).sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::arg(format!("measure has total weight {total}")));
    }
    Ok(())
}

/// Exact optimal-transport cost between two atomic measures on the circle with
/// the arc-length metric.
pub fn w1_circle(mu: &CircleMeasure, nu: &CircleMeasure) -> Result<f64> {
    check_normalized(mu)?;
    check_normalized(nu)?;
    // Merge both atom lists; G is constant between consecutive positions.
    let mut marks: Vec<(f64, f64)> = Vec::with_capacity(mu.len() + nu.len());
    marks.extend(mu.atoms.iter().map(|a| (a.position, a.weight)));
    marks.extend(nu.atoms.iter().map(|a| (a.position, -a.weight)));
    marks.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pieces = Vec::with_capacity(marks.len() + 1);
    let mut g = 0.0;
    let mut x = 0.0;
    for (pos, dw) in marks {
        pieces.push(Piece {
            value: g,
            len: pos - x,
            falling: false,
        });
        g += dw;
        x = pos;
    }
    pieces.push(Piece {
        value: g,
        len: 1.0 - x,
        falling: false,
    });
    Ok(offset_l1(&pieces))
}

/// Exact transport cost from an atomic measure to Lebesgue measure on the circle.
pub fn w1_to_lebesgue(mu: &CircleMeasure) -> Result<f64> {
    check_normalized(mu)?;
    let mut pieces = Vec::with_capacity(mu.len() + 1);
    let mut f = 0.0;
    let mut x = 0.0;
    for a in &mu.atoms {
        pieces.push(Piece {
            value: f - x,
            len: a.position - x,
            falling: true,
        });
        f += a.weight;
        x = a.position;
    }
    pieces.push(Piece {
        value: f - x,
        len: 1.0 - x,
        falling: true,
    });
    Ok(offset_l1(&pieces))
}
