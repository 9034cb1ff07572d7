//! Overdamped pulsating chain on a `(p, q)`-periodic cell.
//!
//! Positions live in the covering space: nothing is ever reduced mod 1, so
//! displacements accumulated over many periods stay meaningful.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numtheory::Rational;
use crate::potentials::ModelSpec;

/// `q` positions `u_0..u_{q-1}` with the boundary rule `u_{k+q} = u_k + p`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChainState {
    positions: Vec<f64>,
    winding: Rational,
    time: f64,
}

impl ChainState {
    pub fn new(positions: Vec<f64>, winding: Rational, time: f64) -> Result<Self> {
        if winding.q < 1 || positions.len() != winding.q as usize {
            return Err(Error::arg(format!(
                "expected {} positions for winding {winding}, got {}",
                winding.q,
                positions.len()
            )));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::arg("positions must be finite"));
        }
        if !(time.is_finite() && time >= 0.0) {
            return Err(Error::arg(format!("time must be finite and nonnegative, got {time}")));
        }
        Ok(ChainState {
            positions,
            winding,
            time,
        })
    }

    /// `u_k = ρ k + phase` at time 0.
    pub fn straight_line(winding: Rational, phase: f64) -> Self {
        let rho = winding.to_f64();
        let positions = (0..winding.q).map(|k| rho * k as f64 + phase).collect();
        ChainState {
            positions,
            winding,
            time: 0.0,
        }
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn winding(&self) -> Rational {
        self.winding
    }

    pub fn q(&self) -> usize {
        self.positions.len()
    }

    pub fn rho(&self) -> f64 {
        self.winding.to_f64()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// `u(k) = positions[k mod q] + p·floor(k/q)` for any integer `k`.
    #[inline]
    pub fn u(&self, k: i64) -> f64 {
        let q = self.winding.q;
        let (d, r) = (k.div_euclid(q), k.rem_euclid(q));
        self.positions[r as usize] + (self.winding.p * d) as f64
    }

    /// `u + c` at every site.
    pub fn translated(&self, c: f64) -> Self {
        ChainState {
            positions: self.positions.iter().map(|x| x + c).collect(),
            winding: self.winding,
            time: self.time,
        }
    }

    /// Cyclic shift `(S^n u)_k = u_{k+n}`.
    pub fn shifted(&self, n: i64) -> Self {
        let positions = (0..self.winding.q).map(|k| self.u(k + n)).collect();
        ChainState {
            positions,
            winding: self.winding,
            time: self.time,
        }
    }

    /// Spacings `u(k+1) − u(k)` for `k = 0..q`.
    pub fn spacings(&self) -> Vec<f64> {
        let q = self.q();
        let mut out = Vec::with_capacity(q);
        for k in 0..q {
            let next = if k + 1 < q {
                self.positions[k + 1]
            } else {
                self.positions[0] + self.winding.p as f64
            };
            out.push(next - self.positions[k]);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DynamicsMode {
    /// `du_k/dt = W'(u_{k+1}−u_k) − W'(u_k−u_{k−1}) + K(t) V'(u_k)`
    PulsatingPotential,
    /// `du_k/dt = K(t)[W'(u_{k+1}−u_k) − W'(u_k−u_{k−1})] + V'(u_k)`
    PulsatingInteraction,
}

impl std::str::FromStr for DynamicsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pulsating_potential" | "potential" => Ok(DynamicsMode::PulsatingPotential),
            "pulsating_interaction" | "interaction" => Ok(DynamicsMode::PulsatingInteraction),
            other => Err(Error::arg(format!("unknown dynamics mode `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub dt_max: f64,
    pub scheme: Scheme,
    /// Fraction of the linear stability scale `1/(coupling + pinning stiffness)`.
    pub safety: f64,
    /// Inside a constant-pulse half period, once `‖rhs‖∞` drops below this
    /// (and is no longer growing) the state is treated as at rest and the
    /// rest of the half period is skipped. `0` disables the shortcut.
    pub settle_tol: f64,
    /// Upper bound on steps per half period.
    pub max_steps_per_segment: u64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            dt_max: 0.05,
            scheme: Scheme::Rk4,
            safety: 1.0,
            settle_tol: 0.0,
            max_steps_per_segment: 50_000_000,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max.is_finite() && self.dt_max > 0.0) {
            return Err(Error::Config(format!("dt_max must be positive, got {}", self.dt_max)));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(Error::Config(format!("safety must lie in (0, 1], got {}", self.safety)));
        }
        if !(self.settle_tol >= 0.0) {
            return Err(Error::Config("settle_tol must be nonnegative".into()));
        }
        Ok(())
    }

    /// Target step for a half period with pulse level `k`.
    pub fn dt_target(&self, model: &ModelSpec, mode: DynamicsMode, rho: f64, k: f64) -> f64 {
        let coupling = 4.0 * model.delta_bounds(rho).plus;
        let pinning = model.site.d2_bound();
        let stiffness = match mode {
            DynamicsMode::PulsatingPotential => coupling + k * pinning,
            DynamicsMode::PulsatingInteraction => k * coupling + pinning,
        };
        if stiffness > 0.0 {
            self.dt_max.min(self.safety / stiffness)
        } else {
            self.dt_max
        }
    }
}

/// Right-hand side of the equations of motion at pulse level `k`.
fn rhs_into(
    positions: &[f64],
    p: i64,
    k: f64,
    model: &ModelSpec,
    mode: DynamicsMode,
    out: &mut [f64],
) {
    let q = positions.len();
    let w = &model.interaction;
    let v = &model.site;
    let shift = p as f64;
    let (coupling, pinning) = match mode {
        DynamicsMode::PulsatingPotential => (1.0, k),
        DynamicsMode::PulsatingInteraction => (k, 1.0),
    };
    // `left` holds W'(u_k − u_{k−1}) as we sweep k upward.
    let mut left = w.d1(positions[0] - (positions[q - 1] - shift));
    for i in 0..q {
        let next = if i + 1 < q {
            positions[i + 1]
        } else {
            positions[0] + shift
        };
        let right = w.d1(next - positions[i]);
        let mut f = 0.0;
        if coupling != 0.0 {
            f += coupling * (right - left);
        }
        if pinning != 0.0 {
            f += pinning * v.d1(positions[i]);
        }
        out[i] = f;
        left = right;
    }
}

/// Velocity of every site at time `t`; uses the winding rule across the cell edge.
pub fn rhs(state: &ChainState, t: f64, model: &ModelSpec, mode: DynamicsMode) -> Vec<f64> {
    let mut out = vec![0.0; state.q()];
    rhs_into(
        &state.positions,
        state.winding.p,
        model.pulse.value(t),
        model,
        mode,
        &mut out,
    );
    out
}

/// Index of the half period containing `t`, robust to `t = n·τ` round-off.
fn segment_index(t: f64, tau: f64) -> u64 {
    let x = t / tau;
    let r = x.round();
    if (x - r).abs() <= 1e-12 * r.max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

struct Workspace {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Workspace {
    fn new(q: usize) -> Self {
        Workspace {
            k1: vec![0.0; q],
            k2: vec![0.0; q],
            k3: vec![0.0; q],
            k4: vec![0.0; q],
            tmp: vec![0.0; q],
        }
    }
}

fn sup_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn rk4_step(
    u: &mut [f64],
    p: i64,
    k: f64,
    dt: f64,
    model: &ModelSpec,
    mode: DynamicsMode,
    ws: &mut Workspace,
) {
    let q = u.len();
    for i in 0..q {
        ws.tmp[i] = u[i] + 0.5 * dt * ws.k1[i];
    }
    rhs_into(&ws.tmp, p, k, model, mode, &mut ws.k2);
    for i in 0..q {
        ws.tmp[i] = u[i] + 0.5 * dt * ws.k2[i];
    }
    rhs_into(&ws.tmp, p, k, model, mode, &mut ws.k3);
    for i in 0..q {
        ws.tmp[i] = u[i] + dt * ws.k3[i];
    }
    rhs_into(&ws.tmp, p, k, model, mode, &mut ws.k4);
    for i in 0..q {
        u[i] += dt / 6.0 * (ws.k1[i] + 2.0 * ws.k2[i] + 2.0 * ws.k3[i] + ws.k4[i]);
    }
}

/// Integrates `[a, b]` inside the half period `[s0, s0 + τ]` at pulse level `k`.
///
/// The half period carries a fixed grid of equal steps no longer than
/// `dt_target`; a partial stretch follows that grid and only its first and
/// last steps are shortened, so splitting an evolution changes at most one step.
#[allow(clippy::too_many_arguments)]
fn integrate_segment(
    u: &mut [f64],
    p: i64,
    k: f64,
    (s0, a, b): (f64, f64, f64),
    tau: f64,
    dt_target: f64,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
    ws: &mut Workspace,
) -> Result<()> {
    if b <= a {
        return Ok(());
    }
    let full = (tau / dt_target).ceil().max(1.0);
    let dt = tau / full;
    // steps closer than this to a grid point are merged with their neighbour
    let snap = 1e-9 * dt;
    let planned = ((b - a) / dt).ceil() + 1.0;
    let over_budget = || {
        Error::Config(format!(
            "half period of length {tau} needs {full} steps of at most {dt_target}, above the limit of {}",
            cfg.max_steps_per_segment
        ))
    };
    // With settling enabled the budget applies to steps actually taken.
    if cfg.settle_tol == 0.0 && planned > cfg.max_steps_per_segment as f64 {
        return Err(over_budget());
    }
    let mut next = ((a - s0) / dt + 1e-9).floor() + 1.0;
    let mut t = a;
    let mut prev_norm = f64::INFINITY;
    let mut taken = 0u64;
    while t < b {
        if taken >= cfg.max_steps_per_segment {
            return Err(over_budget());
        }
        let grid = s0 + next * dt;
        let target = if b - grid <= snap { b } else { grid };
        rhs_into(u, p, k, model, mode, &mut ws.k1);
        if cfg.settle_tol > 0.0 {
            let n = sup_norm(&ws.k1);
            if n < cfg.settle_tol && n <= prev_norm {
                break;
            }
            prev_norm = n;
        }
        rk4_step(u, p, k, target - t, model, mode, ws);
        t = target;
        next += 1.0;
        taken += 1;
    }
    Ok(())
}

/// Fixed-step RK4 from `state.time` to `t_end`. Every pulse switch lands on a
/// step boundary: each half period is split into equal steps no longer than
/// [`IntegratorConfig::dt_target`], anchored at the start of the half period.
pub fn evolve(
    state: &ChainState,
    t_end: f64,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
) -> Result<ChainState> {
    cfg.validate()?;
    if !(t_end >= state.time) || !t_end.is_finite() {
        return Err(Error::arg(format!(
            "t_end = {t_end} precedes the state time {}",
            state.time
        )));
    }
    let tau = model.pulse.tau;
    let rho = state.rho();
    let dt_off = cfg.dt_target(model, mode, rho, model.pulse.level_on_segment(0));
    let dt_on = cfg.dt_target(model, mode, rho, model.pulse.level_on_segment(1));
    let mut u = state.positions.clone();
    let mut ws = Workspace::new(u.len());
    let mut t = state.time;
    let mut n = segment_index(t, tau);
    while t < t_end {
        let seg_start = n as f64 * tau;
        let seg_end = (n + 1) as f64 * tau;
        let stop = seg_end.min(t_end);
        let level = model.pulse.level_on_segment(n);
        let dt = if n.is_multiple_of(2) { dt_off } else { dt_on };
        integrate_segment(
            &mut u,
            state.winding.p,
            level,
            (seg_start, t.max(seg_start), stop),
            tau,
            dt,
            model,
            mode,
            cfg,
            &mut ws,
        )?;
        t = stop;
        n += 1;
    }
    Ok(ChainState {
        positions: u,
        winding: state.winding,
        time: t_end,
    })
}

/// Index `n` of the half period starting at `time`, when `time = 2mτ` for an
/// integer `m` (up to round-off in forming `n·τ`).
pub fn cycle_start_index(time: f64, tau: f64) -> Result<u64> {
    let n = segment_index(time, tau);
    let on_grid = (time - n as f64 * tau).abs() <= 1e-12 * time.max(tau);
    if !n.is_multiple_of(2) || !on_grid {
        return Err(Error::arg(format!(
            "expected a time that is a multiple of 2τ = {}, got {time}",
            2.0 * tau
        )));
    }
    Ok(n)
}

/// One full pulse cycle, `T = φ^{2τ}`.
pub fn poincare(
    state: &ChainState,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
) -> Result<ChainState> {
    let tau = model.pulse.tau;
    let n = cycle_start_index(state.time, tau)?;
    evolve(state, (n + 2) as f64 * tau, model, mode, cfg)
}

/// True when `a ≥ b` at every site.
fn dominates(a: &ChainState, b: &ChainState) -> bool {
    a.positions.iter().zip(&b.positions).all(|(x, y)| x >= y)
}

/// Evolves both states by `t` and reports whether `u(t) > v(t)` strictly at every site.
pub fn check_order_preserved(
    u0: &ChainState,
    v0: &ChainState,
    t: f64,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
) -> Result<bool> {
    if u0.winding != v0.winding {
        return Err(Error::arg("states have different windings"));
    }
    if !dominates(u0, v0) {
        return Err(Error::arg("expected u0 ≥ v0 at every site"));
    }
    let u = evolve(u0, u0.time + t, model, mode, cfg)?;
    let v = evolve(v0, v0.time + t, model, mode, cfg)?;
    Ok(u.positions.iter().zip(&v.positions).all(|(x, y)| x > y))
}

/// Whether `u` and `S^n u + m` are comparable for every shift `n` and integer `m`.
///
/// With `d_k = u_{k+n} − u_k`, a crossing with some integer translate exists
/// exactly when an integer lies strictly between `min d` and `max d`. Touching
/// within round-off of the positions (`1e-12` relative) counts as comparable.
pub fn check_rotational_order(state: &ChainState) -> bool {
    let scale = state.positions.iter().fold(1.0f64, |m, x| m.max(x.abs())) + state.winding.p.abs() as f64;
    check_rotational_order_tol(state, 1e-12 * scale)
}

/// [`check_rotational_order`] with an explicit tie tolerance.
pub fn check_rotational_order_tol(state: &ChainState, tol: f64) -> bool {
    let q = state.q() as i64;
    for n in 1..q {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for k in 0..q {
            let d = state.u(k + n) - state.u(k);
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let m = (lo + tol).floor() + 1.0;
        if m < hi - tol {
            return false;
        }
    }
    true
}

/// `w_j = u(j) − ρ j − a₀` with `a₀ = min_j (u(j) − ρ j)`.
pub fn width_function(state: &ChainState) -> Vec<f64> {
    let rho = state.rho();
    let raw: Vec<f64> = state
        .positions
        .iter()
        .enumerate()
        .map(|(j, x)| x - rho * j as f64)
        .collect();
    let a0 = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    raw.into_iter().map(|x| x - a0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{InteractionPotential, PulseSpec, SitePotential};

    fn quadratic_model(tau: f64, kappa: f64) -> ModelSpec {
        ModelSpec::new(
            InteractionPotential::Quadratic { c: 1.0 },
            SitePotential::default_ratchet(),
            PulseSpec::new(tau, kappa).unwrap(),
        )
        .unwrap()
    }

    fn r(p: i64, q: i64) -> Rational {
        Rational::new(p, q).unwrap()
    }

    #[test]
    fn accessor_applies_winding() {
        let s = ChainState::new(vec![0.0, 0.4], r(1, 2), 0.0).unwrap();
        assert_eq!(s.u(2), 1.0);
        assert_eq!(s.u(-1), 0.4 - 1.0);
        assert_eq!(s.u(5), 0.4 + 2.0);
        assert!(ChainState::new(vec![0.0], r(1, 2), 0.0).is_err());
    }

    #[test]
    fn rhs_examples() {
        let m = quadratic_model(1.0, 3.0);
        let line = ChainState::straight_line(r(3, 7), 0.2);
        for x in rhs(&line, 0.5, &m, DynamicsMode::PulsatingPotential) {
            assert!(x.abs() < 1e-14);
        }
        let single = ChainState::new(vec![0.3], r(0, 1), 0.0).unwrap();
        let f = rhs(&single, 1.5, &m, DynamicsMode::PulsatingPotential);
        assert!((f[0] - 3.0 * m.site.d1(0.3)).abs() < 1e-14);
        let s = ChainState::new(vec![0.0, 0.4], r(1, 2), 0.0).unwrap();
        // u(-1) = -0.6, u(2) = 1: site 0 sits above the midpoint of its neighbours
        let f = rhs(&s, 0.5, &m, DynamicsMode::PulsatingPotential);
        let expected = [2.0 * 0.4 - 2.0 * 0.6, 2.0 * 0.6 - 2.0 * 0.4];
        assert!((f[0] - expected[0]).abs() < 1e-15 && (f[1] - expected[1]).abs() < 1e-15, "{f:?}");
    }

    #[test]
    fn rhs_interaction_mode_swaps_pulse() {
        let m = quadratic_model(1.0, 3.0);
        let s = ChainState::new(vec![0.0, 0.4], r(1, 2), 0.0).unwrap();
        let f = rhs(&s, 0.5, &m, DynamicsMode::PulsatingInteraction);
        assert!((f[0] - m.site.d1(0.0)).abs() < 1e-15);
        let f = rhs(&s, 1.5, &m, DynamicsMode::PulsatingInteraction);
        assert!((f[0] - (-3.0 * 0.4 + m.site.d1(0.0))).abs() < 1e-14);
    }

    #[test]
    fn evolve_examples() {
        let m = quadratic_model(2.0, 3.0);
        let cfg = IntegratorConfig::default();
        let s = ChainState::new(vec![0.1, 0.35, 0.9], r(2, 3), 0.0).unwrap();
        let same = evolve(&s, 0.0, &m, DynamicsMode::PulsatingPotential, &cfg).unwrap();
        assert_eq!(same, s);
        let line = ChainState::straight_line(r(5, 8), 0.13);
        let after = evolve(&line, 2.0, &m, DynamicsMode::PulsatingPotential, &cfg).unwrap();
        for (a, b) in after.positions().iter().zip(line.positions()) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(evolve(&after, 1.0, &m, DynamicsMode::PulsatingPotential, &cfg).is_err());
    }

    #[test]
    fn single_site_matches_scalar_rk4() {
        let m = quadratic_model(1.0, 3.0);
        let cfg = IntegratorConfig::default();
        let s = ChainState::new(vec![0.3], r(0, 1), 1.0).unwrap();
        let out = evolve(&s, 2.0, &m, DynamicsMode::PulsatingPotential, &cfg).unwrap();
        // scalar oracle with many more steps
        let f = |x: f64| 3.0 * m.site.d1(x);
        let n = 40_000;
        let h = 1.0 / n as f64;
        let mut x = 0.3;
        for _ in 0..n {
            let a = f(x);
            let b = f(x + 0.5 * h * a);
            let c = f(x + 0.5 * h * b);
            let d = f(x + h * c);
            x += h / 6.0 * (a + 2.0 * b + 2.0 * c + d);
        }
        assert!((out.positions()[0] - x).abs() < 1e-10, "{} vs {x}", out.positions()[0]);
    }

    #[test]
    fn poincare_semigroup_is_exact() {
        let m = quadratic_model(0.7, 3.0);
        let cfg = IntegratorConfig::default();
        let s = ChainState::straight_line(r(3, 5), 0.05);
        let mode = DynamicsMode::PulsatingPotential;
        let twice = poincare(&poincare(&s, &m, mode, &cfg).unwrap(), &m, mode, &cfg).unwrap();
        let direct = evolve(&s, 4.0 * 0.7, &m, mode, &cfg).unwrap();
        for (a, b) in twice.positions().iter().zip(direct.positions()) {
            assert!((a - b).abs() <= 1e-12);
        }
        assert!(poincare(&s.clone().with_time(0.7), &m, mode, &cfg).is_err());
    }

    #[test]
    fn order_preservation_examples() {
        let m = quadratic_model(1.0, 3.0);
        let cfg = IntegratorConfig::default();
        let mode = DynamicsMode::PulsatingPotential;
        let u = ChainState::new(vec![0.1, 0.5, 1.2], r(2, 3), 0.0).unwrap();
        let v = u.translated(-0.01);
        assert!(check_order_preserved(&u, &v, 1.0, &m, mode, &cfg).unwrap());
        assert!(!check_order_preserved(&u, &u, 1.0, &m, mode, &cfg).unwrap());
        assert!(check_order_preserved(&v, &u, 1.0, &m, mode, &cfg).is_err());
    }

    #[test]
    fn rotational_order_examples() {
        assert!(check_rotational_order(&ChainState::straight_line(r(5, 13), 0.3)));
        let s = ChainState::new(vec![0.0, 0.9, 1.1], r(2, 3), 0.0).unwrap();
        assert_eq!(check_rotational_order(&s), brute_force_order(&s));
        let bad = ChainState::new(vec![0.0, 1.6, 0.2], r(2, 3), 0.0).unwrap();
        assert!(!check_rotational_order(&bad));
        assert!(!brute_force_order(&bad));
    }

    fn brute_force_order(s: &ChainState) -> bool {
        let q = s.q() as i64;
        for n in 1..q {
            for m in -3..=3 {
                let diffs: Vec<f64> = (0..q).map(|k| s.u(k + n) + m as f64 - s.u(k)).collect();
                let le = diffs.iter().all(|&d| d <= 0.0);
                let ge = diffs.iter().all(|&d| d >= 0.0);
                if !(le || ge) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn width_function_examples() {
        let line = ChainState::straight_line(r(3, 8), 0.7);
        assert!(width_function(&line).iter().all(|w| w.abs() < 1e-15));
        let s = ChainState::new(vec![0.0, 0.9, 1.1], r(2, 3), 0.0).unwrap();
        let w = width_function(&s);
        assert_eq!(w.iter().cloned().fold(f64::INFINITY, f64::min), 0.0);
        for j in 1..3 {
            let lhs = w[j] - w[j - 1];
            let rhs = s.u(j as i64) - s.u(j as i64 - 1) - s.rho();
            assert!((lhs - rhs).abs() < 1e-15);
        }
    }
}
