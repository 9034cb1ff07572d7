#![allow(dead_code)]

pub mod lp;

use fk_ratchet::dynamics::{poincare, ChainState, DynamicsMode, IntegratorConfig};
use fk_ratchet::numtheory::Rational;
use fk_ratchet::potentials::ModelSpec;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rat(s: &str) -> Rational {
    s.parse().unwrap()
}

/// `u_k = ρk + a + ε g(ρk + a)` with a random one-periodic `g` whose slope is
/// kept below `1/ε`, so the configuration is rotationally ordered.
pub fn random_ordered_state(rho: Rational, rng: &mut impl Rng) -> ChainState {
    let a: f64 = rng.gen_range(0.0..1.0);
    let modes: Vec<(f64, f64)> = (1..=3)
        .map(|m| (rng.gen_range(-1.0..1.0) / m as f64, rng.gen_range(0.0..1.0)))
        .collect();
    let slope_bound: f64 = modes
        .iter()
        .enumerate()
        .map(|(i, (c, _))| c.abs() * 2.0 * std::f64::consts::PI * (i + 1) as f64)
        .sum();
    let eps = rng.gen_range(0.1..0.9) / slope_bound;
    let g = |x: f64| -> f64 {
        modes
            .iter()
            .enumerate()
            .map(|(i, (c, ph))| c * (2.0 * std::f64::consts::PI * ((i + 1) as f64 * x + ph)).sin())
            .sum()
    };
    let r = rho.to_f64();
    let pos = (0..rho.q).map(|k| {
        let x = r * k as f64 + a;
        x + eps * g(x)
    });
    ChainState::new(pos.collect(), rho, 0.0).unwrap()
}

/// Iterates the Poincaré map `periods` times.
pub fn relax(
    mut s: ChainState,
    periods: usize,
    model: &ModelSpec,
    mode: DynamicsMode,
    cfg: &IntegratorConfig,
) -> ChainState {
    for _ in 0..periods {
        s = poincare(&s, model, mode, cfg).unwrap();
    }
    s
}
