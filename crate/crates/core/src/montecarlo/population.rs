//! Population dynamics for the fixed-point equation `W =d Σ Xᵢ Wᵢ`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{poisson_flow, DecayProfile, PointSampler, WeightModel, MAX_HORIZON};
use crate::montecarlo::{ks_distance, EmpiricalDist};
use crate::seed::{par_draws, par_draws_with, Seed};

/// Default pool size.
pub const DEFAULT_POOL_SIZE: usize = 100_000;

/// One resampled step `Σ Xᵢ Wᵢ` with `Wᵢ` drawn uniformly from `pool`.
pub fn population_step(
    model: &WeightModel,
    pool: &EmpiricalDist,
    replicas: usize,
    seed: Seed,
    tail_tol: f64,
) -> Result<EmpiricalDist> {
    let sampler = pool.sampler()?;
    let points = PointSampler::new(model, tail_tol)?;
    let samples = par_draws_with(replicas, seed, Vec::new, |weights, rng| {
        points.fill(rng, weights);
        let mut acc = 0.0;
        for x in weights.iter() {
            acc += x * sampler.at(rng.random::<f64>());
        }
        acc
    });
    Ok(EmpiricalDist::new(samples, format!("population-step(seed={})", seed.0))
        .with_truncation(points.truncation_bound() * pool.mean()))
}

/// Pushes several pools through the same realizations and the same
/// resampling uniforms (common random numbers).
pub fn population_step_coupled(
    model: &WeightModel,
    pools: &[&EmpiricalDist],
    replicas: usize,
    seed: Seed,
    tail_tol: f64,
) -> Result<Vec<EmpiricalDist>> {
    let samplers = pools.iter().map(|p| p.sampler()).collect::<Result<Vec<_>>>()?;
    let points = PointSampler::new(model, tail_tol)?;
    let draws: Vec<Vec<f64>> = par_draws(replicas, seed, |rng| {
        let mut sums = vec![0.0; samplers.len()];
        let mut weights = Vec::new();
        points.fill(rng, &mut weights);
        for x in &weights {
            let u = rng.random::<f64>();
            for (acc, s) in sums.iter_mut().zip(&samplers) {
                *acc += x * s.at(u);
            }
        }
        sums
    });
    Ok(pools
        .iter()
        .enumerate()
        .map(|(k, pool)| {
            let samples = draws.iter().map(|d| d[k]).collect();
            EmpiricalDist::new(samples, format!("population-step(seed={})", seed.0))
                .with_truncation(points.truncation_bound() * pool.mean())
        })
        .collect())
}

/// Draws `shift + Σᵢ Yᵢ h(τᵢ)` over a rate-`intensity` Poisson flow.
pub fn sample_shot_noise(
    profile: &DecayProfile,
    intensity: f64,
    pool: &EmpiricalDist,
    shift: f64,
    replicas: usize,
    seed: Seed,
    tail_tol: f64,
) -> Result<EmpiricalDist> {
    profile.validate()?;
    if !(intensity > 0.0 && intensity.is_finite()) || !(shift >= 0.0) {
        return Err(Error::InvalidArgument("intensity must be positive and shift nonnegative".into()));
    }
    let horizon = profile.horizon(tail_tol / intensity);
    if !(horizon <= MAX_HORIZON) {
        return Err(Error::HorizonUnbounded { tail_tol, max_horizon: MAX_HORIZON });
    }
    let sampler = pool.sampler()?;
    let samples = par_draws(replicas, seed, |rng| {
        let mut acc = shift;
        let mut hs = Vec::new();
        poisson_flow(profile, intensity, horizon, rng, |_, x| hs.push(x));
        for x in hs {
            acc += x * sampler.draw(rng);
        }
        acc
    });
    let bound = intensity * profile.tail_integral(horizon) * pool.mean();
    Ok(EmpiricalDist::new(samples, format!("shot-noise(seed={})", seed.0)).with_truncation(bound))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationTrace {
    pub iteration: usize,
    /// KS distance to the previous pool.
    pub ks_change: f64,
    pub mean: f64,
    pub median: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PopulationRun {
    pub pool: EmpiricalDist,
    pub trace: Vec<PopulationTrace>,
}

/// Iterates `step` from `seed_pool`, stage `k` receiving `seed.child(k)`.
pub fn iterate_with<F>(seed_pool: &EmpiricalDist, iterations: usize, seed: Seed, step: F) -> Result<PopulationRun>
where
    F: Fn(&EmpiricalDist, Seed) -> Result<EmpiricalDist>,
{
    if seed_pool.is_empty() {
        return Err(Error::EmptyPool);
    }
    let initial = seed_pool.mean();
    let mut pool = seed_pool.clone();
    let mut trace = Vec::with_capacity(iterations);
    for k in 1..=iterations {
        let next = step(&pool, seed.child(k as u64))?;
        let mean = next.mean();
        if !(mean >= 1e-6 * initial) {
            return Err(Error::MeanCollapse { initial, current: mean, iteration: k });
        }
        trace.push(PopulationTrace { iteration: k, ks_change: ks_distance(&pool, &next), mean, median: next.median() });
        pool = next;
    }
    Ok(PopulationRun { pool, trace })
}

/// Repeated [`population_step`]s.
pub fn iterate_population(
    model: &WeightModel,
    seed_pool: &EmpiricalDist,
    iterations: usize,
    replicas: usize,
    seed: Seed,
    tail_tol: f64,
) -> Result<PopulationRun> {
    iterate_with(seed_pool, iterations, seed, |pool, s| population_step(model, pool, replicas, s, tail_tol))
}
