//! The additive martingale `W⁽ⁿ⁾(γ)` of the branching random walk.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{t_beta, PointSampler, WeightModel, DEFAULT_TAIL_TOL};
use crate::seed::{par_replicas, Seed};

/// Default per-replica node budget.
pub const DEFAULT_POP_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrwResult {
    /// `W⁽ⁿ⁾(γ)` for every uncensored replica, in replica order.
    pub samples: Vec<f64>,
    pub generation: usize,
    pub gamma: f64,
    /// `t(γ)^n`.
    pub normalization: f64,
    pub censored: usize,
    pub pop_cap: usize,
    /// Per-node expected truncated mass of shot-noise offspring.
    pub truncation_bound: f64,
}

impl BrwResult {
    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / (self.censored + self.samples.len()).max(1) as f64
    }
}

/// Grows `replicas` independent trees to depth `n` and returns
/// `Σ_{|v|=n} L(v)^γ / t(γ)^n`, where `L(v)` is the product of weights
/// along the path to `v`.
pub fn simulate_brw_martingale(
    model: &WeightModel,
    gamma: f64,
    n: usize,
    replicas: usize,
    seed: Seed,
    pop_cap: usize,
) -> Result<BrwResult> {
    let t = t_beta(model, gamma, 100_000, seed.child(1))?.value;
    let normalization = t.powi(n as i32);
    let sampler = PointSampler::new(model, DEFAULT_TAIL_TOL)?;
    let runs: Vec<Option<f64>> = par_replicas(replicas, |i| {
        let mut rng: ChaCha8Rng = seed.rng(i as u64);
        let mut current = vec![1.0f64];
        let mut next = Vec::new();
        let mut kids = Vec::new();
        for _ in 0..n {
            next.clear();
            for parent in &current {
                sampler.fill(&mut rng, &mut kids);
                next.extend(kids.iter().map(|x| parent * x));
                if next.len() > pop_cap {
                    return None;
                }
            }
            std::mem::swap(&mut current, &mut next);
        }
        Some(current.iter().map(|l| l.powf(gamma)).sum::<f64>() / normalization)
    });
    let censored = runs.iter().filter(|r| r.is_none()).count();
    if censored == replicas && replicas > 0 {
        return Err(Error::PopulationCapExceeded { cap: pop_cap });
    }
    Ok(BrwResult {
        samples: runs.into_iter().flatten().collect(),
        generation: n,
        gamma,
        normalization,
        censored,
        pop_cap,
        truncation_bound: sampler.truncation_bound(),
    })
}
