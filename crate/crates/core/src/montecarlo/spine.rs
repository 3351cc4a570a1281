//! The spine perpetuity `V_n = V_{1,n} − V_{2,n}`.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimate::Estimate;
use crate::models::{SpineSampler, WeightModel};
use crate::seed::{par_replicas, Seed};

/// Products below this end a replica early.
pub const PRODUCT_CUTOFF: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpineResult {
    /// `V_{1,n} = N₁ + Σ_{k≤n} M₁⋯M_k N_{k+1}`.
    pub v1: Vec<f64>,
    /// `V_{2,n} = Σ_{k≤n} M₁⋯M_k`.
    pub v2: Vec<f64>,
    pub v: Vec<f64>,
    pub depth: usize,
    pub beta: f64,
    /// Replicas stopped early by the product cutoff.
    pub early_stops: usize,
    /// Whether the mean of `V_{1,n}` stabilized across sample prefixes.
    pub v1_mean_finite: bool,
    pub mean_v: Estimate,
}

/// Simulates `replicas` spines of `depth` multiplicative steps.
pub fn simulate_spine_perpetuity(
    model: &WeightModel,
    beta: f64,
    depth: usize,
    replicas: usize,
    seed: Seed,
    pool: usize,
) -> Result<SpineResult> {
    let sampler = SpineSampler::new(model, beta, pool, seed.child(0))?;
    let runs = par_replicas(replicas, |i| {
        let mut rng: ChaCha8Rng = seed.rng(i as u64);
        let first = sampler.sample(&mut rng);
        let mut v1 = first.n(beta);
        let mut v2 = 0.0;
        let mut product = first.m(beta);
        let mut stopped = false;
        for _ in 0..depth {
            if product < PRODUCT_CUTOFF {
                stopped = true;
                break;
            }
            v2 += product;
            let node = sampler.sample(&mut rng);
            v1 += product * node.n(beta);
            product *= node.m(beta);
        }
        (v1, v2, stopped)
    });
    let v1: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let v2: Vec<f64> = runs.iter().map(|r| r.1).collect();
    let v: Vec<f64> = runs.iter().map(|r| r.0 - r.1).collect();
    let early_stops = runs.iter().filter(|r| r.2).count();
    Ok(SpineResult {
        v1_mean_finite: prefix_means_stable(&v1, 0.1),
        mean_v: Estimate::from_samples(&v),
        v1,
        v2,
        v,
        depth,
        beta,
        early_stops,
    })
}

/// Means over the first quarter, half, and all samples agree within `rel`.
pub(crate) fn prefix_means_stable(xs: &[f64], rel: f64) -> bool {
    let n = xs.len();
    if n < 8 {
        return false;
    }
    let mean = |k: usize| xs[..k].iter().sum::<f64>() / k as f64;
    let (a, b, c) = (mean(n / 4), mean(n / 2), mean(n));
    let scale = c.abs().max(1e-300);
    (a - c).abs() <= rel * scale && (b - c).abs() <= rel * scale
}
