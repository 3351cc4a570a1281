//! The `r_δ` metric and measured contraction of the smoothing transform.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::lst::{log_space, LSTGrid};
use crate::models::{sum_weights_moment, t_beta, WeightModel, DEFAULT_TAIL_TOL};
use crate::montecarlo::{population_step_coupled, EmpiricalDist};
use crate::seed::Seed;

pub const METRIC_S_MIN: f64 = 1e-6;
pub const METRIC_S_MAX: f64 = 1e4;
pub const METRIC_POINTS: usize = 400;

/// A distribution whose characteristic function can be evaluated.
#[derive(Debug, Clone, Copy)]
pub enum DistRef<'a> {
    Grid(&'a LSTGrid),
    Sample(&'a EmpiricalDist),
}

impl<'a> DistRef<'a> {
    fn sample(self) -> Result<&'a EmpiricalDist> {
        match self {
            DistRef::Sample(d) => Ok(d),
            DistRef::Grid(g) => g.backing.as_ref().ok_or(Error::NoCharacteristicFunction),
        }
    }
}

/// Characteristic function `c(s) − 1` tabulated on the metric grid.
#[derive(Debug, Clone)]
pub struct CfTable {
    args: Vec<f64>,
    re: Vec<f64>,
    im: Vec<f64>,
    mean: f64,
}

impl CfTable {
    pub fn new(dist: &EmpiricalDist) -> Self {
        let args = log_space(METRIC_S_MIN, METRIC_S_MAX, METRIC_POINTS);
        let pairs: Vec<(f64, f64)> = args.par_iter().map(|s| dist.characteristic(*s)).collect();
        CfTable {
            re: pairs.iter().map(|p| p.0).collect(),
            im: pairs.iter().map(|p| p.1).collect(),
            args,
            mean: dist.mean(),
        }
    }

    /// `r_δ` distance with a quadrature truncation bound.
    pub fn distance(&self, other: &CfTable, delta: f64) -> Result<Estimate> {
        if !(delta > 1.0 && delta < 2.0) {
            return Err(Error::InvalidArgument(format!("delta = {delta} outside (1, 2)")));
        }
        let scale = self.mean.abs().max(other.mean.abs()).max(1e-300);
        if (self.mean - other.mean).abs() > 1e-6 * scale {
            return Err(Error::MeanMismatch { a: self.mean, b: other.mean });
        }
        // integrate s^{−δ}|Δc(s)| d(ln s) by the trapezoid rule
        let f: Vec<f64> = (0..self.args.len())
            .map(|k| {
                let dr = self.re[k] - other.re[k];
                let di = self.im[k] - other.im[k];
                self.args[k].powf(-delta) * dr.hypot(di)
            })
            .collect();
        let h = (METRIC_S_MAX / METRIC_S_MIN).ln() / (METRIC_POINTS - 1) as f64;
        let inner: f64 = f[1..f.len() - 1].iter().sum();
        let value = h * (inner + 0.5 * (f[0] + f[f.len() - 1]));
        // |Δc| = O(s²) at 0 and ≤ 2 at ∞
        let bound = f[0] / (2.0 - delta) + 2.0 * METRIC_S_MAX.powf(-delta) / delta;
        Ok(Estimate::quadrature(value, bound))
    }
}

/// `r_δ(a, b) = ∫₀^∞ s^{−δ−1}|c_a(s) − c_b(s)| ds`.
pub fn r_delta_distance(a: DistRef<'_>, b: DistRef<'_>, delta: f64) -> Result<Estimate> {
    let (a, b) = (a.sample()?, b.sample()?);
    CfTable::new(a).distance(&CfTable::new(b), delta)
}

fn rescaled(dist: &EmpiricalDist, mean: f64) -> Result<EmpiricalDist> {
    let m = dist.mean();
    if !(m > 0.0) {
        return Err(Error::ZeroMean);
    }
    let mut out = dist.clone();
    for x in &mut out.samples {
        *x *= mean / m;
    }
    Ok(out)
}

/// Two distributions of equal mean with cached characteristic functions.
#[derive(Debug, Clone)]
pub struct ContractionPair {
    pub nu: [EmpiricalDist; 2],
    cf: [CfTable; 2],
}

impl ContractionPair {
    /// Rescales both inputs to the mean of `nu1`.
    pub fn new(nu1: &EmpiricalDist, nu2: &EmpiricalDist) -> Result<Self> {
        let mean = nu1.mean();
        let nu = [rescaled(nu1, mean)?, rescaled(nu2, mean)?];
        let cf = [CfTable::new(&nu[0]), CfTable::new(&nu[1])];
        let pair = ContractionPair { nu, cf };
        if pair.distance(1.5)?.value <= 1e-12 {
            return Err(Error::DegenerateInput("the two distributions coincide".into()));
        }
        Ok(pair)
    }

    pub fn distance(&self, p: f64) -> Result<Estimate> {
        self.cf[0].distance(&self.cf[1], p)
    }

    /// Both distributions pushed through one coupled population step,
    /// rescaled back to the common mean.
    pub fn push(&self, model: &WeightModel, replicas: usize, seed: Seed) -> Result<ContractionPair> {
        let mean = self.nu[0].mean();
        let out = population_step_coupled(model, &[&self.nu[0], &self.nu[1]], replicas, seed, DEFAULT_TAIL_TOL)?;
        let nu = [rescaled(&out[0], mean)?, rescaled(&out[1], mean)?];
        let cf = [CfTable::new(&nu[0]), CfTable::new(&nu[1])];
        Ok(ContractionPair { nu, cf })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    pub p: f64,
    pub ratio: f64,
    pub before: Estimate,
    pub after: Estimate,
    /// `t(p) = E Σ Xᵢ^p`, the asserted contraction constant.
    pub t_p: Estimate,
    /// `E(Σ Xᵢ)^p`, the alternative constant.
    pub sum_moment: Estimate,
}

impl ContractionReport {
    pub fn within(&self, slack: f64) -> bool {
        self.ratio <= self.t_p.value + slack
    }
}

/// Ratio from an already pushed pair.
pub fn contraction_report(
    model: &WeightModel,
    before: &ContractionPair,
    after: &ContractionPair,
    p: f64,
    budget: usize,
    seed: Seed,
) -> Result<ContractionReport> {
    let b = before.distance(p)?;
    let a = after.distance(p)?;
    Ok(ContractionReport {
        p,
        ratio: a.value / b.value,
        before: b,
        after: a,
        t_p: t_beta(model, p, budget, seed.child(11))?,
        sum_moment: sum_weights_moment(model, p, budget, seed.child(12))?,
    })
}

/// Measured `r_p(Tν₁, Tν₂) / r_p(ν₁, ν₂)` for one coupled step.
pub fn contraction_ratio(
    model: &WeightModel,
    nu1: &EmpiricalDist,
    nu2: &EmpiricalDist,
    p: f64,
    budget: usize,
    seed: Seed,
) -> Result<ContractionReport> {
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::InvalidArgument(format!("p = {p} outside (1, 2)")));
    }
    let before = ContractionPair::new(nu1, nu2)?;
    let after = before.push(model, budget, seed)?;
    contraction_report(model, &before, &after, p, budget, seed)
}
