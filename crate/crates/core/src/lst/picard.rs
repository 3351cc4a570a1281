//! Picard iteration `φ ↦ E Π φ(s Xᵢ)` on transform grids.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lst::LSTGrid;
use crate::models::{CountLaw, ModelKind, PointSampler, PowerTail, WeightModel, DEFAULT_TAIL_TOL};
use crate::seed::{par_replicas, Seed};

/// Per-factor floor for `ln φ` in products.
const LOG_FLOOR: f64 = -690.7755278982137; // ln(1e-300)

/// `ln φ` from `1 − φ`, floored.
fn log_factor(gap: f64) -> f64 {
    if gap < 1.0 {
        (-gap).ln_1p().max(LOG_FLOOR)
    } else {
        LOG_FLOOR
    }
}

/// `1 − exp(l)` for a log-product `l ≤ 0`.
fn gap_of_log(l: f64) -> f64 {
    -l.exp_m1()
}

/// One step of the transform on the grid's arguments.
///
/// Finite models with exact moments use the exact expectation over the
/// realization law; otherwise `budget` realizations (common across all
/// arguments) are averaged, after rescaling them to satisfy Condition D_α
/// exactly when they are consistent with it, `α` the fitted index of `lst`. Shot noise uses the Poisson exponential formula.
/// All branches compute `1 − φ` directly so small arguments keep full
/// relative precision.
pub fn picard_step(lst: &LSTGrid, model: &WeightModel, budget: usize, seed: Seed) -> Result<LSTGrid> {
    let gaps: Vec<f64> = match (&model.kind, model.exact_moments) {
        (ModelKind::ShotNoise { profile, intensity }, _) => {
            let alpha = lst.fit.alpha;
            let (s1, gap1) = (lst.args[0], lst.gap(lst.args[0]));
            lst.args
                .iter()
                .map(|&s| {
                    let f = |x: f64| lst.gap(s * x);
                    let below = s1 / s;
                    let tail = PowerTail { below, coef: gap1 * (s / s1).powf(alpha), exponent: alpha };
                    let knots: Vec<f64> = lst.args.iter().map(|a| a / s).collect();
                    let integral = profile.levy_integral(&f, Some(tail), &knots);
                    gap_of_log(-intensity * integral)
                })
                .collect()
        }
        (ModelKind::FixedWeights { weights }, true) => lst
            .args
            .iter()
            .map(|&s| gap_of_log(weights.iter().map(|w| log_factor(lst.gap(s * w))).sum()))
            .collect(),
        (ModelKind::CommonRandomWeight { count, atoms }, true) => lst
            .args
            .iter()
            .map(|&s| atoms.iter().map(|(a, p)| p * gap_of_log(*count as f64 * log_factor(lst.gap(s * a)))).sum())
            .collect(),
        (ModelKind::RandomCountFixedWeight { count, weight }, true) => lst
            .args
            .iter()
            .map(|&s| {
                let gap = lst.gap(s * weight);
                match count {
                    // 1 − (1−q)z/(1−qz) with z = 1 − gap
                    CountLaw::Geometric { q } => gap / (1.0 - q + q * gap),
                    CountLaw::Atoms { atoms } => {
                        let lz = log_factor(gap);
                        atoms.iter().map(|(k, p)| p * gap_of_log(*k as f64 * lz)).sum()
                    }
                }
            })
            .collect(),
        _ => monte_carlo_step(lst, model, budget, seed)?,
    };
    if gaps.iter().all(|g| *g >= 1.0) {
        return Err(Error::ProductUnderflow);
    }
    LSTGrid::from_gaps(lst.args.clone(), gaps.into_iter().map(|g| g.clamp(0.0, 1.0)).collect())
}

/// Realizations rescaled so that their empirical `t(α) = 1` when the sample
/// is consistent with Condition D_α within this many standard errors.
const NORMALIZE_SE: f64 = 4.0;

/// Draws `budget` realizations with the `i`-th discrete choice stratified to
/// `[i, i+1) / budget`, merged into distinct weight vectors with counts.
fn realization_table(model: &WeightModel, budget: usize, seed: Seed) -> Result<Vec<(Vec<f64>, usize)>> {
    let sampler = PointSampler::new(model, DEFAULT_TAIL_TOL)?;
    let mut rows = par_replicas(budget, |i| {
        let mut rng = seed.rng(i as u64);
        let mut w = Vec::new();
        let u = (i as f64 + rng.random::<f64>()) / budget as f64;
        sampler.fill_at(u, &mut rng, &mut w);
        w
    });
    rows.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(a.len().cmp(&b.len())));
    let mut table: Vec<(Vec<f64>, usize)> = Vec::new();
    for w in rows {
        match table.last_mut() {
            Some((last, n)) if *last == w => *n += 1,
            _ => table.push((w, 1)),
        }
    }
    Ok(table)
}

/// Scale `c` with `(1/n) Σ Σᵢ (c Xᵢ)^α = 1`, or 1 when the sample rejects Condition D_α.
fn condition_d_scale(table: &[(Vec<f64>, usize)], alpha: f64, budget: usize) -> f64 {
    let n = budget as f64;
    let sums: Vec<(f64, f64)> = table.iter().map(|(w, k)| (w.iter().map(|x| x.powf(alpha)).sum(), *k as f64)).collect();
    let mean = sums.iter().map(|(t, k)| t * k).sum::<f64>() / n;
    let var = sums.iter().map(|(t, k)| k * (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    let se = (var / n).sqrt();
    if mean > 0.0 && (mean - 1.0).abs() <= NORMALIZE_SE * se {
        mean.powf(-1.0 / alpha)
    } else {
        1.0
    }
}

fn monte_carlo_step(lst: &LSTGrid, model: &WeightModel, budget: usize, seed: Seed) -> Result<Vec<f64>> {
    if budget == 0 {
        return Err(Error::InvalidArgument("Monte Carlo budget must be positive".into()));
    }
    let table = realization_table(model, budget, seed)?;
    let c = condition_d_scale(&table, lst.fit.alpha, budget);
    let rows = par_replicas(table.len(), |i| {
        let (w, k) = &table[i];
        lst.args
            .iter()
            .map(|&s| *k as f64 * gap_of_log(w.iter().map(|x| log_factor(lst.gap(s * c * x))).sum()))
            .collect::<Vec<f64>>()
    });
    let mut acc = vec![0.0; lst.len()];
    for row in &rows {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    Ok(acc.into_iter().map(|a| a / budget as f64).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardTrace {
    pub iteration: usize,
    pub sup_change: f64,
    pub alpha: f64,
    pub m: f64,
    /// Sup-grid distance to a reference transform, when one was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PicardRun {
    pub grid: LSTGrid,
    pub trace: Vec<PicardTrace>,
    pub converged: bool,
}

impl PicardRun {
    pub fn last_change(&self) -> f64 {
        self.trace.last().map_or(f64::NAN, |t| t.sup_change)
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct PicardOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub budget: usize,
    pub seed: Seed,
}

impl Default for PicardOptions {
    fn default() -> Self {
        PicardOptions { max_iter: 500, tol: 1e-9, budget: 10_000, seed: Seed(0) }
    }
}

/// Iterates [`picard_step`] until the sup-grid change drops below `tol`.
///
/// Monte Carlo steps reuse the same realizations every iteration, so the
/// iteration converges to the fixed point of one sampled operator.
pub fn picard_iterate(
    seed_lst: &LSTGrid,
    model: &WeightModel,
    opts: PicardOptions,
    reference: Option<&dyn Fn(f64) -> f64>,
) -> Result<PicardRun> {
    let mut grid = seed_lst.clone();
    grid.backing = None;
    let mut trace = Vec::new();
    for iteration in 1..=opts.max_iter {
        let next = picard_step(&grid, model, opts.budget, opts.seed)?;
        let sup_change = next.values.iter().zip(&grid.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        trace.push(PicardTrace {
            iteration,
            sup_change,
            alpha: next.fit.alpha,
            m: next.fit.m,
            reference_error: reference.map(|f| next.sup_error(f)),
        });
        grid = next;
        if sup_change < opts.tol {
            return Ok(PicardRun { grid, trace, converged: true });
        }
    }
    Err(Error::NoConvergence { best: Box::new(PicardRun { grid, trace, converged: false }) })
}
