//! The size-bias equation `μ̄ = L(A Ȳ + Y)` and its shot-noise representation.
//!
//! With `γ = P(A = 0)` and `ν` the law of `A` given `A > 0`, the solutions of
//! mean `m` are the fixed points of
//! `W = m γ + Σᵢ Wᵢ h(τᵢ)` over a unit-rate Poisson flow `τ`, where
//! `h←(x) = (1 − γ) ∫_{[x,∞)} z⁻¹ ν(dz)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::criteria::{classify_drift, DiscreteLogStep, DriftClass, DriftVerdict, FnLogStep, MeanLog, ShiftedExpLogStep};
use crate::error::{Error, Result};
use crate::lst::log_space;
use crate::models::{AtomTable, DecayProfile, DEFAULT_TAIL_TOL};
use crate::montecarlo::{iterate_with, ks_distance, sample_shot_noise, EmpiricalDist};
use crate::seed::{par_draws, Seed};

/// Default points of the log grid for tabulated `ν`.
pub const DEFAULT_GRID: usize = 4096;
/// Tolerance on `∫h = 1 − γ` after [`nu_to_h`].
pub const INTEGRAL_TOL: f64 = 1e-6;
/// Default KS threshold of [`verify_size_bias_equation`].
pub const SIZE_BIAS_KS: f64 = 0.02;
/// Lowest grid point of a tabulated `ν` with density at 0, relative to its top.
const GRID_DEPTH: f64 = 1e-5;
const MASS_TOL: f64 = 1e-9;

fn default_grid() -> usize {
    DEFAULT_GRID
}

/// Law of `A` given `A > 0`. Atoms at 0 are allowed and add to `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum NuDist {
    /// Uniform on `(0, upper)`.
    Uniform { upper: f64 },
    /// `(value, probability)` pairs.
    Atoms { atoms: Vec<(f64, f64)> },
    /// Piecewise-linear CDF through `(x[k], cdf[k])`; `x` is nondecreasing and
    /// a repeated `x` is a jump. `cdf[0] > 0` is an atom at `x[0]`.
    TabulatedCdf { x: Vec<f64>, cdf: Vec<f64> },
}

impl NuDist {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidModel(format!("nu: {m}")));
        match self {
            NuDist::Uniform { upper } => {
                if !(upper.is_finite() && *upper > 0.0) {
                    return bad("uniform upper end must be positive");
                }
            }
            NuDist::Atoms { atoms } => {
                if atoms.is_empty() || atoms.iter().any(|(v, p)| !(v.is_finite() && *v >= 0.0 && *p >= 0.0)) {
                    return bad("atoms need nonnegative values and masses");
                }
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                if (total - 1.0).abs() > MASS_TOL {
                    return Err(Error::MassDeficit { total });
                }
            }
            NuDist::TabulatedCdf { x, cdf } => {
                if x.is_empty() || x.len() != cdf.len() {
                    return bad("tabulated cdf needs matching nonempty x and cdf");
                }
                if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || x.windows(2).any(|p| p[1] < p[0]) {
                    return bad("tabulated x must be nonnegative and nondecreasing");
                }
                if cdf.iter().any(|c| !(*c >= 0.0 && *c <= 1.0)) || cdf.windows(2).any(|p| p[1] < p[0]) {
                    return bad("tabulated cdf must be nondecreasing in [0, 1]");
                }
                let total = cdf[cdf.len() - 1];
                if (total - 1.0).abs() > MASS_TOL {
                    return Err(Error::MassDeficit { total });
                }
            }
        }
        Ok(())
    }

    pub fn cdf(&self, at: f64) -> f64 {
        match self {
            NuDist::Uniform { upper } => (at / upper).clamp(0.0, 1.0),
            NuDist::Atoms { atoms } => atoms.iter().filter(|(v, _)| *v <= at).map(|a| a.1).sum(),
            NuDist::TabulatedCdf { x, cdf } => {
                let k = x.partition_point(|v| *v <= at);
                if k == 0 {
                    0.0
                } else if k == x.len() {
                    1.0
                } else {
                    let frac = (at - x[k - 1]) / (x[k] - x[k - 1]);
                    cdf[k - 1] + frac * (cdf[k] - cdf[k - 1])
                }
            }
        }
    }

    /// `ν({0})`.
    pub fn zero_mass(&self) -> f64 {
        match self {
            NuDist::Uniform { .. } => 0.0,
            NuDist::Atoms { atoms } => atoms.iter().filter(|(v, _)| *v == 0.0).map(|a| a.1).sum(),
            NuDist::TabulatedCdf { x, cdf } => {
                let last_zero = x.partition_point(|v| *v == 0.0);
                if last_zero == 0 {
                    0.0
                } else {
                    cdf[last_zero - 1]
                }
            }
        }
    }

    /// `∫ z⁻¹ ν(dz)` over `(x, ∞)`, or over `[x, ∞)` when `closed`.
    pub fn inverse_moment_above(&self, at: f64, closed: bool) -> f64 {
        let keep = |v: f64| v > at || (closed && v == at);
        match self {
            NuDist::Uniform { upper } => {
                if at >= *upper {
                    0.0
                } else {
                    (upper / at).ln() / upper
                }
            }
            NuDist::Atoms { atoms } => atoms.iter().filter(|(v, _)| keep(*v)).map(|(v, p)| p / v).sum(),
            NuDist::TabulatedCdf { x, cdf } => {
                let mut acc = if keep(x[0]) { cdf[0] / x[0] } else { 0.0 };
                for k in 0..x.len() - 1 {
                    let dm = cdf[k + 1] - cdf[k];
                    if dm == 0.0 {
                        continue;
                    }
                    if x[k + 1] == x[k] {
                        if keep(x[k]) {
                            acc += dm / x[k];
                        }
                    } else if x[k + 1] > at {
                        let density = dm / (x[k + 1] - x[k]);
                        acc += density * (x[k + 1] / x[k].max(at)).ln();
                    }
                }
                acc
            }
        }
    }

    /// Quantile function at `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            NuDist::Uniform { upper } => u * upper,
            NuDist::Atoms { atoms } => {
                let mut acc = 0.0;
                for (v, p) in atoms {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                atoms[atoms.len() - 1].0
            }
            NuDist::TabulatedCdf { x, cdf } => {
                let k = cdf.partition_point(|c| *c <= u);
                if k == 0 {
                    return x[0];
                }
                if k == x.len() {
                    return x[x.len() - 1];
                }
                let frac = (u - cdf[k - 1]) / (cdf[k] - cdf[k - 1]);
                x[k - 1] + frac * (x[k] - x[k - 1])
            }
        }
    }

    fn sampler(&self) -> NuSampler<'_> {
        let table = match self {
            NuDist::Atoms { atoms } => Some(AtomTable::new(atoms.iter().map(|a| a.1))),
            _ => None,
        };
        NuSampler { nu: self, table }
    }
}

struct NuSampler<'a> {
    nu: &'a NuDist,
    table: Option<AtomTable>,
}

impl NuSampler<'_> {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match (self.nu, &self.table) {
            (NuDist::Atoms { atoms }, Some(t)) => atoms[t.sample(rng)].0,
            _ => self.nu.quantile(rng.random()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitmanYorProblem {
    pub nu: NuDist,
    /// `P(A = 0)`.
    pub gamma0: f64,
    /// Target mean.
    pub m: f64,
    /// Log-grid points for tabulated `ν`.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

impl PitmanYorProblem {
    pub fn new(nu: NuDist, gamma0: f64, m: f64) -> Self {
        PitmanYorProblem { nu, gamma0, m, grid: DEFAULT_GRID }
    }

    pub fn validate(&self) -> Result<()> {
        self.nu.validate()?;
        if !(self.gamma0 >= 0.0 && self.gamma0 < 1.0) {
            return Err(Error::InvalidModel(format!("gamma0 = {} must lie in [0, 1)", self.gamma0)));
        }
        if !(self.m.is_finite() && self.m > 0.0) {
            return Err(Error::InvalidModel(format!("target mean m = {} must be positive", self.m)));
        }
        if self.grid < 16 {
            return Err(Error::InvalidModel(format!("grid of {} points is too coarse", self.grid)));
        }
        Ok(())
    }

    /// `P(A = 0)` including atoms of `ν` at 0.
    pub fn zero_probability(&self) -> f64 {
        self.gamma0 + (1.0 - self.gamma0) * self.nu.zero_mass()
    }

    /// `h←(x) = (1 − γ₀) ∫_{[x,∞)} z⁻¹ ν(dz)` for `x > 0`.
    pub fn h_inverse(&self, x: f64) -> f64 {
        (1.0 - self.gamma0) * self.nu.inverse_moment_above(x, true)
    }

    fn draw_a<R: Rng + ?Sized>(&self, sampler: &NuSampler<'_>, rng: &mut R) -> f64 {
        if self.gamma0 > 0.0 && rng.random::<f64>() < self.gamma0 {
            0.0
        } else {
            sampler.draw(rng)
        }
    }
}

/// Decay profile `h` of the shot-noise representation at unit intensity.
///
/// Fails with `DegenerateInput` when `A = 0` a.s., where `h ≡ 0`.
pub fn nu_to_h(problem: &PitmanYorProblem) -> Result<DecayProfile> {
    problem.validate()?;
    let scale = 1.0 - problem.gamma0;
    let target = 1.0 - problem.zero_probability();
    if target <= 0.0 {
        return Err(Error::DegenerateInput("A = 0 almost surely, h is identically 0".into()));
    }
    let h = match &problem.nu {
        NuDist::Uniform { upper } => DecayProfile::Exp { rate: upper / scale, amplitude: *upper },
        NuDist::Atoms { atoms } => {
            let mut pos: Vec<(f64, f64)> = atoms.iter().copied().filter(|(v, p)| *v > 0.0 && *p > 0.0).collect();
            pos.sort_by(|a, b| b.0.total_cmp(&a.0));
            let mut heights: Vec<f64> = Vec::new();
            let mut widths: Vec<f64> = Vec::new();
            for (v, p) in pos {
                let w = scale * p / v;
                if heights.last() == Some(&v) {
                    *widths.last_mut().unwrap() += w;
                } else {
                    heights.push(v);
                    widths.push(w);
                }
            }
            DecayProfile::Steps { heights, widths }
        }
        NuDist::TabulatedCdf { x, cdf } => tabulated_h(problem, x, cdf)?,
    };
    h.validate()?;
    let integral = h.integral();
    if !((integral - target).abs() <= INTEGRAL_TOL) {
        return Err(Error::GridTooCoarse(format!("integral of h is {integral}, expected {target}")));
    }
    Ok(h)
}

fn tabulated_h(problem: &PitmanYorProblem, x: &[f64], cdf: &[f64]) -> Result<DecayProfile> {
    let scale = 1.0 - problem.gamma0;
    let top = x[x.len() - 1];
    // lowest point of the positive support, and the density there when it reaches 0
    let zero = problem.nu.zero_mass();
    let k = x.iter().zip(cdf).position(|(v, c)| *v > 0.0 && *c > zero).unwrap_or(x.len() - 1);
    let ramp = k > 0 && cdf[k] > cdf[k - 1] && x[k] > x[k - 1];
    let (bottom, tail_density) = match (ramp, ramp && x[k - 1] == 0.0) {
        (true, true) => ((GRID_DEPTH * top).min(x[k]), Some((cdf[k] - cdf[k - 1]) / x[k])),
        (true, false) => (x[k - 1], None),
        _ => (x[k], None),
    };
    if !(bottom > 0.0) {
        return Err(Error::DegenerateInput("no positive support for nu".into()));
    }
    let mut xs = log_space(bottom, top, problem.grid);
    xs.extend(x.iter().copied().filter(|v| *v >= bottom && *v <= top));
    xs.sort_by(|a, b| b.total_cmp(a));
    xs.dedup();

    let mut knots: Vec<(f64, f64)> = vec![(0.0, top)];
    let mut flat_end: Option<f64> = None;
    for &at in &xs {
        let open = scale * problem.nu.inverse_moment_above(at, false);
        let closed = scale * problem.nu.inverse_moment_above(at, true);
        if !(open.is_finite() && closed.is_finite()) {
            return Err(Error::DivergentInverseMoment(format!("integral of 1/z over [{at}, inf) diverges")));
        }
        for t in [open, closed] {
            let (last_t, last_h) = knots[knots.len() - 1];
            if t > last_t * (1.0 + 1e-12) {
                if let Some(f) = flat_end.take() {
                    if f < last_h {
                        // h jumps down to f right after last_t
                        knots.push((last_t + 1e-9 * (t - last_t), f));
                    }
                }
                knots.push((t, at));
            } else {
                flat_end = Some(at);
            }
        }
    }
    let tail_rate = tail_density.map(|d| 1.0 / (scale * d));
    let (t, h): (Vec<f64>, Vec<f64>) = knots.into_iter().unzip();
    Ok(DecayProfile::Tabulated { t, h, tail_rate })
}

/// Law of `A` as `ν` given `A > 0` and `γ = P(A = 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ALaw {
    pub nu: NuDist,
    pub gamma0: f64,
}

/// Law of `A` with `L(A)(dx) = −λ x h←(dx)` on `(0, ∞)` and the remaining mass at 0.
pub fn h_to_nu(h: &DecayProfile, lambda: f64) -> Result<ALaw> {
    h.validate()?;
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("intensity {lambda} must be positive")));
    }
    let mass = lambda * h.integral();
    // tabulated profiles carry the grid error of `nu_to_h`
    if mass > 1.0 + INTEGRAL_TOL {
        return Err(Error::MassDeficit { total: mass });
    }
    let gamma0 = (1.0 - mass).max(0.0);
    let nu = match h {
        DecayProfile::Exp { amplitude, .. } => NuDist::Uniform { upper: *amplitude },
        DecayProfile::Steps { heights, widths } => {
            let mut atoms: Vec<(f64, f64)> = Vec::new();
            for (hv, w) in heights.iter().zip(widths) {
                let p = lambda * hv * w / mass;
                match atoms.last_mut() {
                    Some(last) if last.0 == *hv => last.1 += p,
                    _ => atoms.push((*hv, p)),
                }
            }
            atoms.reverse();
            NuDist::Atoms { atoms }
        }
        DecayProfile::Tabulated { t, h: hs, tail_rate } => {
            let last = t.len() - 1;
            // (x, cumulative mass) descending in x, then reversed
            let mut pts: Vec<(f64, f64)> = vec![(hs[0], 0.0)];
            let mut acc = 0.0;
            for k in 0..last {
                let dt = t[k + 1] - t[k];
                if hs[k + 1] == hs[k] {
                    acc += lambda * hs[k] * dt;
                    pts.push((hs[k], acc));
                } else {
                    acc += lambda * 0.5 * (hs[k] + hs[k + 1]) * dt;
                    pts.push((hs[k + 1], acc));
                }
            }
            if tail_rate.is_some() {
                pts.push((0.0, mass));
            }
            // CDF(x) = (mass − mass above x) / mass
            let mut x = Vec::with_capacity(pts.len() + 1);
            let mut cdf = Vec::with_capacity(pts.len() + 1);
            let lowest = pts[pts.len() - 1];
            if lowest.0 > 0.0 || (mass - lowest.1) > 0.0 {
                x.push(lowest.0);
                cdf.push(0.0);
            }
            for (v, above) in pts.iter().rev() {
                x.push(*v);
                cdf.push(((mass - above) / mass).clamp(0.0, 1.0));
            }
            let n = cdf.len();
            cdf[n - 1] = 1.0;
            NuDist::TabulatedCdf { x, cdf }
        }
    };
    Ok(ALaw { nu, gamma0 })
}

/// Drift of `T_n = Σ log Aᵢ`; a solution other than `δ₀` exists iff it is
/// `NegativeDrift`.
pub fn check_existence(problem: &PitmanYorProblem, mc_budget: usize, seed: Seed) -> Result<DriftClass> {
    problem.validate()?;
    if problem.zero_probability() > 0.0 {
        return Ok(DriftClass {
            verdict: DriftVerdict::NegativeDrift,
            mean_log: MeanLog::MinusInfinity,
            erickson_statistic: None,
            heavy_positive: false,
            heavy_negative: true,
            samples: 0,
        });
    }
    Ok(match &problem.nu {
        NuDist::Uniform { upper } => classify_drift(&ShiftedExpLogStep { shift: upper.ln() }, mc_budget, seed),
        NuDist::Atoms { atoms } => {
            let step = DiscreteLogStep::new(atoms.iter().map(|a| a.0.ln()).collect(), atoms.iter().map(|a| a.1).collect())?;
            classify_drift(&step, mc_budget, seed)
        }
        nu @ NuDist::TabulatedCdf { .. } => {
            let step = FnLogStep(|rng: &mut ChaCha8Rng| nu.quantile(rng.random()).ln());
            classify_drift(&step, mc_budget, seed)
        }
    })
}

/// Solution of mean `m` by iterating the shot-noise map from `δ_m`.
pub fn solve_pitman_yor(
    problem: &PitmanYorProblem,
    replicas: usize,
    iterations: usize,
    mc_budget: usize,
    seed: Seed,
) -> Result<EmpiricalDist> {
    let drift = check_existence(problem, mc_budget, seed.child(0))?;
    if drift.verdict != DriftVerdict::NegativeDrift {
        return Err(Error::NoSolution(format!("log A has drift verdict {:?}", drift.verdict)));
    }
    let gamma = problem.zero_probability();
    if gamma >= 1.0 {
        return Ok(EmpiricalDist::point_mass(problem.m, replicas));
    }
    let h = nu_to_h(problem)?;
    let shift = problem.m * gamma;
    let start = EmpiricalDist::point_mass(problem.m, 1);
    // the map preserves the mean only in expectation; rescaling keeps the
    // pool mean from drifting over the iterations
    let run = iterate_with(&start, iterations, seed.child(1), |pool, s| {
        let mut pool = pool.clone();
        let factor = problem.m / pool.mean();
        pool.samples.iter_mut().for_each(|x| *x *= factor);
        sample_shot_noise(&h, 1.0, &pool, shift, replicas, s, DEFAULT_TAIL_TOL)
    })?;
    Ok(run.pool)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizeBiasCheck {
    pub ks: f64,
    pub threshold: f64,
    pub pass: bool,
}

/// Two-sample KS distance between `μ̄` and `L(A Ȳ + Y)` with `A`, `Ȳ ~ μ̄`
/// and `Y ~ μ` independent.
pub fn verify_size_bias_equation(
    mu: &EmpiricalDist,
    problem: &PitmanYorProblem,
    replicas: usize,
    threshold: f64,
    seed: Seed,
) -> Result<SizeBiasCheck> {
    problem.validate()?;
    if mu.is_empty() {
        return Err(Error::EmptyPool);
    }
    if !(mu.mean() > 0.0) {
        return Err(Error::ZeroMean);
    }
    let weight = |i: usize| mu.weights.as_ref().map_or(1.0, |w| w[i]);
    let biased = AtomTable::new((0..mu.len()).map(|i| weight(i) * mu.samples[i]));
    let plain = mu.sampler()?;
    let nu = problem.nu.sampler();
    let left = par_draws(replicas, seed.child(0), |rng| mu.samples[biased.sample(rng)]);
    let right = par_draws(replicas, seed.child(1), |rng| {
        let a = problem.draw_a(&nu, rng);
        a * mu.samples[biased.sample(rng)] + plain.draw(rng)
    });
    let ks = ks_distance(&EmpiricalDist::new(left, "size-biased"), &EmpiricalDist::new(right, "A*biased+plain"));
    Ok(SizeBiasCheck { ks, threshold, pass: ks < threshold })
}
