//! Weight models: the point process `{Xᵢ}` driving the smoothing transform.

mod profile;

pub use profile::{DecayProfile, PowerTail, TiltedSampler};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::seed::{par_replicas, Seed};

/// Horizons beyond this are treated as unbounded.
pub const MAX_HORIZON: f64 = 1e6;
/// Default `tail_tol` for shot-noise truncation.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
/// Condition D tolerance for exact models.
pub const CONDITION_D_TOL: f64 = 1e-6;

fn yes() -> bool {
    true
}

/// Law of the number of points `L` on `{1, 2, …}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum CountLaw {
    Atoms { atoms: Vec<(u64, f64)> },
    /// `P(L = k) = (1 − q) q^{k−1}`.
    Geometric { q: f64 },
}

impl CountLaw {
    fn validate(&self) -> Result<()> {
        match self {
            CountLaw::Atoms { atoms } => {
                if atoms.is_empty() || atoms.iter().any(|(k, p)| *k == 0 || !(*p >= 0.0)) {
                    return Err(Error::InvalidModel("count atoms must be on {1,2,..} with nonnegative mass".into()));
                }
                check_probabilities(atoms.iter().map(|a| a.1))
            }
            CountLaw::Geometric { q } => {
                if !(*q > 0.0 && *q < 1.0) {
                    return Err(Error::InvalidModel(format!("geometric q = {q} outside (0,1)")));
                }
                Ok(())
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            CountLaw::Atoms { atoms } => atoms.iter().map(|(k, p)| *k as f64 * p).sum(),
            CountLaw::Geometric { q } => 1.0 / (1.0 - q),
        }
    }

    /// `E f(L)`; geometric series are summed until terms are negligible.
    pub fn expect<F: Fn(u64) -> f64>(&self, f: F) -> f64 {
        match self {
            CountLaw::Atoms { atoms } => atoms.iter().map(|(k, p)| p * f(*k)).sum(),
            CountLaw::Geometric { q } => {
                let mut acc = 0.0;
                let mut mass = 1.0 - q;
                for k in 1..5_000_000u64 {
                    let term = mass * f(k);
                    acc += term;
                    if k > 20 && term.abs() <= 1e-18 * acc.abs() {
                        break;
                    }
                    mass *= q;
                    if mass == 0.0 {
                        break;
                    }
                }
                acc
            }
        }
    }

    /// Probability generating function `E z^L` for `z ∈ [0, 1]`.
    pub fn pgf(&self, z: f64) -> f64 {
        match self {
            CountLaw::Atoms { atoms } => atoms.iter().map(|(k, p)| p * z.powi(*k as i32)).sum(),
            CountLaw::Geometric { q } => (1.0 - q) * z / (1.0 - q * z),
        }
    }
}

/// The four supported point-process families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    /// Deterministic weights.
    FixedWeights { weights: Vec<f64> },
    /// `count` copies of one random weight with the given atoms `(value, prob)`.
    CommonRandomWeight { count: u64, atoms: Vec<(f64, f64)> },
    /// A random number `L` of copies of a fixed weight.
    RandomCountFixedWeight { count: CountLaw, weight: f64 },
    /// `Xᵢ = h(τᵢ)` for a rate-`intensity` Poisson flow `τᵢ`.
    ShotNoise { profile: DecayProfile, intensity: f64 },
}

/// A weight model with optional closed-form moments and lattice span.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightModel {
    #[serde(flatten)]
    pub kind: ModelKind,
    /// Use closed-form moment evaluators where they exist.
    #[serde(default = "yes")]
    pub exact_moments: bool,
    /// Declared span `ς` when the log-weights live on a lattice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice_span: Option<f64>,
}

impl WeightModel {
    pub fn new(kind: ModelKind) -> Self {
        WeightModel { kind, exact_moments: true, lattice_span: None }
    }

    pub fn fixed(weights: Vec<f64>) -> Self {
        Self::new(ModelKind::FixedWeights { weights })
    }

    pub fn common(count: u64, atoms: Vec<(f64, f64)>) -> Self {
        Self::new(ModelKind::CommonRandomWeight { count, atoms })
    }

    pub fn geometric(q: f64, weight: f64) -> Self {
        Self::new(ModelKind::RandomCountFixedWeight { count: CountLaw::Geometric { q }, weight })
    }

    pub fn random_count(atoms: Vec<(u64, f64)>, weight: f64) -> Self {
        Self::new(ModelKind::RandomCountFixedWeight { count: CountLaw::Atoms { atoms }, weight })
    }

    pub fn shot_noise(profile: DecayProfile, intensity: f64) -> Self {
        Self::new(ModelKind::ShotNoise { profile, intensity })
    }

    /// Forces Monte Carlo evaluation of all moment functionals.
    pub fn without_exact_moments(mut self) -> Self {
        self.exact_moments = false;
        self
    }

    pub fn with_lattice_span(mut self, span: f64) -> Self {
        self.lattice_span = Some(span);
        self
    }

    pub fn is_shot_noise(&self) -> bool {
        matches!(self.kind, ModelKind::ShotNoise { .. })
    }

    /// `E L`; infinite for shot noise with unbounded support.
    pub fn mean_count(&self) -> f64 {
        match &self.kind {
            ModelKind::FixedWeights { weights } => weights.len() as f64,
            ModelKind::CommonRandomWeight { count, .. } => *count as f64,
            ModelKind::RandomCountFixedWeight { count, .. } => count.mean(),
            ModelKind::ShotNoise { profile, intensity } => match profile.support_end() {
                Some(end) => intensity * end,
                None => f64::INFINITY,
            },
        }
    }

    /// True when closed forms are used for the finite-model functionals.
    fn exact_finite(&self) -> bool {
        self.exact_moments && !self.is_shot_noise()
    }

    /// `E f(Σ Xᵢ^β)` in closed form for finite models.
    pub fn exact_sum_expectation<F: Fn(f64) -> f64>(&self, beta: f64, f: F) -> Option<f64> {
        if !self.exact_finite() {
            return None;
        }
        Some(match &self.kind {
            ModelKind::FixedWeights { weights } => f(weights.iter().map(|w| w.powf(beta)).sum()),
            ModelKind::CommonRandomWeight { count, atoms } => {
                atoms.iter().map(|(a, p)| p * f(*count as f64 * a.powf(beta))).sum()
            }
            ModelKind::RandomCountFixedWeight { count, weight } => {
                let wb = weight.powf(beta);
                count.expect(|k| f(k as f64 * wb))
            }
            ModelKind::ShotNoise { .. } => unreachable!(),
        })
    }

    /// `(t(β), t'(β))` in closed form, when available.
    pub(crate) fn exact_power_moments(&self, beta: f64) -> Option<(f64, f64)> {
        match &self.kind {
            ModelKind::ShotNoise { profile, intensity } => Some((
                intensity * profile.power_integral(beta),
                intensity * profile.power_log_integral(beta),
            )),
            _ if !self.exact_moments => None,
            ModelKind::FixedWeights { weights } => Some(weights.iter().fold((0.0, 0.0), |(a, b), w| {
                let p = w.powf(beta);
                (a + p, b + p * w.ln())
            })),
            ModelKind::CommonRandomWeight { count, atoms } => {
                let c = *count as f64;
                Some(atoms.iter().fold((0.0, 0.0), |(a, b), (x, p)| {
                    let v = p * x.powf(beta);
                    (a + c * v, b + c * v * x.ln())
                }))
            }
            ModelKind::RandomCountFixedWeight { count, weight } => {
                let v = count.mean() * weight.powf(beta);
                Some((v, v * weight.ln()))
            }
        }
    }
}

fn check_probabilities<I: Iterator<Item = f64>>(probs: I) -> Result<()> {
    let total: f64 = probs.sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidModel(format!("probabilities sum to {total}, not 1")));
    }
    Ok(())
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

/// Rejects malformed, degenerate, and subcritical models.
pub fn validate_model(model: &WeightModel) -> Result<()> {
    if let Some(span) = model.lattice_span {
        if !positive(span) {
            return Err(Error::InvalidModel(format!("lattice span {span} must be positive")));
        }
    }
    match &model.kind {
        ModelKind::FixedWeights { weights } => {
            if weights.is_empty() || !weights.iter().all(|w| positive(*w)) {
                return Err(Error::InvalidModel("fixed weights must be a nonempty list of positive reals".into()));
            }
            if weights.iter().all(|w| *w == 1.0) {
                return Err(Error::DegenerateWeights);
            }
        }
        ModelKind::CommonRandomWeight { count, atoms } => {
            if *count == 0 || atoms.is_empty() {
                return Err(Error::InvalidModel("common weight needs count >= 1 and atoms".into()));
            }
            if !atoms.iter().all(|(a, p)| positive(*a) && *p >= 0.0) {
                return Err(Error::InvalidModel("atom values must be positive, masses nonnegative".into()));
            }
            check_probabilities(atoms.iter().map(|a| a.1))?;
            if atoms.iter().all(|(a, p)| *a == 1.0 || *p == 0.0) {
                return Err(Error::DegenerateWeights);
            }
        }
        ModelKind::RandomCountFixedWeight { count, weight } => {
            count.validate()?;
            if !positive(*weight) {
                return Err(Error::InvalidModel("weight must be positive".into()));
            }
            if *weight == 1.0 {
                return Err(Error::DegenerateWeights);
            }
        }
        ModelKind::ShotNoise { profile, intensity } => {
            if !positive(*intensity) {
                return Err(Error::InvalidModel("intensity must be positive".into()));
            }
            profile.validate()?;
            if profile.is_unit_valued() {
                return Err(Error::DegenerateWeights);
            }
        }
    }
    let mean_count = model.mean_count();
    if mean_count <= 1.0 {
        return Err(Error::SubcriticalCount { mean_count });
    }
    Ok(())
}

/// A finite representation of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSample {
    /// Weights in nonincreasing order.
    pub weights: Vec<f64>,
    /// Upper bound on `E Σ_{i>K} Xᵢ` of the discarded points.
    pub truncation_bound: f64,
}

/// Index sampling from a finite table of masses.
#[derive(Debug, Clone)]
pub struct AtomTable {
    cum: Vec<f64>,
}

impl AtomTable {
    pub fn new<I: IntoIterator<Item = f64>>(masses: I) -> Self {
        let mut acc = 0.0;
        let cum = masses
            .into_iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        AtomTable { cum }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.pick(rng.random::<f64>())
    }

    /// Index selected by the uniform variate `u ∈ [0, 1)`.
    pub fn pick(&self, u: f64) -> usize {
        let u = u * self.cum[self.cum.len() - 1];
        self.cum.partition_point(|c| *c <= u).min(self.cum.len() - 1)
    }
}

#[derive(Debug, Clone)]
enum Source {
    Fixed(Vec<f64>),
    Common { count: usize, values: Vec<f64>, table: AtomTable },
    Count { law: CountSampler, weight: f64 },
    Shot { profile: DecayProfile, intensity: f64, horizon: f64, bound: f64 },
}

#[derive(Debug, Clone)]
enum CountSampler {
    Atoms { counts: Vec<u64>, table: AtomTable },
    Geometric(Geometric, f64),
}

impl CountSampler {
    fn new(law: &CountLaw) -> Self {
        match law {
            CountLaw::Atoms { atoms } => CountSampler::Atoms {
                counts: atoms.iter().map(|a| a.0).collect(),
                table: AtomTable::new(atoms.iter().map(|a| a.1)),
            },
            CountLaw::Geometric { q } => CountSampler::Geometric(Geometric::new(1.0 - q).unwrap(), *q),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            CountSampler::Atoms { counts, table } => counts[table.sample(rng)],
            CountSampler::Geometric(g, _) => 1 + g.sample(rng),
        }
    }

    /// Count at the uniform variate `u ∈ [0, 1)` (inverse distribution function).
    fn at(&self, u: f64) -> u64 {
        match self {
            CountSampler::Atoms { counts, table } => counts[table.pick(u)],
            // P(L > k) = q^k
            CountSampler::Geometric(_, q) => 1 + ((-u).ln_1p() / q.ln()).floor() as u64,
        }
    }
}

/// Draws realizations of a validated model.
#[derive(Debug, Clone)]
pub struct PointSampler {
    source: Source,
}

impl PointSampler {
    pub fn new(model: &WeightModel, tail_tol: f64) -> Result<Self> {
        if !positive(tail_tol) {
            return Err(Error::InvalidArgument(format!("tail_tol = {tail_tol} must be positive")));
        }
        let source = match &model.kind {
            ModelKind::FixedWeights { weights } => {
                let mut w = weights.clone();
                w.sort_by(|a, b| b.total_cmp(a));
                Source::Fixed(w)
            }
            ModelKind::CommonRandomWeight { count, atoms } => Source::Common {
                count: *count as usize,
                values: atoms.iter().map(|a| a.0).collect(),
                table: AtomTable::new(atoms.iter().map(|a| a.1)),
            },
            ModelKind::RandomCountFixedWeight { count, weight } => {
                Source::Count { law: CountSampler::new(count), weight: *weight }
            }
            ModelKind::ShotNoise { profile, intensity } => {
                let horizon = profile.horizon(tail_tol / intensity);
                if !(horizon <= MAX_HORIZON) {
                    return Err(Error::HorizonUnbounded { tail_tol, max_horizon: MAX_HORIZON });
                }
                let bound = intensity * profile.tail_integral(horizon);
                Source::Shot { profile: profile.clone(), intensity: *intensity, horizon, bound }
            }
        };
        Ok(PointSampler { source })
    }

    pub fn truncation_bound(&self) -> f64 {
        match &self.source {
            Source::Shot { bound, .. } => *bound,
            _ => 0.0,
        }
    }

    /// Truncation horizon `T` (infinite for finite models).
    pub fn horizon(&self) -> f64 {
        match &self.source {
            Source::Shot { horizon, .. } => *horizon,
            _ => f64::INFINITY,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PointSample {
        let mut weights = Vec::new();
        self.fill(rng, &mut weights);
        PointSample { weights, truncation_bound: self.truncation_bound() }
    }

    /// As [`PointSampler::fill`], with the discrete choice of finite models
    /// (weight atom or count) taken at the uniform variate `u` so that callers
    /// can stratify it. Shot-noise flows draw from `rng` only.
    pub fn fill_at<R: Rng + ?Sized>(&self, u: f64, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        match &self.source {
            Source::Common { count, values, table } => out.resize(*count, values[table.pick(u)]),
            Source::Count { law, weight } => out.resize(law.at(u) as usize, *weight),
            _ => self.fill(rng, out),
        }
    }

    /// Writes one realization into `out` (cleared first), nonincreasing.
    pub fn fill<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut Vec<f64>) {
        out.clear();
        match &self.source {
            Source::Fixed(w) => out.extend_from_slice(w),
            Source::Common { count, values, table } => {
                let a = values[table.sample(rng)];
                out.resize(*count, a);
            }
            Source::Count { law, weight } => {
                let k = law.sample(rng) as usize;
                out.resize(k, *weight);
            }
            Source::Shot { profile, intensity, horizon, .. } => {
                poisson_flow(profile, *intensity, *horizon, rng, |_, x| out.push(x));
            }
        }
    }
}

/// Visits `(τ, h(τ))` for the arrivals of a rate-`intensity` flow on `[0, horizon]`,
/// in increasing `τ` and stopping at the first zero weight.
pub fn poisson_flow<R: Rng + ?Sized, F: FnMut(f64, f64)>(
    profile: &DecayProfile,
    intensity: f64,
    horizon: f64,
    rng: &mut R,
    mut visit: F,
) {
    let gap = Exp::new(intensity).unwrap();
    let mut tau = 0.0;
    loop {
        tau += gap.sample(rng);
        if tau > horizon {
            break;
        }
        let x = profile.eval(tau);
        if x <= 0.0 {
            break;
        }
        visit(tau, x);
    }
}

/// One realization of the model.
pub fn sample_points<R: Rng + ?Sized>(model: &WeightModel, rng: &mut R, tail_tol: f64) -> Result<PointSample> {
    Ok(PointSampler::new(model, tail_tol)?.sample(rng))
}

fn guard(name: &str, e: Estimate) -> Result<Estimate> {
    if e.value.is_finite() && e.value.abs() < 1e300 && e.std_error.is_finite() {
        Ok(e)
    } else {
        Err(Error::Divergent(format!("{name} = {}", e.value)))
    }
}

/// Monte Carlo mean of `f(realization)` over `budget` counter-seeded replicas.
pub(crate) fn mc_functional<F>(model: &WeightModel, budget: usize, seed: Seed, f: F) -> Result<(Estimate, f64)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if budget < 2 {
        return Err(Error::InvalidArgument("Monte Carlo budget must be at least 2".into()));
    }
    let sampler = PointSampler::new(model, DEFAULT_TAIL_TOL)?;
    let values = par_replicas(budget, |i| {
        let mut rng: ChaCha8Rng = seed.rng(i as u64);
        let mut w = Vec::new();
        sampler.fill(&mut rng, &mut w);
        f(&w)
    });
    Ok((Estimate::from_samples(&values), sampler.truncation_bound()))
}

/// `t(β) = E Σ Xᵢ^β`.
pub fn t_beta(model: &WeightModel, beta: f64, budget: usize, seed: Seed) -> Result<Estimate> {
    if !positive(beta) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be positive")));
    }
    if let Some((t, _)) = model.exact_power_moments(beta) {
        return guard("t(beta)", Estimate::exact(t));
    }
    let (e, _) = mc_functional(model, budget, seed, |w| w.iter().map(|x| x.powf(beta)).sum())?;
    guard("t(beta)", e)
}

/// `t'(β) = E Σ Xᵢ^β log Xᵢ`.
pub fn t_beta_derivative(model: &WeightModel, beta: f64, budget: usize, seed: Seed) -> Result<Estimate> {
    if !positive(beta) {
        return Err(Error::InvalidArgument(format!("beta = {beta} must be positive")));
    }
    if let Some((_, d)) = model.exact_power_moments(beta) {
        return guard("t'(beta)", Estimate::exact(d));
    }
    let (e, _) = mc_functional(model, budget, seed, |w| w.iter().map(|x| x.powf(beta) * x.ln()).sum())?;
    guard("t'(beta)", e)
}

/// `E(Σ Xᵢ)^p` for `p ≥ 1`.
pub fn sum_weights_moment(model: &WeightModel, p: f64, budget: usize, seed: Seed) -> Result<Estimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidArgument(format!("p = {p} must be >= 1")));
    }
    if let Some(v) = model.exact_sum_expectation(1.0, |s| s.powf(p)) {
        return guard("E(sum X)^p", Estimate::exact(v));
    }
    if let (true, ModelKind::ShotNoise { profile, intensity }) = (model.exact_moments, &model.kind) {
        let mean = intensity * profile.integral();
        if p == 1.0 {
            return guard("E(sum X)^p", Estimate::exact(mean));
        }
        if p == 2.0 {
            let var = intensity * profile.power_integral(2.0);
            return guard("E(sum X)^p", Estimate::exact(var + mean * mean));
        }
    }
    let (e, bound) = mc_functional(model, budget, seed, |w| w.iter().sum::<f64>().powf(p))?;
    // (S + D)^p − S^p ≤ p (S^{p−1} + D^{p−1}) D, first order in the discarded mass D
    let bound = if bound > 0.0 {
        let (lower, _) = mc_functional(model, budget, seed, |w| w.iter().sum::<f64>().powf(p - 1.0))?;
        p * (lower.value + 1.0) * bound
    } else {
        0.0
    };
    guard("E(sum X)^p", e.with_bound(bound))
}

/// Checks `t(β) = 1` at the Condition D tolerance for the model's moment mode.
pub fn check_condition_d(model: &WeightModel, beta: f64, budget: usize, seed: Seed) -> Result<Estimate> {
    let t = t_beta(model, beta, budget, seed)?;
    let tol = match t.provenance {
        crate::Provenance::MonteCarlo => t.tolerance(3.0).max(CONDITION_D_TOL),
        _ => CONDITION_D_TOL,
    };
    if (t.value - 1.0).abs() > tol {
        return Err(Error::ConditionDViolated { beta, t_value: t.value });
    }
    Ok(t)
}

/// Default pool size for realization-level resampling.
pub const DEFAULT_POOL: usize = 1024;

/// One node of the size-biased spine: a realization and the distinguished point.
#[derive(Debug, Clone, PartialEq)]
pub struct SpineNode {
    pub points: Vec<f64>,
    pub chosen: usize,
}

impl SpineNode {
    /// `M = X_chosen^β`.
    pub fn m(&self, beta: f64) -> f64 {
        self.points[self.chosen].powf(beta)
    }

    /// `N = Σ Xᵢ^β`.
    pub fn n(&self, beta: f64) -> f64 {
        self.points.iter().map(|x| x.powf(beta)).sum()
    }
}

#[derive(Debug, Clone)]
enum SpineMode {
    Fixed { weights: Vec<f64>, table: AtomTable },
    Common { count: usize, values: Vec<f64>, table: AtomTable },
    Count { law: SizeBiasedCount, weight: f64 },
    Shot { tilted: TiltedSampler },
    Pool(usize),
}

#[derive(Debug, Clone)]
enum SizeBiasedCount {
    Atoms { counts: Vec<u64>, table: AtomTable },
    /// Sum of two independent geometrics minus one.
    Geometric(Geometric),
}

/// Draws spine nodes: realizations size-biased by `Σ Xᵢ^β` with a point
/// picked proportionally to `Xᵢ^β`.
///
/// When the model has exact moments the size-biased law is sampled
/// directly; otherwise a fresh pool of realizations is resampled.
#[derive(Debug, Clone)]
pub struct SpineSampler {
    beta: f64,
    points: PointSampler,
    mode: SpineMode,
}

impl SpineSampler {
    pub fn new(model: &WeightModel, beta: f64, pool: usize, seed: Seed) -> Result<Self> {
        check_condition_d(model, beta, 20_000, seed)?;
        let points = PointSampler::new(model, DEFAULT_TAIL_TOL)?;
        let mode = if !model.exact_moments {
            SpineMode::Pool(pool.max(1))
        } else {
            match &model.kind {
                ModelKind::FixedWeights { weights } => {
                    let mut weights = weights.clone();
                    weights.sort_by(|a, b| b.total_cmp(a));
                    let table = AtomTable::new(weights.iter().map(|w| w.powf(beta)));
                    SpineMode::Fixed { weights, table }
                }
                ModelKind::CommonRandomWeight { count, atoms } => SpineMode::Common {
                    count: *count as usize,
                    values: atoms.iter().map(|a| a.0).collect(),
                    table: AtomTable::new(atoms.iter().map(|(a, p)| p * a.powf(beta))),
                },
                ModelKind::RandomCountFixedWeight { count, weight } => SpineMode::Count {
                    law: match count {
                        CountLaw::Atoms { atoms } => SizeBiasedCount::Atoms {
                            counts: atoms.iter().map(|a| a.0).collect(),
                            table: AtomTable::new(atoms.iter().map(|(k, p)| *k as f64 * p)),
                        },
                        CountLaw::Geometric { q } => SizeBiasedCount::Geometric(Geometric::new(1.0 - q).unwrap()),
                    },
                    weight: *weight,
                },
                ModelKind::ShotNoise { profile, .. } => SpineMode::Shot { tilted: profile.tilted(beta) },
            }
        };
        Ok(SpineSampler { beta, points, mode })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Truncation bound of the underlying realizations.
    pub fn truncation_bound(&self) -> f64 {
        self.points.truncation_bound()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SpineNode {
        let beta = self.beta;
        match &self.mode {
            SpineMode::Fixed { weights, table } => SpineNode { points: weights.clone(), chosen: table.sample(rng) },
            SpineMode::Common { count, values, table } => {
                let a = values[table.sample(rng)];
                SpineNode { points: vec![a; *count], chosen: rng.random_range(0..*count) }
            }
            SpineMode::Count { law, weight } => {
                let k = match law {
                    SizeBiasedCount::Atoms { counts, table } => counts[table.sample(rng)],
                    SizeBiasedCount::Geometric(g) => 1 + g.sample(rng) + g.sample(rng),
                } as usize;
                SpineNode { points: vec![*weight; k], chosen: rng.random_range(0..k) }
            }
            SpineMode::Shot { tilted } => {
                let mut points = Vec::new();
                self.points.fill(rng, &mut points);
                let extra = match &self.points.source {
                    Source::Shot { profile, .. } => profile.eval(tilted.sample(rng)),
                    _ => unreachable!(),
                };
                points.push(extra);
                let chosen = points.len() - 1;
                SpineNode { points, chosen }
            }
            SpineMode::Pool(pool) => {
                let mut realizations = Vec::with_capacity(*pool);
                for _ in 0..*pool {
                    let mut w = Vec::new();
                    self.points.fill(rng, &mut w);
                    realizations.push(w);
                }
                let table = AtomTable::new(realizations.iter().map(|w| w.iter().map(|x| x.powf(beta)).sum::<f64>()));
                let j = table.sample(rng);
                let points = realizations.swap_remove(j);
                let chosen = AtomTable::new(points.iter().map(|x| x.powf(beta))).sample(rng);
                SpineNode { points, chosen }
            }
        }
    }
}

/// One spine node `(M, N)`: `M ~ χ*_β`, `N` size-biased `Σ Xᵢ^β`.
pub fn sample_size_biased_node<R: Rng + ?Sized>(
    model: &WeightModel,
    beta: f64,
    rng: &mut R,
    pool: usize,
) -> Result<(f64, f64)> {
    let sampler = SpineSampler::new(model, beta, pool, Seed(0x5b1e))?;
    let node = sampler.sample(rng);
    Ok((node.m(beta), node.n(beta)))
}
