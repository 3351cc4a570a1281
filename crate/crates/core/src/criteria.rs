//! Existence criteria: roots of `t(β) = 1`, drift of the associated random
//! walk, the `I_R` integrals, and the resulting verdict.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::Estimate;
use crate::lst::LSTGrid;
use crate::models::{
    t_beta, validate_model, AtomTable, DecayProfile, ModelKind, PointSampler, SpineSampler, WeightModel,
    DEFAULT_TAIL_TOL,
};
use crate::montecarlo::prefix_means_stable;
use crate::seed::{par_draws, par_replicas, Seed};

/// Default root search interval `(lo, hi]`.
pub const ROOT_SEARCH: (f64, f64) = (1e-3, 8.0);
/// Realizations drawn once to evaluate `t` for models without closed forms.
pub const ROOT_BUDGET: usize = 20_000;
/// Roots closer than this are merged.
const ROOT_MERGE: f64 = 1e-9;
/// A minimum of `t` within this of 1 is a double root.
const TANGENT_TOL: f64 = 1e-12;
/// Ratio of partial one-sided means beyond which a tail counts as heavy.
pub const HEAVY_RATIO: f64 = 1.25;
/// Relative agreement of prefix estimates for a "finite" verdict.
pub const STABLE_REL: f64 = 0.1;
/// An exact drift within this of zero is treated as zero.
const ZERO_DRIFT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BetaRoots {
    pub roots: Vec<f64>,
    pub bracket: (f64, f64),
    /// `|t(r) − 1|` for each root.
    pub residuals: Vec<f64>,
    /// Location and value of the minimum of `t` on the bracket.
    pub argmin: f64,
    pub t_min: f64,
}

impl BetaRoots {
    pub fn beta1(&self) -> f64 {
        self.roots[0]
    }
}

/// Evaluates `t` either in closed form or on a fixed set of realizations, so
/// that the function is deterministic and convex in `β`.
struct TFunction {
    model: WeightModel,
    realizations: Option<Vec<Vec<f64>>>,
}

impl TFunction {
    fn new(model: &WeightModel, budget: usize, seed: Seed) -> Result<Self> {
        let realizations = if model.exact_power_moments(1.0).is_some() {
            None
        } else {
            Some(realizations(model, budget, seed)?)
        };
        Ok(TFunction { model: model.clone(), realizations })
    }

    fn eval(&self, beta: f64) -> f64 {
        match &self.realizations {
            None => t_beta(&self.model, beta, 2, Seed(0)).map(|e| e.value).unwrap_or(f64::INFINITY),
            Some(rs) => {
                let total: f64 = rs.iter().map(|w| w.iter().map(|x| x.powf(beta)).sum::<f64>()).sum();
                total / rs.len() as f64
            }
        }
    }
}

pub(crate) fn realizations(model: &WeightModel, count: usize, seed: Seed) -> Result<Vec<Vec<f64>>> {
    let sampler = PointSampler::new(model, DEFAULT_TAIL_TOL)?;
    Ok(par_replicas(count, |i| {
        let mut w = Vec::new();
        sampler.fill(&mut seed.rng(i as u64), &mut w);
        w
    }))
}

/// All roots of `t(β) = 1` on the default interval.
pub fn solve_beta_roots(model: &WeightModel, search_max: f64) -> Result<BetaRoots> {
    solve_beta_roots_in(model, ROOT_SEARCH.0, search_max, ROOT_BUDGET, Seed(0))
}

/// Roots of `t(β) = 1` on `(lo, hi]`: golden-section search for the minimum
/// of the convex `t`, then bisection on each flank.
pub fn solve_beta_roots_in(model: &WeightModel, lo: f64, hi: f64, budget: usize, seed: Seed) -> Result<BetaRoots> {
    validate_model(model)?;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidArgument(format!("bad search interval ({lo}, {hi}]")));
    }
    let t = TFunction::new(model, budget, seed)?;
    let f = |b: f64| {
        let v = t.eval(b);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let (argmin, t_min) = golden_min(&f, lo, hi);
    if !t_min.is_finite() {
        return Err(Error::EvaluationFailed(format!("t is not finite on ({lo}, {hi}]")));
    }
    if t_min > 1.0 + TANGENT_TOL {
        return Err(Error::NoRoot { lo, hi });
    }
    let mut roots = Vec::new();
    if t_min >= 1.0 - TANGENT_TOL {
        roots.push(argmin);
    } else {
        if f(lo) > 1.0 {
            roots.push(bisect(&f, lo, argmin));
        }
        if f(hi) > 1.0 {
            roots.push(bisect(&f, argmin, hi));
        } else if f(hi) == 1.0 {
            roots.push(hi);
        }
    }
    roots.dedup_by(|a, b| (*a - *b).abs() < ROOT_MERGE);
    if roots.is_empty() {
        return Err(Error::NoRoot { lo, hi });
    }
    let residuals = roots.iter().map(|r| (f(*r) - 1.0).abs()).collect();
    Ok(BetaRoots { roots, bracket: (lo, hi), residuals, argmin, t_min })
}

fn golden_min<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a <= 1e-15 * b.abs().max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    // the minimum may sit at an end of the interval
    [(a, f(a)), (b, f(b)), (c, fc), (d, fd)]
        .into_iter()
        .fold((a, f64::INFINITY), |best, p| if p.1 < best.1 { p } else { best })
}

/// Bisection for `f = 1` on `[a, b]` where `f − 1` changes sign.
fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> f64 {
    let above_at_a = f(a) > 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if (f(mid) > 1.0) == above_at_a {
            a = mid;
        } else {
            b = mid;
        }
    }
    let (fa, fb) = ((f(a) - 1.0).abs(), (f(b) - 1.0).abs());
    if fa <= fb {
        a
    } else {
        b
    }
}

/// Source of i.i.d. copies of the log step `R_β = log B^{(β)}`.
pub trait LogStepSampler: Sync {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64;

    /// `E R` when known in closed form.
    fn exact_mean(&self) -> Option<f64> {
        None
    }

    /// `A(x) = ∫₀^x P(R ≤ −y) dy` when known in closed form.
    fn lower_integral(&self, _x: f64) -> Option<f64> {
        None
    }

    /// `(value, probability)` pairs when `R` is finitely supported.
    fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        None
    }
}

/// A finitely supported log step.
#[derive(Debug, Clone)]
pub struct DiscreteLogStep {
    values: Vec<f64>,
    probs: Vec<f64>,
    table: AtomTable,
}

impl DiscreteLogStep {
    /// Masses are normalized to sum to one.
    pub fn new(values: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        let total: f64 = masses.iter().sum();
        if values.is_empty() || values.len() != masses.len() || !(total > 0.0) || masses.iter().any(|m| *m < 0.0) {
            return Err(Error::InvalidArgument("log step needs matching values and nonnegative masses".into()));
        }
        let probs: Vec<f64> = masses.iter().map(|m| m / total).collect();
        let table = AtomTable::new(probs.iter().copied());
        Ok(DiscreteLogStep { values, probs, table })
    }

    pub fn constant(r: f64) -> Self {
        DiscreteLogStep::new(vec![r], vec![1.0]).unwrap()
    }
}

impl LogStepSampler for DiscreteLogStep {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.values[self.table.sample(rng)]
    }

    fn exact_mean(&self) -> Option<f64> {
        Some(self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum())
    }

    fn lower_integral(&self, x: f64) -> Option<f64> {
        Some(self.values.iter().zip(&self.probs).map(|(v, p)| p * (-v).max(0.0).min(x)).sum())
    }

    fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        Some(self.values.iter().copied().zip(self.probs.iter().copied()).collect())
    }
}

/// `R = shift − E` with `E ~ Exp(1)`; `log U` for uniform `U` is `shift = 0`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedExpLogStep {
    pub shift: f64,
}

impl LogStepSampler for ShiftedExpLogStep {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.random();
        self.shift + (1.0 - u).ln()
    }

    fn exact_mean(&self) -> Option<f64> {
        Some(self.shift - 1.0)
    }

    fn lower_integral(&self, x: f64) -> Option<f64> {
        // P(R ≤ −y) = min(1, exp(−(shift + y)))
        let c = self.shift;
        let flat = (-c).max(0.0).min(x);
        let rest = x - flat;
        Some(flat + (-(c + flat)).exp() * (-(-rest).exp_m1()))
    }
}

/// Log step drawn by an arbitrary closure.
pub struct FnLogStep<F>(pub F);

impl<F: Fn(&mut ChaCha8Rng) -> f64 + Sync> LogStepSampler for FnLogStep<F> {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        (self.0)(rng)
    }
}

/// `R_β` sampled from a fixed pool of realizations, each point weighted by `x^β`.
struct PooledLogStep {
    logs: Vec<f64>,
    table: AtomTable,
}

impl LogStepSampler for PooledLogStep {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.logs[self.table.sample(rng)]
    }
}

/// The law of `R_β = log M` under the size-biased spine measure.
pub fn log_step_sampler(model: &WeightModel, beta: f64, seed: Seed) -> Result<Box<dyn LogStepSampler>> {
    validate_model(model)?;
    let discrete = |pairs: Vec<(f64, f64)>| -> Result<Box<dyn LogStepSampler>> {
        let (values, masses) = pairs.into_iter().filter(|p| p.0 > 0.0 && p.1 > 0.0).map(|(x, m)| (beta * x.ln(), m)).unzip();
        Ok(Box::new(DiscreteLogStep::new(values, masses)?))
    };
    match (&model.kind, model.exact_moments) {
        (ModelKind::FixedWeights { weights }, true) => discrete(weights.iter().map(|w| (*w, w.powf(beta))).collect()),
        (ModelKind::CommonRandomWeight { count, atoms }, true) => {
            discrete(atoms.iter().map(|(a, p)| (*a, *count as f64 * p * a.powf(beta))).collect())
        }
        (ModelKind::RandomCountFixedWeight { weight, .. }, true) => discrete(vec![(*weight, 1.0)]),
        (ModelKind::ShotNoise { profile, intensity }, _) => match profile {
            DecayProfile::Exp { amplitude, .. } => Ok(Box::new(ShiftedExpLogStep { shift: beta * amplitude.ln() })),
            DecayProfile::Steps { heights, widths } => {
                discrete(heights.iter().zip(widths).map(|(h, w)| (*h, intensity * w * h.powf(beta))).collect())
            }
            DecayProfile::Tabulated { .. } => {
                let tilted = profile.tilted(beta);
                let profile = profile.clone();
                Ok(Box::new(FnLogStep(move |rng: &mut ChaCha8Rng| beta * profile.eval(tilted.sample(rng)).ln())))
            }
        },
        _ => {
            let rs = realizations(model, ROOT_BUDGET, seed)?;
            let points: Vec<f64> = rs.into_iter().flatten().filter(|x| *x > 0.0).collect();
            let table = AtomTable::new(points.iter().map(|x| x.powf(beta)));
            let logs = points.iter().map(|x| beta * x.ln()).collect();
            Ok(Box::new(PooledLogStep { logs, table }))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftVerdict {
    NegativeDrift,
    Oscillating,
    PositiveDrift,
    Inconclusive,
}

/// `E R`, or which way it diverges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MeanLog {
    Finite(Estimate),
    PlusInfinity,
    MinusInfinity,
    /// Both one-sided means infinite.
    Undefined,
}

impl MeanLog {
    pub fn is_finite(&self) -> bool {
        matches!(self, MeanLog::Finite(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftClass {
    pub verdict: DriftVerdict,
    pub mean_log: MeanLog,
    pub erickson_statistic: Option<Estimate>,
    pub heavy_positive: bool,
    pub heavy_negative: bool,
    pub samples: usize,
}

/// Empirical `A(x) = ∫₀^x P(R ≤ −y) dy = E min(R⁻, x)`.
struct LowerIntegral {
    sorted: Vec<f64>,
    prefix: Vec<f64>,
    n: f64,
}

impl LowerIntegral {
    fn new(draws: &[f64]) -> Self {
        let mut sorted: Vec<f64> = draws.iter().map(|r| (-r).max(0.0)).collect();
        sorted.sort_by(f64::total_cmp);
        let mut prefix = Vec::with_capacity(sorted.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in &sorted {
            acc += v;
            prefix.push(acc);
        }
        LowerIntegral { n: draws.len() as f64, sorted, prefix }
    }

    fn eval(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|v| *v <= x);
        (self.prefix[k] + x * (self.sorted.len() - k) as f64) / self.n
    }
}

fn lower_integral_fn<'a>(sampler: &'a dyn LogStepSampler, draws: &[f64]) -> Box<dyn Fn(f64) -> f64 + 'a> {
    if sampler.lower_integral(1.0).is_some() {
        Box::new(move |x| sampler.lower_integral(x).unwrap())
    } else {
        let table = LowerIntegral::new(draws);
        Box::new(move |x| table.eval(x))
    }
}

fn heavy(parts: &[f64]) -> bool {
    let n = parts.len();
    let mean = |k: usize| parts[..k].iter().sum::<f64>() / k as f64;
    let (a, b, c) = (mean(n / 4), mean(n / 2), mean(n));
    (a > 0.0 && b / a > HEAVY_RATIO) || (b > 0.0 && c / b > HEAVY_RATIO)
}

/// Classifies the random walk with steps `R`.
///
/// Closed-form means decide by sign. Otherwise a tail is heavy when its
/// partial mean grows by more than [`HEAVY_RATIO`] between sample sizes
/// `N/4, N/2, N`; when both tails are heavy the statistic
/// `E R⁺ / A(R⁺)` decides, with `A(x) = ∫₀^x P(R ≤ −y) dy`.
pub fn classify_drift(sampler: &dyn LogStepSampler, mc_budget: usize, seed: Seed) -> DriftClass {
    if let Some(mean) = sampler.exact_mean() {
        let verdict = if mean.abs() <= ZERO_DRIFT {
            DriftVerdict::Oscillating
        } else if mean < 0.0 {
            DriftVerdict::NegativeDrift
        } else {
            DriftVerdict::PositiveDrift
        };
        return DriftClass {
            verdict,
            mean_log: MeanLog::Finite(Estimate::exact(mean)),
            erickson_statistic: None,
            heavy_positive: false,
            heavy_negative: false,
            samples: 0,
        };
    }
    let n = mc_budget.max(16);
    let draws = par_draws(n, seed, |rng| sampler.draw(rng));
    let pos: Vec<f64> = draws.iter().map(|r| r.max(0.0)).collect();
    let neg: Vec<f64> = draws.iter().map(|r| (-r).max(0.0)).collect();
    let (heavy_positive, heavy_negative) = (heavy(&pos), heavy(&neg));
    let mut erickson_statistic = None;
    let (verdict, mean_log) = match (heavy_positive, heavy_negative) {
        (false, false) => {
            let e = Estimate::from_samples(&draws);
            let v = if e.value < -4.0 * e.std_error {
                DriftVerdict::NegativeDrift
            } else if e.value > 4.0 * e.std_error {
                DriftVerdict::PositiveDrift
            } else {
                DriftVerdict::Oscillating
            };
            (v, MeanLog::Finite(e))
        }
        (true, false) => (DriftVerdict::PositiveDrift, MeanLog::PlusInfinity),
        (false, true) => (DriftVerdict::NegativeDrift, MeanLog::MinusInfinity),
        (true, true) => {
            let a = lower_integral_fn(sampler, &draws);
            let terms: Vec<f64> = pos
                .iter()
                .map(|x| if *x > 0.0 { x / a(*x) } else { 0.0 })
                .collect();
            let finite = terms.iter().all(|t| t.is_finite()) && prefix_means_stable(&terms, STABLE_REL);
            erickson_statistic = Some(Estimate::from_samples(&terms));
            let v = if finite { DriftVerdict::NegativeDrift } else { DriftVerdict::Inconclusive };
            (v, MeanLog::Undefined)
        }
    };
    DriftClass { verdict, mean_log, erickson_statistic, heavy_positive, heavy_negative, samples: n }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Finiteness {
    Finite,
    SuspectInfinite,
}

/// An estimate of an expectation that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FiniteEstimate {
    #[serde(flatten)]
    pub estimate: Estimate,
    pub verdict: Finiteness,
}

impl FiniteEstimate {
    pub fn is_finite(&self) -> bool {
        self.verdict == Finiteness::Finite
    }

    pub(crate) fn exact(value: f64) -> Self {
        let verdict = if value.is_finite() { Finiteness::Finite } else { Finiteness::SuspectInfinite };
        FiniteEstimate { estimate: Estimate::exact(value), verdict }
    }

    /// Sample mean with a prefix-stability verdict.
    pub(crate) fn from_terms(terms: &[f64]) -> Self {
        if terms.iter().any(|t| !t.is_finite()) {
            return FiniteEstimate {
                estimate: Estimate::monte_carlo(f64::INFINITY, f64::INFINITY),
                verdict: Finiteness::SuspectInfinite,
            };
        }
        let verdict = if prefix_means_stable(terms, STABLE_REL) || terms.iter().all(|t| *t == 0.0) {
            Finiteness::Finite
        } else {
            Finiteness::SuspectInfinite
        };
        FiniteEstimate { estimate: Estimate::from_samples(terms), verdict }
    }
}

/// `I_R(σ) = ∫_{(1,∞)} log x / A(log x) σ(dx)` with `A(y) = ∫₀^y P(R ≤ −z) dz`.
#[allow(non_snake_case)]
pub fn compute_IR(
    sampler: &dyn LogStepSampler,
    sigma_samples: &[f64],
    mc_budget: usize,
    seed: Seed,
) -> Result<FiniteEstimate> {
    if sigma_samples.is_empty() {
        return Err(Error::InvalidArgument("sigma sample is empty".into()));
    }
    let draws = if sampler.lower_integral(1.0).is_some() {
        Vec::new()
    } else {
        par_draws(mc_budget.max(16), seed, |rng| sampler.draw(rng))
    };
    let a = lower_integral_fn(sampler, &draws);
    let terms: Vec<f64> = sigma_samples
        .iter()
        .map(|x| {
            if *x > 1.0 {
                let y = x.ln();
                let d = a(y);
                if d > 0.0 {
                    y / d
                } else {
                    f64::INFINITY
                }
            } else {
                0.0
            }
        })
        .collect();
    Ok(FiniteEstimate::from_terms(&terms))
}

/// Draws from the size-biased law of `Σ Xᵢ^β`.
pub fn size_biased_sums(model: &WeightModel, beta: f64, count: usize, seed: Seed) -> Result<Vec<f64>> {
    if model.exact_moments {
        let spine = SpineSampler::new(model, beta, 1, seed.child(1))?;
        return Ok(par_draws(count, seed, |rng| spine.sample(rng).n(beta)));
    }
    let sums: Vec<f64> =
        realizations(model, count, seed.child(2))?.iter().map(|w| w.iter().map(|x| x.powf(beta)).sum()).collect();
    let table = AtomTable::new(sums.iter().copied());
    Ok(par_draws(count, seed, |rng| sums[table.sample(rng)]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExistenceCase {
    A,
    B,
    C,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriteriaReport {
    pub beta_roots: BetaRoots,
    pub drift: DriftClass,
    pub i_r_sigma: FiniteEstimate,
    pub i_r_chi: Option<FiniteEstimate>,
    pub xlogx: Option<FiniteEstimate>,
    pub theorem2_case: ExistenceCase,
    pub exists: bool,
    pub alpha: Option<f64>,
}

/// Evaluates the existence criteria at the smallest root `β₁` of `t(β) = 1`.
pub fn theorem2_verdict(model: &WeightModel, mc_budget: usize, seed: Seed) -> Result<CriteriaReport> {
    let beta_roots = solve_beta_roots_in(model, ROOT_SEARCH.0, ROOT_SEARCH.1, ROOT_BUDGET, seed.child(10))?;
    let beta = beta_roots.beta1();
    let sampler = log_step_sampler(model, beta, seed.child(11))?;
    let drift = classify_drift(sampler.as_ref(), mc_budget, seed.child(12));
    let sigma = size_biased_sums(model, beta, mc_budget, seed.child(13))?;
    let i_r_sigma = compute_IR(sampler.as_ref(), &sigma, mc_budget, seed.child(14))?;
    let xlogx = if drift.mean_log.is_finite() {
        let lplus = |x: f64| x.ln().max(0.0);
        Some(match model.exact_sum_expectation(beta, |n| n * lplus(n)) {
            Some(v) => FiniteEstimate::exact(v),
            None => FiniteEstimate::from_terms(&sigma.iter().map(|x| lplus(*x)).collect::<Vec<_>>()),
        })
    } else {
        None
    };
    let i_r_chi = if drift.mean_log == MeanLog::Undefined {
        let chi = par_draws(mc_budget, seed.child(15), |rng| sampler.draw(rng).exp());
        Some(compute_IR(sampler.as_ref(), &chi, mc_budget, seed.child(16))?)
    } else {
        None
    };
    let negative = drift.verdict == DriftVerdict::NegativeDrift;
    let theorem2_case = match (negative, drift.mean_log) {
        (true, MeanLog::Finite(_)) if xlogx.is_some_and(|x| x.is_finite()) => ExistenceCase::A,
        (true, MeanLog::MinusInfinity) if i_r_sigma.is_finite() => ExistenceCase::B,
        (true, MeanLog::Undefined) if i_r_sigma.is_finite() && i_r_chi.is_some_and(|x| x.is_finite()) => {
            ExistenceCase::C
        }
        _ => ExistenceCase::None,
    };
    // α-elementary fixed points need α = β₁ ∈ (0, 1]
    let exists = negative && i_r_sigma.is_finite() && beta <= 1.0 + ROOT_MERGE;
    let alpha = exists.then_some(beta);
    Ok(CriteriaReport { beta_roots, drift, i_r_sigma, i_r_chi, xlogx, theorem2_case, exists, alpha })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularVariation {
    pub exponent: f64,
    pub residual: f64,
    pub expected: f64,
}

/// Index of regular variation of `1 − φ` at zero, fitted from
/// `(1 − φ(sz)) / (1 − φ(s))` for `z ∈ {2, 4, 8}` at the ten smallest arguments.
pub fn check_regular_variation(lst: &LSTGrid, beta_expected: f64) -> Result<RegularVariation> {
    const POINTS: usize = 10;
    if lst.len() < POINTS {
        return Err(Error::GridTooCoarse(format!("{} arguments", lst.len())));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for &s in &lst.args[..POINTS] {
        let base = lst.gap(s);
        if !(base > 0.0) {
            return Err(Error::GridTooCoarse(format!("1 - phi vanishes at s = {s}")));
        }
        for z in [2.0f64, 4.0, 8.0] {
            xs.push(z.ln());
            ys.push((lst.gap(s * z) / base).ln());
        }
    }
    // the ratio is 1 at z = 1, so the fit goes through the origin
    let exponent = xs.iter().zip(&ys).map(|(x, y)| x * y).sum::<f64>() / xs.iter().map(|x| x * x).sum::<f64>();
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - exponent * x).abs()).fold(0.0, f64::max);
    Ok(RegularVariation { exponent, residual, expected: beta_expected })
}
