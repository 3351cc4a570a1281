//! Scenario runner behind the `smoothfix` binary.
//!
//! A scenario is a JSON file naming a command, a seed, an optional weight
//! model, budgets and command-specific parameters. Results are computed in
//! memory first; `report.json` and the command's CSV files are written only
//! once everything has succeeded.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::criteria::{check_regular_variation, theorem2_verdict};
use crate::error::{Error, Result};
use crate::estimate::{Estimate, Provenance};
use crate::lst::{
    estimate_alpha_m, inverse_stable_transform, picard_iterate, stable_transform, stable_transform_sample, LSTGrid,
    PicardOptions,
};
use crate::models::{t_beta, WeightModel, DEFAULT_TAIL_TOL};
use crate::montecarlo::{
    iterate_population, ks_distance, ks_to_law, simulate_brw_martingale, simulate_spine_perpetuity, ClosedForm,
    EmpiricalDist, DEFAULT_POP_CAP,
};
use crate::pitmanyor::{check_existence, nu_to_h, solve_pitman_yor, verify_size_bias_equation, PitmanYorProblem, SIZE_BIAS_KS};
use crate::seed::Seed;
use crate::tails::{check_moment_condition, compute_cb, fixed_point_pool, hill_estimate, tail_root_b, HILL_FRACTION, HILL_MIN_SAMPLES};

pub const ARTIFACT: &str = env!("CARGO_PKG_NAME");
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const ENV_WORKERS: &str = "SMOOTHFIX_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Criteria,
    IterateLst,
    Simulate,
    Spine,
    Tails,
    Stable,
    PitmanYor,
    Report,
}

fn default_replicas() -> usize {
    100_000
}

fn default_iterations() -> usize {
    50
}

fn default_mc_budget() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_mc_budget")]
    pub mc_budget: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { replicas: default_replicas(), iterations: default_iterations(), mc_budget: default_mc_budget() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub command: Command,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<WeightModel>,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default = "empty_object")]
    pub parameters: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn empty_object() -> Value {
    Value::Object(Map::new())
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.budgets;
        if b.replicas == 0 || b.iterations == 0 || b.mc_budget == 0 {
            return Err(Error::InvalidArgument("budgets must be positive".into()));
        }
        if !self.parameters.is_object() {
            return Err(Error::InvalidArgument("parameters must be a JSON object".into()));
        }
        let needs_model =
            !matches!(self.command, Command::PitmanYor | Command::Report | Command::Stable);
        if needs_model && self.model.is_none() {
            return Err(Error::InvalidArgument(format!("command {:?} needs a model", self.command)));
        }
        if let Some(m) = &self.model {
            crate::models::validate_model(m)?;
        }
        Ok(())
    }

    fn params<P: DeserializeOwned>(&self) -> Result<P> {
        Ok(serde_json::from_value(self.parameters.clone())?)
    }

    fn model(&self) -> Result<&WeightModel> {
        self.model.as_ref().ok_or_else(|| Error::InvalidArgument("model missing".into()))
    }

    /// The scenario as echoed in reports; the output directory is left out so
    /// that reports do not depend on where they are written.
    pub fn echo(&self) -> Value {
        let mut v = serde_json::to_value(self).unwrap_or(Value::Null);
        if let Value::Object(m) = &mut v {
            m.remove("output");
        }
        v
    }
}

/// Computed results of one scenario, not yet written anywhere.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub results: Value,
    /// Provenance of results numbers that are not part of an estimate object.
    pub provenance: BTreeMap<String, String>,
    pub files: Vec<(String, String)>,
    /// False when the computed verdict is negative.
    pub verdict: bool,
}

impl Outcome {
    fn new(results: Value, default: Provenance, rules: &[(&str, Provenance)]) -> Self {
        let provenance = label_numbers(&results, default, rules);
        Outcome { results, provenance, files: Vec::new(), verdict: true }
    }

    fn file(mut self, name: &str, body: String) -> Self {
        self.files.push((name.to_string(), body));
        self
    }

    fn verdict(mut self, ok: bool) -> Self {
        self.verdict = ok;
        self
    }
}

fn provenance_label(p: Provenance) -> &'static str {
    match p {
        Provenance::Exact => "exact",
        Provenance::MonteCarlo => "monte-carlo",
        Provenance::Quadrature => "quadrature",
    }
}

/// Labels every number of `value` that is not inside an object carrying its
/// own `provenance`. Integers are counts and labeled exact; other numbers get
/// the label of the longest matching path prefix in `rules`, else `default`.
fn label_numbers(value: &Value, default: Provenance, rules: &[(&str, Provenance)]) -> BTreeMap<String, String> {
    fn walk(
        v: &Value,
        path: &mut String,
        out: &mut BTreeMap<String, String>,
        default: Provenance,
        rules: &[(&str, Provenance)],
    ) {
        match v {
            Value::Number(n) => {
                let p = if n.is_f64() {
                    rules
                        .iter()
                        .filter(|(prefix, _)| path.starts_with(prefix))
                        .max_by_key(|(prefix, _)| prefix.len())
                        .map_or(default, |r| r.1)
                } else {
                    Provenance::Exact
                };
                out.insert(path.clone(), provenance_label(p).to_string());
            }
            Value::Array(items) => {
                for (i, item) in items.iter().enumerate() {
                    let len = path.len();
                    let _ = write!(path, "/{i}");
                    walk(item, path, out, default, rules);
                    path.truncate(len);
                }
            }
            Value::Object(m) => {
                if m.contains_key("provenance") {
                    return;
                }
                for (k, item) in m {
                    let len = path.len();
                    let _ = write!(path, "/{}", k.replace('~', "~0").replace('/', "~1"));
                    walk(item, path, out, default, rules);
                    path.truncate(len);
                }
            }
            _ => {}
        }
    }
    let mut out = BTreeMap::new();
    walk(value, &mut String::new(), &mut out, default, rules);
    out
}

fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn estimate_of(xs: &[f64]) -> Estimate {
    Estimate::from_samples(xs)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CriteriaParams {
    #[serde(default = "criteria_search_max")]
    search_max: f64,
    #[serde(default = "criteria_t_points")]
    t_points: usize,
}

fn criteria_search_max() -> f64 {
    4.0
}

fn criteria_t_points() -> usize {
    64
}

fn run_criteria(s: &Scenario, seed: Seed) -> Result<Outcome> {
    let p: CriteriaParams = s.params()?;
    if !(p.search_max > 0.0) || p.t_points < 2 {
        return Err(Error::InvalidArgument("search_max must be positive and t_points at least 2".into()));
    }
    let model = s.model()?;
    let report = theorem2_verdict(model, s.budgets.mc_budget, seed)?;
    let mut csv = String::from("beta,t,std_error\n");
    for k in 0..p.t_points {
        let beta = p.search_max * (k + 1) as f64 / p.t_points as f64;
        let (t, se) = match t_beta(model, beta, s.budgets.mc_budget, seed.child(100)) {
            Ok(e) => (e.value, e.std_error),
            Err(_) => (f64::INFINITY, f64::NAN),
        };
        let _ = writeln!(csv, "{beta:e},{t:e},{se:e}");
    }
    let exists = report.exists;
    let results = json!({ "criteria": to_value(&report)? });
    Ok(Outcome::new(results, Provenance::Quadrature, &[("/criteria/alpha", Provenance::Exact)])
        .file("t_beta.csv", csv)
        .verdict(exists))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LstParams {
    #[serde(default = "one")]
    start_mean: f64,
    #[serde(default = "picard_tol")]
    tol: f64,
    /// Compare with the transform `1/(1 + m s)` of an exponential of this mean.
    #[serde(default)]
    reference_mean: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn picard_tol() -> f64 {
    1e-9
}

fn run_iterate_lst(s: &Scenario, seed: Seed) -> Result<Outcome> {
    let p: LstParams = s.params()?;
    if !(p.start_mean > 0.0 && p.tol > 0.0) {
        return Err(Error::InvalidArgument("start_mean and tol must be positive".into()));
    }
    let model = s.model()?;
    let start = LSTGrid::standard(|x| (-p.start_mean * x).exp())?;
    let reference = p.reference_mean.map(|m| move |x: f64| 1.0 / (1.0 + m * x));
    let opts = PicardOptions { max_iter: s.budgets.iterations, tol: p.tol, budget: s.budgets.mc_budget, seed };
    let run = picard_iterate(&start, model, opts, reference.as_ref().map(|f| f as &dyn Fn(f64) -> f64))?;
    let mut trace = String::from("iteration,sup_change,alpha,m,reference_error\n");
    for t in &run.trace {
        let _ = writeln!(trace, "{},{:e},{:e},{:e},{:e}", t.iteration, t.sup_change, t.alpha, t.m, t.reference_error.unwrap_or(f64::NAN));
    }
    let results = json!({
        "converged": run.converged,
        "iterations": run.iterations(),
        "last_change": run.last_change(),
        "fit": to_value(&run.grid.fit)?,
        "reference_error": reference.map(|f| run.grid.sup_error(f)),
    });
    Ok(Outcome::new(results, Provenance::Quadrature, &[]).file("lst.csv", run.grid.to_csv()).file("trace.csv", trace))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateParams {
    #[serde(default = "one")]
    gamma: f64,
    #[serde(default = "generations")]
    generations: usize,
    #[serde(default = "pop_cap")]
    pop_cap: usize,
    #[serde(default)]
    reference: Option<ClosedForm>,
}

fn generations() -> usize {
    12
}

fn pop_cap() -> usize {
    DEFAULT_POP_CAP
}

fn run_simulate(s: &Scenario, seed: Seed) -> Result<Outcome> {
    let p: SimulateParams = s.params()?;
    let model = s.model()?;
    let r = simulate_brw_martingale(model, p.gamma, p.generations, s.budgets.replicas, seed, p.pop_cap)?;
    let dist = EmpiricalDist::new(r.samples.clone(), "brw-martingale");
    let squares: Vec<f64> = r.samples.iter().map(|x| x * x).collect();
    let results = json!({
        "mean": estimate_of(&r.samples),
        "second_moment": estimate_of(&squares),
        "generation": r.generation,
        "gamma": r.gamma,
        "normalization": r.normalization,
        "censored": r.censored,
        "censored_fraction": r.censored_fraction(),
        "truncation_bound": r.truncation_bound,
        "ks_to_reference": p.reference.map(|law| ks_to_law(&dist, law)),
    });
    let rules = [("/gamma", Provenance::Exact), ("/normalization", Provenance::Quadrature)];
    Ok(Outcome::new(results, Provenance::MonteCarlo, &rules).file("samples.csv", dist.to_csv()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpineParams {
    #[serde(default = "one")]
    beta: f64,
    #[serde(default = "spine_depth")]
    depth: usize,
    #[serde(default = "spine_pool")]
    pool: usize,
}

fn spine_depth() -> usize {
    60
}

fn spine_pool() -> usize {
    100_000
}

fn run_spine(s: &Scenario, seed: Seed) -> Result<Outcome> {
    let p: SpineParams = s.params()?;
    let r = simulate_spine_perpetuity(s.model()?, p.beta, p.depth, s.budgets.replicas, seed, p.pool)?;
    let mut csv = String::from("v1,v2,v\n");
    for ((a, b), v) in r.v1.iter().zip(&r.v2).zip(&r.v) {
        let _ = writeln!(csv, "{a:e},{b:e},{v:e}");
    }
    let results = json!({
        "mean_v": r.mean_v,
        "mean_v1": estimate_of(&r.v1),
        "mean_v2": estimate_of(&r.v2),
        "v1_mean_finite": r.v1_mean_finite,
        "early_stops": r.early_stops,
        "depth": r.depth,
        "beta": r.beta,
    });
    Ok(Outcome::new(results, Provenance::Exact, &[]).file("spine.csv", csv))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailsParams {
    #[serde(default)]
    b: Option<f64>,
    #[serde(default = "b_max")]
    b_max: f64,
    #[serde(default = "hill_fraction")]
    k_fraction: f64,
    #[serde(default)]
    write_samples: bool,
}

fn b_max() -> f64 {
    8.0
}

fn hill_fraction() -> f64 {
    HILL_FRACTION
}

fn run_tails(s: &Scenario, seed: Seed) -> Result<Outcome> {
    let p: TailsParams = s.params()?;
    let model = s.model()?;
    let b = match p.b {
        Some(b) => b,
        None => tail_root_b(model, p.b_max)?,
    };
    let pool = fixed_point_pool(model, s.budgets.replicas, s.budgets.iterations, 1.0, seed.child(1))?;
    let report = compute_cb(model, &pool, b, s.budgets.mc_budget, seed.child(2))?;
    let moment = check_moment_condition(model, b, s.budgets.mc_budget, seed.child(3))?;
    let hill = if pool.len() >= HILL_MIN_SAMPLES { Some(hill_estimate(&pool, p.k_fraction)?) } else { None };
    let mut grid = String::from("y,mu_tail,n_tail,diff,diff_se,mu_bar_tail,n_star_tail,star_se\n");
    for g in &report.grid {
        let _ = writeln!(
            grid,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            g.y, g.mu_tail, g.n_tail, g.diff, g.diff_se, g.mu_bar_tail, g.n_star_tail, g.star_se
        );
    }
    let mut plateau = String::from("x,value\n");
    for q in &report.plateau {
        let _ = writeln!(plateau, "{:e},{:e}", q.x, q.value);
    }
    let mut summary = to_value(&report)?;
    if let Value::Object(m) = &mut summary {
        m.remove("grid");
        m.remove("plateau");
    }
    let results = json!({
        "tails": summary,
        "moment": to_value(&moment)?,
        "hill": hill,
        "pool_mean": pool.mean(),
    });
    let rules = [("/tails/b", Provenance::Quadrature), ("/moment/p", Provenance::Quadrature)];
    let mut out = Outcome::new(results, Provenance::MonteCarlo, &rules)
        .file("tail_grid.csv", grid)
        .file("plateau.csv", plateau);
    if p.write_samples {
        out = out.file("samples.csv", pool.to_csv());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum StableBase {
    PointMass,
    FixedPoint,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct StableParams {
    alpha: f64,
    #[serde(default = "stable_base")]
    base: StableBase,
    #[serde(default = "one")]
    mean: f64,
}

fn stable_base() -> StableBase {
    StableBase::PointMass
}

fn run_stable(s: &Scenario, seed: Seed) -> Result<Outcome> {
    let p: StableParams = s.params()?;
    if !(p.mean > 0.0) {
        return Err(Error::InvalidArgument("mean must be positive".into()));
    }
    let start = LSTGrid::standard(|x| (-p.mean * x).exp())?;
    let (grid, sample) = match p.base {
        StableBase::PointMass => (start, EmpiricalDist::point_mass(p.mean, 1)),
        StableBase::FixedPoint => {
            let model = s.model()?;
            let opts = PicardOptions { max_iter: s.budgets.iterations, tol: picard_tol(), budget: s.budgets.mc_budget, seed };
            let run = picard_iterate(&start, model, opts, None)?;
            let seed_pool = EmpiricalDist::point_mass(p.mean, 1);
            let pool = iterate_population(model, &seed_pool, s.budgets.iterations, s.budgets.replicas, seed.child(1), DEFAULT_TAIL_TOL)?;
            (run.grid, pool.pool)
        }
    };
    let stable = stable_transform(&grid, p.alpha)?;
    let back = inverse_stable_transform(&stable, p.alpha)?;
    let draws = stable_transform_sample(&sample, p.alpha, s.budgets.replicas, seed.child(2))?;
    let empirical = LSTGrid::from_empirical(&draws, stable.args.clone())?;
    let results = json!({
        "fit": to_value(&estimate_alpha_m(&stable)?)?,
        "regular_variation": to_value(&check_regular_variation(&stable, p.alpha)?)?,
        "round_trip_error": back.sup_distance(&grid),
        "sample_transform_error": empirical.sup_distance(&stable),
        "draws": draws.len(),
    });
    let rules = [("/sample_transform_error", Provenance::MonteCarlo)];
    Ok(Outcome::new(results, Provenance::Quadrature, &rules)
        .file("lst.csv", stable.to_csv())
        .file("samples.csv", draws.to_csv()))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PitmanYorParams {
    #[serde(flatten)]
    problem: PitmanYorProblem,
    #[serde(default = "size_bias_ks")]
    threshold: f64,
}

fn size_bias_ks() -> f64 {
    SIZE_BIAS_KS
}

fn run_pitman_yor(s: &Scenario, seed: Seed) -> Result<Outcome> {
    let p: PitmanYorParams = s.params()?;
    let problem = &p.problem;
    problem.validate()?;
    let drift = check_existence(problem, s.budgets.mc_budget, seed.child(0))?;
    let pool = solve_pitman_yor(problem, s.budgets.replicas, s.budgets.iterations, s.budgets.mc_budget, seed.child(1))?;
    let check = verify_size_bias_equation(&pool, problem, s.budgets.replicas, p.threshold, seed.child(2))?;
    let h = nu_to_h(problem).ok();
    let mut h_csv = String::from("t,h\n");
    if let Some(h) = &h {
        let end = h.horizon(DEFAULT_TAIL_TOL).max(1e-12);
        for k in 0..=512 {
            let t = end * k as f64 / 512.0;
            let _ = writeln!(h_csv, "{t:e},{:e}", h.eval(t));
        }
    }
    let results = json!({
        "drift": to_value(&drift)?,
        "profile": to_value(&h)?,
        "mean": estimate_of(&pool.samples),
        "size_bias_check": to_value(&check)?,
    });
    let rules = [("/profile", Provenance::Quadrature), ("/size_bias_check/threshold", Provenance::Exact)];
    Ok(Outcome::new(results, Provenance::MonteCarlo, &rules)
        .file("samples.csv", pool.to_csv())
        .file("h.csv", h_csv)
        .verdict(check.pass))
}

/// Summary of one sample in a two-sample comparison.
#[derive(Debug, Clone, Serialize)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: Estimate,
    pub second_moment: Estimate,
    pub hill: Option<crate::tails::HillEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub ks: f64,
    pub a: SampleSummary,
    pub b: SampleSummary,
}

fn summarize(d: &EmpiricalDist) -> SampleSummary {
    let moment = |p: f64| -> Estimate {
        let xs: Vec<f64> = d.samples.iter().map(|x| x.powf(p)).collect();
        match &d.weights {
            None => estimate_of(&xs),
            Some(w) => {
                let mean: f64 = xs.iter().zip(w).map(|(x, q)| x * q).sum();
                let var: f64 = xs.iter().zip(w).map(|(x, q)| q * (x - mean) * (x - mean)).sum();
                let ess_inv: f64 = w.iter().map(|q| q * q).sum();
                Estimate::monte_carlo(mean, (var * ess_inv).sqrt())
            }
        }
    };
    let hill = if d.len() >= HILL_MIN_SAMPLES && d.weights.is_none() { hill_estimate(d, HILL_FRACTION).ok() } else { None };
    SampleSummary { count: d.len(), mean: moment(1.0), second_moment: moment(2.0), hill }
}

/// KS distance and moment table of two samples.
pub fn compare(a: &EmpiricalDist, b: &EmpiricalDist) -> Comparison {
    Comparison { ks: ks_distance(a, b), a: summarize(a), b: summarize(b) }
}

pub fn compare_files(a: &Path, b: &Path) -> Result<Comparison> {
    Ok(compare(&EmpiricalDist::read_csv(a)?, &EmpiricalDist::read_csv(b)?))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportParams {
    a: PathBuf,
    b: PathBuf,
}

fn run_report(s: &Scenario, base: &Path) -> Result<Outcome> {
    let p: ReportParams = s.params()?;
    let c = compare_files(&base.join(&p.a), &base.join(&p.b))?;
    Ok(Outcome::new(to_value(&c)?, Provenance::MonteCarlo, &[]))
}

/// Runs a scenario in memory. Relative input paths resolve against `base`.
pub fn execute(s: &Scenario, base: &Path) -> Result<Outcome> {
    let seed = Seed(s.seed);
    match s.command {
        Command::Criteria => run_criteria(s, seed),
        Command::IterateLst => run_iterate_lst(s, seed),
        Command::Simulate => run_simulate(s, seed),
        Command::Spine => run_spine(s, seed),
        Command::Tails => run_tails(s, seed),
        Command::Stable => run_stable(s, seed),
        Command::PitmanYor => run_pitman_yor(s, seed),
        Command::Report => run_report(s, base),
    }
}

/// `report.json` for a finished or verdict-failed run.
pub fn report_json(s: &Scenario, outcome: std::result::Result<&Outcome, &Error>) -> Value {
    let mut report = json!({
        "artifact": { "name": ARTIFACT, "version": VERSION },
        "command": s.command,
        "config": s.echo(),
    });
    match outcome {
        Ok(o) => {
            report["status"] = json!(if o.verdict { "ok" } else { "verdict-negative" });
            report["results"] = o.results.clone();
            report["provenance"] = json!(o.provenance);
            report["files"] = json!(o.files.iter().map(|f| f.0.clone()).collect::<Vec<_>>());
        }
        Err(e) => {
            report["status"] = json!("verdict-failure");
            report["error"] = json!(e.to_string());
        }
    }
    report
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

fn write_outputs(dir: &Path, report: &Value, files: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
    }
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    std::fs::write(dir.join("report.json"), text)?;
    Ok(())
}

fn load(config: &Path, opts: &RunOptions) -> Result<Scenario> {
    let text = std::fs::read_to_string(config)?;
    let mut s: Scenario = serde_json::from_str(&text)?;
    if let Some(seed) = opts.seed {
        s.seed = seed;
    }
    if let Some(out) = &opts.out {
        s.output = Some(out.clone());
    }
    s.validate()?;
    Ok(s)
}

/// `smoothfix run`: returns the process exit code.
pub fn run(config: &Path, opts: &RunOptions) -> i32 {
    let scenario = match load(config, opts) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", config.display());
            return EXIT_ERROR;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = opts.workers {
        if k == 0 {
            eprintln!("error: workers must be positive");
            return EXIT_ERROR;
        }
        builder = builder.num_threads(k);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: thread pool: {e}");
            return EXIT_ERROR;
        }
    };
    let base = config.parent().map(Path::to_path_buf).unwrap_or_default();
    let result = pool.install(|| execute(&scenario, &base));
    let dir = scenario.output.clone().unwrap_or_else(|| PathBuf::from("out"));
    let (report, files, code) = match &result {
        Ok(o) => (report_json(&scenario, Ok(o)), o.files.as_slice(), if o.verdict { EXIT_OK } else { EXIT_VERDICT }),
        Err(e) if e.is_verdict() => (report_json(&scenario, Err(e)), &[][..], EXIT_VERDICT),
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_ERROR;
        }
    };
    if let Err(e) = write_outputs(&dir, &report, files) {
        eprintln!("error: writing {}: {e}", dir.display());
        return EXIT_ERROR;
    }
    if let Err(e) = &result {
        eprintln!("verdict: {e}");
    }
    code
}

/// `smoothfix report`: prints the comparison as JSON.
pub fn report(a: &Path, b: &Path) -> i32 {
    match compare_files(a, b).and_then(|c| Ok(serde_json::to_string_pretty(&c)?)) {
        Ok(text) => {
            use std::io::Write as _;
            let _ = writeln!(std::io::stdout(), "{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_parsing() {
        let s = Scenario::from_json(r#"{"command":"criteria","seed":3,"model":{"kind":"random_count_fixed_weight","count":{"law":"geometric","q":0.5},"weight":0.5}}"#).unwrap();
        assert_eq!(s.command, Command::Criteria);
        assert_eq!(s.budgets, Budgets::default());
        assert!(Scenario::from_json(r#"{"command":"criteria"}"#).is_err());
        assert!(Scenario::from_json(r#"{"command":"nope","seed":1}"#).is_err());
        assert!(Scenario::from_json(r#"{"command":"criteria","seed":1}"#).is_err());
        assert!(Scenario::from_json(r#"{"command":"report","seed":1,"budgets":{"replicas":0}}"#).is_err());
        assert!(Scenario::from_json(r#"{"command":"report","seed":1,"extra":1}"#).is_err());
    }

    #[test]
    fn echo_drops_output() {
        let mut s = Scenario::from_json(r#"{"command":"report","seed":1,"output":"x"}"#).unwrap();
        assert!(s.echo().get("output").is_none());
        s.output = None;
        assert_eq!(s.echo()["seed"], json!(1));
    }

    #[test]
    fn labels_cover_bare_numbers_only() {
        let v = json!({
            "e": Estimate::monte_carlo(1.0, 0.1),
            "x": 0.5,
            "n": 3,
            "nested": {"y": [1.5, 2.5]},
        });
        let l = label_numbers(&v, Provenance::MonteCarlo, &[("/nested", Provenance::Exact)]);
        assert_eq!(l.len(), 4);
        assert_eq!(l["/x"], "monte-carlo");
        assert_eq!(l["/n"], "exact");
        assert_eq!(l["/nested/y/1"], "exact");
        assert!(!l.keys().any(|k| k.starts_with("/e")));
    }

    #[test]
    fn comparison_of_identical_and_disjoint() {
        let a = EmpiricalDist::new(vec![1.0, 2.0, 3.0], "a");
        let b = EmpiricalDist::new(vec![10.0, 20.0], "b");
        assert_eq!(compare(&a, &a).ks, 0.0);
        assert_eq!(compare(&a, &b).ks, 1.0);
        assert_eq!(compare(&a, &b).a.mean.value, 2.0);
    }
}
