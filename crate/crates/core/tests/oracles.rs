use rand::Rng;
use rand_chacha::ChaCha8Rng;

use smoothfix::criteria::{classify_drift, DriftVerdict, FnLogStep};
use smoothfix::lst::{picard_step, LSTGrid};
use smoothfix::models::{DecayProfile, WeightModel, DEFAULT_TAIL_TOL};
use smoothfix::montecarlo::{
    ks_distance, ks_to_law, population_step, simulate_brw_martingale, simulate_spine_perpetuity, ClosedForm,
    EmpiricalDist,
};
use smoothfix::pitmanyor::{solve_pitman_yor, verify_size_bias_equation, NuDist, PitmanYorProblem};
use smoothfix::seed::par_draws;
use smoothfix::tails::{compute_cb, fixed_point_pool, TailCase};
use smoothfix::Seed;

fn geometric() -> WeightModel {
    WeightModel::geometric(0.5, 0.5)
}

fn two_point() -> WeightModel {
    WeightModel::common(2, vec![(4.0 / 3.0, 9.0 / 34.0), (0.2, 25.0 / 34.0)])
}

fn shot() -> WeightModel {
    WeightModel::shot_noise(DecayProfile::exp(1.0), 1.0)
}

fn exp_pool(n: usize, seed: u64) -> EmpiricalDist {
    EmpiricalDist::new(par_draws(n, Seed(seed), |r| -(1.0 - r.random::<f64>()).ln()), "exp")
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn martingale_has_unit_mean_at_every_generation() {
    for n in [1, 6, 12] {
        let r = simulate_brw_martingale(&two_point(), 1.0, n, 2000, Seed(n as u64), 1_000_000).unwrap();
        assert_eq!(r.censored, 0);
        let (mean, se) = mean_se(&r.samples);
        assert!((mean - 1.0).abs() < 4.0 * se, "n = {n}: {mean} ± {se}");
    }
}

#[test]
fn spine_agrees_with_size_biased_pool() {
    let spine = simulate_spine_perpetuity(&geometric(), 1.0, 60, 20_000, Seed(3), 100_000).unwrap();
    let pool = fixed_point_pool(&geometric(), 100_000, 30, 1.0, Seed(4)).unwrap();
    let biased = pool.moment(2.0) / pool.mean();
    assert!((spine.mean_v.value - 2.0).abs() < 0.1, "{:?}", spine.mean_v);
    assert!((biased - 2.0).abs() < 0.1, "{biased}");
    assert!((spine.mean_v.value - biased).abs() < 0.15);
}

#[test]
fn exact_and_resampled_steps_agree() {
    let start = LSTGrid::standard(|s| (-s).exp()).unwrap();
    for model in [geometric(), two_point(), shot()] {
        let exact = picard_step(&start, &model, 0, Seed(0)).unwrap();
        let pool = EmpiricalDist::point_mass(1.0, 1);
        let step = population_step(&model, &pool, 100_000, Seed(5), DEFAULT_TAIL_TOL).unwrap();
        let empirical = LSTGrid::from_empirical(&step, exact.args.clone()).unwrap();
        assert!(empirical.sup_distance(&exact) < 0.01, "{:?}", model.kind);
    }
}

#[test]
fn population_step_keeps_the_mean() {
    let pool = exp_pool(100_000, 6);
    for model in [geometric(), two_point(), shot()] {
        let out = population_step(&model, &pool, 100_000, Seed(7), DEFAULT_TAIL_TOL).unwrap();
        assert!((out.mean() / pool.mean() - 1.0).abs() < 0.02, "{:?}: {}", model.kind, out.mean());
    }
}

#[test]
fn negative_drift_is_recognised_from_samples() {
    // uniform steps of mean -0.05 and variance one
    let step = FnLogStep(|r: &mut ChaCha8Rng| -0.05 + (r.random::<f64>() - 0.5) * 12f64.sqrt());
    let hits = (0..100).filter(|k| classify_drift(&step, 100_000, Seed(*k)).verdict == DriftVerdict::NegativeDrift).count();
    assert!(hits >= 99, "{hits}/100");
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let pool = exp_pool(10_000, 8);
    let runs = |threads| {
        in_pool(threads, || {
            let step = population_step(&shot(), &pool, 20_000, Seed(9), DEFAULT_TAIL_TOL).unwrap().samples;
            let brw = simulate_brw_martingale(&geometric(), 1.0, 6, 2000, Seed(10), 1_000_000).unwrap().samples;
            let spine = simulate_spine_perpetuity(&geometric(), 1.0, 30, 5000, Seed(11), 10_000).unwrap().v;
            let problem = PitmanYorProblem::new(NuDist::Uniform { upper: 1.0 }, 0.0, 1.0);
            let py = solve_pitman_yor(&problem, 5000, 5, 1000, Seed(12)).unwrap().samples;
            (step, brw, spine, py)
        })
    };
    assert_eq!(runs(1), runs(4));
}

#[test]
fn exp_against_gamma_two_has_known_ks() {
    let a = exp_pool(100_000, 13);
    let b = EmpiricalDist::new(
        par_draws(100_000, Seed(14), |r| -(1.0 - r.random::<f64>()).ln() - (1.0 - r.random::<f64>()).ln()),
        "gamma",
    );
    // sup_x x e^{-x} at x = 1
    assert!((ks_distance(&a, &b) - (-1.0f64).exp()).abs() < 0.01);
}

#[test]
fn pitman_yor_solutions_are_reproducible() {
    let problem = PitmanYorProblem::new(NuDist::Uniform { upper: 1.0 }, 0.0, 1.0);
    let a = solve_pitman_yor(&problem, 20_000, 20, 10_000, Seed(15)).unwrap();
    let b = solve_pitman_yor(&problem, 20_000, 20, 10_000, Seed(16)).unwrap();
    assert!((a.mean() - 1.0).abs() < 0.03);
    assert!(ks_distance(&a, &b) < 0.03);
    assert!(ks_to_law(&a, ClosedForm::Exponential { rate: 1.0 }) < 0.03);
}

#[test]
fn size_bias_equation_holds_for_several_laws() {
    let laws = [
        (NuDist::Uniform { upper: 1.0 }, 0.0),
        (NuDist::Uniform { upper: 1.5 }, 0.2),
        (NuDist::Atoms { atoms: vec![(0.5, 0.5), (1.2, 0.5)] }, 0.0),
        (NuDist::Atoms { atoms: vec![(0.3, 0.7), (2.0, 0.3)] }, 0.1),
        (NuDist::TabulatedCdf { x: vec![0.0, 0.5, 1.2], cdf: vec![0.0, 0.6, 1.0] }, 0.0),
    ];
    for (nu, gamma0) in laws {
        let problem = PitmanYorProblem::new(nu, gamma0, 1.0);
        for k in 0..4 {
            let mu = solve_pitman_yor(&problem, 20_000, 20, 10_000, Seed(100 + k)).unwrap();
            let check = verify_size_bias_equation(&mu, &problem, 20_000, 0.03, Seed(200 + k)).unwrap();
            assert!(check.pass, "{problem:?}: {}", check.ks);
        }
    }
}

#[test]
fn tail_constant_near_renewal_value() {
    // C_2 = 1 / (2 E Σ X² log X) for the two-point model; truncation at the
    // top sample quantile biases the estimate low by roughly ten percent
    let oracle = 1.0 / (2.0 * 0.176_087);
    let pool = fixed_point_pool(&two_point(), 1_000_000, 60, 1.0, Seed(17)).unwrap();
    let report = compute_cb(&two_point(), &pool, 2.0, 100_000, Seed(18)).unwrap();
    assert_eq!(report.case, TailCase::Nonarithmetic);
    assert!((report.denominator.value - 0.176_087).abs() < 1e-5);
    assert!(report.cb_formula.value > 0.0);
    assert!((report.cb_formula.value / oracle - 1.0).abs() < 0.3, "{:?}", report.cb_formula);
}
