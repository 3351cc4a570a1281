//! Positive strictly stable laws with transform `exp(−s^α)`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::montecarlo::EmpiricalDist;
use crate::seed::{par_draws, Seed};

/// One draw by Kanter's representation `(K(U)/E)^{(1−α)/α}`.
pub fn draw_positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    if alpha >= 1.0 {
        return 1.0;
    }
    let u = PI * rng.random::<f64>();
    let e: f64 = Exp1.sample(rng);
    let k = (alpha * u).sin().powf(alpha / (1.0 - alpha)) * ((1.0 - alpha) * u).sin()
        / u.sin().powf(1.0 / (1.0 - alpha));
    (k / e).powf((1.0 - alpha) / alpha)
}

/// `count` i.i.d. draws with transform `exp(−s^α)`.
pub fn sample_positive_stable(alpha: f64, count: usize, seed: Seed) -> Result<EmpiricalDist> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0,1]")));
    }
    let samples = par_draws(count, seed, |rng| draw_positive_stable(alpha, rng));
    Ok(EmpiricalDist::new(samples, format!("positive-stable(alpha={alpha}, seed={})", seed.0)))
}
