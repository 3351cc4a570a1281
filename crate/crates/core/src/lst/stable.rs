//! Stable and inverse stable transformations.

use crate::error::{Error, Result};
use crate::lst::LSTGrid;
use crate::montecarlo::{draw_positive_stable, EmpiricalDist};
use crate::seed::{par_draws, Seed};

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!("alpha = {alpha} outside (0, 1]")));
    }
    Ok(())
}

fn regrid(grid: &LSTGrid, power: f64) -> Result<LSTGrid> {
    if power == 1.0 {
        let mut g = grid.clone();
        g.backing = None;
        return Ok(g);
    }
    let args = grid.args.iter().map(|s| s.powf(power)).collect();
    LSTGrid::new(args, grid.values.clone())
}

/// `φ_α(s) = φ(s^α)`, tabulated at the arguments `s_k^{1/α}`.
pub fn stable_transform(grid: &LSTGrid, alpha: f64) -> Result<LSTGrid> {
    check_alpha(alpha)?;
    regrid(grid, 1.0 / alpha)
}

/// `ψ(s) = φ(s^{1/α})`, tabulated at the arguments `s_k^α`.
pub fn inverse_stable_transform(grid: &LSTGrid, alpha: f64) -> Result<LSTGrid> {
    check_alpha(alpha)?;
    regrid(grid, alpha)
}

/// Sample-level stable transformation `T^{1/α} S_α`.
pub fn stable_transform_sample(base: &EmpiricalDist, alpha: f64, count: usize, seed: Seed) -> Result<EmpiricalDist> {
    check_alpha(alpha)?;
    let sampler = base.sampler()?;
    let samples = par_draws(count, seed, |rng| {
        let t = sampler.draw(rng);
        t.powf(1.0 / alpha) * draw_positive_stable(alpha, rng)
    });
    Ok(EmpiricalDist::new(samples, format!("stable(alpha={alpha}, seed={}) of {}", seed.0, base.lineage)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lst::estimate_alpha_m;

    #[test]
    fn point_mass_composes_to_half_stable() {
        let g = LSTGrid::standard(|s| (-s).exp()).unwrap();
        let st = stable_transform(&g, 0.5).unwrap();
        assert!(st.sup_error(|s| (-s.sqrt()).exp()) < 1e-12);
        let back = inverse_stable_transform(&st, 0.5).unwrap();
        assert!(back.sup_error(|s| (-s).exp()) < 1e-12);
    }

    #[test]
    fn round_trip_is_identity_on_common_grid() {
        let g = LSTGrid::standard(|s| 1.0 / (1.0 + s)).unwrap();
        for alpha in [0.3, 0.5, 0.7] {
            let rt = inverse_stable_transform(&stable_transform(&g, alpha).unwrap(), alpha).unwrap();
            assert!(g.sup_distance(&rt) < 1e-6);
        }
    }

    #[test]
    fn normalization_is_recovered() {
        let m = 2.5;
        let g = LSTGrid::standard(|s| (-m * s.sqrt()).exp()).unwrap();
        let inv = inverse_stable_transform(&g, 0.5).unwrap();
        assert!(inv.sup_error(|s| (-m * s).exp()) < 1e-12);
        let fit = estimate_alpha_m(&inv).unwrap();
        assert!((fit.alpha - 1.0).abs() < 0.02 && (fit.m - m).abs() < 0.05 * m);
    }

    #[test]
    fn sample_stable_of_point_mass() {
        let d = stable_transform_sample(&EmpiricalDist::point_mass(1.0, 1), 0.5, 100_000, Seed(3)).unwrap();
        for s in [0.1, 1.0, 10.0] {
            assert!((d.transform(s) - (-f64::sqrt(s)).exp()).abs() < 0.01);
        }
        let same = stable_transform_sample(&EmpiricalDist::point_mass(2.0, 1), 1.0, 10, Seed(3)).unwrap();
        assert!(same.samples.iter().all(|x| *x == 2.0));
    }
}
