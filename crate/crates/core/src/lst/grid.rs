//! Laplace transforms tabulated on log-spaced grids.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::EmpiricalDist;

pub const DEFAULT_POINTS: usize = 200;
pub const DEFAULT_S_MIN: f64 = 1e-6;
pub const DEFAULT_S_MAX: f64 = 1e3;
/// Number of smallest arguments used by the small-`s` fits.
pub const FIT_POINTS: usize = 10;

/// Fitted small-argument behaviour `1 − φ(s) ≈ m s^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaM {
    pub alpha: f64,
    pub m: f64,
    /// Largest absolute residual of the log-log fit.
    pub residual: f64,
}

/// `count` log-spaced points on `[lo, hi]`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|k| {
            if k + 1 == count {
                hi
            } else {
                (a + (b - a) * k as f64 / (count - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn standard_args() -> Vec<f64> {
    log_space(DEFAULT_S_MIN, DEFAULT_S_MAX, DEFAULT_POINTS)
}

/// A transform `φ(s) = E e^{−sW}` on ascending arguments.
///
/// Between nodes `ln(1 − φ)` is interpolated in `ln s` by ten-point
/// Lagrange polynomials clamped to the bracketing node values. Below the grid
/// `ln(1 − φ) = c + a ln s + κ s` is matched to the first three nodes (the
/// fitted power law is used if that match is implausible); above the grid
/// the last value is held.
#[derive(Debug, Clone, Serialize)]
pub struct LSTGrid {
    pub args: Vec<f64>,
    pub values: Vec<f64>,
    pub fit: AlphaM,
    /// Sample the grid was computed from, when there is one.
    #[serde(skip)]
    pub backing: Option<EmpiricalDist>,
    #[serde(skip)]
    log_args: Vec<f64>,
    #[serde(skip)]
    log_gaps: Vec<f64>,
    #[serde(skip)]
    head: (f64, f64, f64),
}

impl PartialEq for LSTGrid {
    fn eq(&self, other: &Self) -> bool {
        self.args == other.args && self.values == other.values
    }
}

const STENCIL: usize = 10;

impl LSTGrid {
    pub fn new(args: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(*v >= 0.0 && *v <= 1.0)) {
            return Err(Error::InvalidArgument("transform values must lie in [0, 1]".into()));
        }
        let gaps = values.iter().map(|v| 1.0 - v).collect();
        Self::build(args, values, gaps)
    }

    /// Grid from `1 − φ(s_k)`, which keeps full relative precision at small `s`.
    pub fn from_gaps(args: Vec<f64>, gaps: Vec<f64>) -> Result<Self> {
        if gaps.iter().any(|g| !(*g >= 0.0 && *g <= 1.0)) {
            return Err(Error::InvalidArgument("1 - phi must lie in [0, 1]".into()));
        }
        let values = gaps.iter().map(|g| 1.0 - g).collect();
        Self::build(args, values, gaps)
    }

    fn build(args: Vec<f64>, values: Vec<f64>, gaps: Vec<f64>) -> Result<Self> {
        if args.len() < FIT_POINTS + 2 || args.len() != values.len() {
            return Err(Error::GridTooCoarse(format!("{} arguments", args.len())));
        }
        if !(args[0] > 0.0) || args.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::InvalidArgument("grid arguments must be positive and increasing".into()));
        }
        let fit = fit_gaps(&args, &gaps)?;
        let log_args: Vec<f64> = args.iter().map(|s| s.ln()).collect();
        let log_gaps: Vec<f64> = gaps.iter().map(|g| g.max(1e-300).ln()).collect();
        let head = head_fit(&args, &log_args, &log_gaps)
            .unwrap_or((log_gaps[0] - fit.alpha * log_args[0], fit.alpha, 0.0));
        Ok(LSTGrid { args, values, fit, backing: None, log_args, log_gaps, head })
    }

    pub fn from_gap_fn<F: Fn(f64) -> f64>(args: Vec<f64>, f: F) -> Result<Self> {
        let gaps = args.iter().map(|s| f(*s)).collect();
        Self::from_gaps(args, gaps)
    }

    /// Stored `1 − φ(s_k)` at the nodes.
    pub fn node_gaps(&self) -> Vec<f64> {
        self.log_gaps.iter().map(|g| g.exp()).collect()
    }

    pub fn from_fn<F: Fn(f64) -> f64>(args: Vec<f64>, f: F) -> Result<Self> {
        let values = args.iter().map(|s| f(*s)).collect();
        Self::new(args, values)
    }

    /// Standard 200-point grid on `[1e-6, 1e3]`.
    pub fn standard<F: Fn(f64) -> f64>(f: F) -> Result<Self> {
        Self::from_fn(standard_args(), f)
    }

    /// Transform of a sample, which is kept as backing.
    pub fn from_empirical(dist: &EmpiricalDist, args: Vec<f64>) -> Result<Self> {
        let mut grid = Self::from_gap_fn(args, |s| dist.expect(|x| -(-s * x).exp_m1()))?;
        grid.backing = Some(dist.clone());
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.args.len()
    }

    pub fn is_empty(&self) -> bool {
        self.args.is_empty()
    }

    /// `1 − φ(s)`.
    pub fn gap(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        let n = self.args.len();
        if s <= self.args[0] {
            let (c, a, kappa) = self.head;
            return (c + a * s.ln() + kappa * s).exp().min(1.0);
        }
        if s >= self.args[n - 1] {
            return 1.0 - self.values[n - 1];
        }
        let x = s.ln();
        let k = (self.args.partition_point(|a| *a <= s) - 1).min(n - 2);
        let lo = k.saturating_sub(STENCIL / 2 - 1).min(n - STENCIL);
        let xs = &self.log_args[lo..lo + STENCIL];
        let ys = &self.log_gaps[lo..lo + STENCIL];
        let mut y = 0.0;
        for i in 0..STENCIL {
            let mut w = 1.0;
            for j in 0..STENCIL {
                if j != i {
                    w *= (x - xs[j]) / (xs[i] - xs[j]);
                }
            }
            y += w * ys[i];
        }
        let (y0, y1) = (self.log_gaps[k], self.log_gaps[k + 1]);
        y.clamp(y0.min(y1), y0.max(y1)).exp().min(1.0)
    }

    /// `φ(s)` by interpolation.
    pub fn eval(&self, s: f64) -> f64 {
        1.0 - self.gap(s)
    }

    /// `sup_k |φ(s_k) − f(s_k)|` over the nodes.
    pub fn sup_error<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.args.iter().zip(&self.values).map(|(s, v)| (v - f(*s)).abs()).fold(0.0, f64::max)
    }

    /// `sup_k |φ(s_k) − ψ(s_k)|`, with `ψ` interpolated at this grid's nodes.
    pub fn sup_distance(&self, other: &LSTGrid) -> f64 {
        self.sup_error(|s| other.eval(s))
    }

    /// Nonincreasing with nonnegative discrete second differences (on the
    /// nonuniform grid, nondecreasing divided-difference slopes).
    pub fn is_well_formed(&self) -> bool {
        let monotone = self.values.windows(2).all(|p| p[1] <= p[0] + 1e-12);
        let slopes: Vec<f64> = (0..self.len() - 1)
            .map(|k| (self.values[k + 1] - self.values[k]) / (self.args[k + 1] - self.args[k]))
            .collect();
        let convex = slopes.windows(2).all(|p| p[1] - p[0] >= -1e-9 * p[0].abs().max(1.0));
        let at_zero = self.values[0] >= 1.0 - 10.0 * self.fit.m * self.args[0].powf(self.fit.alpha);
        monotone && convex && at_zero
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("s,phi,one_minus_phi\n");
        for ((s, v), g) in self.args.iter().zip(&self.values).zip(self.node_gaps()) {
            let _ = writeln!(out, "{s:e},{v:e},{g:e}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Fits `(α, m)` on the ten smallest arguments.
pub fn estimate_alpha_m(lst: &LSTGrid) -> Result<AlphaM> {
    fit_gaps(&lst.args, &lst.node_gaps())
}

fn fit_gaps(args: &[f64], gaps: &[f64]) -> Result<AlphaM> {
    let k = FIT_POINTS.min(args.len());
    let gaps = &gaps[..k];
    if gaps.iter().any(|g| !(*g > 1e-14)) {
        return Err(Error::DegenerateAtZero);
    }
    let xs: Vec<f64> = args[..k].iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|g| g.ln()).collect();
    let (slope, _) = least_squares(&xs, &ys);
    let alpha = slope.clamp(1e-6, 1.0);
    let log_m = xs.iter().zip(&ys).map(|(x, y)| y - alpha * x).sum::<f64>() / k as f64;
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - log_m - alpha * x).abs()).fold(0.0, f64::max);
    Ok(AlphaM { alpha, m: log_m.exp(), residual })
}

/// Ordinary least squares `y ≈ a x + b`, returning `(a, b)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let a = sxy / sxx;
    (a, my - a * mx)
}

/// Solves `g = c + a ln s + κ s` through the first three nodes.
fn head_fit(args: &[f64], xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    // eliminate c, then a
    let (dx1, dx2) = (xs[1] - xs[0], xs[2] - xs[0]);
    let (ds1, ds2) = (args[1] - args[0], args[2] - args[0]);
    let (dy1, dy2) = (ys[1] - ys[0], ys[2] - ys[0]);
    let det = dx1 * ds2 - dx2 * ds1;
    if det.abs() < 1e-300 {
        return None;
    }
    let a = (dy1 * ds2 - dy2 * ds1) / det;
    let kappa = (dx1 * dy2 - dx2 * dy1) / det;
    let c = ys[0] - a * xs[0] - kappa * args[0];
    let plausible = a > 0.0 && a <= 1.5 && (kappa * args[0]).abs() < 0.1 && c.is_finite();
    plausible.then_some((c, a, kappa))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_accurate_between_nodes() {
        let grid = LSTGrid::standard(|s| 1.0 / (1.0 + s)).unwrap();
        let fine = log_space(1e-8, 1e3, 5000);
        let err = fine.iter().map(|s| (grid.eval(*s) - 1.0 / (1.0 + s)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        let grid = LSTGrid::standard(|s| (-s.sqrt()).exp()).unwrap();
        let err = log_space(1e-8, 1e3, 5000)
            .iter()
            .map(|s| (grid.eval(*s) - (-s.sqrt()).exp()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn alpha_m_examples() {
        let f = estimate_alpha_m(&LSTGrid::standard(|s| 1.0 / (1.0 + s)).unwrap()).unwrap();
        assert!((f.alpha - 1.0).abs() < 0.02 && (f.m - 1.0).abs() < 0.05);
        let f = estimate_alpha_m(&LSTGrid::standard(|s| (-s.sqrt()).exp()).unwrap()).unwrap();
        assert!((f.alpha - 0.5).abs() < 0.02 && (f.m - 1.0).abs() < 0.05);
        let f = estimate_alpha_m(&LSTGrid::standard(|s| (-3.0 * s).exp()).unwrap()).unwrap();
        assert!((f.alpha - 1.0).abs() < 0.02 && (f.m - 3.0).abs() < 0.15);
        let flat = LSTGrid::new(standard_args(), vec![1.0; DEFAULT_POINTS]);
        assert!(matches!(flat, Err(Error::DegenerateAtZero)));
    }

    #[test]
    fn well_formedness() {
        assert!(LSTGrid::standard(|s| 1.0 / (1.0 + s)).unwrap().is_well_formed());
        let mut bumpy = LSTGrid::standard(|s| 1.0 / (1.0 + s)).unwrap();
        bumpy.values[100] += 0.01;
        assert!(!bumpy.is_well_formed());
    }

    #[test]
    fn extrapolation_below_grid_follows_power_law() {
        let grid = LSTGrid::standard(|s| (-2.0 * s).exp()).unwrap();
        assert!((grid.gap(1e-9) - 2e-9).abs() < 1e-13);
        assert_eq!(grid.eval(0.0), 1.0);
        assert_eq!(grid.eval(1e9), grid.values[DEFAULT_POINTS - 1]);
    }
}
