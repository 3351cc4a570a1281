//! Weighted empirical distributions and Kolmogorov-Smirnov distances.

use std::io::BufRead;
use std::path::Path;

use rand::Rng;
use rayon::slice::ParallelSliceMut;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::models::AtomTable;

/// A (possibly weighted) sample on `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalDist {
    pub samples: Vec<f64>,
    /// Probability weights summing to 1; uniform when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    /// Free-form description of how the sample was produced.
    pub lineage: String,
    /// Bound on the expected mass lost to truncation, per sample.
    #[serde(default)]
    pub truncation_bound: f64,
}

impl EmpiricalDist {
    pub fn new(samples: Vec<f64>, lineage: impl Into<String>) -> Self {
        EmpiricalDist { samples, weights: None, lineage: lineage.into(), truncation_bound: 0.0 }
    }

    pub fn weighted(samples: Vec<f64>, weights: Vec<f64>, lineage: impl Into<String>) -> Result<Self> {
        if samples.len() != weights.len() || weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidArgument("weights must be positive and match the samples".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, not 1")));
        }
        Ok(EmpiricalDist { samples, weights: Some(weights), lineage: lineage.into(), truncation_bound: 0.0 })
    }

    /// `count` copies of `value`.
    pub fn point_mass(value: f64, count: usize) -> Self {
        Self::new(vec![value; count], format!("point-mass({value})"))
    }

    pub fn with_truncation(mut self, bound: f64) -> Self {
        self.truncation_bound = bound;
        self
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    fn weight(&self, i: usize) -> f64 {
        match &self.weights {
            Some(w) => w[i],
            None => 1.0 / self.samples.len() as f64,
        }
    }

    /// `E f(X)`.
    pub fn expect<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        match &self.weights {
            Some(w) => self.samples.iter().zip(w).map(|(x, p)| p * f(*x)).sum(),
            None => self.samples.iter().map(|x| f(*x)).sum::<f64>() / self.samples.len() as f64,
        }
    }

    pub fn mean(&self) -> f64 {
        self.expect(|x| x)
    }

    pub fn moment(&self, p: f64) -> f64 {
        self.expect(|x| x.powf(p))
    }

    /// Laplace transform `E e^{−sX}`.
    pub fn transform(&self, s: f64) -> f64 {
        self.expect(|x| (-s * x).exp())
    }

    /// `(E cos(sX) − 1, E sin(sX))`; the real part is formed without
    /// cancellation as `−2 E sin²(sX/2)`.
    pub fn characteristic(&self, s: f64) -> (f64, f64) {
        let re = -2.0 * self.expect(|x| (0.5 * s * x).sin().powi(2));
        let im = self.expect(|x| (s * x).sin());
        (re, im)
    }

    /// Samples sorted ascending together with their weights.
    pub fn sorted(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.weights {
            None => {
                let mut xs = self.samples.clone();
                xs.par_sort_unstable_by(f64::total_cmp);
                let w = 1.0 / xs.len() as f64;
                let ws = vec![w; xs.len()];
                (xs, ws)
            }
            Some(weights) => {
                let mut idx: Vec<usize> = (0..self.samples.len()).collect();
                idx.par_sort_unstable_by(|a, b| self.samples[*a].total_cmp(&self.samples[*b]).then(a.cmp(b)));
                let xs = idx.iter().map(|i| self.samples[*i]).collect();
                let ws = idx.iter().map(|i| weights[*i]).collect();
                (xs, ws)
            }
        }
    }

    /// `P(X > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        self.expect(|y| if y > x { 1.0 } else { 0.0 })
    }

    /// Lower `q`-quantile.
    pub fn quantile(&self, q: f64) -> f64 {
        let (xs, ws) = self.sorted();
        let mut acc = 0.0;
        for (x, w) in xs.iter().zip(&ws) {
            acc += w;
            if acc >= q - 1e-15 {
                return *x;
            }
        }
        xs[xs.len() - 1]
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// A reusable sampler drawing from this distribution.
    pub fn sampler(&self) -> Result<DistSampler<'_>> {
        if self.samples.is_empty() {
            return Err(Error::EmptyPool);
        }
        let table = self.weights.as_ref().map(|w| AtomTable::new(w.iter().copied()));
        Ok(DistSampler { samples: &self.samples, table })
    }

    /// Single-column CSV text (two columns when weighted).
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        match &self.weights {
            None => {
                out.push_str("x\n");
                for x in &self.samples {
                    let _ = writeln!(out, "{x:e}");
                }
            }
            Some(w) => {
                out.push_str("x,weight\n");
                for (x, p) in self.samples.iter().zip(w) {
                    let _ = writeln!(out, "{x:e},{p:e}");
                }
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::io::BufReader::new(std::fs::File::open(path)?);
        let mut samples = Vec::new();
        let mut weights = Vec::new();
        for (n, line) in file.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || (n == 0 && line.chars().next().is_some_and(|c| c.is_alphabetic())) {
                continue;
            }
            let mut cols = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidArgument(format!("{}: bad value on line {}", path.display(), n + 1)))
            };
            samples.push(parse(cols.next())?);
            if let Some(w) = cols.next() {
                weights.push(parse(Some(w))?);
            }
        }
        if samples.is_empty() {
            return Err(Error::EmptyPool);
        }
        let lineage = format!("csv:{}", path.display());
        if weights.is_empty() {
            Ok(Self::new(samples, lineage))
        } else {
            let total: f64 = weights.iter().sum();
            let weights = weights.into_iter().map(|w| w / total).collect();
            Self::weighted(samples, weights, lineage)
        }
    }
}

/// Draws from an [`EmpiricalDist`].
#[derive(Debug, Clone)]
pub struct DistSampler<'a> {
    samples: &'a [f64],
    table: Option<AtomTable>,
}

impl DistSampler<'_> {
    pub fn index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match &self.table {
            Some(t) => t.sample(rng),
            None => rng.random_range(0..self.samples.len()),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.samples[self.index(rng)]
    }

    /// Draw selected by the uniform variate `u ∈ [0, 1)`; equal-size pools
    /// given the same `u` pick the same index.
    pub fn at(&self, u: f64) -> f64 {
        let i = match &self.table {
            Some(t) => t.pick(u),
            None => ((u * self.samples.len() as f64) as usize).min(self.samples.len() - 1),
        };
        self.samples[i]
    }
}

/// Size-biased resample `μ̄(dx) ∝ x μ(dx)` of size `out_size`.
pub fn size_bias<R: Rng + ?Sized>(dist: &EmpiricalDist, rng: &mut R, out_size: usize) -> Result<EmpiricalDist> {
    if dist.is_empty() {
        return Err(Error::EmptyPool);
    }
    let table = AtomTable::new((0..dist.len()).map(|i| dist.weight(i) * dist.samples[i]));
    if !(dist.mean() > 0.0) {
        return Err(Error::ZeroMean);
    }
    let samples = (0..out_size).map(|_| dist.samples[table.sample(rng)]).collect();
    Ok(EmpiricalDist::new(samples, format!("size-bias({})", dist.lineage)).with_truncation(dist.truncation_bound))
}

/// Closed-form reference laws for one-sample KS distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ClosedForm {
    Exponential { rate: f64 },
    Gamma { shape: f64, rate: f64 },
    PointMass { at: f64 },
}

impl ClosedForm {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ClosedForm::Exponential { rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-rate * x).exp_m1()
                }
            }
            ClosedForm::Gamma { shape, rate } => {
                if x <= 0.0 {
                    0.0
                } else {
                    gamma_lr(shape, rate * x)
                }
            }
            ClosedForm::PointMass { at } => {
                if x >= at {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Two-sample KS distance over the pooled jump points.
pub fn ks_distance(a: &EmpiricalDist, b: &EmpiricalDist) -> f64 {
    let (xa, wa) = a.sorted();
    let (xb, wb) = b.sorted();
    let (mut i, mut j) = (0, 0);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut sup = 0.0f64;
    while i < xa.len() || j < xb.len() {
        let x = match (xa.get(i), xb.get(j)) {
            (Some(u), Some(v)) => u.min(*v),
            (Some(u), None) => *u,
            (None, Some(v)) => *v,
            (None, None) => unreachable!(),
        };
        while i < xa.len() && xa[i] == x {
            fa += wa[i];
            i += 1;
        }
        while j < xb.len() && xb[j] == x {
            fb += wb[j];
            j += 1;
        }
        sup = sup.max((fa - fb).abs());
    }
    sup.min(1.0)
}

/// One-sample KS distance to a closed-form law.
pub fn ks_to_law(a: &EmpiricalDist, law: ClosedForm) -> f64 {
    if let ClosedForm::PointMass { at } = law {
        return ks_distance(a, &EmpiricalDist::point_mass(at, 1));
    }
    let (xs, ws) = a.sorted();
    let mut below = 0.0f64;
    let mut sup = 0.0f64;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        let mut at = below;
        while i < xs.len() && xs[i] == x {
            at += ws[i];
            i += 1;
        }
        let f = law.cdf(x);
        sup = sup.max((f - below).abs()).max((f - at).abs());
        below = at;
    }
    sup.min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Exp};

    fn exp_sample(n: usize, seed: u64) -> EmpiricalDist {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let e = Exp::new(1.0).unwrap();
        EmpiricalDist::new((0..n).map(|_| e.sample(&mut rng)).collect(), "exp")
    }

    #[test]
    fn ks_examples() {
        let a = exp_sample(1000, 1);
        assert_eq!(ks_distance(&a, &a), 0.0);
        assert_eq!(ks_distance(&EmpiricalDist::point_mass(0.0, 3), &EmpiricalDist::point_mass(1.0, 5)), 1.0);
        let big = exp_sample(100_000, 2);
        assert!(ks_to_law(&big, ClosedForm::Exponential { rate: 1.0 }) < 0.01);
        assert_eq!(ks_to_law(&EmpiricalDist::point_mass(2.0, 4), ClosedForm::PointMass { at: 2.0 }), 0.0);
    }

    #[test]
    fn exponential_versus_gamma_two() {
        // sup_x |F_Exp − F_Gamma(2)| = sup_x x e^{−x} = e^{−1}
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let e = Exp::new(1.0).unwrap();
        let a = EmpiricalDist::new((0..100_000).map(|_| e.sample(&mut rng)).collect(), "exp");
        let b = EmpiricalDist::new((0..100_000).map(|_| e.sample(&mut rng) + e.sample(&mut rng)).collect(), "gamma2");
        let d = ks_distance(&a, &b);
        assert!((d - (-1.0f64).exp()).abs() < 0.01, "{d}");
    }

    #[test]
    fn weighted_two_sample_matches_expanded() {
        let w = EmpiricalDist::weighted(vec![1.0, 3.0], vec![0.25, 0.75], "w").unwrap();
        let expanded = EmpiricalDist::new(vec![1.0, 3.0, 3.0, 3.0], "e");
        assert!(ks_distance(&w, &expanded) < 1e-15);
        assert!((w.mean() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn size_bias_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sb = size_bias(&exp_sample(100_000, 5), &mut rng, 100_000).unwrap();
        assert!((sb.mean() - 2.0).abs() < 0.05);
        assert!(ks_to_law(&sb, ClosedForm::Gamma { shape: 2.0, rate: 1.0 }) < 0.02);
        let c = size_bias(&EmpiricalDist::point_mass(1.7, 10), &mut rng, 50).unwrap();
        assert!(c.samples.iter().all(|x| *x == 1.7));
        let two = EmpiricalDist::new(vec![1.0, 3.0], "two");
        let sb = size_bias(&two, &mut rng, 100_000).unwrap();
        let p3 = sb.samples.iter().filter(|x| **x == 3.0).count() as f64 / 1e5;
        assert!((p3 - 0.75).abs() < 4.0 * (0.75 * 0.25 / 1e5f64).sqrt());
        assert!(matches!(size_bias(&EmpiricalDist::point_mass(0.0, 3), &mut rng, 5), Err(Error::ZeroMean)));
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let a = exp_sample(100, 6);
        a.write_csv(&path).unwrap();
        let b = EmpiricalDist::read_csv(&path).unwrap();
        assert_eq!(a.samples, b.samples);
    }
}
