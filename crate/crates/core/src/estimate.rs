use serde::{Deserialize, Serialize};

/// Where a number came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Exact,
    MonteCarlo,
    Quadrature,
}

/// A numerical estimate with its error budget.
///
/// `std_error` is the Monte Carlo standard error (zero for exact values);
/// `bound` is a deterministic error bound (quadrature or truncation), zero
/// when none applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    #[serde(default)]
    pub bound: f64,
    pub provenance: Provenance,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate { value, std_error: 0.0, bound: 0.0, provenance: Provenance::Exact }
    }

    pub fn quadrature(value: f64, bound: f64) -> Self {
        Estimate { value, std_error: 0.0, bound, provenance: Provenance::Quadrature }
    }

    pub fn monte_carlo(value: f64, std_error: f64) -> Self {
        Estimate { value, std_error, bound: 0.0, provenance: Provenance::MonteCarlo }
    }

    /// Sample mean and standard error of `xs`.
    pub fn from_samples(xs: &[f64]) -> Self {
        let (mean, se) = mean_and_se(xs);
        Estimate::monte_carlo(mean, se)
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = bound;
        self
    }

    /// Half-width used by tolerance checks: `k` standard errors plus the bound.
    pub fn tolerance(&self, k: f64) -> f64 {
        k * self.std_error + self.bound
    }
}

/// Sequential mean and standard error; summation order is fixed so results
/// do not depend on how the samples were produced.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
