//! Decay profiles `h` of Poisson shot-noise weight models.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

fn one() -> f64 {
    1.0
}

/// A right-continuous nonincreasing function `h : [0, ∞) → [0, ∞)` with
/// finite integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DecayProfile {
    /// `h(t) = amplitude · exp(−rate · t)`.
    Exp {
        rate: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `h = heights[j]` on consecutive intervals of length `widths[j]`, then 0.
    Steps { heights: Vec<f64>, widths: Vec<f64> },
    /// Piecewise linear through `(t[k], h[k])` with `t[0] = 0`. Beyond the last
    /// knot `h` is 0, or decays as `h_last · exp(−tail_rate (t − t_last))`.
    Tabulated {
        t: Vec<f64>,
        h: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tail_rate: Option<f64>,
    },
}

/// Power-law behaviour `f(x) = coef · x^exponent` of an integrand for `x < below`.
#[derive(Debug, Clone, Copy)]
pub struct PowerTail {
    pub below: f64,
    pub coef: f64,
    pub exponent: f64,
}

const PANEL: f64 = 0.1;

impl DecayProfile {
    pub fn exp(rate: f64) -> Self {
        DecayProfile::Exp { rate, amplitude: 1.0 }
    }

    /// Step profile of height `c` on `[0, 1/c)`.
    pub fn step(height: f64, width: f64) -> Self {
        DecayProfile::Steps { heights: vec![height], widths: vec![width] }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidModel(format!("decay profile: {m}")));
        match self {
            DecayProfile::Exp { rate, amplitude } => {
                if !(rate.is_finite() && *rate > 0.0) || !(amplitude.is_finite() && *amplitude > 0.0) {
                    return bad("exp needs positive finite rate and amplitude");
                }
            }
            DecayProfile::Steps { heights, widths } => {
                if heights.is_empty() || heights.len() != widths.len() {
                    return bad("steps need matching nonempty heights and widths");
                }
                if heights.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
                    return bad("step heights must be positive");
                }
                if widths.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
                    return bad("step widths must be positive");
                }
                if heights.windows(2).any(|p| p[1] > p[0]) {
                    return bad("step heights must be nonincreasing");
                }
            }
            DecayProfile::Tabulated { t, h, tail_rate } => {
                if t.len() < 2 || t.len() != h.len() {
                    return bad("tabulated profile needs at least two (t, h) pairs");
                }
                if t[0] != 0.0 || t.windows(2).any(|p| !(p[1] > p[0])) {
                    return bad("tabulated t must start at 0 and increase strictly");
                }
                if h.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || h.windows(2).any(|p| p[1] > p[0]) {
                    return bad("tabulated h must be nonnegative and nonincreasing");
                }
                if h[0] <= 0.0 {
                    return bad("tabulated h must start positive");
                }
                if let Some(r) = tail_rate {
                    if !(r.is_finite() && *r > 0.0) || *h.last().unwrap() <= 0.0 {
                        return bad("exponential tail needs a positive rate and a positive last value");
                    }
                }
            }
        }
        Ok(())
    }

    /// `h(0+)`.
    pub fn initial(&self) -> f64 {
        match self {
            DecayProfile::Exp { amplitude, .. } => *amplitude,
            DecayProfile::Steps { heights, .. } => heights[0],
            DecayProfile::Tabulated { h, .. } => h[0],
        }
    }

    pub fn eval(&self, time: f64) -> f64 {
        let time = time.max(0.0);
        match self {
            DecayProfile::Exp { rate, amplitude } => amplitude * (-rate * time).exp(),
            DecayProfile::Steps { heights, widths } => {
                let mut edge = 0.0;
                for (hv, w) in heights.iter().zip(widths) {
                    edge += w;
                    if time < edge {
                        return *hv;
                    }
                }
                0.0
            }
            DecayProfile::Tabulated { t, h, tail_rate } => {
                let last = t.len() - 1;
                if time >= t[last] {
                    return match tail_rate {
                        Some(r) => h[last] * (-r * (time - t[last])).exp(),
                        None => 0.0,
                    };
                }
                let k = t.partition_point(|&tk| tk <= time) - 1;
                let frac = (time - t[k]) / (t[k + 1] - t[k]);
                h[k] + frac * (h[k + 1] - h[k])
            }
        }
    }

    /// Generalized inverse `h←(x) = inf{u : h(u) < x}`, equal to 0 for
    /// `x ≥ h(0+)`.
    pub fn inverse(&self, x: f64) -> f64 {
        if x >= self.initial() {
            return 0.0;
        }
        if x <= 0.0 {
            return self.support_end().unwrap_or(f64::INFINITY);
        }
        match self {
            DecayProfile::Exp { rate, amplitude } => (amplitude / x).ln() / rate,
            DecayProfile::Steps { heights, widths } => {
                let mut edge = 0.0;
                for (hv, w) in heights.iter().zip(widths) {
                    if *hv < x {
                        return edge;
                    }
                    edge += w;
                }
                edge
            }
            DecayProfile::Tabulated { t, h, tail_rate } => {
                for k in 0..t.len() - 1 {
                    if h[k + 1] < x {
                        if h[k] < x {
                            return t[k];
                        }
                        // h[k] >= x > h[k+1]; first u with h(u) < x
                        return t[k] + (h[k] - x) / (h[k] - h[k + 1]) * (t[k + 1] - t[k]);
                    }
                }
                let last = t.len() - 1;
                match tail_rate {
                    Some(r) => t[last] + (h[last] / x).ln() / r,
                    None => t[last],
                }
            }
        }
    }

    /// Right end of `{h > 0}`; `None` when the support is unbounded.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            DecayProfile::Exp { .. } => None,
            DecayProfile::Steps { widths, .. } => Some(widths.iter().sum()),
            DecayProfile::Tabulated { t, h, tail_rate } => {
                if tail_rate.is_some() {
                    return None;
                }
                let pos = h.iter().rposition(|v| *v > 0.0).unwrap_or(0);
                Some(if pos + 1 < t.len() { t[pos + 1] } else { t[t.len() - 1] })
            }
        }
    }

    /// `∫₀^∞ h`.
    pub fn integral(&self) -> f64 {
        self.tail_integral(0.0)
    }

    /// `∫_T^∞ h`.
    pub fn tail_integral(&self, from: f64) -> f64 {
        let from = from.max(0.0);
        match self {
            DecayProfile::Exp { rate, amplitude } => amplitude / rate * (-rate * from).exp(),
            DecayProfile::Steps { heights, widths } => {
                let mut edge = 0.0;
                let mut acc = 0.0;
                for (hv, w) in heights.iter().zip(widths) {
                    let lo = edge;
                    edge += w;
                    if edge > from {
                        acc += hv * (edge - lo.max(from));
                    }
                }
                acc
            }
            DecayProfile::Tabulated { t, h, tail_rate } => {
                let last = t.len() - 1;
                let mut acc = 0.0;
                for k in 0..last {
                    if t[k + 1] <= from {
                        continue;
                    }
                    let lo = t[k].max(from);
                    let h_lo = self.eval(lo);
                    acc += 0.5 * (h_lo + h[k + 1]) * (t[k + 1] - lo);
                }
                if let Some(r) = tail_rate {
                    let start = from.max(t[last]);
                    acc += h[last] * (-r * (start - t[last])).exp() / r;
                }
                acc
            }
        }
    }

    /// Smallest `T` with `∫_T^∞ h ≤ tol`.
    pub fn horizon(&self, tol: f64) -> f64 {
        if self.tail_integral(0.0) <= tol {
            return 0.0;
        }
        match self {
            DecayProfile::Exp { rate, amplitude } => ((amplitude / (rate * tol)).ln() / rate).max(0.0),
            DecayProfile::Tabulated { t, h, tail_rate: Some(r) } => {
                let last = t.len() - 1;
                let beyond = h[last] / r;
                if beyond > tol {
                    return t[last] + (beyond / tol).ln() / r;
                }
                self.bisect_horizon(0.0, t[last], tol)
            }
            _ => {
                let end = self.support_end().unwrap_or(0.0);
                self.bisect_horizon(0.0, end, tol)
            }
        }
    }

    fn bisect_horizon(&self, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.tail_integral(mid) <= tol {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= 1e-14 * hi.max(1.0) {
                break;
            }
        }
        hi
    }

    /// `∫₀^∞ h(t)^β dt` in closed form.
    pub fn power_integral(&self, beta: f64) -> f64 {
        self.power_integrals(beta).0
    }

    /// `∫₀^∞ h(t)^β log h(t) dt` in closed form.
    pub fn power_log_integral(&self, beta: f64) -> f64 {
        self.power_integrals(beta).1
    }

    fn power_integrals(&self, beta: f64) -> (f64, f64) {
        match self {
            DecayProfile::Exp { rate, amplitude } => {
                let base = amplitude.powf(beta) / (rate * beta);
                (base, base * (amplitude.ln() - 1.0 / beta))
            }
            DecayProfile::Steps { heights, widths } => heights.iter().zip(widths).fold((0.0, 0.0), |(a, b), (hv, w)| {
                let p = hv.powf(beta);
                (a + w * p, b + w * p * hv.ln())
            }),
            DecayProfile::Tabulated { t, h, tail_rate } => {
                let mut acc = (0.0, 0.0);
                for k in 0..t.len() - 1 {
                    let seg = linear_segment_power(h[k], h[k + 1], t[k + 1] - t[k], beta);
                    acc.0 += seg.0;
                    acc.1 += seg.1;
                }
                if let Some(r) = tail_rate {
                    let hl = h[t.len() - 1];
                    let base = hl.powf(beta) / (r * beta);
                    acc.0 += base;
                    acc.1 += base * (hl.ln() - 1.0 / beta);
                }
                acc
            }
        }
    }

    /// `∫₀^∞ f(h(t)) dt` for an integrand with `f(0) = 0`.
    ///
    /// `knots` are abscissae (in `x = h(t)` space) where `f` is only
    /// piecewise smooth; panels are aligned to them. `tail` gives the exact
    /// behaviour of `f` near zero and replaces quadrature there.
    pub fn levy_integral<F: Fn(f64) -> f64>(&self, f: &F, tail: Option<PowerTail>, knots: &[f64]) -> f64 {
        match self {
            DecayProfile::Steps { heights, widths } => heights.iter().zip(widths).map(|(hv, w)| w * f(*hv)).sum(),
            DecayProfile::Exp { rate, amplitude } => exp_levy(f, *amplitude, *rate, tail, knots),
            DecayProfile::Tabulated { t, h, tail_rate } => {
                let mut acc = 0.0;
                for k in 0..t.len() - 1 {
                    let dt = t[k + 1] - t[k];
                    let (hi, lo) = (h[k], h[k + 1]);
                    if hi == lo {
                        acc += dt * f(hi);
                        continue;
                    }
                    let jac = dt / (hi - lo);
                    let mut start = lo;
                    if let Some(tl) = tail {
                        if lo < tl.below {
                            let top = tl.below.min(hi);
                            acc += jac * tl.coef * (top.powf(tl.exponent + 1.0) - lo.powf(tl.exponent + 1.0))
                                / (tl.exponent + 1.0);
                            start = top;
                        }
                    }
                    if start <= 0.0 {
                        start = hi * 1e-12;
                    }
                    if hi > start {
                        let g = |v: f64| {
                            let x = v.exp();
                            f(x) * x
                        };
                        acc += jac * log_panels(&g, start.ln(), hi.ln(), knots);
                    }
                }
                if let Some(r) = tail_rate {
                    acc += exp_levy(f, h[t.len() - 1], *r, tail, knots);
                }
                acc
            }
        }
    }

    /// Sampler for a point with density proportional to `h(t)^β`.
    pub fn tilted(&self, beta: f64) -> TiltedSampler {
        match self {
            DecayProfile::Exp { rate, .. } => TiltedSampler::Exp { rate: rate * beta },
            DecayProfile::Steps { heights, widths } => {
                let mut cum = Vec::with_capacity(heights.len());
                let mut starts = Vec::with_capacity(heights.len());
                let mut edge = 0.0;
                let mut acc = 0.0;
                for (hv, w) in heights.iter().zip(widths) {
                    starts.push(edge);
                    acc += w * hv.powf(beta);
                    cum.push(acc);
                    edge += w;
                }
                TiltedSampler::Steps { cum, starts, widths: widths.clone() }
            }
            DecayProfile::Tabulated { t, h, tail_rate } => {
                let mut cum = Vec::with_capacity(t.len());
                let mut acc = 0.0;
                for k in 0..t.len() - 1 {
                    acc += linear_segment_power(h[k], h[k + 1], t[k + 1] - t[k], beta).0;
                    cum.push(acc);
                }
                if let Some(r) = tail_rate {
                    acc += h[t.len() - 1].powf(beta) / (r * beta);
                    cum.push(acc);
                }
                TiltedSampler::Tabulated { cum, t: t.clone(), h: h.clone(), beta, tail_rate: tail_rate.map(|r| r * beta) }
            }
        }
    }

    /// True when every positive value of `h` equals 1.
    pub fn is_unit_valued(&self) -> bool {
        match self {
            DecayProfile::Exp { .. } => false,
            DecayProfile::Steps { heights, .. } => heights.iter().all(|h| *h == 1.0),
            DecayProfile::Tabulated { h, tail_rate, .. } => {
                tail_rate.is_none() && h.iter().all(|v| *v == 1.0 || *v == 0.0) && h.windows(2).all(|p| p[0] == p[1] || p[1] == 0.0)
            }
        }
    }
}

fn exp_levy<F: Fn(f64) -> f64>(f: &F, amplitude: f64, rate: f64, tail: Option<PowerTail>, knots: &[f64]) -> f64 {
    let top = amplitude.ln();
    let (analytic, v_lo) = match tail {
        Some(tl) => {
            let b = tl.below.min(amplitude);
            (tl.coef * b.powf(tl.exponent) / tl.exponent, b.ln())
        }
        None => (0.0, top - 60.0),
    };
    let g = |v: f64| f(v.exp());
    (analytic + log_panels(&g, v_lo, top, knots)) / rate
}

/// Composite Gauss-Legendre over `[v_lo, v_hi]` with panel edges at `ln(knots)`.
fn log_panels<G: Fn(f64) -> f64>(g: &G, v_lo: f64, v_hi: f64, knots: &[f64]) -> f64 {
    if v_hi <= v_lo {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut start = v_lo;
    for &k in knots {
        if k <= 0.0 {
            continue;
        }
        let v = k.ln();
        if v <= start {
            continue;
        }
        if v >= v_hi {
            break;
        }
        acc += quad::composite(g, start, v, PANEL);
        start = v;
    }
    acc + quad::composite(g, start, v_hi, PANEL)
}

/// `(∫ x(t)^β dt, ∫ x(t)^β ln x(t) dt)` over one linear segment from `a` to `b`.
fn linear_segment_power(a: f64, b: f64, dt: f64, beta: f64) -> (f64, f64) {
    if a == b {
        if a == 0.0 {
            return (0.0, 0.0);
        }
        let p = a.powf(beta);
        return (dt * p, dt * p * a.ln());
    }
    let jac = dt / (a - b);
    let q = beta + 1.0;
    let prim = |x: f64| if x <= 0.0 { 0.0 } else { x.powf(q) / q };
    let prim_log = |x: f64| if x <= 0.0 { 0.0 } else { x.powf(q) * (x.ln() / q - 1.0 / (q * q)) };
    (jac * (prim(a) - prim(b)), jac * (prim_log(a) - prim_log(b)))
}

/// Draws `τ` with density proportional to `h(τ)^β`.
#[derive(Debug, Clone)]
pub enum TiltedSampler {
    Exp { rate: f64 },
    Steps { cum: Vec<f64>, starts: Vec<f64>, widths: Vec<f64> },
    Tabulated { cum: Vec<f64>, t: Vec<f64>, h: Vec<f64>, beta: f64, tail_rate: Option<f64> },
}

impl TiltedSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            TiltedSampler::Exp { rate } => Exp::new(*rate).unwrap().sample(rng),
            TiltedSampler::Steps { cum, starts, widths } => {
                let u = rng.random::<f64>() * cum[cum.len() - 1];
                let j = cum.partition_point(|c| *c <= u).min(cum.len() - 1);
                starts[j] + rng.random::<f64>() * widths[j]
            }
            TiltedSampler::Tabulated { cum, t, h, beta, tail_rate } => {
                let u = rng.random::<f64>() * cum[cum.len() - 1];
                let j = cum.partition_point(|c| *c <= u).min(cum.len() - 1);
                let segments = t.len() - 1;
                if j >= segments {
                    let last = t.len() - 1;
                    return t[last] + Exp::new(tail_rate.unwrap()).unwrap().sample(rng);
                }
                let (a, b) = (h[j], h[j + 1]);
                let dt = t[j + 1] - t[j];
                let v = rng.random::<f64>();
                if a == b {
                    return t[j] + v * dt;
                }
                let q = beta + 1.0;
                // x^q is uniform between b^q and a^q under the tilted law
                let xq = b.powf(q) + v * (a.powf(q) - b.powf(q));
                let x = xq.powf(1.0 / q);
                t[j] + (a - x) / (a - b) * dt
            }
        }
    }
}
