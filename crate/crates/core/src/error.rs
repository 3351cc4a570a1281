use thiserror::Error;

use crate::lst::PicardRun;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("degenerate weights: every weight is a.s. 0 or 1, no fixed point exists")]
    DegenerateWeights,

    #[error("subcritical count: E L = {mean_count} <= 1")]
    SubcriticalCount { mean_count: f64 },

    #[error("horizon unbounded: tail mass stays above {tail_tol} up to t = {max_horizon}")]
    HorizonUnbounded { tail_tol: f64, max_horizon: f64 },

    #[error("divergent estimate: {0}")]
    Divergent(String),

    #[error("condition D_{beta} violated: t({beta}) = {t_value}")]
    ConditionDViolated { beta: f64, t_value: f64 },

    #[error("no root of t(beta) = 1 on ({lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("evaluation failed: {0}")]
    EvaluationFailed(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("transform underflowed to zero on the whole grid")]
    ProductUnderflow,

    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),

    #[error("Picard iteration did not converge (last sup change {last_change:e})", last_change = .best.last_change())]
    NoConvergence { best: Box<PicardRun> },

    #[error("means differ: {a} vs {b}")]
    MeanMismatch { a: f64, b: f64 },

    #[error("grid has no sample backing, characteristic function unavailable")]
    NoCharacteristicFunction,

    #[error("transform is identically 1 near zero")]
    DegenerateAtZero,

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("population cap of {cap} nodes exceeded")]
    PopulationCapExceeded { cap: usize },

    #[error("empty pool")]
    EmptyPool,

    #[error("pool mean collapsed from {initial} to {current} at iteration {iteration}")]
    MeanCollapse { initial: f64, current: f64, iteration: usize },

    #[error("distribution has zero mean")]
    ZeroMean,

    #[error("too few samples: got {got}, need {need}")]
    TooFewSamples { got: usize, need: usize },

    #[error("hypotheses violated: {0}")]
    HypothesesViolated(String),

    #[error("divergent inverse moment: {0}")]
    DivergentInverseMoment(String),

    #[error("mass deficit: total mass {total} differs from 1")]
    MassDeficit { total: f64 },

    #[error("no nontrivial solution: {0}")]
    NoSolution(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors that mean "the mathematics says no" rather than a tool failure.
    pub fn is_verdict(&self) -> bool {
        matches!(
            self,
            Error::DegenerateWeights
                | Error::SubcriticalCount { .. }
                | Error::ConditionDViolated { .. }
                | Error::NoRoot { .. }
                | Error::NoConvergence { .. }
                | Error::MeanCollapse { .. }
                | Error::HypothesesViolated(_)
                | Error::NoSolution(_)
                | Error::Divergent(_)
                | Error::PopulationCapExceeded { .. }
        )
    }
}
