//! Laplace-Stieltjes transforms on grids: Picard iteration, the `r_δ`
//! metric, stable transformations.

mod grid;
mod metric;
mod picard;
mod stable;

pub use grid::{
    estimate_alpha_m, least_squares, log_space, standard_args, AlphaM, LSTGrid, DEFAULT_POINTS, DEFAULT_S_MAX,
    DEFAULT_S_MIN, FIT_POINTS,
};
pub use metric::{
    contraction_ratio, contraction_report, r_delta_distance, CfTable, ContractionPair, ContractionReport, DistRef,
};
pub use picard::{picard_iterate, picard_step, PicardOptions, PicardRun, PicardTrace};
pub use stable::{inverse_stable_transform, stable_transform, stable_transform_sample};
