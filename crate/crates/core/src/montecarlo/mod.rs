//! Sample-level engines: BRW martingale, spine perpetuity, population
//! dynamics, shot noise, empirical distributions.

mod brw;
mod empirical;
mod population;
mod spine;
mod stable;

pub use brw::{simulate_brw_martingale, BrwResult, DEFAULT_POP_CAP};
pub use empirical::{ks_distance, ks_to_law, size_bias, ClosedForm, DistSampler, EmpiricalDist};
pub use population::{
    iterate_population, iterate_with, population_step, population_step_coupled, sample_shot_noise, PopulationRun,
    PopulationTrace, DEFAULT_POOL_SIZE,
};
pub use spine::{simulate_spine_perpetuity, SpineResult, PRODUCT_CUTOFF};
pub(crate) use spine::prefix_means_stable;
pub use stable::{draw_positive_stable, sample_positive_stable};
