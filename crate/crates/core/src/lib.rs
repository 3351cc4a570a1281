//! Fixed points of branching-random-walk smoothing transforms.
//!
//! The smoothing transform maps the law of `U` to the law of `Σ Xᵢ Uᵢ`, where
//! `{Xᵢ}` is one realization of a point process (finite or infinite) and the
//! `Uᵢ` are conditionally i.i.d. copies of `U`. This crate evaluates the
//! existence criteria for its elementary fixed points, computes those fixed
//! points (on Laplace-transform grids and as Monte Carlo samples), and
//! studies their tails.
//!
//! Module map:
//! - [`models`]: weight models, realizations, moment functionals `t(β)`.
//! - [`criteria`]: characteristic roots, drift classification, `I_R` integrals.
//! - [`lst`]: Laplace transform grids, Picard iteration, the `r_δ` metric,
//!   stable transformations.
//! - [`montecarlo`]: BRW martingale, spine perpetuity, population dynamics.
//! - [`tails`]: moment conditions, Hill estimates, tail constant `C_b`.
//! - [`pitmanyor`]: the size-bias equation and its shot-noise representation.
//! - [`cli`]: scenario runner behind the `smoothfix` binary.

pub mod cli;
pub mod criteria;
pub mod error;
pub mod estimate;
pub mod lst;
pub mod models;
pub mod montecarlo;
pub mod pitmanyor;
pub mod quad;
pub mod seed;
pub mod tails;

pub use error::{Error, Result};
pub use estimate::{Estimate, Provenance};
pub use seed::Seed;
