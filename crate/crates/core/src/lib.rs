//! Online non-parametric forecasting with nested exponentiated-gradient trees.
//!
//! The crate is organised bottom-up:
//!
//! - [`loss`]: bounded convex losses on `[0,1]²` and their subgradients.
//! - [`eg`]: the two-constant-expert exponentiated-gradient forecaster that
//!   tracks the best constant prediction.
//! - [`tree`]: the nested EG regression tree over `[0,1]^d`, one EG instance
//!   per leaf, splitting a leaf once its count outgrows its diameter.
//! - [`meta`]: autoregressive wrappers over lag windows, aggregated by an
//!   exponentially weighted forecaster whose expert pool grows over time.
//! - [`oracles`]: offline comparators (best constant, uniform histogram,
//!   best 1-D Lipschitz function).
//! - [`processes`]: seeded stationary ergodic generators with exact `L*`.
//! - [`harness`]: run logs, CSV/JSON interchange, bound verification and
//!   reports used by the command-line driver.
//!
//! Every forecaster follows the same protocol: predict for step `t`, then
//! observe the outcome `y_t`. The API shape makes it impossible to feed an
//! outcome before the prediction for that step has been collected.

pub mod eg;
pub mod error;
pub mod harness;
pub mod loss;
pub mod meta;
pub mod oracles;
pub mod processes;
pub mod tree;

pub use eg::EgState;
pub use error::{Error, Result};
pub use loss::LossSpec;
pub use meta::{MetaConfig, MetaForecaster, Schedule};
pub use tree::{NestedEgTree, TreePrediction};

/// Rejects values outside `[0,1]` (including NaN).
pub(crate) fn check_unit(what: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange { what, value })
    }
}
