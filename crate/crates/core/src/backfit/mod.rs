//! Multivariate fitting by cyclic backfitting of exact univariate updates.

mod config;
mod data;
pub(crate) mod engine;
mod model;

pub use config::{CycleOrder, Direction, LisoConfig};
pub use data::{ColumnIndex, Dataset};
pub use engine::{
    covariate_zero_threshold, default_grid, fixed_point_gap, lambda_max, liso_fit, liso_fit_warm,
    liso_path, liso_path_until, objective,
};
pub use model::{AdditiveModel, Component, Diagnostics, STEP_SNAP};
