//! Moment-inequality inference with locally robust refinement of the
//! identified set.
//!
//! The pieces, bottom up:
//!
//! - [`param`]: parameter points, grids and grid masks.
//! - [`moments`]: sample moments, the test statistic and `Γ̂_κ(β)`.
//! - [`bootstrap`]: resampling and the conservative and Bonferroni critical values.
//! - [`lrr`]: the sensitivity criterion `Q^LRR`, upper LRR sets and confidence regions.
//! - [`models`]: the top-coded regression and the two-player entry game.
//! - [`sim`]: simulation designs and coverage experiments.
//! - [`io`]: wage data, top-coding, configuration and report files.

pub mod bootstrap;
pub mod error;
pub mod io;
pub mod lrr;
pub mod models;
pub mod moments;
pub mod normal;
pub mod param;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
pub use param::{Axis, GridMask, Lattice, ParameterGrid, ParameterPoint};
