//! Detection of active devices through an intelligent reflecting surface (IRS).
//!
//! The crate covers the full chain from geometry to coverage studies:
//!
//! * [`geometry`]: unit-cell indexing, wave vectors, coverage-area grids.
//! * [`irs`]: steering vectors, unit-cell factor, reflected-field response.
//! * [`channel`]: free-space LoS links and the scattered device-IRS paths.
//! * [`detector`]: GLRT statistic, threshold and misdetection probability.
//! * [`designs`]: worst-case (SDR), tiled-linear and quadratic phase profiles.
//! * [`simulation`]: misdetection maps, area sweeps and Monte-Carlo runs.

pub mod channel;
pub mod designs;
pub mod detector;
pub mod error;
pub mod geometry;
pub mod irs;
pub(crate) mod linalg;
pub mod rng;
pub mod simulation;

pub use error::{Error, Result};
