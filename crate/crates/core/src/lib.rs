//! Risk-aware multi-vehicle path assignment on uncertain semantic maps.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`terrain`] reduces stochastic segmentation samples to a label map, a
//!    per-pixel uncertainty map and a risk-weighted cost map.
//! 2. [`planner`] plans K candidate paths per (vehicle, demand) pair with A*,
//!    one per risk weight λ.
//! 3. [`efficiency`] samples travel efficiency of every candidate by
//!    resampling whole segmentation layers.
//! 4. [`assignment`] picks a one-path-per-vehicle assignment maximising the
//!    CVaR of total efficiency with a sequential greedy over a τ grid.
//!
//! [`pipeline`] wires the stages together behind a JSON scenario file.

pub mod assignment;
pub mod efficiency;
mod error;
mod par;
pub mod pipeline;
pub mod planner;
pub mod seed;
pub mod terrain;

pub use error::{Error, Result};
pub use par::init_thread_pool;
