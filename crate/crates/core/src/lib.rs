//! Bayesian reconstruction of networks from binary time series, with the
//! information-theoretic measures that bound how well it can succeed.

pub mod activity;
pub mod dynamics;
pub mod error;
pub mod graph;
pub mod heuristics;
pub mod info;
pub mod logmath;
pub mod metrics;
pub mod pipeline;
pub mod priors;
pub mod sampler;
pub mod series;
pub mod single_edge;

pub use error::{Error, Result};
