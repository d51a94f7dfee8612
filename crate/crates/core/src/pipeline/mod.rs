//! End-to-end experiments: data generation, reconstruction, model
//! selection, predictive checks, spike ingestion and parameter sweeps.

pub mod config;
pub mod generate;
pub mod ppc;
pub mod reconstruct;
pub mod select;
pub mod spikes;
pub mod stats;
pub mod sweep;

pub use config::{Candidate, EstimatorConfig, ExperimentConfig, ModelSpec, SweepConfig, SweepTarget};
pub use generate::{run_generation, write_generation, Realization};
pub use ppc::{posterior_predictive_check, PpcConfig, PpcReport};
pub use reconstruct::{reconstruct, Reconstruction, ReconstructionReport};
pub use select::{run_model_selection, ModelSelectionReport};
pub use spikes::{ingest_spike_data, IngestConfig, SpikeData};
pub use sweep::{run_sweep, SweepReport};
