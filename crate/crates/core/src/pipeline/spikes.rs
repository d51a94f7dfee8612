//! Conversion of spike trains into binary activity series.
//!
//! Time is cut into `steps` bins of width `dt = duration / steps`. Each
//! spike switches its unit on from the bin that contains it for
//! `max(1, round(d / dt))` bins, with `d` exponentially distributed. The
//! full series is then split into equal consecutive segments; trailing bins
//! that do not fill a segment are dropped.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Spike times in seconds, one list per unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeData {
    pub duration: f64,
    pub units: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub steps: usize,
    /// Mean activation duration in seconds; zero gives single-bin activations.
    pub extension_mean: f64,
    pub segments: usize,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig { steps: 100_000, extension_mean: 0.012, segments: 100 }
    }
}

/// Number of active bins for an activation lasting `d` seconds.
pub fn activation_bins(d: f64, dt: f64) -> usize {
    ((d / dt).round() as usize).max(1)
}

fn draw_extension<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> Result<f64> {
    if mean == 0.0 {
        return Ok(0.0);
    }
    let law = Exp::new(1.0 / mean).map_err(|e| Error::InvalidModel(format!("extension mean {mean}: {e}")))?;
    Ok(law.sample(rng))
}

/// Binarizes every unit over the whole recording.
pub fn binarize<R: Rng + ?Sized>(data: &SpikeData, steps: usize, extension_mean: f64, rng: &mut R) -> Result<TimeSeries> {
    if !(data.duration > 0.0 && data.duration.is_finite()) {
        return Err(Error::InvalidModel(format!("recording duration {} must be positive", data.duration)));
    }
    if steps == 0 {
        return Err(Error::InvalidModel("at least one time step is required".into()));
    }
    if !(extension_mean >= 0.0 && extension_mean.is_finite()) {
        return Err(Error::InvalidModel(format!("extension mean {extension_mean} must be non-negative")));
    }
    let dt = data.duration / steps as f64;
    let mut x = TimeSeries::zeros(data.units.len(), steps);
    for (u, spikes) in data.units.iter().enumerate() {
        for &s in spikes {
            if !(s >= 0.0 && s <= data.duration) {
                return Err(Error::InvalidModel(format!(
                    "unit {u}: spike at {s} lies outside the recording [0, {}]",
                    data.duration
                )));
            }
            let start = ((s / dt).floor() as usize).min(steps - 1);
            let len = activation_bins(draw_extension(extension_mean, rng)?, dt);
            for t in start..(start + len).min(steps) {
                x.set(u, t, 1);
            }
        }
    }
    Ok(x)
}

/// Binarizes and splits into `cfg.segments` equal segments.
pub fn ingest_spike_data<R: Rng + ?Sized>(data: &SpikeData, cfg: &IngestConfig, rng: &mut R) -> Result<Vec<TimeSeries>> {
    if cfg.segments == 0 || cfg.segments > cfg.steps {
        return Err(Error::InvalidModel(format!("cannot split {} steps into {} segments", cfg.steps, cfg.segments)));
    }
    let x = binarize(data, cfg.steps, cfg.extension_mean, rng)?;
    let len = cfg.steps / cfg.segments;
    Ok((0..cfg.segments).map(|k| x.slice_time(k * len, (k + 1) * len)).collect())
}

/// Lengths of the maximal runs of ones in a row.
pub fn active_runs(row: &[u8]) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut current = 0;
    for &v in row {
        if v == 1 {
            current += 1;
        } else if current > 0 {
            runs.push(current);
            current = 0;
        }
    }
    if current > 0 {
        runs.push(current);
    }
    runs
}
