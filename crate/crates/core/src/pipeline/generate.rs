//! Synthetic (graph, series) pairs drawn from the generating model.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::Graph;
use crate::priors::Partition;
use crate::series::TimeSeries;

use super::config::{ExperimentConfig, ModelSpec};
use super::stats::{derive_seed, tag};

#[derive(Clone, Debug)]
pub struct Realization {
    pub index: usize,
    pub seed: u64,
    pub graph: Graph,
    pub partition: Option<Partition>,
    pub series: TimeSeries,
}

/// One draw of G from the prior and X from the dynamics on it.
pub fn generate_realization(model: &ModelSpec, n: usize, t: usize, index: usize, seed: u64) -> Result<Realization> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let drawn = model.prior.sample(n, &mut rng)?;
    let series = model.dynamics.simulate(&drawn.graph, t, &mut rng)?;
    Ok(Realization { index, seed, graph: drawn.graph, partition: drawn.partition, series })
}

/// Seed of realization `index` under the master seed.
pub fn realization_seed(master: u64, index: usize) -> u64 {
    derive_seed(master, &[tag::DATA, index as u64])
}

/// Generates `cfg.realizations` independent pairs in parallel.
pub fn run_generation(cfg: &ExperimentConfig) -> Result<Vec<Realization>> {
    let model = cfg.truth();
    (0..cfg.realizations)
        .into_par_iter()
        .map(|k| generate_realization(&model, cfg.n, cfg.t, k, realization_seed(cfg.seed, k)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub seed: u64,
    pub edges: u64,
    pub graph_file: String,
    pub series_file: String,
    pub partition: Option<Vec<usize>>,
}

/// Record of a generation run, enough to regenerate every file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationManifest {
    pub master_seed: u64,
    pub model: ModelSpec,
    pub n: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub realizations: Vec<ManifestEntry>,
}

pub fn graph_file_name(index: usize) -> String {
    format!("graph_{index:03}.edges")
}

pub fn series_file_name(index: usize) -> String {
    format!("series_{index:03}.txt")
}

/// Writes edge lists, series and `manifest.json` into `dir`.
pub fn write_generation(dir: &Path, cfg: &ExperimentConfig, realizations: &[Realization]) -> Result<GenerationManifest> {
    std::fs::create_dir_all(dir)?;
    let mut entries = Vec::with_capacity(realizations.len());
    for r in realizations {
        let graph_file = graph_file_name(r.index);
        let series_file = series_file_name(r.index);
        let mut w = BufWriter::new(File::create(dir.join(&graph_file))?);
        r.graph.write_edge_list(&mut w)?;
        w.flush()?;
        let mut w = BufWriter::new(File::create(dir.join(&series_file))?);
        r.series.write_text(&mut w)?;
        w.flush()?;
        entries.push(ManifestEntry {
            index: r.index,
            seed: r.seed,
            edges: r.graph.edge_count(),
            graph_file,
            series_file,
            partition: r.partition.as_ref().map(|p| p.labels().to_vec()),
        });
    }
    let manifest =
        GenerationManifest { master_seed: cfg.seed, model: cfg.truth(), n: cfg.n, t: cfg.t, realizations: entries };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    Graph::read_edge_list(BufReader::new(File::open(path)?))
}

pub fn read_series(path: &Path) -> Result<TimeSeries> {
    TimeSeries::read_text(BufReader::new(File::open(path)?))
}
