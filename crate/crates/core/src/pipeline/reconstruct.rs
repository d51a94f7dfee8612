//! Posterior reconstruction of one dataset under one model.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::info::{estimate_log_evidence, information_gain, EdgeMarginals, EnumeratedPosterior, EstimatorKind, EvidenceEstimate, InfoReport};
use crate::metrics::MetricsReport;
use crate::sampler::{run_chains, MoveStats, PosteriorSample, SamplerConfig, SemiGreedyReport};
use crate::series::TimeSeries;

use super::config::{EstimatorConfig, ModelSpec};
use super::stats::{derive_seed, tag};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainSummary {
    pub chain: usize,
    pub samples: usize,
    pub edge_count: u64,
    pub stats: MoveStats,
    pub semi_greedy: Option<SemiGreedyReport>,
    pub log_evidence: Option<f64>,
    pub reconstruction_index: Option<f64>,
    /// Why the per-chain estimate is missing, when it is.
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub std_dev: f64,
}

/// Serializable outcome of a reconstruction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionReport {
    pub model: ModelSpec,
    pub info: InfoReport,
    pub evidence: Option<EvidenceEstimate>,
    pub metrics: Option<MetricsReport>,
    pub params: Vec<ParamSummary>,
    pub chains: Vec<ChainSummary>,
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub report: ReconstructionReport,
    /// Posterior probability that each pair is connected.
    pub edge_probs: Vec<Vec<f64>>,
    pub samples: Vec<PosteriorSample>,
}

fn param_summaries(model: &ModelSpec, samples: &[PosteriorSample]) -> Vec<ParamSummary> {
    let k = samples.len() as f64;
    model
        .dynamics
        .free
        .iter()
        .enumerate()
        .map(|(d, name)| {
            let mean = samples.iter().map(|s| s.params[d]).sum::<f64>() / k;
            let var = samples.iter().map(|s| (s.params[d] - mean).powi(2)).sum::<f64>() / k;
            ParamSummary { name: name.clone(), mean, std_dev: var.sqrt() }
        })
        .collect()
}

fn exact_edge_probs(post: &EnumeratedPosterior, n: usize) -> Vec<Vec<f64>> {
    let mut probs = vec![vec![0.0; n]; n];
    for (g, p) in post.support.graphs.iter().zip(post.graph_probabilities()) {
        for (i, j, _) in g.pairs() {
            probs[i][j] += p;
            if i != j {
                probs[j][i] += p;
            }
        }
    }
    probs
}

fn chain_estimate(samples: &[PosteriorSample], pseudo_count: f64) -> Result<(f64, Option<f64>)> {
    let ev = estimate_log_evidence(samples, pseudo_count)?;
    let info = information_gain(samples, &ev)?;
    Ok((ev.log_evidence, info.reconstruction_index))
}

/// Samples (or enumerates) the posterior of `model` given `x` and scores it
/// against `truth` when one is supplied.
pub fn reconstruct(
    x: &TimeSeries,
    model: &ModelSpec,
    sampler: &SamplerConfig,
    estimator: &EstimatorConfig,
    truth: Option<&Graph>,
) -> Result<Reconstruction> {
    model.validate(x.n_nodes())?;
    if let Some(g) = truth {
        if g.n_nodes() != x.n_nodes() {
            return Err(Error::DimensionMismatch(format!("true graph has {} nodes, series has {}", g.n_nodes(), x.n_nodes())));
        }
    }
    let (info, evidence, edge_probs, samples, chains) = match estimator.kind {
        EstimatorKind::Enumeration => {
            let post = EnumeratedPosterior::new(x, &model.prior, &model.dynamics)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(sampler.seed, &[tag::DRAWS]));
            let samples = post.draw(estimator.enumeration_draws.max(1), &mut rng);
            (post.report(), None, exact_edge_probs(&post, x.n_nodes()), samples, Vec::new())
        }
        EstimatorKind::MeanField => {
            let results = run_chains(Arc::new(x.clone()), &model.prior, &model.dynamics, sampler)?;
            let chains: Vec<ChainSummary> = results
                .iter()
                .enumerate()
                .map(|(c, r)| {
                    let (log_evidence, reconstruction_index, note) = match chain_estimate(&r.samples, estimator.pseudo_count) {
                        Ok((ev, psi)) => (Some(ev), psi, None),
                        Err(e) => (None, None, Some(e.to_string())),
                    };
                    ChainSummary {
                        chain: c,
                        samples: r.samples.len(),
                        edge_count: r.edge_count,
                        stats: r.stats.clone(),
                        semi_greedy: r.semi_greedy.clone(),
                        log_evidence,
                        reconstruction_index,
                        note,
                    }
                })
                .collect();
            let samples: Vec<PosteriorSample> = results.into_iter().flat_map(|r| r.samples).collect();
            if samples.is_empty() {
                return Err(Error::InsufficientSamples("the sampler kept no samples; raise sweeps or lower thinning".into()));
            }
            let evidence = estimate_log_evidence(&samples, estimator.pseudo_count)?;
            let info = information_gain(&samples, &evidence)?;
            let edge_probs = EdgeMarginals::from_samples(&samples, estimator.pseudo_count)?.edge_prob_matrix();
            (info, Some(evidence), edge_probs, samples, chains)
        }
    };
    let metrics = match truth {
        Some(g) => {
            let graphs: Vec<Graph> = samples.iter().map(|s| s.graph.clone()).collect();
            Some(MetricsReport::compute(g, &edge_probs, Some(&graphs))?)
        }
        None => None,
    };
    let report = ReconstructionReport {
        model: model.clone(),
        info,
        evidence,
        metrics,
        params: param_summaries(model, &samples),
        chains,
    };
    Ok(Reconstruction { report, edge_probs, samples })
}

/// Writes an N×N matrix as headerless CSV.
pub fn write_matrix_csv<W: std::io::Write>(w: W, m: &[Vec<f64>]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for row in m {
        out.write_record(row.iter().map(|v| v.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a headerless square CSV matrix.
pub fn read_matrix_csv<R: std::io::Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(r);
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|e| Error::Parse { line: line + 1, msg: format!("`{f}`: {e}") }))
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    let n = rows.len();
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("row {} has {} entries in a {n}-row matrix", bad + 1, rows[bad].len())));
    }
    Ok(rows)
}
