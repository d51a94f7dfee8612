//! Scores comparing a reconstruction against the true graph.
//!
//! Predictions are N×N matrices indexed by node pair; only the upper
//! triangle (i < j) is read.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Probabilities given to the true state are floored at this value inside the
/// posterior loss, so a confident miss costs a finite ~40 bits.
pub const CLIP: f64 = 1e-12;

fn check_shape(truth: &Graph, m: &[Vec<f64>]) -> Result<()> {
    let n = truth.n_nodes();
    if m.len() != n || m.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(format!("prediction matrix is not {n}×{n}")));
    }
    Ok(())
}

fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

fn present(truth: &Graph, i: usize, j: usize) -> bool {
    truth.multiplicity(i, j) > 0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorLoss {
    /// Loss with the floored probabilities.
    pub bits: f64,
    /// Set when an unclipped marginal of 0 or 1 contradicts the truth.
    pub infinite: bool,
}

/// −Σ_{i<j} [a log π + (1 − a) log(1 − π)] in bits.
pub fn posterior_loss(truth: &Graph, probs: &[Vec<f64>]) -> Result<PosteriorLoss> {
    check_shape(truth, probs)?;
    let mut bits = 0.0;
    let mut infinite = false;
    for (i, j) in upper_pairs(truth.n_nodes()) {
        let p = probs[i][j];
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidModel(format!("marginal {p} outside [0, 1]")));
        }
        let hit = if present(truth, i, j) { p } else { 1.0 - p };
        infinite |= hit == 0.0;
        bits -= hit.max(CLIP).log2();
    }
    Ok(PosteriorLoss { bits, infinite })
}

/// Mean absolute difference between the adjacency and the marginals.
pub fn mean_error(truth: &Graph, probs: &[Vec<f64>]) -> Result<f64> {
    check_shape(truth, probs)?;
    let n = truth.n_nodes();
    let pairs = n * n.saturating_sub(1) / 2;
    if pairs == 0 {
        return Err(Error::Undefined("no node pairs".into()));
    }
    let total: f64 = upper_pairs(n).map(|(i, j)| ((present(truth, i, j) as u8 as f64) - probs[i][j]).abs()).sum();
    Ok(total / pairs as f64)
}

/// Area under the ROC curve in its Mann–Whitney form, ties counting ½.
pub fn auc(truth: &Graph, scores: &[Vec<f64>]) -> Result<f64> {
    check_shape(truth, scores)?;
    let mut labelled: Vec<(f64, bool)> =
        upper_pairs(truth.n_nodes()).map(|(i, j)| (scores[i][j], present(truth, i, j))).collect();
    if labelled.iter().any(|(s, _)| s.is_nan()) {
        return Err(Error::InvalidModel("NaN score".into()));
    }
    let positives = labelled.iter().filter(|(_, y)| *y).count();
    let negatives = labelled.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::Undefined("AUC needs at least one edge and one non-edge".into()));
    }
    labelled.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Sum of mid-ranks of the positives.
    let mut rank_sum = 0.0;
    let mut k = 0;
    while k < labelled.len() {
        let mut end = k;
        while end + 1 < labelled.len() && labelled[end + 1].0 == labelled[k].0 {
            end += 1;
        }
        let mid = (k + end) as f64 / 2.0 + 1.0;
        rank_sum += mid * labelled[k..=end].iter().filter(|(_, y)| *y).count() as f64;
        k = end + 1;
    }
    let (p, q) = (positives as f64, negatives as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * q))
}

fn edge_set(g: &Graph) -> Vec<(usize, usize)> {
    g.pairs().into_iter().filter(|(i, j, _)| i != j).map(|(i, j, _)| (i, j)).collect()
}

/// Posterior mean of |E* ∩ Ê| / |E* ∪ Ê| over sampled graphs.
pub fn jaccard_similarity(truth: &Graph, samples: &[Graph]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("no sampled graphs".into()));
    }
    let star = edge_set(truth);
    let mut total = 0.0;
    for g in samples {
        if g.n_nodes() != truth.n_nodes() {
            return Err(Error::DimensionMismatch("sampled graph size differs from truth".into()));
        }
        let other = edge_set(g);
        let inter = star.iter().filter(|e| other.binary_search(e).is_ok()).count();
        let union = star.len() + other.len() - inter;
        total += if union == 0 { 1.0 } else { inter as f64 / union as f64 };
    }
    Ok(total / samples.len() as f64)
}

/// Fano lower bound on the error probability, max(0, 1 − (I + 1)/H).
pub fn fano_error_bound(mutual_information: f64, graph_entropy: f64) -> Result<f64> {
    if !(graph_entropy > 0.0) {
        return Err(Error::Undefined(format!("graph entropy {graph_entropy}")));
    }
    Ok((1.0 - (mutual_information + 1.0) / graph_entropy).max(0.0))
}

/// Ψ ≈ 1 − E[loss]/H(G).
pub fn reconstructability_from_loss(expected_loss: f64, graph_entropy: f64) -> Result<f64> {
    if !(graph_entropy > 0.0) {
        return Err(Error::Undefined(format!("graph entropy {graph_entropy}")));
    }
    Ok(1.0 - expected_loss / graph_entropy)
}

/// Reconstruction scores for one experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub posterior_loss: f64,
    pub loss_infinite: bool,
    pub mean_error: f64,
    /// `None` when the true graph is empty or complete.
    pub auc: Option<f64>,
    pub jaccard: Option<f64>,
}

impl MetricsReport {
    pub fn compute(truth: &Graph, probs: &[Vec<f64>], samples: Option<&[Graph]>) -> Result<Self> {
        let loss = posterior_loss(truth, probs)?;
        Ok(MetricsReport {
            posterior_loss: loss.bits,
            loss_infinite: loss.infinite,
            mean_error: mean_error(truth, probs)?,
            auc: auc(truth, probs).ok(),
            jaccard: samples.map(|s| jaccard_similarity(truth, s)).transpose()?,
        })
    }
}
