//! Evidence-based choice among candidate reconstruction models.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::SamplerConfig;
use crate::series::TimeSeries;

use super::config::{Candidate, EstimatorConfig};
use super::reconstruct::{reconstruct, ReconstructionReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub name: String,
    pub log_evidence: Option<f64>,
    pub log_evidence_se: Option<f64>,
    pub reconstruction_index: Option<f64>,
    pub reconstruction_index_se: Option<f64>,
    pub lambda: Option<f64>,
    /// Per-chain estimates, for the spread across chains.
    pub chain_log_evidence: Vec<Option<f64>>,
    pub chain_reconstruction_index: Vec<Option<f64>>,
    /// Set when the candidate could not be evaluated.
    pub failure: Option<String>,
}

impl CandidateResult {
    pub fn failed(name: &str, reason: String) -> Self {
        CandidateResult {
            name: name.to_string(),
            log_evidence: None,
            log_evidence_se: None,
            reconstruction_index: None,
            reconstruction_index_se: None,
            lambda: None,
            chain_log_evidence: Vec::new(),
            chain_reconstruction_index: Vec::new(),
            failure: Some(reason),
        }
    }

    fn usable(&self) -> bool {
        self.failure.is_none() && self.log_evidence.is_some_and(f64::is_finite)
    }
}

/// Standard error of the mean over the finite entries, if at least two.
fn spread(values: &[Option<f64>]) -> Option<f64> {
    let v: Vec<f64> = values.iter().flatten().copied().filter(|x| x.is_finite()).collect();
    if v.len() < 2 {
        return None;
    }
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Some((var / k).sqrt())
}

impl From<(&str, &ReconstructionReport)> for CandidateResult {
    fn from((name, r): (&str, &ReconstructionReport)) -> Self {
        let chain_log_evidence: Vec<Option<f64>> = r.chains.iter().map(|c| c.log_evidence).collect();
        let chain_reconstruction_index: Vec<Option<f64>> = r.chains.iter().map(|c| c.reconstruction_index).collect();
        CandidateResult {
            name: name.to_string(),
            log_evidence: Some(r.info.log_evidence),
            log_evidence_se: spread(&chain_log_evidence).or(r.info.log_evidence_se),
            reconstruction_index: r.info.reconstruction_index,
            reconstruction_index_se: spread(&chain_reconstruction_index),
            lambda: Some(r.info.lambda),
            chain_log_evidence,
            chain_reconstruction_index,
            failure: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSelectionReport {
    pub candidates: Vec<CandidateResult>,
    /// Index of the chosen candidate; `None` when every candidate failed.
    pub selected: Option<usize>,
    pub selected_name: Option<String>,
    pub selected_reconstruction_index: Option<f64>,
    /// `bayes_factors[a][b]` = log₂ ζ_a − log₂ ζ_b.
    pub bayes_factors: Vec<Vec<Option<f64>>>,
}

/// Picks the highest evidence; ties go to the higher ψ, then to the earlier candidate.
pub fn rank_candidates(candidates: Vec<CandidateResult>) -> ModelSelectionReport {
    let mut selected: Option<usize> = None;
    for (k, c) in candidates.iter().enumerate() {
        if !c.usable() {
            continue;
        }
        let better = match selected {
            None => true,
            Some(b) => {
                let best = &candidates[b];
                let (ev, best_ev) = (c.log_evidence.unwrap(), best.log_evidence.unwrap());
                let psi = c.reconstruction_index.unwrap_or(f64::NEG_INFINITY);
                let best_psi = best.reconstruction_index.unwrap_or(f64::NEG_INFINITY);
                ev > best_ev || (ev == best_ev && psi > best_psi)
            }
        };
        if better {
            selected = Some(k);
        }
    }
    let bayes_factors = candidates
        .iter()
        .map(|a| {
            candidates
                .iter()
                .map(|b| match (a.usable(), b.usable()) {
                    (true, true) => Some(a.log_evidence.unwrap() - b.log_evidence.unwrap()),
                    _ => None,
                })
                .collect()
        })
        .collect();
    ModelSelectionReport {
        selected_name: selected.map(|k| candidates[k].name.clone()),
        selected_reconstruction_index: selected.and_then(|k| candidates[k].reconstruction_index),
        selected,
        bayes_factors,
        candidates,
    }
}

/// Reconstructs `x` under every candidate and selects the best supported one.
///
/// Candidates run in parallel. A candidate that errors is kept in the report
/// with its failure reason and excluded from the choice.
pub fn run_model_selection(
    x: &TimeSeries,
    candidates: &[Candidate],
    sampler: &SamplerConfig,
    estimator: &EstimatorConfig,
) -> Result<(ModelSelectionReport, Vec<Option<ReconstructionReport>>)> {
    if candidates.is_empty() {
        return Err(Error::InvalidModel("model selection needs at least one candidate".into()));
    }
    let runs: Vec<(CandidateResult, Option<ReconstructionReport>)> = candidates
        .par_iter()
        .map(|c| match reconstruct(x, &c.spec(), sampler, estimator, None) {
            Ok(r) => ((c.name.as_str(), &r.report).into(), Some(r.report)),
            Err(e) => (CandidateResult::failed(&c.name, e.to_string()), None),
        })
        .collect();
    let (results, reports): (Vec<_>, Vec<_>) = runs.into_iter().unzip();
    Ok((rank_candidates(results), reports))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// One row per candidate: evidence, ψ and their spreads.
pub fn write_selection_csv<W: std::io::Write>(w: W, report: &ModelSelectionReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["candidate", "log_evidence", "log_evidence_se", "psi", "psi_se", "lambda", "selected", "failure"])?;
    for (k, c) in report.candidates.iter().enumerate() {
        out.write_record([
            c.name.clone(),
            opt(c.log_evidence),
            opt(c.log_evidence_se),
            opt(c.reconstruction_index),
            opt(c.reconstruction_index_se),
            opt(c.lambda),
            (report.selected == Some(k)).to_string(),
            c.failure.clone().unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
