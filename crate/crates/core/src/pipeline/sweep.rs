//! Parameter sweeps: many realizations per grid value, summarized with
//! bootstrap intervals.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::heuristics::{heuristic_scores, Method};
use crate::info::InfoReport;
use crate::metrics::{auc, MetricsReport};
use crate::sampler::SamplerConfig;

use super::config::{ExperimentConfig, ModelSpec, SweepConfig, SweepTarget};
use super::generate::{generate_realization, realization_seed};
use super::reconstruct::reconstruct;
use super::stats::{bootstrap_mean, derive_seed, tag, Interval};

/// Scalar quantities summarized at every grid point, besides heuristic AUCs.
pub const METRICS: [&str; 9] = [
    "auc",
    "posterior_loss",
    "mean_error",
    "jaccard",
    "reconstruction_index",
    "information_gain",
    "lambda",
    "log_evidence",
    "evidence_cross_entropy",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub point: usize,
    pub value: f64,
    pub realization: usize,
    pub data_seed: u64,
    pub sampler_seed: u64,
    pub info: Option<InfoReport>,
    pub metrics: Option<MetricsReport>,
    pub heuristic_auc: BTreeMap<String, Option<f64>>,
    pub error: Option<String>,
}

impl SweepRecord {
    /// Value of a named quantity, when this record has it.
    pub fn get(&self, name: &str) -> Option<f64> {
        let info = self.info.as_ref();
        let metrics = self.metrics.as_ref();
        let v = match name {
            "auc" => metrics.and_then(|m| m.auc),
            "posterior_loss" => metrics.filter(|m| !m.loss_infinite).map(|m| m.posterior_loss),
            "mean_error" => metrics.map(|m| m.mean_error),
            "jaccard" => metrics.and_then(|m| m.jaccard),
            "reconstruction_index" => info.and_then(|i| i.reconstruction_index),
            "information_gain" => info.map(|i| i.information_gain),
            "lambda" => info.map(|i| i.lambda),
            "log_evidence" => info.map(|i| i.log_evidence),
            "evidence_cross_entropy" => info.map(|i| -i.log_evidence),
            other => other.strip_prefix("auc_").and_then(|h| self.heuristic_auc.get(h).copied().flatten()),
        };
        v.filter(|x| x.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub point: usize,
    pub value: f64,
    pub realizations: usize,
    pub failures: usize,
    pub summaries: BTreeMap<String, Interval>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub parameter: String,
    pub target: SweepTarget,
    pub level: f64,
    /// Column order of the summary table.
    pub quantities: Vec<String>,
    pub points: Vec<SweepPoint>,
    pub records: Vec<SweepRecord>,
}

impl SweepReport {
    /// Per-point means of a quantity, `None` where it is undefined.
    pub fn means(&self, name: &str) -> Vec<Option<f64>> {
        self.points.iter().map(|p| p.summaries.get(name).map(|s| s.mean)).collect()
    }
}

fn quantities(heuristics: &[Method]) -> Vec<String> {
    METRICS.iter().map(|s| s.to_string()).chain(heuristics.iter().map(|h| format!("auc_{h}"))).collect()
}

fn with_param(model: &ModelSpec, name: &str, value: f64) -> Result<ModelSpec> {
    let mut m = model.clone();
    m.dynamics.set_param(name, value)?;
    Ok(m)
}

struct Task {
    point: usize,
    value: f64,
    realization: usize,
}

fn run_task(cfg: &ExperimentConfig, sweep: &SweepConfig, task: &Task) -> SweepRecord {
    let data_seed = match sweep.target {
        SweepTarget::Inference => realization_seed(cfg.seed, task.realization),
        _ => derive_seed(cfg.seed, &[tag::DATA, task.realization as u64, task.point as u64 + 1]),
    };
    let sampler_seed = derive_seed(cfg.seed, &[tag::SAMPLER, task.point as u64, task.realization as u64]);
    let mut record = SweepRecord {
        point: task.point,
        value: task.value,
        realization: task.realization,
        data_seed,
        sampler_seed,
        info: None,
        metrics: None,
        heuristic_auc: BTreeMap::new(),
        error: None,
    };
    let outcome = (|| -> Result<()> {
        let truth = match sweep.target {
            SweepTarget::Inference => cfg.truth(),
            _ => with_param(&cfg.truth(), &sweep.parameter, task.value)?,
        };
        let inference = match sweep.target {
            SweepTarget::Data => cfg.inference_model(),
            _ => with_param(&cfg.inference_model(), &sweep.parameter, task.value)?,
        };
        let data = generate_realization(&truth, cfg.n, cfg.t, task.realization, data_seed)?;
        for &h in &cfg.heuristics {
            let a = heuristic_scores(&data.series, h).and_then(|s| auc(&data.graph, &s.symmetrized())).ok();
            record.heuristic_auc.insert(h.to_string(), a);
        }
        let sampler = SamplerConfig { seed: sampler_seed, ..cfg.sampler.clone() };
        let r = reconstruct(&data.series, &inference, &sampler, &cfg.estimator, Some(&data.graph))?;
        record.info = Some(r.report.info);
        record.metrics = r.report.metrics;
        Ok(())
    })();
    if let Err(e) = outcome {
        record.error = Some(e.to_string());
    }
    record
}

/// Runs every (grid value, realization) pair as an independent task.
///
/// A failing task is kept with its error message; the remaining
/// realizations of that point still contribute to its summary.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| Error::InvalidModel("the configuration has no sweep block".into()))?;
    let tasks: Vec<Task> = sweep
        .values
        .iter()
        .enumerate()
        .flat_map(|(point, &value)| (0..cfg.realizations).map(move |realization| Task { point, value, realization }))
        .collect();
    let records: Vec<SweepRecord> = tasks.par_iter().map(|t| run_task(cfg, sweep, t)).collect();
    let names = quantities(&cfg.heuristics);
    let points = sweep
        .values
        .iter()
        .enumerate()
        .map(|(point, &value)| {
            let mine: Vec<&SweepRecord> = records.iter().filter(|r| r.point == point).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[tag::BOOTSTRAP, point as u64]));
            let mut summaries = BTreeMap::new();
            for name in &names {
                let values: Vec<f64> = mine.iter().filter_map(|r| r.get(name)).collect();
                if let Some(ci) = bootstrap_mean(&values, sweep.level, sweep.resamples, &mut rng) {
                    summaries.insert(name.clone(), ci);
                }
            }
            SweepPoint {
                point,
                value,
                realizations: mine.len(),
                failures: mine.iter().filter(|r| r.error.is_some()).count(),
                summaries,
            }
        })
        .collect();
    Ok(SweepReport {
        parameter: sweep.parameter.clone(),
        target: sweep.target,
        level: sweep.level,
        quantities: names,
        points,
        records,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Summary table: one row per grid value with mean, interval and half-width
/// for every quantity.
pub fn write_summary_csv<W: std::io::Write>(w: W, report: &SweepReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![report.parameter.clone(), "realizations".into(), "failures".into()];
    for q in &report.quantities {
        for suffix in ["mean", "ci_low", "ci_high", "ci_half_width"] {
            header.push(format!("{q}_{suffix}"));
        }
    }
    out.write_record(&header)?;
    for p in &report.points {
        let mut row = vec![p.value.to_string(), p.realizations.to_string(), p.failures.to_string()];
        for q in &report.quantities {
            let s = p.summaries.get(q);
            row.push(cell(s.map(|s| s.mean)));
            row.push(cell(s.map(|s| s.low)));
            row.push(cell(s.map(|s| s.high)));
            row.push(cell(s.map(|s| s.half_width())));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// One row per realization, for scatter plots such as ψ against loss.
pub fn write_records_csv<W: std::io::Write>(w: W, report: &SweepReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![report.parameter.clone(), "realization".into(), "data_seed".into(), "error".into()];
    header.extend(report.quantities.iter().cloned());
    out.write_record(&header)?;
    for r in &report.records {
        let mut row = vec![r.value.to_string(), r.realization.to_string(), r.data_seed.to_string(), r.error.clone().unwrap_or_default()];
        row.extend(report.quantities.iter().map(|q| cell(r.get(q))));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(values: &str, target: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"n": 5, "T": 60, "seed": 2, "realizations": 3,
                "prior": {{"kind": "er_simple", "edge_count": {{"delta": 4}}}},
                "dynamics": {{"kind": "glauber", "coupling": 0.5}},
                "sampler": {{"sweeps": 60, "burn_in": 20, "thinning": 2}},
                "heuristics": ["corr"],
                "sweep": {{"parameter": "coupling", "values": {values}, "target": "{target}", "resamples": 200}}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn empty_grid_gives_empty_table() {
        let report = run_sweep(&config("[]", "both")).unwrap();
        assert!(report.points.is_empty() && report.records.is_empty());
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &report).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn summaries_cover_every_point() {
        let report = run_sweep(&config("[0.2, 1.0]", "both")).unwrap();
        assert_eq!(report.points.len(), 2);
        assert_eq!(report.records.len(), 6);
        for p in &report.points {
            assert_eq!((p.realizations, p.failures), (3, 0));
            let ci = p.summaries["auc"];
            assert!(ci.low <= ci.mean && ci.mean <= ci.high);
            assert!(p.summaries.contains_key("auc_corr"));
        }
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &report).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 7);
    }

    #[test]
    fn inference_sweeps_share_the_data() {
        let report = run_sweep(&config("[0.1, 0.9]", "inference")).unwrap();
        let seeds = |p: usize| report.records.iter().filter(|r| r.point == p).map(|r| r.data_seed).collect::<Vec<_>>();
        assert_eq!(seeds(0), seeds(1));
        let h = |p: usize| report.points[p].summaries["auc_corr"].mean;
        assert_eq!(h(0), h(1));
    }

    #[test]
    fn failures_are_recorded_per_point() {
        let mut cfg = config("[0.5]", "both");
        cfg.sampler.sweeps = 1;
        cfg.sampler.thinning = 5;
        let report = run_sweep(&cfg).unwrap();
        assert_eq!(report.points[0].failures, 3);
        assert!(report.records.iter().all(|r| r.error.is_some()));
        assert!(!report.points[0].summaries.contains_key("auc"));
        assert!(report.points[0].summaries.contains_key("auc_corr"));
    }

    #[test]
    fn sweeps_are_deterministic() {
        let a = run_sweep(&config("[0.3]", "both")).unwrap();
        let b = run_sweep(&config("[0.3]", "both")).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }
}
