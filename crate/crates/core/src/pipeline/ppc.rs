//! Posterior predictive checks: replicate series simulated from posterior
//! draws are compared with the observed series through summary statistics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsModel;
use crate::error::{Error, Result};
use crate::heuristics::correlation_scores;
use crate::sampler::PosteriorSample;
use crate::series::TimeSeries;

use super::stats::quantile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpcConfig {
    /// Number K of replicate series.
    pub replicates: usize,
    /// Mass of the central predictive band.
    pub band: f64,
    /// Pairs with posterior edge probability above this count as connected.
    pub connection_threshold: f64,
}

impl Default for PpcConfig {
    fn default() -> Self {
        PpcConfig { replicates: 100, band: 0.9, connection_threshold: 0.5 }
    }
}

pub const STATISTICS: [&str; 4] = ["mean_rate", "rate_spread", "corr_connected", "corr_disconnected"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatisticCheck {
    pub name: String,
    pub observed: Option<f64>,
    /// Mid-rank position of the observed value among the replicates.
    pub quantile: Option<f64>,
    pub band_low: Option<f64>,
    pub band_high: Option<f64>,
    pub inside_band: Option<bool>,
    /// Replicates where the statistic was defined.
    pub replicates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeRateBand {
    pub node: usize,
    pub observed: f64,
    pub low: f64,
    pub median: f64,
    pub high: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpcReport {
    pub replicates: usize,
    pub band: f64,
    pub statistics: Vec<StatisticCheck>,
    pub node_rates: Vec<NodeRateBand>,
    /// Whether any statistic fell outside its band.
    pub extreme: bool,
}

impl PpcReport {
    pub fn statistic(&self, name: &str) -> Option<&StatisticCheck> {
        self.statistics.iter().find(|s| s.name == name)
    }
}

fn node_rates(x: &TimeSeries) -> Vec<f64> {
    let t = x.len().max(1) as f64;
    (0..x.n_nodes()).map(|i| x.row(i).iter().map(|&v| v as f64).sum::<f64>() / t).collect()
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// The scalar statistics of [`STATISTICS`], in that order.
pub fn summary_statistics(x: &TimeSeries, connected: &[Vec<bool>]) -> Result<[Option<f64>; 4]> {
    let rates = node_rates(x);
    let mean_rate = mean(&rates);
    let rate_spread = mean_rate.map(|m| (rates.iter().map(|r| (r - m).powi(2)).sum::<f64>() / rates.len() as f64).sqrt());
    let (mut on, mut off) = (Vec::new(), Vec::new());
    if x.len() >= 2 {
        let corr = correlation_scores(x)?.scores;
        for i in 0..x.n_nodes() {
            for j in i + 1..x.n_nodes() {
                if connected[i][j] {
                    on.push(corr[i][j]);
                } else {
                    off.push(corr[i][j]);
                }
            }
        }
    }
    Ok([mean_rate, rate_spread, mean(&on), mean(&off)])
}

/// Fraction of replicate values below `observed`, counting ties as half.
pub fn mid_rank(observed: f64, replicates: &[f64]) -> f64 {
    let below = replicates.iter().filter(|&&v| v < observed).count() as f64;
    let ties = replicates.iter().filter(|&&v| v == observed).count() as f64;
    (below + 0.5 * ties) / replicates.len() as f64
}

/// Simulates `cfg.replicates` series, each from a uniformly chosen posterior
/// draw with its free parameters, and locates the observed statistics in
/// the replicate distribution. Replicates start from the model's
/// initial-state law.
pub fn posterior_predictive_check(
    samples: &[PosteriorSample],
    dynamics: &DynamicsModel,
    x: &TimeSeries,
    edge_probs: &[Vec<f64>],
    cfg: &PpcConfig,
    seed: u64,
) -> Result<PpcReport> {
    if cfg.replicates < 2 {
        return Err(Error::InvalidModel("posterior predictive checks need at least two replicates".into()));
    }
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("no posterior samples to simulate from".into()));
    }
    let n = x.n_nodes();
    if edge_probs.len() != n || samples[0].graph.n_nodes() != n {
        return Err(Error::DimensionMismatch("posterior and series disagree on the node count".into()));
    }
    let connected: Vec<Vec<bool>> =
        edge_probs.iter().map(|row| row.iter().map(|&p| p > cfg.connection_threshold).collect()).collect();
    let observed = summary_statistics(x, &connected)?;
    let observed_rates = node_rates(x);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values: Vec<Vec<f64>> = vec![Vec::new(); STATISTICS.len()];
    let mut rates: Vec<Vec<f64>> = vec![Vec::with_capacity(cfg.replicates); n];
    for _ in 0..cfg.replicates {
        let s = &samples[rng.random_range(0..samples.len())];
        let mut model = dynamics.clone();
        for (name, &v) in dynamics.free.iter().zip(&s.params) {
            model.set_param(name, v)?;
        }
        let rep = model.simulate(&s.graph, x.len(), &mut rng)?;
        for (k, v) in summary_statistics(&rep, &connected)?.into_iter().enumerate() {
            if let Some(v) = v {
                values[k].push(v);
            }
        }
        for (i, r) in node_rates(&rep).into_iter().enumerate() {
            rates[i].push(r);
        }
    }

    let tail = (1.0 - cfg.band) / 2.0;
    let statistics: Vec<StatisticCheck> = STATISTICS
        .iter()
        .zip(observed)
        .zip(values)
        .map(|((name, obs), mut reps)| {
            reps.sort_by(|a, b| a.total_cmp(b));
            let defined = !reps.is_empty();
            let q = obs.filter(|_| defined).map(|o| mid_rank(o, &reps));
            StatisticCheck {
                name: name.to_string(),
                observed: obs,
                quantile: q,
                band_low: defined.then(|| quantile(&reps, tail)),
                band_high: defined.then(|| quantile(&reps, 1.0 - tail)),
                inside_band: q.map(|q| q >= tail && q <= 1.0 - tail),
                replicates: reps.len(),
            }
        })
        .collect();
    let node_rates = rates
        .into_iter()
        .zip(observed_rates)
        .enumerate()
        .map(|(node, (mut r, observed))| {
            r.sort_by(|a, b| a.total_cmp(b));
            NodeRateBand { node, observed, low: quantile(&r, tail), median: quantile(&r, 0.5), high: quantile(&r, 1.0 - tail) }
        })
        .collect();
    let extreme = statistics.iter().any(|s| s.inside_band == Some(false));
    Ok(PpcReport { replicates: cfg.replicates, band: cfg.band, statistics, node_rates, extreme })
}

/// Node-rate bands as CSV.
pub fn write_rates_csv<W: std::io::Write>(w: W, report: &PpcReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in &report.node_rates {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
