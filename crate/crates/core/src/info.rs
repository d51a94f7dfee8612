//! Information measures and their estimators.
//!
//! Exact quantities come from enumerating the graph space (and, for mutual
//! information, the space of short time series). Sample-based estimates use a
//! mean-field approximation of the posterior, a Gaussian KDE for continuous
//! parameters and a membership-frequency entropy for SBM partitions.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsModel;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphMode, PairIndex};
use crate::logmath::{
    binary_entropy, entropy_term, log2_binomial, log2_multiset, log2_sum_exp, LOG_ZERO,
};
use crate::priors::{enumerate_graphs, enumerate_partitions, EdgeCountPrior, Partition, PriorKind, PriorModel};
use crate::sampler::PosteriorSample;
use crate::series::TimeSeries;

/// Upper limit on the number of (graph, hyperparameter) pairs enumerated.
pub const MAX_SUPPORT: usize = 2_000_000;
/// Upper limit on N·T when every time series is enumerated.
pub const MAX_SERIES_BITS: usize = 22;
/// Geometric edge-count priors are truncated once this much mass is left.
const GEOMETRIC_TAIL: f64 = 1e-13;
/// Λ below this is treated as zero.
const LAMBDA_FLOOR: f64 = 1e-12;

/// One (graph, hyperparameter) point of an enumerated prior.
#[derive(Clone, Debug)]
pub struct SupportEntry {
    /// Index into [`GraphSupport::graphs`].
    pub graph: usize,
    pub partition: Option<Partition>,
    /// log₂ P(G, θ).
    pub log_prior: f64,
}

/// The full support of a graph prior on `n` nodes.
#[derive(Clone, Debug)]
pub struct GraphSupport {
    pub graphs: Vec<Graph>,
    pub entries: Vec<SupportEntry>,
    /// log₂ P(G) with hyperparameters summed out, one per graph.
    pub marginal: Vec<f64>,
}

impl GraphSupport {
    pub fn enumerate(prior: &PriorModel, n: usize) -> Result<Self> {
        prior.validate(n)?;
        let mode = prior.graph_mode();
        let counts = support_edge_counts(prior, n)?;
        let pairs = PairIndex::for_mode(n, mode).len() as u64;
        let partitions = if prior.has_partition() { enumerate_partitions(n) } else { Vec::new() };
        let mut size = 0f64;
        for &e in &counts {
            let lg = match mode {
                GraphMode::Simple => log2_binomial(pairs, e),
                GraphMode::Multi => log2_multiset(pairs, e),
            };
            size += lg.exp2() * partitions.len().max(1) as f64;
        }
        if size > MAX_SUPPORT as f64 {
            return Err(Error::TooLarge(format!("prior support has about {size:.0} elements")));
        }

        let mut graphs = Vec::new();
        let mut entries = Vec::new();
        for &e in &counts {
            for g in enumerate_graphs(n, e, mode) {
                if let PriorKind::Cm { degrees } = &prior.kind {
                    if g.degrees() != degrees.as_slice() {
                        continue;
                    }
                }
                let idx = graphs.len();
                if prior.has_partition() {
                    for b in &partitions {
                        let lp = prior.log_prob(&g, Some(b))?;
                        entries.push(SupportEntry { graph: idx, partition: Some(b.clone()), log_prior: lp });
                    }
                } else {
                    let lp = prior.log_prob(&g, None)?;
                    entries.push(SupportEntry { graph: idx, partition: None, log_prior: lp });
                }
                graphs.push(g);
            }
        }
        let mut per_graph: Vec<Vec<f64>> = vec![Vec::new(); graphs.len()];
        for en in &entries {
            per_graph[en.graph].push(en.log_prior);
        }
        let marginal = per_graph.into_iter().map(log2_sum_exp).collect();
        Ok(GraphSupport { graphs, entries, marginal })
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    /// Total prior mass covered (below 1 only for truncated geometric priors).
    pub fn total_mass(&self) -> f64 {
        log2_sum_exp(self.marginal.iter().copied()).exp2()
    }

    /// Shannon entropy of the graph marginal, in bits.
    pub fn graph_entropy(&self) -> f64 {
        self.marginal.iter().map(|&l| entropy_term(l.exp2())).sum()
    }

    /// log₂ P(x | g, φ) for every graph, excluding the initial state.
    pub fn log_likelihoods(&self, dynamics: &DynamicsModel, x: &TimeSeries) -> Result<Vec<f64>> {
        self.graphs.iter().map(|g| dynamics.log_likelihood(g, x)).collect()
    }

    fn index_of(&self) -> HashMap<Vec<(usize, usize, u32)>, usize> {
        self.graphs.iter().enumerate().map(|(k, g)| (g.key(), k)).collect()
    }
}

fn support_edge_counts(prior: &PriorModel, n: usize) -> Result<Vec<u64>> {
    if let PriorKind::Cm { degrees } = &prior.kind {
        return Ok(vec![degrees.iter().sum::<u64>() / 2]);
    }
    let max_simple = (n * n.saturating_sub(1) / 2) as u64;
    let cap = if prior.graph_mode() == GraphMode::Simple { max_simple } else { u64::MAX };
    match prior.edge_count {
        EdgeCountPrior::Delta(e) => Ok(vec![e]),
        EdgeCountPrior::Geometric(_) => {
            let mut out = Vec::new();
            let mut mass = 0.0;
            let mut e = 0u64;
            while mass < 1.0 - GEOMETRIC_TAIL && e <= cap {
                mass += prior.edge_count.log_prob(e).exp2();
                out.push(e);
                e += 1;
                if out.len() > 10_000 {
                    return Err(Error::TooLarge("geometric edge-count prior has too heavy a tail".into()));
                }
            }
            Ok(out)
        }
    }
}

/// Midpoint grid over the free parameters; each point carries weight 1/Qᵈ
/// under the uniform parameter prior.
fn parameter_grid(dynamics: &DynamicsModel) -> Result<Vec<DynamicsModel>> {
    let d = dynamics.free.len();
    let q: usize = match d {
        0 => return Ok(vec![dynamics.clone()]),
        1 => 200,
        2 => 40,
        3 => 12,
        _ => return Err(Error::TooLarge(format!("quadrature over {d} free parameters"))),
    };
    let mut out = Vec::with_capacity(q.pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        let mut m = dynamics.clone();
        m.free.clear();
        for (k, name) in dynamics.free.iter().enumerate() {
            let (lo, hi) = DynamicsModel::param_bounds(name);
            m.set_param(name, lo + (idx[k] as f64 + 0.5) * (hi - lo) / q as f64)?;
        }
        out.push(m);
        let mut k = 0;
        loop {
            if k == d {
                return Ok(out);
            }
            idx[k] += 1;
            if idx[k] < q {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn require_fixed(dynamics: &DynamicsModel) -> Result<()> {
    if dynamics.free.is_empty() {
        Ok(())
    } else {
        Err(Error::InvalidModel("this computation needs fixed dynamics parameters".into()))
    }
}

/// Exact log₂ P(x) (initial state excluded), integrating free parameters by
/// midpoint quadrature under their uniform prior.
pub fn enumerate_evidence(x: &TimeSeries, prior: &PriorModel, dynamics: &DynamicsModel) -> Result<f64> {
    let support = GraphSupport::enumerate(prior, x.n_nodes())?;
    let grid = parameter_grid(dynamics)?;
    let log_w = -(grid.len() as f64).log2();
    let mut terms = Vec::with_capacity(grid.len());
    for model in &grid {
        let ll = support.log_likelihoods(model, x)?;
        terms.push(log_w + log2_sum_exp(support.marginal.iter().zip(&ll).map(|(p, l)| p + l)));
    }
    Ok(log2_sum_exp(terms))
}

/// Exact posterior over the prior's support for fixed dynamics parameters.
#[derive(Clone, Debug)]
pub struct EnumeratedPosterior {
    pub support: GraphSupport,
    /// log₂ P(x | g) per graph.
    pub log_likelihood: Vec<f64>,
    pub log_evidence: f64,
    /// log₂ P(g, θ | x) per support entry.
    pub log_posterior: Vec<f64>,
}

impl EnumeratedPosterior {
    pub fn new(x: &TimeSeries, prior: &PriorModel, dynamics: &DynamicsModel) -> Result<Self> {
        require_fixed(dynamics)?;
        let support = GraphSupport::enumerate(prior, x.n_nodes())?;
        let log_likelihood = support.log_likelihoods(dynamics, x)?;
        let joint: Vec<f64> = support.entries.iter().map(|e| e.log_prior + log_likelihood[e.graph]).collect();
        let log_evidence = log2_sum_exp(joint.iter().copied());
        if log_evidence == LOG_ZERO {
            return Err(Error::Undefined("data has zero probability under every graph".into()));
        }
        let log_posterior = joint.iter().map(|j| j - log_evidence).collect();
        Ok(EnumeratedPosterior { support, log_likelihood, log_evidence, log_posterior })
    }

    /// Posterior probability of each graph with hyperparameters summed out.
    pub fn graph_probabilities(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.support.len()];
        for (e, lp) in self.support.entries.iter().zip(&self.log_posterior) {
            p[e.graph] += lp.exp2();
        }
        p
    }

    /// Posterior probability of the graph `g` (zero when outside the support).
    pub fn probability_of(&self, g: &Graph) -> f64 {
        let key = g.key();
        match self.support.graphs.iter().position(|h| h.key() == key) {
            Some(k) => self.graph_probabilities()[k],
            None => 0.0,
        }
    }

    fn entry_probs(&self) -> impl Iterator<Item = (&SupportEntry, f64, f64)> + '_ {
        self.support.entries.iter().zip(&self.log_posterior).map(|(e, &lp)| (e, lp, lp.exp2()))
    }

    /// KL divergence of the posterior from the prior over (G, θ).
    pub fn information_gain_kl(&self) -> f64 {
        self.entry_probs().filter(|(_, _, p)| *p > 0.0).map(|(e, lp, p)| p * (lp - e.log_prior)).sum()
    }

    /// Expected log-likelihood under the posterior minus the log-evidence.
    pub fn information_gain_predictive(&self) -> f64 {
        let mean_ll: f64 =
            self.entry_probs().filter(|(_, _, p)| *p > 0.0).map(|(e, _, p)| p * self.log_likelihood[e.graph]).sum();
        mean_ll - self.log_evidence
    }

    /// Cross-entropy −E_post[log₂ P(G, θ)].
    pub fn lambda(&self) -> f64 {
        -self.entry_probs().filter(|(_, _, p)| *p > 0.0).map(|(e, _, p)| p * e.log_prior).sum::<f64>()
    }

    /// Entropy of the joint posterior over (G, θ).
    pub fn entropy(&self) -> f64 {
        self.entry_probs().map(|(_, _, p)| entropy_term(p)).sum()
    }

    /// Entropy of the graph marginal of the posterior.
    pub fn graph_entropy(&self) -> f64 {
        self.graph_probabilities().into_iter().map(entropy_term).sum()
    }

    /// Exact information report.
    pub fn report(&self) -> InfoReport {
        let mean_ll = self.information_gain_predictive() + self.log_evidence;
        InfoReport::assemble(
            EstimatorKind::Enumeration,
            self.support.entries.len(),
            self.log_evidence,
            None,
            mean_ll,
            self.lambda(),
            self.entropy(),
        )
    }

    /// Independent draws from the exact posterior, shaped like MCMC output.
    pub fn draw<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<PosteriorSample> {
        let cumulative: Vec<f64> = self
            .log_posterior
            .iter()
            .scan(0.0, |acc, lp| {
                *acc += lp.exp2();
                Some(*acc)
            })
            .collect();
        let total = *cumulative.last().unwrap_or(&1.0);
        (0..k)
            .map(|_| {
                let u = rng.random::<f64>() * total;
                let idx = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
                let entry = &self.support.entries[idx];
                PosteriorSample {
                    graph: self.support.graphs[entry.graph].clone(),
                    partition: entry.partition.clone(),
                    params: Vec::new(),
                    log_likelihood: self.log_likelihood[entry.graph],
                    log_prior: entry.log_prior,
                    log_param_density: 0.0,
                }
            })
            .collect()
    }
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    /// NaN when only one sample is available.
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientSamples("no values to average".into()));
        }
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let std_error = if values.len() < 2 {
            f64::NAN
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
            (var / k).sqrt()
        };
        Ok(McEstimate { mean, std_error, samples: values.len() })
    }
}

/// Monte Carlo estimate of I(G; X) using exact enumerated evidences.
pub fn enumerate_mutual_information<R: Rng + ?Sized>(
    prior: &PriorModel,
    dynamics: &DynamicsModel,
    n: usize,
    t: usize,
    k: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if k < 2 {
        return Err(Error::InsufficientSamples(format!("{k} Monte Carlo samples; need at least 2")));
    }
    require_fixed(dynamics)?;
    let support = GraphSupport::enumerate(prior, n)?;
    let index = support.index_of();
    let mut values = Vec::with_capacity(k);
    for _ in 0..k {
        let g = prior.sample(n, rng)?.graph;
        let x = dynamics.simulate(&g, t, rng)?;
        let ll = support.log_likelihoods(dynamics, &x)?;
        let own = match index.get(&g.key()) {
            Some(&idx) => ll[idx],
            None => dynamics.log_likelihood(&g, &x)?,
        };
        let evidence = log2_sum_exp(support.marginal.iter().zip(&ll).map(|(p, l)| p + l));
        values.push(own - evidence);
    }
    McEstimate::from_values(&values)
}

/// Calls `f` with every binary series of shape N×T.
fn for_each_series(n: usize, t: usize, mut f: impl FnMut(&TimeSeries) -> Result<()>) -> Result<()> {
    let bits = n * t;
    if bits > MAX_SERIES_BITS {
        return Err(Error::TooLarge(format!("enumerating 2^{bits} time series")));
    }
    let mut x = TimeSeries::zeros(n, t);
    for code in 0u64..(1u64 << bits) {
        for b in 0..bits {
            x.set(b % n, b / n, ((code >> b) & 1) as u8);
        }
        f(&x)?;
    }
    Ok(())
}

fn exact_mi_over(weights: &[(usize, f64)], support: &GraphSupport, dynamics: &DynamicsModel, n: usize, t: usize) -> Result<f64> {
    let mut mi = 0.0;
    for_each_series(n, t, |x| {
        let ll = support.log_likelihoods(dynamics, x)?;
        let init = dynamics.log_initial(x);
        let evidence = log2_sum_exp(weights.iter().map(|&(g, w)| w + ll[g]));
        for &(g, w) in weights {
            let lj = w + init + ll[g];
            if lj > LOG_ZERO {
                mi += lj.exp2() * (ll[g] - evidence);
            }
        }
        Ok(())
    })?;
    Ok(mi)
}

/// Exact I(G; X) by enumerating every graph and every N×T series.
pub fn exact_mutual_information(prior: &PriorModel, dynamics: &DynamicsModel, n: usize, t: usize) -> Result<f64> {
    require_fixed(dynamics)?;
    let support = GraphSupport::enumerate(prior, n)?;
    let weights: Vec<(usize, f64)> = support.marginal.iter().copied().enumerate().collect();
    exact_mi_over(&weights, &support, dynamics, n, t)
}

/// Exact I((G, θ); X), enumerating hyperparameters as part of the signal.
pub fn exact_mutual_information_joint(prior: &PriorModel, dynamics: &DynamicsModel, n: usize, t: usize) -> Result<f64> {
    require_fixed(dynamics)?;
    let support = GraphSupport::enumerate(prior, n)?;
    let weights: Vec<(usize, f64)> = support.entries.iter().map(|e| (e.graph, e.log_prior)).collect();
    exact_mi_over(&weights, &support, dynamics, n, t)
}

/// Per-pair distributions of the edge multiplicity under the posterior.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeMarginals {
    n: usize,
    mode: GraphMode,
    samples: usize,
    pseudo_count: f64,
    /// `dist[pair][m]` = π_ij(m); pairs follow [`PairIndex`] order.
    dist: Vec<Vec<f64>>,
}

impl EdgeMarginals {
    /// Plug-in frequencies, optionally smoothed by adding `pseudo_count` to
    /// every multiplicity between 0 and the largest one observed (at least 1).
    pub fn from_graphs<'a, I>(graphs: I, pseudo_count: f64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Graph>,
    {
        let mut iter = graphs.into_iter().peekable();
        let first = iter.peek().ok_or_else(|| Error::InsufficientSamples("no graphs for edge marginals".into()))?;
        let (n, mode) = (first.n_nodes(), first.mode());
        let index = PairIndex::for_mode(n, mode);
        let mut counts: Vec<Vec<f64>> = vec![vec![0.0; 2]; index.len()];
        let mut samples = 0usize;
        for g in iter {
            if g.n_nodes() != n {
                return Err(Error::DimensionMismatch(format!("graph with {} nodes among {n}-node samples", g.n_nodes())));
            }
            samples += 1;
            for c in counts.iter_mut() {
                c[0] += 1.0;
            }
            for (i, j, m) in g.pairs() {
                let c = &mut counts[index.index(i, j)];
                let m = m as usize;
                if c.len() <= m {
                    c.resize(m + 1, 0.0);
                }
                c[0] -= 1.0;
                c[m] += 1.0;
            }
        }
        for c in counts.iter_mut() {
            let total: f64 = c.iter().map(|v| v + pseudo_count).sum();
            for v in c.iter_mut() {
                *v = (*v + pseudo_count) / total;
            }
        }
        Ok(EdgeMarginals { n, mode, samples, pseudo_count, dist: counts })
    }

    /// Marginals of the posterior samples' graphs.
    pub fn from_samples(samples: &[PosteriorSample], pseudo_count: f64) -> Result<Self> {
        Self::from_graphs(samples.iter().map(|s| &s.graph), pseudo_count)
    }

    /// Marginals for a simple-graph product model with edge probabilities `p[pair]`.
    pub fn from_probabilities(n: usize, probs: &[f64]) -> Result<Self> {
        let index = PairIndex::new(n, false);
        if probs.len() != index.len() {
            return Err(Error::DimensionMismatch(format!("{} probabilities for {} pairs", probs.len(), index.len())));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::InvalidModel("edge probability outside [0, 1]".into()));
        }
        let dist = probs.iter().map(|&p| vec![1.0 - p, p]).collect();
        Ok(EdgeMarginals { n, mode: GraphMode::Simple, samples: 0, pseudo_count: 0.0, dist })
    }

    pub fn n_nodes(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn pseudo_count(&self) -> f64 {
        self.pseudo_count
    }

    fn pair(&self, i: usize, j: usize) -> Option<&[f64]> {
        if i >= self.n || j >= self.n || (i == j && self.mode == GraphMode::Simple) {
            return None;
        }
        Some(&self.dist[PairIndex::for_mode(self.n, self.mode).index(i, j)])
    }

    /// π_ij(m): probability that the pair carries `m` edge instances.
    pub fn prob(&self, i: usize, j: usize, m: u32) -> f64 {
        self.pair(i, j).and_then(|d| d.get(m as usize).copied()).unwrap_or(if m == 0 { 1.0 } else { 0.0 })
    }

    /// Probability that at least one edge joins `i` and `j`.
    pub fn edge_prob(&self, i: usize, j: usize) -> f64 {
        1.0 - self.prob(i, j, 0)
    }

    /// Posterior-mean number of edge instances between `i` and `j`.
    pub fn expected_multiplicity(&self, i: usize, j: usize) -> f64 {
        self.pair(i, j).map_or(0.0, |d| d.iter().enumerate().map(|(m, p)| m as f64 * p).sum())
    }

    /// Symmetric N×N matrix of edge-presence probabilities.
    pub fn edge_prob_matrix(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, j) in PairIndex::for_mode(self.n, self.mode).pairs() {
            let p = self.edge_prob(i, j);
            out[i][j] = p;
            out[j][i] = p;
        }
        out
    }

    /// log₂ of the mean-field posterior probability of `g`.
    pub fn log_prob(&self, g: &Graph) -> f64 {
        let mut lp = 0.0;
        for (k, (i, j)) in PairIndex::for_mode(self.n, self.mode).pairs().enumerate() {
            let m = g.edge_instances(i, j) as usize;
            let p = self.dist[k].get(m).copied().unwrap_or(0.0);
            if p <= 0.0 {
                return LOG_ZERO;
            }
            lp += p.log2();
        }
        lp
    }

    /// Entropy of the mean-field posterior, Σ_ij H(π_ij).
    pub fn entropy(&self) -> f64 {
        self.dist.iter().map(|d| d.iter().copied().map(entropy_term).sum::<f64>()).sum()
    }
}

/// log₂ of the mean-field posterior probability of `g`.
pub fn mf_posterior_log_prob(g: &Graph, marginals: &EdgeMarginals) -> Result<f64> {
    if g.n_nodes() != marginals.n_nodes() {
        return Err(Error::DimensionMismatch(format!(
            "graph has {} nodes, marginals cover {}",
            g.n_nodes(),
            marginals.n_nodes()
        )));
    }
    Ok(marginals.log_prob(g))
}

/// One simulated dataset for the mean-field mutual-information estimator.
#[derive(Clone, Debug)]
pub struct MfDataset {
    /// The graph that generated the data.
    pub truth: Graph,
    /// log₂ P(truth) under the generating prior.
    pub log_prior: f64,
    /// Edge marginals of the posterior given that dataset's observations.
    pub marginals: EdgeMarginals,
}

/// Mean-field lower-bound estimate of I(G; X).
pub fn mf_mutual_information(datasets: &[MfDataset]) -> Result<McEstimate> {
    if datasets.is_empty() {
        return Err(Error::InsufficientSamples("no datasets".into()));
    }
    let values: Vec<f64> = datasets
        .iter()
        .map(|d| Ok(mf_posterior_log_prob(&d.truth, &d.marginals)? - d.log_prior))
        .collect::<Result<_>>()?;
    McEstimate::from_values(&values)
}

/// Differential entropy of a Gaussian KDE fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KdeEntropy {
    pub bits: f64,
    pub bandwidth: f64,
    /// Set when the samples have zero spread; `bits` is then −∞.
    pub degenerate: bool,
}

/// Minimum number of samples accepted by [`kde_param_entropy`].
pub const KDE_MIN_SAMPLES: usize = 10;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Resubstitution estimate −(1/n) Σ log₂ f̂(xᵢ) of the differential entropy (bits),
/// with f̂ a Gaussian KDE using Silverman's bandwidth.
pub fn kde_param_entropy(samples: &[f64]) -> Result<KdeEntropy> {
    if samples.len() < KDE_MIN_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "{} parameter samples; KDE needs at least {KDE_MIN_SAMPLES}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidModel("non-finite parameter sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let sd = (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if sorted[0] == sorted[sorted.len() - 1] || spread <= 0.0 {
        return Ok(KdeEntropy { bits: LOG_ZERO, bandwidth: 0.0, degenerate: true });
    }
    let h = 0.9 * spread * n.powf(-0.2);

    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    let reach = 8.0 * h;
    let mut total = 0.0;
    for &y in &sorted {
        let start = sorted.partition_point(|&s| s < y - reach);
        let end = sorted.partition_point(|&s| s <= y + reach);
        let f: f64 = sorted[start..end].iter().map(|&s| (-0.5 * ((y - s) / h).powi(2)).exp()).sum::<f64>() * norm;
        total -= f.log2();
    }
    Ok(KdeEntropy { bits: total / n, bandwidth: h, degenerate: false })
}

/// Relabels each partition to best overlap the running modal partition.
///
/// Blocks are matched greedily by decreasing overlap; unmatched blocks take
/// the smallest labels not already used.
pub fn align_partitions(partitions: &[Partition]) -> Vec<Vec<usize>> {
    let Some(first) = partitions.first() else {
        return Vec::new();
    };
    let n = first.n_nodes();
    let mut counts: Vec<Vec<u64>> = vec![Vec::new(); n];
    let mut out = Vec::with_capacity(partitions.len());
    for p in partitions {
        assert_eq!(p.n_nodes(), n, "partitions must cover the same nodes");
        let modal: Vec<Option<usize>> = counts
            .iter()
            .map(|c| {
                c.iter().enumerate().filter(|(_, &v)| v > 0).max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0))).map(|(l, _)| l)
            })
            .collect();
        let width = counts.iter().map(|c| c.len()).max().unwrap_or(0);
        let nb = p.n_blocks();
        let mut overlap = vec![vec![0u64; width]; nb];
        for i in 0..n {
            if let Some(s) = modal[i] {
                overlap[p.block(i)][s] += 1;
            }
        }
        let mut cells: Vec<(u64, usize, usize)> = Vec::new();
        for (r, row) in overlap.iter().enumerate() {
            for (s, &v) in row.iter().enumerate() {
                if v > 0 {
                    cells.push((v, r, s));
                }
            }
        }
        cells.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let mut map = vec![usize::MAX; nb];
        let mut used = vec![false; width.max(nb) + nb];
        for (_, r, s) in cells {
            if map[r] == usize::MAX && !used[s] {
                map[r] = s;
                used[s] = true;
            }
        }
        let mut next = 0;
        for m in map.iter_mut().filter(|m| **m == usize::MAX) {
            while used[next] {
                next += 1;
            }
            *m = next;
            used[next] = true;
        }
        let labels: Vec<usize> = (0..n).map(|i| map[p.block(i)]).collect();
        for (i, &l) in labels.iter().enumerate() {
            if counts[i].len() <= l {
                counts[i].resize(l + 1, 0);
            }
            counts[i][l] += 1;
        }
        out.push(labels);
    }
    out
}

/// Mean-field entropy −Σ_i Σ_r π_ir log₂ π_ir of already-aligned label vectors.
pub fn partition_entropy(aligned: &[Vec<usize>]) -> Result<f64> {
    let Some(first) = aligned.first() else {
        return Err(Error::InsufficientSamples("no partitions".into()));
    };
    let n = first.len();
    let mut h = 0.0;
    for i in 0..n {
        let mut counts: HashMap<usize, u64> = HashMap::new();
        for labels in aligned {
            if labels.len() != n {
                return Err(Error::DimensionMismatch("partitions of different sizes".into()));
            }
            *counts.entry(labels[i]).or_default() += 1;
        }
        h += crate::logmath::entropy_from_counts(counts.into_values());
    }
    Ok(h)
}

/// Aligns sampled partitions and returns their mean-field entropy.
pub fn sbm_partition_entropy(partitions: &[Partition]) -> Result<f64> {
    partition_entropy(&align_partitions(partitions))
}

/// Sample-based evidence estimate and its parts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceEstimate {
    pub log_evidence: f64,
    /// Standard error of the mean log-joint term.
    pub std_error: f64,
    pub mean_log_joint: f64,
    pub mean_log_likelihood: f64,
    pub mean_log_prior: f64,
    pub graph_entropy: f64,
    pub partition_entropy: Option<f64>,
    pub param_entropy: Option<f64>,
    pub degenerate_params: bool,
    pub samples: usize,
}

impl EvidenceEstimate {
    /// Estimated posterior entropy over every sampled variable.
    pub fn posterior_entropy(&self) -> f64 {
        self.graph_entropy + self.partition_entropy.unwrap_or(0.0) + self.param_entropy.unwrap_or(0.0)
    }
}

/// log ζ ≈ E[log P(X, φ, G, θ)] + H_MF(G|X) + H_KDE(φ|X) + H_MF(θ|G).
pub fn estimate_log_evidence(samples: &[PosteriorSample], pseudo_count: f64) -> Result<EvidenceEstimate> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("no posterior samples".into()));
    }
    let joints: Vec<f64> = samples.iter().map(|s| s.log_joint()).collect();
    let joint = McEstimate::from_values(&joints)?;
    let k = samples.len() as f64;
    let mean_ll = samples.iter().map(|s| s.log_likelihood).sum::<f64>() / k;
    let mean_prior = samples.iter().map(|s| s.log_prior).sum::<f64>() / k;
    let marginals = EdgeMarginals::from_samples(samples, pseudo_count)?;
    let graph_entropy = marginals.entropy();

    let partition_entropy = if samples[0].partition.is_some() {
        let parts: Vec<Partition> = samples
            .iter()
            .map(|s| s.partition.clone().ok_or_else(|| Error::InvalidModel("sample without a partition".into())))
            .collect::<Result<_>>()?;
        Some(sbm_partition_entropy(&parts)?)
    } else {
        None
    };

    let dims = samples[0].params.len();
    let mut degenerate = false;
    let param_entropy = if dims > 0 {
        let mut h = 0.0;
        for d in 0..dims {
            let column: Vec<f64> = samples.iter().map(|s| s.params[d]).collect();
            let kde = kde_param_entropy(&column)?;
            degenerate |= kde.degenerate;
            h += kde.bits;
        }
        Some(h)
    } else {
        None
    };

    let log_evidence =
        joint.mean + graph_entropy + partition_entropy.unwrap_or(0.0) + param_entropy.unwrap_or(0.0);
    Ok(EvidenceEstimate {
        log_evidence,
        std_error: if samples.len() > 1 { joint.std_error } else { 0.0 },
        mean_log_joint: joint.mean,
        mean_log_likelihood: mean_ll,
        mean_log_prior: mean_prior,
        graph_entropy,
        partition_entropy,
        param_entropy,
        degenerate_params: degenerate,
        samples: samples.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Enumeration,
    MeanField,
}

/// ψ with a record of whether clamping to [0, 1] was needed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionIndex {
    pub value: f64,
    pub clamped: bool,
}

/// ψ = Î / Λ̂, clamped to [0, 1].
pub fn reconstruction_index(gain: f64, lambda: f64) -> Result<ReconstructionIndex> {
    if !(lambda > LAMBDA_FLOOR) || !gain.is_finite() {
        return Err(Error::Undefined(format!("reconstruction index with gain {gain} and lambda {lambda}")));
    }
    let raw = gain / lambda;
    let value = raw.clamp(0.0, 1.0);
    Ok(ReconstructionIndex { value, clamped: value != raw })
}

/// Information quantities for one dataset under one model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    pub estimator: EstimatorKind,
    /// Posterior samples used, or support size for enumeration.
    pub samples: usize,
    pub log_evidence: f64,
    pub log_evidence_se: Option<f64>,
    pub mean_log_likelihood: f64,
    /// Î after clamping to [0, Λ̂].
    pub information_gain: f64,
    pub raw_information_gain: f64,
    pub gain_clamped: bool,
    pub lambda: f64,
    /// `None` when Λ̂ = 0.
    pub reconstruction_index: Option<f64>,
    pub index_clamped: bool,
    pub posterior_entropy: f64,
}

impl InfoReport {
    fn assemble(
        estimator: EstimatorKind,
        samples: usize,
        log_evidence: f64,
        log_evidence_se: Option<f64>,
        mean_log_likelihood: f64,
        lambda: f64,
        posterior_entropy: f64,
    ) -> Self {
        let raw = mean_log_likelihood - log_evidence;
        let gain = if raw.is_nan() { raw } else { raw.clamp(0.0, lambda.max(0.0)) };
        let gain_clamped = gain != raw;
        let (reconstruction_index, index_clamped) = match reconstruction_index(gain, lambda) {
            Ok(r) => (Some(r.value), r.clamped),
            Err(_) => (None, false),
        };
        InfoReport {
            estimator,
            samples,
            log_evidence,
            log_evidence_se,
            mean_log_likelihood,
            information_gain: gain,
            raw_information_gain: raw,
            gain_clamped,
            lambda,
            reconstruction_index,
            index_clamped,
            posterior_entropy,
        }
    }
}

/// Î = E_post[log P(X|G, φ)] − log ζ̂ and Λ̂ = −E_post[log P(G, θ)].
pub fn information_gain(samples: &[PosteriorSample], evidence: &EvidenceEstimate) -> Result<InfoReport> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples("no posterior samples".into()));
    }
    if !evidence.log_evidence.is_finite() {
        return Err(Error::Undefined(format!("log-evidence estimate is {}", evidence.log_evidence)));
    }
    let k = samples.len() as f64;
    let mean_ll = samples.iter().map(|s| s.log_likelihood).sum::<f64>() / k;
    let lambda = -samples.iter().map(|s| s.log_prior).sum::<f64>() / k;
    Ok(InfoReport::assemble(
        EstimatorKind::MeanField,
        samples.len(),
        evidence.log_evidence,
        Some(evidence.std_error),
        mean_ll,
        lambda,
        evidence.posterior_entropy(),
    ))
}

/// One point of the Ψ(ε) curve for the near-delta prior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaPriorPoint {
    pub epsilon: f64,
    pub mutual_information: f64,
    pub graph_entropy: f64,
    pub reconstructability: f64,
}

/// Exact Ψ(ε) when G equals `g_star` with probability 1 − ε and is otherwise
/// uniform over the remaining graphs with the same edge count and mode.
pub fn delta_prior_reconstructability(
    g_star: &Graph,
    dynamics: &DynamicsModel,
    epsilons: &[f64],
    t: usize,
) -> Result<Vec<DeltaPriorPoint>> {
    require_fixed(dynamics)?;
    if let Some(&bad) = epsilons.iter().find(|&&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::InvalidModel(format!("epsilon {bad} is outside (0, 1)")));
    }
    let n = g_star.n_nodes();
    let star_key = g_star.key();
    let others: Vec<Graph> =
        enumerate_graphs(n, g_star.edge_count(), g_star.mode()).into_iter().filter(|g| g.key() != star_key).collect();
    if others.is_empty() {
        return Err(Error::InvalidModel("no alternative graph with the same edge count".into()));
    }
    let z = others.len() as f64;
    let mut mi = vec![0.0; epsilons.len()];
    let mut po = vec![0.0; others.len()];
    for_each_series(n, t, |x| {
        let init = dynamics.log_initial(x);
        let ps = (dynamics.log_likelihood(g_star, x)? + init).exp2();
        for (k, g) in others.iter().enumerate() {
            po[k] = (dynamics.log_likelihood(g, x)? + init).exp2();
        }
        let q = po.iter().sum::<f64>() / z;
        for (acc, &eps) in mi.iter_mut().zip(epsilons) {
            let px = (1.0 - eps) * ps + eps * q;
            if ps > 0.0 {
                *acc -= (1.0 - eps) * ps * (eps * (q / ps - 1.0)).ln_1p() / std::f64::consts::LN_2;
            }
            let mut other = 0.0;
            for &p in &po {
                if p > 0.0 {
                    other += p * (p.log2() - px.log2());
                }
            }
            *acc += eps / z * other;
        }
        Ok(())
    })?;
    Ok(epsilons
        .iter()
        .zip(mi)
        .map(|(&eps, i)| {
            let h = binary_entropy(eps) + eps * z.log2();
            DeltaPriorPoint { epsilon: eps, mutual_information: i, graph_entropy: h, reconstructability: i / h }
        })
        .collect())
}
