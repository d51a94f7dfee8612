//! Metropolis–Hastings sampling of P(G, θ, φ | X).
//!
//! Graph moves keep the edge count fixed: double-edge swaps and hinge flips,
//! each with exact forward and reverse proposal probabilities. Moves that
//! would leave the support of a simple-graph prior are proposed and then
//! rejected. SBM partitions are updated by single-node reassignment and
//! dynamics parameters by bounded Gaussian random walks.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{log_difference, DynamicsModel, LikelihoodCache};
use crate::error::{Error, Result};
use crate::graph::{EdgeDiff, Graph, GraphMode, PairIndex};
use crate::logmath::{log2_binomial, LOG_ZERO};
use crate::priors::{BlockEdges, EdgeCountPrior, Partition, PriorKind, PriorModel};
use crate::series::TimeSeries;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    DoubleEdgeSwap,
    HingeFlip,
    ParamGaussian,
    PartitionMove,
}

/// A proposed graph change with its log₂ proposal probabilities.
/// An empty diff is the identity move and is always accepted.
#[derive(Clone, Debug)]
pub struct MoveProposal {
    pub kind: MoveKind,
    pub diff: EdgeDiff,
    pub log_q_forward: f64,
    pub log_q_reverse: f64,
}

#[inline]
fn ordered(p: (usize, usize)) -> (usize, usize) {
    if p.0 <= p.1 {
        p
    } else {
        (p.1, p.0)
    }
}

/// Probability of choosing one particular endpoint to keep.
#[inline]
fn keep_weight(p: (usize, usize)) -> f64 {
    if p.0 == p.1 {
        1.0
    } else {
        0.5
    }
}

/// Hinge flip defined by its random choices: the `edge`-th instance loses one
/// endpoint and is reattached to `target`.
pub fn hinge_diff(g: &Graph, edge: usize, keep_second: bool, target: usize) -> EdgeDiff {
    let (u, v) = g.edge_at(edge);
    let (keep, drop) = if u == v || !keep_second { (u, v) } else { (v, u) };
    if target == drop {
        return EdgeDiff::default();
    }
    EdgeDiff::new(vec![(u, v)], vec![ordered((keep, target))])
}

/// log₂ probability that a hinge flip proposes `diff` from a graph where the
/// removed and added pairs have the given instance counts.
fn hinge_log_q(n: usize, e: u64, removed: (usize, usize), removed_instances: u32) -> f64 {
    (removed_instances as f64 / e as f64 * keep_weight(removed) / n as f64).log2()
}

fn swap_results(r1: (usize, usize), r2: (usize, usize)) -> [[(usize, usize); 2]; 2] {
    let (a, b) = r1;
    let (c, d) = r2;
    [[ordered((a, c)), ordered((b, d))], [ordered((a, d)), ordered((b, c))]]
}

fn same_pairs(x: [(usize, usize); 2], y: [(usize, usize); 2]) -> bool {
    let mut x = x;
    let mut y = y;
    x.sort_unstable();
    y.sort_unstable();
    x == y
}

/// Double-edge swap defined by two distinct edge instances and a pairing type.
pub fn swap_diff(g: &Graph, first: usize, second: usize, cross: bool) -> EdgeDiff {
    let r1 = g.edge_at(first);
    let r2 = g.edge_at(second);
    let out = swap_results(r1, r2)[cross as usize];
    if same_pairs(out, [r1, r2]) {
        return EdgeDiff::default();
    }
    EdgeDiff::new(vec![r1, r2], out.to_vec())
}

/// log₂ probability of a swap removing `removed` and adding `added`, given
/// instance counts of the removed pairs in the source graph.
fn swap_log_q(e: u64, removed: [(usize, usize); 2], inst: [u32; 2], added: [(usize, usize); 2]) -> f64 {
    let ways = if removed[0] == removed[1] {
        let k = inst[0] as f64;
        k * (k - 1.0) / 2.0
    } else {
        inst[0] as f64 * inst[1] as f64
    };
    let types = swap_results(removed[0], removed[1]).iter().filter(|o| same_pairs(**o, added)).count() as f64;
    (ways * types / 2.0).log2() - log2_binomial(e, 2)
}

/// Fills in proposal probabilities for a non-empty swap or hinge diff.
pub fn proposal_probabilities(g: &Graph, kind: MoveKind, diff: &EdgeDiff) -> (f64, f64) {
    let e = g.edge_count();
    let after = |p: (usize, usize)| -> u32 {
        let mut c = g.edge_instances(p.0, p.1) as i64;
        for &r in &diff.removed {
            if ordered(r) == p {
                c -= 1;
            }
        }
        for &a in &diff.added {
            if ordered(a) == p {
                c += 1;
            }
        }
        c.max(0) as u32
    };
    match kind {
        MoveKind::HingeFlip => {
            let r = ordered(diff.removed[0]);
            let a = ordered(diff.added[0]);
            let fwd = hinge_log_q(g.n_nodes(), e, r, g.edge_instances(r.0, r.1));
            let rev = hinge_log_q(g.n_nodes(), e, a, after(a));
            (fwd, rev)
        }
        MoveKind::DoubleEdgeSwap => {
            let r = [ordered(diff.removed[0]), ordered(diff.removed[1])];
            let a = [ordered(diff.added[0]), ordered(diff.added[1])];
            let fwd = swap_log_q(e, r, [g.edge_instances(r[0].0, r[0].1), g.edge_instances(r[1].0, r[1].1)], a);
            let rev = swap_log_q(e, a, [after(a[0]), after(a[1])], r);
            (fwd, rev)
        }
        _ => (0.0, 0.0),
    }
}

pub fn propose_hinge<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> MoveProposal {
    let e = g.edge_count() as usize;
    if e == 0 {
        return MoveProposal { kind: MoveKind::HingeFlip, diff: EdgeDiff::default(), log_q_forward: 0.0, log_q_reverse: 0.0 };
    }
    let edge = rng.random_range(0..e);
    let keep_second = rng.random_bool(0.5);
    let target = rng.random_range(0..g.n_nodes());
    let diff = hinge_diff(g, edge, keep_second, target);
    finish(g, MoveKind::HingeFlip, diff)
}

pub fn propose_swap<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> MoveProposal {
    let e = g.edge_count() as usize;
    if e < 2 {
        return MoveProposal { kind: MoveKind::DoubleEdgeSwap, diff: EdgeDiff::default(), log_q_forward: 0.0, log_q_reverse: 0.0 };
    }
    let first = rng.random_range(0..e);
    let mut second = rng.random_range(0..e - 1);
    if second >= first {
        second += 1;
    }
    let cross = rng.random_bool(0.5);
    let diff = swap_diff(g, first, second, cross);
    finish(g, MoveKind::DoubleEdgeSwap, diff)
}

fn finish(g: &Graph, kind: MoveKind, diff: EdgeDiff) -> MoveProposal {
    if diff.is_empty() {
        return MoveProposal { kind, diff, log_q_forward: 0.0, log_q_reverse: 0.0 };
    }
    let (f, r) = proposal_probabilities(g, kind, &diff);
    MoveProposal { kind, diff, log_q_forward: f, log_q_reverse: r }
}

/// Fixed-edge-count graph proposal: swap or hinge flip with equal
/// probability, swaps only when the degree sequence is fixed.
pub fn propose_graph_move<R: Rng + ?Sized>(g: &Graph, degrees_fixed: bool, rng: &mut R) -> Result<MoveProposal> {
    if g.edge_count() == 0 {
        return Err(Error::NoLegalMove("graph has no edges"));
    }
    if degrees_fixed || rng.random_bool(0.5) {
        Ok(propose_swap(g, rng))
    } else {
        Ok(propose_hinge(g, rng))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SemiGreedyConfig {
    pub candidates_g: usize,
    pub candidates_theta: usize,
    pub candidates_phi: usize,
    /// Iterations without a change of edge count before stopping.
    pub patience: usize,
    pub max_iterations: usize,
}

impl Default for SemiGreedyConfig {
    fn default() -> Self {
        SemiGreedyConfig { candidates_g: 10_000, candidates_theta: 10_000, candidates_phi: 10, patience: 5, max_iterations: 500 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplerConfig {
    pub chains: usize,
    /// Sweeps after burn-in; one sample is kept every `thinning` sweeps.
    pub sweeps: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: u64,
    pub sigma_phi: f64,
    /// Graph proposals per sweep; defaults to N(N−1)/2.
    pub graph_moves_per_sweep: Option<usize>,
    /// Partition proposals per sweep; defaults to N.
    pub partition_moves_per_sweep: Option<usize>,
    pub semi_greedy: SemiGreedyConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            chains: 1,
            sweeps: 1000,
            burn_in: 2000,
            thinning: 10,
            seed: 0,
            sigma_phi: 0.1,
            graph_moves_per_sweep: None,
            partition_moves_per_sweep: None,
            semi_greedy: SemiGreedyConfig::default(),
        }
    }
}

/// Which blocks a sweep updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub graph: bool,
    pub theta: bool,
    pub phi: bool,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { graph: true, theta: true, phi: true }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    pub swap_proposed: u64,
    pub swap_accepted: u64,
    pub hinge_proposed: u64,
    pub hinge_accepted: u64,
    pub partition_proposed: u64,
    pub partition_accepted: u64,
    pub param_proposed: u64,
    pub param_accepted: u64,
}

impl MoveStats {
    fn record(&mut self, kind: MoveKind, accepted: bool) {
        let (p, a) = match kind {
            MoveKind::DoubleEdgeSwap => (&mut self.swap_proposed, &mut self.swap_accepted),
            MoveKind::HingeFlip => (&mut self.hinge_proposed, &mut self.hinge_accepted),
            MoveKind::PartitionMove => (&mut self.partition_proposed, &mut self.partition_accepted),
            MoveKind::ParamGaussian => (&mut self.param_proposed, &mut self.param_accepted),
        };
        *p += 1;
        *a += accepted as u64;
    }

    pub fn merge(&mut self, o: &MoveStats) {
        self.swap_proposed += o.swap_proposed;
        self.swap_accepted += o.swap_accepted;
        self.hinge_proposed += o.hinge_proposed;
        self.hinge_accepted += o.hinge_accepted;
        self.partition_proposed += o.partition_proposed;
        self.partition_accepted += o.partition_accepted;
        self.param_proposed += o.param_proposed;
        self.param_accepted += o.param_accepted;
    }
}

/// One retained posterior draw.
#[derive(Clone, Debug)]
pub struct PosteriorSample {
    pub graph: Graph,
    pub partition: Option<Partition>,
    /// Values of the free dynamics parameters, in the model's `free` order.
    pub params: Vec<f64>,
    pub log_likelihood: f64,
    /// log₂ P(G, θ).
    pub log_prior: f64,
    /// log₂ of the parameter prior density.
    pub log_param_density: f64,
}

impl PosteriorSample {
    /// log₂ P(X, φ, G, θ) up to the initial-state term.
    pub fn log_joint(&self) -> f64 {
        self.log_likelihood + self.log_prior + self.log_param_density
    }
}

/// Full MCMC state for one chain.
#[derive(Clone, Debug)]
pub struct ChainState {
    x: Arc<TimeSeries>,
    prior: PriorModel,
    dynamics: DynamicsModel,
    graph: Graph,
    partition: Option<Partition>,
    blocks: Option<BlockEdges>,
    lik: LikelihoodCache,
    log_prior: f64,
    log_phi: f64,
    sigma_phi: f64,
    pub rng: ChaCha8Rng,
    pub stats: MoveStats,
}

fn accept<R: Rng + ?Sized>(log_a: f64, rng: &mut R) -> bool {
    if log_a >= 0.0 {
        return true;
    }
    if log_a == LOG_ZERO || log_a.is_nan() {
        return false;
    }
    rng.random::<f64>() < log_a.exp2()
}

/// Chain RNG for a given master seed and stream index.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

impl ChainState {
    pub fn new(
        x: Arc<TimeSeries>,
        prior: PriorModel,
        dynamics: DynamicsModel,
        graph: Graph,
        partition: Option<Partition>,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        prior.validate(graph.n_nodes())?;
        dynamics.validate()?;
        if graph.mode() != prior.graph_mode() {
            return Err(Error::InvalidModel(format!("{} prior needs a {} graph", prior.name(), prior.graph_mode())));
        }
        let partition = if prior.has_partition() {
            Some(partition.unwrap_or_else(|| Partition::single_block(graph.n_nodes())))
        } else {
            None
        };
        let blocks = partition.as_ref().map(|b| BlockEdges::compute(&graph, b));
        let lik = LikelihoodCache::new(&graph, &dynamics, &x)?;
        let log_prior = prior.log_prob(&graph, partition.as_ref())?;
        let log_phi = dynamics.log_param_density();
        Ok(ChainState { x, prior, dynamics, graph, partition, blocks, lik, log_prior, log_phi, sigma_phi: 0.1, rng, stats: MoveStats::default() })
    }

    pub fn with_sigma_phi(mut self, sigma: f64) -> Self {
        self.sigma_phi = sigma;
        self
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn partition(&self) -> Option<&Partition> {
        self.partition.as_ref()
    }

    pub fn dynamics(&self) -> &DynamicsModel {
        &self.dynamics
    }

    pub fn prior(&self) -> &PriorModel {
        &self.prior
    }

    pub fn series(&self) -> &TimeSeries {
        &self.x
    }

    pub fn log_likelihood(&self) -> f64 {
        self.lik.total()
    }

    pub fn log_prior(&self) -> f64 {
        self.log_prior
    }

    /// log₂ P(X, φ, G, θ) up to the initial-state term.
    pub fn log_joint(&self) -> f64 {
        self.lik.total() + self.log_prior + self.log_phi
    }

    pub fn snapshot(&self) -> PosteriorSample {
        PosteriorSample {
            graph: self.graph.clone(),
            partition: self.partition.clone(),
            params: self.dynamics.free_values(),
            log_likelihood: self.lik.total(),
            log_prior: self.log_prior,
            log_param_density: self.log_phi,
        }
    }

    /// Compares every cache with a recomputation from scratch.
    pub fn audit(&self) -> std::result::Result<(), String> {
        self.graph.audit()?;
        let ll = self.dynamics.log_likelihood(&self.graph, &self.x).map_err(|e| e.to_string())?;
        if !(ll == self.lik.total() || (ll - self.lik.total()).abs() < 1e-7) {
            return Err(format!("cached log-likelihood {} differs from {ll}", self.lik.total()));
        }
        let lp = self.prior.log_prob(&self.graph, self.partition.as_ref()).map_err(|e| e.to_string())?;
        if !(lp == self.log_prior || (lp - self.log_prior).abs() < 1e-7) {
            return Err(format!("cached log-prior {} differs from {lp}", self.log_prior));
        }
        if let (Some(b), Some(be)) = (&self.partition, &self.blocks) {
            if BlockEdges::compute(&self.graph, b) != *be {
                return Err("block edge counts out of sync".into());
            }
        }
        Ok(())
    }

    /// log₂ acceptance probability of a graph proposal; the state is left unchanged.
    pub fn mh_accept_log_prob(&mut self, proposal: &MoveProposal) -> f64 {
        match self.evaluate(proposal) {
            None => 0.0,
            Some((log_a, pending, _)) => {
                if let Some(p) = pending {
                    drop(p);
                    self.lik.rollback(&proposal.diff, &self.x);
                    self.graph.revert(&proposal.diff).expect("diff was just applied");
                }
                log_a
            }
        }
    }

    /// Applies the diff tentatively and returns (log acceptance, pending
    /// likelihood, prior change). `None` means the identity move. When the
    /// pending value is `None` the diff was not applied.
    fn evaluate(&mut self, proposal: &MoveProposal) -> Option<(f64, Option<crate::dynamics::PendingLikelihood>, f64)> {
        if proposal.diff.is_empty() {
            return None;
        }
        let d_prior = self.prior.log_ratio(&self.graph, &proposal.diff, self.partition.as_ref(), self.blocks.as_ref());
        if d_prior == LOG_ZERO || self.graph.apply(&proposal.diff).is_err() {
            return Some((LOG_ZERO, None, d_prior));
        }
        let pending = self.lik.evaluate(&proposal.diff, &self.dynamics, &self.x);
        let log_a = if pending.delta == LOG_ZERO {
            LOG_ZERO
        } else if pending.delta == f64::INFINITY {
            0.0
        } else {
            (pending.delta + d_prior + proposal.log_q_reverse - proposal.log_q_forward).min(0.0)
        };
        Some((log_a, Some(pending), d_prior))
    }

    fn apply_proposal(&mut self, proposal: &MoveProposal) -> bool {
        let Some((log_a, pending, d_prior)) = self.evaluate(proposal) else {
            self.stats.record(proposal.kind, true);
            return true;
        };
        let Some(pending) = pending else {
            self.stats.record(proposal.kind, false);
            return false;
        };
        if accept(log_a, &mut self.rng) {
            self.lik.commit(pending);
            if let (Some(b), Some(be)) = (&self.partition, &mut self.blocks) {
                for ((i, j), d) in proposal.diff.net_changes() {
                    be.add(b.block(i), b.block(j), d as i64);
                }
            }
            self.log_prior = if self.log_prior == LOG_ZERO {
                self.prior.log_prob(&self.graph, self.partition.as_ref()).unwrap_or(LOG_ZERO)
            } else {
                self.log_prior + d_prior
            };
            self.stats.record(proposal.kind, true);
            true
        } else {
            self.lik.rollback(&proposal.diff, &self.x);
            self.graph.revert(&proposal.diff).expect("diff was just applied");
            self.stats.record(proposal.kind, false);
            false
        }
    }

    /// One Metropolis–Hastings graph update.
    pub fn graph_step(&mut self) -> bool {
        let proposal = match propose_graph_move(&self.graph, self.prior.degrees_fixed(), &mut self.rng) {
            Ok(p) => p,
            Err(_) => return false,
        };
        self.apply_proposal(&proposal)
    }

    fn sbm_log_prior(&self, b: &Partition) -> f64 {
        let be = BlockEdges::compute(&self.graph, b);
        crate::priors::sbm_from_counts(self.graph.n_nodes(), self.graph.edge_count(), b, &be)
            + self.prior.edge_count.log_prob(self.graph.edge_count())
    }

    /// Draws a single-node reassignment: `(node, target)` with `target == B` for a new block.
    fn propose_partition<R: Rng + ?Sized>(b: &Partition, rng: &mut R) -> (usize, usize) {
        let nb = b.n_blocks();
        let i = rng.random_range(0..b.n_nodes());
        let mut target = rng.random_range(0..nb);
        if target == b.block(i) {
            target = nb;
        }
        (i, target)
    }

    /// One partition update; a no-op for priors without a partition.
    pub fn partition_step(&mut self) -> bool {
        let Some(b) = self.partition.clone() else { return false };
        let (i, target) = Self::propose_partition(&b, &mut self.rng);
        let nb = b.n_blocks();
        if target == nb && b.sizes()[b.block(i)] == 1 {
            self.stats.record(MoveKind::PartitionMove, true);
            return true;
        }
        let mut nb2 = b.clone();
        nb2.move_node(i, target);
        let new_lp = self.sbm_log_prior(&nb2);
        let log_a = (log_difference(new_lp, self.log_prior) + (nb as f64).log2() - (nb2.n_blocks() as f64).log2()).min(0.0);
        let ok = accept(log_a, &mut self.rng);
        if ok {
            self.blocks = Some(BlockEdges::compute(&self.graph, &nb2));
            self.partition = Some(nb2);
            self.log_prior = new_lp;
        }
        self.stats.record(MoveKind::PartitionMove, ok);
        ok
    }

    /// One Gaussian random-walk update of each free dynamics parameter.
    pub fn param_step(&mut self) -> usize {
        let names = self.dynamics.free.clone();
        let mut accepted = 0;
        for name in names {
            let (lo, hi) = DynamicsModel::param_bounds(&name);
            let old = self.dynamics.param(&name).expect("validated parameter");
            let z: f64 = self.rng.sample(StandardNormal);
            let proposal = old + self.sigma_phi * z;
            if !(lo..=hi).contains(&proposal) {
                self.stats.record(MoveKind::ParamGaussian, false);
                continue;
            }
            let snap = self.lik.snapshot();
            let old_ll = self.lik.total();
            self.dynamics.set_param(&name, proposal).expect("validated parameter");
            self.lik.refresh(&self.dynamics, &self.x);
            let log_a = log_difference(self.lik.total(), old_ll).min(0.0);
            if accept(log_a, &mut self.rng) {
                accepted += 1;
                self.log_phi = self.dynamics.log_param_density();
                self.stats.record(MoveKind::ParamGaussian, true);
            } else {
                self.dynamics.set_param(&name, old).expect("validated parameter");
                self.lik.restore(snap);
                self.stats.record(MoveKind::ParamGaussian, false);
            }
        }
        accepted
    }

    /// One Gibbs sweep: graph proposals, then partition moves, then parameters.
    pub fn sweep(&mut self, schedule: Schedule, graph_moves: usize, partition_moves: usize) {
        if schedule.graph && self.graph.edge_count() > 0 {
            for _ in 0..graph_moves {
                self.graph_step();
            }
        }
        if schedule.theta && self.partition.is_some() {
            for _ in 0..partition_moves {
                self.partition_step();
            }
        }
        if schedule.phi && !self.dynamics.free.is_empty() {
            self.param_step();
        }
    }

    fn objective_with(&self, g: &Graph, b: Option<&Partition>) -> f64 {
        self.prior.log_prob(g, b).unwrap_or(LOG_ZERO)
    }

    /// Greedy maximisation of log P(X, φ, G, θ) over graphs of any edge count.
    pub fn semi_greedy(&mut self, cfg: &SemiGreedyConfig) -> SemiGreedyReport {
        let n = self.graph.n_nodes();
        let mut trace = vec![self.log_joint()];
        let mut stable = 0usize;
        let mut iterations = 0usize;
        let mut converged = false;
        while iterations < cfg.max_iterations {
            iterations += 1;
            let e_before = self.graph.edge_count();
            let mut improved = false;
            if n > 0 {
                improved |= self.greedy_graph_block(cfg.candidates_g);
            }
            if self.partition.is_some() {
                improved |= self.greedy_partition_block(cfg.candidates_theta);
            }
            if !self.dynamics.free.is_empty() {
                improved |= self.greedy_param_block(cfg.candidates_phi);
            }
            trace.push(self.log_joint());
            if self.graph.edge_count() == e_before {
                stable += 1;
            } else {
                stable = 0;
            }
            if stable >= cfg.patience || !improved {
                converged = true;
                break;
            }
        }
        SemiGreedyReport { edge_count: self.graph.edge_count(), iterations, converged, objective_trace: trace }
    }

    fn random_graph_candidate(&mut self) -> Option<EdgeDiff> {
        let n = self.graph.n_nodes();
        let e = self.graph.edge_count() as usize;
        let simple = self.graph.mode() == GraphMode::Simple;
        let choice = self.rng.random_range(0..3);
        match choice {
            0 => {
                let i = self.rng.random_range(0..n);
                let j = self.rng.random_range(0..n);
                if simple && !self.graph.can_add(i, j) {
                    return None;
                }
                Some(EdgeDiff::new(vec![], vec![ordered((i, j))]))
            }
            1 if e > 0 => {
                let k = self.rng.random_range(0..e);
                Some(EdgeDiff::new(vec![self.graph.edge_at(k)], vec![]))
            }
            _ if e > 0 => {
                let p = propose_hinge(&self.graph, &mut self.rng);
                (!p.diff.is_empty()).then_some(p.diff)
            }
            _ => None,
        }
    }

    fn greedy_graph_block(&mut self, k: usize) -> bool {
        let mut best: Option<(f64, EdgeDiff)> = None;
        let current_prior = self.log_prior;
        for _ in 0..k {
            let Some(diff) = self.random_graph_candidate() else { continue };
            if self.graph.apply(&diff).is_err() {
                continue;
            }
            let pending = self.lik.evaluate(&diff, &self.dynamics, &self.x);
            let new_prior = self.objective_with(&self.graph, self.partition.as_ref());
            self.lik.rollback(&diff, &self.x);
            self.graph.revert(&diff).expect("diff was just applied");
            let gain = if pending.delta == f64::INFINITY { f64::INFINITY } else { pending.delta + log_difference(new_prior, current_prior) };
            if gain > 0.0 && best.as_ref().is_none_or(|(g, _)| gain > *g) {
                best = Some((gain, diff));
            }
        }
        if let Some((_, diff)) = best {
            self.graph.apply(&diff).expect("candidate was valid");
            let pending = self.lik.evaluate(&diff, &self.dynamics, &self.x);
            self.lik.commit(pending);
            if let Some(b) = &self.partition {
                self.blocks = Some(BlockEdges::compute(&self.graph, b));
            }
            self.log_prior = self.objective_with(&self.graph, self.partition.as_ref());
            true
        } else {
            false
        }
    }

    fn greedy_partition_block(&mut self, k: usize) -> bool {
        let Some(b) = self.partition.clone() else { return false };
        let mut best: Option<(f64, Partition)> = None;
        for _ in 0..k {
            let (i, target) = Self::propose_partition(&b, &mut self.rng);
            if target == b.n_blocks() && b.sizes()[b.block(i)] == 1 {
                continue;
            }
            let mut cand = b.clone();
            cand.move_node(i, target);
            let gain = log_difference(self.sbm_log_prior(&cand), self.log_prior);
            if gain > 0.0 && best.as_ref().is_none_or(|(g, _)| gain > *g) {
                best = Some((gain, cand));
            }
        }
        if let Some((_, cand)) = best {
            self.log_prior = self.sbm_log_prior(&cand);
            self.blocks = Some(BlockEdges::compute(&self.graph, &cand));
            self.partition = Some(cand);
            true
        } else {
            false
        }
    }

    fn greedy_param_block(&mut self, k: usize) -> bool {
        let names = self.dynamics.free.clone();
        let base = self.lik.snapshot();
        let base_ll = self.lik.total();
        let mut best: Option<(f64, String, f64)> = None;
        for _ in 0..k {
            let name = &names[self.rng.random_range(0..names.len())];
            let (lo, hi) = DynamicsModel::param_bounds(name);
            let old = self.dynamics.param(name).expect("validated parameter");
            let z: f64 = self.rng.sample(StandardNormal);
            let v = old + self.sigma_phi * z;
            if !(lo..=hi).contains(&v) {
                continue;
            }
            self.dynamics.set_param(name, v).expect("validated parameter");
            self.lik.refresh(&self.dynamics, &self.x);
            let gain = log_difference(self.lik.total(), base_ll);
            self.dynamics.set_param(name, old).expect("validated parameter");
            if gain > 0.0 && best.as_ref().is_none_or(|(g, _, _)| gain > *g) {
                best = Some((gain, name.clone(), v));
            }
        }
        match best {
            Some((_, name, v)) => {
                self.dynamics.set_param(&name, v).expect("validated parameter");
                self.lik.refresh(&self.dynamics, &self.x);
                self.log_phi = self.dynamics.log_param_density();
                true
            }
            None => {
                self.lik.restore(base);
                false
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiGreedyReport {
    pub edge_count: u64,
    pub iterations: usize,
    pub converged: bool,
    pub objective_trace: Vec<f64>,
}

/// Output of one chain.
#[derive(Clone, Debug)]
pub struct ChainResult {
    pub samples: Vec<PosteriorSample>,
    pub stats: MoveStats,
    pub semi_greedy: Option<SemiGreedyReport>,
    pub edge_count: u64,
}

/// Initial state for a chain: a prior draw with the edge count fixed.
pub fn initial_state(x: Arc<TimeSeries>, prior: &PriorModel, dynamics: &DynamicsModel, e: u64, rng: &mut ChaCha8Rng) -> Result<(Graph, Option<Partition>)> {
    let n = x.n_nodes();
    let fixed = match &prior.kind {
        PriorKind::Cm { .. } => prior.clone(),
        _ => PriorModel { kind: prior.kind.clone(), edge_count: EdgeCountPrior::Delta(e) },
    };
    let _ = dynamics;
    let s = fixed.sample(n, rng)?;
    Ok((s.graph, s.partition))
}

/// Runs one chain: optional semi-greedy edge-count search (geometric
/// edge-count prior), burn-in, then thinned sampling.
pub fn run_chain(x: Arc<TimeSeries>, prior: &PriorModel, dynamics: &DynamicsModel, cfg: &SamplerConfig, chain: u64) -> Result<ChainResult> {
    let mut rng = stream_rng(cfg.seed, chain);
    let n = x.n_nodes();
    let (start_e, greedy) = match prior.edge_count {
        EdgeCountPrior::Delta(e) => (e, false),
        EdgeCountPrior::Geometric(mean) => {
            let max = if prior.graph_mode() == GraphMode::Simple { PairIndex::new(n, false).len() as u64 } else { u64::MAX };
            ((mean.round() as u64).min(max), true)
        }
    };
    let start_e = if let PriorKind::Cm { degrees } = &prior.kind { degrees.iter().sum::<u64>() / 2 } else { start_e };
    let (g, b) = initial_state(x.clone(), prior, dynamics, start_e, &mut rng)?;
    let mut state = ChainState::new(x, prior.clone(), dynamics.clone(), g, b, rng)?.with_sigma_phi(cfg.sigma_phi);
    let report = if greedy { Some(state.semi_greedy(&cfg.semi_greedy)) } else { None };
    let graph_moves = cfg.graph_moves_per_sweep.unwrap_or(n * n.saturating_sub(1) / 2).max(1);
    let partition_moves = cfg.partition_moves_per_sweep.unwrap_or(n).max(1);
    let schedule = Schedule::default();
    for _ in 0..cfg.burn_in {
        state.sweep(schedule, graph_moves, partition_moves);
    }
    let thinning = cfg.thinning.max(1);
    let mut samples = Vec::with_capacity(cfg.sweeps / thinning);
    for s in 1..=cfg.sweeps {
        state.sweep(schedule, graph_moves, partition_moves);
        if s % thinning == 0 {
            samples.push(state.snapshot());
        }
    }
    Ok(ChainResult { samples, stats: state.stats.clone(), semi_greedy: report, edge_count: state.graph.edge_count() })
}

/// Runs `cfg.chains` independent chains in parallel, one RNG stream each.
pub fn run_chains(x: Arc<TimeSeries>, prior: &PriorModel, dynamics: &DynamicsModel, cfg: &SamplerConfig) -> Result<Vec<ChainResult>> {
    (0..cfg.chains.max(1) as u64).into_par_iter().map(|c| run_chain(x.clone(), prior, dynamics, cfg, c)).collect()
}
