//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.
//!
//! Set `RECONLAB_ACCEPTANCE` to a comma-separated list of criterion keys
//! (for example `single_edge,priors`) to run a subset.

use std::collections::HashMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, Discrete};
use statrs::function::factorial::ln_binomial;

use reconlab::dynamics::DynamicsModel;
use reconlab::graph::{Graph, GraphMode};
use reconlab::info::{
    delta_prior_reconstructability, estimate_log_evidence, information_gain, mf_mutual_information, EdgeMarginals,
    EnumeratedPosterior, GraphSupport, InfoReport, MfDataset,
};
use reconlab::pipeline::spikes::active_runs;
use reconlab::pipeline::stats::linear_fit;
use reconlab::pipeline::{
    ingest_spike_data, posterior_predictive_check, run_sweep, ExperimentConfig, IngestConfig, PpcConfig, SpikeData,
    SweepReport,
};
use reconlab::priors::{enumerate_multigraphs, log_prior_cm, stub_matching, EdgeCountPrior, PriorModel};
use reconlab::sampler::{run_chain, PosteriorSample, SamplerConfig};
use reconlab::series::TimeSeries;
use reconlab::single_edge::SingleEdgeModel;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

type Key = Vec<(usize, usize, u32)>;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std_error(v: &[f64]) -> f64 {
    let m = mean(v);
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0);
    (var / v.len() as f64).sqrt()
}

fn within(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed < Duration::from_secs(limit_secs)
}

// ---------------------------------------------------------------------------

fn single_edge() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let psi = |q: f64, t: u64| SingleEdgeModel::new(0.5, q, 0.2, t).unwrap().reconstructability().unwrap();

    let at_r = psi(0.2, 20);
    if at_r.abs() > 1e-12 {
        failures.push(format!("psi(q=r) = {at_r:e}"));
    }

    let mut worst_drop = 0.0f64;
    for k in 1..20 {
        let q = k as f64 / 20.0;
        if (q - 0.2).abs() < 1e-9 {
            continue;
        }
        let curve: Vec<f64> = (1..=100).map(|t| psi(q, t)).collect();
        for w in curve.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
    }
    if worst_drop > 1e-12 {
        failures.push(format!("psi decreases in T by {worst_drop:e}"));
    }

    let near_one = psi(1.0 - 1e-9, 100);
    if near_one <= 0.99 {
        failures.push(format!("psi(q->1, T=100) = {near_one}"));
    }

    // H(G|X) = -sum_a sum_n P(a) P(n|a) log2 P(a|n), with binomial pmfs from statrs.
    let mut worst_entropy = 0.0f64;
    let t = 20u64;
    for qi in 0..10 {
        for ri in 0..10 {
            let (q, r) = (0.05 + 0.1 * qi as f64, 0.05 + 0.1 * ri as f64);
            let (bq, br) = (Binomial::new(q, t).unwrap(), Binomial::new(r, t).unwrap());
            let mut h = 0.0;
            for n in 0..=t {
                let joint = [0.5 * bq.pmf(n), 0.5 * br.pmf(n)];
                let pn = joint[0] + joint[1];
                for j in joint {
                    if j > 0.0 {
                        h -= j * (j / pn).log2();
                    }
                }
            }
            let model = SingleEdgeModel::new(0.5, q, r, t).unwrap();
            worst_entropy = worst_entropy.max((model.edge_posterior_entropy() - h).abs());
        }
    }
    if worst_entropy > 1e-12 {
        failures.push(format!("entropy differs from the double sum by {worst_entropy:e}"));
    }

    let elapsed = start.elapsed();
    if !within(elapsed, 1) {
        failures.push(format!("took {elapsed:?}"));
    }
    Outcome::new(
        failures.is_empty(),
        format!(
            "psi(q=r)={at_r:.1e}, max decrease in T={worst_drop:.1e}, psi(q->1,T=100)={near_one:.6}, \
             max entropy error={worst_entropy:.1e}, {:.3}s{}",
            elapsed.as_secs_f64(),
            failures.iter().map(|f| format!("; {f}")).collect::<String>()
        ),
    )
}

// ---------------------------------------------------------------------------

struct OracleInstance {
    name: &'static str,
    prior: PriorModel,
    dynamics: DynamicsModel,
    n: usize,
    t: usize,
}

fn oracle_instances() -> Vec<OracleInstance> {
    vec![
        OracleInstance {
            name: "glauber",
            prior: PriorModel::er_simple(EdgeCountPrior::Delta(3)),
            dynamics: DynamicsModel::glauber(0.3),
            n: 4,
            t: 10,
        },
        OracleInstance {
            name: "sis",
            prior: PriorModel::er_simple(EdgeCountPrior::Delta(3)),
            dynamics: DynamicsModel::sis(0.5, 0.4).with_spontaneous(0.05, 0.0),
            n: 4,
            t: 20,
        },
    ]
}

fn chain_samples(x: &TimeSeries, inst: &OracleInstance, burn_in: usize, sweeps: usize, seed: u64) -> Vec<PosteriorSample> {
    let cfg = SamplerConfig {
        burn_in,
        sweeps,
        thinning: 1,
        seed,
        graph_moves_per_sweep: Some(inst.n * (inst.n - 1) / 2),
        ..Default::default()
    };
    run_chain(Arc::new(x.clone()), &inst.prior, &inst.dynamics, &cfg, 0).unwrap().samples
}

fn total_variation(inst: &OracleInstance, seed: u64) -> (f64, f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = inst.prior.sample(inst.n, &mut rng).unwrap().graph;
    let x = inst.dynamics.simulate(&g, inst.t, &mut rng).unwrap();
    let exact = EnumeratedPosterior::new(&x, &inst.prior, &inst.dynamics).unwrap();
    let moves = inst.n * (inst.n - 1) / 2;
    let samples = chain_samples(&x, inst, 2000, 1_000_000 / moves, seed);
    let mut counts: HashMap<Key, usize> = HashMap::new();
    for s in &samples {
        *counts.entry(s.graph.key()).or_default() += 1;
    }
    let k = samples.len() as f64;
    let probs = exact.graph_probabilities();
    let tv = 0.5
        * exact
            .support
            .graphs
            .iter()
            .zip(&probs)
            .map(|(g, p)| (counts.get(&g.key()).copied().unwrap_or(0) as f64 / k - p).abs())
            .sum::<f64>();
    (tv, exact.graph_entropy(), samples.len() * moves)
}

struct PairedDataset {
    mf: f64,
    exact: f64,
    evidence_gap: f64,
    evidence_sigma: f64,
    report: InfoReport,
}

const MF_PSEUDO_COUNT: f64 = 0.5;
/// Rounding allowance for comparing log-sum-exp results, in bits.
const LOG_SLACK: f64 = 1e-9;

fn paired_dataset(inst: &OracleInstance, seed: u64) -> PairedDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = inst.prior.sample(inst.n, &mut rng).unwrap().graph;
    let x = inst.dynamics.simulate(&g, inst.t, &mut rng).unwrap();
    let exact = EnumeratedPosterior::new(&x, &inst.prior, &inst.dynamics).unwrap();
    let samples = chain_samples(&x, inst, 200, 2000, seed);
    let log_prior = inst.prior.log_prob(&g, None).unwrap();
    let marginals = EdgeMarginals::from_samples(&samples, MF_PSEUDO_COUNT).unwrap();
    let mf = mf_mutual_information(&[MfDataset { truth: g.clone(), log_prior, marginals }]).unwrap().mean;
    let evidence = estimate_log_evidence(&samples, 0.0).unwrap();
    let report = information_gain(&samples, &evidence).unwrap();
    PairedDataset {
        mf,
        exact: exact.probability_of(&g).log2() - log_prior,
        evidence_gap: evidence.log_evidence - exact.log_evidence,
        evidence_sigma: evidence.std_error,
        report,
    }
}

fn enumeration_oracle(reports: &mut Vec<InfoReport>) -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut detail = Vec::new();
    for (idx, inst) in oracle_instances().iter().enumerate() {
        let (tv, entropy, proposals) = total_variation(inst, 1000 + idx as u64);
        pass &= tv < 0.05;
        detail.push(format!("{}: TV={tv:.4} after {proposals} proposals (posterior entropy {entropy:.2} bits)", inst.name));

        let datasets: Vec<PairedDataset> =
            (0..100u64).into_par_iter().map(|k| paired_dataset(inst, 50_000 + 1000 * idx as u64 + k)).collect();
        let mf: Vec<f64> = datasets.iter().map(|d| d.mf).collect();
        let exact: Vec<f64> = datasets.iter().map(|d| d.exact).collect();
        let diff: Vec<f64> = mf.iter().zip(&exact).map(|(a, b)| a - b).collect();
        let sigma = std_error(&diff);
        let ok_mi = mean(&mf).is_finite() && mean(&mf) <= mean(&exact) + 3.0 * sigma;
        pass &= ok_mi;
        detail.push(format!(
            "{}: MF MI={:.4} vs enumerated {:.4} (paired sigma {sigma:.4})",
            inst.name,
            mean(&mf),
            mean(&exact)
        ));

        let violations: Vec<&PairedDataset> =
            datasets.iter().filter(|d| !(d.evidence_gap <= 3.0 * d.evidence_sigma + LOG_SLACK)).collect();
        let worst = datasets.iter().map(|d| d.evidence_gap - 3.0 * d.evidence_sigma).fold(f64::NEG_INFINITY, f64::max);
        pass &= violations.is_empty();
        detail.push(format!(
            "{}: log-evidence above enumerated + 3 sigma on {}/{} datasets (max excess {worst:.4} bits, mean gap {:.4})",
            inst.name,
            violations.len(),
            datasets.len(),
            mean(&datasets.iter().map(|d| d.evidence_gap).collect::<Vec<_>>())
        ));
        reports.extend(datasets.into_iter().map(|d| d.report));
    }
    let elapsed = start.elapsed();
    pass &= within(elapsed, 300);
    detail.push(format!("{:.1}s", elapsed.as_secs_f64()));
    Outcome::new(pass, detail.join("; "))
}

// ---------------------------------------------------------------------------

const HEURISTICS: [&str; 3] = ["corr", "granger", "te"];

fn trend_config(t: usize, dynamics: &str, parameter: &str, values: &[f64], target: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"n": 30, "T": {t}, "seed": 2024, "realizations": 24,
            "prior": {{"kind": "er_simple", "edge_count": {{"delta": 60}}}},
            "dynamics": {dynamics},
            "sampler": {{"burn_in": 300, "sweeps": 500, "thinning": 1}},
            "heuristics": ["corr", "granger", "te"],
            "sweep": {{"parameter": "{parameter}", "values": {values:?}, "target": "{target}", "resamples": 1000}}}}"#
    ))
    .unwrap()
}

fn best_heuristic(report: &SweepReport, point: usize) -> (String, f64) {
    HEURISTICS
        .iter()
        .filter_map(|h| {
            report.points[point].summaries.get(&format!("auc_{h}")).map(|s| (h.to_string(), s.mean))
        })
        .fold((String::new(), f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

fn glauber_sweep() -> SweepReport {
    let cfg = trend_config(300, r#"{"kind": "glauber", "coupling": 0.1}"#, "coupling", &[0.0, 0.05, 0.1, 0.2, 0.4, 0.8], "both");
    run_sweep(&cfg).unwrap()
}

fn sis_sweep() -> SweepReport {
    let cfg = trend_config(
        300,
        r#"{"kind": "sis", "recovery": 0.5, "infection": 0.2}"#,
        "infection",
        &[0.1, 0.15, 0.2, 0.3, 0.4],
        "both",
    );
    run_sweep(&cfg).unwrap()
}

fn collect_reports(report: &SweepReport, reports: &mut Vec<InfoReport>) -> usize {
    reports.extend(report.records.iter().filter_map(|r| r.info.clone()));
    report.records.iter().filter(|r| r.error.is_some()).count()
}

fn auc_trend(glauber: &SweepReport, sis: &SweepReport, elapsed: Duration) -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for (label, report) in [("glauber J", glauber), ("sis lambda", sis)] {
        let tdg = report.means("auc");
        for (k, p) in report.points.iter().enumerate() {
            let Some(a) = tdg[k] else {
                pass = false;
                detail.push(format!("{label}={}: no AUC", p.value));
                continue;
            };
            let (name, best) = best_heuristic(report, k);
            if label.starts_with("glauber") && p.value == 0.0 {
                let ok = (a - 0.5).abs() <= 0.05;
                pass &= ok;
                detail.push(format!("{label}=0: AUC {a:.3} (limit 0.5 +/- 0.05, {name} {best:.3})"));
            } else {
                let ok = a >= best;
                pass &= ok;
                detail.push(format!("{label}={}: AUC {a:.3} vs {name} {best:.3}{}", p.value, if ok { "" } else { " FAIL" }));
            }
            if p.failures > 0 {
                detail.push(format!("{} failed realizations", p.failures));
            }
        }
    }
    pass &= within(elapsed, 1800);
    detail.push(format!("{:.0}s", elapsed.as_secs_f64()));
    Outcome::new(pass, detail.join("; "))
}

fn index_vs_loss(glauber: &SweepReport) -> Outcome {
    let h = ln_binomial(435, 60) / std::f64::consts::LN_2;
    let points: Vec<(f64, f64)> = glauber
        .records
        .iter()
        .filter_map(|r| Some((r.get("posterior_loss")?, r.get("reconstruction_index")?)))
        .collect();
    if points.len() < 3 {
        return Outcome::new(false, format!("only {} usable realizations", points.len()));
    }
    let psi: Vec<f64> = points.iter().map(|p| p.1).collect();
    let m = mean(&psi);
    let total: f64 = psi.iter().map(|v| (v - m).powi(2)).sum();
    let residual: f64 = points.iter().map(|&(l, p)| (p - (1.0 - l / h)).powi(2)).sum();
    let r2 = 1.0 - residual / total;
    let x: Vec<f64> = points.iter().map(|p| p.0 / h).collect();
    let free = linear_fit(&x, &psi);
    let dropped = glauber.records.len() - points.len();
    Outcome::new(
        r2 >= 0.9,
        format!(
            "R^2 against psi = 1 - L/H is {r2:.4} over {} realizations (H = {h:.2} bits, {dropped} dropped); \
             free fit slope {:.3}, intercept {:.3}, R^2 {:.4}",
            points.len(),
            free.as_ref().map_or(f64::NAN, |f| f.slope),
            free.as_ref().map_or(f64::NAN, |f| f.intercept),
            free.as_ref().map_or(f64::NAN, |f| f.r_squared),
        ),
    )
}

/// Position of the smallest defined value; undefined entries count as +inf.
fn argmin(v: &[Option<f64>]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (k, x) in v.iter().enumerate() {
        let Some(x) = *x else { continue };
        if best.is_none_or(|(_, b)| x < b) {
            best = Some((k, x));
        }
    }
    best.map(|b| b.0)
}

fn fmt_series(v: &[Option<f64>]) -> String {
    v.iter().map(|x| x.map_or("-".into(), |x| format!("{x:.3}"))).collect::<Vec<_>>().join(", ")
}

fn inference_sweep(reports: &mut Vec<InfoReport>) -> Outcome {
    let grid = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
    let truth = grid.iter().position(|&v| v == 0.3).unwrap();
    let cfg = trend_config(100, r#"{"kind": "glauber", "coupling": 0.3}"#, "coupling", &grid, "inference");
    let report = run_sweep(&cfg).unwrap();
    let failures = collect_reports(&report, reports);
    let ce = report.means("evidence_cross_entropy");
    let psi = report.means("reconstruction_index");
    let loss = report.means("posterior_loss");
    let ce_ok = argmin(&ce) == Some(truth);
    let psi_ok = psi.iter().all(Option::is_some) && psi.windows(2).all(|w| w[1] > w[0]);
    let loss_ok = argmin(&loss).is_some_and(|k| k.abs_diff(truth) <= 1);
    Outcome::new(
        ce_ok && psi_ok && loss_ok && failures == 0,
        format!(
            "grid {grid:?}; evidence cross-entropy [{}]; psi [{}]; posterior loss [{}]; {failures} failed realizations",
            fmt_series(&ce),
            fmt_series(&psi),
            fmt_series(&loss)
        ),
    )
}

// ---------------------------------------------------------------------------

fn information_bounds(reports: &[InfoReport]) -> Outcome {
    let bad: Vec<&InfoReport> = reports
        .iter()
        .filter(|r| {
            !(r.information_gain >= 0.0 && r.information_gain <= r.lambda)
                || r.reconstruction_index.is_some_and(|p| !(0.0..=1.0).contains(&p))
        })
        .collect();
    let clamped = reports.iter().filter(|r| r.gain_clamped).count();
    Outcome::new(
        bad.is_empty() && !reports.is_empty(),
        format!("{} reports checked, {} out of bounds, {clamped} with a declared clamp", reports.len(), bad.len()),
    )
}

// ---------------------------------------------------------------------------

fn delta_prior_scaling() -> Outcome {
    let start = Instant::now();
    let g = Graph::from_edges(3, GraphMode::Simple, &[(0, 1)]).unwrap();
    let eps = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
    let curve = delta_prior_reconstructability(&g, &DynamicsModel::glauber(1.0), &eps, 6).unwrap();
    let psi: Vec<f64> = curve.iter().map(|p| p.reconstructability).collect();
    let decreasing = psi.windows(2).all(|w| w[1] < w[0]);
    let scaled: Vec<f64> = curve[3..].iter().map(|p| p.reconstructability * (1.0 / p.epsilon).log2()).collect();
    let (lo, hi) = scaled.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let variation = hi / lo - 1.0;
    let elapsed = start.elapsed();
    Outcome::new(
        decreasing && variation < 0.2 && within(elapsed, 60),
        format!(
            "psi = [{}]; psi*log2(1/eps) on [1e-4, 1e-6] = [{}], variation {:.1}%; {:.1}s",
            psi.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", "),
            scaled.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", "),
            100.0 * variation,
            elapsed.as_secs_f64()
        ),
    )
}

// ---------------------------------------------------------------------------

fn cm_chi_square(degrees: &[u64], draws: usize, seed: u64) -> (f64, usize) {
    let n = degrees.len();
    let e = degrees.iter().sum::<u64>() / 2;
    let support: Vec<Graph> = enumerate_multigraphs(n, e).into_iter().filter(|g| g.degrees() == degrees).collect();
    let expected: Vec<f64> = support.iter().map(|g| log_prior_cm(g, degrees).unwrap().exp2()).collect();
    let index: HashMap<Key, usize> = support.iter().enumerate().map(|(k, g)| (g.key(), k)).collect();
    let mut counts = vec![0usize; support.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..draws {
        counts[index[&stub_matching(degrees, &mut rng).unwrap().key()]] += 1;
    }
    let stat: f64 = counts
        .iter()
        .zip(&expected)
        .map(|(&c, &p)| {
            let exp = p * draws as f64;
            (c as f64 - exp).powi(2) / exp
        })
        .sum();
    let df = (support.len() - 1) as f64;
    (1.0 - ChiSquared::new(df).unwrap().cdf(stat), support.len())
}

fn prior_normalization() -> Outcome {
    let mut worst = 0.0f64;
    let mut checked = 0;
    let mut check = |prior: PriorModel, n: usize| {
        let mass = GraphSupport::enumerate(&prior, n).unwrap().total_mass();
        worst = worst.max((mass - 1.0).abs());
        checked += 1;
    };
    for n in 1..=4usize {
        for e in 0..=4u64 {
            let d = EdgeCountPrior::Delta(e);
            if e as usize <= n * (n - 1) / 2 {
                check(PriorModel::er_simple(d), n);
            }
            check(PriorModel::er_multi(d), n);
            check(PriorModel::ucm(d), n);
            check(PriorModel::sbm(d), n);
            let mut seen = Vec::new();
            for g in enumerate_multigraphs(n, e) {
                let k = g.degrees().to_vec();
                if !seen.contains(&k) {
                    seen.push(k.clone());
                    check(PriorModel::cm(k), n);
                }
            }
        }
        check(PriorModel::er_simple(EdgeCountPrior::Geometric(2.0)), n);
        if n <= 3 {
            check(PriorModel::er_multi(EdgeCountPrior::Geometric(0.2)), n);
        }
    }
    let chi = [(vec![3u64, 2, 2, 1], 7u64), (vec![2, 2, 2, 2], 8), (vec![4, 1, 1], 9)]
        .into_iter()
        .map(|(d, seed)| (d.clone(), cm_chi_square(&d, 200_000, seed)))
        .collect::<Vec<_>>();
    let chi_ok = chi.iter().all(|(_, (p, _))| *p > 0.01);
    Outcome::new(
        worst <= 1e-10 && chi_ok,
        format!(
            "{checked} supports, max |mass - 1| = {worst:.1e}; stub matching chi-square p-values {}",
            chi.iter().map(|(d, (p, k))| format!("{d:?}: {p:.3} ({k} graphs)")).collect::<Vec<_>>().join(", ")
        ),
    )
}

// ---------------------------------------------------------------------------

fn ppc_trial(k: u64) -> Option<bool> {
    let prior = PriorModel::er_simple(EdgeCountPrior::Delta(10));
    let dynamics = DynamicsModel::glauber(0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(90_000 + k);
    let g = prior.sample(8, &mut rng).unwrap().graph;
    let x = dynamics.simulate(&g, 100, &mut rng).unwrap();
    let cfg = SamplerConfig { burn_in: 100, sweeps: 200, thinning: 2, seed: 7_000 + k, ..Default::default() };
    let samples = run_chain(Arc::new(x.clone()), &prior, &dynamics, &cfg, 0).unwrap().samples;
    let probs = EdgeMarginals::from_samples(&samples, 0.0).unwrap().edge_prob_matrix();
    let report = posterior_predictive_check(&samples, &dynamics, &x, &probs, &PpcConfig::default(), rng.random()).unwrap();
    report.statistic("mean_rate").and_then(|s| s.inside_band)
}

fn ppc_rate() -> (usize, usize) {
    let results: Vec<Option<bool>> = (0..200u64).into_par_iter().map(ppc_trial).collect();
    (results.iter().filter(|r| **r == Some(true)).count(), results.iter().filter(|r| r.is_some()).count())
}

fn ppc_calibration(rate: (usize, usize)) -> Outcome {
    let (inside, defined) = rate;
    let frac = inside as f64 / 200.0;
    Outcome::new(
        (0.85..=0.95).contains(&frac) && defined == 200,
        format!("mean activity inside the central 90% band in {inside}/200 trials ({:.1}%)", 100.0 * frac),
    )
}

/// E[max(1, round(D / dt))] for D exponential with mean `mu`.
fn expected_run_bins(mu: f64, dt: f64) -> f64 {
    let s = |x: f64| (-x * dt / mu).exp();
    let mut total = 1.0 - s(1.5);
    let mut k = 2.0;
    while s(k - 0.5) > 1e-18 {
        total += k * (s(k - 0.5) - s(k + 0.5));
        k += 1.0;
    }
    total
}

fn spike_substitute(rate: Option<(usize, usize)>) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let units = 100;
    let per_unit = 1000;
    let spacing = 0.5;
    let data = SpikeData {
        duration: spacing * per_unit as f64,
        units: (0..units)
            .map(|_| (0..per_unit).map(|s| s as f64 * spacing + rng.random::<f64>() * 0.1).collect())
            .collect(),
    };
    let cfg = IngestConfig { steps: 500_000, extension_mean: 0.012, segments: 1 };
    let dt = data.duration / cfg.steps as f64;
    let series = ingest_spike_data(&data, &cfg, &mut rng).unwrap();
    let runs: Vec<f64> =
        (0..units).flat_map(|u| active_runs(series[0].row(u))).map(|r| r as f64).collect();
    let observed = mean(&runs);
    let expected = expected_run_bins(cfg.extension_mean, dt);
    let rel = (observed - expected).abs() / expected;
    let ingest_ok = runs.len() == units * per_unit && rel < 0.01;
    let mut detail = format!(
        "{} runs, mean length {observed:.4} bins vs exact {expected:.4} (relative error {:.2}%)",
        runs.len(),
        100.0 * rel
    );
    let ppc_ok = match rate {
        Some(r) => {
            let o = ppc_calibration(r);
            detail.push_str(&format!("; calibration {}", if o.pass { "passed" } else { "failed" }));
            o.pass
        }
        None => {
            detail.push_str("; calibration not run");
            false
        }
    };
    Outcome::new(ingest_ok && ppc_ok, detail)
}

// ---------------------------------------------------------------------------

fn main() {
    let selected: Option<Vec<String>> = std::env::var("RECONLAB_ACCEPTANCE")
        .ok()
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.split(',').map(|k| k.trim().to_string()).collect());
    let wanted = |key: &str| selected.as_ref().is_none_or(|s| s.iter().any(|k| k == key));

    let mut outcomes: Vec<(&str, Outcome)> = Vec::new();
    let mut reports: Vec<InfoReport> = Vec::new();
    let record = |key: &'static str, o: Outcome, outcomes: &mut Vec<(&str, Outcome)>| {
        println!("{} {key}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        outcomes.push((key, o));
    };

    if wanted("single_edge") {
        record("single_edge", single_edge(), &mut outcomes);
    }
    if wanted("enumeration_oracle") {
        let o = enumeration_oracle(&mut reports);
        record("enumeration_oracle", o, &mut outcomes);
    }
    if wanted("auc_trend") || wanted("index_vs_loss") {
        let start = Instant::now();
        let glauber = glauber_sweep();
        let sis = if wanted("auc_trend") { Some(sis_sweep()) } else { None };
        let elapsed = start.elapsed();
        let mut failures = collect_reports(&glauber, &mut reports);
        if let Some(sis) = &sis {
            failures += collect_reports(sis, &mut reports);
            let mut o = auc_trend(&glauber, sis, elapsed);
            if failures > 0 {
                o.pass = false;
                o.detail.push_str(&format!("; {failures} realizations failed"));
            }
            record("auc_trend", o, &mut outcomes);
        }
        if wanted("index_vs_loss") {
            record("index_vs_loss", index_vs_loss(&glauber), &mut outcomes);
        }
    }
    if wanted("inference_sweep") {
        let o = inference_sweep(&mut reports);
        record("inference_sweep", o, &mut outcomes);
    }
    if wanted("delta_prior") {
        record("delta_prior", delta_prior_scaling(), &mut outcomes);
    }
    if wanted("priors") {
        record("priors", prior_normalization(), &mut outcomes);
    }
    let rate = if wanted("ppc_calibration") || wanted("spike_substitute") { Some(ppc_rate()) } else { None };
    if wanted("ppc_calibration") {
        record("ppc_calibration", ppc_calibration(rate.unwrap()), &mut outcomes);
    }
    if wanted("spike_substitute") {
        record("spike_substitute", spike_substitute(rate), &mut outcomes);
    }
    if wanted("information_bounds") {
        if reports.is_empty() {
            println!("SKIP information_bounds: no information reports were produced by the selected criteria");
        } else {
            record("information_bounds", information_bounds(&reports), &mut outcomes);
        }
    }

    let failed: Vec<&str> = outcomes.iter().filter(|(_, o)| !o.pass).map(|(k, _)| *k).collect();
    println!("acceptance: {} passed, {} failed", outcomes.len() - failed.len(), failed.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
