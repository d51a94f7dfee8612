use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use reconlab::graph::Graph;
use reconlab::heuristics::{heuristic_scores, Method};
use reconlab::metrics::{auc, reconstructability_from_loss, MetricsReport};
use reconlab::pipeline::generate::{generate_realization, read_graph, read_series, realization_seed, write_json};
use reconlab::pipeline::ppc::write_rates_csv;
use reconlab::pipeline::reconstruct::{read_matrix_csv, write_matrix_csv};
use reconlab::pipeline::select::write_selection_csv;
use reconlab::pipeline::stats::{derive_seed, tag};
use reconlab::pipeline::sweep::{write_records_csv, write_summary_csv};
use reconlab::pipeline::{
    ingest_spike_data, posterior_predictive_check, reconstruct, run_generation, run_model_selection, run_sweep,
    write_generation, ExperimentConfig, IngestConfig, SpikeData,
};
use reconlab::sampler::stream_rng;
use reconlab::series::TimeSeries;
use reconlab::single_edge::{posterior_curve, SingleEdgeModel};

#[derive(Parser)]
#[command(name = "reconlab", version, about = "Bayesian network reconstruction from binary time series")]
struct Cli {
    /// Master seed; overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArg {
    /// JSON experiment configuration.
    #[arg(long, short)]
    config: PathBuf,
}

#[derive(Args)]
struct DataArgs {
    /// Observed series; otherwise taken from the configuration or generated.
    #[arg(long)]
    series: Option<PathBuf>,
    /// True graph as an edge list, used for scoring.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Draw graphs from the prior and simulate series on them.
    Generate(ConfigArg),
    /// Sample the posterior and report information measures.
    Reconstruct {
        #[command(flatten)]
        config: ConfigArg,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Score node pairs with a pairwise statistic.
    Heuristic {
        #[arg(long)]
        method: Method,
        #[arg(long)]
        series: PathBuf,
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Keep the ordered scores instead of symmetrizing.
        #[arg(long)]
        directed: bool,
    },
    /// Compare an edge-probability or score matrix with the true graph.
    Evaluate {
        #[arg(long)]
        truth: PathBuf,
        /// Headerless N×N CSV matrix.
        #[arg(long)]
        probs: PathBuf,
        /// Prior graph entropy in bits, to convert the loss into a reconstructability.
        #[arg(long)]
        graph_entropy: Option<f64>,
    },
    /// Rank the configured candidate models by estimated evidence.
    Select {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        series: Option<PathBuf>,
    },
    /// Posterior predictive check of the inference model.
    Ppc {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long)]
        series: Option<PathBuf>,
        /// Number of replicate series.
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Closed-form two-node model.
    SingleEdge {
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        r: f64,
        #[arg(long = "T", short = 'T')]
        t: u64,
        /// Tabulate Ψ over a q grid and every length up to T instead.
        #[arg(long)]
        sweep: bool,
        /// Grid points for q in the sweep.
        #[arg(long, default_value_t = 99)]
        grid: usize,
    },
    /// Turn spike times into binary series segments.
    IngestSpikes {
        /// JSON file with `duration` and per-unit `units` spike lists.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        steps: usize,
        /// Mean activation duration in seconds.
        #[arg(long, default_value_t = 0.012)]
        extension_mean: f64,
        #[arg(long, default_value_t = 100)]
        segments: usize,
    },
    /// Run every grid value of the configured sweep.
    Sweep(ConfigArg),
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().context("configuring the thread pool")?;
    }
    match &cli.command {
        Command::Generate(c) => generate(&cli, c),
        Command::Reconstruct { config, data } => reconstruct_cmd(&cli, config, data),
        Command::Heuristic { method, series, truth, directed } => heuristic(&cli, *method, series, truth.as_deref(), *directed),
        Command::Evaluate { truth, probs, graph_entropy } => evaluate(&cli, truth, probs, *graph_entropy),
        Command::Select { config, series } => select(&cli, config, series.as_deref()),
        Command::Ppc { config, series, replicates } => ppc(&cli, config, series.as_deref(), *replicates),
        Command::SingleEdge { p, q, r, t, sweep, grid } => single_edge(&cli, *p, *q, *r, *t, *sweep, *grid),
        Command::IngestSpikes { input, steps, extension_mean, segments } => {
            ingest(&cli, input, IngestConfig { steps: *steps, extension_mean: *extension_mean, segments: *segments })
        }
        Command::Sweep(c) => sweep(&cli, c),
    }
}

fn load_config(cli: &Cli, arg: &ConfigArg) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&arg.config).with_context(|| format!("reading {}", arg.config.display()))?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.sampler.seed = derive_seed(cfg.seed, &[tag::SAMPLER, cfg.sampler.seed]);
    Ok(cfg)
}

fn out_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> Result<PathBuf> {
    let dir = cli.out.clone().or_else(|| cfg.and_then(|c| c.output.clone())).unwrap_or_else(|| PathBuf::from("reconlab-out"));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn announce(path: &Path) {
    println!("wrote {}", path.display());
}

/// Series and truth for commands that work on one dataset: explicit files
/// win, then the configuration's inputs, then realization 0 of the
/// generating model.
fn dataset(cfg: &ExperimentConfig, series: Option<&Path>, truth: Option<&Path>) -> Result<(TimeSeries, Option<Graph>)> {
    let series_path = series.map(Path::to_path_buf).or_else(|| cfg.inputs.series.clone());
    let truth_path = truth.map(Path::to_path_buf).or_else(|| cfg.inputs.graph.clone());
    let read_truth = |p: &Path| read_graph(p).with_context(|| format!("reading {}", p.display()));
    match series_path {
        Some(p) => {
            let x = read_series(&p).with_context(|| format!("reading {}", p.display()))?;
            let g = truth_path.as_deref().map(read_truth).transpose()?;
            Ok((x, g))
        }
        None => {
            let r = generate_realization(&cfg.truth(), cfg.n, cfg.t, 0, realization_seed(cfg.seed, 0))?;
            let g = match truth_path {
                Some(p) => read_truth(&p)?,
                None => r.graph,
            };
            Ok((r.series, Some(g)))
        }
    }
}

fn generate(cli: &Cli, arg: &ConfigArg) -> Result<()> {
    let cfg = load_config(cli, arg)?;
    let dir = out_dir(cli, Some(&cfg))?;
    let pairs = run_generation(&cfg)?;
    let manifest = write_generation(&dir, &cfg, &pairs)?;
    println!("generated {} realizations in {}", manifest.realizations.len(), dir.display());
    Ok(())
}

fn reconstruct_cmd(cli: &Cli, arg: &ConfigArg, data: &DataArgs) -> Result<()> {
    let cfg = load_config(cli, arg)?;
    let dir = out_dir(cli, Some(&cfg))?;
    let (x, truth) = dataset(&cfg, data.series.as_deref(), data.truth.as_deref())?;
    let r = reconstruct(&x, &cfg.inference_model(), &cfg.sampler, &cfg.estimator, truth.as_ref())?;
    let mut heuristics = serde_json::Map::new();
    if let Some(g) = &truth {
        for &h in &cfg.heuristics {
            let a = heuristic_scores(&x, h).and_then(|s| auc(g, &s.symmetrized())).ok();
            heuristics.insert(h.to_string(), json!(a));
        }
    }
    let path = dir.join("reconstruction.json");
    write_json(&path, &json!({ "report": r.report, "heuristic_auc": heuristics }))?;
    announce(&path);
    let path = dir.join("edge_probs.csv");
    write_matrix_csv(create(&path)?, &r.edge_probs)?;
    announce(&path);
    let info = &r.report.info;
    println!(
        "log-evidence {:.4}  information gain {:.4}  lambda {:.4}  psi {}",
        info.log_evidence,
        info.information_gain,
        info.lambda,
        info.reconstruction_index.map_or("undefined".into(), |v| format!("{v:.4}"))
    );
    Ok(())
}

fn heuristic(cli: &Cli, method: Method, series: &Path, truth: Option<&Path>, directed: bool) -> Result<()> {
    let dir = out_dir(cli, None)?;
    let x = read_series(series).with_context(|| format!("reading {}", series.display()))?;
    let scores = heuristic_scores(&x, method)?;
    let path = dir.join(format!("scores_{method}.csv"));
    scores.write_csv(create(&path)?, !directed)?;
    announce(&path);
    if !scores.flagged.is_empty() {
        eprintln!("{} pair(s) fell back to a default score on degenerate input", scores.flagged.len());
    }
    if let Some(t) = truth {
        let g = read_graph(t).with_context(|| format!("reading {}", t.display()))?;
        let value = auc(&g, &scores.symmetrized())?;
        let path = dir.join(format!("heuristic_{method}.json"));
        write_json(&path, &json!({ "method": method, "auc": value, "flagged_pairs": scores.flagged.len() }))?;
        announce(&path);
        println!("AUC {value:.4}");
    }
    Ok(())
}

fn evaluate(cli: &Cli, truth: &Path, probs: &Path, graph_entropy: Option<f64>) -> Result<()> {
    let dir = out_dir(cli, None)?;
    let g = read_graph(truth).with_context(|| format!("reading {}", truth.display()))?;
    let m = read_matrix_csv(File::open(probs).with_context(|| format!("opening {}", probs.display()))?)?;
    let metrics = MetricsReport::compute(&g, &m, None)?;
    let psi = graph_entropy.map(|h| reconstructability_from_loss(metrics.posterior_loss, h)).transpose()?;
    let path = dir.join("evaluation.json");
    write_json(&path, &json!({ "metrics": metrics, "reconstructability_from_loss": psi }))?;
    announce(&path);
    println!("posterior loss {:.4}  mean error {:.4}  AUC {}", metrics.posterior_loss, metrics.mean_error, metrics.auc.map_or("undefined".into(), |v| format!("{v:.4}")));
    Ok(())
}

fn select(cli: &Cli, arg: &ConfigArg, series: Option<&Path>) -> Result<()> {
    let cfg = load_config(cli, arg)?;
    if cfg.candidates.is_empty() {
        bail!("the configuration lists no candidates");
    }
    let dir = out_dir(cli, Some(&cfg))?;
    let (x, _) = dataset(&cfg, series, None)?;
    let (report, runs) = run_model_selection(&x, &cfg.candidates, &cfg.sampler, &cfg.estimator)?;
    let path = dir.join("selection.json");
    write_json(&path, &json!({ "selection": report, "reconstructions": runs }))?;
    announce(&path);
    let path = dir.join("selection.csv");
    write_selection_csv(create(&path)?, &report)?;
    announce(&path);
    match &report.selected_name {
        Some(name) => println!("selected {name}"),
        None => bail!("every candidate failed"),
    }
    Ok(())
}

fn ppc(cli: &Cli, arg: &ConfigArg, series: Option<&Path>, replicates: Option<usize>) -> Result<()> {
    let mut cfg = load_config(cli, arg)?;
    if let Some(k) = replicates {
        cfg.ppc.replicates = k;
    }
    let dir = out_dir(cli, Some(&cfg))?;
    let (x, _) = dataset(&cfg, series, None)?;
    let model = cfg.inference_model();
    let r = reconstruct(&x, &model, &cfg.sampler, &cfg.estimator, None)?;
    let report = posterior_predictive_check(&r.samples, &model.dynamics, &x, &r.edge_probs, &cfg.ppc, derive_seed(cfg.seed, &[tag::PPC]))?;
    let path = dir.join("ppc.json");
    write_json(&path, &report)?;
    announce(&path);
    let path = dir.join("ppc_rates.csv");
    write_rates_csv(create(&path)?, &report)?;
    announce(&path);
    for s in &report.statistics {
        println!(
            "{:<18} observed {:>10}  quantile {:>6}{}",
            s.name,
            s.observed.map_or("-".into(), |v| format!("{v:.4}")),
            s.quantile.map_or("-".into(), |v| format!("{v:.3}")),
            if s.inside_band == Some(false) { "  outside band" } else { "" }
        );
    }
    Ok(())
}

fn single_edge(cli: &Cli, p: f64, q: f64, r: f64, t: u64, sweep: bool, grid: usize) -> Result<()> {
    let dir = out_dir(cli, None)?;
    if sweep {
        if grid < 2 {
            bail!("the q grid needs at least two points");
        }
        let path = dir.join("single_edge_sweep.csv");
        let mut w = create(&path)?;
        writeln!(w, "q,T,psi,mutual_information")?;
        for k in 0..grid {
            let q = 0.01 + 0.98 * k as f64 / (grid - 1) as f64;
            for len in 1..=t {
                let m = SingleEdgeModel::new(p, q, r, len)?;
                writeln!(w, "{q},{len},{},{}", m.reconstructability()?, m.mutual_information())?;
            }
        }
        w.flush()?;
        announce(&path);
        return Ok(());
    }
    let m = SingleEdgeModel::new(p, q, r, t)?;
    let psi = m.reconstructability().ok();
    let path = dir.join("single_edge.json");
    write_json(
        &path,
        &json!({
            "model": m,
            "lambda": m.lambda(),
            "eta": m.eta(),
            "posterior_entropy": m.edge_posterior_entropy(),
            "mutual_information": m.mutual_information(),
            "reconstructability": psi,
        }),
    )?;
    announce(&path);
    let path = dir.join("single_edge_posterior.csv");
    let mut w = create(&path)?;
    writeln!(w, "n,posterior")?;
    for (n, post) in posterior_curve(&m) {
        writeln!(w, "{n},{post}")?;
    }
    w.flush()?;
    announce(&path);
    println!("reconstructability {}", psi.map_or("undefined".into(), |v| format!("{v:.6}")));
    Ok(())
}

fn ingest(cli: &Cli, input: &Path, cfg: IngestConfig) -> Result<()> {
    let dir = out_dir(cli, None)?;
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    let data: SpikeData = serde_json::from_str(&text).with_context(|| format!("parsing {}", input.display()))?;
    let seed = derive_seed(cli.seed.unwrap_or(0), &[tag::SPIKES]);
    let mut rng = stream_rng(seed, 0);
    let segments = ingest_spike_data(&data, &cfg, &mut rng)?;
    let mut files = Vec::with_capacity(segments.len());
    for (k, s) in segments.iter().enumerate() {
        let name = format!("segment_{k:03}.txt");
        let mut w = create(&dir.join(&name))?;
        s.write_text(&mut w)?;
        w.flush()?;
        files.push(name);
    }
    let path = dir.join("segments.json");
    write_json(&path, &json!({ "config": cfg, "seed": seed, "units": data.units.len(), "files": files }))?;
    announce(&path);
    println!("{} segments of {} steps", segments.len(), segments.first().map_or(0, TimeSeries::len));
    Ok(())
}

fn sweep(cli: &Cli, arg: &ConfigArg) -> Result<()> {
    let cfg = load_config(cli, arg)?;
    let dir = out_dir(cli, Some(&cfg))?;
    let report = run_sweep(&cfg)?;
    let path = dir.join("sweep.json");
    write_json(&path, &report)?;
    announce(&path);
    let path = dir.join("sweep_summary.csv");
    write_summary_csv(create(&path)?, &report)?;
    announce(&path);
    let path = dir.join("sweep_records.csv");
    write_records_csv(create(&path)?, &report)?;
    announce(&path);
    let failures: usize = report.points.iter().map(|p| p.failures).sum();
    if failures > 0 {
        eprintln!("{failures} task(s) failed; see the error column of sweep_records.csv");
    }
    Ok(())
}
