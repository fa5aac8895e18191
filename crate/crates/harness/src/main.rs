use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use cleann_bench::dataset::{load_dataset, save_dataset, Format};
use cleann_bench::report::{read_csv, write_csv, write_plot_csv, JsonLines};
use cleann_bench::synth::{generate, Order, QueryKind, SynthConfig};
use cleann_bench::training::TrainingConfig;
use cleann_bench::truth::write_truth;
use cleann_bench::{run_sliding_window, Protocol, Training, WorkloadConfig};
use cleann_core::oracle::ground_truth;
use cleann_core::{
    BridgeConfig, BridgePredicate, DepthSelection, EngineMode, Executor, IndexParams, Metric, NodeId, ReusePriority,
};

#[derive(Parser)]
#[command(name = "bench", about = "Sliding-window benchmark for the dynamic graph index")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sliding-window workload and emit per-round metrics.
    Run(RunArgs),
    /// Write a synthetic clustered dataset and query set.
    GenSynth(SynthArgs),
    /// Compute exact k-NN ground truth for a query set.
    GenTruth(TruthArgs),
    /// Convert a metrics CSV into long-format plot data.
    Plot(PlotArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    /// Dataset format; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<Format>,
    #[arg(long, default_value = "cleann")]
    engine: EngineMode,
    #[arg(long, default_value = "batched-update")]
    protocol: Protocol,
    #[arg(long, default_value_t = 5_000)]
    window: usize,
    #[arg(long, default_value_t = 0.01)]
    batch_fraction: f64,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 50)]
    rounds: usize,
    /// Worker threads; BENCH_THREADS takes precedence when set.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(short, long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    eval_every: usize,
    #[arg(long, default_value = "in-distribution")]
    training: Training,
    #[arg(long, default_value_t = 0.02)]
    training_fraction: f64,
    #[arg(long, default_value_t = 1.2)]
    capacity_factor: f64,
    #[arg(long, default_value_t = 2)]
    passes: usize,
    #[command(flatten)]
    index: IndexArgs,
    /// Directory for cached ground truth.
    #[arg(long)]
    truth_cache: Option<PathBuf>,
    /// JSON-lines metrics output; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the operation log (mixed protocol) as JSON lines.
    #[arg(long)]
    history: Option<PathBuf>,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long, default_value_t = 64)]
    max_degree: usize,
    #[arg(long, default_value_t = 75)]
    search_beam: usize,
    #[arg(long, default_value_t = 64)]
    insert_beam: usize,
    #[arg(long, default_value_t = 1.2)]
    alpha: f32,
    #[arg(long, default_value_t = 7)]
    eagerness: u32,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    #[arg(long, default_value = "fresh-first")]
    reuse: ReusePriority,
    /// Guided bridge building: on or off.
    #[arg(long, default_value = "on", value_parser = ["on", "off"])]
    bridge: String,
    /// `auto` or a comma-separated list of tree depths.
    #[arg(long, default_value = "auto")]
    bridge_depths: DepthSelection,
    #[arg(long, default_value = "same-depth")]
    bridge_predicate: BridgePredicate,
    /// Maximum bridge pairs evaluated per query.
    #[arg(long, default_value_t = 256)]
    bridge_cap: usize,
}

impl IndexArgs {
    fn params(&self) -> IndexParams {
        IndexParams {
            max_degree: self.max_degree,
            search_beam: self.search_beam,
            insert_beam: self.insert_beam,
            alpha: self.alpha,
            eagerness: self.eagerness,
            bridge: BridgeConfig {
                enabled: self.bridge == "on",
                depths: self.bridge_depths.clone(),
                predicate: self.bridge_predicate,
                max_pairs_per_query: self.bridge_cap,
            },
            metric: self.metric,
            capacity: 0,
            reuse: self.reuse,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out_data: PathBuf,
    #[arg(long)]
    out_queries: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    clusters: usize,
    #[arg(long, default_value_t = 100)]
    cluster_size: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 0.03)]
    spread: f32,
    #[arg(long, default_value = "random")]
    order: Order,
    #[arg(long, default_value_t = 100)]
    queries: usize,
    #[arg(long, default_value = "in-distribution")]
    query_kind: QueryKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TruthArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    format: Option<Format>,
    #[arg(short, long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    /// Metrics CSV written by `run --csv`.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn threads(cli: usize) -> anyhow::Result<usize> {
    match std::env::var("BENCH_THREADS") {
        Ok(v) => v.parse().with_context(|| format!("BENCH_THREADS='{v}' is not a thread count")),
        Err(_) => Ok(cli),
    }
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let data = load_dataset(&args.data, args.format).with_context(|| format!("loading {}", args.data.display()))?;
    let queries =
        load_dataset(&args.queries, args.format).with_context(|| format!("loading {}", args.queries.display()))?;
    let cfg = WorkloadConfig {
        engine: args.engine,
        protocol: args.protocol,
        window_size: args.window,
        batch_fraction: args.batch_fraction,
        batch_size: args.batch_size,
        rounds: args.rounds,
        threads: threads(args.threads)?,
        k: args.k,
        seed: args.seed,
        eval_every: args.eval_every,
        training: args.training,
        train: TrainingConfig { fraction: args.training_fraction, ..Default::default() },
        capacity_factor: args.capacity_factor,
        params: args.index.params(),
        build_passes: args.passes,
        truth_cache: args.truth_cache,
        record_history: args.history.is_some(),
    };
    let sink: Box<dyn Write> = match &args.out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut lines = JsonLines::new(sink);
    let mut emit_err = None;
    let out = run_sliding_window(&cfg, &data, &queries, |m| {
        if let Err(e) = lines.emit(m) {
            emit_err.get_or_insert(e);
        }
    })?;
    if let Some(e) = emit_err {
        return Err(e);
    }
    if let Some(path) = &args.csv {
        write_csv(File::create(path)?, &out.metrics)?;
    }
    if let Some(path) = &args.history {
        let mut w = BufWriter::new(File::create(path)?);
        for rec in &out.history {
            let returned: Vec<u32> = rec.returned.iter().map(|id| id.0).collect();
            let line = serde_json::json!({
                "kind": format!("{:?}", rec.kind),
                "id": rec.id.map(|id| id.0),
                "returned": returned,
                "start_ns": rec.start_ns,
                "end_ns": rec.end_ns,
            });
            writeln!(w, "{line}")?;
        }
        w.flush()?;
    }
    if let Some(reason) = &out.stopped_early {
        log::warn!("stopped early: {reason}");
    }
    if !out.audit.is_empty() {
        anyhow::bail!("index audit failed: {}", out.audit.join("; "));
    }
    Ok(())
}

fn gen_synth(args: SynthArgs) -> anyhow::Result<()> {
    let synth = generate(&SynthConfig {
        n: args.n,
        clusters: args.clusters,
        cluster_size: args.cluster_size,
        dim: args.dim,
        spread: args.spread,
        order: args.order,
        queries: args.queries,
        query_kind: args.query_kind,
        seed: args.seed,
    });
    save_dataset(&args.out_data, None, &synth.data)?;
    save_dataset(&args.out_queries, None, &synth.queries)?;
    Ok(())
}

fn gen_truth(args: TruthArgs) -> anyhow::Result<()> {
    let data = load_dataset(&args.data, args.format)?;
    let queries = load_dataset(&args.queries, args.format)?;
    let points: Vec<(NodeId, Vec<f32>)> = data.into_iter().enumerate().map(|(i, x)| (NodeId(i as u32), x)).collect();
    let exec = Executor::new(threads(args.threads)?);
    let mode = exec.execution();
    let rows: Vec<Vec<u32>> = exec
        .install(|| ground_truth(&queries, args.k, &points, args.metric, mode))
        .into_iter()
        .map(|row| row.into_iter().map(|id| id.0).collect())
        .collect();
    write_truth(BufWriter::new(File::create(&args.out)?), &rows)?;
    Ok(())
}

fn plot(args: PlotArgs) -> anyhow::Result<()> {
    let rows = read_csv(File::open(&args.input)?)?;
    write_plot_csv(File::create(&args.out)?, &rows)
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::GenSynth(a) => gen_synth(a),
        Command::GenTruth(a) => gen_truth(a),
        Command::Plot(a) => plot(a),
    }
}
