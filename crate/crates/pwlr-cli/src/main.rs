//! `pwlr`: embed node-attributed graphs as persistence vectors, classify
//! datasets with the bundled evaluation harness, inspect a single graph's
//! diagnostics, or benchmark embedding cost.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pwlr::diffusion::{build_transition_matrix, second_eigenvalue, stationary_distribution};
use pwlr::evalkit::{cross_validate, CvConfig, CvReport, EvalError, GridSpec, DEFAULT_TREES};
use pwlr::filtration::{edge_heights, persistence_run, phi_reduced, phi_sorted};
use pwlr::fixtures::reference_dataset;
use pwlr::io::{encode_features, parse_tu_dataset, DatasetError};
use pwlr::pipeline::{
    bench_embedding, build_degree_vocab, embed_dataset, propagate, PipelineError,
};
use pwlr::{EmbeddingMode, FeatureMode, GraphDataset, PwlrConfig};

/// Reserved dataset name that selects the bundled 4-node reference graph.
const FIXTURE: &str = "fixture";

#[derive(Parser)]
#[command(
    name = "pwlr",
    version,
    about = "Persistent Weisfeiler-Lehman random-walk graph embeddings"
)]
struct Cli {
    /// Base seed for all randomized stages.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Worker-thread cap (default: one per logical CPU).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one embedding vector per graph.
    Embed(EmbedArgs),
    /// Repeated stratified cross-validation with nested grid search.
    Classify(ClassifyArgs),
    /// Print one graph's operator, heights, Betti table, and vectors.
    Inspect(InspectArgs),
    /// Time dataset embedding across propagation depths.
    Bench(BenchArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Dataset name ("fixture" for the bundled reference graph).
    #[arg(long, default_value = FIXTURE)]
    dataset: String,
    /// Directory holding one folder per dataset in TU text format.
    #[arg(long, default_value = "./data")]
    data_dir: PathBuf,
}

#[derive(Args)]
struct DepthArgs {
    /// Left (WL) propagation steps.
    #[arg(long, default_value_t = 1)]
    k1: usize,
    /// Right (RW) propagation steps.
    #[arg(long, default_value_t = 1)]
    k2: usize,
}

#[derive(Args)]
struct ShapeArgs {
    /// Norm order for edge heights.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Bias added to every recorded height.
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    /// Node features to encode: discrete, continuous, or both.
    #[arg(long, default_value = "discrete", value_parser = parse_feature_mode)]
    feature_mode: FeatureMode,
    /// Drop zero-weight edges and invert remaining distances first.
    #[arg(long)]
    md_preprocess: bool,
}

#[derive(Args)]
struct OutArgs {
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutFormat::Csv)]
    out: OutFormat,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out_path: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Embedding mode.
    #[arg(long, default_value = "opt-h0", value_parser = parse_mode)]
    mode: EmbeddingMode,
    #[command(flatten)]
    depth: DepthArgs,
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct ClassifyArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Embedding mode to evaluate.
    #[arg(long, default_value = "opt-h0", value_parser = parse_mode)]
    mode: EmbeddingMode,
    #[command(flatten)]
    shape: ShapeArgs,
    /// Outer cross-validation repetitions.
    #[arg(long, default_value_t = 10)]
    repeats: usize,
    /// Outer folds.
    #[arg(long, default_value_t = 10)]
    folds: usize,
    /// Inner folds for hyperparameter selection.
    #[arg(long, default_value_t = 5)]
    inner_folds: usize,
    /// Inclusive depth-grid bounds for k1 and k2, as A..B.
    #[arg(long, default_value = "0..29", value_parser = parse_grid_range)]
    grid_k: GridRange,
    /// Candidate forest sizes.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_TREES)]
    trees: Vec<usize>,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Args)]
struct InspectArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Graph index within the dataset.
    #[arg(default_value_t = 0)]
    index: usize,
    #[command(flatten)]
    depth: DepthArgs,
    #[command(flatten)]
    shape: ShapeArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    shape: ShapeArgs,
    #[command(flatten)]
    out: OutArgs,
}

#[derive(Clone, Copy)]
struct GridRange {
    lo: usize,
    hi: usize,
}

fn parse_grid_range(s: &str) -> Result<GridRange, String> {
    let (lo, hi) = s
        .split_once("..")
        .ok_or_else(|| format!("'{s}' is not of the form A..B"))?;
    let lo = lo.trim().parse::<usize>().map_err(|e| format!("bad lower bound '{lo}': {e}"))?;
    let hi = hi.trim().parse::<usize>().map_err(|e| format!("bad upper bound '{hi}': {e}"))?;
    if lo > hi {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok(GridRange { lo, hi })
}

fn parse_mode(s: &str) -> Result<EmbeddingMode, String> {
    s.parse()
}

fn parse_feature_mode(s: &str) -> Result<FeatureMode, String> {
    s.parse()
}

/// Failures carry the exit code: usage and validation problems exit 2,
/// runtime problems exit 1.
enum Failure {
    Usage(anyhow::Error),
    Runtime(anyhow::Error),
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn runtime(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Runtime(e.into())
}

fn from_dataset_error(e: DatasetError) -> Failure {
    match e {
        DatasetError::Io { .. } => runtime(e),
        _ => usage(e),
    }
}

fn from_pipeline_error(e: PipelineError) -> Failure {
    match e {
        PipelineError::InvalidConfig(_) => usage(e),
        PipelineError::Dataset(d) => from_dataset_error(d),
        _ => runtime(e),
    }
}

fn from_eval_error(e: EvalError) -> Failure {
    match e {
        EvalError::InvalidConfig(_)
        | EvalError::SingleClass
        | EvalError::Stratification { .. } => usage(e),
        EvalError::Pipeline(p) => from_pipeline_error(p),
        EvalError::Forest(f) => runtime(f),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage(anyhow!("--threads must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")
            .map_err(runtime)?;
    }
    match cli.command {
        Command::Embed(args) => cmd_embed(args, cli.seed),
        Command::Classify(args) => cmd_classify(args, cli.seed),
        Command::Inspect(args) => cmd_inspect(args),
        Command::Bench(args) => cmd_bench(args, cli.seed),
    }
}

fn load_dataset(data: &DataArgs) -> Result<GraphDataset, Failure> {
    if data.dataset == FIXTURE {
        return Ok(reference_dataset());
    }
    let root = data.data_dir.join(&data.dataset);
    if !root.is_dir() {
        return Err(usage(anyhow!(
            "dataset directory {} does not exist",
            root.display()
        )));
    }
    parse_tu_dataset(&root, &data.dataset).map_err(from_dataset_error)
}

/// Provenance record written alongside every machine-readable output.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    dataset: String,
    graphs: usize,
    config: serde_json::Value,
    seed: u64,
    version: String,
    timings_s: BTreeMap<String, f64>,
}

fn manifest(
    command: &str,
    ds: &GraphDataset,
    config: serde_json::Value,
    seed: u64,
    timings_s: BTreeMap<String, f64>,
) -> RunManifest {
    RunManifest {
        command: command.to_string(),
        dataset: ds.name().to_string(),
        graphs: ds.len(),
        config,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timings_s,
    }
}

/// 17 significant digits: enough for `f64` round-trips to be bit-exact.
fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes `body` as CSV, prefixing a manifest pointer when the target is a
/// file (the manifest itself goes to a `.manifest.json` sidecar). JSON
/// output embeds the manifest inline instead.
fn emit(
    out: &OutArgs,
    man: &RunManifest,
    csv_body: String,
    json_payload: serde_json::Value,
) -> Result<(), Failure> {
    let render_json = |man: &RunManifest| -> Result<String, Failure> {
        let doc = serde_json::json!({ "manifest": man, "rows": json_payload });
        serde_json::to_string_pretty(&doc).context("serializing output").map_err(runtime)
    };
    match (&out.out_path, out.out) {
        (None, OutFormat::Csv) => {
            print!("{csv_body}");
            Ok(())
        }
        (None, OutFormat::Json) => {
            println!("{}", render_json(man)?);
            Ok(())
        }
        (Some(path), format) => {
            let text = match format {
                OutFormat::Csv => {
                    let sidecar = manifest_sidecar(path);
                    let json = serde_json::to_string_pretty(man)
                        .context("serializing manifest")
                        .map_err(runtime)?;
                    std::fs::write(&sidecar, json)
                        .with_context(|| format!("writing {}", sidecar.display()))
                        .map_err(runtime)?;
                    format!("# manifest: {}\n{csv_body}", sidecar.display())
                }
                OutFormat::Json => render_json(man)? + "\n",
            };
            std::fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))
                .map_err(runtime)
        }
    }
}

fn manifest_sidecar(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn cmd_embed(args: EmbedArgs, seed: u64) -> Result<(), Failure> {
    let cfg = PwlrConfig {
        k1: args.depth.k1,
        k2: args.depth.k2,
        p: args.shape.p,
        tau: args.shape.tau,
        mode: args.mode,
        feature_mode: args.shape.feature_mode,
        md_preprocess: args.shape.md_preprocess,
    };
    cfg.validate().map_err(from_pipeline_error)?;
    let t0 = std::time::Instant::now();
    let ds = load_dataset(&args.data)?;
    let load_s = t0.elapsed().as_secs_f64();
    let t1 = std::time::Instant::now();
    let emb = embed_dataset(&ds, &cfg).map_err(from_pipeline_error)?;
    let embed_s = t1.elapsed().as_secs_f64();

    let config = serde_json::json!({
        "pwlr": cfg,
        "dim": emb.dim(),
        "degree_vocab": emb.vocab,
        "pad_len_h0": emb.pad_len_h0,
        "pad_len_h1": emb.pad_len_h1,
    });
    let man = manifest(
        "embed",
        &ds,
        config,
        seed,
        BTreeMap::from([("load".into(), load_s), ("embed".into(), embed_s)]),
    );

    let mut csv = String::new();
    csv.push_str("id,label");
    for c in 0..emb.dim() {
        csv.push_str(&format!(",v{c}"));
    }
    csv.push('\n');
    let labels = ds.graph_labels();
    for (i, row) in emb.vectors.rows().into_iter().enumerate() {
        csv.push_str(&format!("{},{}", i, labels[i]));
        for x in row {
            csv.push(',');
            csv.push_str(&format_real(*x));
        }
        csv.push('\n');
    }
    let rows: Vec<serde_json::Value> = emb
        .vectors
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            serde_json::json!({
                "id": i,
                "label": labels[i],
                "vector": row.iter().copied().collect::<Vec<f64>>(),
            })
        })
        .collect();
    emit(&args.out, &man, csv, serde_json::Value::Array(rows))
}

fn cmd_classify(args: ClassifyArgs, seed: u64) -> Result<(), Failure> {
    let base = PwlrConfig {
        p: args.shape.p,
        tau: args.shape.tau,
        mode: args.mode,
        feature_mode: args.shape.feature_mode,
        md_preprocess: args.shape.md_preprocess,
        ..PwlrConfig::default()
    };
    let grid = GridSpec { k_lo: args.grid_k.lo, k_hi: args.grid_k.hi, trees: args.trees.clone() };
    let cv = CvConfig {
        repeats: args.repeats,
        folds: args.folds,
        inner_folds: args.inner_folds,
        seed,
    };
    let t0 = std::time::Instant::now();
    let ds = load_dataset(&args.data)?;
    let load_s = t0.elapsed().as_secs_f64();
    let t1 = std::time::Instant::now();
    let reports =
        cross_validate(&ds, &[args.mode], &base, &grid, &cv).map_err(from_eval_error)?;
    let cv_s = t1.elapsed().as_secs_f64();

    for r in &reports {
        eprintln!(
            "mode {}: mean accuracy {:.4} +/- {:.4} over {} folds ({:.1} s)",
            r.mode,
            r.mean_accuracy,
            r.std_accuracy,
            r.fold_outcomes.len(),
            r.runtime_seconds
        );
    }

    let config = serde_json::json!({
        "pwlr": base,
        "grid": grid,
        "cv": cv,
    });
    let man = manifest(
        "classify",
        &ds,
        config,
        seed,
        BTreeMap::from([("load".into(), load_s), ("cross_validate".into(), cv_s)]),
    );
    let csv = classify_csv(&reports);
    let rows = serde_json::to_value(&reports).context("serializing reports").map_err(runtime)?;
    emit(&args.out, &man, csv, rows)
}

fn classify_csv(reports: &[CvReport]) -> String {
    let mut csv = String::from("mode,repeat,fold,accuracy,k1,k2,trees\n");
    for r in reports {
        for o in &r.fold_outcomes {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.mode,
                o.repeat,
                o.fold,
                format_real(o.accuracy),
                o.k1,
                o.k2,
                o.trees
            ));
        }
        csv.push_str(&format!(
            "{},mean,,{},,,\n{},std,,{},,,\n",
            r.mode,
            format_real(r.mean_accuracy),
            r.mode,
            format_real(r.std_accuracy)
        ));
    }
    csv
}

fn cmd_inspect(args: InspectArgs) -> Result<(), Failure> {
    let ds = load_dataset(&args.data)?;
    if args.index >= ds.len() {
        return Err(usage(anyhow!(
            "graph index {} out of range for {} ({} graphs)",
            args.index,
            ds.name(),
            ds.len()
        )));
    }
    let cfg = PwlrConfig {
        k1: args.depth.k1,
        k2: args.depth.k2,
        p: args.shape.p,
        tau: args.shape.tau,
        mode: EmbeddingMode::H0H1,
        feature_mode: args.shape.feature_mode,
        md_preprocess: args.shape.md_preprocess,
    };
    cfg.validate().map_err(from_pipeline_error)?;
    let prepared;
    let ds = if cfg.md_preprocess {
        prepared = ds.map_graphs(pwlr::io::preprocess_md).map_err(|e| usage(anyhow!(e)))?;
        &prepared
    } else {
        &ds
    };
    let g = &ds.graphs()[args.index];
    let x = encode_features(ds, cfg.feature_mode)
        .map_err(from_dataset_error)?
        .swap_remove(args.index);
    let vocab = build_degree_vocab(ds);

    let mut out = std::io::stdout().lock();
    let r = inspect_report(&mut out, g, &x, &vocab, &cfg, ds.name(), args.index);
    r.context("writing report").map_err(runtime)
}

fn inspect_report(
    out: &mut impl std::io::Write,
    g: &pwlr::Graph,
    x: &pwlr::FeatureMatrix,
    vocab: &[(usize, usize)],
    cfg: &PwlrConfig,
    name: &str,
    index: usize,
) -> std::io::Result<()> {
    writeln!(out, "graph {index} of {name}: {} nodes, {} edges, class {}", g.node_count(), g.edge_count(), g.graph_label())?;
    writeln!(out, "config: k1={} k2={} p={} tau={} features={}", cfg.k1, cfg.k2, cfg.p, cfg.tau, cfg.feature_mode)?;

    let m = build_transition_matrix(g);
    writeln!(out, "\ntransition matrix M (row-stochastic, dense):")?;
    let dense = m.to_dense();
    for row in dense.rows() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
        writeln!(out, "  [{}]", cells.join(", "))?;
    }

    match stationary_distribution(&m) {
        Ok(pi) => {
            let cells: Vec<String> = pi.iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "stationary distribution pi = [{}]", cells.join(", "))?;
        }
        Err(_) => writeln!(out, "stationary distribution pi = n/a (graph is disconnected)")?,
    }
    match second_eigenvalue(&m) {
        Ok(mu2) => writeln!(out, "second eigenvalue mu2 = {}", format_real(mu2))?,
        Err(_) => writeln!(out, "second eigenvalue mu2 = n/a (graph is disconnected)")?,
    }

    let feats = propagate(g, x, cfg.k1, cfg.k2).map_err(std::io::Error::other)?;
    writeln!(out, "\npropagated features (node: vector):")?;
    for v in 0..g.node_count() {
        let vec = feats.node_vector(v);
        let cells: Vec<String> = vec.iter().map(|x| format!("{x:.6}")).collect();
        writeln!(out, "  {v}: [{}]", cells.join(", "))?;
    }

    let heights = edge_heights(g, &feats, cfg.p).map_err(std::io::Error::other)?;
    let summary = persistence_run(g, &heights).map_err(std::io::Error::other)?;
    writeln!(out, "\nedges in insertion order (height, kind, degree tuple):")?;
    for e in &summary.events {
        let (u, v) = {
            let edge = &g.edges()[e.edge];
            (edge.u, edge.v)
        };
        writeln!(
            out,
            "  ({u}, {v})  h={:.6}  {:?}  degrees ({}, {})",
            e.height, e.kind, e.degree_tuple.0, e.degree_tuple.1
        )?;
    }

    writeln!(out, "\nBetti table (edges inserted, components, cycles):")?;
    let curve = summary.betti_curve();
    for (i, (h, b0, b1)) in curve.iter().enumerate() {
        if i == 0 {
            writeln!(out, "  {i:4}  h=-         beta0={b0:<3} beta1={b1}")?;
        } else {
            writeln!(out, "  {i:4}  h={h:<9.6} beta0={b0:<3} beta1={b1}")?;
        }
    }
    let comps: Vec<String> = curve.iter().map(|(_, b0, _)| b0.to_string()).collect();
    let cycles: Vec<String> = curve.iter().map(|(_, _, b1)| b1.to_string()).collect();
    writeln!(out, "component counts: {}", comps.join(","))?;
    writeln!(out, "cycle counts: {}", cycles.join(","))?;

    let (h0, h1) = phi_sorted(&summary, cfg.tau);
    writeln!(out, "\nphi_h0 = [{}]", h0.iter().map(|x| format_real(*x)).collect::<Vec<_>>().join(", "))?;
    writeln!(out, "phi_h1 = [{}]", h1.iter().map(|x| format_real(*x)).collect::<Vec<_>>().join(", "))?;
    let (oh0, oh1) = phi_reduced(&summary, cfg.tau, vocab).map_err(std::io::Error::other)?;
    let vlabel: Vec<String> = vocab.iter().map(|(a, b)| format!("({a},{b})")).collect();
    writeln!(out, "degree vocabulary: [{}]", vlabel.join(", "))?;
    writeln!(out, "opt_h0 = [{}]", oh0.iter().map(|x| format_real(*x)).collect::<Vec<_>>().join(", "))?;
    writeln!(out, "opt_h1 = [{}]", oh1.iter().map(|x| format_real(*x)).collect::<Vec<_>>().join(", "))?;
    Ok(())
}

fn cmd_bench(args: BenchArgs, seed: u64) -> Result<(), Failure> {
    let base = PwlrConfig {
        p: args.shape.p,
        tau: args.shape.tau,
        mode: EmbeddingMode::OptH0,
        feature_mode: args.shape.feature_mode,
        md_preprocess: args.shape.md_preprocess,
        ..PwlrConfig::default()
    };
    // Depth ladder: a filtration-only point, k2 doublings at fixed k1, and
    // k1 doublings at fixed k2, so both linear trends are visible.
    let ladder: [(usize, usize); 10] =
        [(0, 0), (1, 1), (1, 2), (1, 4), (1, 8), (1, 16), (2, 1), (4, 1), (8, 1), (16, 1)];
    const REPETITIONS: usize = 5;

    let t0 = std::time::Instant::now();
    let ds = load_dataset(&args.data)?;
    let load_s = t0.elapsed().as_secs_f64();
    let t1 = std::time::Instant::now();
    let rows = bench_embedding(&ds, &base, &ladder, REPETITIONS).map_err(from_pipeline_error)?;
    let bench_s = t1.elapsed().as_secs_f64();

    let config = serde_json::json!({
        "pwlr": base,
        "ladder": ladder,
        "repetitions": REPETITIONS,
    });
    let man = manifest(
        "bench",
        &ds,
        config,
        seed,
        BTreeMap::from([("load".into(), load_s), ("bench".into(), bench_s)]),
    );
    let mut csv = String::from("k1,k2,edges,feature_width,total_ms,propagation_ms,filtration_ms\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.k1,
            r.k2,
            r.edges,
            r.feature_width,
            format_real(r.total_ms),
            format_real(r.propagation_ms),
            format_real(r.filtration_ms)
        ));
    }
    let json = serde_json::to_value(&rows).context("serializing rows").map_err(runtime)?;
    emit(&args.out, &man, csv, json)
}
