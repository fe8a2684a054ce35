//! `wcomp`: train, compress, check bounds, convert convolutions, run sweeps.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use wide_compress::bounds::{bound_report, cnn_bound_report, BoundInputs};
use wide_compress::compress::{compress_network, sparsity_report, CompressionLog, LayerSparsity, Mode, PlanTemplate};
use wide_compress::conv::{cnn_to_mlp, filter_sparsity, load_cnn, mlp_to_cnn, prune_cnn_structured, save_cnn, FilterSparsity};
use wide_compress::data::{
    load_csv, normalize_unit_ball, split_80_20, synthetic_teacher, uniform_in_ball, write_csv, write_manifest, Dataset,
    TaskKind,
};
use wide_compress::harness::{
    plan_runs, read_sweep_csv, run_width_sweep, summarize, summary_table, trends, write_sweep_csv, Metric, SweepConfig,
};
use wide_compress::linalg::norm;
use wide_compress::model_io::{load_model, save_model};
use wide_compress::rng::{derive_seed, rng_from};
use wide_compress::train::{init_glorot, train, write_epoch_log, LossKind, TrainConfig};
use wide_compress::activation::Activation;

#[derive(Parser)]
#[command(name = "wcomp", version, about = "Randomized greedy compression of wide networks")]
struct Cli {
    /// Master seed for every random stream of the command.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON configuration file for the command.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Main output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a dense MLP on a CSV file or on synthetic teacher data.
    Train(TrainArgs),
    /// Prune or quantize a trained model.
    Compress(CompressArgs),
    /// Evaluate the width conditions and error bounds for a model.
    CheckBounds(CheckArgs),
    /// Convert a CNN to its fully connected form, or back.
    ConvertConv(ConvertArgs),
    /// Run a width sweep and write one CSV row per compression run.
    Sweep(SweepArgs),
    /// Summarize a sweep CSV.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Regression,
    Classification,
}

impl From<KindArg> for TaskKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Regression => TaskKind::Regression,
            KindArg::Classification => TaskKind::Classification,
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Headed numeric CSV.
    data: Option<PathBuf>,
    /// Target column names.
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    #[arg(long, value_enum)]
    kind: Option<KindArg>,
    /// Generate this many rows of synthetic teacher data instead of reading a CSV.
    #[arg(long, conflicts_with = "data")]
    synthetic: Option<usize>,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// One activation per layer.
    #[arg(long, value_delimiter = ',')]
    activations: Option<Vec<String>>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
}

/// `train --config` file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct TrainJob {
    data: Option<PathBuf>,
    targets: Vec<String>,
    kind: TaskKind,
    synthetic_rows: Option<usize>,
    hidden: Vec<usize>,
    activations: Vec<String>,
    split: bool,
    normalize: bool,
    train: TrainConfig,
}

impl Default for TrainJob {
    fn default() -> Self {
        TrainJob {
            data: None,
            targets: Vec::new(),
            kind: TaskKind::Regression,
            synthetic_rows: None,
            hidden: vec![64, 40],
            activations: vec!["relu".into(), "relu".into(), "identity".into()],
            split: true,
            normalize: true,
            train: TrainConfig {
                epochs: 40,
                learning_rate: 3e-3,
                ..TrainConfig::default()
            },
        }
    }
}

#[derive(Args)]
struct CompressArgs {
    /// Model JSON (a CNN file with --cnn).
    model: PathBuf,
    /// CSV whose inputs form the score batch (targets dropped).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    targets: Vec<String>,
    /// Treat the model as a CNN and prune whole filters.
    #[arg(long)]
    cnn: bool,
    #[arg(long, value_delimiter = ',')]
    wide: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    bottleneck: Option<Vec<usize>>,
    /// Prune with keep probability P.
    #[arg(long, conflicts_with = "quantize")]
    prune: Option<f64>,
    /// Quantize onto K levels per sign.
    #[arg(long)]
    quantize: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    structured: bool,
    #[arg(long)]
    no_projection: bool,
}

#[derive(Args)]
struct CheckArgs {
    /// Model JSON (a CNN file with --cnn).
    model: PathBuf,
    #[arg(long)]
    cnn: bool,
}

#[derive(Args)]
struct ConvertArgs {
    /// CNN JSON, or a model JSON with --back.
    input: PathBuf,
    /// Convert a fully connected model back to a CNN shaped like --template.
    #[arg(long, requires = "template")]
    back: bool,
    #[arg(long)]
    template: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Print the planned runs and exit.
    #[arg(long)]
    dry_run: bool,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Delta,
    Task,
}

#[derive(Args)]
struct ReportArgs {
    csv: PathBuf,
    #[arg(long, value_enum, default_value = "delta")]
    metric: MetricArg,
}

/// Errors in how the tool was invoked rather than in the data.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<Usage>().is_some() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<wide_compress::Error>() {
            return if e.is_numeric() { 3 } else { 2 };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = exit_code(&e);
            if code == 1 {
                eprintln!("run `wcomp --help` for usage");
            }
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Train(a) => cmd_train(cli, a),
        Command::Compress(a) => cmd_compress(cli, a),
        Command::CheckBounds(a) => cmd_check(cli, a),
        Command::ConvertConv(a) => cmd_convert(cli, a),
        Command::Sweep(a) => cmd_sweep(cli, a),
        Command::Report(a) => cmd_report(cli, a),
    }
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text)
        .map_err(wide_compress::Error::from)
        .with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(wide_compress::Error::from)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `dir/stem.suffix` next to `path`.
fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn parse_activations(names: &[String]) -> Result<Vec<Activation>> {
    names
        .iter()
        .map(|n| n.parse::<Activation>().map_err(|e| usage(e.to_string())))
        .collect()
}

fn cmd_train(cli: &Cli, a: &TrainArgs) -> Result<()> {
    let mut job: TrainJob = match &cli.config {
        Some(p) => read_config(p)?,
        None => TrainJob::default(),
    };
    if let Some(d) = &a.data {
        job.data = Some(d.clone());
        job.synthetic_rows = None;
    }
    if !a.targets.is_empty() {
        job.targets = a.targets.clone();
    }
    if let Some(k) = a.kind {
        job.kind = k.into();
    }
    if let Some(n) = a.synthetic {
        job.synthetic_rows = Some(n);
        job.data = None;
    }
    if let Some(h) = &a.hidden {
        job.hidden = h.clone();
    }
    if let Some(acts) = &a.activations {
        job.activations = acts.clone();
    }
    if let Some(e) = a.epochs {
        job.train.epochs = e;
    }
    if let Some(lr) = a.lr {
        job.train.learning_rate = lr;
    }
    let seed = cli.seed.unwrap_or(job.train.seed);
    job.train.seed = derive_seed(seed, &[1]);
    job.train.loss = match job.kind {
        TaskKind::Regression => LossKind::Mse,
        TaskKind::Classification => LossKind::CrossEntropy,
    };

    let (raw, source) = match (&job.data, job.synthetic_rows) {
        (Some(path), _) => {
            if job.targets.is_empty() {
                return Err(usage("--targets is required with a CSV file"));
            }
            let t: Vec<&str> = job.targets.iter().map(String::as_str).collect();
            (load_csv(path, &t, job.kind)?, path.display().to_string())
        }
        (None, Some(n)) => {
            let (ds, _) = synthetic_teacher(8, 1, 16, n, 0.05, derive_seed(seed, &[2]))?;
            (ds, format!("synthetic teacher, {n} rows"))
        }
        (None, None) => return Err(usage("give a CSV file or --synthetic ROWS")),
    };
    let mut ds = raw;
    if job.split {
        ds = split_80_20(&ds, derive_seed(seed, &[3]))?;
    }
    if job.normalize {
        ds = normalize_unit_ball(&ds);
    }
    let out_dim = match ds.kind {
        TaskKind::Regression => ds.target_dim(),
        TaskKind::Classification => ds.num_classes(),
    };
    let mut dims = vec![ds.input_dim()];
    dims.extend(&job.hidden);
    dims.push(out_dim);
    let acts = parse_activations(&job.activations)?;
    if acts.len() != dims.len() - 1 {
        return Err(usage(format!(
            "{} layers need {} activations, got {}",
            dims.len() - 1,
            dims.len() - 1,
            acts.len()
        )));
    }
    let init = init_glorot(&dims, &acts, derive_seed(seed, &[4]))?;
    let outcome = train(init, &ds, &job.train)?;

    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("model.json"));
    save_model(&out, &outcome.model, None)?;
    let log_path = sidecar(&out, "train.csv");
    write_epoch_log(&outcome.log, fs::File::create(&log_path)?)?;
    write_csv(&ds, sidecar(&out, "data.csv"))?;
    write_manifest(&ds.manifest(Some(&source)), sidecar(&out, "data.json"))?;
    println!(
        "trained {:?} for {} epochs: train loss {:.6e}, test loss {}",
        dims,
        job.train.epochs,
        outcome.final_train_loss,
        outcome
            .final_test_loss
            .map(|l| format!("{l:.6e}"))
            .unwrap_or_else(|| "n/a".into())
    );
    println!("wrote {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct CompressSidecar<'a> {
    plan: &'a PlanTemplate,
    log: CompressionLog,
    sparsity: Vec<LayerSparsity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    filters: Option<Vec<FilterSparsity>>,
}

fn score_inputs(a: &CompressArgs, dim: usize, count: usize, seed: u64) -> Result<(Vec<Vec<f64>>, Option<Vec<Vec<f64>>>)> {
    match &a.data {
        Some(path) => {
            if a.targets.is_empty() {
                return Err(usage("--targets is required with --data"));
            }
            let t: Vec<&str> = a.targets.iter().map(String::as_str).collect();
            let ds: Dataset = load_csv(path, &t, TaskKind::Regression)?;
            if ds.input_dim() != dim {
                return Err(wide_compress::Error::DimensionMismatch {
                    context: "score batch inputs",
                    expected: dim,
                    found: ds.input_dim(),
                }
                .into());
            }
            let n = count.min(ds.len());
            let xs: Vec<Vec<f64>> = ds.x[..n].to_vec();
            if let Some(big) = xs.iter().map(|x| norm(x)).find(|v| *v > 1.0 + 1e-12) {
                log::warn!("score input with norm {big} lies outside the unit ball");
            }
            let ys = ds.y[..n].iter().map(|y| y.as_values()).collect();
            Ok((xs, Some(ys)))
        }
        None => {
            let mut rng = rng_from(derive_seed(seed, &[0x4241_5443]));
            Ok(((0..count).map(|_| uniform_in_ball(dim, &mut rng)).collect(), None))
        }
    }
}

fn cmd_compress(cli: &Cli, a: &CompressArgs) -> Result<()> {
    let mut tpl: PlanTemplate = match &cli.config {
        Some(p) => read_config(p)?,
        None => PlanTemplate::default(),
    };
    if let Some(w) = &a.wide {
        tpl.wide = w.clone();
    }
    if let Some(b) = &a.bottleneck {
        tpl.bottleneck = b.clone();
    }
    if let Some(p) = a.prune {
        tpl.mode = Mode::Prune { p };
    }
    if let Some(k) = a.quantize {
        tpl.mode = Mode::Quantize { k };
    }
    if let Some(al) = a.alpha {
        tpl.alpha = al;
    }
    if a.structured {
        tpl.structured = true;
    }
    if a.no_projection {
        tpl.use_projection = false;
    }
    let seed = cli.seed.unwrap_or(tpl.seed);
    tpl.seed = seed;
    let default_out = sidecar(&a.model, "compressed.json");
    let out = cli.out.clone().unwrap_or(default_out);

    if a.cnn {
        let cnn = load_cnn(&a.model)?;
        let (xs, labels) = score_inputs(a, cnn.input_len(), tpl.score_batch, seed)?;
        let depth = cnn.layers().len() + usize::from(cnn.head().is_some());
        let mut plan = tpl.instantiate(depth, xs, seed)?;
        if tpl.score_against_labels {
            plan.score_labels = labels;
        }
        let (comp, pruned) = prune_cnn_structured(&cnn, &plan)?;
        save_cnn(&out, &pruned)?;
        let car = CompressSidecar {
            plan: &tpl,
            log: comp.log(),
            sparsity: sparsity_report(&comp.net),
            filters: Some(filter_sparsity(&pruned)),
        };
        write_json(&sidecar(&out, "log.json"), &car)?;
        for f in filter_sparsity(&pruned) {
            println!(
                "conv layer {}: {} of {} input filters and {} of {} output filters zeroed",
                f.layer, f.zero_input_filters.len(), f.d_in, f.zero_output_filters.len(), f.d_out
            );
        }
    } else {
        let (net, _) = load_model(&a.model)?;
        let (xs, labels) = score_inputs(a, net.input_dim(), tpl.score_batch, seed)?;
        let mut plan = tpl.instantiate(net.depth(), xs, seed)?;
        if tpl.score_against_labels {
            plan.score_labels = labels;
        }
        let comp = compress_network(&net, &plan)?;
        let kappa = comp.use_projection.then_some(comp.kappa.as_slice());
        save_model(&out, &comp.net, kappa)?;
        let sparsity = sparsity_report(&comp.net);
        for s in &sparsity {
            println!("layer {}: {} of {} weights nonzero ({:.4})", s.layer, s.nnz, s.total, s.nnz_fraction);
        }
        let car = CompressSidecar {
            plan: &tpl,
            log: comp.log(),
            sparsity,
            filters: None,
        };
        write_json(&sidecar(&out, "log.json"), &car)?;
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn cmd_check(cli: &Cli, a: &CheckArgs) -> Result<()> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| usage("check-bounds needs --config with the bound inputs"))?;
    let inputs: BoundInputs = read_config(path)?;
    let report = if a.cnn {
        cnn_bound_report(&load_cnn(&a.model)?, &inputs)?
    } else {
        bound_report(&load_model(&a.model)?.0, &inputs)?
    };
    print!("{}", report.to_table());
    if let Some(out) = &cli.out {
        write_json(out, &report)?;
    }
    Ok(())
}

fn cmd_convert(cli: &Cli, a: &ConvertArgs) -> Result<()> {
    if a.back {
        let template = load_cnn(a.template.as_ref().expect("clap enforces --template"))?;
        let (net, _) = load_model(&a.input)?;
        let cnn = mlp_to_cnn(&template, &net)?;
        let out = cli.out.clone().unwrap_or_else(|| sidecar(&a.input, "cnn.json"));
        save_cnn(&out, &cnn)?;
        println!("wrote {}", out.display());
    } else {
        let cnn = load_cnn(&a.input)?;
        let net = cnn_to_mlp(&cnn)?;
        let out = cli.out.clone().unwrap_or_else(|| sidecar(&a.input, "mlp.json"));
        save_model(&out, &net, None)?;
        println!("{:?} -> fully connected {:?}", cnn.channel_dims(), net.dims());
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli, a: &SweepArgs) -> Result<()> {
    let mut cfg: SweepConfig = match &cli.config {
        Some(p) => read_config(p)?,
        None => SweepConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if a.workers.is_some() {
        cfg.workers = a.workers;
    }
    if let Some(o) = &cli.out {
        cfg.output = Some(o.clone());
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    if a.dry_run {
        let runs = plan_runs(&cfg)?;
        let mut so = std::io::stdout().lock();
        writeln!(so, "setting,width,trial,prune_rep,seed")?;
        for r in &runs {
            writeln!(so, "{},{},{},{},{}", r.setting, r.width, r.trial, r.prune_rep, r.seed)?;
        }
        eprintln!(
            "{} runs over {} trained networks (dry run, nothing executed)",
            runs.len(),
            cfg.widths.len() * cfg.trials_per_width
        );
        return Ok(());
    }
    let rows = run_width_sweep(&cfg)?;
    match &cfg.output {
        Some(path) => {
            let f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
            write_sweep_csv(&rows, f)?;
            eprintln!("wrote {} rows to {}", rows.len(), path.display());
        }
        None => write_sweep_csv(&rows, std::io::stdout().lock())?,
    }
    eprint!("{}", summary_table(&summarize(&rows)));
    Ok(())
}

#[derive(Serialize)]
struct ReportFile {
    summary: Vec<wide_compress::harness::WidthSummary>,
    trends: Vec<wide_compress::harness::Trend>,
}

fn cmd_report(cli: &Cli, a: &ReportArgs) -> Result<()> {
    let f = fs::File::open(&a.csv).with_context(|| format!("reading {}", a.csv.display()))?;
    let rows = read_sweep_csv(f)?;
    let summary = summarize(&rows);
    print!("{}", summary_table(&summary));
    let metric = match a.metric {
        MetricArg::Delta => Metric::Delta,
        MetricArg::Task => Metric::Task,
    };
    let distinct_widths = summary.iter().map(|s| s.width).collect::<std::collections::BTreeSet<_>>().len();
    let tr = if distinct_widths >= 2 { trends(&summary, metric)? } else { Vec::new() };
    for t in &tr {
        println!(
            "{}: spearman(width, mean) = {:.4}, largest/smallest width ratio = {:.4}",
            t.setting, t.spearman, t.last_over_first
        );
    }
    if let Some(out) = &cli.out {
        write_json(out, &ReportFile { summary, trends: tr })?;
    }
    Ok(())
}
