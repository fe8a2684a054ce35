//! Width sweeps: train dense networks of growing width, compress each one
//! repeatedly, and record the output distance and task metric per run.
//!
//! Every random draw in a sweep is a function of the master seed and the
//! coordinates of the cell, so a replay reproduces the CSV byte for byte
//! regardless of how many workers ran it.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::compress::{compress_network, CompressedNetwork, Mode, PlanTemplate, Rescore};
use crate::data::{load_csv, normalize_unit_ball, split_80_20, synthetic_teacher, Dataset, TaskKind};
use crate::error::{Error, Result};
use crate::linalg::sq_dist;
use crate::mlp::Mlp;
use crate::rng::{cell_seed, derive_seed};
use crate::train::{init_glorot, train, LossKind, TrainConfig};

/// Fixed CSV header of a sweep.
pub const CSV_HEADER: [&str; 10] = [
    "setting",
    "width",
    "trial",
    "prune_rep",
    "delta",
    "task_metric",
    "nnz_fraction",
    "seed",
    "dense_task_metric",
    "status",
];

/// `c^{−2m}` times the mean squared output distance over `inputs`, with `c`
/// the largest spectral norm of the dense layers.
pub fn delta_metric(dense: &Mlp, compressed: &CompressedNetwork, inputs: &[Vec<f64>]) -> Result<f64> {
    let c = dense
        .layers()
        .iter()
        .map(|l| l.weights.spectral_norm())
        .fold(0.0, f64::max);
    delta_metric_with_c(dense, compressed, inputs, c)
}

/// [`delta_metric`] with a precomputed `c`.
pub fn delta_metric_with_c(
    dense: &Mlp,
    compressed: &CompressedNetwork,
    inputs: &[Vec<f64>],
    c: f64,
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("the normalizing constant must be positive, got {c}")));
    }
    let mut total = 0.0;
    for x in inputs {
        let a = dense.output(x)?;
        let b = compressed.output(x)?;
        total += sq_dist(&a, &b);
    }
    let m = dense.depth() as i32;
    Ok(total / inputs.len() as f64 / c.powi(2 * m))
}

/// `1 − SS_res/SS_tot`, pooled over output coordinates.
pub fn r_squared(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if pred.len() != target.len() {
        return Err(Error::DimensionMismatch {
            context: "predictions per target",
            expected: target.len(),
            found: pred.len(),
        });
    }
    let d = target[0].len();
    let mut mean = vec![0.0; d];
    for t in target {
        for (m, v) in mean.iter_mut().zip(t) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= target.len() as f64;
    }
    let ss_res: f64 = pred.iter().zip(target).map(|(p, t)| sq_dist(p, t)).sum();
    let ss_tot: f64 = target.iter().map(|t| sq_dist(t, &mean)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Fraction of rows whose largest output sits at the labelled class.
pub fn accuracy(pred: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let hits = pred
        .iter()
        .zip(labels)
        .filter(|(p, l)| argmax(p) == **l)
        .count();
    Ok(hits as f64 / pred.len() as f64)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// R² for regression, accuracy for classification, over the rows `idx`.
pub fn task_metric<F>(predict: F, ds: &Dataset, idx: &[usize]) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let pred: Vec<Vec<f64>> = idx.iter().map(|i| predict(&ds.x[*i])).collect::<Result<_>>()?;
    match ds.kind {
        TaskKind::Regression => {
            let t: Vec<Vec<f64>> = idx.iter().map(|i| ds.y[*i].as_values()).collect();
            r_squared(&pred, &t)
        }
        TaskKind::Classification => {
            let l: Vec<usize> = idx.iter().map(|i| ds.y[*i].class_index(*i)).collect::<Result<_>>()?;
            accuracy(&pred, &l)
        }
    }
}

/// Spearman rank correlation, with tied values sharing their mean rank.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            context: "spearman samples",
            expected: a.len(),
            found: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::invalid("spearman needs at least two points"));
    }
    let ra = ranks(a);
    let rb = ranks(b);
    Ok(pearson(&ra, &rb))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|i, j| v[*i].total_cmp(&v[*j]));
    let mut out = vec![0.0; v.len()];
    let mut s = 0;
    while s < idx.len() {
        let mut e = s + 1;
        while e < idx.len() && v[idx[e]] == v[idx[s]] {
            e += 1;
        }
        let r = (s + e - 1) as f64 / 2.0 + 1.0;
        for k in &idx[s..e] {
            out[*k] = r;
        }
        s = e;
    }
    out
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
    cov / (va * vb).sqrt()
}

/// Where sweep data comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// A random one-hidden-layer tanh teacher with Gaussian label noise.
    Synthetic {
        dim_in: usize,
        dim_out: usize,
        teacher_width: usize,
        rows: usize,
        noise_sigma: f64,
    },
    Csv {
        path: PathBuf,
        targets: Vec<String>,
        kind: TaskKind,
    },
}

impl Default for DataSource {
    fn default() -> Self {
        DataSource::Synthetic {
            dim_in: 8,
            dim_out: 1,
            teacher_width: 16,
            rows: 2000,
            noise_sigma: 0.05,
        }
    }
}

/// A named compression setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub name: String,
    pub plan: PlanTemplate,
}

fn default_setting(name: &str, wide: Vec<usize>, bottleneck: Vec<usize>) -> Setting {
    Setting {
        name: name.to_string(),
        plan: PlanTemplate {
            wide,
            bottleneck,
            mode: Mode::Prune { p: 0.3 },
            alpha: 0.9,
            score_batch: 64,
            rescore_every: Rescore::Auto,
            use_projection: false,
            ..PlanTemplate::default()
        },
    }
}

/// Which column drives the trend summary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Delta,
    Task,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub widths: Vec<usize>,
    pub trials_per_width: usize,
    pub prunes_per_trial: usize,
    /// Hidden layers after the swept one.
    pub fixed_hidden: Vec<usize>,
    /// One activation per layer.
    pub activations: Vec<String>,
    pub settings: Vec<Setting>,
    pub data: DataSource,
    pub train: TrainConfig,
    pub metric: Metric,
    pub master_seed: u64,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            widths: vec![32, 64, 128, 256, 512],
            trials_per_width: 3,
            prunes_per_trial: 50,
            fixed_hidden: vec![40],
            activations: vec!["relu".into(), "relu".into(), "identity".into()],
            settings: vec![
                default_setting("wide_first", vec![1], vec![]),
                default_setting("bottleneck_second", vec![], vec![2]),
            ],
            data: DataSource::default(),
            train: TrainConfig {
                epochs: 40,
                learning_rate: 3e-3,
                ..TrainConfig::default()
            },
            metric: Metric::Delta,
            master_seed: 0,
            workers: None,
            output: None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.widths.is_empty() {
            return Err(Error::invalid("widths must not be empty"));
        }
        if self.widths.windows(2).any(|w| w[0] >= w[1]) || self.widths[0] == 0 {
            return Err(Error::invalid("widths must be positive and strictly increasing"));
        }
        if self.trials_per_width == 0 || self.prunes_per_trial == 0 {
            return Err(Error::invalid("trials_per_width and prunes_per_trial must be at least 1"));
        }
        if self.settings.is_empty() {
            return Err(Error::invalid("at least one setting is required"));
        }
        if self.activations.len() != self.fixed_hidden.len() + 2 {
            return Err(Error::invalid(format!(
                "{} layers need {} activations, got {}",
                self.fixed_hidden.len() + 2,
                self.fixed_hidden.len() + 2,
                self.activations.len()
            )));
        }
        self.parsed_activations()?;
        self.train.validate()?;
        if self.workers == Some(0) {
            return Err(Error::invalid("workers must be at least 1"));
        }
        let depth = self.fixed_hidden.len() + 2;
        for s in &self.settings {
            s.plan.instantiate(depth, Vec::new(), 0)?;
        }
        Ok(())
    }

    fn parsed_activations(&self) -> Result<Vec<Activation>> {
        self.activations.iter().map(|a| a.parse()).collect()
    }

    /// `[n_in, w, fixed…, n_out]`.
    pub fn dims(&self, width: usize, n_in: usize, n_out: usize) -> Vec<usize> {
        let mut d = vec![n_in, width];
        d.extend(&self.fixed_hidden);
        d.push(n_out);
        d
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut s = String::new();
        std::fs::File::open(path)?.read_to_string(&mut s)?;
        let cfg: SweepConfig = serde_json::from_str(&s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One compression run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub setting: String,
    pub width: usize,
    pub trial: usize,
    pub prune_rep: usize,
    pub delta: f64,
    pub task_metric: f64,
    pub nnz_fraction: f64,
    pub seed: u64,
    pub dense_task_metric: f64,
    pub status: String,
}

/// A run the sweep would perform, for dry runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedRun {
    pub setting: String,
    pub width: usize,
    pub trial: usize,
    pub prune_rep: usize,
    pub seed: u64,
}

const DATA_TAG: u64 = 0x4441_5441;
const INIT_TAG: u64 = 0x494E_4954;
const TRAIN_TAG: u64 = 0x5452_4149;

fn setting_seed(master: u64, setting: usize) -> u64 {
    derive_seed(master, &[0x5345_5454, setting as u64])
}

/// Enumerates the runs in output order without executing anything.
pub fn plan_runs(cfg: &SweepConfig) -> Result<Vec<PlannedRun>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for (si, s) in cfg.settings.iter().enumerate() {
        for &width in &cfg.widths {
            for trial in 0..cfg.trials_per_width {
                for rep in 0..cfg.prunes_per_trial {
                    out.push(PlannedRun {
                        setting: s.name.clone(),
                        width,
                        trial,
                        prune_rep: rep,
                        seed: cell_seed(setting_seed(cfg.master_seed, si), width, trial, rep),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Loads or generates the sweep data, split 80/20 and scaled into the unit ball.
pub fn sweep_dataset(cfg: &SweepConfig) -> Result<Dataset> {
    let seed = derive_seed(cfg.master_seed, &[DATA_TAG]);
    let raw = match &cfg.data {
        DataSource::Synthetic {
            dim_in,
            dim_out,
            teacher_width,
            rows,
            noise_sigma,
        } => synthetic_teacher(*dim_in, *dim_out, *teacher_width, *rows, *noise_sigma, seed)?.0,
        DataSource::Csv { path, targets, kind } => {
            let t: Vec<&str> = targets.iter().map(String::as_str).collect();
            load_csv(path, &t, *kind)?
        }
    };
    Ok(normalize_unit_ball(&split_80_20(&raw, seed)?))
}

struct TrainedNet {
    width: usize,
    trial: usize,
    outcome: std::result::Result<(Mlp, f64, f64), String>,
}

fn train_one(cfg: &SweepConfig, ds: &Dataset, width: usize, trial: usize) -> Result<TrainedNet> {
    let out_dim = match ds.kind {
        TaskKind::Regression => ds.target_dim(),
        TaskKind::Classification => ds.num_classes(),
    };
    let dims = cfg.dims(width, ds.input_dim(), out_dim);
    let acts = cfg.parsed_activations()?;
    let init = init_glorot(&dims, &acts, derive_seed(cfg.master_seed, &[INIT_TAG, width as u64, trial as u64]))?;
    let tc = TrainConfig {
        seed: derive_seed(cfg.master_seed, &[TRAIN_TAG, width as u64, trial as u64]),
        loss: default_loss(ds.kind),
        ..cfg.train.clone()
    };
    let outcome = match train(init, ds, &tc) {
        Ok(o) => {
            let net = o.model;
            let c = net.layers().iter().map(|l| l.weights.spectral_norm()).fold(0.0, f64::max);
            let dense = task_metric(|x| net.output(x), ds, &ds.test_indices())?;
            Ok((net, c, dense))
        }
        Err(e) if e.is_numeric() => {
            log::warn!("width {width} trial {trial}: {e}");
            Err(e.to_string())
        }
        Err(e) => return Err(e),
    };
    Ok(TrainedNet { width, trial, outcome })
}

/// Survivor count is `N − s + Binomial(s, p)` for `s` greedy steps over `N`
/// entries; flags runs more than 3σ from the mean.
fn sparsity_status(mode: Mode, structured: bool, comp: &CompressedNetwork, fraction: f64, total: usize) -> &'static str {
    let p = match mode {
        Mode::Prune { p } if !structured => p,
        _ => return "ok",
    };
    let steps: usize = comp.logs.iter().map(|l| l.steps).sum();
    let n = total as f64;
    let s = steps as f64;
    let mean = (n - s + s * p) / n;
    let sd = (s * p * (1.0 - p)).sqrt() / n;
    if (fraction - mean).abs() > 3.0 * sd + 1e-12 {
        "sparsity_outlier"
    } else {
        "ok"
    }
}

fn compress_one(
    cfg: &SweepConfig,
    ds: &Dataset,
    trained: &TrainedNet,
    si: usize,
    rep: usize,
) -> Result<SweepRow> {
    let setting = &cfg.settings[si];
    let seed = cell_seed(setting_seed(cfg.master_seed, si), trained.width, trained.trial, rep);
    let mut row = SweepRow {
        setting: setting.name.clone(),
        width: trained.width,
        trial: trained.trial,
        prune_rep: rep,
        delta: f64::NAN,
        task_metric: f64::NAN,
        nnz_fraction: f64::NAN,
        seed,
        dense_task_metric: f64::NAN,
        status: String::new(),
    };
    let (net, c, dense_metric) = match &trained.outcome {
        Ok(t) => t,
        Err(_) => {
            row.status = "diverged".into();
            return Ok(row);
        }
    };
    row.dense_task_metric = *dense_metric;
    let train_idx = ds.train_indices();
    let take: Vec<usize> = train_idx.iter().copied().take(setting.plan.score_batch.max(1)).collect();
    let mut plan = setting.plan.instantiate(net.depth(), ds.inputs(&take), seed)?;
    if setting.plan.score_against_labels {
        plan.score_labels = Some(take.iter().map(|i| ds.y[*i].as_values()).collect());
    }
    let comp = compress_network(net, &plan)?;
    let test = ds.inputs(&ds.test_indices());
    row.delta = delta_metric_with_c(net, &comp, &test, *c)?;
    row.task_metric = task_metric(|x| comp.output(x), ds, &ds.test_indices())?;
    let targeted: Vec<usize> = comp.logs.iter().map(|l| l.layer - 1).collect();
    let total: usize = targeted.iter().map(|l| comp.net.weights(*l).len()).sum();
    let nnz: usize = targeted.iter().map(|l| comp.net.weights(*l).nnz()).sum();
    row.nnz_fraction = if total == 0 { f64::NAN } else { nnz as f64 / total as f64 };
    row.status = sparsity_status(plan.mode, plan.structured, &comp, row.nnz_fraction, total).into();
    Ok(row)
}

/// Runs the whole sweep and returns rows in `(setting, width, trial, rep)`
/// order.
pub fn run_width_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let ds = sweep_dataset(cfg)?;
    if ds.test_indices().is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| Error::invalid(e.to_string()))?;
    pool.install(|| {
        let cells: Vec<(usize, usize)> = cfg
            .widths
            .iter()
            .flat_map(|w| (0..cfg.trials_per_width).map(move |t| (*w, t)))
            .collect();
        let trained: Vec<TrainedNet> = cells
            .par_iter()
            .map(|(w, t)| train_one(cfg, &ds, *w, *t))
            .collect::<Result<_>>()?;
        let jobs: Vec<(usize, usize, usize)> = (0..cfg.settings.len())
            .flat_map(|s| {
                (0..trained.len()).flat_map(move |n| (0..cfg.prunes_per_trial).map(move |r| (s, n, r)))
            })
            .collect();
        jobs.par_iter()
            .map(|(s, n, r)| compress_one(cfg, &ds, &trained[*n], *s, *r))
            .collect()
    })
}

/// Writes rows under [`CSV_HEADER`].
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(Error::Malformed {
            row: 0,
            col: 0,
            msg: format!("unexpected sweep header {header:?}"),
        });
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Mean ± 2·stderr over the runs of one `(setting, width)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthSummary {
    pub setting: String,
    pub width: usize,
    pub runs: usize,
    pub diverged: usize,
    pub mean_delta: f64,
    pub delta_ci: f64,
    /// Smallest `Δ` among the runs.
    pub best_delta: f64,
    pub mean_task_metric: f64,
    pub task_metric_ci: f64,
    pub mean_nnz_fraction: f64,
}

fn mean_ci(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, 2.0 * (var / n).sqrt())
}

/// Groups rows by setting (first appearance order) and width.
pub fn summarize(rows: &[SweepRow]) -> Vec<WidthSummary> {
    let mut keys: Vec<(String, usize)> = Vec::new();
    for r in rows {
        let k = (r.setting.clone(), r.width);
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    keys.into_iter()
        .map(|(setting, width)| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.setting == setting && r.width == width).collect();
            let ok: Vec<&&SweepRow> = group.iter().filter(|r| r.status != "diverged").collect();
            let d: Vec<f64> = ok.iter().map(|r| r.delta).collect();
            let t: Vec<f64> = ok.iter().map(|r| r.task_metric).collect();
            let z: Vec<f64> = ok.iter().map(|r| r.nnz_fraction).collect();
            let (mean_delta, delta_ci) = mean_ci(&d);
            let (mean_task_metric, task_metric_ci) = mean_ci(&t);
            WidthSummary {
                setting,
                width,
                runs: ok.len(),
                diverged: group.len() - ok.len(),
                mean_delta,
                delta_ci,
                best_delta: d.iter().copied().fold(f64::INFINITY, f64::min),
                mean_task_metric,
                task_metric_ci,
                mean_nnz_fraction: mean_ci(&z).0,
            }
        })
        .collect()
}

/// Width trend of one setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub setting: String,
    /// Spearman correlation of width against the chosen mean metric.
    pub spearman: f64,
    /// Mean metric at the largest width over that at the smallest.
    pub last_over_first: f64,
}

pub fn trends(summary: &[WidthSummary], metric: Metric) -> Result<Vec<Trend>> {
    let mut names: Vec<&str> = Vec::new();
    for s in summary {
        if !names.contains(&s.setting.as_str()) {
            names.push(&s.setting);
        }
    }
    names
        .into_iter()
        .map(|name| {
            let mut g: Vec<&WidthSummary> = summary.iter().filter(|s| s.setting == name).collect();
            g.sort_by_key(|s| s.width);
            let w: Vec<f64> = g.iter().map(|s| s.width as f64).collect();
            let v: Vec<f64> = g
                .iter()
                .map(|s| match metric {
                    Metric::Delta => s.mean_delta,
                    Metric::Task => s.mean_task_metric,
                })
                .collect();
            Ok(Trend {
                setting: name.to_string(),
                spearman: spearman(&w, &v)?,
                last_over_first: v[v.len() - 1] / v[0],
            })
        })
        .collect()
}

/// Plain-text summary table.
pub fn summary_table(summary: &[WidthSummary]) -> String {
    use std::fmt::Write as _;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<20} {:>6} {:>5} {:>24} {:>12} {:>24} {:>8}",
        "setting", "width", "runs", "delta (mean ± 2se)", "best delta", "task (mean ± 2se)", "nnz"
    );
    for r in summary {
        let _ = writeln!(
            s,
            "{:<20} {:>6} {:>5} {:>11.4e} ± {:<10.3e} {:>12.4e} {:>11.4} ± {:<10.4} {:>8.4}",
            r.setting,
            r.width,
            r.runs,
            r.mean_delta,
            r.delta_ci,
            r.best_delta,
            r.mean_task_metric,
            r.task_metric_ci,
            r.mean_nnz_fraction
        );
    }
    s
}

/// Sweeps train with MSE on regression data and cross-entropy on labels,
/// whatever the config says.
pub fn default_loss(kind: TaskKind) -> LossKind {
    match kind {
        TaskKind::Regression => LossKind::Mse,
        TaskKind::Classification => LossKind::CrossEntropy,
    }
}
