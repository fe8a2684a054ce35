//! Reverse-mode gradients and a plain Adam loop.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::data::{Dataset, Target};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mlp::{Layer, Mlp};
use crate::rng::{derive_seed, rng_from};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Mean over the batch of `‖Φ(x) − y‖²`.
    Mse,
    /// Softmax cross-entropy on the final (linear) output.
    CrossEntropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub loss: LossKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            learning_rate: 1e-3,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            loss: LossKind::Mse,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.adam_beta1 > 0.0 && self.adam_beta1 < 1.0)
            || !(self.adam_beta2 > 0.0 && self.adam_beta2 < 1.0)
        {
            return Err(Error::invalid("Adam betas must lie in (0, 1)"));
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::invalid("Adam eps must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        Ok(())
    }
}

/// Per-sample loss and its gradient with respect to the network output.
pub fn output_loss(out: &[f64], y: &Target, kind: LossKind, row: usize) -> Result<(f64, Vec<f64>)> {
    match kind {
        LossKind::Mse => {
            let y = match y {
                Target::Values(v) => v,
                Target::Class(_) => {
                    return Err(Error::invalid("squared loss needs vector targets"));
                }
            };
            if y.len() != out.len() {
                return Err(Error::DimensionMismatch {
                    context: "target dimension",
                    expected: out.len(),
                    found: y.len(),
                });
            }
            let diff: Vec<f64> = out.iter().zip(y).map(|(o, t)| o - t).collect();
            let loss = diff.iter().map(|d| d * d).sum();
            Ok((loss, diff.iter().map(|d| 2.0 * d).collect()))
        }
        LossKind::CrossEntropy => {
            let class = y.class_index(row)?;
            if class >= out.len() {
                return Err(Error::NonIntegerTarget { row });
            }
            let max = out.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
            let exps: Vec<f64> = out.iter().map(|o| (o - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            let loss = max + sum.ln() - out[class];
            let mut grad: Vec<f64> = exps.iter().map(|e| e / sum).collect();
            grad[class] -= 1.0;
            Ok((loss, grad))
        }
    }
}

/// A model that exposes flat parameter blocks and their gradients.
pub trait Trainable: Clone {
    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]>;

    fn param_sizes(&self) -> Vec<usize>;

    /// Mean loss over the batch and one gradient block per parameter block.
    fn batch_loss_and_grads(
        &self,
        xs: &[&[f64]],
        ys: &[&Target],
        kind: LossKind,
    ) -> Result<(f64, Vec<Vec<f64>>)>;

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl Trainable for Mlp {
    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let m = self.depth();
        let mut out = Vec::with_capacity(m);
        let mut rest: &mut [Layer] = self.layers_mut();
        while let Some((first, tail)) = rest.split_first_mut() {
            out.push(first.weights.data_mut());
            rest = tail;
        }
        out
    }

    fn param_sizes(&self) -> Vec<usize> {
        self.layers().iter().map(|l| l.weights.len()).collect()
    }

    fn batch_loss_and_grads(
        &self,
        xs: &[&[f64]],
        ys: &[&Target],
        kind: LossKind,
    ) -> Result<(f64, Vec<Vec<f64>>)> {
        let (loss, grads) = mlp_loss_and_grads(self, xs, ys, kind)?;
        Ok((loss, grads.into_iter().map(Matrix::into_data).collect()))
    }

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.output(x)
    }
}

/// Mean loss over `(xs, ys)` and `∂loss/∂W_ℓ` for every layer.
///
/// ```
/// use wide_compress::prelude::*;
/// use wide_compress::data::Target;
/// use wide_compress::train::loss_and_grads;
///
/// let net = Mlp::from_parts(vec![Matrix::zeros(2, 1)], vec![Activation::Identity]).unwrap();
/// let (loss, g) = loss_and_grads(&net, &[vec![1.0]], &[Target::Values(vec![1.0, -1.0])], LossKind::Mse).unwrap();
/// assert_eq!(loss, 2.0);
/// assert_eq!(g[0].data(), &[-2.0, 2.0]);
/// ```
pub fn loss_and_grads(
    net: &Mlp,
    xs: &[Vec<f64>],
    ys: &[Target],
    kind: LossKind,
) -> Result<(f64, Vec<Matrix>)> {
    let xr: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
    let yr: Vec<&Target> = ys.iter().collect();
    mlp_loss_and_grads(net, &xr, &yr, kind)
}

fn mlp_loss_and_grads(
    net: &Mlp,
    xs: &[&[f64]],
    ys: &[&Target],
    kind: LossKind,
) -> Result<(f64, Vec<Matrix>)> {
    if xs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            context: "targets per input",
            expected: xs.len(),
            found: ys.len(),
        });
    }
    let m = net.depth();
    let mut grads: Vec<Matrix> = net
        .layers()
        .iter()
        .map(|l| Matrix::zeros(l.weights.rows(), l.weights.cols()))
        .collect();
    let mut total = 0.0;
    for (row, (x, y)) in xs.iter().zip(ys).enumerate() {
        if x.len() != net.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: net.input_dim(),
                found: x.len(),
            });
        }
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(m);
        for layer in net.layers() {
            let input = post.last().map_or(*x, Vec::as_slice);
            let a = layer.weights.matvec_unchecked(input);
            let mut z = a.clone();
            layer.activation.apply_slice(&mut z);
            pre.push(a);
            post.push(z);
        }
        let (loss, mut delta) = output_loss(&post[m - 1], y, kind, row)?;
        total += loss;
        for l in (0..m).rev() {
            let layer = net.layer(l);
            let g: Vec<f64> = delta
                .iter()
                .zip(&pre[l])
                .map(|(d, a)| d * layer.activation.derivative(*a))
                .collect();
            let input = if l == 0 { *x } else { post[l - 1].as_slice() };
            let gw = &mut grads[l];
            let cols = gw.cols();
            for (i, gi) in g.iter().enumerate() {
                if *gi == 0.0 {
                    continue;
                }
                let row = &mut gw.data_mut()[i * cols..(i + 1) * cols];
                for (r, v) in row.iter_mut().zip(input) {
                    *r += gi * v;
                }
            }
            if l > 0 {
                delta = layer.weights.tmatvec_unchecked(&g);
            }
        }
    }
    let n = xs.len() as f64;
    for g in &mut grads {
        g.data_mut().iter_mut().for_each(|v| *v /= n);
    }
    Ok((total / n, grads))
}

/// Adam optimizer state over a fixed list of parameter blocks.
#[derive(Debug, Clone)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    lr: f64,
    step: i32,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(sizes: &[usize], cfg: &TrainConfig) -> Self {
        Adam {
            beta1: cfg.adam_beta1,
            beta2: cfg.adam_beta2,
            eps: cfg.adam_eps,
            lr: cfg.learning_rate,
            step: 0,
            first: sizes.iter().map(|n| vec![0.0; *n]).collect(),
            second: sizes.iter().map(|n| vec![0.0; *n]).collect(),
        }
    }

    pub fn step(&mut self, params: Vec<&mut [f64]>, grads: &[Vec<f64>]) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        for (b, (p, g)) in params.into_iter().zip(grads).enumerate() {
            let (m, v) = (&mut self.first[b], &mut self.second[b]);
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= self.lr * mh / (vh.sqrt() + self.eps);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub test_loss: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<M> {
    pub model: M,
    pub log: Vec<EpochLog>,
    pub final_train_loss: f64,
    pub final_test_loss: Option<f64>,
}

/// Mean loss of `model` over the rows `idx` of `data`.
pub fn dataset_loss<M: Trainable>(model: &M, data: &Dataset, idx: &[usize], kind: LossKind) -> Result<f64> {
    if idx.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    for &i in idx {
        let out = model.predict(&data.x[i])?;
        total += output_loss(&out, &data.y[i], kind, i)?.0;
    }
    Ok(total / idx.len() as f64)
}

/// Trains on `data.split.train` (all rows if unsplit) with minibatch Adam.
///
/// Shuffling is a full permutation per epoch drawn from a stream derived
/// from `cfg.seed`. A non-finite minibatch loss aborts with
/// [`Error::Divergence`].
pub fn train<M: Trainable>(model: M, data: &Dataset, cfg: &TrainConfig) -> Result<TrainOutcome<M>> {
    cfg.validate()?;
    let train_idx = data.train_indices();
    let test_idx = data.test_indices();
    if train_idx.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut model = model;
    let mut adam = Adam::new(&model.param_sizes(), cfg);
    let mut rng = rng_from(derive_seed(cfg.seed, &[0x5348_5546]));
    let mut order = train_idx.clone();
    let mut log = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut running = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = chunk.iter().map(|i| data.x[*i].as_slice()).collect();
            let ys: Vec<&Target> = chunk.iter().map(|i| &data.y[*i]).collect();
            let (loss, grads) = model.batch_loss_and_grads(&xs, &ys, cfg.loss)?;
            if !loss.is_finite() || grads.iter().flatten().any(|g| !g.is_finite()) {
                return Err(Error::Divergence { epoch, loss });
            }
            running += loss * chunk.len() as f64;
            adam.step(model.param_blocks_mut(), &grads);
        }
        let train_loss = running / order.len() as f64;
        let test_loss = if test_idx.is_empty() {
            None
        } else {
            Some(dataset_loss(&model, data, &test_idx, cfg.loss)?)
        };
        if test_loss.is_some_and(|l| !l.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                loss: test_loss.unwrap_or(f64::NAN),
            });
        }
        log::debug!("epoch {epoch}: train {train_loss:.6e} test {test_loss:?}");
        log.push(EpochLog {
            epoch,
            train_loss,
            test_loss,
        });
    }
    let final_train_loss = dataset_loss(&model, data, &train_idx, cfg.loss)?;
    if !final_train_loss.is_finite() {
        return Err(Error::Divergence {
            epoch: cfg.epochs,
            loss: final_train_loss,
        });
    }
    let final_test_loss = if test_idx.is_empty() {
        None
    } else {
        Some(dataset_loss(&model, data, &test_idx, cfg.loss)?)
    };
    Ok(TrainOutcome {
        model,
        log,
        final_train_loss,
        final_test_loss,
    })
}

/// Writes the per-epoch log as `epoch,train_loss,test_loss`.
pub fn write_epoch_log<W: std::io::Write>(log: &[EpochLog], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "train_loss", "test_loss"])?;
    for e in log {
        w.write_record([
            e.epoch.to_string(),
            e.train_loss.to_string(),
            e.test_loss.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Glorot-uniform weights: each entry uniform on `±√6/√(n_ℓ + n_{ℓ+1})`.
pub fn init_glorot(dims: &[usize], activations: &[Activation], seed: u64) -> Result<Mlp> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::invalid("dims need at least two positive entries"));
    }
    let mut rng = rng_from(derive_seed(seed, &[0x474C_4F52]));
    let weights = dims
        .windows(2)
        .map(|d| {
            let (n_in, n_out) = (d[0], d[1]);
            let bound = glorot_bound(n_in, n_out);
            let data = (0..n_in * n_out)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            Matrix::new(n_out, n_in, data)
        })
        .collect::<Result<Vec<_>>>()?;
    Mlp::from_parts(weights, activations.to_vec())
}

pub fn glorot_bound(n_in: usize, n_out: usize) -> f64 {
    6f64.sqrt() / ((n_in + n_out) as f64).sqrt()
}
