//! Exact two-point scores.
//!
//! `D(v)` is the batch mean of `‖target − output_d‖²` with one site set to
//! `v`, where `output_d` is the working network's (unprojected) output at the
//! compared depth. With `t` taking `v₀` or `v₁` (probability `p₁`) the score
//! is `|(1−p₁)·D(v₀) + p₁·D(v₁) − D(current)|`, evaluated without sampling.
//!
//! Each per-sample difference is accumulated as `−2·e·Δy + Δy²` with
//! `e = target − y`, which avoids subtracting two nearly equal squared norms.

use std::ops::Range;

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::linalg::{project_ball_in_place, Matrix};
use crate::mlp::Mlp;

/// Cached dense outputs `z^0 = x, z^1, …, z^m` for every batch input.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOutputs {
    /// `outputs[d][s]` is `z^d` for sample `s`.
    outputs: Vec<Vec<Vec<f64>>>,
}

impl ReferenceOutputs {
    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.outputs[0]
    }

    /// Outputs at depth `d` (0 gives the inputs).
    pub fn depth(&self, d: usize) -> &[Vec<f64>] {
        &self.outputs[d]
    }

    pub fn max_depth(&self) -> usize {
        self.outputs.len() - 1
    }

    pub fn batch_len(&self) -> usize {
        self.outputs[0].len()
    }
}

/// Runs the dense network once over the batch and keeps every depth.
pub fn reference_outputs(dense: &Mlp, batch: &[Vec<f64>]) -> Result<ReferenceOutputs> {
    let mut outputs = vec![Vec::with_capacity(batch.len()); dense.depth() + 1];
    for x in batch {
        let zs = dense.forward(x)?;
        outputs[0].push(x.clone());
        for (d, z) in zs.into_iter().enumerate() {
            outputs[d + 1].push(z);
        }
    }
    Ok(ReferenceOutputs { outputs })
}

/// A compressible unit of a layer (zero-based indices within the layer).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Site {
    Weight { row: usize, col: usize },
    /// Columns `cols` scaled together by a gate.
    Columns(Range<usize>),
    /// Rows `rows` scaled together by a gate.
    Rows(Range<usize>),
}

/// `t = v₁` with probability `p₁`, `v₀` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPoint {
    pub v0: f64,
    pub v1: f64,
    pub p1: f64,
}

impl TwoPoint {
    pub fn mean(&self) -> f64 {
        (1.0 - self.p1) * self.v0 + self.p1 * self.v1
    }

    pub(crate) fn check_unbiased(&self, current: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p1) {
            return Err(Error::invalid(format!("probability {} outside [0, 1]", self.p1)));
        }
        let mean = self.mean();
        if (mean - current).abs() > 1e-12 * current.abs().max(1.0) {
            return Err(Error::NotUnbiased { mean, current });
        }
        Ok(())
    }
}

/// The working state a standalone score is computed from.
pub struct ScoreContext<'a> {
    pub net: &'a Mlp,
    pub reference: &'a ReferenceOutputs,
    /// Radii applied to upstream outputs, if projections are on.
    pub kappa: Option<&'a [Option<f64>]>,
    /// Final-layer targets replacing the dense outputs, if any.
    pub labels: Option<&'a [Vec<f64>]>,
}

/// Score of `site` in layer `layer` (1-based) compared at depth `depth`
/// (`layer ≤ depth ≤ m`).
///
/// For weight sites `dist` holds candidate weight values; for column and
/// row blocks it holds gate multipliers, whose current value is 1.
pub fn two_point_score(ctx: &ScoreContext<'_>, layer: usize, depth: usize, site: &Site, dist: TwoPoint) -> Result<f64> {
    let m = ctx.net.depth();
    if layer == 0 || layer > m || depth < layer || depth > m {
        return Err(Error::invalid(format!(
            "layer {layer} compared at depth {depth} is invalid for depth-{m} network"
        )));
    }
    if ctx.labels.is_some() && depth != m {
        return Err(Error::invalid("label targets live at the final depth"));
    }
    let li = layer - 1;
    let w = ctx.net.weights(li);
    let current = match site {
        Site::Weight { row, col } => {
            if *row >= w.rows() || *col >= w.cols() {
                return Err(Error::SiteOutOfRange {
                    index: row * w.cols() + col,
                    len: w.len(),
                });
            }
            w.get(*row, *col)
        }
        Site::Columns(r) => {
            if r.is_empty() || r.end > w.cols() {
                return Err(Error::SiteOutOfRange { index: r.end, len: w.cols() });
            }
            1.0
        }
        Site::Rows(r) => {
            if r.is_empty() || r.end > w.rows() {
                return Err(Error::SiteOutOfRange { index: r.end, len: w.rows() });
            }
            1.0
        }
    };
    dist.check_unbiased(current)?;
    let inputs = upstream_inputs(ctx.net, ctx.kappa, li, ctx.reference.inputs())?;
    let target = match ctx.labels {
        Some(l) => l.to_vec(),
        None => ctx.reference.depth(depth).to_vec(),
    };
    let mut scorer = LayerScorer::new(ctx.net, li, depth - 1, &inputs, target);
    scorer.refresh_downstream();
    let s = match site {
        Site::Weight { row, col } => scorer.weight_score(w, *row, *col, dist),
        Site::Columns(r) => scorer.columns_score(w, r.clone(), dist),
        Site::Rows(r) => scorer.rows_score(r.clone(), dist),
    };
    if !s.is_finite() {
        return Err(Error::NonFinite("score"));
    }
    Ok(s)
}

/// Outputs of the working layers before `li`, projected where radii exist.
pub(crate) fn upstream_inputs(
    net: &Mlp,
    kappa: Option<&[Option<f64>]>,
    li: usize,
    batch: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    batch
        .iter()
        .map(|x| {
            let mut z = x.clone();
            for l in 0..li {
                let layer = net.layer(l);
                z = layer.weights.matvec(&z)?;
                layer.activation.apply_slice(&mut z);
                if let Some(Some(k)) = kappa.map(|k| k[l]) {
                    project_ball_in_place(&mut z, k);
                }
            }
            Ok(z)
        })
        .collect()
}

enum Downstream {
    /// Compare the layer's own output.
    Own,
    /// Compare the next layer's output.
    Next {
        act: Activation,
        /// Columns of the next weight matrix: `cols[i][k] = W_next[k][i]`.
        cols: Vec<Vec<f64>>,
        w: Matrix,
        /// Per sample: pre-activation, output, residual.
        pre: Vec<Vec<f64>>,
        out: Vec<Vec<f64>>,
        err: Vec<Vec<f64>>,
    },
    /// Compare through several further layers.
    Deep {
        rest: Mlp,
        out: Vec<Vec<f64>>,
        err: Vec<Vec<f64>>,
    },
}

/// Cached activations of one layer over the score batch.
pub(crate) struct LayerScorer {
    act: Activation,
    batch: usize,
    /// `h[j][s]`: input coordinate `j` of sample `s`.
    h: Vec<Vec<f64>>,
    /// `a[i][s]`, `z[i][s]`: pre-activation and output of row `i`.
    a: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    /// Target at the compared depth, per sample.
    target: Vec<Vec<f64>>,
    /// Own-output residual `target − z`, `e[i][s]`.
    e: Vec<Vec<f64>>,
    down: Downstream,
}

fn transpose(rows: &[Vec<f64>], width: usize) -> Vec<Vec<f64>> {
    (0..width).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

#[inline]
fn contribution(err: f64, dy: f64) -> f64 {
    -2.0 * err * dy + dy * dy
}

impl LayerScorer {
    /// `li` is the compressed layer, `di ≥ li` the layer whose output is
    /// compared against `target` (both zero-based).
    pub(crate) fn new(net: &Mlp, li: usize, di: usize, inputs: &[Vec<f64>], target: Vec<Vec<f64>>) -> Self {
        let layer = net.layer(li);
        let w = &layer.weights;
        let batch = inputs.len();
        let h = transpose(inputs, w.cols());
        let down = if di == li {
            Downstream::Own
        } else if di == li + 1 {
            let next = net.layer(li + 1);
            Downstream::Next {
                act: next.activation,
                cols: (0..next.weights.cols()).map(|i| next.weights.column(i)).collect(),
                w: next.weights.clone(),
                pre: Vec::new(),
                out: Vec::new(),
                err: Vec::new(),
            }
        } else {
            Downstream::Deep {
                rest: Mlp::new(net.layers()[li + 1..=di].to_vec()).expect("valid tail"),
                out: Vec::new(),
                err: Vec::new(),
            }
        };
        let own = matches!(down, Downstream::Own);
        let mut s = LayerScorer {
            act: layer.activation,
            batch,
            h,
            a: vec![vec![0.0; batch]; w.rows()],
            z: vec![vec![0.0; batch]; w.rows()],
            e: if own { vec![vec![0.0; batch]; w.rows()] } else { Vec::new() },
            target,
            down,
        };
        s.recompute_all(w);
        s
    }

    pub(crate) fn recompute_all(&mut self, w: &Matrix) {
        for i in 0..w.rows() {
            self.recompute_row(w, i);
        }
    }

    /// Refreshes row `i` of the cached pre-activations after a write.
    pub(crate) fn recompute_row(&mut self, w: &Matrix, i: usize) {
        let row = w.row(i);
        for s in 0..self.batch {
            let mut acc = 0.0;
            for (wj, hj) in row.iter().zip(&self.h) {
                acc += wj * hj[s];
            }
            self.a[i][s] = acc;
            self.z[i][s] = self.act.apply(acc);
        }
        if matches!(self.down, Downstream::Own) {
            for s in 0..self.batch {
                self.e[i][s] = self.target[s][i] - self.z[i][s];
            }
        }
    }

    /// Recomputes everything past this layer from the cached outputs.
    pub(crate) fn refresh_downstream(&mut self) {
        let batch = self.batch;
        let outputs: Vec<Vec<f64>> = (0..batch)
            .map(|s| self.z.iter().map(|zi| zi[s]).collect())
            .collect();
        match &mut self.down {
            Downstream::Own => {}
            Downstream::Next { act, w, pre, out, err, .. } => {
                *pre = outputs.iter().map(|z| w.matvec_unchecked(z)).collect();
                *out = pre
                    .iter()
                    .map(|p| {
                        let mut y = p.clone();
                        act.apply_slice(&mut y);
                        y
                    })
                    .collect();
                *err = out
                    .iter()
                    .zip(&self.target)
                    .map(|(y, t)| t.iter().zip(y).map(|(a, b)| a - b).collect())
                    .collect();
            }
            Downstream::Deep { rest, out, err } => {
                *out = outputs.into_iter().map(|z| rest.output_from(0, z)).collect();
                *err = out
                    .iter()
                    .zip(&self.target)
                    .map(|(y, t)| t.iter().zip(y).map(|(a, b)| a - b).collect())
                    .collect();
            }
        }
    }

    #[inline]
    fn output_change(&self, i: usize, s: usize, da: f64) -> f64 {
        if self.act == Activation::Identity {
            da
        } else {
            self.act.apply(self.a[i][s] + da) - self.z[i][s]
        }
    }

    /// Discrepancy change of sample `s` when the layer outputs change by
    /// `dz` (pairs of row index and change).
    fn sample_change(&self, s: usize, dz: &[(usize, f64)]) -> f64 {
        match &self.down {
            Downstream::Own => dz.iter().map(|(i, d)| contribution(self.e[*i][s], *d)).sum(),
            Downstream::Next { act, cols, pre, out, err, .. } => {
                let mut db = vec![0.0; pre[s].len()];
                for (i, d) in dz {
                    for (b, c) in db.iter_mut().zip(&cols[*i]) {
                        *b += c * d;
                    }
                }
                let mut total = 0.0;
                for k in 0..db.len() {
                    let dy = if *act == Activation::Identity {
                        db[k]
                    } else {
                        act.apply(pre[s][k] + db[k]) - out[s][k]
                    };
                    total += contribution(err[s][k], dy);
                }
                total
            }
            Downstream::Deep { rest, out, err } => {
                let mut z: Vec<f64> = self.z.iter().map(|zi| zi[s]).collect();
                for (i, d) in dz {
                    z[*i] += d;
                }
                let y = rest.output_from(0, z);
                y.iter()
                    .zip(&out[s])
                    .zip(&err[s])
                    .map(|((yn, yo), e)| contribution(*e, yn - yo))
                    .sum()
            }
        }
    }

    /// Mean discrepancy change when weight `(i, j)` moves by `dw`.
    fn weight_change(&self, i: usize, j: usize, dw: f64) -> f64 {
        if dw == 0.0 {
            return 0.0;
        }
        let hj = &self.h[j];
        let mut total = 0.0;
        match &self.down {
            Downstream::Own => {
                let e = &self.e[i];
                for s in 0..self.batch {
                    let dz = self.output_change(i, s, dw * hj[s]);
                    total += contribution(e[s], dz);
                }
            }
            Downstream::Next { act, cols, pre, out, err, .. } => {
                let col = &cols[i];
                for s in 0..self.batch {
                    let dz = self.output_change(i, s, dw * hj[s]);
                    if dz == 0.0 {
                        continue;
                    }
                    for k in 0..col.len() {
                        let db = col[k] * dz;
                        let dy = if *act == Activation::Identity {
                            db
                        } else {
                            act.apply(pre[s][k] + db) - out[s][k]
                        };
                        total += contribution(err[s][k], dy);
                    }
                }
            }
            Downstream::Deep { .. } => {
                for s in 0..self.batch {
                    let dz = self.output_change(i, s, dw * hj[s]);
                    if dz != 0.0 {
                        total += self.sample_change(s, &[(i, dz)]);
                    }
                }
            }
        }
        total / self.batch as f64
    }

    pub(crate) fn weight_score(&self, w: &Matrix, i: usize, j: usize, dist: TwoPoint) -> f64 {
        let cur = w.get(i, j);
        let d0 = self.weight_change(i, j, dist.v0 - cur);
        let d1 = self.weight_change(i, j, dist.v1 - cur);
        ((1.0 - dist.p1) * d0 + dist.p1 * d1).abs()
    }

    /// Mean change when columns `cols` are scaled by `gate`.
    fn columns_change(&self, w: &Matrix, cols: Range<usize>, gate: f64) -> f64 {
        let g = gate - 1.0;
        if g == 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        let mut dz = Vec::with_capacity(w.rows());
        for s in 0..self.batch {
            dz.clear();
            for i in 0..w.rows() {
                let row = w.row(i);
                let mut u = 0.0;
                for j in cols.clone() {
                    u += row[j] * self.h[j][s];
                }
                if u != 0.0 {
                    let d = self.output_change(i, s, g * u);
                    if d != 0.0 {
                        dz.push((i, d));
                    }
                }
            }
            if !dz.is_empty() {
                total += self.sample_change(s, &dz);
            }
        }
        total / self.batch as f64
    }

    pub(crate) fn columns_score(&self, w: &Matrix, cols: Range<usize>, dist: TwoPoint) -> f64 {
        let d0 = self.columns_change(w, cols.clone(), dist.v0);
        let d1 = self.columns_change(w, cols, dist.v1);
        ((1.0 - dist.p1) * d0 + dist.p1 * d1).abs()
    }

    /// Mean change when rows `rows` are scaled by `gate`.
    fn rows_change(&self, rows: Range<usize>, gate: f64) -> f64 {
        let g = gate - 1.0;
        if g == 0.0 {
            return 0.0;
        }
        let mut total = 0.0;
        let mut dz = Vec::with_capacity(rows.len());
        for s in 0..self.batch {
            dz.clear();
            for i in rows.clone() {
                let d = self.output_change(i, s, g * self.a[i][s]);
                if d != 0.0 {
                    dz.push((i, d));
                }
            }
            if !dz.is_empty() {
                total += self.sample_change(s, &dz);
            }
        }
        total / self.batch as f64
    }

    pub(crate) fn rows_score(&self, rows: Range<usize>, dist: TwoPoint) -> f64 {
        let d0 = self.rows_change(rows.clone(), dist.v0);
        let d1 = self.rows_change(rows, dist.v1);
        ((1.0 - dist.p1) * d0 + dist.p1 * d1).abs()
    }
}
