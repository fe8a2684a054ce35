//! Unit-stride, circularly padded convolutions and their doubly block
//! circulant matrices.
//!
//! All indices are zero-based. A layer maps `X ∈ ℝ^{d_in×r×r}` to
//! `Z[o][u][v] = Σ_i Σ_{a,b<q} K[o][i][a][b] · X[i][(u+a+1) mod r][(v+b+1) mod r]`,
//! and feature maps flatten as `i·r² + u·r + v`.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::compress::{compress_network, CompressedNetwork, CompressionPlan};
use crate::data::Target;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mlp::{Layer, Mlp};
use crate::train::{output_loss, LossKind, Trainable};

/// A `d × r × r` feature map, stored in flattened order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    d: usize,
    r: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(d: usize, r: usize, data: Vec<f64>) -> Result<Self> {
        if d == 0 || r == 0 {
            return Err(Error::invalid("feature map dimensions must be positive"));
        }
        if data.len() != d * r * r {
            return Err(Error::DimensionMismatch {
                context: "feature map data",
                expected: d * r * r,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature map"));
        }
        Ok(FeatureMap { d, r, data })
    }

    pub fn zeros(d: usize, r: usize) -> Self {
        FeatureMap {
            d,
            r,
            data: vec![0.0; d * r * r],
        }
    }

    pub fn channels(&self) -> usize {
        self.d
    }

    pub fn side(&self) -> usize {
        self.r
    }

    #[inline]
    pub fn get(&self, i: usize, u: usize, v: usize) -> f64 {
        self.data[flat_index(self.r, i, u, v)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, u: usize, v: usize, x: f64) {
        let idx = flat_index(self.r, i, u, v);
        self.data[idx] = x;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Position of `(i, u, v)` in the flattened vector.
#[inline]
pub fn flat_index(r: usize, i: usize, u: usize, v: usize) -> usize {
    i * r * r + u * r + v
}

pub fn flatten_feature_map(x: &FeatureMap) -> Vec<f64> {
    x.data.clone()
}

pub fn unflatten(x: &[f64], d: usize, r: usize) -> Result<FeatureMap> {
    FeatureMap::new(d, r, x.to_vec())
}

/// A `d_out × d_in × q × q` kernel acting on `r × r` maps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    d_out: usize,
    d_in: usize,
    q: usize,
    r: usize,
    kernel: Vec<f64>,
}

impl ConvLayer {
    pub fn new(d_out: usize, d_in: usize, q: usize, r: usize, kernel: Vec<f64>) -> Result<Self> {
        if d_out == 0 || d_in == 0 || q == 0 || r == 0 {
            return Err(Error::invalid("conv dimensions must be positive"));
        }
        if q > r {
            return Err(Error::invalid(format!("kernel side {q} exceeds map side {r}")));
        }
        if kernel.len() != d_out * d_in * q * q {
            return Err(Error::DimensionMismatch {
                context: "kernel data",
                expected: d_out * d_in * q * q,
                found: kernel.len(),
            });
        }
        if kernel.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("kernel"));
        }
        Ok(ConvLayer {
            d_out,
            d_in,
            q,
            r,
            kernel,
        })
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub(crate) fn kernel_mut(&mut self) -> &mut [f64] {
        &mut self.kernel
    }

    #[inline]
    fn kidx(&self, o: usize, i: usize, a: usize, b: usize) -> usize {
        ((o * self.d_in + i) * self.q + a) * self.q + b
    }

    #[inline]
    pub fn k(&self, o: usize, i: usize, a: usize, b: usize) -> f64 {
        self.kernel[self.kidx(o, i, a, b)]
    }

    /// Kernel slice `K[o][i]` zero-extended to `r × r`.
    pub fn extended(&self, o: usize, i: usize) -> Matrix {
        let mut u = Matrix::zeros(self.r, self.r);
        for a in 0..self.q {
            for b in 0..self.q {
                u.set(a, b, self.k(o, i, a, b));
            }
        }
        u
    }
}

/// Direct evaluation of the circular convolution.
pub fn conv_forward(layer: &ConvLayer, x: &FeatureMap) -> Result<FeatureMap> {
    if x.d != layer.d_in || x.r != layer.r {
        return Err(Error::DimensionMismatch {
            context: "conv input channels × side",
            expected: layer.d_in * layer.r,
            found: x.d * x.r,
        });
    }
    let r = layer.r;
    let mut z = FeatureMap::zeros(layer.d_out, r);
    for o in 0..layer.d_out {
        for i in 0..layer.d_in {
            for a in 0..layer.q {
                for b in 0..layer.q {
                    let k = layer.k(o, i, a, b);
                    if k == 0.0 {
                        continue;
                    }
                    for u in 0..r {
                        let su = (u + a + 1) % r;
                        for v in 0..r {
                            let sv = (v + b + 1) % r;
                            z.data[flat_index(r, o, u, v)] += k * x.get(i, su, sv);
                        }
                    }
                }
            }
        }
    }
    Ok(z)
}

/// The `r² × r²` matrix with `C[u·r+v][u'·r+v'] = U[(u'−u−1) mod r][(v'−v−1) mod r]`.
pub fn circulant_block(u: &Matrix) -> Result<Matrix> {
    if u.rows() != u.cols() {
        return Err(Error::DimensionMismatch {
            context: "circulant generator must be square",
            expected: u.rows(),
            found: u.cols(),
        });
    }
    let r = u.rows();
    let n = r * r;
    let mut c = Matrix::zeros(n, n);
    for row_u in 0..r {
        for row_v in 0..r {
            for col_u in 0..r {
                for col_v in 0..r {
                    let a = (col_u + 2 * r - row_u - 1) % r;
                    let b = (col_v + 2 * r - row_v - 1) % r;
                    c.set(row_u * r + row_v, col_u * r + col_v, u.get(a, b));
                }
            }
        }
    }
    Ok(c)
}

/// Kernel `U` recovered from the first row of a circulant block.
pub fn circulant_generator(block: &Matrix, r: usize) -> Matrix {
    let mut u = Matrix::zeros(r, r);
    for a in 0..r {
        for b in 0..r {
            u.set(a, b, block.get(0, ((a + 1) % r) * r + (b + 1) % r));
        }
    }
    u
}

/// `W(K)`: block `(o, i)` is the circulant block of the extended `K[o][i]`.
pub fn conv_to_matrix(layer: &ConvLayer) -> Matrix {
    let n = layer.r * layer.r;
    let mut w = Matrix::zeros(layer.d_out * n, layer.d_in * n);
    for o in 0..layer.d_out {
        for i in 0..layer.d_in {
            let block = circulant_block(&layer.extended(o, i)).expect("square generator");
            for p in 0..n {
                for s in 0..n {
                    w.set(o * n + p, i * n + s, block.get(p, s));
                }
            }
        }
    }
    w
}

/// Rebuilds a conv layer from a block-circulant matrix. Fails if the matrix
/// is not block circulant or uses taps beyond `q`.
pub fn matrix_to_conv(w: &Matrix, d_out: usize, d_in: usize, q: usize, r: usize) -> Result<ConvLayer> {
    let n = r * r;
    if w.rows() != d_out * n || w.cols() != d_in * n {
        return Err(Error::DimensionMismatch {
            context: "conv matrix shape",
            expected: d_out * n * d_in * n,
            found: w.len(),
        });
    }
    let mut kernel = vec![0.0; d_out * d_in * q * q];
    for o in 0..d_out {
        for i in 0..d_in {
            let mut block = Matrix::zeros(n, n);
            for p in 0..n {
                for s in 0..n {
                    block.set(p, s, w.get(o * n + p, i * n + s));
                }
            }
            let u = circulant_generator(&block, r);
            if circulant_block(&u)? != block {
                return Err(Error::invalid(format!("block ({o}, {i}) is not doubly block circulant")));
            }
            for a in 0..r {
                for b in 0..r {
                    let v = u.get(a, b);
                    if a < q && b < q {
                        kernel[((o * d_in + i) * q + a) * q + b] = v;
                    } else if v != 0.0 {
                        return Err(Error::invalid(format!("block ({o}, {i}) has taps beyond q = {q}")));
                    }
                }
            }
        }
    }
    ConvLayer::new(d_out, d_in, q, r, kernel)
}

/// `‖𝒞(U)‖` as the largest magnitude of the 2-D DFT of `U`, evaluated by the
/// direct double sum.
pub fn circulant_spectral_norm(u: &Matrix) -> f64 {
    let r = u.rows();
    let omega = |t: usize| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (t % r) as f64 / r as f64);
    let mut best = 0.0_f64;
    for k in 0..r {
        for l in 0..r {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..r {
                for b in 0..r {
                    let x = u.get(a, b);
                    if x != 0.0 {
                        acc += omega(k * (a + 1) + l * (b + 1)) * x;
                    }
                }
            }
            best = best.max(acc.norm());
        }
    }
    best
}

/// Eigenpair `(Û_{k,l}, v^{k,l})` of `𝒞(U)` with `v[u·r+v] = ω^{k(u+1)+l(v+1)}`.
pub fn circulant_eigenpair(u: &Matrix, k: usize, l: usize) -> (Complex64, Vec<Complex64>) {
    let r = u.rows();
    let omega = |t: usize| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (t % r) as f64 / r as f64);
    let mut value = Complex64::new(0.0, 0.0);
    for a in 0..r {
        for b in 0..r {
            value += omega(k * (a + 1) + l * (b + 1)) * u.get(a, b);
        }
    }
    let vector = (0..r * r)
        .map(|idx| omega(k * (idx / r + 1) + l * (idx % r + 1)))
        .collect();
    (value, vector)
}

/// A stack of conv layers with an optional dense head on the flattened output.
#[derive(Debug, Clone, PartialEq)]
pub struct Cnn {
    layers: Vec<ConvLayer>,
    activations: Vec<Activation>,
    head: Option<Layer>,
}

impl Cnn {
    pub fn new(layers: Vec<ConvLayer>, activations: Vec<Activation>, head: Option<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a CNN needs at least one conv layer"));
        }
        if layers.len() != activations.len() {
            return Err(Error::DimensionMismatch {
                context: "CNN activations",
                expected: layers.len(),
                found: activations.len(),
            });
        }
        for pair in layers.windows(2) {
            if pair[1].d_in != pair[0].d_out || pair[1].r != pair[0].r {
                return Err(Error::DimensionMismatch {
                    context: "consecutive conv layers",
                    expected: pair[0].d_out,
                    found: pair[1].d_in,
                });
            }
        }
        let last = &layers[layers.len() - 1];
        if let Some(h) = &head {
            if h.weights.cols() != last.d_out * last.r * last.r {
                return Err(Error::DimensionMismatch {
                    context: "CNN head input",
                    expected: last.d_out * last.r * last.r,
                    found: h.weights.cols(),
                });
            }
        }
        Ok(Cnn {
            layers,
            activations,
            head,
        })
    }

    pub fn layers(&self) -> &[ConvLayer] {
        &self.layers
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn head(&self) -> Option<&Layer> {
        self.head.as_ref()
    }

    pub fn side(&self) -> usize {
        self.layers[0].r
    }

    /// Channel counts `d_1, …, d_{L+1}`.
    pub fn channel_dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].d_in];
        d.extend(self.layers.iter().map(|l| l.d_out));
        d
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].d_in * self.side() * self.side()
    }

    /// Output of the direct convolution chain (and head), flattened.
    pub fn forward(&self, x: &FeatureMap) -> Result<Vec<f64>> {
        let mut z = x.clone();
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            z = conv_forward(layer, &z)?;
            act.apply_slice(&mut z.data);
        }
        let flat = z.data;
        match &self.head {
            Some(h) => {
                let mut y = h.weights.matvec(&flat)?;
                h.activation.apply_slice(&mut y);
                Ok(y)
            }
            None => Ok(flat),
        }
    }

    pub fn forward_flat(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward(&unflatten(x, self.layers[0].d_in, self.side())?)
    }
}

/// The equivalent MLP: one block-circulant matrix per conv layer, then the head.
pub fn cnn_to_mlp(cnn: &Cnn) -> Result<Mlp> {
    let mut layers: Vec<Layer> = cnn
        .layers
        .iter()
        .zip(&cnn.activations)
        .map(|(l, a)| Layer {
            weights: conv_to_matrix(l),
            activation: *a,
        })
        .collect();
    if let Some(h) = &cnn.head {
        layers.push(h.clone());
    }
    Mlp::new(layers)
}

/// Reads the kernels back out of an MLP shaped like `template`.
pub fn mlp_to_cnn(template: &Cnn, net: &Mlp) -> Result<Cnn> {
    let expected = template.layers.len() + usize::from(template.head.is_some());
    if net.depth() != expected {
        return Err(Error::DimensionMismatch {
            context: "MLP depth for CNN",
            expected,
            found: net.depth(),
        });
    }
    let layers = template
        .layers
        .iter()
        .enumerate()
        .map(|(l, t)| matrix_to_conv(net.weights(l), t.d_out, t.d_in, t.q, t.r))
        .collect::<Result<Vec<_>>>()?;
    let head = template.head.as_ref().map(|_| net.layer(template.layers.len()).clone());
    Cnn::new(layers, template.activations.clone(), head)
}

/// Zeroed filters of one conv layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterSparsity {
    pub layer: usize,
    /// `i` with `K[:, i]` all zero.
    pub zero_input_filters: Vec<usize>,
    /// `o` with `K[o, :]` all zero.
    pub zero_output_filters: Vec<usize>,
    pub d_in: usize,
    pub d_out: usize,
}

pub fn filter_sparsity(cnn: &Cnn) -> Vec<FilterSparsity> {
    cnn.layers
        .iter()
        .enumerate()
        .map(|(l, c)| {
            let per_in = c.q * c.q;
            let zero_in = (0..c.d_in)
                .filter(|i| (0..c.d_out).all(|o| c.kernel[c.kidx(o, *i, 0, 0)..][..per_in].iter().all(|v| *v == 0.0)))
                .collect();
            let zero_out = (0..c.d_out)
                .filter(|o| {
                    let start = c.kidx(*o, 0, 0, 0);
                    c.kernel[start..start + c.d_in * per_in].iter().all(|v| *v == 0.0)
                })
                .collect();
            FilterSparsity {
                layer: l + 1,
                zero_input_filters: zero_in,
                zero_output_filters: zero_out,
                d_in: c.d_in,
                d_out: c.d_out,
            }
        })
        .collect()
}

/// Structured filter pruning on the MLP form: column blocks (input filters)
/// of wide layers, row blocks (output filters) of bottleneck layers. The
/// block size is forced to `r²`. Returns the compressed MLP form and the
/// pruned CNN read back from it.
pub fn prune_cnn_structured(cnn: &Cnn, plan: &CompressionPlan) -> Result<(CompressedNetwork, Cnn)> {
    let mlp = cnn_to_mlp(cnn)?;
    let r = cnn.side();
    let mut plan = plan.clone();
    plan.structured = true;
    plan.block = r * r;
    if let Some(head_layer) = cnn.head.as_ref().map(|_| cnn.layers.len() + 1) {
        let touched = plan.sets.role(head_layer) != crate::compress::LayerRole::Copy;
        if touched {
            return Err(Error::LayerSets("the dense head is not part of filter pruning".into()));
        }
    }
    let compressed = compress_network(&mlp, &plan)?;
    let pruned = mlp_to_cnn(cnn, &compressed.net)?;
    Ok((compressed, pruned))
}

struct ConvCache {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
}

impl Cnn {
    fn forward_cached(&self, x: &[f64]) -> Result<(ConvCache, Vec<f64>, Vec<f64>)> {
        let mut cache = ConvCache {
            pre: Vec::with_capacity(self.layers.len()),
            post: Vec::with_capacity(self.layers.len()),
        };
        let mut z = unflatten(x, self.layers[0].d_in, self.side())?;
        for (layer, act) in self.layers.iter().zip(&self.activations) {
            let a = conv_forward(layer, &z)?;
            let mut post = a.clone();
            act.apply_slice(&mut post.data);
            cache.pre.push(a.data);
            cache.post.push(post.data.clone());
            z = post;
        }
        let (head_pre, out) = match &self.head {
            Some(h) => {
                let a = h.weights.matvec(&z.data)?;
                let mut y = a.clone();
                h.activation.apply_slice(&mut y);
                (a, y)
            }
            None => (Vec::new(), z.data),
        };
        Ok((cache, head_pre, out))
    }
}

/// `∂/∂K` and `∂/∂X` of a conv layer given the output gradient `g`.
fn conv_backward(layer: &ConvLayer, x: &[f64], g: &[f64], dk: &mut [f64]) -> Vec<f64> {
    let r = layer.r;
    let mut dx = vec![0.0; layer.d_in * r * r];
    for o in 0..layer.d_out {
        for i in 0..layer.d_in {
            for a in 0..layer.q {
                for b in 0..layer.q {
                    let k = layer.k(o, i, a, b);
                    let mut acc = 0.0;
                    for u in 0..r {
                        let su = (u + a + 1) % r;
                        for v in 0..r {
                            let sv = (v + b + 1) % r;
                            let gz = g[flat_index(r, o, u, v)];
                            acc += gz * x[flat_index(r, i, su, sv)];
                            dx[flat_index(r, i, su, sv)] += k * gz;
                        }
                    }
                    dk[layer.kidx(o, i, a, b)] += acc;
                }
            }
        }
    }
    dx
}

impl Trainable for Cnn {
    fn param_blocks_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = self.layers.iter_mut().map(|l| l.kernel_mut()).collect();
        if let Some(h) = self.head.as_mut() {
            out.push(h.weights.data_mut());
        }
        out
    }

    fn param_sizes(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.layers.iter().map(|l| l.kernel.len()).collect();
        if let Some(h) = &self.head {
            s.push(h.weights.len());
        }
        s
    }

    fn batch_loss_and_grads(&self, xs: &[&[f64]], ys: &[&Target], kind: LossKind) -> Result<(f64, Vec<Vec<f64>>)> {
        if xs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut grads: Vec<Vec<f64>> = self.param_sizes().iter().map(|n| vec![0.0; *n]).collect();
        let nconv = self.layers.len();
        let mut total = 0.0;
        for (row, (x, y)) in xs.iter().zip(ys).enumerate() {
            let (cache, head_pre, out) = self.forward_cached(x)?;
            let (loss, dout) = output_loss(&out, y, kind, row)?;
            total += loss;
            let mut delta = match &self.head {
                Some(h) => {
                    let g: Vec<f64> = dout
                        .iter()
                        .zip(&head_pre)
                        .map(|(d, a)| d * h.activation.derivative(*a))
                        .collect();
                    let input = &cache.post[nconv - 1];
                    let cols = h.weights.cols();
                    let gw = &mut grads[nconv];
                    for (i, gi) in g.iter().enumerate() {
                        for (j, v) in input.iter().enumerate() {
                            gw[i * cols + j] += gi * v;
                        }
                    }
                    h.weights.tmatvec(&g)?
                }
                None => dout,
            };
            for l in (0..nconv).rev() {
                let act = self.activations[l];
                let g: Vec<f64> = delta
                    .iter()
                    .zip(&cache.pre[l])
                    .map(|(d, a)| d * act.derivative(*a))
                    .collect();
                let input: &[f64] = if l == 0 { x } else { &cache.post[l - 1] };
                delta = conv_backward(&self.layers[l], input, &g, &mut grads[l]);
            }
        }
        let n = xs.len() as f64;
        grads.iter_mut().flatten().for_each(|g| *g /= n);
        Ok((total / n, grads))
    }

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.forward_flat(x)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ConvLayerFile {
    d_out: usize,
    d_in: usize,
    q: usize,
    r: usize,
    /// `kernel[o][i][a][b]`.
    kernel: Vec<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct HeadFile {
    rows: usize,
    cols: usize,
    activation: String,
    weights: Vec<f64>,
}

/// `{"layers": [...], "activations": [...], "head": null | {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnFile {
    layers: Vec<ConvLayerFile>,
    activations: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    head: Option<HeadFile>,
}

impl CnnFile {
    pub fn from_cnn(cnn: &Cnn) -> Self {
        CnnFile {
            layers: cnn
                .layers
                .iter()
                .map(|l| ConvLayerFile {
                    d_out: l.d_out,
                    d_in: l.d_in,
                    q: l.q,
                    r: l.r,
                    kernel: (0..l.d_out)
                        .map(|o| {
                            (0..l.d_in)
                                .map(|i| (0..l.q).map(|a| (0..l.q).map(|b| l.k(o, i, a, b)).collect()).collect())
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
            activations: cnn.activations.iter().map(ToString::to_string).collect(),
            head: cnn.head.as_ref().map(|h| HeadFile {
                rows: h.weights.rows(),
                cols: h.weights.cols(),
                activation: h.activation.to_string(),
                weights: h.weights.data().to_vec(),
            }),
        }
    }

    pub fn to_cnn(&self) -> Result<Cnn> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                let mut flat = Vec::with_capacity(l.d_out * l.d_in * l.q * l.q);
                if l.kernel.len() != l.d_out {
                    return Err(Error::DimensionMismatch {
                        context: "kernel output channels",
                        expected: l.d_out,
                        found: l.kernel.len(),
                    });
                }
                for per_out in &l.kernel {
                    if per_out.len() != l.d_in {
                        return Err(Error::DimensionMismatch {
                            context: "kernel input channels",
                            expected: l.d_in,
                            found: per_out.len(),
                        });
                    }
                    for per_in in per_out {
                        if per_in.len() != l.q || per_in.iter().any(|row| row.len() != l.q) {
                            return Err(Error::invalid("kernel taps must be q × q"));
                        }
                        flat.extend(per_in.iter().flatten());
                    }
                }
                ConvLayer::new(l.d_out, l.d_in, l.q, l.r, flat)
            })
            .collect::<Result<Vec<_>>>()?;
        let activations = self
            .activations
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Activation>>>()?;
        let head = match &self.head {
            Some(h) => Some(Layer {
                weights: Matrix::new(h.rows, h.cols, h.weights.clone())?,
                activation: h.activation.parse()?,
            }),
            None => None,
        };
        Cnn::new(layers, activations, head)
    }
}

pub fn load_cnn(path: impl AsRef<Path>) -> Result<Cnn> {
    serde_json::from_str::<CnnFile>(&fs::read_to_string(path)?)?.to_cnn()
}

pub fn save_cnn(path: impl AsRef<Path>, cnn: &Cnn) -> Result<()> {
    fs::write(path, serde_json::to_string(&CnnFile::from_cnn(cnn))?)?;
    Ok(())
}
