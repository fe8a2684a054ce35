//! Feasibility conditions and error bounds.
//!
//! The conditions involve a positive constant `δ` that is only known to
//! exist; every verdict here is therefore conditional on the `δ` the caller
//! supplies. A passing report says which inequalities hold for the given
//! numbers and what the bounds evaluate to. It does not certify that a
//! network can be compressed.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::compress::{LayerRole, LayerSets, Mode};
use crate::conv::{conv_to_matrix, Cnn};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mlp::Mlp;

/// Label attached to every report.
pub const DELTA_NOTE: &str = "conditional on the user-supplied delta";

/// Norms of one layer (1-based index).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNorms {
    pub layer: usize,
    pub rows: usize,
    pub cols: usize,
    /// Spectral norm `σ_ℓ`.
    pub sigma: f64,
    /// Largest absolute entry `ν_ℓ`.
    pub nu: f64,
    /// `ν_ℓ·√(n_ℓ ∨ n_{ℓ+1})`, or the filter version for convolutions.
    pub nu_scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
    pub layers: Vec<LayerNorms>,
}

fn layer_norms(layer: usize, w: &Matrix, scale: f64) -> LayerNorms {
    let nu = w.inf_norm();
    LayerNorms {
        layer,
        rows: w.rows(),
        cols: w.cols(),
        sigma: w.spectral_norm(),
        nu,
        nu_scaled: nu * scale,
    }
}

fn collect(layers: Vec<LayerNorms>) -> Constants {
    let c1 = layers.iter().map(|l| l.sigma).fold(0.0, f64::max);
    let c2 = layers.iter().map(|l| l.nu_scaled).fold(0.0, f64::max);
    Constants { c1, c2, layers }
}

/// `c₁ = max_ℓ ‖W_ℓ‖` and `c₂ = max_ℓ ‖W_ℓ‖_∞ √(n_ℓ ∨ n_{ℓ+1})`.
pub fn compute_constants(net: &Mlp) -> Constants {
    let layers = net
        .layers()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let w = &l.weights;
            layer_norms(i + 1, w, (w.rows().max(w.cols()) as f64).sqrt())
        })
        .collect();
    collect(layers)
}

/// Constants of a convolutional network.
///
/// `σ_ℓ` is the spectral norm of the unrolled convolution, and `c₂` is the
/// smallest value with `‖K_ℓ‖_∞ ≤ c₂/(q√(d_ℓ ∨ d_{ℓ+1}))` for every layer.
/// A dense head, if any, enters with the fully connected scaling.
pub fn compute_cnn_constants(cnn: &Cnn) -> Constants {
    let mut layers: Vec<LayerNorms> = cnn
        .layers()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let w = conv_to_matrix(l);
            let scale = l.q() as f64 * (l.d_out().max(l.d_in()) as f64).sqrt();
            let mut n = layer_norms(i + 1, &w, scale);
            n.nu = l.kernel().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            n.nu_scaled = n.nu * scale;
            n
        })
        .collect();
    if let Some(head) = cnn.head() {
        let w = &head.weights;
        layers.push(layer_norms(layers.len() + 1, w, (w.rows().max(w.cols()) as f64).sqrt()));
    }
    collect(layers)
}

/// One evaluated inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub layer: usize,
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl Verdict {
    fn new(layer: usize, id: &str, lhs: f64, rhs: f64) -> Self {
        Verdict {
            layer,
            id: id.to_string(),
            lhs,
            rhs,
            pass: lhs <= rhs,
        }
    }

    /// Recomputes `pass` from the recorded sides.
    pub fn replay(&self) -> bool {
        self.lhs <= self.rhs
    }
}

fn check_dims(dims: &[usize], sets: &LayerSets) -> Result<()> {
    if dims.len() != sets.depth() + 1 {
        return Err(Error::DimensionMismatch {
            context: "layer widths versus layer sets",
            expected: sets.depth() + 1,
            found: dims.len(),
        });
    }
    if dims.contains(&0) {
        return Err(Error::invalid("layer widths must be positive"));
    }
    Ok(())
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")))
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta >= 0.0 && delta.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta must be finite and nonnegative, got {delta}")))
    }
}

// `n(dims, ℓ)` is `n_ℓ` with 1-based ℓ.
fn n(dims: &[usize], l: usize) -> f64 {
    dims[l - 1] as f64
}

/// Unstructured pruning with keep probability `p`.
pub fn check_prune_conditions(
    dims: &[usize],
    sets: &LayerSets,
    p: f64,
    alpha: f64,
    delta: f64,
    c1: f64,
    c2: f64,
) -> Result<Vec<Verdict>> {
    check_dims(dims, sets)?;
    check_unit("p", p)?;
    check_unit("alpha", alpha)?;
    check_delta(delta)?;
    let g = p * (1.0 - alpha) * delta / (alpha * (1.0 - p));
    let mut out = Vec::new();
    for &l in sets.wide() {
        out.push(Verdict::new(
            l,
            "prune/wide",
            n(dims, l + 1) / n(dims, l),
            g * c1 * c1 / (c2 * c2),
        ));
    }
    for &l in sets.bottleneck() {
        let width_term = 1.0_f64.max(c2 * c2).max(c2 * c2 * (1.0 - p) / p);
        let rhs = g / (c1.powi(l as i32) * c2 * c2 * 1.0_f64.max(c1.powi(-4)) * width_term);
        out.push(Verdict::new(l, "prune/bottleneck/width", 1.0 / n(dims, l + 1).sqrt(), rhs));
        out.push(Verdict::new(
            l,
            "prune/bottleneck/ratio",
            n(dims, l + 2) / n(dims, l + 1),
            g * c1.powi(4) / c2.powi(4),
        ));
    }
    Ok(out)
}

/// Quantization onto `2k` grid levels.
pub fn check_quant_conditions(
    dims: &[usize],
    sets: &LayerSets,
    k: usize,
    alpha: f64,
    delta: f64,
    c1: f64,
    c2: f64,
) -> Result<Vec<Verdict>> {
    check_dims(dims, sets)?;
    check_unit("alpha", alpha)?;
    check_delta(delta)?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let kf = k as f64;
    let g = (1.0 - alpha) * kf * kf * delta / alpha;
    let mut out = Vec::new();
    for &l in sets.wide() {
        out.push(Verdict::new(
            l,
            "quant/wide",
            n(dims, l + 1) / n(dims, l),
            g * c1 * c1 / (c2 * c2),
        ));
    }
    for &l in sets.bottleneck() {
        let rhs = g
            / (c1.powi(l as i32) * c2 * c2 * 1.0_f64.max(c1.powi(4)) * 1.0_f64.max(c2 * c2 / kf));
        out.push(Verdict::new(l, "quant/bottleneck/width", 1.0 / n(dims, l + 1).sqrt(), rhs));
        out.push(Verdict::new(
            l,
            "quant/bottleneck/ratio",
            n(dims, l + 2) / n(dims, l + 1),
            g * c1.powi(4) / c2.powi(4),
        ));
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn structured_verdicts(
    prefix: &str,
    dims: &[usize],
    sets: &LayerSets,
    p: f64,
    alpha: f64,
    delta: f64,
    c1: f64,
    c2: f64,
    q: f64,
) -> Result<Vec<Verdict>> {
    check_dims(dims, sets)?;
    check_unit("p", p)?;
    check_unit("alpha", alpha)?;
    check_delta(delta)?;
    let g = p * (1.0 - alpha) * delta / (alpha * (1.0 - p));
    let cq = c2 * c2 * q * q;
    let mut out = Vec::new();
    for &l in sets.wide() {
        let rhs = alpha * (1.0 - p) * delta / (p * (1.0 - alpha)) * c1 * c1 / cq;
        out.push(Verdict::new(l, &format!("{prefix}/wide"), n(dims, l + 1) / n(dims, l), rhs));
    }
    for &l in sets.bottleneck() {
        let first = p * p * (1.0 - p) * (1.0 - p) * delta * delta
            / (alpha * alpha * (1.0 - p) * (1.0 - p))
            * 1.0_f64.min(c1.powi(8))
            / (c1.powi(2 * (l as i32 + 1)) * cq);
        let second = g * c1 * c1 / cq;
        out.push(Verdict::new(
            l,
            &format!("{prefix}/bottleneck/ratio"),
            n(dims, l + 2) / n(dims, l + 1),
            first.min(second),
        ));
        let rhs = g / (c1.powi(l as i32 - 2) * cq * 1.0_f64.max((1.0 - p) / p));
        out.push(Verdict::new(
            l,
            &format!("{prefix}/bottleneck/balance"),
            (n(dims, l) * n(dims, l + 2)).sqrt() / n(dims, l + 1),
            rhs,
        ));
    }
    Ok(out)
}

/// Structured pruning of rows and columns of a fully connected network.
pub fn check_structured_conditions(
    dims: &[usize],
    sets: &LayerSets,
    p: f64,
    alpha: f64,
    delta: f64,
    c1: f64,
    c2: f64,
) -> Result<Vec<Verdict>> {
    structured_verdicts("structured", dims, sets, p, alpha, delta, c1, c2, 1.0)
}

/// Filter pruning of a convolutional network; `dims` are channel counts.
#[allow(clippy::too_many_arguments)]
pub fn check_cnn_conditions(
    dims: &[usize],
    q: usize,
    sets: &LayerSets,
    p: f64,
    alpha: f64,
    delta: f64,
    c1: f64,
    c2: f64,
) -> Result<Vec<Verdict>> {
    if q == 0 {
        return Err(Error::invalid("kernel size must be positive"));
    }
    structured_verdicts("cnn", dims, sets, p, alpha, delta, c1, c2, q as f64)
}

fn check_xi(xi: f64) -> Result<()> {
    if (0.0..1.0).contains(&xi) {
        Ok(())
    } else {
        Err(Error::invalid(format!("xi must lie in [0, 1), got {xi}")))
    }
}

fn check_c1(c1: f64) -> Result<()> {
    if c1 >= 0.0 && c1.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("c1 must be finite and nonnegative, got {c1}")))
    }
}

fn check_loss(loss: f64) -> Result<()> {
    if loss >= 0.0 && loss.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("the dense loss must be finite and nonnegative, got {loss}")))
    }
}

/// `ε = (1+ξ)^m ξ`.
pub fn epsilon(m: usize, xi: f64) -> Result<f64> {
    check_xi(xi)?;
    Ok((1.0 + xi).powi(m as i32) * xi)
}

/// `c₁^{2m} ε`: bound on the expected squared output distance.
pub fn error_bound(c1: f64, m: usize, xi: f64) -> Result<f64> {
    check_c1(c1)?;
    Ok(c1.powi(2 * m as i32) * epsilon(m, xi)?)
}

/// `L + 2c₁^m √(εL) + c₁^{2m} ε`.
pub fn loss_bound(loss: f64, c1: f64, m: usize, xi: f64) -> Result<f64> {
    check_loss(loss)?;
    check_c1(c1)?;
    let eps = epsilon(m, xi)?;
    let cm = c1.powi(m as i32);
    Ok(loss + 2.0 * cm * (eps * loss).sqrt() + cm * cm * eps)
}

/// `(1 + 2c₁^m √ε / ω) L + c₁^{2m} ε`, for noise level `ω > 0`.
pub fn corollary_bound(loss: f64, c1: f64, m: usize, xi: f64, omega: f64) -> Result<f64> {
    check_loss(loss)?;
    check_c1(c1)?;
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::invalid(format!("omega must be positive, got {omega}")));
    }
    let eps = epsilon(m, xi)?;
    let cm = c1.powi(m as i32);
    Ok((1.0 + 2.0 * cm * eps.sqrt() / omega) * loss + cm * cm * eps)
}

/// Per-depth output of [`error_recursion`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionReport {
    /// `A_ℓ` for `ℓ = 1..=m`; `None` at bottleneck depths, which the
    /// recursion steps over.
    pub bounds: Vec<Option<f64>>,
    /// `σ^{2ℓ}(1+ξ)^ℓ ξ`.
    pub envelope: Vec<f64>,
    /// `ξ ≥ 2ε₁ ∨ 2ε₃ ∨ √(2ε₂) ∨ √(2ε₄)`.
    pub precondition: bool,
    /// Every defined `A_ℓ` is below its envelope.
    pub within_envelope: bool,
}

/// Runs the per-depth error recursion from `A₀ = 0`.
///
/// Copy layers multiply by `σ²`; a wide layer gives
/// `(1+ε₁)σ²A_{ℓ−1} + ε₂σ^{2ℓ}`; the layer after a bottleneck gives
/// `(1+ε₃)σ⁴A_{ℓ−2} + ε₄σ^{2ℓ}`.
pub fn error_recursion(sigma: f64, sets: &LayerSets, eps: [f64; 4], xi: f64) -> Result<RecursionReport> {
    check_xi(xi)?;
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be finite and nonnegative, got {sigma}")));
    }
    if eps.iter().any(|e| !(*e >= 0.0 && e.is_finite())) {
        return Err(Error::invalid("the per-step errors must be finite and nonnegative"));
    }
    let [e1, e2, e3, e4] = eps;
    let m = sets.depth();
    let s2 = sigma * sigma;
    let mut a = vec![0.0_f64; m + 1];
    let mut bounds = Vec::with_capacity(m);
    let mut envelope = Vec::with_capacity(m);
    let mut within = true;
    for l in 1..=m {
        let sl = s2.powi(l as i32);
        let env = sl * (1.0 + xi).powi(l as i32) * xi;
        envelope.push(env);
        let value = match sets.role(l) {
            LayerRole::Copy => Some(s2 * a[l - 1]),
            LayerRole::Wide => Some((1.0 + e1) * s2 * a[l - 1] + e2 * sl),
            LayerRole::Bottleneck => None,
            LayerRole::Successor => Some((1.0 + e3) * s2 * s2 * a[l - 2] + e4 * sl),
        };
        if let Some(v) = value {
            a[l] = v;
            if v > env * (1.0 + 1e-12) {
                within = false;
            }
        }
        bounds.push(value);
    }
    let need = (2.0 * e1).max(2.0 * e3).max((2.0 * e2).sqrt()).max((2.0 * e4).sqrt());
    Ok(RecursionReport {
        bounds,
        envelope,
        precondition: xi >= need,
        within_envelope: within,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaEstimate {
    pub omega: f64,
    pub omega_sq: f64,
    /// Groups of identical inputs with at least two rows.
    pub groups: usize,
    pub rows: usize,
}

/// Estimates the noise level `ω` from rows sharing the exact same input.
///
/// Within each group the squared distance of the targets to the group mean
/// is averaged (population variance, summed over output coordinates), and
/// the result is pooled over all rows in such groups. Returns `None` when no
/// input repeats.
pub fn estimate_omega(ds: &Dataset) -> Option<OmegaEstimate> {
    let mut groups: HashMap<Vec<u64>, Vec<usize>> = HashMap::new();
    for (i, x) in ds.x.iter().enumerate() {
        let key = x.iter().map(|v| (v + 0.0).to_bits()).collect();
        groups.entry(key).or_default().push(i);
    }
    let mut order: Vec<&Vec<usize>> = groups.values().filter(|g| g.len() > 1).collect();
    if order.is_empty() {
        return None;
    }
    order.sort_by_key(|g| g[0]);
    let mut total = 0.0;
    let mut rows = 0;
    for g in &order {
        let ys: Vec<Vec<f64>> = g.iter().map(|i| ds.y[*i].as_values()).collect();
        let dim = ys[0].len();
        let mut mean = vec![0.0; dim];
        for y in &ys {
            for (m, v) in mean.iter_mut().zip(y) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= ys.len() as f64;
        }
        total += ys
            .iter()
            .map(|y| y.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .sum::<f64>();
        rows += ys.len();
    }
    let omega_sq = total / rows as f64;
    Some(OmegaEstimate {
        omega: omega_sq.sqrt(),
        omega_sq,
        groups: order.len(),
        rows,
    })
}

/// Inputs to [`bound_report`], as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub mode: Mode,
    pub alpha: f64,
    pub delta: f64,
    pub xi: f64,
    #[serde(default)]
    pub omega: Option<f64>,
    /// Loss of the dense network; enables the loss bounds.
    #[serde(default)]
    pub dense_loss: Option<f64>,
    #[serde(default)]
    pub wide: Vec<usize>,
    #[serde(default)]
    pub bottleneck: Vec<usize>,
    #[serde(default)]
    pub structured: bool,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        check_unit("alpha", self.alpha)?;
        check_unit("xi", self.xi)?;
        check_delta(self.delta)?;
        if let Some(l) = self.dense_loss {
            check_loss(l)?;
        }
        if let Some(w) = self.omega {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(Error::invalid(format!("omega must be nonnegative, got {w}")));
            }
        }
        if self.structured && matches!(self.mode, Mode::Quantize { .. }) {
            return Err(Error::invalid("structured conditions exist for pruning only"));
        }
        Ok(())
    }

    pub fn sets(&self, depth: usize) -> Result<LayerSets> {
        LayerSets::new(depth, self.wide.iter().copied(), self.bottleneck.iter().copied())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub note: String,
    pub c1: f64,
    pub c2: f64,
    pub layers: Vec<LayerNorms>,
    pub verdicts: Vec<Verdict>,
    pub all_pass: bool,
    pub epsilon: f64,
    pub error_bound: f64,
    pub loss_bound: Option<f64>,
    pub corollary_bound: Option<f64>,
    /// Assumptions the network visibly violates.
    pub assumption_flags: Vec<String>,
}

impl BoundReport {
    /// Plain-text table of constants, verdicts and bounds.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "verdicts {}", self.note);
        let _ = writeln!(s, "c1 = {:.6e}  c2 = {:.6e}", self.c1, self.c2);
        let _ = writeln!(s, "{:>5}  {:>6}  {:>6}  {:>12}  {:>12}  {:>12}", "layer", "rows", "cols", "sigma", "nu", "nu_scaled");
        for l in &self.layers {
            let _ = writeln!(
                s,
                "{:>5}  {:>6}  {:>6}  {:>12.6e}  {:>12.6e}  {:>12.6e}",
                l.layer, l.rows, l.cols, l.sigma, l.nu, l.nu_scaled
            );
        }
        let _ = writeln!(s, "{:>5}  {:<32}  {:>12}  {:>12}  result", "layer", "condition", "lhs", "rhs");
        for v in &self.verdicts {
            let _ = writeln!(
                s,
                "{:>5}  {:<32}  {:>12.6e}  {:>12.6e}  {}",
                v.layer,
                v.id,
                v.lhs,
                v.rhs,
                if v.pass { "pass" } else { "FAIL" }
            );
        }
        let _ = writeln!(s, "epsilon = {:.6e}", self.epsilon);
        let _ = writeln!(s, "error bound = {:.6e}", self.error_bound);
        if let Some(b) = self.loss_bound {
            let _ = writeln!(s, "loss bound = {b:.6e}");
        }
        if let Some(b) = self.corollary_bound {
            let _ = writeln!(s, "noise-level loss bound = {b:.6e}");
        }
        for f in &self.assumption_flags {
            let _ = writeln!(s, "warning: {f}");
        }
        s
    }
}

fn finish(
    constants: Constants,
    verdicts: Vec<Verdict>,
    depth: usize,
    inputs: &BoundInputs,
    mut flags: Vec<String>,
) -> Result<BoundReport> {
    let c1 = constants.c1;
    let loss_bound = inputs.dense_loss.map(|l| loss_bound(l, c1, depth, inputs.xi)).transpose()?;
    let corollary = match (inputs.dense_loss, inputs.omega) {
        (Some(l), Some(w)) if w > 0.0 => Some(corollary_bound(l, c1, depth, inputs.xi, w)?),
        (Some(_), Some(_)) => {
            flags.push("omega = 0: the noise-level loss bound is unavailable".into());
            None
        }
        _ => None,
    };
    Ok(BoundReport {
        note: DELTA_NOTE.to_string(),
        c1,
        c2: constants.c2,
        layers: constants.layers,
        all_pass: verdicts.iter().all(|v| v.pass),
        verdicts,
        epsilon: epsilon(depth, inputs.xi)?,
        error_bound: error_bound(c1, depth, inputs.xi)?,
        loss_bound,
        corollary_bound: corollary,
        assumption_flags: flags,
    })
}

fn activation_flags(acts: &[crate::activation::Activation]) -> Vec<String> {
    acts.iter()
        .enumerate()
        .filter(|(_, a)| !a.zero_preserving())
        .map(|(i, a)| format!("layer {}: {a} does not map 0 to 0", i + 1))
        .collect()
}

/// Constants, conditions and bounds for a fully connected network.
pub fn bound_report(net: &Mlp, inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let sets = inputs.sets(net.depth())?;
    let dims = net.dims();
    let k = compute_constants(net);
    let verdicts = match inputs.mode {
        Mode::Prune { p } if inputs.structured => {
            check_structured_conditions(&dims, &sets, p, inputs.alpha, inputs.delta, k.c1, k.c2)?
        }
        Mode::Prune { p } => check_prune_conditions(&dims, &sets, p, inputs.alpha, inputs.delta, k.c1, k.c2)?,
        Mode::Quantize { k: levels } => {
            check_quant_conditions(&dims, &sets, levels, inputs.alpha, inputs.delta, k.c1, k.c2)?
        }
    };
    let flags = activation_flags(&net.activations());
    finish(k, verdicts, net.depth(), inputs, flags)
}

/// Constants, filter conditions and bounds for a convolutional network.
///
/// Layer sets index the convolution layers; a dense head counts towards the
/// depth and `c₁` but is never a target.
pub fn cnn_bound_report(cnn: &Cnn, inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let p = match inputs.mode {
        Mode::Prune { p } => p,
        Mode::Quantize { .. } => return Err(Error::invalid("convolutional conditions exist for filter pruning only")),
    };
    let conv_depth = cnn.layers().len();
    let sets = inputs.sets(conv_depth)?;
    let dims = cnn.channel_dims();
    let q = cnn.layers()[0].q();
    if cnn.layers().iter().any(|l| l.q() != q) {
        return Err(Error::invalid("the conditions assume one kernel size for every layer"));
    }
    let k = compute_cnn_constants(cnn);
    let verdicts = check_cnn_conditions(&dims, q, &sets, p, inputs.alpha, inputs.delta, k.c1, k.c2)?;
    let mut acts = cnn.activations().to_vec();
    if let Some(h) = cnn.head() {
        acts.push(h.activation);
    }
    let depth = acts.len();
    finish(k, verdicts, depth, inputs, activation_flags(&acts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::data::TaskKind;
    use crate::data::Target;
    use crate::train::init_glorot;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn identity_constants() {
        let net = Mlp::from_parts(
            vec![Matrix::identity(5), Matrix::identity(5)],
            vec![Activation::Identity, Activation::Relu],
        )
        .unwrap();
        let k = compute_constants(&net);
        assert!(close(k.c1, 1.0, 1e-12));
        assert!(close(k.c2, 5.0_f64.sqrt(), 1e-15));
    }

    #[test]
    fn glorot_c2_is_at_most_sqrt6() {
        for seed in 0..5 {
            let net = init_glorot(&[7, 40, 3], &[Activation::Relu, Activation::Identity], seed).unwrap();
            let k = compute_constants(&net);
            for (l, (a, b)) in k.layers.iter().zip([(7.0, 40.0), (40.0, 3.0)]) {
                let cap = 6.0_f64.sqrt() * f64::max(a, b).sqrt() / (a + b).sqrt();
                assert!(l.nu_scaled <= cap + 1e-12);
            }
            assert!(k.c2 <= 6.0_f64.sqrt());
        }
    }

    #[test]
    fn prune_wide_hand_case() {
        let sets = LayerSets::new(1, [1], []).unwrap();
        let v = check_prune_conditions(&[1_000_000, 10], &sets, 0.5, 0.99, 0.1, 1.0, 1.0).unwrap();
        assert_eq!(v.len(), 1);
        assert!(close(v[0].lhs, 1e-5, 1e-15));
        let want = 0.5 * 0.01 * 0.1 / (0.99 * 0.5);
        assert!(close(v[0].rhs, want, 1e-12));
        assert!(close(v[0].rhs, 1.0101e-3, 1e-4));
        assert!(v[0].pass);
    }

    #[test]
    fn zero_delta_fails_and_equal_widths_fail() {
        let sets = LayerSets::new(3, [1], [2]).unwrap();
        let v = check_prune_conditions(&[50, 50, 20, 10], &sets, 0.3, 0.9, 0.0, 2.0, 1.5).unwrap();
        assert_eq!(v.len(), 3);
        assert!(v.iter().all(|v| !v.pass));
        let sets = LayerSets::new(1, [1], []).unwrap();
        let v = check_prune_conditions(&[30, 30], &sets, 0.3, 0.9, 0.5, 1.0, 1.0).unwrap();
        assert!(v[0].rhs < 1.0 && !v[0].pass);
    }

    #[test]
    fn bottleneck_prune_hand_case() {
        // ℓ = 1, c₁ = 2, c₂ = 1, p = 0.5, α = 0.5, δ = 1: g = 1.
        let sets = LayerSets::new(2, [], [1]).unwrap();
        let v = check_prune_conditions(&[4, 100, 9], &sets, 0.5, 0.5, 1.0, 2.0, 1.0).unwrap();
        // 1/(2·1·1·1) = 0.5
        assert!(close(v[0].lhs, 0.1, 1e-15));
        assert!(close(v[0].rhs, 0.5, 1e-15));
        // ratio: 16
        assert!(close(v[1].lhs, 0.09, 1e-15));
        assert!(close(v[1].rhs, 16.0, 1e-15));
        assert!(v.iter().all(|v| v.pass));
    }

    #[test]
    fn quant_hand_cases() {
        // (1−α)k²δ/α with α = 0.5, k = 4, δ = 0.25 → 4; c₁ = c₂ = 1.
        let sets = LayerSets::new(2, [], [1]).unwrap();
        let v = check_quant_conditions(&[3, 64, 8], &sets, 4, 0.5, 0.25, 1.0, 1.0).unwrap();
        assert!(close(v[0].lhs, 0.125, 1e-15));
        assert!(close(v[0].rhs, 4.0, 1e-15));
        assert!(close(v[1].rhs, 4.0, 1e-15));
        // c₂ = 3: c₂²/k = 9/4 takes over the width term.
        let v = check_quant_conditions(&[3, 64, 8], &sets, 4, 0.5, 0.25, 1.0, 3.0).unwrap();
        assert!(close(v[0].rhs, 4.0 / (9.0 * 2.25), 1e-14));
        let sets = LayerSets::new(1, [1], []).unwrap();
        let big = check_quant_conditions(&[10, 500], &sets, 1 << 20, 0.9, 0.1, 1.0, 1.0).unwrap();
        assert!(big[0].pass);
        let tight = check_quant_conditions(&[500, 10], &sets, 4, 1.0 - 1e-12, 0.1, 1.0, 1.0).unwrap();
        assert!(!tight[0].pass);
    }

    #[test]
    fn structured_hand_case_and_q_identity() {
        // p = 0.5, α = 0.5, δ = 1, c₁ = c₂ = 1 → g = 1, wide rhs = 1.
        let sets = LayerSets::new(3, [3], [1]).unwrap();
        let dims = [16, 4, 8, 2];
        let v = check_structured_conditions(&dims, &sets, 0.5, 0.5, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[0].id, "structured/wide");
        assert!(close(v[0].lhs, 0.25, 1e-15) && close(v[0].rhs, 1.0, 1e-15));
        // b.1: first term 0.25·0.25/(0.25·0.25) = 1, second 1 → 1.
        assert!(close(v[1].lhs, 2.0, 1e-15) && close(v[1].rhs, 1.0, 1e-15));
        assert!(!v[1].pass);
        // b.2: √(16·8)/4, rhs 1/(c₁^{−1}) = 1.
        assert!(close(v[2].lhs, 128.0_f64.sqrt() / 4.0, 1e-15) && close(v[2].rhs, 1.0, 1e-15));
        let cnn = check_cnn_conditions(&dims, 1, &sets, 0.5, 0.5, 1.0, 1.0, 1.0).unwrap();
        for (a, b) in v.iter().zip(&cnn) {
            assert_eq!(a.lhs.to_bits(), b.lhs.to_bits());
            assert_eq!(a.rhs.to_bits(), b.rhs.to_bits());
        }
        let q3 = check_cnn_conditions(&dims, 3, &sets, 0.5, 0.5, 1.0, 1.0, 1.0).unwrap();
        assert!(close(q3[0].rhs, 1.0 / 9.0, 1e-15));
        let zero = check_structured_conditions(&dims, &sets, 0.5, 0.5, 0.0, 1.0, 1.0).unwrap();
        assert!(zero.iter().all(|v| !v.pass));
    }

    #[test]
    fn bad_arguments() {
        let sets = LayerSets::new(1, [1], []).unwrap();
        assert!(check_prune_conditions(&[3], &sets, 0.3, 0.9, 0.1, 1.0, 1.0).is_err());
        assert!(check_prune_conditions(&[3, 4], &sets, 1.0, 0.9, 0.1, 1.0, 1.0).is_err());
        assert!(check_quant_conditions(&[3, 4], &sets, 0, 0.9, 0.1, 1.0, 1.0).is_err());
        assert!(error_bound(1.0, 2, 1.0).is_err());
        assert!(corollary_bound(0.1, 1.0, 2, 0.1, 0.0).is_err());
    }

    #[test]
    fn bound_formulas() {
        assert_eq!(error_bound(3.0, 4, 0.0).unwrap(), 0.0);
        assert_eq!(loss_bound(0.7, 3.0, 4, 0.0).unwrap(), 0.7);
        assert!(close(error_bound(1.0, 1, 0.5).unwrap(), 0.75, 1e-15));
        assert!(close(loss_bound(0.0, 2.0, 1, 0.5).unwrap(), 4.0 * 0.75, 1e-15));
        // L = 1, c₁ = 1, m = 1, ξ = 0.5: 1 + 2√0.75 + 0.75.
        assert!(close(loss_bound(1.0, 1.0, 1, 0.5).unwrap(), 1.75 + 2.0 * 0.75_f64.sqrt(), 1e-15));
        assert!(close(corollary_bound(1.0, 1.0, 1, 0.5, 2.0).unwrap(), 1.75 + 0.75_f64.sqrt(), 1e-15));
    }

    #[test]
    fn recursion_examples() {
        let sets = LayerSets::new(1, [1], []).unwrap();
        let r = error_recursion(3.0, &sets, [0.0, 0.02, 0.0, 0.0], 0.2).unwrap();
        assert!(close(r.bounds[0].unwrap(), 0.02 * 9.0, 1e-15));
        assert!(close(r.envelope[0], 9.0 * 1.2 * 0.2, 1e-15));
        assert!(r.precondition && r.within_envelope);

        let sets = LayerSets::new(4, [1], [2]).unwrap();
        let r = error_recursion(1.3, &sets, [0.0; 4], 0.1).unwrap();
        assert_eq!(r.bounds, vec![Some(0.0), None, Some(0.0), Some(0.0)]);

        let r = error_recursion(1.0, &sets, [0.1, 0.0, 0.0, 0.0], 0.1).unwrap();
        assert!(!r.precondition);
    }

    #[test]
    fn omega_examples() {
        let x = vec![vec![0.5, 0.5]; 4];
        let y = [0.0, 2.0, 0.0, 2.0].iter().map(|v| Target::Values(vec![*v])).collect();
        let ds = Dataset::new(x, y, TaskKind::Regression).unwrap();
        let w = estimate_omega(&ds).unwrap();
        assert!(close(w.omega_sq, 1.0, 1e-15));
        assert_eq!((w.groups, w.rows), (1, 4));

        let x = vec![vec![0.1], vec![0.2]];
        let y = vec![Target::Values(vec![0.0]), Target::Values(vec![1.0])];
        let ds = Dataset::new(x, y, TaskKind::Regression).unwrap();
        assert!(estimate_omega(&ds).is_none());
    }

    #[test]
    fn report_flags_and_replay() {
        let net = init_glorot(&[4, 64, 3], &[Activation::Sigmoid, Activation::Identity], 2).unwrap();
        let inputs = BoundInputs {
            mode: Mode::Prune { p: 0.3 },
            alpha: 0.9,
            delta: 0.5,
            xi: 0.1,
            omega: Some(0.5),
            dense_loss: Some(0.2),
            wide: vec![2],
            bottleneck: vec![],
            structured: false,
        };
        let r = bound_report(&net, &inputs).unwrap();
        assert_eq!(r.note, DELTA_NOTE);
        assert_eq!(r.assumption_flags.len(), 1);
        assert!(r.verdicts.iter().all(|v| v.replay() == v.pass));
        assert!(r.loss_bound.unwrap() >= 0.2);
        let json = serde_json::to_string(&r).unwrap();
        let back: BoundReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
        assert!(r.to_table().contains("prune/wide"));
    }

    proptest! {
        #[test]
        fn larger_delta_never_breaks_a_pass(
            n0 in 1usize..2000, n1 in 1usize..2000, n2 in 1usize..2000,
            p in 0.01f64..0.99, alpha in 0.01f64..0.99,
            d0 in 0.0f64..10.0, extra in 0.0f64..10.0,
            c1 in 0.1f64..5.0, c2 in 0.1f64..5.0, wide_first in any::<bool>(),
        ) {
            let sets = if wide_first {
                LayerSets::new(2, [1], []).unwrap()
            } else {
                LayerSets::new(2, [], [1]).unwrap()
            };
            let dims = [n0, n1, n2];
            let a = check_prune_conditions(&dims, &sets, p, alpha, d0, c1, c2).unwrap();
            let b = check_prune_conditions(&dims, &sets, p, alpha, d0 + extra, c1, c2).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(!x.pass || y.pass);
            }
            let a = check_structured_conditions(&dims, &sets, p, alpha, d0, c1, c2).unwrap();
            let b = check_structured_conditions(&dims, &sets, p, alpha, d0 + extra, c1, c2).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(!x.pass || y.pass);
            }
        }

        #[test]
        fn larger_k_never_breaks_a_pass(
            n0 in 1usize..2000, n1 in 1usize..2000, n2 in 1usize..2000,
            k in 1usize..64, dk in 0usize..64, alpha in 0.01f64..0.99,
            delta in 0.0f64..10.0, c1 in 0.1f64..5.0, c2 in 0.1f64..5.0,
        ) {
            let sets = LayerSets::new(2, [], [1]).unwrap();
            let dims = [n0, n1, n2];
            let a = check_quant_conditions(&dims, &sets, k, alpha, delta, c1, c2).unwrap();
            let b = check_quant_conditions(&dims, &sets, k + dk, alpha, delta, c1, c2).unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!(!x.pass || y.pass);
            }
        }

        #[test]
        fn error_bound_is_monotone(
            c1 in 0.0f64..4.0, dc in 0.0f64..2.0, m in 1usize..8, xi in 0.0f64..0.9, dxi in 0.0f64..0.09,
        ) {
            let base = error_bound(c1, m, xi).unwrap();
            prop_assert!(error_bound(c1 + dc, m, xi).unwrap() >= base);
            prop_assert!(error_bound(c1, m, xi + dxi).unwrap() >= base);
            // In depth the bound grows only when c₁²(1+ξ) ≥ 1.
            if c1 * c1 * (1.0 + xi) >= 1.0 {
                prop_assert!(error_bound(c1, m + 1, xi).unwrap() >= base);
            }
        }

        #[test]
        fn recursion_respects_envelope_under_precondition(
            sigma in 0.1f64..3.0, xi in 0.01f64..0.99,
            f in proptest::array::uniform4(0.0f64..1.0), layout in 0usize..4,
        ) {
            let sets = match layout {
                0 => LayerSets::new(4, [1, 2], []).unwrap(),
                1 => LayerSets::new(4, [], [1]).unwrap(),
                2 => LayerSets::new(5, [1], [2, 4]).unwrap(),
                _ => LayerSets::new(3, [], []).unwrap(),
            };
            let eps = [f[0] * xi / 2.0, f[1] * xi * xi / 2.0, f[2] * xi / 2.0, f[3] * xi * xi / 2.0];
            let r = error_recursion(sigma, &sets, eps, xi).unwrap();
            prop_assert!(r.precondition);
            prop_assert!(r.within_envelope);
        }
    }
}
