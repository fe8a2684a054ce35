//! Randomized greedy compression.
//!
//! Layers are visited from the input side to the output side. A layer in the
//! *wide* set is compressed against its own output; a layer in the
//! *bottleneck* set is compressed against the output of the layer after it,
//! which is left alone. Every step replaces the site with the smallest exact
//! two-point score by an unbiased random value: `0` or `w/p` when pruning,
//! the two neighbouring grid levels when quantizing.

mod greedy;
mod score;
mod structured;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mlp::Mlp;

pub use greedy::{compress_layer_structured, compress_layer_unstructured, compress_network};
pub use score::{reference_outputs, two_point_score, ReferenceOutputs, ScoreContext, Site, TwoPoint};
pub use structured::{merge_bottleneck_columns, GateMatrix};

/// What happens to a layer (1-based indices throughout this module).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerRole {
    Copy,
    Wide,
    Bottleneck,
    /// The layer right after a bottleneck layer.
    Successor,
}

/// The wide set `𝒲` and bottleneck set `ℬ` of a depth-`m` network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerSets {
    depth: usize,
    wide: BTreeSet<usize>,
    bottleneck: BTreeSet<usize>,
}

impl LayerSets {
    /// Checks `𝒲 ∩ ℬ = ∅`, `(𝒲 ∪ ℬ) ∩ (ℬ + 1) = ∅` and index ranges.
    pub fn new(
        depth: usize,
        wide: impl IntoIterator<Item = usize>,
        bottleneck: impl IntoIterator<Item = usize>,
    ) -> Result<Self> {
        let wide: BTreeSet<usize> = wide.into_iter().collect();
        let bottleneck: BTreeSet<usize> = bottleneck.into_iter().collect();
        if depth == 0 {
            return Err(Error::LayerSets("depth must be positive".into()));
        }
        if let Some(l) = wide.iter().find(|l| **l == 0 || **l > depth) {
            return Err(Error::LayerSets(format!("wide layer {l} outside 1..={depth}")));
        }
        if let Some(l) = bottleneck.iter().find(|l| **l == 0 || **l + 1 > depth) {
            return Err(Error::LayerSets(format!(
                "bottleneck layer {l} needs a successor within 1..={depth}"
            )));
        }
        if let Some(l) = wide.intersection(&bottleneck).next() {
            return Err(Error::LayerSets(format!("layer {l} is both wide and bottleneck")));
        }
        for b in &bottleneck {
            if wide.contains(&(b + 1)) || bottleneck.contains(&(b + 1)) {
                return Err(Error::LayerSets(format!(
                    "layer {} follows bottleneck layer {b} and must not be compressed",
                    b + 1
                )));
            }
        }
        Ok(LayerSets {
            depth,
            wide,
            bottleneck,
        })
    }

    pub fn empty(depth: usize) -> Self {
        LayerSets {
            depth,
            wide: BTreeSet::new(),
            bottleneck: BTreeSet::new(),
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn wide(&self) -> &BTreeSet<usize> {
        &self.wide
    }

    pub fn bottleneck(&self) -> &BTreeSet<usize> {
        &self.bottleneck
    }

    pub fn is_empty(&self) -> bool {
        self.wide.is_empty() && self.bottleneck.is_empty()
    }

    pub fn role(&self, layer: usize) -> LayerRole {
        if self.wide.contains(&layer) {
            LayerRole::Wide
        } else if self.bottleneck.contains(&layer) {
            LayerRole::Bottleneck
        } else if layer > 1 && self.bottleneck.contains(&(layer - 1)) {
            LayerRole::Successor
        } else {
            LayerRole::Copy
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Keep a weight with probability `p`, rescaled by `1/p`.
    Prune { p: f64 },
    /// Stochastic rounding onto `k` levels per sign.
    Quantize { k: usize },
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Prune { p } => write!(f, "prune(p={p})"),
            Mode::Quantize { k } => write!(f, "quantize(k={k})"),
        }
    }
}

/// How often scores are recomputed from the current weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RescoreRepr", into = "RescoreRepr")]
pub enum Rescore {
    /// Every `n` steps; `1` always uses the most recent weights.
    Every(usize),
    /// Every `⌈#candidates / 100⌉` steps.
    Speed,
    /// `1` where a refresh only touches the changed row (unstructured wide
    /// layers), [`Rescore::Speed`] elsewhere.
    Auto,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RescoreRepr {
    Steps(usize),
    Name(String),
}

impl TryFrom<RescoreRepr> for Rescore {
    type Error = String;
    fn try_from(r: RescoreRepr) -> std::result::Result<Self, String> {
        match r {
            RescoreRepr::Steps(0) => Err("rescore_every must be at least 1".into()),
            RescoreRepr::Steps(n) => Ok(Rescore::Every(n)),
            RescoreRepr::Name(s) if s == "speed" => Ok(Rescore::Speed),
            RescoreRepr::Name(s) if s == "auto" => Ok(Rescore::Auto),
            RescoreRepr::Name(s) => Err(format!("unknown rescore cadence {s:?}")),
        }
    }
}

impl From<Rescore> for RescoreRepr {
    fn from(r: Rescore) -> Self {
        match r {
            Rescore::Every(n) => RescoreRepr::Steps(n),
            Rescore::Speed => RescoreRepr::Name("speed".into()),
            Rescore::Auto => RescoreRepr::Name("auto".into()),
        }
    }
}

impl Rescore {
    pub(crate) fn cadence(self, candidates: usize, row_local: bool) -> usize {
        let speed = candidates.div_ceil(100).max(1);
        match self {
            Rescore::Every(n) => n.max(1),
            Rescore::Speed => speed,
            Rescore::Auto if row_local => 1,
            Rescore::Auto => speed,
        }
    }
}

/// Everything a compression run needs besides the dense network.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionPlan {
    pub sets: LayerSets,
    pub mode: Mode,
    pub alpha: f64,
    /// Inputs the scores are averaged over (each within the unit ball).
    pub score_batch: Vec<Vec<f64>>,
    pub rescore: Rescore,
    pub seed: u64,
    pub structured: bool,
    /// Structured block size: 1 for single neurons, `r²` for conv filters.
    pub block: usize,
    /// Project upstream outputs onto their balls while scoring, and in the
    /// compressed network's forward pass.
    pub use_projection: bool,
    /// After structured bottleneck pruning, merge the successor columns fed
    /// by zeroed rows.
    pub merge_bottleneck: bool,
    /// Score against these final-layer targets instead of the dense
    /// network's outputs.
    pub score_labels: Option<Vec<Vec<f64>>>,
}

impl CompressionPlan {
    pub fn prune(sets: LayerSets, p: f64, alpha: f64, score_batch: Vec<Vec<f64>>, seed: u64) -> Self {
        CompressionPlan::new(sets, Mode::Prune { p }, alpha, score_batch, seed)
    }

    pub fn quantize(sets: LayerSets, k: usize, alpha: f64, score_batch: Vec<Vec<f64>>, seed: u64) -> Self {
        CompressionPlan::new(sets, Mode::Quantize { k }, alpha, score_batch, seed)
    }

    pub fn new(sets: LayerSets, mode: Mode, alpha: f64, score_batch: Vec<Vec<f64>>, seed: u64) -> Self {
        CompressionPlan {
            sets,
            mode,
            alpha,
            score_batch,
            rescore: Rescore::Every(1),
            seed,
            structured: false,
            block: 1,
            use_projection: true,
            merge_bottleneck: false,
            score_labels: None,
        }
    }

    pub fn structured(mut self, block: usize) -> Self {
        self.structured = true;
        self.block = block;
        self
    }

    pub fn with_rescore(mut self, rescore: Rescore) -> Self {
        self.rescore = rescore;
        self
    }

    pub fn with_projection(mut self, on: bool) -> Self {
        self.use_projection = on;
        self
    }

    pub fn with_merge(mut self, on: bool) -> Self {
        self.merge_bottleneck = on;
        self
    }

    pub fn validate(&self, net: &Mlp) -> Result<()> {
        if self.sets.depth() != net.depth() {
            return Err(Error::LayerSets(format!(
                "layer sets are for depth {}, network has depth {}",
                self.sets.depth(),
                net.depth()
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        match self.mode {
            Mode::Prune { p } if !(p > 0.0 && p < 1.0) => {
                return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
            }
            Mode::Quantize { k: 0 } => return Err(Error::invalid("k must be at least 1")),
            Mode::Quantize { .. } if self.structured => {
                return Err(Error::invalid("structured compression only prunes"));
            }
            _ => {}
        }
        if self.block == 0 {
            return Err(Error::invalid("block size must be positive"));
        }
        if let Rescore::Every(0) = self.rescore {
            return Err(Error::invalid("rescore_every must be at least 1"));
        }
        if self.score_batch.is_empty() {
            return Err(Error::invalid("the score batch is empty"));
        }
        if let Some(x) = self.score_batch.iter().find(|x| x.len() != net.input_dim()) {
            return Err(Error::DimensionMismatch {
                context: "score batch input",
                expected: net.input_dim(),
                found: x.len(),
            });
        }
        if let Some(labels) = &self.score_labels {
            if labels.len() != self.score_batch.len() {
                return Err(Error::DimensionMismatch {
                    context: "score labels",
                    expected: self.score_batch.len(),
                    found: labels.len(),
                });
            }
            if let Some(y) = labels.iter().find(|y| y.len() != net.output_dim()) {
                return Err(Error::DimensionMismatch {
                    context: "score label width",
                    expected: net.output_dim(),
                    found: y.len(),
                });
            }
        }
        Ok(())
    }
}

/// The serializable part of a plan; the score batch comes from data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanTemplate {
    pub wide: Vec<usize>,
    pub bottleneck: Vec<usize>,
    pub mode: Mode,
    pub alpha: f64,
    /// Number of training inputs used for scoring.
    pub score_batch: usize,
    pub rescore_every: Rescore,
    pub seed: u64,
    pub structured: bool,
    pub block: usize,
    pub use_projection: bool,
    pub merge_bottleneck: bool,
    pub score_against_labels: bool,
}

impl Default for PlanTemplate {
    fn default() -> Self {
        PlanTemplate {
            wide: vec![1],
            bottleneck: vec![],
            mode: Mode::Prune { p: 0.3 },
            alpha: 0.9,
            score_batch: 64,
            rescore_every: Rescore::Every(1),
            seed: 0,
            structured: false,
            block: 1,
            use_projection: true,
            merge_bottleneck: false,
            score_against_labels: false,
        }
    }
}

impl PlanTemplate {
    pub fn instantiate(&self, depth: usize, score_batch: Vec<Vec<f64>>, seed: u64) -> Result<CompressionPlan> {
        let sets = LayerSets::new(depth, self.wide.iter().copied(), self.bottleneck.iter().copied())?;
        let mut plan = CompressionPlan::new(sets, self.mode, self.alpha, score_batch, seed)
            .with_rescore(self.rescore_every)
            .with_projection(self.use_projection)
            .with_merge(self.merge_bottleneck);
        plan.structured = self.structured;
        plan.block = self.block;
        Ok(plan)
    }
}

/// Structured gate applied during a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub block: usize,
    pub gate: f64,
}

/// What happened to one compressed layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerLog {
    pub layer: usize,
    pub role: LayerRole,
    pub mode: Mode,
    pub alpha: f64,
    pub structured: bool,
    pub block: usize,
    pub seed: u64,
    /// Quantization scale `M = ‖W‖_∞` frozen at the start of the layer.
    pub grid_scale: Option<f64>,
    pub candidates: usize,
    pub steps: usize,
    pub refreshes: usize,
    pub num_compressed: usize,
    pub num_zeroed: usize,
    pub nnz_fraction: f64,
    /// Score of the site chosen at each step.
    pub score_trace: Vec<f64>,
    /// Chosen site per step: row-major weight index, or block index.
    pub chosen: Vec<usize>,
    /// Value written per step (weight value, or gate multiplier).
    pub values: Vec<f64>,
    pub gates: Vec<GateRecord>,
    /// Rows of the layer whose successor columns were merged.
    pub merged_rows: Vec<usize>,
}

/// Sidecar written next to a compressed model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionLog {
    pub c: f64,
    pub use_projection: bool,
    pub layers: Vec<LayerLog>,
}

/// A compressed network with its projection radii and per-layer logs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedNetwork {
    pub net: Mlp,
    /// `κ_ℓ` per layer (zero-based position), `None` where no projection applies.
    pub kappa: Vec<Option<f64>>,
    /// Whether [`CompressedNetwork::output`] applies the radii.
    pub use_projection: bool,
    /// Largest spectral norm of the dense layers.
    pub c: f64,
    pub logs: Vec<LayerLog>,
}

impl CompressedNetwork {
    /// Per-layer outputs, projected when projections are enabled.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if self.use_projection {
            self.net.forward_projected(&self.kappa, x)
        } else {
            self.net.forward(x)
        }
    }

    pub fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.pop().expect("non-empty network"))
    }

    pub fn log(&self) -> CompressionLog {
        CompressionLog {
            c: self.c,
            use_projection: self.use_projection,
            layers: self.logs.clone(),
        }
    }
}

/// Nonzero and zeroed-line counts of one layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSparsity {
    pub layer: usize,
    pub nnz: usize,
    pub total: usize,
    pub nnz_fraction: f64,
    pub zero_rows: usize,
    pub zero_cols: usize,
}

pub fn layer_sparsity(layer: usize, w: &Matrix) -> LayerSparsity {
    let zero_rows = (0..w.rows()).filter(|i| w.row(*i).iter().all(|v| *v == 0.0)).count();
    let zero_cols = (0..w.cols())
        .filter(|j| (0..w.rows()).all(|i| w.get(i, *j) == 0.0))
        .count();
    LayerSparsity {
        layer,
        nnz: w.nnz(),
        total: w.len(),
        nnz_fraction: w.nnz() as f64 / w.len() as f64,
        zero_rows,
        zero_cols,
    }
}

/// Exact per-layer counts; only exact zeros count as pruned.
pub fn sparsity_report(net: &Mlp) -> Vec<LayerSparsity> {
    net.layers()
        .iter()
        .enumerate()
        .map(|(l, layer)| layer_sparsity(l + 1, &layer.weights))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        assert!(LayerSets::new(3, [1], [2]).is_ok());
        assert!(LayerSets::new(3, [2], [1]).is_err());
        assert!(LayerSets::new(3, [3], [2]).is_err());
        assert!(LayerSets::new(3, [], [3]).is_err());
        assert!(LayerSets::new(3, [2], [2]).is_err());
        assert!(LayerSets::new(3, [], [1, 2]).is_err());
        assert!(LayerSets::new(3, [0], []).is_err());
        let s = LayerSets::new(4, [3], [2]).unwrap_err();
        assert!(matches!(s, Error::LayerSets(_)));
        let s = LayerSets::new(4, [1, 3], [2]);
        assert!(s.is_err());
        let s = LayerSets::new(5, [1, 5], [2]).unwrap();
        assert_eq!(s.role(1), LayerRole::Wide);
        assert_eq!(s.role(2), LayerRole::Bottleneck);
        assert_eq!(s.role(3), LayerRole::Successor);
        assert_eq!(s.role(4), LayerRole::Copy);
        assert_eq!(s.role(5), LayerRole::Wide);
    }

    #[test]
    fn rescore_serde() {
        let r: Rescore = serde_json::from_str("\"speed\"").unwrap();
        assert_eq!(r, Rescore::Speed);
        let r: Rescore = serde_json::from_str("4").unwrap();
        assert_eq!(r, Rescore::Every(4));
        assert!(serde_json::from_str::<Rescore>("0").is_err());
        assert_eq!(serde_json::to_string(&Rescore::Auto).unwrap(), "\"auto\"");
        assert_eq!(Rescore::Speed.cadence(50_000, false), 500);
        assert_eq!(Rescore::Auto.cadence(50_000, true), 1);
    }

    #[test]
    fn template_round_trip() {
        let t = PlanTemplate::default();
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<PlanTemplate>(&s).unwrap(), t);
        let partial: PlanTemplate = serde_json::from_str(r#"{"mode":{"quantize":{"k":4}},"wide":[2]}"#).unwrap();
        assert_eq!(partial.mode, Mode::Quantize { k: 4 });
        assert_eq!(partial.alpha, 0.9);
    }

    #[test]
    fn sparsity_counts() {
        let z = Matrix::zeros(3, 4);
        let s = layer_sparsity(1, &z);
        assert_eq!((s.nnz, s.nnz_fraction, s.zero_rows, s.zero_cols), (0, 0.0, 3, 4));
        let d = Matrix::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(layer_sparsity(1, &d).nnz_fraction, 1.0);
    }
}
