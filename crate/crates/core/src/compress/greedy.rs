//! The greedy loops.

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;

use super::score::{reference_outputs, upstream_inputs, LayerScorer, ReferenceOutputs, TwoPoint};
use super::structured::{merge_bottleneck_columns, GateMatrix};
use super::{CompressedNetwork, CompressionPlan, GateRecord, LayerLog, LayerRole, Mode};
use crate::error::{Error, Result};
use crate::mlp::Mlp;
use crate::quant::rounding_levels;
use crate::rng::{derive_seed, rng_from};

/// Compresses every layer named in the plan, from the input side up.
///
/// `c` is the largest spectral norm of the dense layers, measured once up
/// front; compressed layers get radius `c^ℓ`, bottleneck successors
/// `c^{ℓ+1}`. Untouched layers are copied as they are.
pub fn compress_network(dense: &Mlp, plan: &CompressionPlan) -> Result<CompressedNetwork> {
    plan.validate(dense)?;
    let m = dense.depth();
    let c = (0..m)
        .map(|l| dense.weights(l).spectral_norm())
        .fold(0.0_f64, f64::max);
    let radius = |depth: usize| (c > 0.0).then(|| c.powi(depth as i32));
    let reference = reference_outputs(dense, &plan.score_batch)?;
    let mut working = dense.clone();
    let mut kappa = vec![None; m];
    let mut logs = Vec::new();
    for layer in 1..=m {
        let role = plan.sets.role(layer);
        if !matches!(role, LayerRole::Wide | LayerRole::Bottleneck) {
            continue;
        }
        let log = if plan.structured {
            compress_layer_structured(&mut working, &kappa, plan, layer, &reference)?
        } else {
            compress_layer_unstructured(&mut working, &kappa, plan, layer, &reference)?
        };
        log::info!(
            "layer {layer} ({:?}): {} steps, nnz fraction {:.4}",
            role,
            log.steps,
            log.nnz_fraction
        );
        logs.push(log);
        match role {
            LayerRole::Wide => kappa[layer - 1] = radius(layer),
            _ => kappa[layer] = radius(layer + 1),
        }
    }
    Ok(CompressedNetwork {
        net: working,
        kappa,
        use_projection: plan.use_projection,
        c,
        logs,
    })
}

struct LayerSetup {
    li: usize,
    role: LayerRole,
    scorer: LayerScorer,
    seed: u64,
}

fn setup(working: &Mlp, kappa: &[Option<f64>], plan: &CompressionPlan, layer: usize, reference: &ReferenceOutputs) -> Result<LayerSetup> {
    plan.validate(working)?;
    let role = plan.sets.role(layer);
    if !matches!(role, LayerRole::Wide | LayerRole::Bottleneck) {
        return Err(Error::LayerSets(format!("layer {layer} is not in the wide or bottleneck set")));
    }
    if reference.max_depth() != working.depth() || reference.batch_len() != plan.score_batch.len() {
        return Err(Error::invalid("reference outputs do not match the plan"));
    }
    let li = layer - 1;
    let (di, target) = match &plan.score_labels {
        Some(labels) => (working.depth() - 1, labels.clone()),
        None => {
            let di = if role == LayerRole::Wide { li } else { li + 1 };
            (di, reference.depth(di + 1).to_vec())
        }
    };
    let kap = plan.use_projection.then_some(kappa);
    let inputs = upstream_inputs(working, kap, li, reference.inputs())?;
    let scorer = LayerScorer::new(working, li, di, &inputs, target);
    Ok(LayerSetup {
        li,
        role,
        scorer,
        seed: derive_seed(plan.seed, &[layer as u64]),
    })
}

fn steps_for(alpha: f64, candidates: usize, layer: usize) -> Result<usize> {
    let steps = (alpha * candidates as f64).floor() as usize;
    if steps == 0 {
        return Err(Error::EmptyCandidates { layer });
    }
    Ok(steps.min(candidates))
}

/// Candidate values of a weight under the plan's mode.
fn weight_dist(w: f64, mode: Mode, grid_scale: f64) -> Result<TwoPoint> {
    match mode {
        Mode::Prune { p } => Ok(TwoPoint { v0: 0.0, v1: w / p, p1: p }),
        Mode::Quantize { k } => {
            if grid_scale == 0.0 {
                return Ok(TwoPoint { v0: 0.0, v1: 0.0, p1: 0.0 });
            }
            let r = rounding_levels(w, grid_scale, k)?;
            Ok(TwoPoint {
                v0: r.low,
                v1: r.high,
                p1: r.p_high,
            })
        }
    }
}

/// Orders candidates by score, then by index. Scores are nonnegative, so
/// their bit patterns sort like the values.
struct Ranking {
    set: BTreeSet<(u64, usize)>,
    key: Vec<Option<u64>>,
}

impl Ranking {
    fn new(n: usize) -> Self {
        Ranking {
            set: BTreeSet::new(),
            key: vec![None; n],
        }
    }

    fn update(&mut self, idx: usize, score: f64) -> Result<()> {
        if !score.is_finite() {
            return Err(Error::NonFinite("score"));
        }
        if let Some(old) = self.key[idx].take() {
            self.set.remove(&(old, idx));
        }
        let k = score.to_bits();
        self.key[idx] = Some(k);
        self.set.insert((k, idx));
        Ok(())
    }

    fn pop(&mut self) -> Option<(f64, usize)> {
        let (k, idx) = self.set.pop_first()?;
        self.key[idx] = None;
        Some((f64::from_bits(k), idx))
    }
}

fn new_log(plan: &CompressionPlan, layer: usize, role: LayerRole, seed: u64, candidates: usize, steps: usize) -> LayerLog {
    LayerLog {
        layer,
        role,
        mode: plan.mode,
        alpha: plan.alpha,
        structured: plan.structured,
        block: plan.block,
        seed,
        grid_scale: None,
        candidates,
        steps,
        refreshes: 0,
        num_compressed: 0,
        num_zeroed: 0,
        nnz_fraction: 1.0,
        score_trace: Vec::with_capacity(steps),
        chosen: Vec::with_capacity(steps),
        values: Vec::with_capacity(steps),
        gates: Vec::new(),
        merged_rows: Vec::new(),
    }
}

/// Weight-by-weight greedy compression of layer `layer` (1-based).
///
/// `kappa` holds the radii of the layers compressed so far; with projections
/// on they are applied to the inputs this layer sees. A bottleneck layer is
/// scored through its successor, which stays untouched.
pub fn compress_layer_unstructured(
    working: &mut Mlp,
    kappa: &[Option<f64>],
    plan: &CompressionPlan,
    layer: usize,
    reference: &ReferenceOutputs,
) -> Result<LayerLog> {
    let LayerSetup { li, role, mut scorer, seed } = setup(working, kappa, plan, layer, reference)?;
    let (rows, cols) = (working.weights(li).rows(), working.weights(li).cols());
    let n = rows * cols;
    let steps = steps_for(plan.alpha, n, layer)?;
    let grid_scale = match plan.mode {
        Mode::Quantize { .. } => working.weights(li).inf_norm(),
        Mode::Prune { .. } => 0.0,
    };
    // Only the written row's scores move when the layer is compared against
    // its own output.
    let row_local = role == LayerRole::Wide && plan.score_labels.is_none();
    let cadence = plan.rescore.cadence(n, row_local);
    let mut log = new_log(plan, layer, role, seed, n, steps);
    if let Mode::Quantize { .. } = plan.mode {
        log.grid_scale = Some(grid_scale);
    }
    let mut rng = rng_from(seed);
    let mut live = vec![true; n];
    let mut ranking = Ranking::new(n);
    let mut dirty_rows: BTreeSet<usize> = BTreeSet::new();
    for step in 0..steps {
        if step % cadence == 0 {
            log.refreshes += 1;
            scorer.refresh_downstream();
            let todo: Vec<usize> = if step == 0 || !row_local {
                (0..n).filter(|i| live[*i]).collect()
            } else {
                dirty_rows
                    .iter()
                    .flat_map(|r| r * cols..(r + 1) * cols)
                    .filter(|i| live[*i])
                    .collect()
            };
            dirty_rows.clear();
            let w = working.weights(li);
            let scorer_ref = &scorer;
            let scores: Vec<Result<(usize, f64)>> = todo
                .par_iter()
                .map(|&idx| {
                    let dist = weight_dist(w.data()[idx], plan.mode, grid_scale)?;
                    Ok((idx, scorer_ref.weight_score(w, idx / cols, idx % cols, dist)))
                })
                .collect();
            for s in scores {
                let (idx, score) = s?;
                ranking.update(idx, score)?;
            }
        }
        let (score, idx) = ranking.pop().ok_or(Error::EmptyCandidates { layer })?;
        live[idx] = false;
        let current = working.weights(li).data()[idx];
        let dist = weight_dist(current, plan.mode, grid_scale)?;
        dist.check_unbiased(current)?;
        let t = if rng.random::<f64>() < dist.p1 { dist.v1 } else { dist.v0 };
        working.weights_mut(li).data_mut()[idx] = t;
        let row = idx / cols;
        scorer.recompute_row(working.weights(li), row);
        dirty_rows.insert(row);
        log.score_trace.push(score);
        log.chosen.push(idx);
        log.values.push(t);
        log.num_compressed += 1;
        if t == 0.0 {
            log.num_zeroed += 1;
        }
    }
    let w = working.weights(li);
    log.nnz_fraction = w.nnz() as f64 / w.len() as f64;
    Ok(log)
}

/// Block-by-block structured pruning of layer `layer` (1-based): column
/// blocks for a wide layer, row blocks for a bottleneck layer. Each chosen
/// block is scaled by a gate drawn from `{0, 1/p}`.
pub fn compress_layer_structured(
    working: &mut Mlp,
    kappa: &[Option<f64>],
    plan: &CompressionPlan,
    layer: usize,
    reference: &ReferenceOutputs,
) -> Result<LayerLog> {
    let p = match plan.mode {
        Mode::Prune { p } => p,
        Mode::Quantize { .. } => return Err(Error::invalid("structured compression only prunes")),
    };
    let LayerSetup { li, role, mut scorer, seed } = setup(working, kappa, plan, layer, reference)?;
    let w = working.weights(li);
    let columns = role == LayerRole::Wide;
    let width = if columns { w.cols() } else { w.rows() };
    if width % plan.block != 0 {
        return Err(Error::invalid(format!(
            "layer {layer}: {width} {} do not split into blocks of {}",
            if columns { "columns" } else { "rows" },
            plan.block
        )));
    }
    let n_blocks = width / plan.block;
    let steps = steps_for(plan.alpha, n_blocks, layer)?;
    let cadence = plan.rescore.cadence(n_blocks, false);
    let dist = TwoPoint { v0: 0.0, v1: 1.0 / p, p1: p };
    let mut log = new_log(plan, layer, role, seed, n_blocks, steps);
    let mut rng = rng_from(seed);
    let mut live = vec![true; n_blocks];
    let mut ranking = Ranking::new(n_blocks);
    let span = |b: usize| b * plan.block..(b + 1) * plan.block;
    for step in 0..steps {
        if step % cadence == 0 {
            log.refreshes += 1;
            scorer.refresh_downstream();
            let todo: Vec<usize> = (0..n_blocks).filter(|b| live[*b]).collect();
            let w = working.weights(li);
            let scorer_ref = &scorer;
            let scores: Vec<(usize, f64)> = todo
                .par_iter()
                .map(|&b| {
                    let s = if columns {
                        scorer_ref.columns_score(w, span(b), dist)
                    } else {
                        scorer_ref.rows_score(span(b), dist)
                    };
                    (b, s)
                })
                .collect();
            for (b, s) in scores {
                ranking.update(b, s)?;
            }
        }
        let (score, b) = ranking.pop().ok_or(Error::EmptyCandidates { layer })?;
        live[b] = false;
        let t = if rng.random::<f64>() < dist.p1 { dist.v1 } else { dist.v0 };
        let w = working.weights_mut(li);
        if columns {
            GateMatrix::new(w.cols(), span(b), t)?.apply_columns(w)?;
            scorer.recompute_all(working.weights(li));
        } else {
            GateMatrix::new(w.rows(), span(b), t)?.apply_rows(w)?;
            for i in span(b) {
                scorer.recompute_row(working.weights(li), i);
            }
        }
        log.score_trace.push(score);
        log.chosen.push(b);
        log.values.push(t);
        log.gates.push(GateRecord { block: b, gate: t });
        log.num_compressed += 1;
        if t == 0.0 {
            log.num_zeroed += 1;
        }
    }
    if !columns && plan.merge_bottleneck {
        let w = working.weights(li);
        let zero_rows: Vec<usize> = (0..w.rows())
            .filter(|i| w.row(*i).iter().all(|v| *v == 0.0))
            .collect();
        merge_bottleneck_columns(working, layer, &zero_rows)?;
        log.merged_rows = zero_rows;
    }
    let w = working.weights(li);
    log.nnz_fraction = w.nnz() as f64 / w.len() as f64;
    Ok(log)
}
