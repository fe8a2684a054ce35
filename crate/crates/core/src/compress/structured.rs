//! Gate matrices and the bottleneck column merge.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mlp::Mlp;

/// `G(z; S) = I + (z − 1)·P_S`, kept as `(S, z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    n: usize,
    indices: Vec<usize>,
    z: f64,
}

impl GateMatrix {
    pub fn new(n: usize, indices: impl IntoIterator<Item = usize>, z: f64) -> Result<Self> {
        let mut indices: Vec<usize> = indices.into_iter().collect();
        indices.sort_unstable();
        indices.dedup();
        if let Some(bad) = indices.iter().find(|i| **i >= n) {
            return Err(Error::SiteOutOfRange { index: *bad, len: n });
        }
        if !z.is_finite() {
            return Err(Error::NonFinite("gate value"));
        }
        Ok(GateMatrix { n, indices, z })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn gate(&self) -> f64 {
        self.z
    }

    /// `v ← G v`.
    pub fn apply(&self, v: &mut [f64]) {
        assert_eq!(v.len(), self.n, "gate dimension");
        for i in &self.indices {
            v[*i] *= self.z;
        }
    }

    /// `W ← W G`: scales the columns in `S`.
    pub fn apply_columns(&self, w: &mut Matrix) -> Result<()> {
        if w.cols() != self.n {
            return Err(Error::DimensionMismatch {
                context: "column gate",
                expected: self.n,
                found: w.cols(),
            });
        }
        for i in 0..w.rows() {
            for j in &self.indices {
                let v = w.get(i, *j) * self.z;
                w.set(i, *j, v);
            }
        }
        Ok(())
    }

    /// `W ← G W`: scales the rows in `S`.
    pub fn apply_rows(&self, w: &mut Matrix) -> Result<()> {
        if w.rows() != self.n {
            return Err(Error::DimensionMismatch {
                context: "row gate",
                expected: self.n,
                found: w.rows(),
            });
        }
        for i in &self.indices {
            for j in 0..w.cols() {
                let v = w.get(*i, j) * self.z;
                w.set(*i, j, v);
            }
        }
        Ok(())
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::identity(self.n);
        for i in &self.indices {
            m.set(*i, *i, self.z);
        }
        m
    }
}

/// Replaces the columns of `W_{ℓ+1}` fed by the zero rows `rows` of `W_ℓ`
/// (`layer` = ℓ, 1-based) with their sum, kept at the smallest index.
///
/// Every such row outputs the constant `φ_ℓ(0)`, so only the sum of those
/// columns matters. When `φ_ℓ(0) = 0` the merged column is zeroed too.
pub fn merge_bottleneck_columns(net: &mut Mlp, layer: usize, rows: &[usize]) -> Result<()> {
    if layer == 0 || layer >= net.depth() {
        return Err(Error::invalid(format!(
            "layer {layer} has no successor in a depth-{} network",
            net.depth()
        )));
    }
    if rows.is_empty() {
        return Ok(());
    }
    let li = layer - 1;
    let w = net.weights(li);
    let mut u: Vec<usize> = rows.to_vec();
    u.sort_unstable();
    u.dedup();
    if let Some(bad) = u.iter().find(|i| **i >= w.rows()) {
        return Err(Error::SiteOutOfRange { index: *bad, len: w.rows() });
    }
    let nonzero: Vec<usize> = u
        .iter()
        .copied()
        .filter(|i| w.row(*i).iter().any(|v| *v != 0.0))
        .collect();
    if !nonzero.is_empty() {
        return Err(Error::RowsNotZero { layer, rows: nonzero });
    }
    let keep_sum = !net.layer(li).activation.zero_preserving();
    let next = net.weights_mut(li + 1);
    let target = u[0];
    for k in 0..next.rows() {
        let sum: f64 = u.iter().map(|i| next.get(k, *i)).sum();
        for i in &u {
            next.set(k, *i, 0.0);
        }
        next.set(k, target, if keep_sum { sum } else { 0.0 });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::compress::layer_sparsity;
    use crate::train::init_glorot;

    #[test]
    fn gate_algebra() {
        let g = GateMatrix::new(4, [1, 3], 1.0).unwrap();
        let mut v = vec![1.0, 2.0, 3.0, 4.0];
        g.apply(&mut v);
        assert_eq!(v, vec![1.0, 2.0, 3.0, 4.0]);
        let g = GateMatrix::new(4, [1, 3], 0.0).unwrap();
        g.apply(&mut v);
        assert_eq!(v, vec![1.0, 0.0, 3.0, 0.0]);
        assert!(GateMatrix::new(4, [4], 0.0).is_err());

        let mut w = Matrix::new(2, 4, vec![1.0; 8]).unwrap();
        g.apply_columns(&mut w).unwrap();
        assert_eq!(layer_sparsity(1, &w).zero_cols, 2);
        let mut w = Matrix::new(4, 2, vec![1.0; 8]).unwrap();
        g.apply_rows(&mut w).unwrap();
        assert_eq!(layer_sparsity(1, &w).zero_rows, 2);
        assert_eq!(w, g.to_matrix().matmul(&Matrix::new(4, 2, vec![1.0; 8]).unwrap()).unwrap());
    }

    fn merged_outputs_agree(act: Activation) {
        let mut net = init_glorot(&[3, 6, 2], &[act, Activation::Identity], 4).unwrap();
        let gate = GateMatrix::new(6, [1, 2, 4], 0.0).unwrap();
        gate.apply_rows(net.weights_mut(0)).unwrap();
        let mut merged = net.clone();
        merge_bottleneck_columns(&mut merged, 1, &[4, 1, 2]).unwrap();
        let xs = [[0.1, 0.2, -0.3], [0.5, -0.5, 0.0]];
        for x in xs {
            let a = net.output(&x).unwrap();
            let b = merged.output(&x).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() <= 1e-12);
            }
        }
        let s = layer_sparsity(2, merged.weights(1));
        let want = if act.zero_preserving() { 3 } else { 2 };
        assert_eq!(s.zero_cols, want);
    }

    #[test]
    fn merge_relu_and_sigmoid() {
        merged_outputs_agree(Activation::Relu);
        merged_outputs_agree(Activation::Sigmoid);
    }

    #[test]
    fn merge_rejects_live_rows_and_accepts_empty() {
        let mut net = init_glorot(&[3, 4, 2], &[Activation::Relu, Activation::Identity], 1).unwrap();
        let before = net.clone();
        merge_bottleneck_columns(&mut net, 1, &[]).unwrap();
        assert_eq!(net, before);
        assert!(matches!(
            merge_bottleneck_columns(&mut net, 1, &[0]),
            Err(Error::RowsNotZero { layer: 1, .. })
        ));
    }
}
