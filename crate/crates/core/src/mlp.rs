//! Bias-free multilayer perceptrons and their forward passes.

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::linalg::{norm, project_ball_in_place, Matrix};

/// One affine-free layer `z ↦ φ(W z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub activation: Activation,
}

/// `x ↦ φ_m(W_m φ_{m-1}(… φ_1(W_1 x)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Layer>,
}

impl Mlp {
    /// Checks that consecutive weight shapes chain up.
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a network needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[1].weights.cols() != pair[0].weights.rows() {
                return Err(Error::DimensionMismatch {
                    context: "consecutive layer widths",
                    expected: pair[0].weights.rows(),
                    found: pair[1].weights.cols(),
                });
            }
        }
        Ok(Mlp { layers })
    }

    pub fn from_parts(weights: Vec<Matrix>, activations: Vec<Activation>) -> Result<Self> {
        if weights.len() != activations.len() {
            return Err(Error::DimensionMismatch {
                context: "activations per layer",
                expected: weights.len(),
                found: activations.len(),
            });
        }
        Mlp::new(
            weights
                .into_iter()
                .zip(activations)
                .map(|(weights, activation)| Layer {
                    weights,
                    activation,
                })
                .collect(),
        )
    }

    /// Depth `m`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// `[n_1, …, n_{m+1}]`.
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].weights.cols()];
        d.extend(self.layers.iter().map(|l| l.weights.rows()));
        d
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].weights.rows()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Zero-based layer access.
    pub fn layer(&self, idx: usize) -> &Layer {
        &self.layers[idx]
    }

    pub fn weights(&self, idx: usize) -> &Matrix {
        &self.layers[idx].weights
    }

    pub fn weights_mut(&mut self, idx: usize) -> &mut Matrix {
        &mut self.layers[idx].weights
    }

    pub fn activations(&self) -> Vec<Activation> {
        self.layers.iter().map(|l| l.activation).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len()).sum()
    }

    /// Every post-activation output `z^1, …, z^m`.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        let mut outs: Vec<Vec<f64>> = Vec::with_capacity(self.depth());
        for layer in &self.layers {
            let input = outs.last().map_or(x, Vec::as_slice);
            let mut z = layer.weights.matvec_unchecked(input);
            layer.activation.apply_slice(&mut z);
            outs.push(z);
        }
        Ok(outs)
    }

    /// Final output `Φ(x)`.
    pub fn output(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.output_from(0, x.to_vec()))
    }

    /// Runs layers `start..m` (zero-based) on `z`.
    pub(crate) fn output_from(&self, start: usize, mut z: Vec<f64>) -> Vec<f64> {
        for layer in &self.layers[start..] {
            z = layer.weights.matvec_unchecked(&z);
            layer.activation.apply_slice(&mut z);
        }
        z
    }

    /// Forward pass with ℓ₂-ball projections: `ẑ^ℓ = [φ_ℓ(W_ℓ ẑ^{ℓ-1})]_{κ_ℓ}`
    /// wherever `kappa[ℓ]` carries a radius.
    ///
    /// The returned outputs are the projected ones. Inputs outside the unit
    /// ball are accepted with a warning.
    pub fn forward_projected(&self, kappa: &[Option<f64>], x: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(x)?;
        if kappa.len() != self.depth() {
            return Err(Error::DimensionMismatch {
                context: "projection radii",
                expected: self.depth(),
                found: kappa.len(),
            });
        }
        if norm(x) > 1.0 + 1e-12 {
            log::warn!("input norm {} exceeds the unit ball", norm(x));
        }
        let mut outs: Vec<Vec<f64>> = Vec::with_capacity(self.depth());
        for (layer, radius) in self.layers.iter().zip(kappa) {
            let input = outs.last().map_or(x, Vec::as_slice);
            let mut z = layer.weights.matvec_unchecked(input);
            layer.activation.apply_slice(&mut z);
            if let Some(k) = radius {
                project_ball_in_place(&mut z, *k);
            }
            outs.push(z);
        }
        Ok(outs)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        Ok(())
    }
}
