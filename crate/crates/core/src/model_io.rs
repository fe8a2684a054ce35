//! The JSON model format shared by every tool:
//!
//! ```json
//! {"dims": [2, 3, 1], "activations": ["relu", "identity"],
//!  "weights": [[...6 numbers...], [...3 numbers...]], "kappa": null}
//! ```
//!
//! Weights are row-major, one flat array per layer. `kappa` is either `null`
//! or one entry per layer, each a radius or `null`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::mlp::Mlp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub dims: Vec<usize>,
    pub activations: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    #[serde(default)]
    pub kappa: Option<Vec<Option<f64>>>,
}

impl ModelFile {
    pub fn from_network(net: &Mlp, kappa: Option<&[Option<f64>]>) -> Self {
        ModelFile {
            dims: net.dims(),
            activations: net.activations().iter().map(ToString::to_string).collect(),
            weights: net.layers().iter().map(|l| l.weights.data().to_vec()).collect(),
            // Infinite radii mean "no projection" and serialize as null.
            kappa: kappa.map(|k| {
                k.iter()
                    .map(|r| r.filter(|v| v.is_finite()))
                    .collect()
            }),
        }
    }

    pub fn to_network(&self) -> Result<(Mlp, Option<Vec<Option<f64>>>)> {
        let m = self.weights.len();
        if self.dims.len() != m + 1 {
            return Err(Error::DimensionMismatch {
                context: "model dims",
                expected: m + 1,
                found: self.dims.len(),
            });
        }
        if self.activations.len() != m {
            return Err(Error::DimensionMismatch {
                context: "model activations",
                expected: m,
                found: self.activations.len(),
            });
        }
        let mut mats = Vec::with_capacity(m);
        for (l, data) in self.weights.iter().enumerate() {
            mats.push(Matrix::new(self.dims[l + 1], self.dims[l], data.clone())?);
        }
        let acts = self
            .activations
            .iter()
            .map(|s| s.parse::<Activation>())
            .collect::<Result<Vec<_>>>()?;
        if let Some(k) = &self.kappa {
            if k.len() != m {
                return Err(Error::DimensionMismatch {
                    context: "model kappa",
                    expected: m,
                    found: k.len(),
                });
            }
            if k.iter().flatten().any(|r| !(*r > 0.0)) {
                return Err(Error::invalid("projection radii must be positive"));
            }
        }
        Ok((Mlp::from_parts(mats, acts)?, self.kappa.clone()))
    }
}

pub fn to_json(net: &Mlp, kappa: Option<&[Option<f64>]>) -> Result<String> {
    Ok(serde_json::to_string(&ModelFile::from_network(net, kappa))?)
}

pub fn from_json(s: &str) -> Result<(Mlp, Option<Vec<Option<f64>>>)> {
    serde_json::from_str::<ModelFile>(s)?.to_network()
}

pub fn save_model(path: impl AsRef<Path>, net: &Mlp, kappa: Option<&[Option<f64>]>) -> Result<()> {
    fs::write(path, to_json(net, kappa)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(Mlp, Option<Vec<Option<f64>>>)> {
    from_json(&fs::read_to_string(path)?)
}
