//! Randomized greedy post-training compression for bias-free MLPs and
//! circular-padding CNNs.
//!
//! The crate covers the whole pipeline: train a dense network ([`train`]),
//! prune or quantize it layer by layer with exact two-point scores
//! ([`compress`]), check the width conditions and error bounds that make such
//! compression possible ([`bounds`]), and run width sweeps ([`harness`]).
//! Convolutions enter through their doubly block circulant matrices
//! ([`conv`]).
//!
//! ```
//! use wide_compress::prelude::*;
//!
//! let net = init_glorot(&[4, 64, 1], &[Activation::Relu, Activation::Identity], 7).unwrap();
//! let batch: Vec<Vec<f64>> = (0..16).map(|i| vec![0.1 * (i as f64 % 3.0), 0.2, -0.1, 0.05]).collect();
//! let plan = CompressionPlan::prune(LayerSets::new(2, [1], []).unwrap(), 0.3, 0.9, batch, 11);
//! let compressed = compress_network(&net, &plan).unwrap();
//! assert_eq!(compressed.net.weights(1), net.weights(1));
//! ```

pub mod activation;
pub mod bounds;
pub mod compress;
pub mod conv;
pub mod data;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod mlp;
pub mod model_io;
pub mod quant;
pub mod rng;
pub mod train;

pub use error::{Error, Result};

/// The commonly used types in one import.
pub mod prelude {
    pub use crate::activation::Activation;
    pub use crate::bounds::{BoundInputs, BoundReport};
    pub use crate::compress::{
        compress_network, CompressedNetwork, CompressionPlan, LayerSets, Mode,
    };
    pub use crate::conv::{Cnn, ConvLayer, FeatureMap};
    pub use crate::data::Dataset;
    pub use crate::error::{Error, Result};
    pub use crate::linalg::{project_ball, Matrix};
    pub use crate::mlp::{Layer, Mlp};
    pub use crate::train::{init_glorot, train, LossKind, TrainConfig};
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/networks.md")]
    mod networks {}
    #[doc = include_str!("../../../book/src/quantization.md")]
    mod quantization {}
    #[doc = include_str!("../../../book/src/greedy.md")]
    mod greedy {}
    #[doc = include_str!("../../../book/src/structured.md")]
    mod structured {}
    #[doc = include_str!("../../../book/src/convolutions.md")]
    mod convolutions {}
    #[doc = include_str!("../../../book/src/bounds.md")]
    mod bounds {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
