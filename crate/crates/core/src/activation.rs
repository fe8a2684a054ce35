//! Entrywise activation functions.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const DEFAULT_SOFTPLUS_BETA: f64 = 10.0;

/// An entrywise nonlinearity. Every variant is 1-Lipschitz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
    /// `log(1 + e^{βx}) / β`, a smooth surrogate for relu.
    Softplus { beta: f64 },
}

impl Activation {
    pub fn softplus() -> Self {
        Activation::Softplus {
            beta: DEFAULT_SOFTPLUS_BETA,
        }
    }

    pub fn all_kinds() -> [Activation; 5] {
        [
            Activation::Identity,
            Activation::Relu,
            Activation::Tanh,
            Activation::Sigmoid,
            Activation::softplus(),
        ]
    }

    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::Softplus { beta } => {
                let t = beta * x;
                // log1p(e^t) = t + log1p(e^{-t}) keeps large t from overflowing.
                if t > 0.0 {
                    (t + (-t).exp().ln_1p()) / beta
                } else {
                    t.exp().ln_1p() / beta
                }
            }
        }
    }

    /// Derivative with respect to the pre-activation. Relu uses 0 at the kink.
    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Softplus { beta } => sigmoid(beta * x),
        }
    }

    pub fn apply_slice(self, v: &mut [f64]) {
        if self != Activation::Identity {
            v.iter_mut().for_each(|x| *x = self.apply(*x));
        }
    }

    /// Whether `φ(0) = 0`. Sigmoid and (unshifted) softplus fail this.
    pub fn zero_preserving(self) -> bool {
        self.apply(0.0) == 0.0
    }

    pub fn lipschitz(self) -> f64 {
        1.0
    }

    /// Supremum of `|φ''|`, or `None` where it does not exist (relu).
    pub fn second_derivative_bound(self) -> Option<f64> {
        match self {
            Activation::Identity => Some(0.0),
            Activation::Relu => None,
            Activation::Tanh => Some(4.0 / (3.0 * 3f64.sqrt())),
            Activation::Sigmoid => Some(1.0 / (6.0 * 3f64.sqrt())),
            Activation::Softplus { beta } => Some(beta / 4.0),
        }
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Identity => f.write_str("identity"),
            Activation::Relu => f.write_str("relu"),
            Activation::Tanh => f.write_str("tanh"),
            Activation::Sigmoid => f.write_str("sigmoid"),
            Activation::Softplus { beta } if *beta == DEFAULT_SOFTPLUS_BETA => {
                f.write_str("softplus")
            }
            Activation::Softplus { beta } => write!(f, "softplus:{beta}"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "identity" | "linear" => return Ok(Activation::Identity),
            "relu" => return Ok(Activation::Relu),
            "tanh" => return Ok(Activation::Tanh),
            "sigmoid" => return Ok(Activation::Sigmoid),
            "softplus" => return Ok(Activation::softplus()),
            _ => {}
        }
        if let Some(b) = s.strip_prefix("softplus:") {
            let beta: f64 = b
                .parse()
                .map_err(|_| Error::invalid(format!("bad softplus beta {b:?}")))?;
            if !(beta > 0.0 && beta.is_finite()) {
                return Err(Error::invalid("softplus beta must be positive"));
            }
            return Ok(Activation::Softplus { beta });
        }
        Err(Error::invalid(format!("unknown activation {s:?}")))
    }
}
