//! Unbiased stochastic rounding onto the grid `{±i·M/k : i = 0..k}`.

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Absolute tolerance used when testing grid membership.
pub const GRID_TOL: f64 = 1e-12;

/// The two neighbouring grid levels of a weight and the chance of rounding up
/// in magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundingLevels {
    pub low: f64,
    pub high: f64,
    pub p_high: f64,
}

impl RoundingLevels {
    pub fn mean(&self) -> f64 {
        self.low + self.p_high * (self.high - self.low)
    }
}

fn check_scale(m: f64, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("quantization needs k ≥ 1"));
    }
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::invalid(format!("quantization scale must be positive, got {m}")));
    }
    Ok(())
}

#[inline]
fn level(i: usize, m: f64, k: usize) -> f64 {
    i as f64 * m / k as f64
}

/// Smallest `ℓ ∈ 1..=k` with `|w| ≤ ℓ·M/k`, and the resulting levels.
///
/// `high = sign(w)·ℓM/k` is drawn with probability `1 − ℓ + k|w|/M`, `low =
/// sign(w)·(ℓ−1)M/k` otherwise, with `sign(0) = +1`. The probability is
/// computed as `(|w| − |low|)/(|high| − |low|)` and pinned to exactly 0 or 1
/// when `|w|` sits on a level.
///
/// ```
/// use wide_compress::quant::rounding_levels;
/// let r = rounding_levels(0.3, 1.0, 2).unwrap();
/// assert_eq!((r.low, r.high), (0.0, 0.5));
/// assert!((r.p_high - 0.6).abs() < 1e-15);
/// ```
pub fn rounding_levels(w: f64, m: f64, k: usize) -> Result<RoundingLevels> {
    check_scale(m, k)?;
    if !w.is_finite() {
        return Err(Error::NonFinite("weight"));
    }
    let a = w.abs();
    if a > m {
        return Err(Error::OutsideScale { value: w, bound: m });
    }
    let mut l = ((a * k as f64 / m).ceil() as usize).clamp(1, k);
    while l > 1 && a <= level(l - 1, m, k) {
        l -= 1;
    }
    while l < k && a > level(l, m, k) {
        l += 1;
    }
    let hi = level(l, m, k);
    let lo = level(l - 1, m, k);
    let p_high = if a >= hi {
        1.0
    } else if a <= lo {
        0.0
    } else {
        ((a - lo) / (hi - lo)).clamp(0.0, 1.0)
    };
    let s = if w < 0.0 { -1.0 } else { 1.0 };
    Ok(RoundingLevels {
        low: s * lo,
        high: s * hi,
        p_high,
    })
}

/// Draws `q(w; M, k)`.
pub fn quantize_stochastic<R: Rng + ?Sized>(w: f64, m: f64, k: usize, rng: &mut R) -> Result<f64> {
    let r = rounding_levels(w, m, k)?;
    Ok(if rng.random::<f64>() < r.p_high {
        r.high
    } else {
        r.low
    })
}

/// The per-layer grid `{±i·M/k}` with its scale frozen at creation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantGrid {
    scale: f64,
    k: usize,
}

impl QuantGrid {
    pub fn new(scale: f64, k: usize) -> Result<Self> {
        check_scale(scale, k)?;
        Ok(QuantGrid { scale, k })
    }

    /// Grid with `M = ‖W‖_∞`.
    pub fn for_matrix(w: &Matrix, k: usize) -> Result<Self> {
        QuantGrid::new(w.inf_norm(), k)
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn step(&self) -> f64 {
        self.scale / self.k as f64
    }

    /// The `2k` nonzero levels in increasing order.
    pub fn values(&self) -> Vec<f64> {
        let pos: Vec<f64> = (1..=self.k).map(|i| level(i, self.scale, self.k)).collect();
        pos.iter().rev().map(|v| -v).chain(pos.iter().copied()).collect()
    }

    /// Whether `v` is one of `±i·M/k` for `i = 0..=k`, within [`GRID_TOL`].
    pub fn contains(&self, v: f64) -> bool {
        let a = v.abs();
        let i = (a / self.step()).round();
        if !i.is_finite() || i > self.k as f64 + 1.0 {
            return false;
        }
        let i = i as usize;
        [i.saturating_sub(1), i, i + 1]
            .into_iter()
            .filter(|j| *j <= self.k)
            .any(|j| (a - level(j, self.scale, self.k)).abs() <= GRID_TOL)
    }

    pub fn rounding_levels(&self, w: f64) -> Result<RoundingLevels> {
        rounding_levels(w, self.scale, self.k)
    }
}

/// Fraction of entries of `w` that are not grid levels (zero counts as a level).
pub fn discreteness_report(w: &Matrix, grid: &QuantGrid) -> f64 {
    let off = w.data().iter().filter(|v| !grid.contains(**v)).count();
    off as f64 / w.len() as f64
}
