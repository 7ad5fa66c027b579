use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Comparison count for unequal set sizes built from the near-`P` family of
/// block decompositions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymmetricEstimate {
    pub comparisons: f64,
    pub ln_comparisons: f64,
    /// `(2p-1)²`: with `n0 = n1^{(2p-1)² - ε}` the work is linear in `n1`.
    pub threshold_exponent: f64,
}

/// `exp[(ln n0 + ln n1 - 2(2p-1) sqrt(ln n0 ln n1)) / (4p(1-p)(1-ε))]`.
pub fn asymmetric_comparisons(p: f64, n0: f64, n1: f64, epsilon: f64) -> Result<AsymmetricEstimate> {
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::Domain(format!("p must lie in (1/2, 1), got {p}")));
    }
    if !(n0 > 1.0 && n1 > 1.0) {
        return Err(Error::Domain("set sizes must exceed one".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let (a, b) = (n0.ln(), n1.ln());
    let ln_comparisons = (a + b - 2.0 * (2.0 * p - 1.0) * (a * b).sqrt()) / (4.0 * p * (1.0 - p) * (1.0 - epsilon));
    Ok(AsymmetricEstimate {
        comparisons: ln_comparisons.exp(),
        ln_comparisons,
        threshold_exponent: (2.0 * p - 1.0).powi(2),
    })
}
