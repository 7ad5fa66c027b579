//! Analytics of the shell code.
//!
//! A bucket holds the points agreeing with its center in `d0 - 1` or `d0`
//! coordinates. A pair at Hamming distance `m` is captured by a uniform
//! center with probability
//! `S_m = 2^-d C(m, ⌊m/2⌋) [C(d-m, d0-⌈m/2⌉) + C(d-m, d0-⌈(m+1)/2⌉)]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logspace::{binomial_exact, compensated_sum, ln_binomial, log_sum_exp};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShellAnalytics {
    pub d: usize,
    pub d0: usize,
    pub p: f64,
    pub epsilon: f64,
    /// Bucket mass `p_{A*}`.
    pub p_star: f64,
    pub ln_p_star: f64,
    /// `S_m` for `m = 0..=d`.
    pub capture: Vec<f64>,
    pub ln_capture: Vec<f64>,
    /// `⌊1/p_{A*}⌋`
    pub n: f64,
    /// `-ln p_{A*}`, the exponent used for `n` in exponent tables.
    pub ln_n: f64,
    /// Inclusive range of distances in the Chebyshev window.
    pub window: (usize, usize),
    /// Bucket count; above `2^50` only `ln_t` is meaningful.
    pub t: f64,
    pub ln_t: f64,
    /// Success probability with `t` independent centers.
    pub success: f64,
}

/// `ln p_{A*} = ln([C(d, d0-1) + C(d, d0)] 2^-d)`.
pub(crate) fn ln_shell_mass(d: usize, d0: usize) -> f64 {
    let (d, d0) = (d as i64, d0 as i64);
    log_sum_exp(&[ln_binomial(d, d0 - 1), ln_binomial(d, d0)]) - d as f64 * std::f64::consts::LN_2
}

/// Exact number of centers capturing a fixed pair at distance `m`
/// (`2^d S_m`), for `d ≤ 120`.
pub fn shell_capture_count(d: usize, d0: usize, m: usize) -> u128 {
    let (d, d0, m) = (d as i64, d0 as i64, m as i64);
    binomial_exact(m, m / 2)
        * (binomial_exact(d - m, d0 - (m + 1) / 2) + binomial_exact(d - m, d0 - (m + 2) / 2))
}

/// `ln S_m`
pub fn ln_shell_capture(d: usize, d0: usize, m: usize) -> f64 {
    let (di, d0, m) = (d as i64, d0 as i64, m as i64);
    ln_binomial(m, m / 2)
        + log_sum_exp(&[ln_binomial(di - m, d0 - (m + 1) / 2), ln_binomial(di - m, d0 - (m + 2) / 2)])
        - d as f64 * std::f64::consts::LN_2
}

/// `S_m`
pub fn shell_capture(d: usize, d0: usize, m: usize) -> f64 {
    ln_shell_capture(d, d0, m).exp()
}

/// Success `Σ_m C(d,m) p^{d-m} (1-p)^m [1 - (1 - S_m)^T]` of `T` shells with
/// independent uniform centers.
pub(crate) fn shell_success(d: usize, p: f64, capture: &[f64], t: f64) -> f64 {
    let terms = (0..=d).map(|m| {
        let ln_w = ln_binomial(d as i64, m as i64) + (d - m) as f64 * p.ln() + m as f64 * (1.0 - p).ln();
        let miss = (t * (-capture[m]).ln_1p()).exp();
        ln_w.exp() * (1.0 - miss)
    });
    compensated_sum(terms).clamp(0.0, 1.0)
}

/// `T = ⌈-ln ε / min S_m⌉` over the Chebyshev window
/// `|m - (1-p)d| < sqrt(p(1-p)d/ε)`, which guarantees success `≥ 1 - 2ε`.
pub fn shell_analytics(d: usize, d0: usize, p: f64, epsilon: f64) -> Result<ShellAnalytics> {
    if d0 == 0 || d0 > d {
        return Err(Error::Domain(format!("need 1 <= d0 <= d, got d0={d0}, d={d}")));
    }
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::Domain(format!("p must lie in (1/2, 1), got {p}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    let ln_p_star = ln_shell_mass(d, d0);
    let ln_capture: Vec<f64> = (0..=d).map(|m| ln_shell_capture(d, d0, m)).collect();
    let capture: Vec<f64> = ln_capture.iter().map(|v| v.exp()).collect();

    let center = (1.0 - p) * d as f64;
    let half = (p * (1.0 - p) * d as f64 / epsilon).sqrt();
    let lo = (center - half).floor() + 1.0;
    let hi = (center + half).ceil() - 1.0;
    let (lo, hi) = if lo <= hi {
        (lo.max(0.0) as usize, hi.min(d as f64) as usize)
    } else {
        let m = center.round().clamp(0.0, d as f64) as usize;
        (m, m)
    };
    let ln_min = ln_capture[lo..=hi].iter().cloned().fold(f64::INFINITY, f64::min);
    let ln_ratio = (-epsilon.ln()).ln() - ln_min;
    let (t, ln_t) = if ln_ratio < 50.0 * std::f64::consts::LN_2 {
        let t = ln_ratio.exp().ceil().max(1.0);
        (t, t.ln())
    } else {
        (ln_ratio.exp(), ln_ratio)
    };
    let success = shell_success(d, p, &capture, t);
    Ok(ShellAnalytics {
        d,
        d0,
        p,
        epsilon,
        p_star: ln_p_star.exp(),
        ln_p_star,
        capture,
        ln_capture,
        n: (-ln_p_star).exp().floor(),
        ln_n: -ln_p_star,
        window: (lo, hi),
        t,
        ln_t,
        success,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_case_by_hand() {
        let a = shell_analytics(4, 2, 0.9, 0.1).unwrap();
        assert!((a.p_star - 0.625).abs() < 1e-15);
        assert!((a.capture[0] - 0.625).abs() < 1e-15);
        assert!((a.capture[1] - 0.375).abs() < 1e-15);
        assert_eq!(shell_capture_count(4, 2, 4), 6);
        assert_eq!(a.n, 1.0);
    }

    #[test]
    fn capture_at_zero_is_mass() {
        for d in 1..30 {
            for d0 in 1..=d {
                let a = ln_shell_capture(d, d0, 0);
                assert!((a - ln_shell_mass(d, d0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn chebyshev_guarantee() {
        for (d, d0, p, eps) in [(12, 7, 0.9, 0.1), (40, 22, 0.8, 0.2), (100, 55, 0.9, 0.05), (30, 15, 0.7, 0.3)] {
            let a = shell_analytics(d, d0, p, eps).unwrap();
            assert!(a.success >= 1.0 - 2.0 * eps, "{d} {d0} {p}: {}", a.success);
            assert!(a.capture.iter().all(|s| (0.0..=1.0).contains(s)));
        }
    }

    #[test]
    fn near_one_uses_the_center_only() {
        let a = shell_analytics(20, 11, 1.0 - 1e-9, 0.1).unwrap();
        assert_eq!(a.window, (0, 0));
        assert_eq!(a.t, ((0.1f64).ln().abs() / a.p_star).ceil());
    }

    #[test]
    fn domain_errors() {
        assert!(shell_analytics(4, 0, 0.9, 0.1).is_err());
        assert!(shell_analytics(4, 5, 0.9, 0.1).is_err());
        assert!(shell_analytics(4, 2, 0.5, 0.1).is_err());
        assert!(shell_analytics(4, 2, 0.9, 1.0).is_err());
    }
}
