//! Numerical scan of the two-by-two inequality behind the `1/p` exponent:
//!
//! `2p Σ q_jk ln(2 q_jk / π_jk) ≥ Σ_j q_j* ln(2 q_j*) + Σ_k q_*k ln(2 q_*k)`
//! with `π = (p, 1-p, 1-p, p)`, i.e. `2p K(Q‖P) ≥ K(Q_row‖u) + K(Q_col‖u)`
//! for `P` the Bernoulli matrix and `u` uniform.

use serde::{Deserialize, Serialize};

use crate::exec::Execution;

/// Margins at or above `-slack` are not violations.
pub const DEFAULT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub p: f64,
    /// `(q00, q01, q10, q11)`
    pub q: [f64; 4],
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub p_values: Vec<f64>,
    pub resolution: usize,
    pub slack: f64,
    /// Points of the full simplex grid plus the constrained grid.
    pub points: usize,
    pub worst: ScanPoint,
    pub violations: usize,
}

fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * (2.0 * x).ln()
    } else {
        0.0
    }
}

/// Left side minus right side; `+inf` when `q` puts mass where `π` has none.
pub fn conjecture_margin(p: f64, q: [f64; 4]) -> f64 {
    let pi = [p, 1.0 - p, 1.0 - p, p];
    let mut lhs = 0.0;
    for (&qe, &pe) in q.iter().zip(&pi) {
        if qe > 0.0 {
            if pe <= 0.0 {
                return f64::INFINITY;
            }
            lhs += qe * (2.0 * qe / pe).ln();
        }
    }
    let rhs = xlog2x(q[0] + q[1]) + xlog2x(q[2] + q[3]) + xlog2x(q[0] + q[2]) + xlog2x(q[1] + q[3]);
    2.0 * p * lhs - rhs
}

/// `q00` on `(1-p)² q00 q11 = p² q01 q10` for row-0 marginal `a` and
/// column-0 marginal `b`, found by bisection on the feasible interval.
pub fn constrained_point(p: f64, a: f64, b: f64) -> [f64; 4] {
    let lo0 = (a + b - 1.0).max(0.0);
    let hi0 = a.min(b);
    let f = |x: f64| (1.0 - p).powi(2) * x * (1.0 - a - b + x) - p * p * (a - x) * (b - x);
    let (mut lo, mut hi) = (lo0, hi0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    [x, (a - x).max(0.0), (b - x).max(0.0), (1.0 - a - b + x).max(0.0)]
}

pub fn conjecture_scan(p_values: &[f64], resolution: usize, slack: f64) -> ScanReport {
    conjecture_scan_with(Execution::default(), p_values, resolution, slack)
}

/// Scans the full simplex grid `q = (i, j, k, l) / resolution` and a
/// `resolution × resolution` grid of marginals on the constrained surface.
pub fn conjecture_scan_with(
    exec: Execution,
    p_values: &[f64],
    resolution: usize,
    slack: f64,
) -> ScanReport {
    assert!(resolution >= 10, "resolution must be at least 10");
    let n = resolution;
    let h = 1.0 / n as f64;
    // per (p, first coordinate): (worst point, violations, points)
    let slabs = p_values.len() * (n + 1);
    let per = exec.map_range(slabs, |idx| {
        let p = p_values[idx / (n + 1)];
        let i = idx % (n + 1);
        let mut worst: Option<ScanPoint> = None;
        let mut violations = 0usize;
        let mut points = 0usize;
        let mut visit = |q: [f64; 4]| {
            let margin = conjecture_margin(p, q);
            points += 1;
            if margin < -slack {
                violations += 1;
            }
            if worst.is_none_or(|w| margin < w.margin) {
                worst = Some(ScanPoint { p, q, margin });
            }
        };
        for j in 0..=n - i {
            for k in 0..=n - i - j {
                let l = n - i - j - k;
                visit([i as f64 * h, j as f64 * h, k as f64 * h, l as f64 * h]);
            }
        }
        // constrained surface: row-0 marginal a = i/n, column-0 marginal b = j/n
        let a = i as f64 * h;
        for j in 0..=n {
            visit(constrained_point(p, a, j as f64 * h));
        }
        (worst.expect("slab is nonempty"), violations, points)
    });
    let mut worst = per[0].0;
    let (mut violations, mut points) = (0, 0);
    for (w, v, c) in &per {
        if w.margin < worst.margin {
            worst = *w;
        }
        violations += v;
        points += c;
    }
    ScanReport { p_values: p_values.to_vec(), resolution, slack, points, worst, violations }
}
