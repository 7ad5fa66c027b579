//! Lower bounds on the work of any bucketing code.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::closed_form::info_closed_form;
use super::numeric::{info_numeric_with, NumericSettings};
use super::subconjugate::{frontier_with, ratio_sup_with};
use super::InfoQuery;
use crate::exec::Execution;
use crate::probmodel::ProbabilityMatrix;

/// Number of frontier directions swept by [`direct_lower_bound`]; odd so the
/// diagonal is included.
pub const FRONTIER_DIRECTIONS: usize = 65;
const FRONTIER_TOL: f64 = 1e-4;

/// `W ≥ S · n0^λ0 · n1^λ1` maximized over certified sub-conjugate pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectBound {
    pub value: f64,
    pub ln_value: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    /// Every certified frontier pair that was tried.
    pub frontier: Vec<(f64, f64)>,
}

/// The certified frontier of `P` along [`FRONTIER_DIRECTIONS`] directions
/// through evenly spaced points of the box edges `(1, s)` and `(s, 1)`,
/// plus the two unit pairs.
pub fn certified_frontier(p: &ProbabilityMatrix) -> Vec<(f64, f64)> {
    let exec = Execution::default();
    let half = (FRONTIER_DIRECTIONS - 1) / 2;
    let mut out = exec.map_range(FRONTIER_DIRECTIONS, |i| {
        let dir = if i <= half {
            (1.0, i as f64 / half as f64)
        } else {
            ((FRONTIER_DIRECTIONS - 1 - i) as f64 / half as f64, 1.0)
        };
        frontier_with(Execution::Sequential, p, dir, FRONTIER_TOL)
    });
    out.push((1.0, 0.0));
    out.push((0.0, 1.0));
    out
}

pub fn direct_lower_bound(p: &ProbabilityMatrix, n0: f64, n1: f64, success: f64) -> DirectBound {
    assert!(n0 >= 1.0 && n1 >= 1.0, "set sizes must be at least one");
    assert!(success > 0.0 && success <= 1.0, "success must lie in (0, 1]");
    let frontier = certified_frontier(p);
    let (mut best, mut arg) = (f64::NEG_INFINITY, (1.0, 0.0));
    for &(l0, l1) in &frontier {
        let v = l0 * n0.ln() + l1 * n1.ln();
        if v > best {
            best = v;
            arg = (l0, l1);
        }
    }
    let ln_value = success.ln() + best;
    DirectBound { value: ln_value.exp(), ln_value, lambda0: arg.0, lambda1: arg.1, frontier }
}

/// `ln W ≥ λ0 ln n0 + λ1 ln n1 + μ ln S − Σ_i I(P_i, λ0, λ1, μ)` at the best
/// `(λ0, λ1, μ)` found.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkBound {
    pub ln_w_bound: f64,
    pub lambda0: f64,
    pub lambda1: f64,
    #[serde(with = "super::mu_serde")]
    pub mu: f64,
}

/// μ values of the coarse search grid; `∞` is used only when `S = 1`.
pub const MU_GRID: [f64; 14] =
    [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 4.0, 8.0, 16.0, 32.0, 64.0, f64::INFINITY];
const LAMBDA_STEP: f64 = 0.25;
const REFINE_MIN_STEP: f64 = 1.0 / 64.0;
const MU_CAP: f64 = 64.0;

type Key = (Vec<u64>, u64, u64, u64);
/// Matrix bits and the bits of `(λ0, λ1)`.
type RatioKey = (Vec<u64>, u64, u64);

/// Search state for [`work_lower_bound`] with a cache of `I` values that
/// persists across calls.
#[derive(Default)]
pub struct WorkBoundSearch {
    cache: Mutex<HashMap<Key, f64>>,
    ratio_cache: Mutex<HashMap<RatioKey, f64>>,
    settings: NumericSettings,
}

fn matrix_key(p: &ProbabilityMatrix) -> Vec<u64> {
    let mut k = vec![p.rows() as u64];
    k.extend(p.entries().iter().map(|v| v.to_bits()));
    k
}

impl WorkBoundSearch {
    pub fn new() -> Self {
        Self::default()
    }

    fn ratio_sup(&self, p: &ProbabilityMatrix, l0: f64, l1: f64) -> f64 {
        let key = (matrix_key(p), l0.to_bits(), l1.to_bits());
        if let Some(v) = self.ratio_cache.lock().expect("cache lock").get(&key) {
            return *v;
        }
        let v = ratio_sup_with(Execution::default(), p, l0, l1, 0).value;
        self.ratio_cache.lock().expect("cache lock").insert(key, v);
        v
    }

    /// `I(P, λ0, λ1, μ)`: closed form at `λ = (1, 1)`, zero when the pair
    /// `λ / min(μ, 1)` is certified sub-conjugate, numeric otherwise.
    pub fn info(&self, p: &ProbabilityMatrix, l0: f64, l1: f64, mu: f64) -> f64 {
        if l0 == 1.0 && l1 == 1.0 {
            return info_closed_form(p, mu);
        }
        let key = (matrix_key(p), l0.to_bits(), l1.to_bits(), mu.to_bits());
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return *v;
        }
        let v = if self.ratio_sup(p, l0, l1) <= mu.min(1.0) * (1.0 - 1e-9) {
            0.0
        } else {
            info_numeric_with(Execution::default(), p, InfoQuery::new(l0, l1, mu), &self.settings)
                .value
        };
        self.cache.lock().expect("cache lock").insert(key, v);
        v
    }

    fn objective(
        &self,
        groups: &[(&ProbabilityMatrix, f64)],
        ln_n0: f64,
        ln_n1: f64,
        ln_s: f64,
        (l0, l1, mu): (f64, f64, f64),
    ) -> f64 {
        let mut v = l0 * ln_n0 + l1 * ln_n1;
        if mu.is_infinite() {
            if ln_s < 0.0 {
                return f64::NEG_INFINITY;
            }
        } else {
            v += mu * ln_s;
        }
        for &(p, count) in groups {
            v -= count * self.info(p, l0, l1, mu);
        }
        v
    }

    pub fn work_lower_bound(&self, ps: &[ProbabilityMatrix], n0: f64, n1: f64, success: f64) -> WorkBound {
        assert!(success > 0.0 && success <= 1.0, "success must lie in (0, 1]");
        let mut groups: Vec<(&ProbabilityMatrix, f64)> = Vec::new();
        for p in ps {
            match groups.iter_mut().find(|(q, _)| *q == p) {
                Some(g) => g.1 += 1.0,
                None => groups.push((p, 1.0)),
            }
        }
        let (ln_n0, ln_n1, ln_s) = (n0.ln(), n1.ln(), success.ln());
        let eval = |pt: (f64, f64, f64)| self.objective(&groups, ln_n0, ln_n1, ln_s, pt);

        let steps = (1.0 / LAMBDA_STEP).round() as usize;
        let mut grid = Vec::new();
        for i in 0..=steps {
            for j in 0..=steps {
                if i + j < steps {
                    continue;
                }
                for &mu in &MU_GRID {
                    grid.push((i as f64 * LAMBDA_STEP, j as f64 * LAMBDA_STEP, mu));
                }
            }
        }
        let mut best = (f64::NEG_INFINITY, (1.0, 0.0, 0.0));
        for pt in grid {
            let v = eval(pt);
            if v > best.0 {
                best = (v, pt);
            }
        }

        // pattern search inside λ0, λ1 ≤ 1 ≤ λ0 + λ1, 0 ≤ μ ≤ cap
        let mut step = LAMBDA_STEP / 2.0;
        while step >= REFINE_MIN_STEP && best.1 .2.is_finite() {
            let (l0, l1, mu) = best.1;
            let mut improved = false;
            let moves = [
                (step, 0.0, 0.0),
                (-step, 0.0, 0.0),
                (0.0, step, 0.0),
                (0.0, -step, 0.0),
                (step, -step, 0.0),
                (-step, step, 0.0),
                (0.0, 0.0, step * mu.max(1.0)),
                (0.0, 0.0, -step * mu.max(1.0)),
            ];
            for (d0, d1, dm) in moves {
                let cand = (l0 + d0, l1 + d1, mu + dm);
                let inside = cand.0 <= 1.0
                    && cand.1 <= 1.0
                    && cand.0 + cand.1 >= 1.0
                    && cand.2 >= 0.0
                    && cand.2 <= MU_CAP;
                if inside {
                    let v = eval(cand);
                    if v > best.0 + 1e-12 {
                        best = (v, cand);
                        improved = true;
                    }
                }
            }
            if !improved {
                step /= 2.0;
            }
        }
        let (l0, l1, mu) = best.1;
        WorkBound { ln_w_bound: best.0, lambda0: l0, lambda1: l1, mu }
    }
}

/// One-shot [`WorkBoundSearch::work_lower_bound`].
pub fn work_lower_bound(ps: &[ProbabilityMatrix], n0: f64, n1: f64, success: f64) -> WorkBound {
    WorkBoundSearch::new().work_lower_bound(ps, n0, n1, success)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_list() {
        let b = work_lower_bound(&[], 1.0, 1.0, 1.0);
        assert!(b.ln_w_bound.abs() < 1e-12);
    }

    #[test]
    fn independent_matrix_gives_product() {
        let u = ProbabilityMatrix::bernoulli(0.5).unwrap();
        let n = 1000.0f64;
        let b = work_lower_bound(std::slice::from_ref(&u), n, n, 1.0);
        assert!((b.ln_w_bound - 2.0 * n.ln()).abs() < 1e-9, "{b:?}");
        let d = direct_lower_bound(&u, n, n, 0.5);
        assert!((d.value - 0.5 * n * n).abs() / (n * n) < 1e-2, "{}", d.value);
    }

    #[test]
    fn bernoulli_copies_beat_unit_point() {
        let p = 0.9;
        let b = ProbabilityMatrix::bernoulli(p).unwrap();
        let copies = vec![b; 6];
        let n = 64.0f64;
        let unit = 2.0 * n.ln() - 6.0 * (2.0 * p).ln();
        let w = work_lower_bound(&copies, n, n, 1.0);
        assert!(w.ln_w_bound >= unit - 1e-12);
        assert!(w.ln_w_bound >= n.ln());
    }

    #[test]
    fn direct_bound_at_least_n() {
        let b = ProbabilityMatrix::bernoulli(0.9).unwrap();
        let n = 1e6;
        let d = direct_lower_bound(&b, n, n, 1.0);
        assert!(d.value >= n);
        assert!(d.ln_value >= n.ln() / 0.9 * (1.0 - 1e-3), "{}", d.ln_value);
        assert!(d.frontier.len() >= FRONTIER_DIRECTIONS);
    }
}
