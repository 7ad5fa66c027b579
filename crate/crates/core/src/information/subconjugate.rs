//! Sub-conjugacy: `K(Q‖P) ≥ λ0 K(Q_row‖P_row) + λ1 K(Q_col‖P_col)` for every `Q`.
//!
//! The condition is linear in `(λ0, λ1)`, so along a direction `a` it holds
//! exactly for `t ≤ 1 / sup_Q ρ_a(Q)` with
//! `ρ_a(Q) = (a0 K(Q_row) + a1 K(Q_col)) / K(Q‖P)`. The supremum is the larger
//! of a local value at `Q → P` (a generalized eigenvalue of the second-order
//! expansion) and a global multi-start ascent of `ln ρ_a`.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::ascent::{ascend, random_simplex, AscentSettings};
use super::objective::{LogRatio, Support};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::probmodel::ProbabilityMatrix;
use crate::rng;

/// Supremum of the divergence ratio along one direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioSup {
    pub value: f64,
    /// Limit of the ratio as `Q → P` along the worst direction.
    pub local: f64,
    /// Best ratio found away from `P`.
    pub global: f64,
    /// Distribution (row-major grid) realizing a ratio close to `value`.
    pub witness: Vec<f64>,
}

/// Outcome of a sub-conjugacy test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubconjugacyCheck {
    pub subconjugate: bool,
    /// `sup_Q (λ0 K_row + λ1 K_col) / K(Q‖P)`; sub-conjugate iff at most one.
    pub ratio_sup: f64,
    /// Refuting distribution when not sub-conjugate.
    pub witness: Option<ProbabilityMatrix>,
    /// `λ0 K_row + λ1 K_col - K` at the witness (positive when refuted).
    pub gap: f64,
}

const LOCAL_STEP_SCALES: [f64; 3] = [0.9, 0.3, 0.05];

fn local_ratio(support: &Support, a0: f64, a1: f64) -> (f64, Vec<f64>) {
    let m = support.len();
    let sq: Vec<f64> = support.p.iter().map(|p| p.sqrt()).collect();
    let mut c = DMatrix::<f64>::zeros(m, m);
    for e in 0..m {
        for f in 0..m {
            let mut v = 0.0;
            if support.row[e] == support.row[f] {
                v += a0 / support.row_marginals[support.row[e]];
            }
            if support.col[e] == support.col[f] {
                v += a1 / support.col_marginals[support.col[e]];
            }
            // sqrt(p) is an eigenvector with eigenvalue a0 + a1; it is the
            // direction that changes total mass and is projected out
            c[(e, f)] = sq[e] * sq[f] * v - (a0 + a1) * sq[e] * sq[f];
        }
    }
    if m < 2 {
        return (0.0, vec![0.0; m]);
    }
    let eig = SymmetricEigen::new(c);
    let (idx, &top) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("nonempty spectrum");
    let u = eig.eigenvectors.column(idx);
    let dir: Vec<f64> = (0..m).map(|e| u[e] * sq[e]).collect();
    (top.max(0.0), dir)
}

/// `P + s·v` scaled so that every entry stays nonnegative.
fn perturb(p: &[f64], dir: &[f64], scale: f64) -> Option<Vec<f64>> {
    let limit = p
        .iter()
        .zip(dir)
        .filter(|(_, &v)| v < 0.0)
        .map(|(&pe, &v)| pe / -v)
        .fold(f64::INFINITY, f64::min);
    if !limit.is_finite() || limit <= 0.0 {
        return None;
    }
    let q: Vec<f64> = p.iter().zip(dir).map(|(&pe, &v)| (pe + scale * limit * v).max(0.0)).collect();
    let total: f64 = q.iter().sum();
    Some(q.into_iter().map(|x| x / total).collect())
}

/// `sup_{Q ≠ P} (a0 K(Q_row‖P_row) + a1 K(Q_col‖P_col)) / K(Q‖P)` over `Q`
/// supported on `supp(P)`.
pub fn divergence_ratio_sup(p: &ProbabilityMatrix, a0: f64, a1: f64, seed: u64) -> RatioSup {
    ratio_sup_with(Execution::default(), p, a0, a1, seed)
}

pub(crate) fn ratio_sup_with(
    exec: Execution,
    p: &ProbabilityMatrix,
    a0: f64,
    a1: f64,
    seed: u64,
) -> RatioSup {
    let support = Support::new(p);
    let m = support.len();
    let (local, dir) = local_ratio(&support, a0, a1);
    let obj = LogRatio { support: &support, a0, a1 };

    let mut starts: Vec<Vec<f64>> = Vec::new();
    for e in 0..m {
        let mut v = vec![0.0; m];
        v[e] = 1.0;
        starts.push(v);
    }
    if m <= 9 {
        for mask in 1u32..(1u32 << m) {
            let size = mask.count_ones() as usize;
            if size >= 2 && size < m {
                starts.push((0..m).map(|e| if mask >> e & 1 == 1 { 1.0 / size as f64 } else { 0.0 }).collect());
            }
        }
    }
    starts.push(vec![1.0 / m as f64; m]);
    for sign in [1.0, -1.0] {
        let d: Vec<f64> = dir.iter().map(|v| sign * v).collect();
        for s in LOCAL_STEP_SCALES {
            if let Some(q) = perturb(&support.p, &d, s) {
                starts.push(q);
            }
        }
    }
    let mut r = rng::stream(seed, "ratio-start", m as u64);
    for _ in 0..16 {
        starts.push(random_simplex(&mut r, m));
    }

    let settings = AscentSettings { max_iters: 3000, ftol: 1e-13, patience: 8, ..Default::default() };
    let runs = exec.map_range(starts.len(), |i| ascend(&obj, &[0..m], starts[i].clone(), settings));
    let mut best: Option<usize> = None;
    for (i, run) in runs.iter().enumerate() {
        if run.value.is_finite() && best.is_none_or(|b| run.value > runs[b].value) {
            best = Some(i);
        }
    }
    let global = best.map_or(0.0, |b| runs[b].value.exp());
    let witness = if global >= local {
        support.to_grid(&runs[best.expect("finite run")].x)
    } else {
        let q = perturb(&support.p, &dir, 1e-3).unwrap_or_else(|| support.p.clone());
        support.to_grid(&q)
    };
    RatioSup { value: local.max(global), local, global, witness }
}

fn check_domain(lambda0: f64, lambda1: f64) -> Result<()> {
    const SLACK: f64 = 1e-12;
    if lambda0 > 1.0 + SLACK || lambda1 > 1.0 + SLACK || lambda0 + lambda1 < 1.0 - SLACK {
        return Err(Error::Domain(format!(
            "need lambda0, lambda1 <= 1 <= lambda0 + lambda1, got ({lambda0}, {lambda1})"
        )));
    }
    Ok(())
}

/// Tests sub-conjugacy of `(λ0, λ1)` for `P`; the pair passes when the ratio
/// supremum is at most `1 + tol`.
pub fn is_subconjugate(
    p: &ProbabilityMatrix,
    lambda0: f64,
    lambda1: f64,
    tol: f64,
) -> Result<SubconjugacyCheck> {
    check_domain(lambda0, lambda1)?;
    let sup = divergence_ratio_sup(p, lambda0, lambda1, 0);
    let subconjugate = sup.value <= 1.0 + tol;
    let q = ProbabilityMatrix::from_flat(p.rows(), p.cols(), sup.witness.clone())?;
    let support = Support::new(p);
    let qs: Vec<f64> = support.flat.iter().map(|&f| sup.witness[f]).collect();
    let (kr, kc, k) = support.divergences(&qs);
    Ok(SubconjugacyCheck {
        subconjugate,
        ratio_sup: sup.value,
        gap: lambda0 * kr + lambda1 * kc - k,
        witness: (!subconjugate).then_some(q),
    })
}

/// Largest `t·(a0, a1)` inside the box `λ ≤ 1` that is still sub-conjugate,
/// shrunk by the relative margin `tol` so the returned pair is certified.
pub fn subconjugate_frontier(p: &ProbabilityMatrix, direction: (f64, f64), tol: f64) -> (f64, f64) {
    frontier_with(Execution::default(), p, direction, tol)
}

pub(crate) fn frontier_with(
    exec: Execution,
    p: &ProbabilityMatrix,
    (a0, a1): (f64, f64),
    tol: f64,
) -> (f64, f64) {
    assert!(a0 >= 0.0 && a1 >= 0.0 && a0 + a1 > 0.0, "direction must be nonzero and nonnegative");
    let sup = ratio_sup_with(exec, p, a0, a1, 0).value;
    let t_box = 1.0 / a0.max(a1);
    let t_ratio = if sup > 0.0 { 1.0 / sup } else { f64::INFINITY };
    let t = t_box.min(t_ratio) * (1.0 - tol);
    (t * a0, t * a1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_side_is_always_subconjugate() {
        for p in [0.5, 0.7, 0.9, 1.0] {
            let b = ProbabilityMatrix::bernoulli(p).unwrap();
            let c = is_subconjugate(&b, 1.0, 0.0, 1e-9).unwrap();
            assert!(c.subconjugate, "p={p} sup={}", c.ratio_sup);
            assert!((c.ratio_sup - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn bernoulli_ratio_is_two_p() {
        for p in [0.6, 0.75, 0.9] {
            let b = ProbabilityMatrix::bernoulli(p).unwrap();
            let s = divergence_ratio_sup(&b, 1.0, 1.0, 0);
            assert!((s.value - 2.0 * p).abs() < 1e-6, "p={p}: {}", s.value);
            let t = 1.0 / (2.0 * p);
            assert!(is_subconjugate(&b, t, t, 1e-6).unwrap().subconjugate);
        }
    }

    #[test]
    fn diagonal_refutes_unit_pair() {
        let b = ProbabilityMatrix::bernoulli(0.9).unwrap();
        let c = is_subconjugate(&b, 1.0, 1.0, 1e-9).unwrap();
        assert!(!c.subconjugate);
        assert!(c.gap > 0.0);
        assert!(c.witness.is_some());
    }

    #[test]
    fn domain_is_checked() {
        let b = ProbabilityMatrix::bernoulli(0.9).unwrap();
        assert!(is_subconjugate(&b, 0.3, 0.3, 1e-9).is_err());
        assert!(is_subconjugate(&b, 1.2, 0.3, 1e-9).is_err());
    }

    #[test]
    fn frontiers() {
        let u = ProbabilityMatrix::bernoulli(0.5).unwrap();
        let (x, y) = subconjugate_frontier(&u, (1.0, 1.0), 1e-6);
        assert!((x - 1.0).abs() < 1e-5 && (y - 1.0).abs() < 1e-5);
        let b = ProbabilityMatrix::bernoulli(0.9).unwrap();
        let (x, y) = subconjugate_frontier(&b, (1.0, 1.0), 1e-6);
        assert!((x - 1.0 / 1.8).abs() < 1e-4 && (y - x).abs() < 1e-12);
        let (x, y) = subconjugate_frontier(&b, (1.0, 0.0), 1e-6);
        assert!((x - 1.0).abs() < 1e-5 && y == 0.0);
    }

    #[test]
    fn local_eigenvalue_matches_ratio_limit() {
        let p = ProbabilityMatrix::new(vec![vec![0.3, 0.1, 0.05], vec![0.05, 0.2, 0.3]]).unwrap();
        let s = Support::new(&p);
        let (top, dir) = local_ratio(&s, 0.7, 0.9);
        let q = perturb(&s.p, &dir, 1e-4).unwrap();
        let (kr, kc, k) = s.divergences(&q);
        assert!(((0.7 * kr + 0.9 * kc) / k - top).abs() < 1e-3);
    }
}
