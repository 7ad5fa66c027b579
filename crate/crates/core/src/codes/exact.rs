//! Exact success probability of a code under the planted-pair model.

use super::{BucketingCode, ConcatMode, Node};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::logspace::compensated_sum;
use crate::probmodel::ProbabilityMatrix;

/// Largest number of pair states `b0^d · b1^d` swept by enumeration.
pub const ENUMERATION_LIMIT: u64 = 1 << 26;
/// Largest number of classical draws handled by inclusion–exclusion.
const INCLUSION_EXCLUSION_DRAWS: u64 = 16;

/// `S = P[(x0, x1) ∈ ∪_t B0_t × B1_t]` with the coordinates of the planted
/// pair drawn i.i.d. from `P`.
///
/// Tensor powers, disjoint concatenations, full spaces and classical codes
/// with few draws use closed forms; everything else is enumerated.
pub fn code_success_exact(code: &BucketingCode, p: &ProbabilityMatrix, d: usize) -> Result<f64> {
    code_success_exact_with(Execution::default(), code, p, d)
}

pub fn code_success_exact_with(
    exec: Execution,
    code: &BucketingCode,
    p: &ProbabilityMatrix,
    d: usize,
) -> Result<f64> {
    if d != code.d() {
        return Err(Error::DimensionMismatch(format!("code has d={}, requested d={d}", code.d())));
    }
    if code.alphabets() != (p.rows(), p.cols()) {
        return Err(Error::DimensionMismatch("code alphabet differs from the shape of P".into()));
    }
    success(exec, code, p)
}

fn success(exec: Execution, code: &BucketingCode, p: &ProbabilityMatrix) -> Result<f64> {
    if code.bucket_count() == 0 {
        return Ok(0.0);
    }
    match code.node() {
        Node::FullSpace { .. } => Ok(1.0),
        Node::TensorPower { base, k } => Ok(success(exec, base, p)?.powi(*k as i32)),
        Node::Concat { first, second, mode: ConcatMode::Disjoint } => {
            let (a, b) = (success(exec, first, p)?, success(exec, second, p)?);
            Ok(1.0 - (1.0 - a) * (1.0 - b))
        }
        Node::Classical { draws, coords, .. } if *draws <= INCLUSION_EXCLUSION_DRAWS => {
            // draws capture the pair iff it agrees on all chosen coordinates
            let agree = p.get(0, 0) + p.get(1, 1);
            let terms = (1u32..1 << coords.len()).map(|mask| {
                let mut used = vec![false; code.d()];
                for (g, cs) in coords.iter().enumerate() {
                    if mask >> g & 1 == 1 {
                        cs.iter().for_each(|&c| used[c] = true);
                    }
                }
                let size = used.iter().filter(|&&u| u).count() as i32;
                let sign = if mask.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
                sign * agree.powi(size)
            });
            Ok(compensated_sum(terms).clamp(0.0, 1.0))
        }
        _ => code_success_enumerated(exec, code, p),
    }
}

fn states(alphabet: usize, d: usize) -> Option<u64> {
    (alphabet as u64).checked_pow(d as u32)
}

fn decode(mut v: u64, alphabet: usize, d: usize, out: &mut [u8]) {
    for slot in out.iter_mut().take(d) {
        *slot = (v % alphabet as u64) as u8;
        v /= alphabet as u64;
    }
}

fn intersects(a: &[u64], b: &[u64]) -> bool {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => return true,
        }
    }
    false
}

/// Success by sweeping all `b0^d · b1^d` pair states; errors with `TooLarge`
/// beyond [`ENUMERATION_LIMIT`].
pub fn code_success_enumerated(exec: Execution, code: &BucketingCode, p: &ProbabilityMatrix) -> Result<f64> {
    let d = code.d();
    let (b0, b1) = (p.rows(), p.cols());
    let n0 = states(b0, d);
    let n1 = states(b1, d);
    let (n0, n1) = match (n0, n1) {
        (Some(a), Some(b)) if a.checked_mul(b).is_some_and(|s| s <= ENUMERATION_LIMIT) => (a, b),
        _ => {
            return Err(Error::TooLarge(format!(
                "{b0}^{d} x {b1}^{d} pair states exceed the enumeration limit"
            )))
        }
    };
    let lists = |alphabet: usize, count: u64, side: usize| {
        exec.map_range(count as usize, |v| {
            let mut x = vec![0u8; d];
            decode(v as u64, alphabet, d, &mut x);
            if side == 0 {
                code.buckets0(&x)
            } else {
                code.buckets1(&x)
            }
        })
    };
    let l0 = lists(b0, n0, 0);
    let l1 = lists(b1, n1, 1);
    let ys: Vec<Vec<u8>> = (0..n1)
        .map(|v| {
            let mut y = vec![0u8; d];
            decode(v, b1, d, &mut y);
            y
        })
        .collect();
    let chunk = (n0 as usize).div_ceil(64).max(1);
    let partial = exec.map_chunks(n0 as usize, chunk, |range| {
        let mut x = vec![0u8; d];
        let mut acc = Vec::new();
        for v in range {
            if l0[v].is_empty() {
                continue;
            }
            decode(v as u64, b0, d, &mut x);
            for (w, y) in ys.iter().enumerate() {
                if intersects(&l0[v], &l1[w]) {
                    acc.push((0..d).map(|c| p.get(x[c] as usize, y[c] as usize)).product::<f64>());
                }
            }
        }
        compensated_sum(acc)
    });
    Ok(compensated_sum(partial).clamp(0.0, 1.0))
}
