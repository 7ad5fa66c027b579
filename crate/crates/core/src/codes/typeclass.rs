//! Type-class codes built from a block decomposition `{R_i}` of mass one.
//!
//! The `d` coordinates are cut into consecutive segments of lengths
//! `d_i = Σ_jk d_{i,jk}`, where `d_{i,jk} ≈ r_{i,jk} d`. Bucket 0 on side 0
//! holds the points whose segment `i` has row-symbol counts `d_{i,j*}`; on
//! side 1 the column-symbol counts `d_{i,*k}`. Bucket `t ≥ 1` applies the
//! same test to the point with coordinates permuted by a uniform random
//! permutation `σ_t`, i.e. to `z_c = x_{σ_t(c)}`.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{BucketingCode, Node, TypeClassLayout};
use crate::error::{Error, Result};
use crate::logspace::ln_multinomial;
use crate::probmodel::{NonnegMatrix, ProbabilityMatrix};
use crate::rng;

/// Permutations are cached up to this many stored indices.
const PERM_CACHE: u64 = 1 << 24;
/// Largest default bucket count `⌈U/V⌉`.
const MAX_DEFAULT_T: f64 = (1u64 << 40) as f64;

#[derive(Debug, Clone, PartialEq)]
pub struct TypeClassCode {
    pub code: BucketingCode,
    /// `d_{i,jk}` per block, row-major over `(j, k)`.
    pub block_counts: Vec<Vec<u64>>,
    /// `ln U`: the planted pair has joint counts `d_{*,jk}`.
    pub ln_u: f64,
    /// `ln V`: the planted pair has joint counts `d_{i,jk}` on every segment.
    pub ln_v: f64,
    pub t: u64,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Summary {
    block_counts: Vec<Vec<u64>>,
    ln_u: f64,
    ln_v: f64,
    t: u64,
}

impl TypeClassCode {
    pub fn u(&self) -> f64 {
        self.ln_u.exp()
    }

    pub fn v(&self) -> f64 {
        self.ln_v.exp()
    }

    /// `E[S] ≥ U [1 - (1 - V/U)^T]`.
    pub fn success_lower_bound(&self) -> f64 {
        let ratio = (self.ln_v - self.ln_u).exp().min(1.0);
        self.u() * -((self.t as f64) * (-ratio).ln_1p()).exp_m1()
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string(&Summary {
            block_counts: self.block_counts.clone(),
            ln_u: self.ln_u,
            ln_v: self.ln_v,
            t: self.t,
        })
        .expect("summary serializes")
    }
}

/// Largest-remainder apportionment of `r_{i,jk} · d` to integers summing to
/// `d`; ties go to the lexicographically smallest `(i, j, k)`.
pub fn round_blocks(blocks: &[NonnegMatrix], d: usize) -> Result<Vec<Vec<u64>>> {
    let cells = blocks.first().map_or(0, |b| b.entries().len());
    let targets: Vec<f64> = blocks.iter().flat_map(|b| b.entries().iter().map(|&r| r * d as f64)).collect();
    let mut counts: Vec<u64> = targets.iter().map(|t| t.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    if assigned > d as u64 || d as u64 - assigned > targets.len() as u64 {
        return Err(Error::RoundingInfeasible { d });
    }
    let mut order: Vec<usize> = (0..targets.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (targets[a] - targets[a].floor(), targets[b] - targets[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take((d as u64 - assigned) as usize) {
        counts[i] += 1;
    }
    Ok(counts.chunks(cells.max(1)).map(|c| c.to_vec()).collect())
}

fn permutation(seed: u64, t: u64, d: usize) -> Vec<u32> {
    let mut perm: Vec<u32> = (0..d as u32).collect();
    perm.shuffle(&mut rng::stream(seed, "typeclass-perm", t));
    perm
}

/// Builds the type-class code; `t = None` takes `T = ⌈U/V⌉`.
pub fn typeclass_code(
    p: &ProbabilityMatrix,
    d: usize,
    blocks: &[NonnegMatrix],
    seed: u64,
    t: Option<u64>,
) -> Result<TypeClassCode> {
    if blocks.is_empty() {
        return Err(Error::Mass { total: 0.0 });
    }
    if let Some(b) = blocks.iter().find(|b| b.rows() != p.rows() || b.cols() != p.cols()) {
        return Err(Error::Shape(format!(
            "block is {}x{}, P is {}x{}",
            b.rows(),
            b.cols(),
            p.rows(),
            p.cols()
        )));
    }
    let total: f64 = blocks.iter().map(NonnegMatrix::total).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Mass { total });
    }
    let (b0, b1) = (p.rows(), p.cols());
    for b in blocks {
        if let Some(e) = (0..b0 * b1).find(|&e| b.entries()[e] > 0.0 && p.entries()[e] <= 0.0) {
            return Err(Error::SupportViolation { row: e / b1, col: e % b1 });
        }
    }
    let counts = round_blocks(blocks, d)?;
    let ln_p: Vec<f64> = p.entries().iter().map(|v| v.ln()).collect();
    let weighted = |c: &[u64], lnp: &[f64]| -> f64 {
        c.iter().zip(lnp).filter(|(&n, _)| n > 0).map(|(&n, &l)| n as f64 * l).sum()
    };

    let mut aggregate = vec![0u64; b0 * b1];
    let mut ln_v = 0.0;
    let (mut segments, mut row_counts, mut col_counts) = (Vec::new(), Vec::new(), Vec::new());
    let (mut ln_side0, mut ln_side1) = (0.0, 0.0);
    let ln_pr: Vec<f64> = p.row_marginals().iter().map(|v| v.ln()).collect();
    let ln_pc: Vec<f64> = p.col_marginals().iter().map(|v| v.ln()).collect();
    for c in &counts {
        for (a, v) in aggregate.iter_mut().zip(c) {
            *a += v;
        }
        ln_v += ln_multinomial(c) + weighted(c, &ln_p);
        let rows: Vec<u64> = (0..b0).map(|j| (0..b1).map(|k| c[j * b1 + k]).sum()).collect();
        let cols: Vec<u64> = (0..b1).map(|k| (0..b0).map(|j| c[j * b1 + k]).sum()).collect();
        ln_side0 += ln_multinomial(&rows) + weighted(&rows, &ln_pr);
        ln_side1 += ln_multinomial(&cols) + weighted(&cols, &ln_pc);
        segments.push(c.iter().sum::<u64>() as usize);
        row_counts.push(rows.iter().map(|&v| v as u32).collect());
        col_counts.push(cols.iter().map(|&v| v as u32).collect());
    }
    let ln_u = ln_multinomial(&aggregate) + weighted(&aggregate, &ln_p);

    let t = match t {
        Some(t) => t,
        None => {
            let ratio = (ln_u - ln_v).exp();
            if ratio > MAX_DEFAULT_T {
                return Err(Error::Overflow(format!("U/V = {ratio:e}")));
            }
            // guard against U/V landing a rounding error above an integer
            (ratio * (1.0 - 1e-12)).ceil().max(1.0) as u64
        }
    };
    let perms = if t.saturating_mul(d as u64) <= PERM_CACHE {
        (1..t).map(|i| permutation(seed, i, d)).collect()
    } else {
        Vec::new()
    };
    let layout = TypeClassLayout {
        p: p.clone(),
        blocks: blocks.to_vec(),
        segments,
        row_counts,
        col_counts,
        perms,
        side0: ln_side0.exp(),
        side1: ln_side1.exp(),
    };
    let code = BucketingCode::from_parts(d, t, seed, Node::TypeClass(Box::new(layout)));
    Ok(TypeClassCode { code, block_counts: counts, ln_u, ln_v, t, seed })
}

fn matches(layout: &TypeClassLayout, z: impl Fn(usize) -> u8, side: usize, hist: &mut [u32]) -> bool {
    let targets = if side == 0 { &layout.row_counts } else { &layout.col_counts };
    let mut c = 0;
    for (i, &len) in layout.segments.iter().enumerate() {
        hist.iter_mut().for_each(|h| *h = 0);
        for _ in 0..len {
            hist[z(c) as usize] += 1;
            c += 1;
        }
        if hist[..] != targets[i][..] {
            return false;
        }
    }
    true
}

pub(super) fn members(layout: &TypeClassLayout, t: u64, seed: u64, x: &[u8], side: usize) -> Vec<u64> {
    let alphabet = if side == 0 { layout.p.rows() } else { layout.p.cols() };
    let mut hist = vec![0u32; alphabet];
    let mut out = Vec::new();
    if matches(layout, |c| x[c], side, &mut hist) {
        out.push(0);
    }
    for i in 1..t {
        let hit = if layout.perms.is_empty() {
            let perm = permutation(seed, i, x.len());
            matches(layout, |c| x[perm[c] as usize], side, &mut hist)
        } else {
            let perm = &layout.perms[i as usize - 1];
            matches(layout, |c| x[perm[c] as usize], side, &mut hist)
        };
        if hit {
            out.push(i);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logspace::ln_binomial;

    fn b9() -> ProbabilityMatrix {
        ProbabilityMatrix::bernoulli(0.9).unwrap()
    }

    #[test]
    fn single_block_of_p() {
        let code = typeclass_code(&b9(), 200, &[NonnegMatrix::from(&b9())], 1, None).unwrap();
        assert_eq!(code.t, 1);
        assert!((code.ln_u - code.ln_v).abs() < 1e-12);
    }

    #[test]
    fn diagonal_block() {
        let q = NonnegMatrix::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let code = typeclass_code(&b9(), 20, &[q], 1, None).unwrap();
        assert_eq!(code.block_counts, vec![vec![10, 0, 0, 10]]);
        let expected = ln_binomial(20, 10) + 20.0 * 0.45f64.ln();
        assert!((code.ln_u - expected).abs() < 1e-12);
        assert_eq!(code.ln_u, code.ln_v);
        assert_eq!(code.t, 1);
        // side-0 bucket: ten zeros and ten ones
        assert!((code.code.side_probabilities(0).0 - (ln_binomial(20, 10) - 20.0 * 2f64.ln()).exp()).abs() < 1e-15);
    }

    #[test]
    fn two_equal_blocks() {
        let q = NonnegMatrix::new(vec![vec![0.25, 0.0], vec![0.0, 0.25]]).unwrap();
        let code = typeclass_code(&b9(), 20, &[q.clone(), q], 3, None).unwrap();
        let ratio = 2.0 * ln_binomial(10, 5) - ln_binomial(20, 10);
        assert!((code.ln_v - code.ln_u - ratio).abs() < 1e-12);
        assert_eq!(code.t, (-ratio).exp().ceil() as u64);
        let lb = code.success_lower_bound();
        assert!(lb > 0.0 && lb <= code.u());
    }

    #[test]
    fn rounding_keeps_within_one() {
        let a = NonnegMatrix::new(vec![vec![0.2, 0.13], vec![0.07, 0.1]]).unwrap();
        let b = NonnegMatrix::new(vec![vec![0.1, 0.2], vec![0.15, 0.05]]).unwrap();
        for d in [1usize, 7, 13, 100] {
            let c = round_blocks(&[a.clone(), b.clone()], d).unwrap();
            assert_eq!(c.iter().flatten().sum::<u64>(), d as u64);
            for (blk, row) in [&a, &b].iter().zip(&c) {
                for (r, &n) in blk.entries().iter().zip(row) {
                    assert!((n as f64 - r * d as f64).abs() < 1.0);
                }
            }
        }
    }

    #[test]
    fn membership_uses_counts() {
        let q = NonnegMatrix::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let code = typeclass_code(&b9(), 4, &[q], 1, Some(3)).unwrap();
        let x = [1u8, 0, 0, 1];
        assert_eq!(code.code.buckets0(&x), vec![0, 1, 2]);
        assert!(code.code.buckets0(&[1, 1, 1, 0]).is_empty());
    }

    #[test]
    fn errors() {
        let half = NonnegMatrix::from(&b9()).scaled(0.5);
        assert!(matches!(typeclass_code(&b9(), 10, &[half], 0, None), Err(Error::Mass { .. })));
        let p1 = ProbabilityMatrix::bernoulli(1.0).unwrap();
        let u = NonnegMatrix::from(&ProbabilityMatrix::bernoulli(0.5).unwrap());
        assert!(matches!(typeclass_code(&p1, 10, &[u], 0, None), Err(Error::SupportViolation { .. })));
    }
}
