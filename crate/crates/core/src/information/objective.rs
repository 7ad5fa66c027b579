//! Objectives of the bucketing information function.

use super::ascent::SimplexObjective;
use crate::probmodel::ProbabilityMatrix;

#[inline]
fn ln_pos(x: f64) -> f64 {
    x.max(1e-300).ln()
}

/// Nonzero entries of `P` with their row, column and marginals.
#[derive(Debug, Clone)]
pub(crate) struct Support {
    pub rows: usize,
    pub cols: usize,
    /// flat index into the `rows × cols` grid
    pub flat: Vec<usize>,
    pub row: Vec<usize>,
    pub col: Vec<usize>,
    pub p: Vec<f64>,
    pub row_marginals: Vec<f64>,
    pub col_marginals: Vec<f64>,
}

impl Support {
    pub fn new(p: &ProbabilityMatrix) -> Self {
        let flat = p.support();
        Self {
            rows: p.rows(),
            cols: p.cols(),
            row: flat.iter().map(|&f| f / p.cols()).collect(),
            col: flat.iter().map(|&f| f % p.cols()).collect(),
            p: flat.iter().map(|&f| p.entries()[f]).collect(),
            flat,
            row_marginals: p.row_marginals().to_vec(),
            col_marginals: p.col_marginals().to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    /// Scatters a support vector back onto the full grid.
    pub fn to_grid(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.cols];
        for (e, &f) in self.flat.iter().enumerate() {
            out[f] = v[e];
        }
        out
    }

    /// `(K(Q_row‖P_row), K(Q_col‖P_col), K(Q‖P))` for a probability vector on the support.
    pub fn divergences(&self, q: &[f64]) -> (f64, f64, f64) {
        let mut qr = vec![0.0; self.rows];
        let mut qc = vec![0.0; self.cols];
        let mut full = 0.0;
        for e in 0..self.len() {
            if q[e] > 0.0 {
                qr[self.row[e]] += q[e];
                qc[self.col[e]] += q[e];
                full += q[e] * (q[e] / self.p[e]).ln();
            }
        }
        let side = |m: &[f64], base: &[f64]| {
            m.iter()
                .zip(base)
                .filter(|(&x, _)| x > 0.0)
                .map(|(&x, &b)| x * (x / b).ln())
                .sum::<f64>()
        };
        (
            side(&qr, &self.row_marginals).max(0.0),
            side(&qc, &self.col_marginals).max(0.0),
            full.max(0.0),
        )
    }
}

/// `λ0 K(Q_row‖P_row) + λ1 K(Q_col‖P_col) - μ K(Q‖P)` over probability
/// matrices `Q` supported on `supp(P)`.
pub(crate) struct SingleTerm<'a> {
    pub support: &'a Support,
    pub lambda0: f64,
    pub lambda1: f64,
    pub mu: f64,
}

impl SimplexObjective for SingleTerm<'_> {
    fn value(&self, q: &[f64]) -> f64 {
        let (kr, kc, k) = self.support.divergences(q);
        self.lambda0 * kr + self.lambda1 * kc - self.mu * k
    }

    fn gradient(&self, q: &[f64], g: &mut [f64]) -> f64 {
        let s = self.support;
        let mut qr = vec![0.0; s.rows];
        let mut qc = vec![0.0; s.cols];
        for e in 0..s.len() {
            qr[s.row[e]] += q[e];
            qc[s.col[e]] += q[e];
        }
        for e in 0..s.len() {
            let (j, k) = (s.row[e], s.col[e]);
            g[e] = self.lambda0 * ln_pos(qr[j] / s.row_marginals[j])
                + self.lambda1 * ln_pos(qc[k] / s.col_marginals[k])
                - self.mu * ln_pos(q[e] / s.p[e]);
        }
        self.value(q)
    }
}

/// Multi-block objective
/// `λ0 Σ K(R_i,row) + λ1 Σ K(R_i,col) + (1-μ) K(R_*‖P) - Σ K(R_i‖P)`.
///
/// Blocks are parametrized as `r_{i,e} = s_e π_{i|e}` where `s` is the
/// aggregate `R_*` (a simplex over the support) and `π_{·|e}` distributes
/// entry `e` across the blocks (one simplex per support entry). For `μ = ∞`
/// the aggregate is pinned to `P` and only `π` varies.
pub(crate) struct MultiBlock<'a> {
    pub support: &'a Support,
    pub blocks: usize,
    pub lambda0: f64,
    pub lambda1: f64,
    /// `None` encodes `μ = ∞`.
    pub mu: Option<f64>,
}

struct BlockSums {
    total: Vec<f64>,
    rows: Vec<f64>,
    cols: Vec<f64>,
}

impl MultiBlock<'_> {
    pub fn layout(&self) -> Vec<std::ops::Range<usize>> {
        let m = self.support.len();
        let offset = self.s_len();
        let mut out = Vec::with_capacity(m + 1);
        if offset > 0 {
            out.push(0..m);
        }
        for e in 0..m {
            out.push(offset + e * self.blocks..offset + (e + 1) * self.blocks);
        }
        out
    }

    pub fn s_len(&self) -> usize {
        if self.mu.is_some() {
            self.support.len()
        } else {
            0
        }
    }

    pub fn dim(&self) -> usize {
        self.s_len() + self.support.len() * self.blocks
    }

    #[inline]
    fn s<'x>(&'x self, x: &'x [f64]) -> &'x [f64] {
        if self.mu.is_some() {
            &x[..self.support.len()]
        } else {
            &self.support.p
        }
    }

    #[inline]
    fn pi<'x>(&self, x: &'x [f64], e: usize) -> &'x [f64] {
        let o = self.s_len() + e * self.blocks;
        &x[o..o + self.blocks]
    }

    fn sums(&self, x: &[f64]) -> BlockSums {
        let sp = self.support;
        let nb = self.blocks;
        let s = self.s(x);
        let mut out = BlockSums {
            total: vec![0.0; nb],
            rows: vec![0.0; nb * sp.rows],
            cols: vec![0.0; nb * sp.cols],
        };
        for e in 0..sp.len() {
            let pi = self.pi(x, e);
            for i in 0..nb {
                let r = s[e] * pi[i];
                out.total[i] += r;
                out.rows[i * sp.rows + sp.row[e]] += r;
                out.cols[i * sp.cols + sp.col[e]] += r;
            }
        }
        out
    }

    /// Block matrices `R_i` on the full grid, zero-mass blocks dropped.
    pub fn blocks_of(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let sp = self.support;
        let s = self.s(x);
        (0..self.blocks)
            .map(|i| {
                let v: Vec<f64> = (0..sp.len()).map(|e| s[e] * self.pi(x, e)[i]).collect();
                sp.to_grid(&v)
            })
            .filter(|b| b.iter().sum::<f64>() > 0.0)
            .collect()
    }
}

impl SimplexObjective for MultiBlock<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let sp = self.support;
        let nb = self.blocks;
        let s = self.s(x);
        let sums = self.sums(x);
        let xlnx = |v: f64| if v > 0.0 { v * v.ln() } else { 0.0 };
        let mut acc = 0.0;
        if let Some(mu) = self.mu {
            let ks: f64 = (0..sp.len())
                .filter(|&e| s[e] > 0.0)
                .map(|e| s[e] * (s[e] / sp.p[e]).ln())
                .sum();
            acc += (1.0 - mu) * ks.max(0.0);
        }
        for e in 0..sp.len() {
            let pi = self.pi(x, e);
            for i in 0..nb {
                let r = s[e] * pi[i];
                if r > 0.0 {
                    acc -= r * (r / sp.p[e]).ln();
                }
            }
        }
        for i in 0..nb {
            let t = sums.total[i];
            acc += (1.0 - self.lambda0 - self.lambda1) * xlnx(t);
            for j in 0..sp.rows {
                let v = sums.rows[i * sp.rows + j];
                if v > 0.0 {
                    acc += self.lambda0 * v * (v / sp.row_marginals[j]).ln();
                }
            }
            for k in 0..sp.cols {
                let v = sums.cols[i * sp.cols + k];
                if v > 0.0 {
                    acc += self.lambda1 * v * (v / sp.col_marginals[k]).ln();
                }
            }
        }
        acc
    }

    fn gradient(&self, x: &[f64], g: &mut [f64]) -> f64 {
        let sp = self.support;
        let nb = self.blocks;
        let s = self.s(x);
        let sums = self.sums(x);
        let off = self.s_len();
        for e in 0..sp.len() {
            let pi = self.pi(x, e);
            let (j, k) = (sp.row[e], sp.col[e]);
            let mut ds = 0.0;
            for i in 0..nb {
                let r = s[e] * pi[i];
                let gi = if r > 0.0 {
                    let t = sums.total[i];
                    self.lambda0 * ln_pos(sums.rows[i * sp.rows + j] / (t * sp.row_marginals[j]))
                        + self.lambda1
                            * ln_pos(sums.cols[i * sp.cols + k] / (t * sp.col_marginals[k]))
                        - ln_pos(r / (t * sp.p[e]))
                } else {
                    0.0
                };
                g[off + e * nb + i] = gi;
                ds += pi[i] * gi;
            }
            if let Some(mu) = self.mu {
                g[e] = (1.0 - mu) * ln_pos(s[e] / sp.p[e]) + ds;
            }
        }
        self.value(x)
    }
}

/// `ln[(a0 K(Q_row) + a1 K(Q_col)) / K(Q‖P)]`, the log of the divergence ratio
/// whose supremum over `Q ≠ P` decides sub-conjugacy along direction `(a0, a1)`.
pub(crate) struct LogRatio<'a> {
    pub support: &'a Support,
    pub a0: f64,
    pub a1: f64,
}

/// Below this full divergence the ratio is numerically meaningless; the
/// neighbourhood of `P` is handled by the local quadratic analysis instead.
pub(crate) const RATIO_MIN_DIVERGENCE: f64 = 1e-10;

impl SimplexObjective for LogRatio<'_> {
    fn value(&self, q: &[f64]) -> f64 {
        let (kr, kc, k) = self.support.divergences(q);
        let num = self.a0 * kr + self.a1 * kc;
        if k < RATIO_MIN_DIVERGENCE || num <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (num / k).ln()
    }

    fn gradient(&self, q: &[f64], g: &mut [f64]) -> f64 {
        let s = self.support;
        let (kr, kc, k) = s.divergences(q);
        let num = self.a0 * kr + self.a1 * kc;
        if k < RATIO_MIN_DIVERGENCE || num <= 0.0 {
            g.iter_mut().for_each(|v| *v = 0.0);
            return f64::NEG_INFINITY;
        }
        let mut qr = vec![0.0; s.rows];
        let mut qc = vec![0.0; s.cols];
        for e in 0..s.len() {
            qr[s.row[e]] += q[e];
            qc[s.col[e]] += q[e];
        }
        for e in 0..s.len() {
            let (j, kk) = (s.row[e], s.col[e]);
            let dn = self.a0 * ln_pos(qr[j] / s.row_marginals[j])
                + self.a1 * ln_pos(qc[kk] / s.col_marginals[kk]);
            let dk = ln_pos(q[e] / s.p[e]);
            g[e] = dn / num - dk / k;
        }
        (num / k).ln()
    }
}
