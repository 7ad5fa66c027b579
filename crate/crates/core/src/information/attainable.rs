//! Log-attainable points generated by block decompositions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::probmodel::{kl_extended, kl_vector, NonnegMatrix, ProbabilityMatrix};

/// Per-dimension `(ln n0, ln n1, -ln S, ln W)` realizable asymptotically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttainablePoint {
    pub m0: f64,
    pub m1: f64,
    /// Always nonnegative.
    pub s: f64,
    pub w: f64,
}

impl AttainablePoint {
    pub fn as_array(&self) -> [f64; 4] {
        [self.m0, self.m1, self.s, self.w]
    }

    /// `self + Σ c_g g` over the core generators; coefficients must be
    /// nonnegative for the result to stay attainable.
    pub fn shifted(&self, coefficients: &[f64; 5]) -> AttainablePoint {
        let mut v = self.as_array();
        for (c, g) in coefficients.iter().zip(CORE_GENERATORS) {
            for a in 0..4 {
                v[a] += c * g[a];
            }
        }
        AttainablePoint { m0: v[0], m1: v[1], s: v[2], w: v[3] }
    }
}

/// Cone generators of the core shared by every attainable set.
pub const CORE_GENERATORS: [[f64; 4]; 5] = [
    [1.0, 0.0, 0.0, 1.0],
    [0.0, 1.0, 0.0, 1.0],
    [0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [-1.0, -1.0, 0.0, -1.0],
];

/// Extra generator of the core in the unlimited-dimension cone.
pub const UNLIMITED_CORE_EXTRA_GENERATOR: [f64; 4] = [0.0, 0.0, -1.0, 1.0];

/// `(Σ K(R_i,row), Σ K(R_i,col), K(R_*), Σ K(R_i) - K(R_*))` for blocks of
/// total mass one.
pub fn attainable_point(blocks: &[NonnegMatrix], p: &ProbabilityMatrix) -> Result<AttainablePoint> {
    let mut aggregate = vec![0.0; p.entries().len()];
    let (mut m0, mut m1, mut inner) = (0.0, 0.0, 0.0);
    for b in blocks {
        m0 += kl_vector(&b.row_sums(), p.row_marginals())?;
        m1 += kl_vector(&b.col_sums(), p.col_marginals())?;
        inner += kl_extended(b, p)?;
        for (a, v) in aggregate.iter_mut().zip(b.entries()) {
            *a += v;
        }
    }
    let total: f64 = aggregate.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Mass { total });
    }
    let s = kl_extended(&NonnegMatrix::from_flat(p.rows(), p.cols(), aggregate)?, p)?;
    Ok(AttainablePoint { m0, m1, s, w: inner - s })
}
