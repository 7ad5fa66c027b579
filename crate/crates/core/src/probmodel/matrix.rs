use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted deviation of the entry total from 1.
pub const MATRIX_SUM_TOLERANCE: f64 = 1e-9;

/// Joint distribution `P` of one coordinate pair: `b0 × b1` entries `p_jk`
/// stored row-major, with precomputed marginals `p_j*` and `p_*k`.
///
/// Totals within [`MATRIX_SUM_TOLERANCE`] of 1 are accepted and the entries
/// stored unchanged, so JSON round trips are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ProbabilityMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    row_marginals: Vec<f64>,
    col_marginals: Vec<f64>,
}

/// On-disk form: `{"rows": b0, "cols": b1, "entries": [[...], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<f64>>,
}

impl TryFrom<MatrixJson> for ProbabilityMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        if m.entries.len() != m.rows || m.entries.iter().any(|r| r.len() != m.cols) {
            return Err(Error::Shape(format!(
                "declared {}x{} but entries do not match",
                m.rows, m.cols
            )));
        }
        ProbabilityMatrix::new(m.entries)
    }
}

impl From<ProbabilityMatrix> for MatrixJson {
    fn from(p: ProbabilityMatrix) -> Self {
        MatrixJson { rows: p.rows, cols: p.cols, entries: p.to_grid() }
    }
}

impl ProbabilityMatrix {
    /// Validates a rectangular grid of probabilities.
    pub fn new(grid: Vec<Vec<f64>>) -> Result<Self> {
        let rows = grid.len();
        let cols = grid.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 {
            return Err(Error::Shape("empty matrix".into()));
        }
        if grid.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_flat(rows, cols, grid.into_iter().flatten().collect())
    }

    pub fn from_flat(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        for (i, &v) in entries.iter().enumerate() {
            if v.is_nan() || v < 0.0 {
                return Err(Error::NegativeEntry { row: i / cols, col: i % cols, value: v });
            }
        }
        let sum: f64 = entries.iter().sum();
        if !sum.is_finite() || (sum - 1.0).abs() > MATRIX_SUM_TOLERANCE {
            return Err(Error::NotNormalized { sum });
        }
        // Entries are kept as given so serialization round-trips bit for bit.
        let mut row_marginals = vec![0.0; rows];
        let mut col_marginals = vec![0.0; cols];
        for j in 0..rows {
            for k in 0..cols {
                let v = entries[j * cols + k];
                row_marginals[j] += v;
                col_marginals[k] += v;
            }
        }
        Ok(Self { rows, cols, entries, row_marginals, col_marginals })
    }

    /// `[[p/2, (1-p)/2], [(1-p)/2, p/2]]`: bits of the planted pair agree
    /// with probability `p`, marginals uniform.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.5..=1.0).contains(&p) {
            return Err(Error::OutOfRange { value: p, range: "[1/2, 1]" });
        }
        let q = (1.0 - p) / 2.0;
        Self::from_flat(2, 2, vec![p / 2.0, q, q, p / 2.0])
    }

    /// Independent matrix with the given marginals.
    pub fn independent(rows: &[f64], cols: &[f64]) -> Result<Self> {
        let entries = rows.iter().flat_map(|a| cols.iter().map(move |b| a * b)).collect();
        Self::from_flat(rows.len(), cols.len(), entries)
    }

    /// Tensor product. Composite indices are row-major on the factors:
    /// `j = j1 * other.rows + j2`, `k = k1 * other.cols + k2`.
    pub fn tensor(&self, other: &ProbabilityMatrix) -> ProbabilityMatrix {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut entries = vec![0.0; rows * cols];
        for j1 in 0..self.rows {
            for j2 in 0..other.rows {
                for k1 in 0..self.cols {
                    for k2 in 0..other.cols {
                        let j = j1 * other.rows + j2;
                        let k = k1 * other.cols + k2;
                        entries[j * cols + k] = self.get(j1, k1) * other.get(j2, k2);
                    }
                }
            }
        }
        let mut row_marginals = vec![0.0; rows];
        let mut col_marginals = vec![0.0; cols];
        for j in 0..rows {
            for k in 0..cols {
                row_marginals[j] += entries[j * cols + k];
                col_marginals[k] += entries[j * cols + k];
            }
        }
        ProbabilityMatrix { rows, cols, entries, row_marginals, col_marginals }
    }

    /// `self ⊗ self ⊗ ...` (`k` factors).
    pub fn tensor_power(&self, k: usize) -> ProbabilityMatrix {
        let mut acc = ProbabilityMatrix::from_flat(1, 1, vec![1.0]).expect("unit matrix");
        for _ in 0..k {
            acc = acc.tensor(self);
        }
        acc
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j * self.cols + k]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn row_marginals(&self) -> &[f64] {
        &self.row_marginals
    }

    pub fn col_marginals(&self) -> &[f64] {
        &self.col_marginals
    }

    pub fn to_grid(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    /// Flat indices of the nonzero entries.
    pub fn support(&self) -> Vec<usize> {
        (0..self.entries.len()).filter(|&i| self.entries[i] > 0.0).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Shape(e.to_string()))
    }
}

/// Nonnegative `b0 × b1` matrix `R` with positive total `r_**`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonnegMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl NonnegMatrix {
    pub fn new(grid: Vec<Vec<f64>>) -> Result<Self> {
        let rows = grid.len();
        let cols = grid.first().map_or(0, Vec::len);
        if grid.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Self::from_flat(rows, cols, grid.into_iter().flatten().collect())
    }

    pub fn from_flat(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        for (i, &v) in entries.iter().enumerate() {
            if v.is_nan() || v < 0.0 || v.is_infinite() {
                return Err(Error::NegativeEntry { row: i / cols, col: i % cols, value: v });
            }
        }
        if entries.iter().sum::<f64>() <= 0.0 {
            return Err(Error::Shape("total mass must be positive".into()));
        }
        Ok(Self { rows, cols, entries })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j * self.cols + k]
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.entries.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for row in self.entries.chunks(self.cols) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }

    pub fn scaled(&self, factor: f64) -> NonnegMatrix {
        NonnegMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn to_grid(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

impl From<&ProbabilityMatrix> for NonnegMatrix {
    fn from(p: &ProbabilityMatrix) -> Self {
        NonnegMatrix { rows: p.rows, cols: p.cols, entries: p.entries.clone() }
    }
}

/// Extended divergence `K(r‖p) = Σ r_i ln(r_i / (r_* p_i))` of a nonnegative
/// vector against a probability vector; `+inf` on a support violation, 0 for
/// an all-zero `r`.
pub(crate) fn kl_raw(r: &[f64], p: &[f64]) -> f64 {
    let total: f64 = r.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (&ri, &pi) in r.iter().zip(p) {
        if ri > 0.0 {
            if pi <= 0.0 {
                return f64::INFINITY;
            }
            acc += ri * (ri / (total * pi)).ln();
        }
    }
    acc.max(0.0)
}

/// Extended divergence of a nonnegative vector against a probability vector.
pub fn kl_vector(r: &[f64], p: &[f64]) -> Result<f64> {
    if r.len() != p.len() {
        return Err(Error::Shape(format!("lengths {} and {}", r.len(), p.len())));
    }
    if let Some(i) = r.iter().zip(p).position(|(&ri, &pi)| ri > 0.0 && pi <= 0.0) {
        return Err(Error::SupportViolation { row: i, col: 0 });
    }
    Ok(kl_raw(r, p))
}

/// Extended Kullback-Leibler divergence `K(R‖P)` in nats.
pub fn kl_extended(r: &NonnegMatrix, p: &ProbabilityMatrix) -> Result<f64> {
    if r.rows != p.rows || r.cols != p.cols {
        return Err(Error::Shape(format!(
            "R is {}x{}, P is {}x{}",
            r.rows, r.cols, p.rows, p.cols
        )));
    }
    if let Some(i) = (0..r.entries.len()).find(|&i| r.entries[i] > 0.0 && p.entries[i] <= 0.0) {
        return Err(Error::SupportViolation { row: i / r.cols, col: i % r.cols });
    }
    Ok(kl_raw(&r.entries, &p.entries))
}

/// Shannon mutual information between the two coordinates of `P`, in nats.
pub fn mutual_information(p: &ProbabilityMatrix) -> f64 {
    let mut acc = 0.0;
    for j in 0..p.rows {
        for k in 0..p.cols {
            let v = p.get(j, k);
            if v > 0.0 {
                acc += v * (v / (p.row_marginals[j] * p.col_marginals[k])).ln();
            }
        }
    }
    acc.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform() -> ProbabilityMatrix {
        ProbabilityMatrix::new(vec![vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap()
    }

    #[test]
    fn make_matrix_examples() {
        let u = uniform();
        assert_eq!(u.row_marginals(), &[0.5, 0.5]);
        assert_eq!(u.col_marginals(), &[0.5, 0.5]);
        let b = ProbabilityMatrix::new(vec![vec![0.45, 0.05], vec![0.05, 0.45]]).unwrap();
        let direct = ProbabilityMatrix::bernoulli(0.9).unwrap();
        assert!(b.entries().iter().zip(direct.entries()).all(|(x, y)| (x - y).abs() < 1e-15));
        assert!(matches!(
            ProbabilityMatrix::new(vec![vec![0.5, 0.6], vec![-0.1, 0.0]]),
            Err(Error::NegativeEntry { row: 1, col: 0, .. })
        ));
        assert!(matches!(
            ProbabilityMatrix::new(vec![vec![0.5, 0.6], vec![0.1, 0.0]]),
            Err(Error::NotNormalized { .. })
        ));
        assert!(ProbabilityMatrix::new(vec![vec![0.5, 0.5], vec![0.0]]).is_err());
    }

    #[test]
    fn bernoulli_examples() {
        assert_eq!(ProbabilityMatrix::bernoulli(0.5).unwrap(), uniform());
        assert_eq!(
            ProbabilityMatrix::bernoulli(1.0).unwrap().entries(),
            &[0.5, 0.0, 0.0, 0.5]
        );
        assert!(matches!(ProbabilityMatrix::bernoulli(0.49), Err(Error::OutOfRange { .. })));
        assert!(matches!(ProbabilityMatrix::bernoulli(1.01), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn tensor_examples() {
        let uu = uniform().tensor(&uniform());
        assert_eq!((uu.rows(), uu.cols()), (4, 4));
        assert!(uu.entries().iter().all(|&v| (v - 1.0 / 16.0).abs() < 1e-15));

        let b = ProbabilityMatrix::bernoulli(0.9).unwrap();
        let bb = b.tensor(&b);
        assert!((bb.get(0, 0) - 0.2025).abs() < 1e-15);
        // layout: j = j1*2 + j2, k = k1*2 + k2
        assert!((bb.get(1, 2) - b.get(0, 1) * b.get(1, 0)).abs() < 1e-15);

        let one = ProbabilityMatrix::new(vec![vec![1.0]]).unwrap();
        assert_eq!(b.tensor(&one), b);
        assert_eq!(one.tensor(&b), b);
    }

    #[test]
    fn kl_examples() {
        let u = uniform();
        let b = ProbabilityMatrix::bernoulli(0.9).unwrap();
        assert_eq!(kl_extended(&NonnegMatrix::from(&b), &b).unwrap(), 0.0);
        let diag = NonnegMatrix::new(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((kl_extended(&diag, &u).unwrap() - 2f64.ln()).abs() < 1e-15);
        let skew = NonnegMatrix::new(vec![vec![0.9, 0.0], vec![0.0, 0.1]]).unwrap();
        let expected = 0.9 * (0.9f64 / 0.45).ln() + 0.1 * (0.1f64 / 0.45).ln();
        assert!((kl_extended(&skew, &b).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.473_425).abs() < 1e-6);
        // scale invariance of the extended divergence
        assert!((kl_extended(&skew.scaled(3.0), &b).unwrap() - 3.0 * expected).abs() < 1e-14);

        let p1 = ProbabilityMatrix::bernoulli(1.0).unwrap();
        assert!(matches!(
            kl_extended(&NonnegMatrix::from(&u), &p1),
            Err(Error::SupportViolation { row: 0, col: 1 })
        ));
        assert!(matches!(kl_vector(&[0.5, 0.5], &[1.0, 0.0]), Err(Error::SupportViolation { .. })));
        assert!((kl_vector(&[1.0, 0.0], &[0.5, 0.5]).unwrap() - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mutual_information_examples() {
        assert_eq!(mutual_information(&uniform()), 0.0);
        let b = ProbabilityMatrix::bernoulli(0.9).unwrap();
        assert!((mutual_information(&b) - 0.368_064_2).abs() < 1e-7);
        let p1 = ProbabilityMatrix::bernoulli(1.0).unwrap();
        assert!((mutual_information(&p1) - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let b = ProbabilityMatrix::bernoulli(0.9).unwrap();
        let text = b.to_json();
        assert!(text.contains("\"rows\":2"));
        assert_eq!(ProbabilityMatrix::from_json(&text).unwrap(), b);
        assert!(ProbabilityMatrix::from_json(r#"{"rows":3,"cols":2,"entries":[[0.5,0.5]]}"#).is_err());
        assert!(ProbabilityMatrix::from_json(r#"{"rows":1,"cols":2,"entries":[[0.7,0.5]]}"#).is_err());
    }
}
