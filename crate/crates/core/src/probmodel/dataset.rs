use rand::Rng;

use super::ProbabilityMatrix;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::rng;

/// Fixed-length symbol sequences packed into 64-bit words.
///
/// Symbols use 1, 2, 4 or 8 bits depending on the alphabet size, so a symbol
/// never straddles a word boundary and agreement counts reduce to xor and
/// popcount.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedPoints {
    count: usize,
    dim: usize,
    bits: u32,
    words_per_point: usize,
    words: Vec<u64>,
}

fn bits_for(alphabet: usize) -> Result<u32> {
    match alphabet {
        0..=2 => Ok(1),
        3..=4 => Ok(2),
        5..=16 => Ok(4),
        17..=256 => Ok(8),
        _ => Err(Error::Domain(format!("alphabet of size {alphabet} exceeds 256"))),
    }
}

impl PackedPoints {
    pub fn new(alphabet: usize, dim: usize) -> Result<Self> {
        let bits = bits_for(alphabet)?;
        let words_per_point = (dim * bits as usize).div_ceil(64).max(1);
        Ok(Self { count: 0, dim, bits, words_per_point, words: Vec::new() })
    }

    pub fn push(&mut self, symbols: &[u8]) {
        assert_eq!(symbols.len(), self.dim);
        let per_word = 64 / self.bits as usize;
        let start = self.words.len();
        self.words.resize(start + self.words_per_point, 0);
        for (c, &s) in symbols.iter().enumerate() {
            let w = start + c / per_word;
            self.words[w] |= (s as u64) << ((c % per_word) as u32 * self.bits);
        }
        self.count += 1;
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn symbol(&self, i: usize, coord: usize) -> u8 {
        let per_word = 64 / self.bits as usize;
        let w = self.words[i * self.words_per_point + coord / per_word];
        let mask = (1u64 << self.bits) - 1;
        ((w >> ((coord % per_word) as u32 * self.bits)) & mask) as u8
    }

    /// Unpacked copy of point `i`.
    pub fn point(&self, i: usize) -> Vec<u8> {
        let mut out = vec![0u8; self.dim];
        self.read_into(i, &mut out);
        out
    }

    pub fn read_into(&self, i: usize, out: &mut [u8]) {
        for (c, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = self.symbol(i, c);
        }
    }

    fn words_of(&self, i: usize) -> &[u64] {
        &self.words[i * self.words_per_point..(i + 1) * self.words_per_point]
    }

    /// Number of coordinates where point `i` of `self` equals point `j` of
    /// `other`. Both sets must share the symbol width and dimension.
    pub fn agreements(&self, i: usize, other: &PackedPoints, j: usize) -> usize {
        assert_eq!(self.bits, other.bits);
        assert_eq!(self.dim, other.dim);
        let low = low_bit_mask(self.bits);
        let mismatches: u32 = self
            .words_of(i)
            .iter()
            .zip(other.words_of(j))
            .map(|(a, b)| {
                let mut x = a ^ b;
                let mut shift = self.bits / 2;
                while shift > 0 {
                    x |= x >> shift;
                    shift /= 2;
                }
                (x & low).count_ones()
            })
            .sum();
        self.dim - mismatches as usize
    }
}

fn low_bit_mask(bits: u32) -> u64 {
    match bits {
        1 => u64::MAX,
        2 => 0x5555_5555_5555_5555,
        4 => 0x1111_1111_1111_1111,
        _ => 0x0101_0101_0101_0101,
    }
}

/// Inverse-CDF sampler over a finite distribution, with a bit-slicing fast
/// path for uniform power-of-two alphabets.
#[derive(Debug, Clone)]
pub(crate) struct Categorical {
    cumulative: Vec<f64>,
    uniform_bits: Option<u32>,
}

impl Categorical {
    pub(crate) fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let mut cumulative: Vec<f64> = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        // the last positive entry absorbs rounding; zero-probability tail entries are never drawn
        if let Some(last) = probs.iter().rposition(|&p| p > 0.0) {
            cumulative[last..].iter_mut().for_each(|c| *c = f64::INFINITY);
        }
        let n = probs.len();
        let uniform = n.is_power_of_two()
            && n <= 256
            && probs.iter().all(|&p| p == probs[0]);
        let uniform_bits = uniform.then(|| n.trailing_zeros());
        Self { cumulative, uniform_bits }
    }

    #[inline]
    pub(crate) fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        self.cumulative.iter().position(|&c| u < c).unwrap_or(self.cumulative.len() - 1)
    }

    pub(crate) fn fill<R: Rng>(&self, rng: &mut R, out: &mut [u8]) {
        match self.uniform_bits {
            Some(0) => out.fill(0),
            Some(bits) => {
                let per_draw = 64 / bits as usize;
                let mask = (1u64 << bits) - 1;
                for chunk in out.chunks_mut(per_draw) {
                    let mut word: u64 = rng.random();
                    for o in chunk {
                        *o = (word & mask) as u8;
                        word >>= bits;
                    }
                }
            }
            None => out.iter_mut().for_each(|o| *o = self.sample(rng) as u8),
        }
    }
}

/// Two point sets with one planted correlated pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetPair {
    pub d: usize,
    pub x0: PackedPoints,
    pub x1: PackedPoints,
    /// `(i0, i1)`: index of the planted point in `x0` and in `x1`.
    pub planted: (usize, usize),
    pub seed: u64,
}

impl DatasetPair {
    /// Fraction of coordinates on which the planted pair agrees.
    pub fn planted_agreement(&self) -> f64 {
        let (i0, i1) = self.planted;
        self.x0.agreements(i0, &self.x1, i1) as f64 / self.d as f64
    }
}

/// Samples `n0` points over `{0..b0-1}^d` and `n1` over `{0..b1-1}^d`, with
/// coordinates drawn from the marginals of `P`, except for one uniformly
/// chosen pair whose coordinates are drawn jointly from `P`.
pub fn generate_dataset(
    p: &ProbabilityMatrix,
    d: usize,
    n0: usize,
    n1: usize,
    seed: u64,
) -> Result<DatasetPair> {
    generate_dataset_with(Execution::default(), p, d, n0, n1, seed)
}

pub fn generate_dataset_with(
    exec: Execution,
    p: &ProbabilityMatrix,
    d: usize,
    n0: usize,
    n1: usize,
    seed: u64,
) -> Result<DatasetPair> {
    if d == 0 || n0 == 0 || n1 == 0 {
        return Err(Error::Domain("d, n0 and n1 must be at least 1".into()));
    }
    let mut x0 = PackedPoints::new(p.rows(), d)?;
    let mut x1 = PackedPoints::new(p.cols(), d)?;

    let mut pick = rng::stream(seed, "planted-index", 0);
    let planted = (pick.random_range(0..n0), pick.random_range(0..n1));

    let joint = Categorical::new(p.entries());
    let mut pair_rng = rng::stream(seed, "planted-pair", 0);
    let mut a = vec![0u8; d];
    let mut b = vec![0u8; d];
    for c in 0..d {
        let cell = joint.sample(&mut pair_rng);
        a[c] = (cell / p.cols()) as u8;
        b[c] = (cell % p.cols()) as u8;
    }

    let rows = Categorical::new(p.row_marginals());
    let cols = Categorical::new(p.col_marginals());
    let draw = |sampler: &Categorical, tag: &str, i: usize| {
        let mut r = rng::stream(seed, tag, i as u64);
        let mut out = vec![0u8; d];
        sampler.fill(&mut r, &mut out);
        out
    };
    let side0 = exec.map_range(n0, |i| if i == planted.0 { a.clone() } else { draw(&rows, "x0", i) });
    let side1 = exec.map_range(n1, |i| if i == planted.1 { b.clone() } else { draw(&cols, "x1", i) });
    side0.iter().for_each(|pt| x0.push(pt));
    side1.iter().for_each(|pt| x1.push(pt));
    Ok(DatasetPair { d, x0, x1, planted, seed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn packing_round_trips_every_width() {
        for alphabet in [2usize, 3, 4, 9, 200] {
            let mut pts = PackedPoints::new(alphabet, 37).unwrap();
            let a: Vec<u8> = (0..37).map(|i| (i * 7 % alphabet) as u8).collect();
            let b: Vec<u8> = (0..37).map(|i| (i * 5 % alphabet) as u8).collect();
            pts.push(&a);
            pts.push(&b);
            assert_eq!(pts.point(0), a);
            assert_eq!(pts.point(1), b);
            let agree = a.iter().zip(&b).filter(|(x, y)| x == y).count();
            assert_eq!(pts.agreements(0, &pts, 1), agree);
            assert_eq!(pts.agreements(0, &pts, 0), 37);
        }
        assert!(PackedPoints::new(300, 4).is_err());
    }

    #[test]
    fn perfect_correlation_copies_the_point() {
        let p = ProbabilityMatrix::bernoulli(1.0).unwrap();
        for seed in 0..5 {
            let ds = generate_dataset(&p, 32, 1, 1, seed).unwrap();
            assert_eq!(ds.planted, (0, 0));
            assert_eq!(ds.x0.point(0), ds.x1.point(0));
        }
    }

    #[test]
    fn planted_agreement_concentrates() {
        let p = ProbabilityMatrix::bernoulli(0.9).unwrap();
        // sd of the agreement fraction is 0.003, the window is ±6.7 sd
        for seed in 0..20 {
            let ds = generate_dataset(&p, 10_000, 2, 2, seed).unwrap();
            let f = ds.planted_agreement();
            assert!((0.88..=0.92).contains(&f), "seed {seed}: {f}");
        }
    }

    #[test]
    fn generation_is_deterministic_and_mode_independent() {
        let p = ProbabilityMatrix::new(vec![vec![0.3, 0.1, 0.1], vec![0.05, 0.25, 0.2]]).unwrap();
        let a = generate_dataset(&p, 50, 20, 30, 99).unwrap();
        let b = generate_dataset(&p, 50, 20, 30, 99).unwrap();
        let c = generate_dataset_with(Execution::Sequential, &p, 50, 20, 30, 99).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_ne!(a, generate_dataset(&p, 50, 20, 30, 100).unwrap());
        assert!(generate_dataset(&p, 0, 1, 1, 0).is_err());
    }

    #[test]
    fn zero_probability_symbols_never_drawn() {
        let p = ProbabilityMatrix::new(vec![vec![0.5, 0.0, 0.0], vec![0.0, 0.5, 0.0]]).unwrap();
        let ds = generate_dataset(&p, 200, 5, 5, 3).unwrap();
        for i in 0..5 {
            assert!(ds.x1.point(i).iter().all(|&s| s < 2));
        }
    }
}
