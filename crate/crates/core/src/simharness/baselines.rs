//! Exponent baselines, shell exponent tables and the sparse-data hashes.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codes::shell_analytics;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::logspace::agreement_information;
use crate::probmodel::{generate_dataset_with, ProbabilityMatrix};
use crate::rng;

/// Work exponents `W ≈ n^e` for equal set sizes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineExponents {
    /// `log2(2/p)`: random `k`-subsets with `k ≈ log2 n`.
    pub classical: f64,
    /// `1/p`: the shell construction in the limit.
    pub improved: f64,
    /// `3 - 2p`: Hamming-metric locality-sensitive hashing.
    pub indyk_motwani: f64,
    /// `2 / (1 + e^{2p-2})`: a cell-probe lower bound for that metric view.
    pub mnp_lower: f64,
}

pub fn baseline_exponents(p: f64) -> Result<BaselineExponents> {
    if !(0.5..=1.0).contains(&p) {
        return Err(Error::Domain(format!("p must lie in [1/2, 1], got {p}")));
    }
    Ok(BaselineExponents {
        classical: (2.0 / p).log2(),
        improved: 1.0 / p,
        indyk_motwani: 3.0 - 2.0 * p,
        mnp_lower: 2.0 / (1.0 + (2.0 * p - 2.0).exp()),
    })
}

/// Slack used for every row of [`exponent_table`].
pub const EXPONENT_TABLE_EPSILON: f64 = 0.1;

/// Shell exponents at finite `d` next to their `d → ∞` limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentRow {
    pub d: usize,
    pub d0: usize,
    /// Realized `2 d0 / d - 1`.
    pub rho: f64,
    pub ln_n_over_d: f64,
    pub ln_t_over_d: f64,
    /// `ln T / ln n`
    pub ratio: f64,
    /// `I((1+ρ)/2)` at the requested `ρ`.
    pub limit_ln_n_over_d: f64,
    /// `p I((1+ρ/p)/2)` at the requested `ρ`.
    pub limit_ln_t_over_d: f64,
    pub limit_ratio: f64,
}

/// One row per `d`, with `d0 = round((1+ρ)d/2)`, `ln n = -ln p_{A*}` and
/// `ln T` from the shell analytics at `ε = 0.1`.
pub fn exponent_table(p: f64, d_list: &[usize], rho: f64) -> Result<Vec<ExponentRow>> {
    if !(p > 0.5 && p < 1.0) {
        return Err(Error::Domain(format!("p must lie in (1/2, 1), got {p}")));
    }
    if !(0.0..p).contains(&rho) {
        return Err(Error::Domain(format!("need 0 <= rho < p, got rho={rho}")));
    }
    let limit_n = agreement_information((1.0 + rho) / 2.0);
    let limit_t = p * agreement_information((1.0 + rho / p) / 2.0);
    d_list
        .iter()
        .map(|&d| {
            let d0 = ((1.0 + rho) * d as f64 / 2.0).round() as usize;
            if d0 == 0 || d0 > d {
                return Err(Error::Domain(format!("d0={d0} outside [1, {d}]")));
            }
            let a = shell_analytics(d, d0, p, EXPONENT_TABLE_EPSILON)?;
            let df = d as f64;
            Ok(ExponentRow {
                d,
                d0,
                rho: 2.0 * d0 as f64 / df - 1.0,
                ln_n_over_d: a.ln_n / df,
                ln_t_over_d: a.ln_t / df,
                ratio: a.ln_t / a.ln_n,
                limit_ln_n_over_d: limit_n,
                limit_ln_t_over_d: limit_t,
                limit_ratio: limit_t / limit_n,
            })
        })
        .collect()
}

/// Sum by recursive halving; keeps heavy-tailed sums order-stable.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn cauchy<R: Rng>(r: &mut R) -> f64 {
    (std::f64::consts::PI * (r.random::<f64>() - 0.5)).tan()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CauchyAgreement {
    pub samples: usize,
    /// Frequency of `sign(C1 + C2) = sign(C1 + C3)`.
    pub agreement: f64,
    /// Frequency of `sign(C1 + C2) = sign(C3 + C4)`.
    pub independent: f64,
}

const CAUCHY_CHUNK: usize = 4096;

/// Sign agreement of Cauchy sums sharing one summand.
pub fn cauchy_baseline(samples: usize, seed: u64) -> Result<CauchyAgreement> {
    if samples < 10_000 {
        return Err(Error::Domain(format!("need at least 10^4 samples, got {samples}")));
    }
    let counts = Execution::default().map_chunks(samples, CAUCHY_CHUNK, |range| {
        let mut r = rng::stream(seed, "cauchy", (range.start / CAUCHY_CHUNK) as u64);
        let (mut shared, mut independent) = (0usize, 0usize);
        for _ in range {
            let c: [f64; 4] = std::array::from_fn(|_| cauchy(&mut r));
            let s = (c[0] + c[1]) > 0.0;
            shared += (s == (c[0] + c[2] > 0.0)) as usize;
            independent += (s == (c[2] + c[3] > 0.0)) as usize;
        }
        (shared, independent)
    });
    let (a, b) = counts.iter().fold((0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
    Ok(CauchyAgreement {
        samples,
        agreement: a as f64 / samples as f64,
        independent: b as f64 / samples as f64,
    })
}

/// `[[1-3ε, ε], [ε, ε]]`: sparse bits with a planted overlap.
pub fn sparse_matrix(eps: f64) -> Result<ProbabilityMatrix> {
    if !(eps > 0.0 && eps <= 0.25) {
        return Err(Error::Domain(format!("eps must lie in (0, 1/4], got {eps}")));
    }
    ProbabilityMatrix::new(vec![vec![1.0 - 3.0 * eps, eps], vec![eps, eps]])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HashMethodReport {
    pub method: String,
    pub trials: usize,
    pub successes: usize,
    /// Per-try probability that the planted pair shares a bucket.
    pub success_rate: f64,
    pub mean_comparisons: f64,
    /// `ln((n + comparisons) / success rate) / ln n`: expected work of
    /// repeating tries until success.
    pub work_exponent: f64,
    pub predicted_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseHashReport {
    pub eps: f64,
    pub k: usize,
    pub n: usize,
    pub d: usize,
    pub first_ones: HashMethodReport,
    pub cauchy: HashMethodReport,
}

/// Dimension giving about `4k` ones per point.
fn sparse_dimension(eps: f64, k: usize) -> usize {
    ((2.0 * k as f64 / eps).ceil() as usize).max(64)
}

fn comparisons<K: std::hash::Hash + Eq + Clone>(h0: &[K], h1: &[K]) -> u64 {
    let mut counts: HashMap<&K, u64> = HashMap::new();
    for h in h0 {
        *counts.entry(h).or_default() += 1;
    }
    h1.iter().map(|h| counts.get(h).copied().unwrap_or(0)).sum()
}

/// One try per trial of two single-bucket hashes on fresh sparse data:
/// the positions of the first `k` ones under a random coordinate order, and
/// `k` concatenated signs of Cauchy projections.
pub fn sparse_hash_experiment(eps: f64, k: usize, n: usize, trials: usize, seed: u64) -> Result<SparseHashReport> {
    let p = sparse_matrix(eps)?;
    if k == 0 || k > 63 || n < 2 || trials == 0 {
        return Err(Error::Domain("need 1 <= k <= 63, n >= 2 and trials >= 1".into()));
    }
    let d = sparse_dimension(eps, k);
    let per_trial = Execution::default().map_range(trials, |i| -> Result<(bool, u64, bool, u64)> {
        let data = generate_dataset_with(Execution::Sequential, &p, d, n, n, rng::derive_seed(seed, "sparse-trial", i as u64))?;
        let mut r = rng::stream(seed, "sparse-hash", i as u64);
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut r);
        let proj: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| cauchy(&mut r)).collect()).collect();

        let mut point = vec![0u8; d];
        let mut hash_side = |pts: &crate::probmodel::PackedPoints| {
            let mut first = Vec::with_capacity(n);
            let mut signs = Vec::with_capacity(n);
            let mut terms = Vec::new();
            for j in 0..n {
                pts.read_into(j, &mut point);
                let key: Vec<u32> = order.iter().filter(|&&c| point[c] == 1).take(k).map(|&c| c as u32).collect();
                first.push(key);
                let mut word = 0u64;
                for (b, row) in proj.iter().enumerate() {
                    terms.clear();
                    terms.extend((0..d).filter(|&c| point[c] == 1).map(|c| row[c]));
                    if pairwise_sum(&terms) > 0.0 {
                        word |= 1 << b;
                    }
                }
                signs.push(word);
            }
            (first, signs)
        };
        let (f0, s0) = hash_side(&data.x0);
        let (f1, s1) = hash_side(&data.x1);
        let (i0, i1) = data.planted;
        Ok((f0[i0] == f1[i1], comparisons(&f0, &f1), s0[i0] == s1[i1], comparisons(&s0, &s1)))
    });
    let per_trial = per_trial.into_iter().collect::<Result<Vec<_>>>()?;
    let summarize = |method: &str, hits: usize, comps: u64, predicted: f64| {
        let rate = hits as f64 / trials as f64;
        let mean = comps as f64 / trials as f64;
        HashMethodReport {
            method: method.to_string(),
            trials,
            successes: hits,
            success_rate: rate,
            mean_comparisons: mean,
            work_exponent: ((n as f64 + mean) / rate).ln() / (n as f64).ln(),
            predicted_exponent: predicted,
        }
    };
    let first_hits = per_trial.iter().filter(|t| t.0).count();
    let first_comps = per_trial.iter().map(|t| t.1).sum();
    let cauchy_hits = per_trial.iter().filter(|t| t.2).count();
    let cauchy_comps = per_trial.iter().map(|t| t.3).sum();
    Ok(SparseHashReport {
        eps,
        k,
        n,
        d,
        first_ones: summarize("first_ones", first_hits, first_comps, 1.0 + 3f64.ln() / (1.0 / (2.0 * eps)).ln()),
        cauchy: summarize("cauchy_sign", cauchy_hits, cauchy_comps, 3f64.log2()),
    })
}
