//! Monte Carlo validation of code analytics and the baseline comparisons.

mod baselines;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::codes::{code_success_exact, code_work, BucketingCode};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::probmodel::{generate_dataset_with, ProbabilityMatrix};
use crate::rng;

pub use baselines::{
    baseline_exponents, cauchy_baseline, exponent_table, pairwise_sum, sparse_hash_experiment,
    sparse_matrix, BaselineExponents, CauchyAgreement, ExponentRow, HashMethodReport,
    SparseHashReport,
};

/// Largest `trials · (n0 + n1) · membership cost · words per point` accepted
/// by [`run_experiment`].
pub const ASSIGNMENT_BUDGET: f64 = 2e11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub kind: String,
    pub d: usize,
    pub n0: usize,
    pub n1: usize,
    /// Bucket count of the code.
    pub t: u64,
    pub trials: usize,
    pub successes: usize,
    pub empirical_s: f64,
    /// 95% half-width of `empirical_s`.
    pub ci: f64,
    pub mean_comparisons: f64,
    pub mean_lookups: f64,
    /// `n0 + n1 + lookups + comparisons` per trial.
    pub mean_operations: f64,
    pub sd_operations: f64,
    /// Exact success when it can be computed, `NaN` otherwise.
    pub predicted_s: f64,
    pub predicted_w: f64,
    pub seed: u64,
}

impl ExperimentResult {
    /// Standard error of `empirical_s` under the binomial model.
    pub fn standard_error(&self) -> f64 {
        (self.empirical_s * (1.0 - self.empirical_s) / self.trials as f64).sqrt()
    }

    /// CSV record with the experiment metadata the result does not carry.
    pub fn record(&self, experiment_id: &str, d0: Option<usize>, p: f64) -> ExperimentRecord {
        ExperimentRecord {
            experiment_id: experiment_id.to_string(),
            kind: self.kind.clone(),
            d: self.d,
            d0,
            p,
            n0: self.n0,
            n1: self.n1,
            t: self.t,
            trials: self.trials,
            empirical_s: self.empirical_s,
            ci: self.ci,
            predicted_s: self.predicted_s,
            mean_comparisons: self.mean_comparisons,
            predicted_w: self.predicted_w,
            seed: self.seed,
        }
    }
}

/// One CSV row of the experiment schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment_id: String,
    pub kind: String,
    pub d: usize,
    pub d0: Option<usize>,
    pub p: f64,
    pub n0: usize,
    pub n1: usize,
    #[serde(rename = "T")]
    pub t: u64,
    pub trials: usize,
    #[serde(rename = "empirical_S")]
    pub empirical_s: f64,
    pub ci: f64,
    #[serde(rename = "predicted_S")]
    pub predicted_s: f64,
    pub mean_comparisons: f64,
    #[serde(rename = "predicted_W")]
    pub predicted_w: f64,
    pub seed: u64,
}

/// Normal-approximation 95% half-width with a continuity floor of `1/(2n)`.
pub fn binomial_ci(successes: usize, trials: usize) -> f64 {
    let n = trials as f64;
    let s = successes as f64 / n;
    1.96 * (s * (1.0 - s) / n).sqrt() + 0.5 / n
}

struct Trial {
    success: bool,
    comparisons: f64,
    lookups: f64,
}

fn one_trial(code: &BucketingCode, p: &ProbabilityMatrix, d: usize, n0: usize, n1: usize, seed: u64) -> Result<Trial> {
    let data = generate_dataset_with(Execution::Sequential, p, d, n0, n1, seed)?;
    let mut point = vec![0u8; d];
    let mut counts: HashMap<u64, u64> = HashMap::new();
    let mut lookups = 0usize;
    let mut planted0 = Vec::new();
    for i in 0..n0 {
        data.x0.read_into(i, &mut point);
        let ids = code.buckets0(&point);
        lookups += ids.len();
        for &t in &ids {
            *counts.entry(t).or_default() += 1;
        }
        if i == data.planted.0 {
            planted0 = ids;
        }
    }
    let mut comparisons = 0u64;
    let mut success = false;
    for i in 0..n1 {
        data.x1.read_into(i, &mut point);
        let ids = code.buckets1(&point);
        lookups += ids.len();
        comparisons += ids.iter().map(|t| counts.get(t).copied().unwrap_or(0)).sum::<u64>();
        if i == data.planted.1 {
            success = ids.iter().any(|t| planted0.binary_search(t).is_ok());
        }
    }
    Ok(Trial { success, comparisons: comparisons as f64, lookups: lookups as f64 })
}

/// Runs `trials` independent datasets through `code`.
///
/// Each trial draws a fresh dataset from a seed derived from `(seed, trial)`,
/// lists the buckets of every point, counts the comparisons `Σ_t c0_t c1_t`
/// and records whether the planted pair shares a bucket.
pub fn run_experiment(
    code: &BucketingCode,
    p: &ProbabilityMatrix,
    d: usize,
    n0: usize,
    n1: usize,
    trials: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    run_experiment_with(Execution::default(), code, p, d, n0, n1, trials, seed)
}

#[allow(clippy::too_many_arguments)]
pub fn run_experiment_with(
    exec: Execution,
    code: &BucketingCode,
    p: &ProbabilityMatrix,
    d: usize,
    n0: usize,
    n1: usize,
    trials: usize,
    seed: u64,
) -> Result<ExperimentResult> {
    if trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    if d != code.d() {
        return Err(Error::DimensionMismatch(format!("code has d={}, data has d={d}", code.d())));
    }
    if code.alphabets() != (p.rows(), p.cols()) {
        return Err(Error::DimensionMismatch("code alphabet differs from the shape of P".into()));
    }
    let cost = trials as f64 * (n0 + n1) as f64 * code.membership_cost() * (d / 64 + 1) as f64;
    if cost > ASSIGNMENT_BUDGET {
        return Err(Error::TooLarge(format!("bucket assignment cost {cost:e} exceeds {ASSIGNMENT_BUDGET:e}")));
    }
    let outcomes = exec.map_range(trials, |i| {
        one_trial(code, p, d, n0, n1, rng::derive_seed(seed, "trial", i as u64))
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;
    let n = trials as f64;
    let successes = outcomes.iter().filter(|o| o.success).count();
    let mean = |f: &dyn Fn(&Trial) -> f64| crate::logspace::compensated_sum(outcomes.iter().map(f)) / n;
    let base = (n0 + n1) as f64;
    let mean_comparisons = mean(&|o| o.comparisons);
    let mean_lookups = mean(&|o| o.lookups);
    let mean_operations = base + mean_lookups + mean_comparisons;
    let var = if trials > 1 {
        crate::logspace::compensated_sum(
            outcomes.iter().map(|o| (base + o.lookups + o.comparisons - mean_operations).powi(2)),
        ) / (n - 1.0)
    } else {
        0.0
    };
    Ok(ExperimentResult {
        kind: code.kind().to_string(),
        d,
        n0,
        n1,
        t: code.bucket_count(),
        trials,
        successes,
        empirical_s: successes as f64 / n,
        ci: binomial_ci(successes, trials),
        mean_comparisons,
        mean_lookups,
        mean_operations,
        sd_operations: var.sqrt(),
        predicted_s: code_success_exact(code, p, d).unwrap_or(f64::NAN),
        predicted_w: code_work(code, n0 as f64, n1 as f64),
        seed,
    })
}
