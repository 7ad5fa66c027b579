use bucketing::codes::{classical_code, shell_analytics, shell_code, tensor_power, typeclass_code};
use bucketing::probmodel::{NonnegMatrix, ProbabilityMatrix};
use bucketing::simharness::{
    baseline_exponents, cauchy_baseline, exponent_table, run_experiment, run_experiment_with,
    sparse_hash_experiment, ExperimentResult,
};
use bucketing::Execution;

fn within_three_sigma(r: &ExperimentResult) {
    let s = r.predicted_s;
    assert!(s.is_finite());
    let sigma = (s * (1.0 - s) / r.trials as f64).sqrt();
    assert!((r.empirical_s - s).abs() <= 3.0 * sigma + 0.5 / r.trials as f64, "{}: {} vs {s}", r.kind, r.empirical_s);
}

fn operations_within_accounting(r: &ExperimentResult) {
    let cap = (r.n0 + r.n1) as f64 + 3.0 * r.predicted_w;
    let sem = r.sd_operations / (r.trials as f64).sqrt();
    assert!(r.mean_operations <= cap + 3.0 * sem, "{} > {cap}", r.mean_operations);
}

#[test]
fn shell_code_matches_exact_success() {
    let p = ProbabilityMatrix::bernoulli(0.9).unwrap();
    let a = shell_analytics(12, 7, 0.9, 0.1).unwrap();
    let code = shell_code(12, 7, a.t as u64, 42).unwrap();
    let n = a.n as usize;
    let r = run_experiment(&code, &p, 12, n, n, 3000, 1).unwrap();
    within_three_sigma(&r);
    operations_within_accounting(&r);
}

#[test]
fn classical_and_tensor_codes_match_exact_success() {
    let p = ProbabilityMatrix::bernoulli(0.8).unwrap();
    // At n = 2^k every term of the work sum equals 1 and the planted pair's
    // own collisions push the mean just past n0 + n1 + 3W; n = 2^(k+1)
    // leaves the accounting room for them.
    let c = classical_code(16, 4, 3, 5).unwrap();
    let r = run_experiment(&c, &p, 16, 32, 32, 3000, 2).unwrap();
    within_three_sigma(&r);
    operations_within_accounting(&r);
    let t = tensor_power(&shell_code(5, 3, 3, 8).unwrap(), 2).unwrap();
    let r = run_experiment(&t, &p, 10, 8, 8, 3000, 3).unwrap();
    within_three_sigma(&r);
    operations_within_accounting(&r);
}

#[test]
fn typeclass_code_matches_exact_success() {
    let p = ProbabilityMatrix::bernoulli(0.9).unwrap();
    let blocks = [NonnegMatrix::new(vec![vec![0.45, 0.05], vec![0.05, 0.45]]).unwrap()];
    let tc = typeclass_code(&p, 10, &blocks, 6, None).unwrap();
    let r = run_experiment(&tc.code, &p, 10, 6, 6, 3000, 4).unwrap();
    within_three_sigma(&r);
}

#[test]
fn single_classical_draw_succeeds_at_p_to_the_k() {
    let p = ProbabilityMatrix::bernoulli(0.9).unwrap();
    for k in [4usize, 8] {
        let code = classical_code(24, k, 1, 10 + k as u64).unwrap();
        let r = run_experiment(&code, &p, 24, 4, 4, 4000, 20).unwrap();
        let s = 0.9f64.powi(k as i32);
        assert!((r.predicted_s - s).abs() < 1e-12);
        within_three_sigma(&r);
    }
}

#[test]
fn execution_modes_agree() {
    let p = ProbabilityMatrix::bernoulli(0.85).unwrap();
    let code = shell_code(10, 6, 7, 2).unwrap();
    let a = run_experiment_with(Execution::Sequential, &code, &p, 10, 9, 9, 300, 77).unwrap();
    let b = run_experiment_with(Execution::default(), &code, &p, 10, 9, 9, 300, 77).unwrap();
    assert_eq!(a, b);
}

#[test]
fn cauchy_signs_agree_two_thirds_of_the_time() {
    let a = cauchy_baseline(100_000, 9).unwrap();
    assert!((a.agreement - 2.0 / 3.0).abs() <= 0.01, "{}", a.agreement);
    assert!((a.independent - 0.5).abs() <= 0.01, "{}", a.independent);
}

#[test]
fn cauchy_hash_comparisons_grow_with_k() {
    // With n = 2^k, comparisons per try scale like n (3/2)^k.
    let small = sparse_hash_experiment(0.05, 4, 16, 60, 1).unwrap();
    let large = sparse_hash_experiment(0.05, 6, 64, 60, 1).unwrap();
    assert!(large.cauchy.mean_comparisons > small.cauchy.mean_comparisons);
    assert!((small.cauchy.predicted_exponent - 3f64.log2()).abs() < 1e-15);
    let first = 1.0 + 3f64.ln() / 10f64.ln();
    assert!((small.first_ones.predicted_exponent - first).abs() < 1e-12);
}

#[test]
fn exponent_table_trends_toward_its_limit() {
    let rows = exponent_table(0.9, &[50, 100, 200, 400], 0.1).unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| (r.ratio - r.limit_ratio).abs()).collect();
    assert!(gaps.first() > gaps.last(), "{gaps:?}");
    let b = baseline_exponents(0.9).unwrap();
    assert!(rows[0].limit_ratio < b.classical);
}
