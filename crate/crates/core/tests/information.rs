use bucketing::information::{
    bucketing_objective, info_closed_form, info_numeric, is_subconjugate, subconjugate_frontier,
    InfoQuery,
};
use bucketing::probmodel::{NonnegMatrix, ProbabilityMatrix};
use bucketing::rng;
use rand::Rng;

fn random_matrix(rows: usize, cols: usize, seed: u64) -> ProbabilityMatrix {
    let mut r = rng::stream(seed, "information-test", (rows * 10 + cols) as u64);
    let v: Vec<f64> = (0..rows * cols).map(|_| 0.02 + r.random::<f64>()).collect();
    let s: f64 = v.iter().sum();
    ProbabilityMatrix::from_flat(rows, cols, v.iter().map(|x| x / s).collect()).unwrap()
}

fn info(p: &ProbabilityMatrix, l0: f64, l1: f64, mu: f64) -> f64 {
    info_numeric(p, InfoQuery::new(l0, l1, mu)).value
}

#[test]
fn monotone_in_lambdas_and_antitone_in_mu() {
    let lambdas = [0.25, 0.5, 0.75, 1.0];
    let mus = [0.5, 1.0, 2.0, f64::INFINITY];
    for (seed, (b0, b1)) in [(1, (2, 2)), (2, (2, 2)), (3, (3, 3))] {
        let p = random_matrix(b0, b1, seed);
        for &mu in &mus {
            let grid: Vec<Vec<f64>> =
                lambdas.iter().map(|&a| lambdas.iter().map(|&b| info(&p, a, b, mu)).collect()).collect();
            for i in 0..lambdas.len() {
                for j in 0..lambdas.len() {
                    assert!(grid[i][j] >= 0.0, "seed {seed} mu {mu} ({}, {}) = {}", lambdas[i], lambdas[j], grid[i][j]);
                    if i + 1 < lambdas.len() {
                        assert!(grid[i + 1][j] >= grid[i][j] - 1e-6, "λ0 at mu={mu}");
                    }
                    if j + 1 < lambdas.len() {
                        assert!(grid[i][j + 1] >= grid[i][j] - 1e-6, "λ1 at mu={mu}");
                    }
                }
            }
        }
        for &(a, b) in &[(0.5, 0.75), (1.0, 1.0)] {
            let values: Vec<f64> = mus.iter().map(|&mu| info(&p, a, b, mu)).collect();
            assert!(values.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{values:?}");
        }
    }
}

#[test]
fn scaling_identity_below_one() {
    for seed in 0..4 {
        let p = random_matrix(2, 2, 10 + seed);
        for &(l0, l1, mu) in &[(0.6, 0.5, 0.75), (0.3, 0.4, 0.5), (1.0, 0.8, 0.9)] {
            let lhs = info(&p, l0, l1, mu);
            let rhs = mu * info(&p, l0 / mu, l1 / mu, 1.0);
            assert!((lhs - rhs).abs() <= 1e-4, "{lhs} vs {rhs}");
        }
    }
}

#[test]
fn closed_form_agreement_on_a_sample() {
    for seed in 0..6 {
        let p = random_matrix(2 + (seed as usize % 2), 2 + (seed as usize % 2), 20 + seed);
        for &mu in &[0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
            let v = info(&p, 1.0, 1.0, mu);
            assert!((v - info_closed_form(&p, mu)).abs() <= 1e-4, "seed {seed} mu {mu}");
        }
    }
}

#[test]
fn zero_below_the_diagonal() {
    for seed in 0..3 {
        let p = random_matrix(2, 3, 30 + seed);
        for &(l0, l1, mu) in &[(0.3, 0.2, 0.5), (0.5, 0.5, 1.0), (0.1, 0.8, 4.0), (0.0, 0.0, 0.0)] {
            assert!(info(&p, l0, l1, mu) <= 1e-8);
        }
    }
}

#[test]
fn dense_grid_cross_check() {
    let p = random_matrix(2, 2, 40);
    let res = 200usize;
    for &(l0, l1) in &[(0.7, 0.6), (1.0, 0.5)] {
        let q = InfoQuery::new(l0, l1, 1.0);
        let numeric = info_numeric(&p, q).value;
        let mut best = f64::NEG_INFINITY;
        for a in 0..=res {
            for b in 0..=res - a {
                for c in 0..=res - a - b {
                    let e = [a, b, c, res - a - b - c].map(|x| x as f64 / res as f64);
                    let r = NonnegMatrix::from_flat(2, 2, e.to_vec()).unwrap();
                    best = best.max(bucketing_objective(&p, &q, &[r]).unwrap());
                }
            }
        }
        assert!(best <= numeric + 1e-9, "grid beat optimizer: {best} > {numeric}");
        assert!(numeric - best <= 1e-3, "optimizer {numeric} far above grid {best}");
    }
}

#[test]
fn tensor_additivity_on_a_sample() {
    let (a, b) = (random_matrix(2, 2, 50), random_matrix(2, 2, 51));
    let t = a.tensor(&b);
    for &(l0, l1, mu) in &[(1.0, 1.0, 2.0), (0.75, 1.0, 1.0), (1.0, 0.5, f64::INFINITY)] {
        let diff = info(&t, l0, l1, mu) - info(&a, l0, l1, mu) - info(&b, l0, l1, mu);
        assert!(diff.abs() <= 5e-3, "({l0},{l1},{mu}): {diff}");
    }
}

#[test]
fn subconjugacy_closed_under_tensor_products() {
    for seed in 0..4 {
        let (a, b) = (random_matrix(2, 2, 60 + seed), random_matrix(2, 2, 70 + seed));
        for dir in [(1.0, 1.0), (1.0, 0.6), (0.6, 1.0)] {
            let fa = subconjugate_frontier(&a, dir, 1e-4);
            let fb = subconjugate_frontier(&b, dir, 1e-4);
            let (l0, l1) = if fa.0 + fa.1 <= fb.0 + fb.1 { fa } else { fb };
            if l0 + l1 < 1.0 {
                continue;
            }
            assert!(is_subconjugate(&a, l0, l1, 1e-9).unwrap().subconjugate);
            assert!(is_subconjugate(&b, l0, l1, 1e-9).unwrap().subconjugate);
            let check = is_subconjugate(&a.tensor(&b), l0, l1, 1e-9).unwrap();
            assert!(check.subconjugate, "ratio {} at ({l0},{l1})", check.ratio_sup);
        }
    }
}

#[test]
fn bucket_probability_bound_at_unit_dimension() {
    for seed in 0..6 {
        let p = random_matrix(3, 3, 80 + seed);
        for dir in [(1.0, 1.0), (1.0, 0.7), (0.7, 1.0)] {
            let (l0, l1) = subconjugate_frontier(&p, dir, 1e-4);
            if l0 + l1 < 1.0 {
                continue;
            }
            for m0 in 1u32..8 {
                for m1 in 1u32..8 {
                    let in0 = |j: usize| m0 & (1 << j) != 0;
                    let in1 = |k: usize| m1 & (1 << k) != 0;
                    let mut joint = 0.0;
                    for j in 0..3 {
                        for k in 0..3 {
                            if in0(j) && in1(k) {
                                joint += p.get(j, k);
                            }
                        }
                    }
                    let r: f64 = (0..3).filter(|&j| in0(j)).map(|j| p.row_marginals()[j]).sum();
                    let c: f64 = (0..3).filter(|&k| in1(k)).map(|k| p.col_marginals()[k]).sum();
                    assert!(joint <= r.powf(l0) * c.powf(l1) * (1.0 + 1e-12));
                }
            }
        }
    }
}
