use super::{InfoQuery, InfoResult, Method};
use crate::logspace::log_sum_exp;
use crate::probmodel::{mutual_information, NonnegMatrix, ProbabilityMatrix};

/// `I(P, 1, 1, μ)` in closed form.
///
/// * `0 ≤ μ ≤ 1`: `max_jk ln(p_jk^μ / (p_j* p_*k))`
/// * `μ > 1`: `(μ-1) ln Σ p_jk (p_jk / (p_j* p_*k))^(1/(μ-1))`
/// * `μ = ∞`: the mutual information of `P`
///
/// Maxima and sums run over the support of `P`.
pub fn info_closed_form(p: &ProbabilityMatrix, mu: f64) -> f64 {
    assert!(mu >= 0.0, "mu must be nonnegative");
    if mu.is_infinite() {
        return mutual_information(p);
    }
    let terms = log_terms(p);
    if mu <= 1.0 {
        terms
            .iter()
            .map(|&(lp, lratio)| mu * lp + (lratio - lp))
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    } else {
        let inv = 1.0 / (mu - 1.0);
        let xs: Vec<f64> = terms.iter().map(|&(lp, lratio)| lp + inv * lratio).collect();
        ((mu - 1.0) * log_sum_exp(&xs)).max(0.0)
    }
}

/// `(ln p_jk, ln(p_jk / (p_j* p_*k)))` over the support.
fn log_terms(p: &ProbabilityMatrix) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for j in 0..p.rows() {
        for k in 0..p.cols() {
            let v = p.get(j, k);
            if v > 0.0 {
                out.push((v.ln(), (v / (p.row_marginals()[j] * p.col_marginals()[k])).ln()));
            }
        }
    }
    out
}

/// Closed-form value with its maximizing blocks: one block per support entry
/// carrying the optimal aggregate mass.
pub fn info_closed_form_result(p: &ProbabilityMatrix, mu: f64) -> InfoResult {
    let value = info_closed_form(p, mu);
    let support = p.support();
    let masses: Vec<f64> = if mu <= 1.0 {
        let terms = log_terms(p);
        let best = (0..terms.len())
            .max_by(|&a, &b| {
                let va = mu * terms[a].0 + terms[a].1 - terms[a].0;
                let vb = mu * terms[b].0 + terms[b].1 - terms[b].0;
                va.partial_cmp(&vb).unwrap().then(b.cmp(&a))
            })
            .expect("nonempty support");
        (0..support.len()).map(|e| if e == best { 1.0 } else { 0.0 }).collect()
    } else if mu.is_infinite() {
        support.iter().map(|&f| p.entries()[f]).collect()
    } else {
        let inv = 1.0 / (mu - 1.0);
        let xs: Vec<f64> = log_terms(p).iter().map(|&(lp, lr)| lp + inv * lr).collect();
        let z = log_sum_exp(&xs);
        xs.iter().map(|x| (x - z).exp()).collect()
    };
    let witness = support
        .iter()
        .zip(&masses)
        .filter(|(_, &m)| m > 0.0)
        .map(|(&f, &m)| {
            let mut grid = vec![0.0; p.entries().len()];
            grid[f] = m;
            NonnegMatrix::from_flat(p.rows(), p.cols(), grid).expect("positive block")
        })
        .collect();
    InfoResult {
        query: InfoQuery::new(1.0, 1.0, mu),
        value,
        witness,
        converged: true,
        method: Method::ClosedForm,
    }
}
