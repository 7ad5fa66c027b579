use super::ascent::{ascend, random_simplex, AscentOutcome, AscentSettings, SimplexObjective};
use super::objective::{MultiBlock, SingleTerm, Support};
use super::{InfoQuery, InfoResult, Method};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::probmodel::{kl_raw, NonnegMatrix, ProbabilityMatrix};
use crate::rng;

/// Start set and iteration budget of the multi-start optimizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericSettings {
    /// Seeded random starts added to the deterministic ones.
    pub random_starts: usize,
    /// Minimum total number of starts.
    pub min_starts: usize,
    /// Support sizes up to this value start from every face centroid of the
    /// simplex (single-term case); larger supports use vertices and edges.
    pub face_limit: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self { random_starts: 16, min_starts: 32, face_limit: 9, max_iters: 4000, seed: 0 }
    }
}

impl NumericSettings {
    fn ascent(&self) -> AscentSettings {
        AscentSettings { max_iters: self.max_iters, ftol: 1e-13, patience: 8, ..Default::default() }
    }
}

/// Spread between the best two starts above which the result is reported as
/// not converged.
const SPREAD_TOLERANCE: f64 = 1e-6;

/// Evaluates the bucketing-information objective
/// `λ0 Σ K(R_i,row) + λ1 Σ K(R_i,col) + (1-μ) K(R_*) - Σ K(R_i)` at explicit
/// blocks whose total mass is one. For `μ = ∞` the aggregate must equal `P`
/// (otherwise the objective is `-inf`).
pub fn bucketing_objective(
    p: &ProbabilityMatrix,
    query: &InfoQuery,
    blocks: &[NonnegMatrix],
) -> Result<f64> {
    let cells = p.entries().len();
    let mut aggregate = vec![0.0; cells];
    let mut acc = 0.0;
    for block in blocks {
        if block.rows() != p.rows() || block.cols() != p.cols() {
            return Err(Error::Shape("block shape differs from P".into()));
        }
        let kfull = crate::probmodel::kl_extended(block, p)?;
        let krow = kl_raw(&block.row_sums(), p.row_marginals());
        let kcol = kl_raw(&block.col_sums(), p.col_marginals());
        acc += query.lambda0 * krow + query.lambda1 * kcol - kfull;
        for (a, v) in aggregate.iter_mut().zip(block.entries()) {
            *a += v;
        }
    }
    let total: f64 = aggregate.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Mass { total });
    }
    let kagg = kl_raw(&aggregate, p.entries());
    if query.mu.is_infinite() {
        if kagg > 1e-9 {
            return Ok(f64::NEG_INFINITY);
        }
    } else {
        acc += (1.0 - query.mu) * kagg;
    }
    Ok(acc)
}

/// Numeric `I(P, λ0, λ1, μ)` by multi-start ascent.
///
/// For `μ ≤ 1` the maximization runs over single probability matrices `Q`;
/// for `μ > 1` (including `μ = ∞`) over `b0·b1` blocks.
pub fn info_numeric(p: &ProbabilityMatrix, query: InfoQuery) -> InfoResult {
    info_numeric_with(Execution::default(), p, query, &NumericSettings::default())
}

pub fn info_numeric_with(
    exec: Execution,
    p: &ProbabilityMatrix,
    query: InfoQuery,
    settings: &NumericSettings,
) -> InfoResult {
    assert!(query.mu >= 0.0, "mu must be nonnegative");
    let support = Support::new(p);
    let (converged, blocks) = if query.mu <= 1.0 {
        let (best, converged) =
            solve_single(exec, &support, query.lambda0, query.lambda1, query.mu, settings);
        (converged, vec![support.to_grid(&best.x)])
    } else {
        let mu = query.mu.is_finite().then_some(query.mu);
        let obj = MultiBlock {
            support: &support,
            blocks: p.rows() * p.cols(),
            lambda0: query.lambda0,
            lambda1: query.lambda1,
            mu,
        };
        let starts = multi_block_starts(exec, &obj, settings);
        let (best, converged) = best_of(exec, &obj, &obj.layout(), starts, settings);
        (converged, obj.blocks_of(&best.x))
    };
    let witness: Vec<NonnegMatrix> = blocks
        .into_iter()
        .map(|b| NonnegMatrix::from_flat(p.rows(), p.cols(), b).expect("nonnegative block"))
        .collect();
    // I >= 0 (R = P scores zero); only rounding can land below.
    let value = bucketing_objective(p, &query, &witness).expect("witness is well formed").max(0.0);
    InfoResult { query, value, witness, converged, method: Method::Optimizer }
}

fn best_of<O: SimplexObjective + Sync>(
    exec: Execution,
    obj: &O,
    layout: &[std::ops::Range<usize>],
    starts: Vec<Vec<f64>>,
    settings: &NumericSettings,
) -> (AscentOutcome, bool) {
    let ascent = settings.ascent();
    let runs = exec.map_range(starts.len(), |i| ascend(obj, layout, starts[i].clone(), ascent));
    let mut best = 0;
    for (i, r) in runs.iter().enumerate() {
        if r.value > runs[best].value {
            best = i;
        }
    }
    let top = runs[best].value;
    let agreeing = runs.iter().filter(|r| r.value >= top - SPREAD_TOLERANCE).count();
    let converged = runs[best].converged && agreeing >= 2;
    let mut out = runs.into_iter().nth(best).expect("at least one start");
    polish(obj, layout, &mut out);
    (out, converged)
}

/// Snaps near-zero coordinates to zero when that does not lose value; this
/// lands boundary optima exactly on their face.
fn polish<O: SimplexObjective>(obj: &O, layout: &[std::ops::Range<usize>], out: &mut AscentOutcome) {
    let mut x = out.x.clone();
    for block in layout {
        let mut changed = false;
        for i in block.clone() {
            if x[i] > 0.0 && x[i] < 1e-9 {
                x[i] = 0.0;
                changed = true;
            }
        }
        if changed {
            let total: f64 = x[block.clone()].iter().sum();
            if total <= 0.0 {
                return;
            }
            x[block.clone()].iter_mut().for_each(|v| *v /= total);
        }
    }
    let v = obj.value(&x);
    if v >= out.value {
        out.x = x;
        out.value = v;
    }
}

pub(crate) fn single_term_starts(support: &Support, settings: &NumericSettings, tag: &str) -> Vec<Vec<f64>> {
    let m = support.len();
    let mut starts = vec![support.p.clone(), vec![1.0 / m as f64; m]];
    for e in 0..m {
        let mut v = vec![0.0; m];
        v[e] = 1.0;
        starts.push(v);
    }
    if m <= settings.face_limit {
        for mask in 1u32..(1u32 << m) {
            let size = mask.count_ones() as usize;
            if size >= 2 && size < m {
                starts.push((0..m).map(|e| if mask >> e & 1 == 1 { 1.0 / size as f64 } else { 0.0 }).collect());
            }
        }
    } else {
        for a in 0..m {
            for b in a + 1..m {
                let mut v = vec![0.0; m];
                v[a] = 0.5;
                v[b] = 0.5;
                starts.push(v);
            }
        }
    }
    let mut r = rng::stream(settings.seed, tag, m as u64);
    let wanted = settings.random_starts.max(settings.min_starts.saturating_sub(starts.len()));
    for _ in 0..wanted {
        starts.push(random_simplex(&mut r, m));
    }
    starts
}

pub(crate) fn solve_single(
    exec: Execution,
    support: &Support,
    lambda0: f64,
    lambda1: f64,
    mu: f64,
    settings: &NumericSettings,
) -> (AscentOutcome, bool) {
    let obj = SingleTerm { support, lambda0, lambda1, mu };
    let starts = single_term_starts(support, settings, "info-single");
    let layout = [0..support.len()];
    best_of(exec, &obj, &layout, starts, settings)
}

fn multi_block_starts(exec: Execution, obj: &MultiBlock<'_>, settings: &NumericSettings) -> Vec<Vec<f64>> {
    let sp = obj.support;
    let m = sp.len();
    let nb = obj.blocks;
    let pinned = obj.mu.is_none();
    let assemble = |s: &[f64], pi: &dyn Fn(usize) -> Vec<f64>| {
        let mut x = Vec::with_capacity(obj.dim());
        if !pinned {
            x.extend_from_slice(s);
        }
        for e in 0..m {
            x.extend(pi(e));
        }
        x
    };
    let unit = |i: usize| {
        let mut v = vec![0.0; nb];
        v[i] = 1.0;
        v
    };
    let mut starts = Vec::new();
    // one block per support entry
    starts.push(assemble(&sp.p, &|e| unit(e)));
    if !pinned {
        starts.push(assemble(&vec![1.0 / m as f64; m], &|e| unit(e)));
    }
    // every block a copy of P
    starts.push(assemble(&sp.p, &|_| vec![1.0 / nb as f64; nb]));

    // the single-term maximizer at μ = 1, alone and split against P
    let quick = NumericSettings { random_starts: 4, min_starts: 0, face_limit: 4, ..*settings };
    let (single, _) = solve_single(exec, sp, obj.lambda0, obj.lambda1, 1.0, &quick);
    let q = single.x;
    if !pinned {
        starts.push(assemble(&q, &|_| unit(0)));
    }
    let w = 0.5
        * (0..m)
            .filter(|&e| q[e] > 0.0)
            .map(|e| sp.p[e] / q[e])
            .fold(f64::INFINITY, f64::min);
    if w.is_finite() && w > 0.0 && nb >= 2 {
        starts.push(assemble(&sp.p, &|e| {
            let mut v = vec![0.0; nb];
            v[0] = (w * q[e] / sp.p[e]).min(1.0);
            v[1] = 1.0 - v[0];
            v
        }));
    }

    let mut r = rng::stream(settings.seed, "info-multi", m as u64);
    let wanted = settings.random_starts.max(settings.min_starts.saturating_sub(starts.len()));
    for t in 0..wanted {
        let s = if pinned { sp.p.clone() } else { random_simplex(&mut r, m) };
        let pis: Vec<Vec<f64>> = if t % 2 == 0 {
            (0..m).map(|_| random_simplex(&mut r, nb)).collect()
        } else {
            (0..m).map(|_| unit(rand::Rng::random_range(&mut r, 0..nb))).collect()
        };
        starts.push(assemble(&s, &|e| pis[e].clone()));
    }
    starts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::information::info_closed_form;

    #[test]
    fn matches_closed_form_on_bernoulli() {
        let b = ProbabilityMatrix::bernoulli(0.9).unwrap();
        for mu in [0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
            let r = info_numeric(&b, InfoQuery::new(1.0, 1.0, mu));
            assert!((r.value - info_closed_form(&b, mu)).abs() < 1e-4, "mu {mu}: {}", r.value);
        }
        let r = info_numeric(&b, InfoQuery::new(1.0, 1.0, 1.0));
        assert!((r.value - 0.587_787).abs() < 1e-4);
    }

    #[test]
    fn small_lambdas_give_zero() {
        let p = ProbabilityMatrix::new(vec![vec![0.4, 0.1], vec![0.15, 0.35]]).unwrap();
        for mu in [1.0, 2.0] {
            let r = info_numeric(&p, InfoQuery::new(0.5, 0.5, mu));
            assert!(r.value.abs() <= 1e-8, "{}", r.value);
        }
        let u = ProbabilityMatrix::bernoulli(0.5).unwrap();
        let r = info_numeric(&u, InfoQuery::new(1.0, 1.0, 1.0));
        assert!(r.value.abs() < 1e-12);
    }

    #[test]
    fn witness_reproduces_value() {
        let p = ProbabilityMatrix::new(vec![vec![0.3, 0.1, 0.05], vec![0.05, 0.2, 0.3]]).unwrap();
        for q in [InfoQuery::new(0.9, 0.7, 0.6), InfoQuery::new(0.8, 1.0, 1.7), InfoQuery::new(1.0, 0.6, f64::INFINITY)] {
            let r = info_numeric(&p, q);
            let total: f64 = r.witness.iter().map(NonnegMatrix::total).sum();
            assert!((total - 1.0).abs() < 1e-9);
            let again = bucketing_objective(&p, &q, &r.witness).unwrap();
            assert!((again - r.value).abs() < 1e-9);
            assert!(r.value >= 0.0);
            assert_eq!(r.method, Method::Optimizer);
        }
    }

    #[test]
    fn objective_rejects_bad_mass() {
        let b = ProbabilityMatrix::bernoulli(0.9).unwrap();
        let half = NonnegMatrix::from(&b).scaled(0.5);
        assert!(matches!(
            bucketing_objective(&b, &InfoQuery::new(1.0, 1.0, 1.0), &[half]),
            Err(Error::Mass { .. })
        ));
    }

    #[test]
    fn json_record_has_expected_fields() {
        let b = ProbabilityMatrix::bernoulli(0.9).unwrap();
        let r = info_numeric(&b, InfoQuery::new(1.0, 1.0, f64::INFINITY));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        for key in ["query", "value", "witness", "converged", "method"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["query"]["mu"], "inf");
        assert_eq!(v["method"], "optimizer");
    }
}
