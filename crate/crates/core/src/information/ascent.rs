//! Multiplicative (exponentiated-gradient) ascent over a product of simplices.
//!
//! Each block of variables lives on a probability simplex. A step multiplies
//! every coordinate by `exp(step * gradient)` and renormalizes its block,
//! which is gradient ascent in the softmax logits with the mirror geometry of
//! the simplex. Coordinates that start at zero stay at zero, so a start on a
//! face explores only that face. Step sizes adapt by backtracking: grow after
//! an improving step, halve after a failed one.

use std::ops::Range;

pub(crate) trait SimplexObjective {
    /// Objective value; `-inf` marks an infeasible point.
    fn value(&self, x: &[f64]) -> f64;
    /// Writes an ascent direction per coordinate (usually the gradient, possibly
    /// rescaled per block) and returns the objective value.
    fn gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct AscentSettings {
    pub max_iters: usize,
    pub initial_step: f64,
    pub min_step: f64,
    /// Stop after `patience` consecutive accepted steps each improving by less
    /// than `ftol * (1 + |f|)`.
    pub ftol: f64,
    pub patience: usize,
}

impl Default for AscentSettings {
    fn default() -> Self {
        Self { max_iters: 4000, initial_step: 0.5, min_step: 1e-14, ftol: 1e-15, patience: 12 }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct AscentOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
}

fn exp_step(x: &[f64], grad: &[f64], blocks: &[Range<usize>], step: f64, out: &mut [f64]) {
    for block in blocks {
        let top = block
            .clone()
            .filter(|&i| x[i] > 0.0)
            .map(|i| grad[i])
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for i in block.clone() {
            out[i] = if x[i] > 0.0 { x[i] * (step * (grad[i] - top)).exp() } else { 0.0 };
            total += out[i];
        }
        if total > 0.0 && total.is_finite() {
            for i in block.clone() {
                out[i] /= total;
                // keep interior points interior; underflow would freeze a face
                if x[i] > 0.0 && out[i] < 1e-300 {
                    out[i] = 1e-300;
                }
            }
        } else {
            out[block.clone()].copy_from_slice(&x[block.clone()]);
        }
    }
}

pub(crate) fn ascend<O: SimplexObjective>(
    objective: &O,
    blocks: &[Range<usize>],
    start: Vec<f64>,
    settings: AscentSettings,
) -> AscentOutcome {
    let n = start.len();
    let mut x = start;
    let mut grad = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut value = objective.gradient(&x, &mut grad);
    if !value.is_finite() {
        return AscentOutcome { x, value, converged: false };
    }
    let mut step = settings.initial_step;
    let mut quiet = 0usize;
    let mut converged = false;
    for _ in 0..settings.max_iters {
        if grad.iter().any(|g| !g.is_finite()) {
            break;
        }
        exp_step(&x, &grad, blocks, step, &mut trial);
        let candidate = objective.value(&trial);
        if candidate >= value && candidate.is_finite() {
            let gain = candidate - value;
            std::mem::swap(&mut x, &mut trial);
            value = objective.gradient(&x, &mut grad);
            step = (step * 1.6).min(1e6);
            if gain <= settings.ftol * (1.0 + value.abs()) {
                quiet += 1;
                if quiet >= settings.patience {
                    converged = true;
                    break;
                }
            } else {
                quiet = 0;
            }
        } else {
            step *= 0.5;
            if step < settings.min_step {
                converged = true;
                break;
            }
        }
    }
    AscentOutcome { x, value, converged }
}

/// Dirichlet(1) draw: a uniformly random point of the simplex.
pub(crate) fn random_simplex<R: rand::Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-12).collect();
    let total: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= total);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Negative squared distance to a fixed point of the simplex.
    struct Target(Vec<f64>);

    impl SimplexObjective for Target {
        fn value(&self, x: &[f64]) -> f64 {
            -x.iter().zip(&self.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        }
        fn gradient(&self, x: &[f64], g: &mut [f64]) -> f64 {
            for i in 0..x.len() {
                g[i] = -2.0 * (x[i] - self.0[i]);
            }
            self.value(x)
        }
    }

    #[test]
    fn finds_interior_maximum() {
        let obj = Target(vec![0.2, 0.3, 0.5]);
        let out = ascend(&obj, &[0..3], vec![1.0 / 3.0; 3], AscentSettings::default());
        assert!(out.converged);
        assert!(out.value > -1e-12, "{}", out.value);
    }

    #[test]
    fn faces_are_preserved() {
        let obj = Target(vec![0.2, 0.3, 0.5]);
        let out = ascend(&obj, &[0..3], vec![0.5, 0.5, 0.0], AscentSettings::default());
        assert_eq!(out.x[2], 0.0);
        // best point on the face x2 = 0 is (0.45, 0.55, 0)
        assert!((out.x[0] - 0.45).abs() < 1e-6);
    }

    #[test]
    fn blocks_normalize_independently() {
        let obj = Target(vec![0.1, 0.9, 0.6, 0.4]);
        let out = ascend(&obj, &[0..2, 2..4], vec![0.5; 4], AscentSettings::default());
        assert!((out.x[0] - 0.1).abs() < 1e-6 && (out.x[2] - 0.6).abs() < 1e-6);
    }
}
