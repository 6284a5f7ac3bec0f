//! Sequential minimal optimization for the soft-margin SVM dual
//!
//! ```text
//! max  sum_i a_i - 1/2 sum_ij a_i a_j y_i y_j K_ij
//! s.t. sum_i a_i y_i = 0,  0 <= a_i <= C
//! ```
//!
//! Each step picks the worst KKT violator `i` and pairs it with the `j` that
//! maximizes the error difference `|E_i - E_j|` among multipliers that can
//! move the other way (the maximal violating pair). The pair is optimized
//! analytically and clipped to the box; the loop ends once the violation gap
//! drops below `tol`, which bounds every KKT residual by `tol`.

use super::{LearnError, Result};

/// Curvature floor for pairs whose kernel rows coincide.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoOptions {
    /// Box constraint; `f64::INFINITY` gives the hard-margin problem.
    pub c: f64,
    pub tol: f64,
    /// Iteration cap in units of `n` pair updates.
    pub max_passes: usize,
}

/// Solver state after one pair update.
#[derive(Debug, Clone, Copy)]
pub struct SmoStep<'a> {
    pub iteration: usize,
    pub alphas: &'a [f64],
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alphas: Vec<f64>,
    pub bias: f64,
    pub objective: f64,
    pub iterations: usize,
}

/// Dual objective `sum a - 1/2 a^T Q a` given the gradient `G = Q a - 1`.
fn objective(alphas: &[f64], grad: &[f64]) -> f64 {
    alphas.iter().zip(grad).map(|(a, g)| 0.5 * a * (1.0 - g)).sum()
}

/// Solves the dual on a precomputed Gram matrix (row-major `n * n`).
pub fn solve_dual(
    gram: &[f64],
    y: &[f64],
    opts: &SmoOptions,
    mut on_step: impl FnMut(&SmoStep<'_>),
) -> Result<DualSolution> {
    let n = y.len();
    if gram.len() != n * n {
        return Err(LearnError::InvalidInput(format!(
            "gram matrix has {} entries for {} examples",
            gram.len(),
            n
        )));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(LearnError::InvalidInput("labels must be +1 or -1".into()));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(LearnError::DegenerateLabels);
    }
    if !(opts.c > 0.0) || !(opts.tol > 0.0) {
        return Err(LearnError::InvalidInput("C and tol must be positive".into()));
    }
    let c = opts.c;
    let k = |i: usize, j: usize| gram[i * n + j];

    let mut alphas = vec![0.0; n];
    // Gradient of the minimization form 1/2 a^T Q a - sum a.
    let mut grad = vec![-1.0; n];
    let max_iter = opts.max_passes.saturating_mul(n).max(1);

    let in_up = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] < c) || (y[t] < 0.0 && a[t] > 0.0);
    let in_low = |t: usize, a: &[f64]| (y[t] > 0.0 && a[t] > 0.0) || (y[t] < 0.0 && a[t] < c);

    let mut iteration = 0;
    loop {
        // F_t = -y_t G_t is minus the error E_t (bias excluded).
        let mut best_up: Option<(usize, f64)> = None;
        let mut best_low: Option<(usize, f64)> = None;
        for t in 0..n {
            let f = -y[t] * grad[t];
            if in_up(t, &alphas) && best_up.map_or(true, |(_, v)| f > v) {
                best_up = Some((t, f));
            }
            if in_low(t, &alphas) && best_low.map_or(true, |(_, v)| f < v) {
                best_low = Some((t, f));
            }
        }
        let (Some((i, f_i)), Some((j, f_j))) = (best_up, best_low) else {
            break;
        };
        if f_i - f_j < opts.tol {
            break;
        }
        if iteration >= max_iter {
            return Err(LearnError::DidNotConverge {
                max_passes: opts.max_passes,
            });
        }
        iteration += 1;

        let s = y[i] * y[j];
        let (lo, hi) = if s < 0.0 {
            ((alphas[j] - alphas[i]).max(0.0), c.min(c + alphas[j] - alphas[i]))
        } else {
            ((alphas[i] + alphas[j] - c).max(0.0), c.min(alphas[i] + alphas[j]))
        };
        let mut eta = k(i, i) + k(j, j) - 2.0 * k(i, j);
        if eta <= 0.0 {
            eta = TAU;
        }
        let old_i = alphas[i];
        let old_j = alphas[j];
        let new_j = (old_j + y[j] * (f_j - f_i) / eta).clamp(lo, hi);
        let new_i = old_i + s * (old_j - new_j);
        // Snap to the box so bound membership is exact.
        alphas[j] = snap(new_j, c);
        alphas[i] = snap(new_i, c);

        let d_i = alphas[i] - old_i;
        let d_j = alphas[j] - old_j;
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k(t, i) * d_i + y[j] * k(t, j) * d_j);
        }
        on_step(&SmoStep {
            iteration,
            alphas: &alphas,
            objective: objective(&alphas, &grad),
        });
    }

    let bias = compute_bias(&alphas, &grad, y, c);
    Ok(DualSolution {
        objective: objective(&alphas, &grad),
        alphas,
        bias,
        iterations: iteration,
    })
}

fn snap(a: f64, c: f64) -> f64 {
    let eps = 1e-12 * if c.is_finite() { c.max(1.0) } else { 1.0 };
    if a <= eps {
        0.0
    } else if c.is_finite() && a >= c - eps {
        c
    } else {
        a
    }
}

/// Bias from the free multipliers when there are any, otherwise the midpoint
/// of the interval allowed by the bound ones.
fn compute_bias(alphas: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut free_sum = 0.0;
    let mut free = 0usize;
    let mut lower = f64::NEG_INFINITY;
    let mut upper = f64::INFINITY;
    for t in 0..y.len() {
        let f = -y[t] * grad[t];
        let at_zero = alphas[t] == 0.0;
        let at_c = c.is_finite() && alphas[t] == c;
        if !at_zero && !at_c {
            free_sum += f;
            free += 1;
        } else if (at_zero && y[t] > 0.0) || (at_c && y[t] < 0.0) {
            lower = lower.max(f);
        } else {
            upper = upper.min(f);
        }
    }
    if free > 0 {
        free_sum / free as f64
    } else if lower.is_finite() && upper.is_finite() {
        0.5 * (lower + upper)
    } else if lower.is_finite() {
        lower
    } else if upper.is_finite() {
        upper
    } else {
        0.0
    }
}
