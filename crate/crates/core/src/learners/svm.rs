use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kernel_eval, platt_fit, platt_probability, solve_dual, KernelSpec, LearnError, Result, SmoOptions, SparseVector};

pub const SVM_FORMAT_VERSION: &str = "svm-v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportVector {
    pub x: SparseVector,
    pub alpha: f64,
    /// +1 or -1.
    pub label: f64,
    /// Position in the training set.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedSvm {
    pub format: String,
    pub kernel: KernelSpec,
    pub c: f64,
    pub tol: f64,
    pub dim: usize,
    pub support: Vec<SupportVector>,
    pub bias: f64,
    pub platt_a: f64,
    pub platt_b: f64,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    /// +1 or -1; a zero margin counts as +1.
    pub label: i8,
    /// Calibrated probability of the positive class.
    pub probability: f64,
    pub margin: f64,
}

/// Row-major Gram matrix of `x` under `kernel`.
pub fn gram_matrix(x: &[SparseVector], kernel: &KernelSpec) -> Result<Vec<f64>> {
    let n = x.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (0..n).map(|j| kernel_eval(kernel, &x[i], &x[j])).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    Ok(rows.concat())
}

/// Trains a soft-margin SVM by SMO and calibrates it with Platt scaling on
/// the training decision values.
pub fn svm_train(
    x: &[SparseVector],
    y: &[f64],
    kernel: KernelSpec,
    c: f64,
    tol: f64,
    max_passes: usize,
) -> Result<TrainedSvm> {
    kernel.validate()?;
    if x.len() != y.len() {
        return Err(LearnError::InvalidInput(format!("{} vectors but {} labels", x.len(), y.len())));
    }
    let dim = x.first().map_or(0, |v| v.dim());
    if let Some(bad) = x.iter().find(|v| v.dim() != dim) {
        return Err(LearnError::DimensionMismatch {
            left: dim,
            right: bad.dim(),
        });
    }
    let gram = gram_matrix(x, &kernel)?;
    let sol = solve_dual(&gram, y, &SmoOptions { c, tol, max_passes }, |_| {})?;

    let n = y.len();
    let decisions: Vec<f64> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| sol.alphas[j] > 0.0)
                .map(|j| sol.alphas[j] * y[j] * gram[i * n + j])
                .sum::<f64>()
                + sol.bias
        })
        .collect();
    let (platt_a, platt_b) = platt_fit(&decisions, y);

    let support = (0..n)
        .filter(|&i| sol.alphas[i] > 0.0)
        .map(|i| SupportVector {
            x: x[i].clone(),
            alpha: sol.alphas[i],
            label: y[i],
            index: i,
        })
        .collect();
    Ok(TrainedSvm {
        format: SVM_FORMAT_VERSION.to_string(),
        kernel,
        c,
        tol,
        dim,
        support,
        bias: sol.bias,
        platt_a,
        platt_b,
        objective: sol.objective,
        iterations: sol.iterations,
    })
}

impl TrainedSvm {
    /// `sum_i alpha_i y_i K(x_i, x) + b`.
    pub fn decision(&self, x: &SparseVector) -> Result<f64> {
        if x.dim() != self.dim {
            return Err(LearnError::DimensionMismatch {
                left: self.dim,
                right: x.dim(),
            });
        }
        let mut acc = self.bias;
        for sv in &self.support {
            acc += sv.alpha * sv.label * kernel_eval(&self.kernel, &sv.x, x)?;
        }
        Ok(acc)
    }

    /// Largest KKT violation over a training set, measured on `y f(x)`.
    pub fn kkt_residual(&self, x: &[SparseVector], y: &[f64]) -> Result<f64> {
        let mut alphas = vec![0.0; x.len()];
        for sv in &self.support {
            alphas[sv.index] = sv.alpha;
        }
        let mut worst = 0.0f64;
        for (i, xi) in x.iter().enumerate() {
            let yf = y[i] * self.decision(xi)?;
            let v = if alphas[i] == 0.0 {
                1.0 - yf
            } else if self.c.is_finite() && alphas[i] >= self.c {
                yf - 1.0
            } else {
                (yf - 1.0).abs()
            };
            worst = worst.max(v);
        }
        Ok(worst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: TrainedSvm = serde_json::from_str(s).map_err(|e| LearnError::InvalidInput(e.to_string()))?;
        if model.format != SVM_FORMAT_VERSION {
            return Err(LearnError::InvalidInput(format!("unsupported model format `{}`", model.format)));
        }
        Ok(model)
    }
}

pub fn svm_predict(model: &TrainedSvm, x: &SparseVector) -> Result<Prediction> {
    let margin = model.decision(x)?;
    Ok(Prediction {
        label: if margin >= 0.0 { 1 } else { -1 },
        probability: platt_probability(model.platt_a, model.platt_b, margin),
        margin,
    })
}
