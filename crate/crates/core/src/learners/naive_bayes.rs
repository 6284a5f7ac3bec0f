use super::{LearnError, Prediction, Result, SparseVector};

/// Gaussian naive Bayes with diagonal per-class covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedNaiveBayes {
    pub dim: usize,
    /// Index 0 is the negative class, index 1 the positive class.
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
    pub priors: [f64; 2],
    pub smoothing: f64,
}

/// Every variance is increased by `smoothing * max(largest variance, 1)`.
pub fn nb_train(x: &[SparseVector], y: &[f64], smoothing: f64) -> Result<TrainedNaiveBayes> {
    if x.len() != y.len() {
        return Err(LearnError::InvalidInput(format!("{} vectors but {} labels", x.len(), y.len())));
    }
    if !(smoothing > 0.0) {
        return Err(LearnError::InvalidInput("smoothing must be positive".into()));
    }
    let dim = x.first().map_or(0, |v| v.dim());
    let mut sums = [vec![0.0; dim], vec![0.0; dim]];
    let mut counts = [0usize; 2];
    for (xi, &yi) in x.iter().zip(y) {
        if xi.dim() != dim {
            return Err(LearnError::DimensionMismatch {
                left: dim,
                right: xi.dim(),
            });
        }
        let c = class_index(yi)?;
        counts[c] += 1;
        for &(j, v) in xi.entries() {
            sums[c][j as usize] += v;
        }
    }
    if counts.contains(&0) {
        return Err(LearnError::DegenerateLabels);
    }
    let means = [0, 1].map(|c| sums[c].iter().map(|s| s / counts[c] as f64).collect::<Vec<_>>());
    let mut variances = [vec![0.0; dim], vec![0.0; dim]];
    for (xi, &yi) in x.iter().zip(y) {
        let c = class_index(yi)?;
        let dense = xi.to_dense();
        for j in 0..dim {
            let d = dense[j] - means[c][j];
            variances[c][j] += d * d;
        }
    }
    let mut max_var = 0.0f64;
    for c in 0..2 {
        for v in variances[c].iter_mut() {
            *v /= counts[c] as f64;
            max_var = max_var.max(*v);
        }
    }
    let floor = smoothing * max_var.max(1.0);
    for var in variances.iter_mut() {
        for v in var.iter_mut() {
            *v += floor;
        }
    }
    let total = (counts[0] + counts[1]) as f64;
    Ok(TrainedNaiveBayes {
        dim,
        means,
        variances,
        priors: [counts[0] as f64 / total, counts[1] as f64 / total],
        smoothing,
    })
}

fn class_index(y: f64) -> Result<usize> {
    if y == 1.0 {
        Ok(1)
    } else if y == -1.0 {
        Ok(0)
    } else {
        Err(LearnError::InvalidInput("labels must be +1 or -1".into()))
    }
}

impl TrainedNaiveBayes {
    fn log_joint(&self, dense: &[f64], c: usize) -> f64 {
        let mut acc = self.priors[c].ln();
        for j in 0..self.dim {
            let var = self.variances[c][j];
            let d = dense[j] - self.means[c][j];
            acc -= 0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var);
        }
        acc
    }
}

/// Label by log-posterior comparison; `margin` is the log-odds of the
/// positive class.
pub fn nb_predict(model: &TrainedNaiveBayes, x: &SparseVector) -> Result<Prediction> {
    if x.dim() != model.dim {
        return Err(LearnError::DimensionMismatch {
            left: model.dim,
            right: x.dim(),
        });
    }
    let dense = x.to_dense();
    let margin = model.log_joint(&dense, 1) - model.log_joint(&dense, 0);
    let probability = if margin >= 0.0 {
        1.0 / (1.0 + (-margin).exp())
    } else {
        let e = margin.exp();
        e / (1.0 + e)
    };
    Ok(Prediction {
        label: if margin >= 0.0 { 1 } else { -1 },
        probability,
        margin,
    })
}
