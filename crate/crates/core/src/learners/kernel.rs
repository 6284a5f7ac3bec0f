use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LearnError, Result, SparseVector};

/// Kernel function.
///
/// `PrecomputedWl` is the WL subtree kernel: the inner product of WL
/// histograms, so on WL feature vectors it evaluates like `Linear`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelSpec {
    Rbf { gamma: f64 },
    Linear,
    Polynomial { degree: u32, coef0: f64 },
    PrecomputedWl,
}

impl KernelSpec {
    pub fn default_polynomial() -> Self {
        KernelSpec::Polynomial {
            degree: 3,
            coef0: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { gamma } if !(gamma.is_finite() && gamma > 0.0) => Err(LearnError::InvalidKernel(
                format!("rbf gamma must be finite and > 0, got {gamma}"),
            )),
            KernelSpec::Polynomial { degree: 0, .. } => {
                Err(LearnError::InvalidKernel("polynomial degree must be >= 1".into()))
            }
            KernelSpec::Polynomial { coef0, .. } if !coef0.is_finite() => {
                Err(LearnError::InvalidKernel("polynomial coef0 must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, a: &SparseVector, b: &SparseVector) -> Result<f64> {
    match *spec {
        KernelSpec::Rbf { gamma } => Ok((-gamma * a.squared_distance(b)?).exp()),
        KernelSpec::Linear | KernelSpec::PrecomputedWl => a.dot(b),
        KernelSpec::Polynomial { degree, coef0 } => Ok((a.dot(b)? + coef0).powi(degree as i32)),
    }
}

const EXACT_LIMIT: usize = 512;

/// Population standard deviation of the pairwise Euclidean distances.
///
/// Exact for up to 512 vectors; beyond that, 512 * 512 pairs are sampled
/// with a fixed seed.
pub fn pairwise_distance_sd(vectors: &[SparseVector]) -> Result<f64> {
    let n = vectors.len();
    if n < 2 {
        return Err(LearnError::DegenerateData("need at least two vectors".into()));
    }
    let mut distances = Vec::new();
    if n <= EXACT_LIMIT {
        for i in 0..n {
            for j in i + 1..n {
                distances.push(vectors[i].squared_distance(&vectors[j])?.sqrt());
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        while distances.len() < EXACT_LIMIT * EXACT_LIMIT {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i != j {
                distances.push(vectors[i].squared_distance(&vectors[j])?.sqrt());
            }
        }
    }
    let m = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / m;
    let var = distances.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / m;
    Ok(var.sqrt())
}

/// RBF width from the data: `gamma = 1 / (2 sigma^2)` with `sigma` the
/// standard deviation of pairwise distances.
pub fn sigma_heuristic(vectors: &[SparseVector]) -> Result<f64> {
    let sigma = pairwise_distance_sd(vectors)?;
    if !(sigma > 1e-12) {
        return Err(LearnError::DegenerateData(
            "pairwise distances have zero spread; supply gamma explicitly".into(),
        ));
    }
    Ok(1.0 / (2.0 * sigma * sigma))
}
