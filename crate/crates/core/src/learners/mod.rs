//! Kernels, a soft-margin SVM trained by SMO, Platt calibration and a Gaussian
//! naive Bayes baseline.

mod kernel;
mod naive_bayes;
mod platt;
mod smo;
mod sparse;
mod svm;

pub use kernel::{kernel_eval, pairwise_distance_sd, sigma_heuristic, KernelSpec};
pub use naive_bayes::{nb_predict, nb_train, TrainedNaiveBayes};
pub use platt::{platt_fit, platt_probability};
pub use smo::{solve_dual, DualSolution, SmoOptions, SmoStep};
pub use sparse::SparseVector;
pub use svm::{gram_matrix, svm_predict, svm_train, Prediction, SupportVector, TrainedSvm, SVM_FORMAT_VERSION};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LearnError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("training set needs at least one example of each class")]
    DegenerateLabels,
    #[error("solver did not converge within {max_passes} passes")]
    DidNotConverge { max_passes: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = LearnError> = std::result::Result<T, E>;

/// Attacker-side model families used as surrogates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurrogateKind {
    SvmRbf,
    SvmLinear,
    SvmPoly,
    NaiveBayes,
}

impl SurrogateKind {
    pub const ALL: [SurrogateKind; 4] = [
        SurrogateKind::SvmLinear,
        SurrogateKind::SvmPoly,
        SurrogateKind::NaiveBayes,
        SurrogateKind::SvmRbf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SurrogateKind::SvmRbf => "svm_rbf",
            SurrogateKind::SvmLinear => "svm_linear",
            SurrogateKind::SvmPoly => "svm_poly",
            SurrogateKind::NaiveBayes => "naive_bayes",
        }
    }
}

impl std::str::FromStr for SurrogateKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "svm_rbf" => Ok(SurrogateKind::SvmRbf),
            "svm_linear" => Ok(SurrogateKind::SvmLinear),
            "svm_poly" => Ok(SurrogateKind::SvmPoly),
            "naive_bayes" => Ok(SurrogateKind::NaiveBayes),
            other => Err(format!("unknown surrogate `{other}`")),
        }
    }
}

/// Hyperparameters shared by the surrogate families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurrogateParams {
    pub c: f64,
    pub tol: f64,
    /// Solver pass cap.
    pub epochs: usize,
    pub nb_smoothing: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            epochs: 200,
            nb_smoothing: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub enum TrainedSurrogate {
    Svm(TrainedSvm),
    NaiveBayes(TrainedNaiveBayes),
}

impl TrainedSurrogate {
    /// Fits a surrogate of `kind` on `(x, y)`, `y` in {+1, -1}. The RBF width
    /// comes from [`sigma_heuristic`].
    pub fn fit(kind: SurrogateKind, x: &[SparseVector], y: &[f64], params: &SurrogateParams) -> Result<Self> {
        let kernel = match kind {
            SurrogateKind::NaiveBayes => {
                return nb_train(x, y, params.nb_smoothing).map(TrainedSurrogate::NaiveBayes)
            }
            SurrogateKind::SvmRbf => KernelSpec::Rbf {
                gamma: sigma_heuristic(x)?,
            },
            SurrogateKind::SvmLinear => KernelSpec::Linear,
            SurrogateKind::SvmPoly => KernelSpec::default_polynomial(),
        };
        svm_train(x, y, kernel, params.c, params.tol, params.epochs).map(TrainedSurrogate::Svm)
    }

    /// Input dimension the model was trained on.
    pub fn dim(&self) -> usize {
        match self {
            TrainedSurrogate::Svm(m) => m.dim,
            TrainedSurrogate::NaiveBayes(m) => m.dim,
        }
    }

    /// Probability of the positive class.
    pub fn probability(&self, x: &SparseVector) -> Result<f64> {
        match self {
            TrainedSurrogate::Svm(m) => svm_predict(m, x).map(|p| p.probability),
            TrainedSurrogate::NaiveBayes(m) => nb_predict(m, x).map(|p| p.probability),
        }
    }
}
