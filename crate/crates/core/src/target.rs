//! The victim classifier and its black-box query interface.
//!
//! [`TargetModel`] keeps its SVM and label dictionary private. Everything
//! outside this module sees it only through [`QueryOracle`], which returns a
//! predicted label and a confidence, and through [`QuerySession`], which
//! charges each distinct graph against a query budget.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::graph::{graph_hash, ClassLabel, GraphDataset, GraphDigest, LabeledGraph};
use crate::learners::{svm_predict, svm_train, KernelSpec, LearnError, SparseVector, TrainedSvm};
use crate::wl::{wl_feature_vector, wl_feature_vectors_par, LabelDictionary, LabelKey};

pub const TARGET_FORMAT_VERSION: &str = "target-v1";

const TARGET_TOL: f64 = 1e-3;
const TARGET_MAX_PASSES: usize = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum TargetError {
    #[error("query budget of {max_queries} exhausted")]
    QueryBudgetExhausted { max_queries: usize },
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid target model: {0}")]
    Format(String),
}

pub type Result<T, E = TargetError> = std::result::Result<T, E>;

/// What the attacker observes for one graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QueryOutput {
    pub label: ClassLabel,
    /// Probability the target assigns to `label`, in [0.5, 1] in score mode.
    pub confidence: f64,
}

/// Whether the oracle reveals its confidence or only a hard label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    Label,
    #[default]
    Score,
}

impl std::str::FromStr for OracleMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "label" => Ok(OracleMode::Label),
            "score" => Ok(OracleMode::Score),
            other => Err(format!("unknown oracle mode `{other}` (expected label or score)")),
        }
    }
}

/// A black-box classifier: graph in, label and confidence out.
pub trait QueryOracle: Sync {
    fn observe(&self, g: &LabeledGraph) -> Result<QueryOutput>;
}

/// `1 - p(y | G')`: the confidence when the label is wrong, its complement
/// when it is right. Also returns whether the prediction was flipped.
pub fn attack_loss(output: &QueryOutput, y: ClassLabel) -> (f64, bool) {
    let p_true = if output.label == y {
        output.confidence
    } else {
        1.0 - output.confidence
    };
    ((1.0 - p_true).clamp(0.0, 1.0), output.label != y)
}

/// Linear SVM over WL feature vectors with a frozen label dictionary.
#[derive(Debug, Clone)]
pub struct TargetModel {
    svm: TrainedSvm,
    dictionary: LabelDictionary,
    iterations: usize,
}

/// Trains the target on every graph in `ds`.
pub fn train_target(ds: &GraphDataset, iterations: usize, c: f64) -> Result<TargetModel> {
    let mut dictionary = LabelDictionary::new();
    let phis = wl_feature_vectors_par(ds.graphs(), iterations, &mut dictionary);
    let dim = dictionary.len();
    let x: Vec<SparseVector> = phis.iter().map(|p| p.to_sparse(dim)).collect();
    let y: Vec<f64> = ds.labels().iter().map(|l| l.sign()).collect();
    let svm = svm_train(&x, &y, KernelSpec::PrecomputedWl, c, TARGET_TOL, TARGET_MAX_PASSES)?;
    Ok(TargetModel {
        svm,
        dictionary,
        iterations,
    })
}

#[derive(Serialize, Deserialize)]
struct TargetFile {
    format: String,
    iterations: usize,
    dictionary: Vec<LabelKey>,
    svm: TrainedSvm,
}

impl TargetModel {
    pub fn wl_iterations(&self) -> usize {
        self.iterations
    }

    /// Calibrated probability of the positive class. Labels unseen in
    /// training get fresh ids in a private overlay and contribute nothing.
    fn positive_probability(&self, g: &LabeledGraph) -> Result<f64> {
        let mut overlay = self.dictionary.overlay();
        let phi = wl_feature_vector(g, self.iterations, &mut overlay);
        let x = phi.to_sparse(self.dictionary.len());
        Ok(svm_predict(&self.svm, &x)?.probability)
    }

    /// Hard label and its calibrated probability. The label is the more
    /// probable class, so the confidence is never below one half.
    pub fn predict(&self, g: &LabeledGraph) -> Result<QueryOutput> {
        let p = self.positive_probability(g)?;
        Ok(if p >= 0.5 {
            QueryOutput {
                label: ClassLabel::Loop,
                confidence: p,
            }
        } else {
            QueryOutput {
                label: ClassLabel::NonLoop,
                confidence: 1.0 - p,
            }
        })
    }

    /// Fraction of `ds` classified correctly.
    pub fn accuracy(&self, ds: &GraphDataset) -> Result<f64> {
        if ds.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0usize;
        for (g, y) in ds.iter() {
            if self.predict(g)?.label == y {
                correct += 1;
            }
        }
        Ok(correct as f64 / ds.len() as f64)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&TargetFile {
            format: TARGET_FORMAT_VERSION.into(),
            iterations: self.iterations,
            dictionary: self.dictionary.keys().to_vec(),
            svm: self.svm.clone(),
        })
        .expect("target serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: TargetFile = serde_json::from_str(s).map_err(|e| TargetError::Format(e.to_string()))?;
        if file.format != TARGET_FORMAT_VERSION {
            return Err(TargetError::Format(format!("unsupported format `{}`", file.format)));
        }
        let dictionary = LabelDictionary::from_keys(file.dictionary)
            .ok_or_else(|| TargetError::Format("dictionary keys are not a valid id assignment".into()))?;
        if file.svm.dim != dictionary.len() {
            return Err(TargetError::Format(format!(
                "model dimension {} does not match dictionary size {}",
                file.svm.dim,
                dictionary.len()
            )));
        }
        Ok(Self {
            svm: TrainedSvm::from_json(&serde_json::to_string(&file.svm).expect("svm serializes"))?,
            dictionary,
            iterations: file.iterations,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| TargetError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TargetError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// A trained target exposed as an oracle.
#[derive(Debug, Clone)]
pub struct BlackBoxTarget {
    model: TargetModel,
    mode: OracleMode,
}

impl BlackBoxTarget {
    pub fn new(model: TargetModel, mode: OracleMode) -> Self {
        Self { model, mode }
    }

    pub fn mode(&self) -> OracleMode {
        self.mode
    }
}

impl QueryOracle for BlackBoxTarget {
    fn observe(&self, g: &LabeledGraph) -> Result<QueryOutput> {
        let out = self.model.predict(g)?;
        Ok(match self.mode {
            OracleMode::Score => out,
            OracleMode::Label => QueryOutput {
                label: out.label,
                confidence: 1.0,
            },
        })
    }
}

/// Append-only log of charged queries.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryLedger {
    max_queries: usize,
    entries: Vec<(GraphDigest, QueryOutput)>,
    index: HashMap<GraphDigest, usize>,
}

impl QueryLedger {
    pub fn new(max_queries: usize) -> Self {
        Self {
            max_queries,
            entries: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn count(&self) -> usize {
        self.entries.len()
    }

    pub fn max_queries(&self) -> usize {
        self.max_queries
    }

    pub fn remaining(&self) -> usize {
        self.max_queries - self.entries.len()
    }

    pub fn is_exhausted(&self) -> bool {
        self.entries.len() >= self.max_queries
    }

    pub fn entries(&self) -> &[(GraphDigest, QueryOutput)] {
        &self.entries
    }

    pub fn cached(&self, digest: &GraphDigest) -> Option<QueryOutput> {
        self.index.get(digest).map(|&i| self.entries[i].1)
    }
}

/// An oracle plus a ledger. Repeated graphs are answered from the ledger
/// without being charged.
pub struct QuerySession<'a, O: QueryOracle + ?Sized> {
    oracle: &'a O,
    ledger: QueryLedger,
}

/// A query answer and whether it was served from the cache.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Answer {
    pub output: QueryOutput,
    pub digest: GraphDigest,
    pub cached: bool,
}

impl<'a, O: QueryOracle + ?Sized> QuerySession<'a, O> {
    pub fn new(oracle: &'a O, max_queries: usize) -> Self {
        Self {
            oracle,
            ledger: QueryLedger::new(max_queries),
        }
    }

    pub fn query(&mut self, g: &LabeledGraph) -> Result<Answer> {
        let digest = graph_hash(g);
        if let Some(output) = self.ledger.cached(&digest) {
            return Ok(Answer {
                output,
                digest,
                cached: true,
            });
        }
        if self.ledger.is_exhausted() {
            return Err(TargetError::QueryBudgetExhausted {
                max_queries: self.ledger.max_queries,
            });
        }
        let output = self.oracle.observe(g)?;
        self.ledger.index.insert(digest, self.ledger.entries.len());
        self.ledger.entries.push((digest, output));
        Ok(Answer {
            output,
            digest,
            cached: false,
        })
    }

    pub fn ledger(&self) -> &QueryLedger {
        &self.ledger
    }

    pub fn into_ledger(self) -> QueryLedger {
        self.ledger
    }
}
