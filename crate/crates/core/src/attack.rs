//! Black-box evasion: propose perturbations, query the target, learn a
//! surrogate of which perturbations succeed, and keep the highest-loss graph.
//!
//! This module sees the victim only through [`QueryOracle`] and
//! [`QuerySession`].

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::graph::{graph_hash, ClassLabel, EdgeFlip, GraphDataset, GraphDigest, GraphError, LabeledGraph};
use crate::learners::{LearnError, SparseVector, SurrogateKind, SurrogateParams, TrainedSurrogate};
use crate::perturb::{
    centrality_ranking, plan, plans_from_ranking, random_walk_pairs, Budget, PerturbError, PerturbationPlan,
    PlanOrigin, Strategy,
};
use crate::target::{attack_loss, QueryOracle, QueryOutput, QuerySession, TargetError};
use crate::wl::{wl_feature_vector, LabelDictionary, DEFAULT_WL_ITERATIONS};

#[derive(Debug, thiserror::Error)]
pub enum AttackError {
    #[error("invalid attack config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Perturb(#[from] PerturbError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Target(#[from] TargetError),
}

pub type Result<T, E = AttackError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttackConfig {
    /// Perturbation ratio; the flip budget is `max(1, ceil(r n^2))`.
    pub r: f64,
    pub strategy: Strategy,
    pub surrogate: SurrogateKind,
    /// Per-graph query budget.
    pub max_queries: usize,
    pub k_candidates: usize,
    pub rounds: usize,
    /// Iteration cap of the surrogate solver, in passes.
    pub epochs: usize,
    pub seed: u64,
    /// WL iterations of the attacker's own feature extractor.
    pub wl_iterations: usize,
    /// Box constraint of the SVM surrogates.
    pub surrogate_c: f64,
    /// Reserved; accepted and echoed, not used by the attack.
    pub lambda: f64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            r: 3e-4,
            strategy: Strategy::Eigencentrality,
            surrogate: SurrogateKind::SvmRbf,
            max_queries: 50,
            k_candidates: 10,
            rounds: 10,
            epochs: 200,
            seed: 42,
            wl_iterations: DEFAULT_WL_ITERATIONS,
            surrogate_c: 1.0,
            lambda: 0.1,
        }
    }
}

impl AttackConfig {
    /// A zero query budget or zero rounds is allowed and means "no attack".
    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(AttackError::InvalidConfig(format!("r must be finite and > 0, got {}", self.r)));
        }
        if self.k_candidates == 0 {
            return Err(AttackError::InvalidConfig("k_candidates must be >= 1".into()));
        }
        if self.epochs == 0 {
            return Err(AttackError::InvalidConfig("epochs must be >= 1".into()));
        }
        if !(self.surrogate_c > 0.0) {
            return Err(AttackError::InvalidConfig("surrogate_c must be > 0".into()));
        }
        if !self.lambda.is_finite() {
            return Err(AttackError::InvalidConfig("lambda must be finite".into()));
        }
        Ok(())
    }

    fn surrogate_params(&self) -> SurrogateParams {
        SurrogateParams {
            c: self.surrogate_c,
            epochs: self.epochs,
            ..SurrogateParams::default()
        }
    }
}

/// One charged query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRecord {
    pub graph_hash: GraphDigest,
    /// Flips relative to the clean graph.
    pub flips: Vec<EdgeFlip>,
    pub origin: PlanOrigin,
    pub label: ClassLabel,
    pub confidence: f64,
    pub loss: f64,
    pub success: bool,
    pub query_index: usize,
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SurrogateStatus {
    /// Round 0: nothing to learn from yet.
    NotUsed,
    Trained {
        threshold: f64,
        positives: usize,
        negatives: usize,
    },
    /// Training was impossible or failed; candidates came from the strategy alone.
    Fallback { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDiagnostics {
    pub round: usize,
    pub pool_size: usize,
    pub queried: usize,
    pub surrogate: SurrogateStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub graph_id: String,
    pub true_label: ClassLabel,
    pub beta: usize,
    /// Flips of the highest-loss graph; empty when nothing was queried.
    pub best_flips: Vec<EdgeFlip>,
    pub best_loss: f64,
    pub success: bool,
    pub queries_used: usize,
    pub records: Vec<AttackRecord>,
    pub rounds: Vec<RoundDiagnostics>,
}

impl AttackOutcome {
    /// The highest-loss perturbed graph (the clean graph when nothing was queried).
    pub fn best_graph(&self, clean: &LabeledGraph) -> Result<LabeledGraph> {
        Ok(clean.apply_flips(&self.best_flips)?)
    }
}

/// Seed of the per-graph random stream.
pub fn graph_seed(seed: u64, graph_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(graph_id.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// A candidate perturbation as a sorted set of node pairs.
struct Candidate {
    pairs: Vec<(usize, usize)>,
    origin: PlanOrigin,
    graph: LabeledGraph,
    digest: GraphDigest,
}

struct Attack<'a, O: QueryOracle + ?Sized> {
    g: &'a LabeledGraph,
    y: ClassLabel,
    cfg: &'a AttackConfig,
    budget: Budget,
    rng: ChaCha8Rng,
    session: QuerySession<'a, O>,
    /// Digests of the clean graph and of everything already proposed.
    seen: HashSet<GraphDigest>,
    ranking: Option<Vec<(usize, usize)>>,
    offset: usize,
    records: Vec<AttackRecord>,
    graphs: Vec<LabeledGraph>,
    best: Option<usize>,
}

impl<'a, O: QueryOracle + ?Sized> Attack<'a, O> {
    fn candidate(&self, mut pairs: Vec<(usize, usize)>, origin: PlanOrigin) -> Result<Candidate> {
        pairs.sort_unstable();
        pairs.dedup();
        let flips: Vec<EdgeFlip> = pairs.iter().map(|&(u, v)| EdgeFlip::toggle(self.g, u, v)).collect();
        let graph = self.g.apply_flips(&flips)?;
        let digest = graph_hash(&graph);
        Ok(Candidate {
            pairs,
            origin,
            graph,
            digest,
        })
    }

    /// Up to `want` fresh strategy plans that have not been proposed before.
    fn fresh(&mut self, want: usize) -> Result<Vec<Candidate>> {
        let mut out = Vec::new();
        // Random strategies can keep proposing duplicates on tiny graphs.
        let mut attempts = 0;
        while out.len() < want && attempts < 4 {
            attempts += 1;
            let need = want - out.len();
            let plans: Vec<PerturbationPlan> = match self.cfg.strategy {
                Strategy::Eigencentrality => {
                    if self.ranking.is_none() {
                        self.ranking = Some(centrality_ranking(self.g)?);
                    }
                    let ranking = self.ranking.as_deref().expect("ranking computed above");
                    let plans = plans_from_ranking(self.g, ranking, &self.budget, need, self.offset)?;
                    self.offset += plans.len();
                    plans
                }
                s => plan(s, self.g, &self.budget, need, 0, &mut self.rng)?,
            };
            let exhausted = plans.is_empty();
            for p in plans {
                let c = self.candidate(p.flips.iter().map(|f| f.pair()).collect(), p.origin)?;
                if self.seen.insert(c.digest) {
                    out.push(c);
                }
            }
            if exhausted {
                break;
            }
        }
        Ok(out)
    }

    /// One-flip mutations of the incumbent: swap one of its pairs for a new
    /// one, or add a pair while under budget.
    fn mutations(&mut self, want: usize, sources: &[(usize, usize)]) -> Result<Vec<Candidate>> {
        let Some(best) = self.best else {
            return Ok(Vec::new());
        };
        let incumbent: Vec<(usize, usize)> = self.records[best].flips.iter().map(|f| f.pair()).collect();
        let mut sources = sources.to_vec();
        if sources.is_empty() {
            sources = random_walk_pairs(self.g.node_count(), 2 * want, &incumbent, &mut self.rng);
        }
        let mut out = Vec::new();
        for _ in 0..4 * want {
            if out.len() >= want || sources.is_empty() {
                break;
            }
            let pair = *sources.choose(&mut self.rng).expect("sources non-empty");
            if incumbent.contains(&pair) {
                continue;
            }
            let mut pairs = incumbent.clone();
            if pairs.is_empty() || (pairs.len() < self.budget.beta && self.rng.gen_bool(0.5)) {
                pairs.push(pair);
            } else {
                let i = self.rng.gen_range(0..pairs.len());
                pairs[i] = pair;
            }
            let c = self.candidate(pairs, PlanOrigin::Mutation)?;
            if self.seen.insert(c.digest) {
                out.push(c);
            }
        }
        Ok(out)
    }

    /// Fits the surrogate on all records. Losses are binarized at 0.5 when
    /// both outcomes occur; otherwise (every query so far failed) at their
    /// median, so the surrogate learns which perturbations came closest.
    fn fit_surrogate(&self) -> std::result::Result<(TrainedSurrogate, LabelDictionary, SurrogateStatus), String> {
        let losses: Vec<f64> = self.records.iter().map(|r| r.loss).collect();
        let any_success = self.records.iter().any(|r| r.success);
        let any_failure = self.records.iter().any(|r| !r.success);
        let threshold = if any_success && any_failure {
            0.5
        } else {
            let mut sorted = losses.clone();
            sorted.sort_by(f64::total_cmp);
            let m = sorted.len();
            if m % 2 == 1 {
                sorted[m / 2]
            } else {
                0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
            }
        };
        let y: Vec<f64> = losses.iter().map(|&l| if l > threshold { 1.0 } else { -1.0 }).collect();
        let positives = y.iter().filter(|&&v| v > 0.0).count();
        let negatives = y.len() - positives;
        if positives == 0 || negatives == 0 {
            return Err("all recorded losses fall on one side of the threshold".into());
        }
        let mut dict = LabelDictionary::new();
        let phis: Vec<_> = self
            .graphs
            .iter()
            .map(|g| wl_feature_vector(g, self.cfg.wl_iterations, &mut dict))
            .collect();
        let dim = dict.len();
        let x: Vec<SparseVector> = phis.iter().map(|p| p.to_sparse(dim)).collect();
        let model = TrainedSurrogate::fit(self.cfg.surrogate, &x, &y, &self.cfg.surrogate_params())
            .map_err(|e: LearnError| e.to_string())?;
        Ok((
            model,
            dict,
            SurrogateStatus::Trained {
                threshold,
                positives,
                negatives,
            },
        ))
    }

    fn query(&mut self, c: Candidate, round: usize) -> Result<bool> {
        let answer = self.session.query(&c.graph)?;
        debug_assert!(!answer.cached, "candidates are deduplicated before querying");
        let QueryOutput { label, confidence } = answer.output;
        let (loss, success) = attack_loss(&answer.output, self.y);
        let flips = c.pairs.iter().map(|&(u, v)| EdgeFlip::toggle(self.g, u, v)).collect();
        self.records.push(AttackRecord {
            graph_hash: c.digest,
            flips,
            origin: c.origin,
            label,
            confidence,
            loss,
            success,
            query_index: self.session.ledger().count() - 1,
            round,
        });
        self.graphs.push(c.graph);
        let idx = self.records.len() - 1;
        if self.best.map_or(true, |b| loss > self.records[b].loss) {
            self.best = Some(idx);
        }
        Ok(success)
    }

    fn run(mut self) -> Result<AttackOutcome> {
        let k = self.cfg.k_candidates;
        let mut rounds = Vec::new();
        let mut success = false;
        'rounds: for round in 0..self.cfg.rounds {
            let want = k.min(self.session.ledger().remaining());
            if want == 0 {
                break;
            }
            let (batch, pool_size, status) = if round == 0 {
                let fresh = self.fresh(want)?;
                let n = fresh.len();
                (fresh, n, SurrogateStatus::NotUsed)
            } else {
                let fresh = self.fresh(2 * k)?;
                let sources: Vec<(usize, usize)> = fresh.iter().flat_map(|c| c.pairs.iter().copied()).collect();
                match self.fit_surrogate() {
                    Ok((model, mut dict, status)) => {
                        let mutated = self.mutations(2 * k, &sources)?;
                        let pool: Vec<Candidate> = fresh.into_iter().chain(mutated).collect();
                        let phis: Vec<_> = pool
                            .iter()
                            .map(|c| wl_feature_vector(&c.graph, self.cfg.wl_iterations, &mut dict))
                            .collect();
                        // Pool-only labels get ids past the training dimension and are dropped.
                        let dim = model.dim();
                        let mut scored: Vec<(f64, Candidate)> = Vec::with_capacity(pool.len());
                        for (c, phi) in pool.into_iter().zip(&phis) {
                            let p = model.probability(&phi.to_sparse(dim)).unwrap_or(0.0);
                            scored.push((p, c));
                        }
                        let n = scored.len();
                        // Stable sort keeps pool order among equal scores.
                        scored.sort_by(|a, b| b.0.total_cmp(&a.0));
                        (scored.into_iter().take(want).map(|(_, c)| c).collect(), n, status)
                    }
                    Err(reason) => {
                        let n = fresh.len();
                        (
                            fresh.into_iter().take(want).collect(),
                            n,
                            SurrogateStatus::Fallback { reason },
                        )
                    }
                }
            };
            let queried = batch.len();
            rounds.push(RoundDiagnostics {
                round,
                pool_size,
                queried,
                surrogate: status,
            });
            if queried == 0 {
                break;
            }
            for c in batch {
                match self.query(c, round) {
                    Ok(true) => {
                        success = true;
                        break 'rounds;
                    }
                    Ok(false) => {}
                    Err(AttackError::Target(TargetError::QueryBudgetExhausted { .. })) => break 'rounds,
                    Err(e) => return Err(e),
                }
            }
        }
        let (best_flips, best_loss) = match self.best {
            Some(b) => (self.records[b].flips.clone(), self.records[b].loss),
            None => (Vec::new(), 0.0),
        };
        Ok(AttackOutcome {
            graph_id: self.g.id().to_string(),
            true_label: self.y,
            beta: self.budget.beta,
            best_flips,
            best_loss,
            success,
            queries_used: self.session.ledger().count(),
            records: self.records,
            rounds,
        })
    }
}

/// Attacks one clean graph `g` with true label `y`.
pub fn attack_one<O: QueryOracle + ?Sized>(
    oracle: &O,
    g: &LabeledGraph,
    y: ClassLabel,
    cfg: &AttackConfig,
) -> Result<AttackOutcome> {
    cfg.validate()?;
    let budget = Budget::from_ratio(cfg.r, g.node_count())?;
    let mut seen = HashSet::new();
    seen.insert(graph_hash(g));
    Attack {
        g,
        y,
        cfg,
        budget,
        rng: ChaCha8Rng::seed_from_u64(graph_seed(cfg.seed, g.id())),
        session: QuerySession::new(oracle, cfg.max_queries),
        seen,
        ranking: None,
        offset: 0,
        records: Vec::new(),
        graphs: Vec::new(),
        best: None,
    }
    .run()
}

/// Per-graph result within a test-set attack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphAttack {
    pub graph_id: String,
    pub true_label: ClassLabel,
    pub clean_label: ClassLabel,
    pub clean_confidence: f64,
    /// `None` for graphs the target already misclassifies; they are not attacked.
    pub outcome: Option<AttackOutcome>,
}

impl GraphAttack {
    pub fn clean_correct(&self) -> bool {
        self.clean_label == self.true_label
    }

    /// Whether the best perturbed graph is still classified correctly.
    pub fn attacked_correct(&self) -> bool {
        self.clean_correct() && !self.outcome.as_ref().is_some_and(|o| o.success)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub config: AttackConfig,
    pub clean_accuracy: f64,
    pub attacked_accuracy: f64,
    /// Attacked minus clean accuracy in percentage points (0 or negative).
    pub decline: f64,
    pub total_queries: usize,
    pub graphs: Vec<GraphAttack>,
}

impl AttackSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// Attacks every graph of `test` independently (in parallel on the current
/// rayon pool). Results do not depend on the number of workers.
pub fn attack_testset<O: QueryOracle + ?Sized>(
    oracle: &O,
    test: &GraphDataset,
    cfg: &AttackConfig,
) -> Result<AttackSummary> {
    cfg.validate()?;
    let graphs: Vec<GraphAttack> = test
        .graphs()
        .par_iter()
        .zip(test.labels().par_iter())
        .map(|(g, &y)| {
            let clean = oracle.observe(g)?;
            let outcome = if clean.label == y {
                Some(attack_one(oracle, g, y, cfg)?)
            } else {
                None
            };
            Ok(GraphAttack {
                graph_id: g.id().to_string(),
                true_label: y,
                clean_label: clean.label,
                clean_confidence: clean.confidence,
                outcome,
            })
        })
        .collect::<Result<_>>()?;
    let n = graphs.len().max(1) as f64;
    let clean = graphs.iter().filter(|a| a.clean_correct()).count();
    let attacked = graphs.iter().filter(|a| a.attacked_correct()).count();
    Ok(AttackSummary {
        config: cfg.clone(),
        clean_accuracy: clean as f64 / n,
        attacked_accuracy: attacked as f64 / n,
        decline: (attacked as f64 - clean as f64) / n * 100.0,
        total_queries: graphs
            .iter()
            .filter_map(|a| a.outcome.as_ref())
            .map(|o| o.queries_used)
            .sum(),
        graphs,
    })
}

/// Post-hoc check of a test-set attack against the clean graphs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub graphs: usize,
    pub records: usize,
    pub max_queries_used: usize,
    pub max_flip_distance: usize,
    pub violations: Vec<String>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: AuditReport) {
        self.graphs += other.graphs;
        self.records += other.records;
        self.max_queries_used = self.max_queries_used.max(other.max_queries_used);
        self.max_flip_distance = self.max_flip_distance.max(other.max_flip_distance);
        self.violations.extend(other.violations);
    }
}

/// Replays every record of `summary` on the matching clean graph of `test`:
/// the digest must match, the graph must lie within `beta` flips of the
/// original, query indices must be consecutive and the count within budget.
pub fn audit_summary(summary: &AttackSummary, test: &GraphDataset) -> AuditReport {
    let mut report = AuditReport::default();
    let max_queries = summary.config.max_queries;
    for (ga, clean) in summary.graphs.iter().zip(test.graphs()) {
        report.graphs += 1;
        let Some(o) = &ga.outcome else { continue };
        if ga.graph_id != clean.id() {
            report.violations.push(format!("{}: summary order does not match the dataset", ga.graph_id));
            continue;
        }
        report.max_queries_used = report.max_queries_used.max(o.queries_used);
        if o.queries_used > max_queries || o.records.len() != o.queries_used {
            report.violations.push(format!("{}: {} queries for a budget of {max_queries}", ga.graph_id, o.queries_used));
        }
        for (i, rec) in o.records.iter().enumerate() {
            report.records += 1;
            if rec.query_index != i {
                report.violations.push(format!("{}: record {i} has query index {}", ga.graph_id, rec.query_index));
            }
            match clean.apply_flips(&rec.flips) {
                Ok(g) => {
                    let d = clean.edge_symmetric_difference(&g);
                    report.max_flip_distance = report.max_flip_distance.max(d);
                    if d > o.beta || d == 0 {
                        report.violations.push(format!("{}: query {i} is {d} flips away (beta {})", ga.graph_id, o.beta));
                    }
                    if graph_hash(&g) != rec.graph_hash {
                        report.violations.push(format!("{}: query {i} digest mismatch", ga.graph_id));
                    }
                }
                Err(e) => report.violations.push(format!("{}: query {i} flips do not apply: {e}", ga.graph_id)),
            }
            // A confidence of exactly one half leaves the flip undetermined by the loss.
            let inconsistent = rec.success != (rec.loss > 0.5) && rec.confidence != 0.5;
            if !(0.0..=1.0).contains(&rec.loss) || inconsistent {
                report.violations.push(format!("{}: query {i} has inconsistent loss {}", ga.graph_id, rec.loss));
            }
        }
    }
    report
}
