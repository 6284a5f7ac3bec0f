//! Candidate perturbation plans under an edge-flip budget.
//!
//! Three strategies produce [`PerturbationPlan`]s: pairs ranked by
//! eigencentrality, a teleporting random walk, and shortest-path surgery.
//! Every plan is applicable in order to the graph it was drawn for and holds
//! at most `beta` pairwise-distinct flips.

mod centrality;
mod shortest_path;

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::graph::{EdgeFlip, GraphError, LabeledGraph};

pub use centrality::{eigencentrality, ranked_pairs, CentralityScores};
pub use shortest_path::{plan_shortest_path_between, shortest_path};

#[derive(Debug, thiserror::Error)]
pub enum PerturbError {
    #[error("perturbation ratio must be finite and > 0, got {0}")]
    InvalidRatio(f64),
    #[error("budget of {beta} flips exceeds the {pairs} node pairs available")]
    BudgetExceedsPairs { beta: usize, pairs: usize },
    #[error("power iteration did not converge within {max_iter} iterations")]
    DidNotConverge { max_iter: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Number of edge flips allowed on one graph: `beta = max(1, ceil(r * n^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub r: f64,
    pub n: usize,
    pub beta: usize,
}

impl Budget {
    pub fn from_ratio(r: f64, n: usize) -> Result<Self, PerturbError> {
        if !r.is_finite() || r <= 0.0 {
            return Err(PerturbError::InvalidRatio(r));
        }
        let raw = r * (n * n) as f64;
        // Absorb float noise so that e.g. r = 1/900 at n = 30 gives exactly 1.
        let beta = ((raw - 1e-9).ceil() as usize).max(1);
        Self::checked(r, n, beta)
    }

    /// A budget with an explicit flip count.
    pub fn fixed(beta: usize, n: usize) -> Result<Self, PerturbError> {
        let r = beta as f64 / (n * n).max(1) as f64;
        Self::checked(r, n, beta.max(1))
    }

    fn checked(r: f64, n: usize, beta: usize) -> Result<Self, PerturbError> {
        let pairs = pair_count(n);
        if beta > pairs {
            return Err(PerturbError::BudgetExceedsPairs { beta, pairs });
        }
        Ok(Self { r, n, beta })
    }
}

pub(crate) fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Eigencentrality,
    RandomWalk,
    ShortestPath,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [
        Strategy::Eigencentrality,
        Strategy::ShortestPath,
        Strategy::RandomWalk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Eigencentrality => "eigencentrality",
            Strategy::RandomWalk => "random_walk",
            Strategy::ShortestPath => "shortest_path",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "eigencentrality" => Ok(Strategy::Eigencentrality),
            "random_walk" => Ok(Strategy::RandomWalk),
            "shortest_path" => Ok(Strategy::ShortestPath),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

/// Where a plan came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanOrigin {
    Eigencentrality,
    RandomWalk,
    ShortestPath,
    /// Shortest-path planning on a graph without a connected pair.
    ShortestPathFallback,
    /// Local mutation of an earlier plan.
    Mutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPlan {
    pub flips: Vec<EdgeFlip>,
    pub origin: PlanOrigin,
    pub seed: u64,
}

impl PerturbationPlan {
    pub fn len(&self) -> usize {
        self.flips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flips.is_empty()
    }

    pub fn apply(&self, g: &LabeledGraph) -> Result<LabeledGraph, GraphError> {
        g.apply_flips(&self.flips)
    }
}

const CENTRALITY_TOL: f64 = 1e-10;
const CENTRALITY_MAX_ITER: usize = 100_000;

/// Pairs ranked by the product of endpoint centralities.
pub fn centrality_ranking(g: &LabeledGraph) -> Result<Vec<(usize, usize)>, PerturbError> {
    let c = eigencentrality(g, CENTRALITY_TOL, CENTRALITY_MAX_ITER)?;
    Ok(ranked_pairs(&c.scores))
}

/// Up to `k_candidates` plans over the centrality ranking; plan `i` toggles
/// ranked pairs `offset + i .. offset + i + beta`.
///
/// Deterministic in `(g, budget, k_candidates, offset)`. Fewer than
/// `k_candidates` plans are returned when the ranking runs out.
pub fn plan_eigencentrality(
    g: &LabeledGraph,
    budget: &Budget,
    k_candidates: usize,
    offset: usize,
) -> Result<Vec<PerturbationPlan>, PerturbError> {
    let ranking = centrality_ranking(g)?;
    plans_from_ranking(g, &ranking, budget, k_candidates, offset)
}

pub(crate) fn plans_from_ranking(
    g: &LabeledGraph,
    ranking: &[(usize, usize)],
    budget: &Budget,
    k_candidates: usize,
    offset: usize,
) -> Result<Vec<PerturbationPlan>, PerturbError> {
    check_budget(g, budget)?;
    let beta = budget.beta;
    Ok((offset..offset + k_candidates)
        .take_while(|&start| start + beta <= ranking.len())
        .map(|start| PerturbationPlan {
            flips: ranking[start..start + beta]
                .iter()
                .map(|&(u, v)| EdgeFlip::toggle(g, u, v))
                .collect(),
            origin: PlanOrigin::Eigencentrality,
            seed: start as u64,
        })
        .collect())
}

fn check_budget(g: &LabeledGraph, budget: &Budget) -> Result<(), PerturbError> {
    let pairs = pair_count(g.node_count());
    if budget.beta > pairs {
        return Err(PerturbError::BudgetExceedsPairs {
            beta: budget.beta,
            pairs,
        });
    }
    Ok(())
}

/// `k_candidates` random-walk plans, one per seed drawn from `rng`.
pub fn plan_random_walk(
    g: &LabeledGraph,
    budget: &Budget,
    k_candidates: usize,
    rng: &mut impl Rng,
) -> Result<Vec<PerturbationPlan>, PerturbError> {
    check_budget(g, budget)?;
    Ok((0..k_candidates)
        .map(|_| {
            let seed = rng.gen();
            random_walk_plan(g, budget.beta, seed)
        })
        .collect())
}

/// A teleporting walk: each step jumps to a uniformly random node, and the
/// first `beta` distinct consecutive pairs are toggled.
pub fn random_walk_plan(g: &LabeledGraph, beta: usize, seed: u64) -> PerturbationPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = random_walk_pairs(g.node_count(), beta, &[], &mut rng);
    PerturbationPlan {
        flips: pairs.iter().map(|&(u, v)| EdgeFlip::toggle(g, u, v)).collect(),
        origin: PlanOrigin::RandomWalk,
        seed,
    }
}

/// Distinct pairs visited by a teleporting walk, skipping `exclude`.
pub(crate) fn random_walk_pairs(
    n: usize,
    wanted: usize,
    exclude: &[(usize, usize)],
    rng: &mut impl Rng,
) -> Vec<(usize, usize)> {
    let available = pair_count(n).saturating_sub(exclude.len());
    let wanted = wanted.min(available);
    let mut seen: HashSet<(usize, usize)> = exclude.iter().copied().collect();
    let mut out = Vec::with_capacity(wanted);
    if wanted == 0 {
        return out;
    }
    let mut current = rng.gen_range(0..n);
    while out.len() < wanted {
        let next = rng.gen_range(0..n);
        if next != current {
            let pair = (current.min(next), current.max(next));
            if seen.insert(pair) {
                out.push(pair);
            }
        }
        current = next;
    }
    out
}

/// `k_candidates` shortest-path plans, one per seed drawn from `rng`.
pub fn plan_shortest_path(
    g: &LabeledGraph,
    budget: &Budget,
    k_candidates: usize,
    rng: &mut impl Rng,
) -> Result<Vec<PerturbationPlan>, PerturbError> {
    check_budget(g, budget)?;
    Ok((0..k_candidates)
        .map(|_| {
            let seed = rng.gen();
            shortest_path::shortest_path_plan(g, budget.beta, seed)
        })
        .collect())
}

/// Dispatches to the strategy's planner. `offset` only matters for the
/// deterministic eigencentrality ranking.
pub fn plan(
    strategy: Strategy,
    g: &LabeledGraph,
    budget: &Budget,
    k_candidates: usize,
    offset: usize,
    rng: &mut impl Rng,
) -> Result<Vec<PerturbationPlan>, PerturbError> {
    match strategy {
        Strategy::Eigencentrality => plan_eigencentrality(g, budget, k_candidates, offset),
        Strategy::RandomWalk => plan_random_walk(g, budget, k_candidates, rng),
        Strategy::ShortestPath => plan_shortest_path(g, budget, k_candidates, rng),
    }
}
