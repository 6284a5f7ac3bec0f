//! Eigenvector centrality by power iteration on the binary adjacency matrix.

use crate::graph::LabeledGraph;

use super::PerturbError;

/// Dominant eigenvector of the adjacency matrix, unit Euclidean norm.
#[derive(Debug, Clone, PartialEq)]
pub struct CentralityScores {
    pub scores: Vec<f64>,
    pub lambda_max: f64,
    pub iterations: usize,
}

/// Shift added to the diagonal during iteration. A bipartite graph has
/// `-lambda_max` in its spectrum, so iterating on `A` alone oscillates; on
/// `A + I` the dominant eigenvalue is strictly largest in modulus while the
/// eigenvectors stay those of `A`.
const DIAGONAL_SHIFT: f64 = 1.0;

/// Power iteration on `A + I` from the uniform vector.
///
/// Stops when successive unit iterates differ by less than `tol` in the
/// max-norm. Edge weights are ignored: `a_uv = 1` iff `u` and `v` are adjacent.
pub fn eigencentrality(
    g: &LabeledGraph,
    tol: f64,
    max_iter: usize,
) -> Result<CentralityScores, PerturbError> {
    let n = g.node_count();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut next = vec![0.0; n];
    for iter in 1..=max_iter {
        for v in 0..n {
            let s: f64 = g.neighbors(v).iter().map(|&u| x[u]).sum();
            next[v] = s + DIAGONAL_SHIFT * x[v];
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        for a in &mut next {
            *a /= norm;
        }
        let delta = x
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut x, &mut next);
        if delta < tol {
            let lambda_max = rayleigh_quotient(g, &x);
            return Ok(CentralityScores {
                scores: x,
                lambda_max,
                iterations: iter,
            });
        }
    }
    Err(PerturbError::DidNotConverge { max_iter })
}

/// `x^T A x` for a unit vector `x`.
fn rayleigh_quotient(g: &LabeledGraph, x: &[f64]) -> f64 {
    g.edges().iter().map(|e| 2.0 * x[e.u] * x[e.v]).sum()
}

/// All unordered pairs `(u, v)`, `u < v`, ranked by `x_u * x_v` descending,
/// ties broken lexicographically.
pub fn ranked_pairs(scores: &[f64]) -> Vec<(usize, usize)> {
    let n = scores.len();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
        .collect();
    pairs.sort_by(|&(a, b), &(c, d)| {
        let s1 = scores[a] * scores[b];
        let s2 = scores[c] * scores[d];
        s2.total_cmp(&s1).then((a, b).cmp(&(c, d)))
    });
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::uniform_graph;

    #[test]
    fn complete_graph_has_equal_scores() {
        let g = uniform_graph(4, "a", &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let c = eigencentrality(&g, 1e-12, 1000).unwrap();
        for s in &c.scores {
            assert!((s - 0.5).abs() < 1e-12);
        }
        assert!((c.lambda_max - 3.0).abs() < 1e-12);
    }

    #[test]
    fn star_center_dominates() {
        let g = uniform_graph(4, "a", &[(0, 1), (0, 2), (0, 3)]);
        let c = eigencentrality(&g, 1e-12, 10_000).unwrap();
        for leaf in 1..4 {
            assert!(c.scores[0] > c.scores[leaf]);
        }
        // Perron root of the star S_4 is sqrt(3).
        assert!((c.lambda_max - 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn edgeless_graph_is_uniform() {
        let g = uniform_graph(3, "a", &[]);
        let c = eigencentrality(&g, 1e-12, 10).unwrap();
        assert_eq!(c.lambda_max, 0.0);
        assert!((c.scores[0] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn reports_non_convergence() {
        let g = uniform_graph(5, "a", &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert!(matches!(
            eigencentrality(&g, 1e-15, 2),
            Err(PerturbError::DidNotConverge { max_iter: 2 })
        ));
    }

    #[test]
    fn ranking_breaks_ties_lexicographically() {
        assert_eq!(ranked_pairs(&[1.0, 1.0, 1.0]), vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(ranked_pairs(&[0.1, 0.9, 0.5]), vec![(1, 2), (0, 1), (0, 2)]);
    }
}
