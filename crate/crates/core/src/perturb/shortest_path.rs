//! Shortest-path perturbations: cut the heaviest edge on an s-t shortest
//! path, or add the s-t shortcut.

use std::collections::{HashSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{EdgeFlip, LabeledGraph};

use super::{random_walk_pairs, PerturbationPlan, PlanOrigin};

fn same_distance(a: f64, b: f64) -> bool {
    a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Distances and hop counts to `target` (Dijkstra, dense O(n^2)).
fn distances_to(g: &LabeledGraph, target: usize) -> (Vec<f64>, Vec<usize>) {
    let n = g.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut hops = vec![usize::MAX; n];
    let mut done = vec![false; n];
    dist[target] = 0.0;
    hops[target] = 0;
    for _ in 0..n {
        let next = (0..n)
            .filter(|&v| !done[v] && dist[v].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(hops[a].cmp(&hops[b])).then(a.cmp(&b)));
        let Some(u) = next else { break };
        done[u] = true;
        for &v in g.neighbors(u) {
            let w = g.edge_weight(u, v).unwrap_or(0.0);
            let cand = dist[u] + w;
            if cand < dist[v] && !same_distance(cand, dist[v]) {
                dist[v] = cand;
                hops[v] = hops[u] + 1;
            } else if same_distance(cand, dist[v]) && hops[u] + 1 < hops[v] {
                hops[v] = hops[u] + 1;
            }
        }
    }
    (dist, hops)
}

/// Minimum-weight `s`-`t` path; among equal-weight paths the lexicographically
/// smallest node sequence (fewest hops first when zero-weight edges create
/// ties of different length). `None` when `t` is unreachable.
pub fn shortest_path(g: &LabeledGraph, s: usize, t: usize) -> Option<Vec<usize>> {
    let (dist, hops) = distances_to(g, t);
    if !dist[s].is_finite() {
        return None;
    }
    let mut path = vec![s];
    let mut u = s;
    while u != t {
        u = g.neighbors(u).iter().copied().find(|&v| {
            let w = g.edge_weight(u, v).unwrap_or(0.0);
            same_distance(dist[u], w + dist[v]) && hops[v] + 1 == hops[u]
        })?;
        path.push(u);
    }
    Some(path)
}

fn connected(g: &LabeledGraph, s: usize, t: usize, skip: (usize, usize)) -> bool {
    let mut seen = vec![false; g.node_count()];
    let mut queue = VecDeque::from([s]);
    seen[s] = true;
    while let Some(u) = queue.pop_front() {
        if u == t {
            return true;
        }
        for &v in g.neighbors(u) {
            if (u.min(v), u.max(v)) == skip || seen[v] {
                continue;
            }
            seen[v] = true;
            queue.push_back(v);
        }
    }
    false
}

fn component_of(g: &LabeledGraph, s: usize) -> Vec<usize> {
    let mut seen = vec![false; g.node_count()];
    let mut queue = VecDeque::from([s]);
    seen[s] = true;
    let mut out = Vec::new();
    while let Some(u) = queue.pop_front() {
        out.push(u);
        for &v in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                queue.push_back(v);
            }
        }
    }
    out.sort_unstable();
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Cut,
    Shortcut,
}

/// Next flip for the pair `(s, t)` on the running graph, trying `first`
/// before the other kind. Cuts never disconnect `s` from `t`.
fn next_flip(
    current: &LabeledGraph,
    original: &LabeledGraph,
    s: usize,
    t: usize,
    first: Kind,
    used: &HashSet<(usize, usize)>,
) -> Option<(EdgeFlip, Kind)> {
    let order = if first == Kind::Cut {
        [Kind::Cut, Kind::Shortcut]
    } else {
        [Kind::Shortcut, Kind::Cut]
    };
    for kind in order {
        match kind {
            Kind::Cut => {
                let Some(path) = shortest_path(current, s, t) else { continue };
                let mut heaviest: Option<(usize, usize, f64)> = None;
                for w in path.windows(2) {
                    let weight = current.edge_weight(w[0], w[1]).unwrap_or(0.0);
                    if heaviest.map_or(true, |(_, _, h)| weight > h) {
                        heaviest = Some((w[0], w[1], weight));
                    }
                }
                if let Some((a, b, _)) = heaviest {
                    let pair = (a.min(b), a.max(b));
                    if !used.contains(&pair) && connected(current, s, t, pair) {
                        return Some((EdgeFlip::remove(a, b), Kind::Cut));
                    }
                }
            }
            Kind::Shortcut => {
                let pair = (s.min(t), s.max(t));
                if !current.has_edge(s, t) && !used.contains(&pair) {
                    return Some((EdgeFlip::add(s, t, original.added_edge_weight()), Kind::Shortcut));
                }
            }
        }
    }
    None
}

/// Deterministic flips for a fixed `(s, t)` pair, at most `beta` of them,
/// starting with a cut.
pub fn plan_shortest_path_between(
    g: &LabeledGraph,
    s: usize,
    t: usize,
    beta: usize,
) -> Vec<EdgeFlip> {
    let mut current = g.clone();
    let mut used = HashSet::new();
    let mut flips = Vec::new();
    let mut kind = Kind::Cut;
    while flips.len() < beta {
        let Some((flip, done)) = next_flip(&current, g, s, t, kind, &used) else { break };
        current = current.apply_flips(&[flip]).expect("flip chosen against the running graph");
        used.insert(flip.pair());
        flips.push(flip);
        kind = if done == Kind::Cut { Kind::Shortcut } else { Kind::Cut };
    }
    flips
}

pub(super) fn shortest_path_plan(g: &LabeledGraph, beta: usize, seed: u64) -> PerturbationPlan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = g.clone();
    let mut used: HashSet<(usize, usize)> = HashSet::new();
    let mut flips: Vec<EdgeFlip> = Vec::new();
    let mut origin = PlanOrigin::ShortestPath;
    let mut resamples = 0;
    let max_resamples = 8 * beta + 16;

    while flips.len() < beta && resamples < max_resamples {
        let active: Vec<usize> = (0..current.node_count())
            .filter(|&v| current.degree(v) > 0)
            .collect();
        if active.is_empty() {
            break;
        }
        resamples += 1;
        let s = active[rng.gen_range(0..active.len())];
        let others: Vec<usize> = component_of(&current, s).into_iter().filter(|&v| v != s).collect();
        let t = others[rng.gen_range(0..others.len())];

        let mut kind = Kind::Cut;
        while flips.len() < beta {
            let Some((flip, done)) = next_flip(&current, g, s, t, kind, &used) else { break };
            current = current.apply_flips(&[flip]).expect("flip chosen against the running graph");
            used.insert(flip.pair());
            flips.push(flip);
            kind = if done == Kind::Cut { Kind::Shortcut } else { Kind::Cut };
        }
    }

    if flips.len() < beta {
        // No connected pair left to work on: fill up with random-walk pairs.
        origin = PlanOrigin::ShortestPathFallback;
        let exclude: Vec<(usize, usize)> = used.iter().copied().collect();
        let extra = random_walk_pairs(current.node_count(), beta - flips.len(), &exclude, &mut rng);
        for (u, v) in extra {
            let flip = if current.has_edge(u, v) {
                EdgeFlip::remove(u, v)
            } else {
                EdgeFlip::add(u, v, g.added_edge_weight())
            };
            current = current.apply_flips(&[flip]).expect("toggle is always applicable");
            flips.push(flip);
        }
    }

    PerturbationPlan {
        flips,
        origin,
        seed,
    }
}
