//! Independent reference implementations shared by the integration tests.
//! None of these call into the library's algorithms.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use advlcd::graph::{LabeledGraph, Tier};
use rand::seq::SliceRandom;
use rand::Rng;

/// Random graph on `n` nodes with edge probability `p` and labels drawn
/// from `vocab` symbols. Weights are in `[0.5, 3)`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64, vocab: usize) -> LabeledGraph {
    let labels = (0..n).map(|_| format!("l{}", rng.gen_range(0..vocab))).collect();
    let tiers = (0..n).map(|v| if v % 3 == 0 { Tier::Object } else { Tier::Feature }).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v, rng.gen_range(0.5..3.0)));
            }
        }
    }
    LabeledGraph::new("rand", labels, tiers, edges).unwrap()
}

/// Connected random graph: a random spanning tree plus extra edges.
pub fn random_connected_graph(rng: &mut impl Rng, n: usize, p: f64, vocab: usize) -> LabeledGraph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut pairs = std::collections::BTreeMap::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (a, b) = (order[i].min(order[j]), order[i].max(order[j]));
        pairs.insert((a, b), rng.gen_range(0.5..3.0));
    }
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                pairs.entry((u, v)).or_insert_with(|| rng.gen_range(0.5..3.0));
            }
        }
    }
    let labels = (0..n).map(|_| format!("l{}", rng.gen_range(0..vocab))).collect();
    let tiers = vec![Tier::Object; n];
    LabeledGraph::new("conn", labels, tiers, pairs.into_iter().map(|((a, b), w)| (a, b, w))).unwrap()
}

pub fn random_permutation(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Unweighted adjacency matrix.
pub fn adjacency(g: &LabeledGraph) -> Vec<Vec<f64>> {
    let n = g.node_count();
    let mut a = vec![vec![0.0; n]; n];
    for e in g.edges() {
        a[e.u][e.v] = 1.0;
        a[e.v][e.u] = 1.0;
    }
    a
}

/// Cyclic Jacobi eigensolver for a symmetric matrix. Returns eigenvalues and
/// the matching unit eigenvectors (as columns, `vecs[i][k]` = component `i`
/// of vector `k`).
pub fn jacobi_eigen(m: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i][i]).collect(), v)
}

/// Cosine between `x` and the eigenspace of the largest eigenvalue of the
/// adjacency matrix (the norm of the projection of the unit vector `x`).
/// Handles repeated top eigenvalues, where the dominant eigenvector is not unique.
pub fn dominant_eigenspace_cosine(g: &LabeledGraph, x: &[f64]) -> f64 {
    let (vals, vecs) = jacobi_eigen(&adjacency(g));
    let top = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let norm_x = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut proj2 = 0.0;
    for k in 0..vals.len() {
        if (vals[k] - top).abs() < 1e-9 {
            let d: f64 = (0..x.len()).map(|i| vecs[i][k] * x[i]).sum();
            proj2 += d * d;
        }
    }
    proj2.sqrt() / norm_x
}

/// Two-graph WL subtree kernel on string labels: each refinement label is
/// the textual concatenation of the own label and the sorted neighbor labels.
pub fn wl_kernel_oracle(a: &LabeledGraph, b: &LabeledGraph, iterations: usize) -> u64 {
    fn levels(g: &LabeledGraph, iterations: usize) -> Vec<Vec<String>> {
        let mut cur: Vec<String> = g.labels().to_vec();
        let mut out = vec![cur.clone()];
        for _ in 0..iterations {
            let next = (0..g.node_count())
                .map(|v| {
                    let mut ns: Vec<&str> = g.neighbors(v).iter().map(|&u| cur[u].as_str()).collect();
                    ns.sort();
                    format!("({}|{})", cur[v], ns.join(","))
                })
                .collect::<Vec<_>>();
            cur = next;
            out.push(cur.clone());
        }
        out
    }
    let (la, lb) = (levels(a, iterations), levels(b, iterations));
    let mut total = 0u64;
    for h in 0..=iterations {
        let mut ca: HashMap<&str, u64> = HashMap::new();
        for s in &la[h] {
            *ca.entry(s).or_default() += 1;
        }
        for s in &lb[h] {
            total += ca.get(s.as_str()).copied().unwrap_or(0);
        }
    }
    total
}

/// Projected-gradient ascent on the SVM dual
/// `max sum a - 1/2 a^T Q a, 0 <= a <= c, y^T a = 0`, `Q_ij = y_i y_j K_ij`.
/// Returns the objective at the final iterate.
pub fn dual_qp_oracle(gram: &[Vec<f64>], y: &[f64], c: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * gram[i][j]).collect()).collect();
    let lipschitz = q.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max).max(1e-12);
    let step = 1.0 / lipschitz;
    let mut a = vec![0.0; n];
    let objective = |a: &[f64]| {
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += a[i] * q[i][j] * a[j];
            }
        }
        a.iter().sum::<f64>() - 0.5 * quad
    };
    for _ in 0..iters {
        let grad: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q[i][j] * a[j]).sum::<f64>()).collect();
        let z: Vec<f64> = (0..n).map(|i| a[i] + step * grad[i]).collect();
        a = project(&z, y, c);
    }
    let obj = objective(&a);
    (a, obj)
}

/// Euclidean projection onto `{0 <= a <= c, y^T a = 0}` by bisection on the multiplier.
fn project(z: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let g = |lam: f64| -> f64 { z.iter().zip(y).map(|(zi, yi)| (zi - lam * yi).clamp(0.0, c) * yi).sum() };
    let (mut lo, mut hi) = (-1.0, 1.0);
    while g(lo) < 0.0 {
        lo *= 2.0;
    }
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    z.iter().zip(y).map(|(zi, yi)| (zi - lam * yi).clamp(0.0, c)).collect()
}

/// Minimum path weight from `s` to `t` by enumerating every simple path.
pub fn min_path_weight(g: &LabeledGraph, s: usize, t: usize) -> Option<f64> {
    fn dfs(g: &LabeledGraph, u: usize, t: usize, seen: &mut Vec<bool>, acc: f64, best: &mut Option<f64>) {
        if u == t {
            *best = Some(best.map_or(acc, |b: f64| b.min(acc)));
            return;
        }
        for &v in g.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                dfs(g, v, t, seen, acc + g.edge_weight(u, v).unwrap(), best);
                seen[v] = false;
            }
        }
    }
    let mut seen = vec![false; g.node_count()];
    seen[s] = true;
    let mut best = None;
    dfs(g, s, t, &mut seen, 0.0, &mut best);
    best
}

/// Average ranks of a block, rank 1 for the largest value, by counting.
pub fn ranks_by_counting(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            let greater = values.iter().filter(|&&w| w > v).count() as f64;
            let equal = values.iter().filter(|&&w| w == v).count() as f64;
            greater + (equal + 1.0) / 2.0
        })
        .collect()
}

/// Friedman chi-square from mean ranks.
pub fn friedman_by_hand(blocks: &[Vec<f64>]) -> f64 {
    let n = blocks.len() as f64;
    let k = blocks[0].len();
    let mut sums = vec![0.0; k];
    for b in blocks {
        for (j, r) in ranks_by_counting(b).into_iter().enumerate() {
            sums[j] += r;
        }
    }
    let kf = k as f64;
    let mean_sq: f64 = sums.iter().map(|s| (s / n) * (s / n)).sum();
    12.0 * n / (kf * (kf + 1.0)) * (mean_sq - kf * (kf + 1.0) * (kf + 1.0) / 4.0)
}

/// Label histogram of a graph, for sanity checks.
pub fn label_counts(g: &LabeledGraph) -> BTreeMap<String, usize> {
    let mut m = BTreeMap::new();
    for l in g.labels() {
        *m.entry(l.clone()).or_default() += 1;
    }
    m
}
