//! Weisfeiler-Lehman relabeling, subtree histogram features and the WL kernel.
//!
//! Each iteration replaces a node's label by the compressed id of
//! `(own label, sorted multiset of neighbor labels)`. The feature vector of a
//! graph is the concatenation of the label histograms of iterations `0..=H`,
//! keyed by `(h, label id)`; ids come from a [`LabelDictionary`] shared by all
//! graphs of a run so that histograms of different graphs line up.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::graph::LabeledGraph;
use crate::learners::SparseVector;

/// Conventional number of refinement iterations.
pub const DEFAULT_WL_ITERATIONS: usize = 3;

/// What a dictionary id stands for.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKey {
    /// An original node label (iteration 0).
    Raw(String),
    /// A compressed label: own id followed by the sorted neighbor ids.
    Refined { own: u32, neighbors: Vec<u32> },
}

/// Resolves label keys to ids.
pub trait LabelLookup {
    fn resolve(&mut self, key: LabelKey) -> u32;
}

/// Append-only bijection between label keys and dense ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelDictionary {
    ids: HashMap<LabelKey, u32>,
    keys: Vec<LabelKey>,
}

impl LabelDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn get(&self, key: &LabelKey) -> Option<u32> {
        self.ids.get(key).copied()
    }

    pub fn key(&self, id: u32) -> Option<&LabelKey> {
        self.keys.get(id as usize)
    }

    pub fn intern(&mut self, key: LabelKey) -> u32 {
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.keys.push(key.clone());
        self.ids.insert(key, id);
        id
    }

    /// Keys in id order.
    pub fn keys(&self) -> &[LabelKey] {
        &self.keys
    }

    pub fn from_keys(keys: Vec<LabelKey>) -> Option<Self> {
        let mut dict = Self::new();
        for key in keys {
            let before = dict.len();
            dict.intern(key);
            if dict.len() == before {
                return None;
            }
        }
        Some(dict)
    }

    /// A read-only view that assigns fresh ids above `len()` to unseen keys
    /// without touching this dictionary.
    pub fn overlay(&self) -> DictionaryOverlay<'_> {
        DictionaryOverlay {
            base: self,
            extra: HashMap::new(),
        }
    }
}

impl LabelLookup for LabelDictionary {
    fn resolve(&mut self, key: LabelKey) -> u32 {
        self.intern(key)
    }
}

/// Copy-on-write extension of a frozen dictionary.
#[derive(Debug)]
pub struct DictionaryOverlay<'a> {
    base: &'a LabelDictionary,
    extra: HashMap<LabelKey, u32>,
}

impl LabelLookup for DictionaryOverlay<'_> {
    fn resolve(&mut self, key: LabelKey) -> u32 {
        if let Some(id) = self.base.get(&key) {
            return id;
        }
        let next = (self.base.len() + self.extra.len()) as u32;
        *self.extra.entry(key).or_insert(next)
    }
}

/// Sparse histogram over `(iteration, label id)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WlFeatureVector {
    pub iterations: usize,
    pub counts: BTreeMap<(u32, u32), u32>,
}

impl WlFeatureVector {
    /// Inner product of two histograms: the WL subtree kernel value.
    pub fn dot(&self, other: &Self) -> u64 {
        let (small, large) = if self.counts.len() <= other.counts.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .counts
            .iter()
            .filter_map(|(k, &a)| large.counts.get(k).map(|&b| a as u64 * b as u64))
            .sum()
    }

    /// Total count at iteration `h`; equals the node count.
    pub fn iteration_sum(&self, h: usize) -> u64 {
        self.counts
            .range((h as u32, 0)..(h as u32 + 1, 0))
            .map(|(_, &c)| c as u64)
            .sum()
    }

    /// Number of distinct labels at iteration `h`.
    pub fn distinct_labels(&self, h: usize) -> usize {
        self.counts.range((h as u32, 0)..(h as u32 + 1, 0)).count()
    }

    /// Flattens to a vector indexed by label id. Ids are unique across
    /// iterations, so the iteration index can be dropped. Ids `>= dim` are
    /// discarded.
    pub fn to_sparse(&self, dim: usize) -> SparseVector {
        let mut entries: Vec<(u32, f64)> = self
            .counts
            .iter()
            .filter(|((_, id), _)| (*id as usize) < dim)
            .map(|(&(_, id), &c)| (id, c as f64))
            .collect();
        entries.sort_unstable_by_key(|&(id, _)| id);
        SparseVector::new(dim, entries).expect("label ids are unique and in range")
    }
}

/// Iteration-0 labels.
pub fn initial_labels(g: &LabeledGraph, dict: &mut impl LabelLookup) -> Vec<u32> {
    g.labels()
        .iter()
        .map(|l| dict.resolve(LabelKey::Raw(l.clone())))
        .collect()
}

/// One refinement step: node `v` gets the id of `(labels[v], sorted neighbor labels)`.
pub fn wl_relabel_step(g: &LabeledGraph, labels: &[u32], dict: &mut impl LabelLookup) -> Vec<u32> {
    (0..g.node_count())
        .map(|v| {
            let mut neighbors: Vec<u32> = g.neighbors(v).iter().map(|&u| labels[u]).collect();
            neighbors.sort_unstable();
            dict.resolve(LabelKey::Refined {
                own: labels[v],
                neighbors,
            })
        })
        .collect()
}

/// Node labels for iterations `0..=iterations`.
pub fn wl_labels(g: &LabeledGraph, iterations: usize, dict: &mut impl LabelLookup) -> Vec<Vec<u32>> {
    let mut out = Vec::with_capacity(iterations + 1);
    out.push(initial_labels(g, dict));
    for h in 0..iterations {
        let next = wl_relabel_step(g, &out[h], dict);
        out.push(next);
    }
    out
}

pub fn wl_feature_vector(
    g: &LabeledGraph,
    iterations: usize,
    dict: &mut impl LabelLookup,
) -> WlFeatureVector {
    histogram(&wl_labels(g, iterations, dict), iterations)
}

fn histogram(levels: &[Vec<u32>], iterations: usize) -> WlFeatureVector {
    let mut counts = BTreeMap::new();
    for (h, labels) in levels.iter().enumerate() {
        for &id in labels {
            *counts.entry((h as u32, id)).or_insert(0) += 1;
        }
    }
    WlFeatureVector { iterations, counts }
}

/// Feature vectors of `graphs` in order, sharing `dict`.
pub fn wl_feature_vectors(
    graphs: &[LabeledGraph],
    iterations: usize,
    dict: &mut LabelDictionary,
) -> Vec<WlFeatureVector> {
    graphs
        .iter()
        .map(|g| wl_feature_vector(g, iterations, dict))
        .collect()
}

/// Same output as [`wl_feature_vectors`], computed in two phases: every graph
/// is refined in parallel against a private dictionary, then the private ids
/// are merged into `dict` in graph order so global ids match the sequential
/// assignment exactly.
pub fn wl_feature_vectors_par(
    graphs: &[LabeledGraph],
    iterations: usize,
    dict: &mut LabelDictionary,
) -> Vec<WlFeatureVector> {
    let local: Vec<(LabelDictionary, Vec<Vec<u32>>)> = graphs
        .par_iter()
        .map(|g| {
            let mut d = LabelDictionary::new();
            let levels = wl_labels(g, iterations, &mut d);
            (d, levels)
        })
        .collect();

    local
        .into_iter()
        .map(|(local_dict, levels)| {
            // Local ids are assigned level by level in node order, which is
            // exactly the order in which the sequential pass meets them.
            let mut to_global = vec![u32::MAX; local_dict.len()];
            for (local_id, key) in local_dict.keys().iter().enumerate() {
                let global_key = match key {
                    LabelKey::Raw(s) => LabelKey::Raw(s.clone()),
                    LabelKey::Refined { own, neighbors } => {
                        let mut ns: Vec<u32> = neighbors.iter().map(|&n| to_global[n as usize]).collect();
                        ns.sort_unstable();
                        LabelKey::Refined {
                            own: to_global[*own as usize],
                            neighbors: ns,
                        }
                    }
                };
                to_global[local_id] = dict.intern(global_key);
            }
            let mapped: Vec<Vec<u32>> = levels
                .iter()
                .map(|l| l.iter().map(|&id| to_global[id as usize]).collect())
                .collect();
            histogram(&mapped, iterations)
        })
        .collect()
}

/// Gram matrix `K[i][j] = <phi(g_i), phi(g_j)>` over a dictionary built from
/// all inputs; optionally cosine-normalized.
pub fn wl_kernel_matrix(graphs: &[LabeledGraph], iterations: usize, normalize: bool) -> Vec<Vec<f64>> {
    let mut dict = LabelDictionary::new();
    let phis = wl_feature_vectors(graphs, iterations, &mut dict);
    let n = phis.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = phis[i].dot(&phis[j]) as f64;
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    if normalize {
        let diag: Vec<f64> = (0..n).map(|i| k[i][i]).collect();
        for i in 0..n {
            for j in 0..n {
                k[i][j] = if i == j {
                    1.0
                } else {
                    k[i][j] / (diag[i] * diag[j]).sqrt()
                };
            }
        }
    }
    k
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{uniform_graph, Tier};

    #[test]
    fn isolated_equal_nodes_stay_equal() {
        let g = uniform_graph(2, "a", &[]);
        let mut d = LabelDictionary::new();
        let l = wl_labels(&g, 2, &mut d);
        assert_eq!(l[1][0], l[1][1]);
        assert_eq!(l[2][0], l[2][1]);
    }

    #[test]
    fn path_ends_differ_from_middle() {
        let g = uniform_graph(3, "a", &[(0, 1), (1, 2)]);
        let mut d = LabelDictionary::new();
        let l = wl_labels(&g, 1, &mut d);
        assert_eq!(l[1][0], l[1][2]);
        assert_ne!(l[1][0], l[1][1]);
    }

    #[test]
    fn k2_at_iteration_zero() {
        let g = uniform_graph(2, "a", &[(0, 1)]);
        let mut d = LabelDictionary::new();
        let phi = wl_feature_vector(&g, 0, &mut d);
        let a = d.get(&LabelKey::Raw("a".into())).unwrap();
        assert_eq!(phi.counts, BTreeMap::from([((0, a), 2)]));
    }

    #[test]
    fn iteration_sums_equal_node_count() {
        let g = uniform_graph(5, "a", &[(0, 1), (1, 2), (3, 4)]);
        let mut d = LabelDictionary::new();
        let phi = wl_feature_vector(&g, 3, &mut d);
        for h in 0..=3 {
            assert_eq!(phi.iteration_sum(h), 5);
        }
    }

    #[test]
    fn identical_graphs_have_equal_kernel_entries() {
        let g = uniform_graph(4, "a", &[(0, 1), (1, 2), (2, 3)]);
        let k = wl_kernel_matrix(&[g.clone(), g], 3, false);
        assert_eq!(k[0][1], k[0][0]);
        let kn = wl_kernel_matrix(&[uniform_graph(3, "a", &[(0, 1)]), uniform_graph(2, "b", &[])], 2, true);
        assert_eq!(kn[0][0], 1.0);
        assert_eq!(kn[1][1], 1.0);
        assert_eq!(kn[0][1], 0.0);
    }

    #[test]
    fn overlay_does_not_disturb_frozen_ids() {
        let mut d = LabelDictionary::new();
        let g = uniform_graph(3, "a", &[(0, 1)]);
        let before = wl_feature_vector(&g, 2, &mut d);
        let frozen = d.clone();
        let other = LabeledGraph::new("h", vec!["z".into(), "a".into()], vec![Tier::Object; 2], [(0, 1, 1.0)]).unwrap();
        let mut view = frozen.overlay();
        let phi = wl_feature_vector(&other, 2, &mut view);
        assert!(phi.counts.keys().any(|&(_, id)| id as usize >= frozen.len()));
        assert_eq!(frozen, d);
        // Known graphs still map onto the frozen ids.
        let mut view = frozen.overlay();
        assert_eq!(wl_feature_vector(&g, 2, &mut view), before);
    }

    #[test]
    fn to_sparse_drops_unknown_ids() {
        let mut d = LabelDictionary::new();
        let phi = wl_feature_vector(&uniform_graph(2, "a", &[(0, 1)]), 1, &mut d);
        let v = phi.to_sparse(1);
        assert_eq!(v.entries(), &[(0, 2.0)]);
    }

    #[test]
    fn dictionary_round_trips_through_keys() {
        let mut d = LabelDictionary::new();
        wl_feature_vector(&uniform_graph(4, "a", &[(0, 1), (2, 3), (1, 2)]), 3, &mut d);
        let copy = LabelDictionary::from_keys(d.keys().to_vec()).unwrap();
        assert_eq!(copy, d);
        assert!(LabelDictionary::from_keys(vec![LabelKey::Raw("x".into()), LabelKey::Raw("x".into())]).is_none());
    }
}
