mod common;

use advlcd::bench::block_ranks;
use advlcd::graph::{EdgeFlip, GraphDataset, LabeledGraph};
use advlcd::learners::{gram_matrix, solve_dual, KernelSpec, SmoOptions, SparseVector};
use advlcd::perturb::{eigencentrality, plan, shortest_path, Budget, Strategy as PerturbStrategy};
use advlcd::wl::{wl_feature_vector, wl_feature_vectors, wl_feature_vectors_par, LabelDictionary};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn graph_strategy(max_n: usize) -> impl Strategy<Value = LabeledGraph> {
    (1..=max_n, 0.0..1.0f64, 1..4usize, any::<u64>()).prop_map(|(n, p, vocab, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_graph(&mut rng, n, p, vocab)
    })
}

fn connected_strategy(max_n: usize) -> impl Strategy<Value = LabeledGraph> {
    (2..=max_n, 0.0..0.6f64, any::<u64>()).prop_map(|(n, p, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_connected_graph(&mut rng, n, p, 2)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn budget_matches_closed_form(r in 1e-5..0.2f64, n in 2..40usize) {
        let expected = ((r * (n * n) as f64 - 1e-9).ceil() as usize).max(1);
        match Budget::from_ratio(r, n) {
            Ok(b) => prop_assert_eq!(b.beta, expected),
            Err(_) => prop_assert!(expected > n * (n - 1) / 2),
        }
    }

    #[test]
    fn toggling_twice_restores_the_graph(g in graph_strategy(9), seed in any::<u64>()) {
        prop_assume!(g.node_count() >= 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.node_count();
        let a = rand::Rng::gen_range(&mut rng, 0..n);
        let b = (a + 1 + rand::Rng::gen_range(&mut rng, 0..n - 1)) % n;
        let once = g.apply_flips(&[EdgeFlip::toggle(&g, a, b)]).unwrap();
        prop_assert_eq!(once.edge_symmetric_difference(&g), 1);
        let twice = once.apply_flips(&[EdgeFlip::toggle(&once, a, b)]).unwrap();
        prop_assert_eq!(twice.edge_symmetric_difference(&g), 0);
        prop_assert_eq!(
            twice.edges().iter().map(|e| (e.u, e.v)).collect::<Vec<_>>(),
            g.edges().iter().map(|e| (e.u, e.v)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn plans_stay_within_budget(g in graph_strategy(10), beta in 1..5usize, k in 1..6usize, seed in any::<u64>()) {
        prop_assume!(g.node_count() >= 3);
        let budget = Budget::fixed(beta, g.node_count());
        prop_assume!(budget.is_ok());
        let budget = budget.unwrap();
        for s in PerturbStrategy::ALL {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let plans = plan(s, &g, &budget, k, 0, &mut rng).unwrap();
            prop_assert!(plans.len() <= k);
            for p in &plans {
                prop_assert!(!p.is_empty() && p.len() <= budget.beta);
                let mut pairs: Vec<_> = p.flips.iter().map(|f| f.pair()).collect();
                pairs.sort();
                pairs.dedup();
                prop_assert_eq!(pairs.len(), p.len());
                let g2 = p.apply(&g).unwrap();
                prop_assert_eq!(g2.edge_symmetric_difference(&g), p.len());
            }
        }
    }

    #[test]
    fn wl_features_are_permutation_invariant(g in graph_strategy(10), seed in any::<u64>(), h in 0..4usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let perm = random_permutation(&mut rng, g.node_count());
        let pg = g.permuted(&perm).unwrap();
        let mut dict = LabelDictionary::new();
        let a = wl_feature_vector(&g, h, &mut dict);
        let b = wl_feature_vector(&pg, h, &mut dict);
        prop_assert_eq!(&a, &b);
        for level in 0..=h {
            prop_assert_eq!(a.iteration_sum(level), g.node_count() as u64);
        }
    }

    #[test]
    fn wl_dot_matches_string_oracle(a in graph_strategy(8), b in graph_strategy(8), h in 0..4usize) {
        let mut dict = LabelDictionary::new();
        let phis = wl_feature_vectors(&[a.clone(), b.clone()], h, &mut dict);
        prop_assert_eq!(phis[0].dot(&phis[1]), wl_kernel_oracle(&a, &b, h));
        prop_assert_eq!(phis[0].dot(&phis[0]), wl_kernel_oracle(&a, &a, h));
    }

    #[test]
    fn parallel_wl_matches_sequential(gs in prop::collection::vec(graph_strategy(8), 1..6), h in 0..4usize) {
        let mut d1 = LabelDictionary::new();
        let mut d2 = LabelDictionary::new();
        let seq = wl_feature_vectors(&gs, h, &mut d1);
        let par = wl_feature_vectors_par(&gs, h, &mut d2);
        prop_assert_eq!(seq, par);
        prop_assert_eq!(d1.keys(), d2.keys());
    }

    #[test]
    fn centrality_matches_dense_eigensolver(g in connected_strategy(10)) {
        let c = eigencentrality(&g, 1e-10, 100_000).unwrap();
        prop_assert!(dominant_eigenspace_cosine(&g, &c.scores) >= 1.0 - 1e-8);
        prop_assert!(c.scores.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn shortest_path_is_minimal(g in connected_strategy(7), s in 0..7usize, t in 0..7usize) {
        let n = g.node_count();
        let (s, t) = (s % n, t % n);
        prop_assume!(s != t);
        let path = shortest_path(&g, s, t).unwrap();
        prop_assert_eq!(path[0], s);
        prop_assert_eq!(*path.last().unwrap(), t);
        let w: f64 = path.windows(2).map(|p| g.edge_weight(p[0], p[1]).unwrap()).sum();
        let best = min_path_weight(&g, s, t).unwrap();
        prop_assert!((w - best).abs() <= 1e-9 * best.max(1.0));
    }

    #[test]
    fn block_ranks_match_counting(values in prop::collection::vec(-5i32..5, 2..9)) {
        let v: Vec<f64> = values.iter().map(|&x| x as f64).collect();
        let r = block_ranks(&v);
        prop_assert_eq!(&r, &ranks_by_counting(&v));
        let k = v.len() as f64;
        prop_assert!((r.iter().sum::<f64>() - k * (k + 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn sparse_dot_matches_dense(a in prop::collection::vec(-3.0..3.0f64, 1..12), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b: Vec<f64> = a.iter().map(|_| if rand::Rng::gen_bool(&mut rng, 0.5) { 0.0 } else { rand::Rng::gen_range(&mut rng, -3.0..3.0) }).collect();
        let (sa, sb) = (SparseVector::from_dense(&a), SparseVector::from_dense(&b));
        let dense: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        prop_assert!((sa.dot(&sb).unwrap() - dense).abs() < 1e-9);
        let d2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        prop_assert!((sa.squared_distance(&sb).unwrap() - d2).abs() < 1e-9);
    }

    #[test]
    fn smo_matches_projected_gradient(seed in any::<u64>(), n in 4..14usize, c in 0.1..5.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<SparseVector> = (0..n)
            .map(|_| SparseVector::from_dense(&[rand::Rng::gen_range(&mut rng, -2.0..2.0), rand::Rng::gen_range(&mut rng, -2.0..2.0)]))
            .collect();
        let mut y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        y.swap(0, n - 1);
        let gram = gram_matrix(&x, &KernelSpec::Rbf { gamma: 0.5 }).unwrap();
        let opts = SmoOptions { c, tol: 1e-6, max_passes: 100_000 };
        let sol = solve_dual(&gram, &y, &opts, |_| {}).unwrap();
        let rows: Vec<Vec<f64>> = gram.chunks(n).map(|r| r.to_vec()).collect();
        let (_, oracle) = dual_qp_oracle(&rows, &y, c, 20_000);
        prop_assert!(sol.alphas.iter().all(|&a| (0.0..=c).contains(&a)));
        prop_assert!(sol.alphas.iter().zip(&y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9);
        prop_assert!((sol.objective - oracle).abs() <= 1e-4 * oracle.abs().max(1.0));
    }

    #[test]
    fn dataset_jsonl_round_trip(gs in prop::collection::vec(graph_strategy(6), 1..5), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graphs: Vec<LabeledGraph> = gs.iter().enumerate().map(|(i, g)| g.with_id(format!("g{i}"))).collect();
        let labels = graphs
            .iter()
            .map(|_| if rand::Rng::gen_bool(&mut rng, 0.5) { advlcd::graph::ClassLabel::Loop } else { advlcd::graph::ClassLabel::NonLoop })
            .collect();
        let ds = GraphDataset::new(graphs, labels, vec![None; gs.len()]).unwrap();
        let back = GraphDataset::from_jsonl(&ds.to_jsonl()).unwrap();
        prop_assert_eq!(back.to_jsonl(), ds.to_jsonl());
        for (a, b) in ds.graphs().iter().zip(back.graphs()) {
            prop_assert_eq!(a.digest(), b.digest());
        }
    }
}
