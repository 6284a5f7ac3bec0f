//! End-to-end: generate, train, attack, audit.

use advlcd::attack::{attack_one, attack_testset, audit_summary, AttackConfig};
use advlcd::graph::{ClassLabel, Split};
use advlcd::learners::SurrogateKind;
use advlcd::perturb::Strategy;
use advlcd::synth::{generate, GeneratorConfig};
use advlcd::target::{train_target, BlackBoxTarget, OracleMode, QueryOracle, TargetModel};

fn small_data(seed: u64) -> advlcd::graph::GraphDataset {
    generate(&GeneratorConfig {
        n_graphs_per_class: 45,
        seed,
        ..GeneratorConfig::default()
    })
    .unwrap()
}

#[test]
fn separable_generator_gives_accurate_target() {
    let ds = generate(&GeneratorConfig::default()).unwrap();
    let model = train_target(&ds.subset(Split::Train), 3, 1.0).unwrap();
    let acc = model.accuracy(&ds.subset(Split::Test)).unwrap();
    assert!(acc >= 0.9, "test accuracy {acc}");
}

#[test]
fn identical_classes_give_chance_level_target() {
    let ds = generate(&GeneratorConfig {
        delta: 0.0,
        ..GeneratorConfig::default()
    })
    .unwrap();
    let model = train_target(&ds.subset(Split::Train), 3, 1.0).unwrap();
    let acc = model.accuracy(&ds.subset(Split::Test)).unwrap();
    assert!((0.3..=0.7).contains(&acc), "test accuracy {acc}");
}

#[test]
fn saved_target_answers_identically() {
    let ds = small_data(3);
    let model = train_target(&ds.subset(Split::Train), 2, 1.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.json");
    model.save(&path).unwrap();
    let back = TargetModel::load(&path).unwrap();
    for g in ds.graphs() {
        assert_eq!(model.predict(g).unwrap(), back.predict(g).unwrap());
    }
}

#[test]
fn label_oracle_reports_full_confidence() {
    let ds = small_data(4);
    let model = train_target(&ds.subset(Split::Train), 3, 1.0).unwrap();
    let score = BlackBoxTarget::new(model.clone(), OracleMode::Score);
    let label = BlackBoxTarget::new(model, OracleMode::Label);
    for g in ds.graphs().iter().take(10) {
        let (s, l) = (score.observe(g).unwrap(), label.observe(g).unwrap());
        assert_eq!(s.label, l.label);
        assert_eq!(l.confidence, 1.0);
        assert!((0.5..=1.0).contains(&s.confidence));
    }
}

#[test]
fn every_configuration_passes_the_audit() {
    let ds = small_data(5);
    let model = train_target(&ds.subset(Split::Train), 3, 1.0).unwrap();
    let test = ds.subset(Split::Test);
    for mode in [OracleMode::Score, OracleMode::Label] {
        let oracle = BlackBoxTarget::new(model.clone(), mode);
        for strategy in Strategy::ALL {
            for surrogate in SurrogateKind::ALL {
                let cfg = AttackConfig {
                    r: 2.0 / 900.0,
                    strategy,
                    surrogate,
                    max_queries: 12,
                    k_candidates: 4,
                    rounds: 4,
                    ..AttackConfig::default()
                };
                let summary = attack_testset(&oracle, &test, &cfg).unwrap();
                let audit = audit_summary(&summary, &test);
                assert!(audit.is_clean(), "{strategy:?}/{surrogate:?}: {:?}", audit.violations);
                assert!(audit.max_queries_used <= 12);
                assert!(audit.max_flip_distance <= 2);
                assert!(summary.decline <= 0.0);
                assert!(summary.attacked_accuracy <= summary.clean_accuracy);
            }
        }
    }
}

#[test]
fn attacks_are_reproducible_and_seed_dependent() {
    let ds = small_data(6);
    let model = train_target(&ds.subset(Split::Train), 3, 1.0).unwrap();
    let oracle = BlackBoxTarget::new(model, OracleMode::Score);
    let test = ds.subset(Split::Test);
    let cfg = AttackConfig {
        r: 2.0 / 900.0,
        strategy: Strategy::RandomWalk,
        max_queries: 15,
        ..AttackConfig::default()
    };
    let a = attack_testset(&oracle, &test, &cfg).unwrap();
    let b = attack_testset(&oracle, &test, &cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let c = attack_testset(&oracle, &test, &AttackConfig { seed: 7, ..cfg }).unwrap();
    assert_ne!(a.to_json(), c.to_json());
}

#[test]
fn successful_attack_flips_the_target() {
    let ds = small_data(7);
    let model = train_target(&ds.subset(Split::Train), 3, 1.0).unwrap();
    let oracle = BlackBoxTarget::new(model, OracleMode::Score);
    let cfg = AttackConfig {
        r: 3.0 / 900.0,
        ..AttackConfig::default()
    };
    let mut successes = 0;
    for (g, y) in ds.subset(Split::Test).iter() {
        if oracle.observe(g).unwrap().label != y {
            continue;
        }
        let out = attack_one(&oracle, g, y, &cfg).unwrap();
        if out.success {
            successes += 1;
            let adv = out.best_graph(g).unwrap();
            assert!(adv.edge_symmetric_difference(g) <= out.beta);
            assert_ne!(oracle.observe(&adv).unwrap().label, y);
            // attack stops at the first success
            assert!(out.records.last().unwrap().success);
            assert_eq!(out.records.iter().filter(|r| r.success).count(), 1);
        }
        assert!(out.queries_used <= cfg.max_queries);
    }
    assert!(successes > 0);
}

#[test]
fn class_balance_of_the_test_split() {
    let test = small_data(8).subset(Split::Test);
    let loops = test.labels().iter().filter(|&&y| y == ClassLabel::Loop).count();
    assert_eq!(loops * 2, test.len());
}
