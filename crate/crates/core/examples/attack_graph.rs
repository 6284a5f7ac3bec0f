//! Attack a trained target through its black-box query interface.

use advlcd::attack::{attack_one, attack_testset, AttackConfig};
use advlcd::graph::Split;
use advlcd::synth::{generate, GeneratorConfig};
use advlcd::target::{train_target, BlackBoxTarget, OracleMode, QueryOracle};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate(&GeneratorConfig {
        n_graphs_per_class: 60,
        ..GeneratorConfig::default()
    })?;
    let model = train_target(&ds.subset(Split::Train), 3, 1.0)?;
    let oracle = BlackBoxTarget::new(model, OracleMode::Score);
    let test = ds.subset(Split::Test);

    let cfg = AttackConfig {
        r: 2.0 / 900.0,
        max_queries: 30,
        ..AttackConfig::default()
    };

    // One graph in detail.
    let (g, y) = test
        .iter()
        .find(|(g, y)| oracle.observe(g).map(|o| o.label == *y).unwrap_or(false))
        .expect("some test graph is classified correctly");
    let outcome = attack_one(&oracle, g, y, &cfg)?;
    println!(
        "{}: beta {}, {} queries, best loss {:.3}, success {}",
        g.id(),
        outcome.beta,
        outcome.queries_used,
        outcome.best_loss,
        outcome.success
    );
    let flips: Vec<_> = outcome.best_flips.iter().map(|f| f.pair()).collect();
    println!("best flips {flips:?}");

    // The whole test split.
    let summary = attack_testset(&oracle, &test, &cfg)?;
    println!(
        "accuracy {:.3} -> {:.3} (decline {:.1} points) using {} queries",
        summary.clean_accuracy, summary.attacked_accuracy, summary.decline, summary.total_queries
    );
    Ok(())
}
