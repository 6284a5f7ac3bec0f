//! Eigencentrality of a small scene graph and the edge flips it suggests.

use advlcd::graph::{LabeledGraph, Tier};
use advlcd::perturb::{eigencentrality, plan_eigencentrality, Budget};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Two objects, each with two features, and one object-object link.
    let g = LabeledGraph::new(
        "demo",
        vec!["chair".into(), "table".into(), "leg".into(), "seat".into(), "top".into(), "leg".into()],
        vec![Tier::Object, Tier::Object, Tier::Feature, Tier::Feature, Tier::Feature, Tier::Feature],
        vec![(0, 1, 3.0), (0, 2, 1.0), (0, 3, 1.0), (1, 4, 1.0), (1, 5, 1.0)],
    )?;

    let c = eigencentrality(&g, 1e-10, 10_000)?;
    println!("lambda_max = {:.6} after {} iterations", c.lambda_max, c.iterations);
    for (v, s) in c.scores.iter().enumerate() {
        println!("node {v} ({:>5}) score {s:.4}", g.labels()[v]);
    }

    let budget = Budget::from_ratio(2.0 / 36.0, g.node_count())?;
    println!("budget: {} flips", budget.beta);
    for (i, plan) in plan_eigencentrality(&g, &budget, 3, 0)?.iter().enumerate() {
        let pairs: Vec<_> = plan.flips.iter().map(|f| f.pair()).collect();
        let g2 = plan.apply(&g)?;
        println!("plan {i}: toggle {pairs:?} -> {} edges", g2.edge_count());
    }
    Ok(())
}
