//! A reduced strategy sweep: three strategies, two budgets, three repetitions.

use advlcd::bench::{friedman_nemenyi, run_benchmark, BenchSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = BenchSpec::strategy_sweep();
    spec.repetitions = 3;
    spec.budgets.truncate(2);
    spec.attack.max_queries = 20;
    for d in &mut spec.datasets {
        d.generator.n_graphs_per_class = 45;
    }

    let outcome = run_benchmark(&spec, None)?;
    println!("mean decline per budget:\n{}", outcome.budget_sweep_csv());
    println!("clean accuracy per repetition: {:?}", outcome.clean_accuracy[0]);
    println!("audit: {} records, {} violations", outcome.audit.records, outcome.audit.violations.len());

    let last = &outcome.tables.last().expect("at least one budget").table;
    let report = friedman_nemenyi(last, spec.alpha)?;
    print!("{}", report.cd_diagram());
    Ok(())
}
