//! Friedman test and Nemenyi critical difference on a hand-written table.

use advlcd::bench::{friedman_nemenyi, ResultTable};

const CSV: &str = "config,repetition,method,decline
a,0,eigen,-30
a,0,walk,-12
a,0,path,-20
a,1,eigen,-28
a,1,walk,-15
a,1,path,-22
b,0,eigen,-35
b,0,walk,-10
b,0,path,-18
b,1,eigen,-26
b,1,walk,-16
b,1,path,-27
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = ResultTable::from_csv(CSV)?;
    let report = friedman_nemenyi(&table, 0.05)?;
    for (m, r) in report.methods.iter().zip(&report.mean_ranks) {
        println!("{m:>6}: mean rank {r:.2}");
    }
    println!(
        "chi2 = {:.3}, p = {:.4}, CD = {:.3}",
        report.friedman_statistic, report.p_value, report.critical_difference
    );
    println!("strongest: {}", report.best_method());
    print!("{}", report.cd_diagram());
    Ok(())
}
