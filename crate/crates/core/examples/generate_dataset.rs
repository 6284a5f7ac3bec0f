//! Generate a small synthetic dataset and write it as JSON lines.

use advlcd::graph::{write_dataset, ClassLabel, Split};
use advlcd::synth::{generate, GeneratorConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = GeneratorConfig {
        n_graphs_per_class: 20,
        seed: 7,
        ..GeneratorConfig::default()
    };
    let ds = generate(&cfg)?;
    let loops = ds.labels().iter().filter(|&&y| y == ClassLabel::Loop).count();
    println!(
        "{} graphs ({loops} loop), {} train / {} test",
        ds.len(),
        ds.subset(Split::Train).len(),
        ds.subset(Split::Test).len()
    );
    for (g, y) in ds.iter().take(4) {
        println!("{} {:?}: {} nodes, {} edges", g.id(), y, g.node_count(), g.edge_count());
    }

    let path = std::env::temp_dir().join("advlcd_example_dataset.jsonl");
    write_dataset(&ds, &path)?;
    println!("wrote {}", path.display());
    Ok(())
}
