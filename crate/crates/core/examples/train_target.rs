//! Train the WL-kernel target, query it, and round-trip it through JSON.

use advlcd::graph::Split;
use advlcd::synth::{generate, GeneratorConfig};
use advlcd::target::{train_target, TargetModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ds = generate(&GeneratorConfig {
        n_graphs_per_class: 60,
        ..GeneratorConfig::default()
    })?;
    let train = ds.subset(Split::Train);
    let test = ds.subset(Split::Test);

    let model = train_target(&train, 3, 1.0)?;
    println!("train accuracy {:.3}", model.accuracy(&train)?);
    println!("test accuracy  {:.3}", model.accuracy(&test)?);

    for (g, y) in test.iter().take(3) {
        let out = model.predict(g)?;
        println!("{}: true {:?}, predicted {:?} with confidence {:.3}", g.id(), y, out.label, out.confidence);
    }

    let restored = TargetModel::from_json(&model.to_json())?;
    assert_eq!(restored.accuracy(&test)?, model.accuracy(&test)?);
    println!("JSON round trip preserves predictions");
    Ok(())
}
