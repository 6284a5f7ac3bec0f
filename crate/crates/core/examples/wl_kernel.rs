//! Weisfeiler-Lehman features and the normalized WL kernel of three graphs.

use advlcd::graph::uniform_graph;
use advlcd::wl::{wl_feature_vectors, wl_kernel_matrix, LabelDictionary};

fn main() {
    let path = uniform_graph(4, "a", &[(0, 1), (1, 2), (2, 3)]);
    let star = uniform_graph(4, "a", &[(0, 1), (0, 2), (0, 3)]);
    let cycle = uniform_graph(4, "a", &[(0, 1), (1, 2), (2, 3), (3, 0)]);
    let graphs = vec![path, star, cycle];

    let mut dict = LabelDictionary::new();
    let phis = wl_feature_vectors(&graphs, 2, &mut dict);
    println!("{} distinct labels across iterations 0..=2", dict.len());
    for (name, phi) in ["path", "star", "cycle"].iter().zip(&phis) {
        let per_level: Vec<usize> = (0..=2).map(|h| phi.distinct_labels(h)).collect();
        println!("{name:>5}: distinct labels per iteration {per_level:?}");
    }

    let k = wl_kernel_matrix(&graphs, 2, true);
    println!("normalized kernel:");
    for row in &k {
        println!("  {}", row.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>().join(" "));
    }
}
