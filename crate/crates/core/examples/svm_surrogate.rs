//! Fit each surrogate family on a toy XOR problem and compare probabilities.

use advlcd::learners::{SparseVector, SurrogateKind, SurrogateParams, TrainedSurrogate};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (a, b, label) in [(0.0, 0.0, -1.0), (1.0, 1.0, -1.0), (0.0, 1.0, 1.0), (1.0, 0.0, 1.0)] {
        for j in 0..5 {
            let jitter = 0.02 * j as f64;
            x.push(SparseVector::from_dense(&[a + jitter, b - jitter]));
            y.push(label);
        }
    }
    let probe = [SparseVector::from_dense(&[0.0, 1.0]), SparseVector::from_dense(&[1.0, 1.0])];

    for kind in SurrogateKind::ALL {
        let model = TrainedSurrogate::fit(kind, &x, &y, &SurrogateParams::default())?;
        let p: Vec<String> = probe
            .iter()
            .map(|v| model.probability(v).map(|p| format!("{p:.3}")))
            .collect::<Result<_, _>>()?;
        println!("{:>12}: P(+1 | (0,1)) = {}, P(+1 | (1,1)) = {}", kind.name(), p[0], p[1]);
    }
    Ok(())
}
