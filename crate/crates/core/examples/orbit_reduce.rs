//! Ring all-reduce inside one orbital plane: every satellite ends with the
//! data-weighted plane average after sending 2K-2 segments.
//!
//! ```bash
//! cargo run --example orbit_reduce
//! ```

use dfedsat::consensus::orbit_reduce;
use dfedsat::training::ModelVector;

fn main() -> dfedsat::Result<()> {
    let k = 5;
    let dim = 12;
    let models: Vec<ModelVector> = (0..k)
        .map(|s| ModelVector((0..dim).map(|j| (s * dim + j) as f64).collect()))
        .collect();
    let sizes = [10.0, 20.0, 30.0, 25.0, 15.0];
    let total: f64 = sizes.iter().sum();
    let weights: Vec<f64> = sizes.iter().map(|s| s / total).collect();

    let (reduced, stats) = orbit_reduce(&models, &weights)?;
    println!("plane average: {:?}", &reduced[0][..4]);
    for (s, (msgs, params)) in stats.messages.iter().zip(&stats.params_sent).enumerate() {
        println!(
            "satellite {s}: {msgs} messages, {params} parameters ({:.2} models)",
            *params as f64 / dim as f64
        );
    }
    assert!(reduced.windows(2).all(|w| w[0] == w[1]));
    Ok(())
}
