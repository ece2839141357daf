//! Train a least-squares model across a 4x4 constellation and compare with
//! the closed-form optimum.
//!
//! ```bash
//! cargo run --release --example train_least_squares
//! ```

use dfedsat::config::LinkMode;
use dfedsat::training::{global_loss_and_gradient, least_squares_optimum, smoothness_constant};
use dfedsat::{ExperimentConfig, Simulation};

fn main() -> dfedsat::Result<()> {
    let mut config = ExperimentConfig::default();
    config.constellation.planes = 4;
    config.constellation.sats_per_plane = 4;
    config.training.n_samples = 2048;
    config.training.rounds = 150;
    config.training.batch_size = 16;
    config.consensus.links = LinkMode::Physical;

    let probe = Simulation::new(&config)?;
    let l = smoothness_constant(&probe.problem().shards);
    config.training.lr = 0.9 / (4.0 * l * config.training.local_epochs as f64);
    println!("smoothness {l:.3}, learning rate {:.4}", config.training.lr);

    let mut sim = Simulation::new(&config)?;
    let optimum = least_squares_optimum(&sim.problem().shards)?;
    let (best, _) = global_loss_and_gradient(&sim.problem().shards, &optimum)?;
    let start = sim.evaluate()?;
    println!("round {:>3}: loss {:.6}, grad^2 {:.3e}", 0, start.global_loss, start.grad_norm_sq);
    for _ in 0..config.training.rounds {
        let m = sim.step()?;
        if m.round % 25 == 0 {
            println!(
                "round {:>3}: loss {:.6}, grad^2 {:.3e}, consensus error {:.2e}, {} inter-plane packets lost",
                m.round, m.global_loss, m.grad_norm_sq, m.consensus_error, m.packet_failures
            );
        }
    }
    let last = sim.evaluate()?;
    println!("optimum loss {best:.6}, gap {:.2e}", last.global_loss - best);
    Ok(())
}
