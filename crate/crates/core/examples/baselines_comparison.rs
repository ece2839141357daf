//! Compare the two-phase scheme with torus gossip baselines on non-IID
//! logistic regression over unreliable inter-plane links.
//!
//! ```bash
//! cargo run --release --example baselines_comparison
//! ```

use dfedsat::config::{Algorithm, LinkMode, PartitionKind};
use dfedsat::training::TaskKind;
use dfedsat::{run_experiment, ExperimentConfig};

fn main() -> dfedsat::Result<()> {
    let mut base = ExperimentConfig::default();
    base.constellation.planes = 5;
    base.constellation.sats_per_plane = 4;
    base.training.task = TaskKind::Logistic;
    base.training.n_samples = 4000;
    base.training.noise = 1.5;
    base.training.partition = PartitionKind::Dirichlet;
    base.training.alpha = 0.3;
    base.training.rounds = 60;
    base.training.lr = 0.2;
    base.consensus.links = LinkMode::Pinned;
    base.consensus.pinned_p = 0.7;

    println!("{:>8} {:>10} {:>9} {:>12} {:>12} {:>8}", "alg", "loss", "accuracy", "intra MB", "inter MB", "retx");
    for alg in [Algorithm::Dfedsat, Algorithm::Dsgd, Algorithm::Dfedavg, Algorithm::Dfedsam] {
        let config = ExperimentConfig { algorithm: alg, ..base.clone() };
        let metrics = run_experiment(&config)?;
        let last = metrics.last().expect("at least one round");
        println!(
            "{:>8} {:>10.5} {:>9.3} {:>12.3} {:>12.3} {:>8}",
            alg.name(),
            last.global_loss,
            last.test_metric,
            last.bytes_intra as f64 / 1e6,
            last.bytes_inter as f64 / 1e6,
            last.retransmissions
        );
    }
    Ok(())
}
