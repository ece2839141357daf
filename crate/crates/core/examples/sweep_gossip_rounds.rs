//! Sweep the number of gossip rounds and the plane count, writing per-cell
//! metrics and a summary table to a temporary directory.
//!
//! ```bash
//! cargo run --release --example sweep_gossip_rounds
//! ```

use dfedsat::config::{LinkMode, PartitionKind};
use dfedsat::experiment::{sweep, write_sweep, SweepGrid};
use dfedsat::ExperimentConfig;

fn main() -> dfedsat::Result<()> {
    let mut base = ExperimentConfig::default();
    base.constellation.planes = 4;
    base.constellation.sats_per_plane = 4;
    base.training.n_samples = 1024;
    base.training.rounds = 40;
    base.training.lr = 0.02;
    base.training.partition = PartitionKind::Dirichlet;
    base.training.alpha = 0.3;
    base.consensus.links = LinkMode::Pinned;
    base.consensus.pinned_p = 0.8;

    let grid = SweepGrid::from_json(r#"{"planes": [1, 2, 4, 8], "gossip_rounds": [1, 2, 4]}"#)?;
    let outcomes = sweep(&base, &grid)?;
    println!("{:>3} {:>3} {:>3} {:>11} {:>13} {:>12} {:>10}", "M", "K", "C", "final loss", "consensus err", "lambda_a*r^C", "lambda_c");
    for o in &outcomes {
        let s = &o.summary;
        println!(
            "{:>3} {:>3} {:>3} {:>11.5} {:>13.3e} {:>12.4} {:>10.4}",
            s.planes, s.sats_per_plane, s.gossip_rounds, s.final_loss, s.final_consensus_error,
            s.lambda_a_lambda_r_pow_c, s.lambda_consensus
        );
    }
    let out = std::env::temp_dir().join("dfedsat_sweep");
    write_sweep(&outcomes, &out)?;
    println!("results written to {}", out.display());
    Ok(())
}
