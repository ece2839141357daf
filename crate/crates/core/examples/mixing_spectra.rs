//! Spectral quantities of the two-phase consensus operator as the plane
//! count and number of gossip rounds change.
//!
//! ```bash
//! cargo run --example mixing_spectra
//! ```

use dfedsat::links::LinkProbabilities;
use dfedsat::mixing::{consensus_spectrum, contraction_bound_check, torus_mixing_matrix};
use dfedsat::topology::ConstellationConfig;

fn main() -> dfedsat::Result<()> {
    println!("16 satellites, uniform data, inter-plane links with p = 0.8");
    println!("{:>3} {:>3} {:>3} {:>9} {:>9} {:>14} {:>17}", "M", "K", "C", "lambda_a", "lambda_r", "lambda_a*r^C", "lambda_consensus");
    for m in [1, 2, 4, 8, 16] {
        let k = 16 / m;
        let links = LinkProbabilities::pinned(&ConstellationConfig::new(m, k), 0.8)?;
        for c in [1, 2, 4] {
            let s = consensus_spectrum(&[1.0; 16], m, k, c, &links)?;
            println!(
                "{m:>3} {k:>3} {c:>3} {:>9.4} {:>9.4} {:>14.4} {:>17.4}",
                s.lambda_a, s.lambda_r, s.lambda_a_times_lambda_r_pow_c, s.lambda_consensus
            );
        }
    }

    let q = torus_mixing_matrix(&[1.0; 16], 4, 4)?;
    let report = contraction_bound_check(&q, 10)?;
    println!("\ntorus mixing matrix: lambda = {:.4}", report.lambda);
    for (t, norm, bound) in report.steps.iter().step_by(3) {
        println!("  t={t:>2}  ||Q^t - J|| = {norm:.3e} <= {bound:.3e}");
    }
    Ok(())
}
