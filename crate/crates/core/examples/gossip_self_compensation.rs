//! One gossip round across planes with lossy links. Lost packets are filled
//! from the receiver's own model, so the expected result equals the
//! expected mixing matrix applied to the models.
//!
//! ```bash
//! cargo run --example gossip_self_compensation
//! ```

use dfedsat::consensus::{gossip_round, packetize, self_compensate};
use dfedsat::links::LinkProbabilities;
use dfedsat::mixing::{expected_inter_matrix, inter_plane_matrix};
use dfedsat::topology::ConstellationConfig;
use dfedsat::training::ModelVector;
use dfedsat::StreamKey;

fn main() -> dfedsat::Result<()> {
    let own = packetize(&[0.0; 6], 2)?;
    let sent = packetize(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0], 2)?;
    let received = self_compensate(&sent, &[true, false, true], &own)?;
    println!("packet 1 lost: {:?}", received.packets);

    let (m, k) = (4, 1);
    let constellation = ConstellationConfig::new(m, k);
    let links = LinkProbabilities::pinned(&constellation, 0.6)?;
    let q_r = inter_plane_matrix(&[1.0; 4], m, k)?;
    let models: Vec<ModelVector> = [1.0, 2.0, 3.0, 4.0].iter().map(|&x| ModelVector(vec![x; 4])).collect();

    let expected = expected_inter_matrix(&q_r, &links)?.apply(&models)?;
    let trials = 20_000;
    let mut mean = vec![0.0; m];
    let mut failures = 0;
    for t in 0..trials {
        let (out, stats) = gossip_round(&models, &q_r, &links, 1, StreamKey::root(9).child(t))?;
        failures += stats.packet_failures;
        for (acc, w) in mean.iter_mut().zip(&out) {
            *acc += w[0] / trials as f64;
        }
    }
    for i in 0..m {
        println!("plane {i}: Monte-Carlo {:.4}, expected {:.4}", mean[i], expected[i][0]);
    }
    println!("packet loss rate {:.3}", failures as f64 / (trials as f64 * 2.0 * 4.0 * 4.0));
    Ok(())
}
