//! Property checks of the full consensus step against dense linear algebra.

use dfedsat::consensus::{model_consensus, ConsensusConfig};
use dfedsat::links::LinkProbabilities;
use dfedsat::mixing::{
    consensus_spectrum, contraction_against, expected_inter_matrix, inter_plane_matrix, intra_plane_matrix,
};
use dfedsat::topology::ConstellationConfig;
use dfedsat::training::{average, ModelVector};
use dfedsat::StreamKey;
use proptest::prelude::*;

fn models_strategy(n: usize, dim: usize) -> impl Strategy<Value = Vec<ModelVector>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, dim), n)
        .prop_map(|v| v.into_iter().map(ModelVector).collect())
}

fn config_and_models() -> impl Strategy<Value = (usize, usize, usize, Vec<ModelVector>)> {
    (1usize..6, 1usize..6, 0usize..4, 1usize..6)
        .prop_flat_map(|(m, k, c, dim)| (Just(m), Just(k), Just(c), models_strategy(m * k, dim)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mean_is_conserved_with_uniform_weights((m, k, c, models) in config_and_models(), seed in any::<u64>()) {
        let constellation = ConstellationConfig::new(m, k);
        let links = LinkProbabilities::reliable(m * k);
        let config = ConsensusConfig { gossip_rounds: c, packet_len: 2 };
        let (out, _) = model_consensus(&models, &vec![1.0; m * k], &constellation, config, &links, StreamKey::root(seed)).unwrap();
        let before = average(&models);
        let after = average(&out);
        for (a, b) in before.iter().zip(after.iter()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn lossy_gossip_stays_in_convex_hull((m, k, c, models) in config_and_models(), p in 0.0f64..1.0, seed in any::<u64>()) {
        let constellation = ConstellationConfig::new(m, k);
        let links = LinkProbabilities::pinned(&constellation, p).unwrap();
        let config = ConsensusConfig { gossip_rounds: c, packet_len: 1 };
        let sizes: Vec<f64> = (0..m * k).map(|i| 1.0 + (i % 3) as f64).collect();
        let (out, _) = model_consensus(&models, &sizes, &constellation, config, &links, StreamKey::root(seed)).unwrap();
        for d in 0..models[0].len() {
            let lo = models.iter().map(|w| w[d]).fold(f64::INFINITY, f64::min);
            let hi = models.iter().map(|w| w[d]).fold(f64::NEG_INFINITY, f64::max);
            for w in &out {
                prop_assert!(w[d] >= lo - 1e-9 && w[d] <= hi + 1e-9);
            }
        }
    }

    #[test]
    fn expected_operator_contracts(m in 1usize..6, k in 1usize..5, c in 0usize..3, p in 0.05f64..1.0) {
        let sizes = vec![1.0; m * k];
        let constellation = ConstellationConfig::new(m, k);
        let links = LinkProbabilities::pinned(&constellation, p).unwrap();
        let e_q_r = expected_inter_matrix(&inter_plane_matrix(&sizes, m, k).unwrap(), &links).unwrap();
        let q = e_q_r.pow(c).then_after(&intra_plane_matrix(&sizes, m, k).unwrap());
        let s = consensus_spectrum(&sizes, m, k, c, &links).unwrap();
        prop_assert!(contraction_against(&q, s.lambda_a_times_lambda_r_pow_c, 8).unwrap().holds);
        prop_assert!(contraction_against(&q, s.lambda_consensus, 8).unwrap().holds);
        prop_assert!(s.lambda_consensus <= s.lambda_a_times_lambda_r_pow_c + 1e-9);
    }
}
