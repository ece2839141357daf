//! Two-phase model consensus: orbit reduce inside each plane, then `C`
//! rounds of gossip between adjacent planes with packet-level
//! self-compensation.
//!
//! Orbit reduce is a ring all-reduce. Each satellite pre-scales its model by
//! its data weight, so the scatter-reduce phase accumulates the weighted sum
//! directly and the all-gather phase distributes it. Every satellite sends
//! `K − 1` segments in each phase.
//!
//! Gossip messages cross unreliable inter-plane links. Lost packets are
//! replaced by the receiver's own packets at the same position; nothing is
//! retransmitted.

use crate::error::{Error, Result};
use crate::linkmodel::sample_packet_mask;
use crate::links::LinkProbabilities;
use crate::mixing::{inter_plane_matrix, MixingMatrix};
use crate::seeding::StreamKey;
use crate::topology::{ring_neighbors, ConstellationConfig};
use crate::training::ModelVector;

pub const BYTES_PER_PARAM: u64 = 8;

/// A model cut into `d` equal packets, the last one zero-padded.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketizedModel {
    pub packets: Vec<Vec<f64>>,
    pub packet_len: usize,
    pub original_len: usize,
}

impl PacketizedModel {
    pub fn num_packets(&self) -> usize {
        self.packets.len()
    }
}

pub fn packet_count(dim: usize, packet_len: usize) -> usize {
    dim.div_ceil(packet_len).max(1)
}

pub fn packetize(model: &[f64], packet_len: usize) -> Result<PacketizedModel> {
    if packet_len < 1 {
        return Err(Error::InvalidArgument("packet length must be at least 1".into()));
    }
    let d = packet_count(model.len(), packet_len);
    let packets = (0..d)
        .map(|j| {
            let mut p = vec![0.0; packet_len];
            let start = j * packet_len;
            let end = (start + packet_len).min(model.len());
            if start < end {
                p[..end - start].copy_from_slice(&model[start..end]);
            }
            p
        })
        .collect();
    Ok(PacketizedModel {
        packets,
        packet_len,
        original_len: model.len(),
    })
}

pub fn depacketize(packed: &PacketizedModel) -> ModelVector {
    let mut out: Vec<f64> = packed.packets.iter().flatten().copied().collect();
    out.truncate(packed.original_len);
    ModelVector(out)
}

/// Keep received packets where the mask is set and fall back to the
/// receiver's own packets elsewhere.
pub fn self_compensate(
    received: &PacketizedModel,
    mask: &[bool],
    own: &PacketizedModel,
) -> Result<PacketizedModel> {
    if received.num_packets() != mask.len()
        || own.num_packets() != mask.len()
        || received.packet_len != own.packet_len
    {
        return Err(Error::Dimension(format!(
            "received {} packets, own {} packets, mask {} entries",
            received.num_packets(),
            own.num_packets(),
            mask.len()
        )));
    }
    let packets = mask
        .iter()
        .zip(received.packets.iter().zip(&own.packets))
        .map(|(&ok, (r, o))| if ok { r.clone() } else { o.clone() })
        .collect();
    Ok(PacketizedModel {
        packets,
        packet_len: own.packet_len,
        original_len: own.original_len,
    })
}

/// Transmission counts of one orbit reduce, per satellite of the plane.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OrbitReduceStats {
    pub messages: Vec<usize>,
    pub params_sent: Vec<usize>,
}

/// Segment `s` of `K` over a vector of length `dim`; the first `dim % K`
/// segments are one element longer.
fn segment(dim: usize, parts: usize, s: usize) -> std::ops::Range<usize> {
    let base = dim / parts;
    let extra = dim % parts;
    let start = s * base + s.min(extra);
    let len = base + usize::from(s < extra);
    start..start + len
}

/// Ring all-reduce of one plane. Returns `K` copies of `Σ weights[k]·models[k]`.
pub fn orbit_reduce(models: &[ModelVector], weights: &[f64]) -> Result<(Vec<ModelVector>, OrbitReduceStats)> {
    let k = models.len();
    if k == 0 || weights.len() != k {
        return Err(Error::Dimension(format!(
            "{} models and {} weights",
            k,
            weights.len()
        )));
    }
    let dim = models[0].len();
    if models.iter().any(|m| m.len() != dim) {
        return Err(Error::Dimension("models in a plane differ in length".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 || weights.iter().any(|&w| w < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "orbit weights must be non-negative and sum to 1 (sum {total})"
        )));
    }
    let mut buffers: Vec<Vec<f64>> = models
        .iter()
        .zip(weights)
        .map(|(m, &w)| m.iter().map(|x| w * x).collect())
        .collect();
    let mut stats = OrbitReduceStats {
        messages: vec![0; k],
        params_sent: vec![0; k],
    };

    // scatter-reduce: at step s satellite i forwards segment (i - s) to i + 1
    for step in 0..k.saturating_sub(1) {
        let outgoing: Vec<(usize, usize, Vec<f64>)> = (0..k)
            .map(|i| {
                let seg = (i + k - step % k) % k;
                let r = segment(dim, k, seg);
                (i, seg, buffers[i][r].to_vec())
            })
            .collect();
        for (i, seg, payload) in outgoing {
            let to = (i + 1) % k;
            let r = segment(dim, k, seg);
            stats.messages[i] += 1;
            stats.params_sent[i] += payload.len();
            buffers[to][r].iter_mut().zip(&payload).for_each(|(b, p)| *b += p);
        }
    }
    // all-gather: satellite i now owns segment (i + 1); pass completed
    // segments around the ring
    for step in 0..k.saturating_sub(1) {
        let outgoing: Vec<(usize, usize, Vec<f64>)> = (0..k)
            .map(|i| {
                let seg = (i + 1 + k - step % k) % k;
                let r = segment(dim, k, seg);
                (i, seg, buffers[i][r].to_vec())
            })
            .collect();
        for (i, seg, payload) in outgoing {
            let to = (i + 1) % k;
            let r = segment(dim, k, seg);
            stats.messages[i] += 1;
            stats.params_sent[i] += payload.len();
            buffers[to][r].copy_from_slice(&payload);
        }
    }
    Ok((buffers.into_iter().map(ModelVector).collect(), stats))
}

/// Traffic and loss counters for one gossip round or one full consensus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConsensusStats {
    pub intra_messages: u64,
    pub intra_params: u64,
    pub inter_messages: u64,
    pub inter_packets: u64,
    pub packet_failures: u64,
    /// Always zero: lost packets are compensated, never resent.
    pub retransmissions: u64,
}

impl ConsensusStats {
    pub fn bytes_intra(&self) -> u64 {
        self.intra_params * BYTES_PER_PARAM
    }

    pub fn bytes_inter(&self, packet_len: usize) -> u64 {
        self.inter_packets * packet_len as u64 * BYTES_PER_PARAM
    }

    pub fn accumulate(&mut self, other: &ConsensusStats) {
        self.intra_messages += other.intra_messages;
        self.intra_params += other.intra_params;
        self.inter_messages += other.inter_messages;
        self.inter_packets += other.inter_packets;
        self.packet_failures += other.packet_failures;
        self.retransmissions += other.retransmissions;
    }
}

/// Distinct inter-plane neighbours of satellite `i`.
fn inter_neighbors(i: usize, m: usize, k: usize) -> impl Iterator<Item = usize> {
    let (plane, slot) = (i / k, i % k);
    let (left, right) = ring_neighbors(plane, m);
    left.into_iter().chain(right).map(move |p| p * k + slot)
}

/// One synchronous gossip round. All messages carry the senders' pre-round
/// models; every directed link draws its own packet mask from
/// `key.path([receiver, sender])`.
pub fn gossip_round(
    models: &[ModelVector],
    q_r: &MixingMatrix,
    links: &LinkProbabilities,
    packet_len: usize,
    key: StreamKey,
) -> Result<(Vec<ModelVector>, ConsensusStats)> {
    let (m, k) = (q_r.num_planes, q_r.sats_per_plane);
    let n = m * k;
    if models.len() != n || q_r.size() != n || links.num_satellites() != n {
        return Err(Error::Dimension(format!(
            "{} models, mixing matrix of size {}, link table for {} satellites",
            models.len(),
            q_r.size(),
            links.num_satellites()
        )));
    }
    let mut stats = ConsensusStats::default();
    if m == 1 {
        return Ok((models.to_vec(), stats));
    }
    let packed: Vec<PacketizedModel> = models
        .iter()
        .map(|w| packetize(w, packet_len))
        .collect::<Result<_>>()?;
    let d = packed[0].num_packets();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = ModelVector::zeros(models[i].len());
        acc.axpy(q_r.get(i, i), &models[i]);
        for j in inter_neighbors(i, m, k) {
            let weight = q_r.get(i, j);
            if weight == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "mixing matrix has no weight for link {j} -> {i}"
                )));
            }
            let p = links.get(i, j);
            let mask = if p >= 1.0 {
                vec![true; d]
            } else {
                let mut rng = key.path(&[i as u64, j as u64]).rng();
                sample_packet_mask(p, d, &mut rng)
            };
            stats.inter_messages += 1;
            stats.inter_packets += d as u64;
            stats.packet_failures += mask.iter().filter(|&&ok| !ok).count() as u64;
            let received = self_compensate(&packed[j], &mask, &packed[i])?;
            acc.axpy(weight, &depacketize(&received));
        }
        out.push(acc);
    }
    Ok((out, stats))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsensusConfig {
    pub gossip_rounds: usize,
    pub packet_len: usize,
}

impl Default for ConsensusConfig {
    fn default() -> Self {
        ConsensusConfig {
            gossip_rounds: 1,
            packet_len: 2,
        }
    }
}

/// Precomputed operators for repeated consensus steps over one constellation.
#[derive(Debug, Clone)]
pub struct TwoPhaseConsensus {
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub config: ConsensusConfig,
    /// Normalized data weights of each satellite within its plane.
    pub plane_weights: Vec<Vec<f64>>,
    pub q_r: MixingMatrix,
    pub links: LinkProbabilities,
}

impl TwoPhaseConsensus {
    pub fn new(
        constellation: &ConstellationConfig,
        data_sizes: &[f64],
        config: ConsensusConfig,
        links: LinkProbabilities,
    ) -> Result<Self> {
        let (m, k) = (constellation.num_planes, constellation.sats_per_plane);
        let q_r = inter_plane_matrix(data_sizes, m, k)?;
        if config.packet_len < 1 {
            return Err(Error::Config("packet_len_params must be at least 1".into()));
        }
        if links.num_satellites() != m * k {
            return Err(Error::Dimension("link table does not match constellation".into()));
        }
        let plane_weights = data_sizes
            .chunks(k)
            .map(|plane| {
                let total: f64 = plane.iter().sum();
                plane.iter().map(|s| s / total).collect()
            })
            .collect();
        Ok(TwoPhaseConsensus {
            num_planes: m,
            sats_per_plane: k,
            config,
            plane_weights,
            q_r,
            links,
        })
    }

    /// Orbit reduce every plane, then run the configured gossip rounds.
    /// Gossip round `c` draws masks from `key.child(c)`.
    pub fn run(&self, models: &[ModelVector], key: StreamKey) -> Result<(Vec<ModelVector>, ConsensusStats)> {
        let k = self.sats_per_plane;
        if models.len() != self.num_planes * k {
            return Err(Error::Dimension(format!(
                "{} models for {} satellites",
                models.len(),
                self.num_planes * k
            )));
        }
        let mut stats = ConsensusStats::default();
        let mut synced = Vec::with_capacity(models.len());
        for (plane, weights) in models.chunks(k).zip(&self.plane_weights) {
            let (out, s) = orbit_reduce(plane, weights)?;
            stats.intra_messages += s.messages.iter().sum::<usize>() as u64;
            stats.intra_params += s.params_sent.iter().sum::<usize>() as u64;
            synced.extend(out);
        }
        let mut current = synced;
        for c in 0..self.config.gossip_rounds {
            let (next, s) = gossip_round(
                &current,
                &self.q_r,
                &self.links,
                self.config.packet_len,
                key.child(c as u64),
            )?;
            stats.accumulate(&s);
            current = next;
        }
        Ok((current, stats))
    }
}

pub fn model_consensus(
    models: &[ModelVector],
    data_sizes: &[f64],
    constellation: &ConstellationConfig,
    config: ConsensusConfig,
    links: &LinkProbabilities,
    key: StreamKey,
) -> Result<(Vec<ModelVector>, ConsensusStats)> {
    TwoPhaseConsensus::new(constellation, data_sizes, config, links.clone())?.run(models, key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::{expected_inter_matrix, intra_plane_matrix};
    use proptest::prelude::*;
    use rand::Rng;

    fn mv(v: &[f64]) -> ModelVector {
        ModelVector(v.to_vec())
    }

    #[test]
    fn packetize_examples() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let p = packetize(&w, 2).unwrap();
        assert_eq!(p.num_packets(), 3);
        assert_eq!(depacketize(&p).0, w.to_vec());

        let p = packetize(&w[..5], 2).unwrap();
        assert_eq!(p.num_packets(), 3);
        assert_eq!(p.packets[2], vec![5.0, 0.0]);
        assert_eq!(depacketize(&p).0, w[..5].to_vec());

        assert_eq!(packetize(&w, 6).unwrap().num_packets(), 1);
        assert_eq!(packetize(&w, 100).unwrap().num_packets(), 1);
        assert!(packetize(&w, 0).is_err());
    }

    #[test]
    fn compensation_examples() {
        let own = packetize(&[1.0, 1.0, 1.0, 1.0], 1).unwrap();
        let recv = packetize(&[2.0, 3.0, 4.0, 5.0], 1).unwrap();
        assert_eq!(self_compensate(&recv, &[true; 4], &own).unwrap(), recv);
        assert_eq!(self_compensate(&recv, &[false; 4], &own).unwrap(), own);
        let mixed = self_compensate(&recv, &[false, true, true, true], &own).unwrap();
        assert_eq!(depacketize(&mixed).0, vec![1.0, 3.0, 4.0, 5.0]);
        assert!(self_compensate(&recv, &[true; 3], &own).is_err());
    }

    #[test]
    fn orbit_reduce_examples() {
        let (out, stats) = orbit_reduce(&[mv(&[1.0]), mv(&[2.0]), mv(&[3.0])], &[1.0 / 3.0; 3]).unwrap();
        for o in &out {
            assert!((o[0] - 2.0).abs() < 1e-15);
        }
        assert_eq!(stats.messages, vec![4; 3]);

        let (out, stats) = orbit_reduce(&[mv(&[1.5, -2.0])], &[1.0]).unwrap();
        assert_eq!(out[0].0, vec![1.5, -2.0]);
        assert_eq!(stats.messages, vec![0]);

        assert!(orbit_reduce(&[mv(&[1.0]), mv(&[2.0])], &[1.0]).is_err());
        assert!(orbit_reduce(&[mv(&[1.0]), mv(&[2.0])], &[0.7, 0.7]).is_err());
    }

    #[test]
    fn orbit_reduce_weighted_matches_dense() {
        let mut rng = StreamKey::root(5).rng();
        let weights = [0.1, 0.2, 0.3, 0.4];
        let models: Vec<ModelVector> = (0..4)
            .map(|_| ModelVector((0..8).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let (out, _) = orbit_reduce(&models, &weights).unwrap();
        let expected: Vec<f64> = (0..8)
            .map(|d| models.iter().zip(&weights).map(|(m, w)| w * m[d]).sum())
            .collect();
        for o in &out {
            for (a, b) in o.iter().zip(&expected) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-12));
            }
        }
    }

    #[test]
    fn gossip_single_slot_ring_example() {
        let cfg = ConstellationConfig::new(5, 1);
        let models: Vec<ModelVector> = (1..=5).map(|x| mv(&[x as f64])).collect();
        let q_r = inter_plane_matrix(&[1.0; 5], 5, 1).unwrap();
        let links = LinkProbabilities::reliable(5);
        let (out, stats) = gossip_round(&models, &q_r, &links, 1, StreamKey::root(0)).unwrap();
        assert!((out[2][0] - (2.0 + 3.0 + 4.0) / 3.0).abs() < 1e-15);
        assert_eq!(stats.inter_messages, 10);
        assert_eq!(stats.packet_failures, 0);

        let (out, _) = model_consensus(
            &models,
            &[1.0; 5],
            &cfg,
            ConsensusConfig { gossip_rounds: 2, packet_len: 1 },
            &links,
            StreamKey::root(0),
        )
        .unwrap();
        assert!((out[2][0] - (1.0 + 4.0 + 9.0 + 8.0 + 5.0) / 9.0).abs() < 1e-14);
    }

    #[test]
    fn total_loss_keeps_models() {
        let cfg = ConstellationConfig::new(4, 2);
        let models: Vec<ModelVector> = (0..8).map(|x| mv(&[x as f64, -(x as f64)])).collect();
        let q_r = inter_plane_matrix(&[1.0; 8], 4, 2).unwrap();
        let links = LinkProbabilities::pinned(&cfg, 0.0).unwrap();
        let (out, stats) = gossip_round(&models, &q_r, &links, 1, StreamKey::root(1)).unwrap();
        assert_eq!(stats.packet_failures, stats.inter_packets);
        for (a, b) in out.iter().zip(&models) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn single_plane_skips_gossip() {
        let cfg = ConstellationConfig::new(1, 3);
        let models = vec![mv(&[1.0]), mv(&[2.0]), mv(&[6.0])];
        let (out, stats) = model_consensus(
            &models,
            &[1.0, 1.0, 2.0],
            &cfg,
            ConsensusConfig { gossip_rounds: 3, packet_len: 1 },
            &LinkProbabilities::reliable(3),
            StreamKey::root(0),
        )
        .unwrap();
        assert!(out.iter().all(|o| (o[0] - 3.75).abs() < 1e-15));
        assert_eq!(stats.inter_messages, 0);
        assert_eq!(stats.intra_messages, 12);
    }

    #[test]
    fn gossip_expectation_three_planes() {
        // Monte-Carlo mean of one round against E{Q_r}·W
        let cfg = ConstellationConfig::new(3, 1);
        let models = vec![mv(&[1.0]), mv(&[4.0]), mv(&[-2.0])];
        let q_r = inter_plane_matrix(&[1.0; 3], 3, 1).unwrap();
        let links = LinkProbabilities::pinned(&cfg, 0.5).unwrap();
        let expected = expected_inter_matrix(&q_r, &links).unwrap().apply(&models).unwrap();
        let trials = 100_000;
        let root = StreamKey::root(77);
        let mut sum = [0.0; 3];
        let mut sum_sq = [0.0; 3];
        for t in 0..trials {
            let (out, _) = gossip_round(&models, &q_r, &links, 1, root.child(t)).unwrap();
            for i in 0..3 {
                sum[i] += out[i][0];
                sum_sq[i] += out[i][0] * out[i][0];
            }
        }
        for i in 0..3 {
            let mean = sum[i] / trials as f64;
            let var = sum_sq[i] / trials as f64 - mean * mean;
            let se = (var / trials as f64).sqrt();
            assert!((mean - expected[i][0]).abs() <= 3.0 * se, "satellite {i}");
        }
    }

    #[test]
    fn per_packet_expectation() {
        // received packet j is the sender's with probability p, else the receiver's
        let cfg = ConstellationConfig::new(2, 1);
        let models = vec![mv(&[0.0, 0.0, 0.0, 0.0]), mv(&[1.0, 2.0, 3.0, 4.0])];
        let q_r = inter_plane_matrix(&[1.0; 2], 2, 1).unwrap();
        let p = 0.3;
        let links = LinkProbabilities::pinned(&cfg, p).unwrap();
        let trials = 40_000;
        let mut sums = [0.0; 4];
        for t in 0..trials {
            let (out, _) = gossip_round(&models, &q_r, &links, 1, StreamKey::root(3).child(t)).unwrap();
            // satellite 0 keeps ½ own (zero) + ½ compensated copy
            for j in 0..4 {
                sums[j] += 2.0 * out[0][j];
            }
        }
        for j in 0..4 {
            let x = models[1][j];
            let mean = sums[j] / trials as f64;
            let se = x * (p * (1.0 - p) / trials as f64).sqrt();
            assert!((mean - p * x).abs() <= 3.0 * se, "packet {j}");
        }
    }

    proptest! {
        #[test]
        fn reliable_consensus_matches_dense(
            m in 2usize..6, k in 2usize..6, c in 0usize..4, dim in 1usize..7, plen in 1usize..4,
            seed in 0u64..10_000,
        ) {
            let mut rng = StreamKey::root(seed).rng();
            let n = m * k;
            let sizes: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..10.0)).collect();
            let models: Vec<ModelVector> = (0..n)
                .map(|_| ModelVector((0..dim).map(|_| rng.random_range(-5.0..5.0)).collect()))
                .collect();
            let cfg = ConstellationConfig::new(m, k);
            let (out, stats) = model_consensus(
                &models, &sizes, &cfg,
                ConsensusConfig { gossip_rounds: c, packet_len: plen },
                &LinkProbabilities::reliable(n), StreamKey::root(seed),
            ).unwrap();
            let q = inter_plane_matrix(&sizes, m, k).unwrap().pow(c)
                .then_after(&intra_plane_matrix(&sizes, m, k).unwrap());
            let expected = q.apply(&models).unwrap();
            for (a, b) in out.iter().zip(&expected) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() <= 1e-9 * y.abs().max(1.0));
                }
            }
            prop_assert_eq!(stats.retransmissions, 0);
            prop_assert_eq!(stats.intra_messages, (n * (2 * k - 2)) as u64);
            let deg = if m == 2 { 1 } else { 2 };
            prop_assert_eq!(stats.inter_messages, (c * n * deg) as u64);
        }

        #[test]
        fn orbit_reduce_accounting(k in 1usize..9, dim in 1usize..40) {
            let models: Vec<ModelVector> = (0..k).map(|i| ModelVector(vec![i as f64; dim])).collect();
            let (_, stats) = orbit_reduce(&models, &vec![1.0 / k as f64; k]).unwrap();
            for s in 0..k {
                prop_assert_eq!(stats.messages[s], 2 * k - 2);
                prop_assert!(stats.params_sent[s] <= 2 * dim);
            }
        }

        #[test]
        fn round_trip(values in proptest::collection::vec(-1e6f64..1e6, 0..50), plen in 1usize..10) {
            let p = packetize(&values, plen).unwrap();
            prop_assert_eq!(p.num_packets(), packet_count(values.len(), plen));
            prop_assert_eq!(depacketize(&p).0, values);
        }
    }
}
