//! Reference decentralized methods over the full torus: DSGD, DFedAvg and
//! DFedSAM. Each round runs local updates and then a single consensus step
//! with the torus mixing matrix. Inter-plane messages are resent packet by
//! packet until they arrive or the retry budget is spent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::consensus::{depacketize, packetize, PacketizedModel, BYTES_PER_PARAM};
use crate::error::{Error, Result};
use crate::links::LinkProbabilities;
use crate::mixing::{torus_mixing_matrix, MixingMatrix};
use crate::seeding::StreamKey;
use crate::topology::{ring_neighbors, ConstellationConfig};
use crate::training::{local_sam, local_sgd, LocalRun, ModelVector, Task, TrainingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineAlgorithm {
    Dsgd,
    Dfedavg,
    Dfedsam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BaselineConfig {
    pub algorithm: BaselineAlgorithm,
    pub max_retransmissions: u32,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            algorithm: BaselineAlgorithm::Dfedavg,
            max_retransmissions: 3,
        }
    }
}

impl BaselineConfig {
    /// Local steps per round; DSGD always takes exactly one.
    pub fn local_steps(&self, training: &TrainingConfig) -> usize {
        match self.algorithm {
            BaselineAlgorithm::Dsgd => 1,
            _ => training.local_epochs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub delivered: PacketizedModel,
    pub attempts: Vec<u32>,
    pub residual_failures: usize,
}

impl Transmission {
    pub fn total_attempts(&self) -> u64 {
        self.attempts.iter().map(|&a| a as u64).sum()
    }
}

/// Send every packet up to `1 + max_retries` times. Packets that never get
/// through are replaced by the receiver's own packet.
pub fn transmit_with_retransmission<R: Rng + ?Sized>(
    packets: &PacketizedModel,
    own: &PacketizedModel,
    p: f64,
    max_retries: u32,
    rng: &mut R,
) -> Result<Transmission> {
    if packets.num_packets() != own.num_packets() {
        return Err(Error::Dimension("sender and receiver packet counts differ".into()));
    }
    let p = p.clamp(0.0, 1.0);
    let mut attempts = Vec::with_capacity(packets.num_packets());
    let mut delivered = Vec::with_capacity(packets.num_packets());
    let mut residual_failures = 0;
    for (sent, fallback) in packets.packets.iter().zip(&own.packets) {
        let mut tries = 0;
        let mut ok = false;
        while tries <= max_retries {
            tries += 1;
            if rng.random_bool(p) {
                ok = true;
                break;
            }
        }
        attempts.push(tries);
        if ok {
            delivered.push(sent.clone());
        } else {
            residual_failures += 1;
            delivered.push(fallback.clone());
        }
    }
    Ok(Transmission {
        delivered: PacketizedModel {
            packets: delivered,
            packet_len: own.packet_len,
            original_len: own.original_len,
        },
        attempts,
        residual_failures,
    })
}

/// Traffic counters of one baseline round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BaselineStats {
    pub bytes_intra: u64,
    pub bytes_inter: u64,
    pub retransmissions: u64,
    pub packet_failures: u64,
    pub residual_failures: u64,
    pub gradient_evaluations: u64,
}

/// Single-matrix consensus over the torus with retransmission on
/// inter-plane links.
#[derive(Debug, Clone)]
pub struct TorusConsensus {
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub q: MixingMatrix,
    pub links: LinkProbabilities,
    pub packet_len: usize,
    pub max_retransmissions: u32,
}

impl TorusConsensus {
    pub fn new(
        constellation: &ConstellationConfig,
        data_sizes: &[f64],
        links: LinkProbabilities,
        packet_len: usize,
        max_retransmissions: u32,
    ) -> Result<Self> {
        let (m, k) = (constellation.num_planes, constellation.sats_per_plane);
        if packet_len < 1 {
            return Err(Error::Config("packet_len_params must be at least 1".into()));
        }
        Ok(TorusConsensus {
            num_planes: m,
            sats_per_plane: k,
            q: torus_mixing_matrix(data_sizes, m, k)?,
            links,
            packet_len,
            max_retransmissions,
        })
    }

    fn neighbors(&self, i: usize) -> (Vec<usize>, Vec<usize>) {
        let k = self.sats_per_plane;
        let (plane, slot) = (i / k, i % k);
        let (kp, kn) = ring_neighbors(slot, k);
        let (ml, mr) = ring_neighbors(plane, self.num_planes);
        (
            kp.into_iter().chain(kn).map(|s| plane * k + s).collect(),
            ml.into_iter().chain(mr).map(|p| p * k + slot).collect(),
        )
    }

    /// One mixing step. Link `j -> i` draws from `key.path([i, j])`.
    pub fn run(&self, models: &[ModelVector], key: StreamKey) -> Result<(Vec<ModelVector>, BaselineStats)> {
        let n = self.q.size();
        if models.len() != n {
            return Err(Error::Dimension(format!("{} models for {n} satellites", models.len())));
        }
        let packed: Vec<PacketizedModel> = models
            .iter()
            .map(|w| packetize(w, self.packet_len))
            .collect::<Result<_>>()?;
        let packet_bytes = self.packet_len as u64 * BYTES_PER_PARAM;
        let d = packed[0].num_packets() as u64;
        let mut stats = BaselineStats::default();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = ModelVector::zeros(models[i].len());
            acc.axpy(self.q.get(i, i), &models[i]);
            let (intra, inter) = self.neighbors(i);
            for j in intra {
                stats.bytes_intra += d * packet_bytes;
                acc.axpy(self.q.get(i, j), &models[j]);
            }
            for j in inter {
                let mut rng = key.path(&[i as u64, j as u64]).rng();
                let tx = transmit_with_retransmission(
                    &packed[j],
                    &packed[i],
                    self.links.get(i, j),
                    self.max_retransmissions,
                    &mut rng,
                )?;
                let attempts = tx.total_attempts();
                stats.bytes_inter += attempts * packet_bytes;
                stats.retransmissions += attempts - d;
                stats.packet_failures += attempts - (d - tx.residual_failures as u64);
                stats.residual_failures += tx.residual_failures as u64;
                acc.axpy(self.q.get(i, j), &depacketize(&tx.delivered));
            }
            out.push(acc);
        }
        Ok((out, stats))
    }
}

/// Local phase of a baseline: plain SGD for DSGD/DFedAvg, SAM for DFedSAM.
/// Satellite `s` draws its batches from `key.child(s)`.
pub fn baseline_local_phase(
    models: &[ModelVector],
    tasks: &[Task],
    config: &BaselineConfig,
    training: &TrainingConfig,
    lr: f64,
    key: StreamKey,
) -> Result<(Vec<ModelVector>, u64)> {
    if models.len() != tasks.len() {
        return Err(Error::Dimension("one task per satellite required".into()));
    }
    let steps = config.local_steps(training);
    let mut evals = 0;
    let mut out = Vec::with_capacity(models.len());
    for (s, (w, task)) in models.iter().zip(tasks).enumerate() {
        let mut rng = key.child(s as u64).rng();
        let LocalRun { model, gradient_evaluations } = match config.algorithm {
            BaselineAlgorithm::Dsgd | BaselineAlgorithm::Dfedavg => {
                local_sgd(w, task, steps, lr, training.batch_size, &mut rng)?
            }
            BaselineAlgorithm::Dfedsam => local_sam(
                w,
                task,
                steps,
                lr,
                training.sam_radius,
                training.batch_size,
                &mut rng,
            )?,
        };
        evals += gradient_evaluations as u64;
        out.push(model);
    }
    Ok((out, evals))
}

/// Local updates followed by one torus consensus step.
#[allow(clippy::too_many_arguments)]
pub fn baseline_round(
    models: &[ModelVector],
    tasks: &[Task],
    config: &BaselineConfig,
    training: &TrainingConfig,
    lr: f64,
    torus: &TorusConsensus,
    local_key: StreamKey,
    link_key: StreamKey,
) -> Result<(Vec<ModelVector>, BaselineStats)> {
    let (local, evals) = baseline_local_phase(models, tasks, config, training, lr, local_key)?;
    let (mixed, mut stats) = torus.run(&local, link_key)?;
    stats.gradient_evaluations = evals;
    Ok((mixed, stats))
}
