//! JSON experiment configuration.
//!
//! Every block and field has a default, so `{}` is a valid (if large)
//! configuration. Units follow the field names (`_deg`, `_dbm`, `_nm`, ...).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineAlgorithm, BaselineConfig};
use crate::consensus::ConsensusConfig;
use crate::error::{Error, Result};
use crate::linkmodel::{db_to_linear, dbm_to_watts, LinkBudgetParams};
use crate::topology::{ConstellationConfig, EARTH_RADIUS_M};
use crate::training::{PartitionMode, TaskKind, TrainingConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstellationBlock {
    pub planes: usize,
    pub sats_per_plane: usize,
    pub altitude_m: f64,
    pub inclination_deg: f64,
    pub raan_spread_deg: f64,
    pub phase_offset_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub link_distance_override_m: Option<f64>,
}

impl Default for ConstellationBlock {
    fn default() -> Self {
        ConstellationBlock {
            planes: 10,
            sats_per_plane: 10,
            altitude_m: 604e3,
            inclination_deg: 143.0,
            raan_spread_deg: 360.0,
            phase_offset_deg: 0.0,
            link_distance_override_m: None,
        }
    }
}

impl ConstellationBlock {
    pub fn to_config(&self) -> Result<ConstellationConfig> {
        let cfg = ConstellationConfig {
            num_planes: self.planes,
            sats_per_plane: self.sats_per_plane,
            altitude: self.altitude_m,
            inclination: self.inclination_deg.to_radians(),
            raan_spread: self.raan_spread_deg.to_radians(),
            phase_offset: self.phase_offset_deg.to_radians(),
            earth_radius: EARTH_RADIUS_M,
            link_distance_override: self.link_distance_override_m,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBlock {
    pub wavelength_nm: f64,
    pub tx_power_dbm: f64,
    pub bandwidth_ghz: f64,
    pub tx_eff: f64,
    pub rx_eff: f64,
    pub telescope_mm: f64,
    pub responsivity: f64,
    pub pointing_sigma_urad: f64,
    pub dark_current_na: f64,
    pub noise_temp_k: f64,
    pub load_ohm: f64,
    pub snr_threshold_db: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub success_prob_override: Option<f64>,
}

impl Default for LinkBlock {
    fn default() -> Self {
        LinkBlock {
            wavelength_nm: 1550.0,
            tx_power_dbm: 10.0,
            bandwidth_ghz: 2.0,
            tx_eff: 0.8,
            rx_eff: 0.8,
            telescope_mm: 75.0,
            responsivity: 0.6,
            pointing_sigma_urad: 6.0,
            dark_current_na: 1.0,
            noise_temp_k: 500.0,
            load_ohm: 1000.0,
            snr_threshold_db: 20.0,
            success_prob_override: None,
        }
    }
}

impl LinkBlock {
    pub fn to_params(&self) -> Result<LinkBudgetParams> {
        let params = LinkBudgetParams {
            wavelength: self.wavelength_nm / 1e9,
            transmit_power: dbm_to_watts(self.tx_power_dbm),
            bandwidth: self.bandwidth_ghz * 1e9,
            tx_efficiency: self.tx_eff,
            rx_efficiency: self.rx_eff,
            telescope_diameter: self.telescope_mm / 1e3,
            responsivity: self.responsivity,
            pointing_sigma: self.pointing_sigma_urad / 1e6,
            dark_current: self.dark_current_na / 1e9,
            noise_temperature: self.noise_temp_k,
            load_resistance: self.load_ohm,
            snr_threshold: db_to_linear(self.snr_threshold_db),
            ..LinkBudgetParams::default()
        };
        params.validate()?;
        if let Some(p) = self.success_prob_override {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("success_prob_override {p} outside [0, 1]")));
            }
        }
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionKind {
    Iid,
    Dirichlet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingBlock {
    pub task: TaskKind,
    pub n_samples: usize,
    pub dim: usize,
    pub noise: f64,
    pub partition: PartitionKind,
    pub alpha: f64,
    pub lr: f64,
    pub lr_decay: f64,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub rounds: usize,
    pub sam_rho: f64,
    pub regularization: f64,
    /// Data seed; the experiment seed is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for TrainingBlock {
    fn default() -> Self {
        TrainingBlock {
            task: TaskKind::LeastSquares,
            n_samples: 2000,
            dim: 10,
            noise: 0.1,
            partition: PartitionKind::Iid,
            alpha: 0.6,
            lr: 0.1,
            lr_decay: 0.998,
            local_epochs: 5,
            batch_size: 64,
            rounds: 300,
            sam_rho: 0.01,
            regularization: 0.0,
            seed: None,
        }
    }
}

impl TrainingBlock {
    pub fn to_config(&self) -> Result<TrainingConfig> {
        let cfg = TrainingConfig {
            learning_rate: self.lr,
            lr_decay: self.lr_decay,
            local_epochs: self.local_epochs,
            batch_size: self.batch_size,
            rounds: self.rounds,
            sam_radius: self.sam_rho,
        };
        cfg.validate()?;
        if self.dim == 0 || self.n_samples == 0 {
            return Err(Error::Config("n_samples and dim must be positive".into()));
        }
        if !(self.regularization >= 0.0) || !(self.noise >= 0.0) {
            return Err(Error::Config("noise and regularization must be non-negative".into()));
        }
        Ok(cfg)
    }

    pub fn partition_mode(&self) -> Result<PartitionMode> {
        match self.partition {
            PartitionKind::Iid => Ok(PartitionMode::Iid),
            PartitionKind::Dirichlet if self.alpha > 0.0 => Ok(PartitionMode::Dirichlet { alpha: self.alpha }),
            PartitionKind::Dirichlet => Err(Error::Config(format!("alpha must be positive, got {}", self.alpha))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkMode {
    Physical,
    Pinned,
    Reliable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConsensusBlock {
    pub gossip_rounds: usize,
    pub packet_len_params: usize,
    pub links: LinkMode,
    pub pinned_p: f64,
}

impl Default for ConsensusBlock {
    fn default() -> Self {
        ConsensusBlock {
            gossip_rounds: 1,
            packet_len_params: 2,
            links: LinkMode::Physical,
            pinned_p: 1.0,
        }
    }
}

impl ConsensusBlock {
    pub fn to_config(&self) -> Result<ConsensusConfig> {
        if self.packet_len_params < 1 {
            return Err(Error::Config("packet_len_params must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.pinned_p) {
            return Err(Error::Config(format!("pinned_p {} outside [0, 1]", self.pinned_p)));
        }
        Ok(ConsensusConfig {
            gossip_rounds: self.gossip_rounds,
            packet_len: self.packet_len_params,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Dfedsat,
    Dsgd,
    Dfedavg,
    Dfedsam,
}

impl Algorithm {
    pub fn baseline(self) -> Option<BaselineAlgorithm> {
        match self {
            Algorithm::Dfedsat => None,
            Algorithm::Dsgd => Some(BaselineAlgorithm::Dsgd),
            Algorithm::Dfedavg => Some(BaselineAlgorithm::Dfedavg),
            Algorithm::Dfedsam => Some(BaselineAlgorithm::Dfedsam),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dfedsat => "dfedsat",
            Algorithm::Dsgd => "dsgd",
            Algorithm::Dfedavg => "dfedavg",
            Algorithm::Dfedsam => "dfedsam",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub max_retransmissions: u32,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
    pub constellation: ConstellationBlock,
    pub link: LinkBlock,
    pub training: TrainingBlock,
    pub consensus: ConsensusBlock,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            algorithm: Algorithm::Dfedsat,
            max_retransmissions: 3,
            seed: 0,
            output_path: None,
            constellation: ConstellationBlock::default(),
            link: LinkBlock::default(),
            training: TrainingBlock::default(),
            consensus: ConsensusBlock::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn baseline_config(&self) -> Option<BaselineConfig> {
        self.algorithm.baseline().map(|algorithm| BaselineConfig {
            algorithm,
            max_retransmissions: self.max_retransmissions,
        })
    }

    pub fn data_seed(&self) -> u64 {
        self.training.seed.unwrap_or(self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        let constellation = self.constellation.to_config()?;
        self.link.to_params()?;
        self.training.to_config()?;
        self.training.partition_mode()?;
        self.consensus.to_config()?;
        if self.training.n_samples < constellation.num_satellites() {
            return Err(Error::Config(format!(
                "{} samples cannot be shared among {} satellites",
                self.training.n_samples,
                constellation.num_satellites()
            )));
        }
        Ok(())
    }
}
