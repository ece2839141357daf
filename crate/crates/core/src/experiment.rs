//! Full training runs, per-round metrics, result files and parameter sweeps.
//!
//! A [`Simulation`] owns the partitioned data, the current satellite models
//! and the consensus engine. Every random draw is derived from the config
//! seed through [`StreamKey`] paths indexed by domain, round and satellite,
//! so a run is a pure function of its configuration.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{baseline_round, BaselineConfig, TorusConsensus};
use crate::config::{Algorithm, ExperimentConfig, LinkMode, PartitionKind};
use crate::consensus::TwoPhaseConsensus;
use crate::error::{Error, Result};
use crate::links::LinkProbabilities;
use crate::mixing::{consensus_spectrum, ConsensusSpectrum};
use crate::seeding::{domain, StreamKey};
use crate::topology::ConstellationConfig;
use crate::training::{
    average, generate_dataset, global_loss_and_gradient, local_sgd, partition_data, ModelVector, Task,
    TrainingConfig,
};

/// Metrics recorded after each round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub round: usize,
    pub global_loss: f64,
    pub grad_norm_sq: f64,
    pub consensus_error: f64,
    pub test_metric: f64,
    pub bytes_intra: u64,
    pub bytes_inter: u64,
    pub retransmissions: u64,
    pub packet_failures: u64,
    /// Global loss at the data-weighted average model. Only set when the
    /// satellites hold different amounts of data.
    pub weighted_global_loss: Option<f64>,
}

pub const METRICS_HEADER: [&str; 9] = [
    "round",
    "global_loss",
    "grad_norm_sq",
    "consensus_error",
    "test_metric",
    "bytes_intra",
    "bytes_inter",
    "retransmissions",
    "packet_failures",
];

/// Mean squared distance of each model from the unweighted average.
/// Returns 0 for an empty slice.
pub fn consensus_error(models: &[ModelVector]) -> f64 {
    if models.is_empty() {
        return 0.0;
    }
    let mean = average(models);
    models
        .iter()
        .map(|w| w.iter().zip(mean.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>())
        .sum::<f64>()
        / models.len() as f64
}

// ---------------------------------------------------------------------------
// Problem setup

/// Training shards (one per satellite, plane-major) and a held-out test set.
#[derive(Debug, Clone)]
pub struct Problem {
    pub shards: Vec<Task>,
    pub test: Task,
    pub data_sizes: Vec<f64>,
}

impl Problem {
    pub fn is_uniform(&self) -> bool {
        self.data_sizes.windows(2).all(|w| w[0] == w[1])
    }
}

/// Generates the dataset, holds out a quarter of `n_samples` for testing
/// and partitions the rest across the constellation.
pub fn build_problem(config: &ExperimentConfig) -> Result<Problem> {
    let t = &config.training;
    let constellation = config.constellation.to_config()?;
    let seed = config.data_seed();
    let n_test = (t.n_samples / 4).max(1);
    let mut data = generate_dataset(t.task, t.n_samples + n_test, t.dim, t.noise, seed)?;
    data.regularization = t.regularization;
    let train_idx: Vec<usize> = (0..t.n_samples).collect();
    let test_idx: Vec<usize> = (t.n_samples..t.n_samples + n_test).collect();
    let train = data.subset(&train_idx);
    let test = data.subset(&test_idx);
    let shards = partition_data(
        &train,
        constellation.num_satellites(),
        t.partition_mode()?,
        seed,
    )?;
    let data_sizes = shards.iter().map(|s| s.task.len() as f64).collect();
    Ok(Problem {
        shards: shards.into_iter().map(|s| s.task).collect(),
        test,
        data_sizes,
    })
}

/// Link success probabilities selected by the consensus block.
pub fn build_links(config: &ExperimentConfig, constellation: &ConstellationConfig) -> Result<LinkProbabilities> {
    match config.consensus.links {
        LinkMode::Reliable => Ok(LinkProbabilities::reliable(constellation.num_satellites())),
        LinkMode::Pinned => LinkProbabilities::pinned(constellation, config.consensus.pinned_p),
        LinkMode::Physical => match config.link.success_prob_override {
            Some(p) => LinkProbabilities::pinned(constellation, p),
            None => LinkProbabilities::physical(constellation, &config.link.to_params()?),
        },
    }
}

#[derive(Debug, Clone)]
enum Engine {
    DFedSat(TwoPhaseConsensus),
    Baseline(BaselineConfig, TorusConsensus),
}

#[derive(Debug, Clone, Copy, Default)]
struct Totals {
    bytes_intra: u64,
    bytes_inter: u64,
    retransmissions: u64,
    packet_failures: u64,
}

// ---------------------------------------------------------------------------
// Simulation

/// Round-by-round driver for one experiment.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: ExperimentConfig,
    training: TrainingConfig,
    constellation: ConstellationConfig,
    problem: Problem,
    links: LinkProbabilities,
    engine: Engine,
    models: Vec<ModelVector>,
    round: usize,
    totals: Totals,
    root: StreamKey,
}

impl Simulation {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let constellation = config.constellation.to_config()?;
        let training = config.training.to_config()?;
        let problem = build_problem(config)?;
        let links = build_links(config, &constellation)?;
        let consensus = config.consensus.to_config()?;
        let engine = match config.baseline_config() {
            None => Engine::DFedSat(TwoPhaseConsensus::new(
                &constellation,
                &problem.data_sizes,
                consensus,
                links.clone(),
            )?),
            Some(baseline) => Engine::Baseline(
                baseline,
                TorusConsensus::new(
                    &constellation,
                    &problem.data_sizes,
                    links.clone(),
                    consensus.packet_len,
                    config.max_retransmissions,
                )?,
            ),
        };
        let models = vec![ModelVector::zeros(config.training.dim); constellation.num_satellites()];
        Ok(Simulation {
            config: config.clone(),
            training,
            constellation,
            problem,
            links,
            engine,
            models,
            round: 0,
            totals: Totals::default(),
            root: StreamKey::root(config.seed),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn problem(&self) -> &Problem {
        &self.problem
    }

    pub fn links(&self) -> &LinkProbabilities {
        &self.links
    }

    pub fn models(&self) -> &[ModelVector] {
        &self.models
    }

    /// Number of completed rounds.
    pub fn round(&self) -> usize {
        self.round
    }

    pub fn average_model(&self) -> ModelVector {
        average(&self.models)
    }

    /// Spectral summary of the two-phase operator for this constellation,
    /// data split and link table.
    pub fn spectrum(&self) -> Result<ConsensusSpectrum> {
        consensus_spectrum(
            &self.problem.data_sizes,
            self.constellation.num_planes,
            self.constellation.sats_per_plane,
            self.config.consensus.gossip_rounds,
            &self.links,
        )
    }

    /// Metrics of the current state. Before the first step this describes
    /// the initial all-zero models.
    pub fn evaluate(&self) -> Result<RoundMetrics> {
        let w_bar = self.average_model();
        let (global_loss, grad) = global_loss_and_gradient(&self.problem.shards, &w_bar)?;
        let grad_norm_sq = grad.norm().powi(2);
        let test_metric = self.problem.test.test_metric(&w_bar)?;
        if !(global_loss.is_finite() && grad_norm_sq.is_finite() && test_metric.is_finite()) {
            return Err(Error::NumericBlowUp { round: self.round });
        }
        let weighted_global_loss = if self.problem.is_uniform() {
            None
        } else {
            let total: f64 = self.problem.data_sizes.iter().sum();
            let mut w = ModelVector::zeros(w_bar.len());
            for (model, size) in self.models.iter().zip(&self.problem.data_sizes) {
                w.axpy(size / total, model);
            }
            Some(global_loss_and_gradient(&self.problem.shards, &w)?.0)
        };
        Ok(RoundMetrics {
            round: self.round,
            global_loss,
            grad_norm_sq,
            consensus_error: consensus_error(&self.models),
            test_metric,
            bytes_intra: self.totals.bytes_intra,
            bytes_inter: self.totals.bytes_inter,
            retransmissions: self.totals.retransmissions,
            packet_failures: self.totals.packet_failures,
            weighted_global_loss,
        })
    }

    /// Runs one round (local updates then consensus) and returns its metrics.
    pub fn step(&mut self) -> Result<RoundMetrics> {
        let t = self.round;
        let lr = self.training.learning_rate_at(t);
        let local_key = self.root.path(&[domain::LOCAL_UPDATE, t as u64]);
        let next = match &self.engine {
            Engine::DFedSat(consensus) => {
                let mut local = Vec::with_capacity(self.models.len());
                for (s, (w, task)) in self.models.iter().zip(&self.problem.shards).enumerate() {
                    let mut rng = local_key.child(s as u64).rng();
                    let run = local_sgd(
                        w,
                        task,
                        self.training.local_epochs,
                        lr,
                        self.training.batch_size,
                        &mut rng,
                    )?;
                    local.push(run.model);
                }
                let (mixed, stats) = consensus.run(&local, self.root.path(&[domain::GOSSIP, t as u64]))?;
                self.totals.bytes_intra += stats.bytes_intra();
                self.totals.bytes_inter += stats.bytes_inter(consensus.config.packet_len);
                self.totals.retransmissions += stats.retransmissions;
                self.totals.packet_failures += stats.packet_failures;
                mixed
            }
            Engine::Baseline(baseline, torus) => {
                let (mixed, stats) = baseline_round(
                    &self.models,
                    &self.problem.shards,
                    baseline,
                    &self.training,
                    lr,
                    torus,
                    local_key,
                    self.root.path(&[domain::RETRANSMIT, t as u64]),
                )?;
                self.totals.bytes_intra += stats.bytes_intra;
                self.totals.bytes_inter += stats.bytes_inter;
                self.totals.retransmissions += stats.retransmissions;
                self.totals.packet_failures += stats.packet_failures;
                mixed
            }
        };
        self.round += 1;
        if next.iter().any(|w| !w.is_finite()) {
            return Err(Error::NumericBlowUp { round: self.round });
        }
        self.models = next;
        self.evaluate()
    }
}

/// Runs all configured rounds and returns one metrics row per round.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RoundMetrics>> {
    let mut sim = Simulation::new(config)?;
    (0..config.training.rounds).map(|_| sim.step()).collect()
}

/// Runs an experiment and writes `metrics.csv` and `metrics.json` into
/// `out_dir`, plus `weighted_loss.csv` when data sizes are non-uniform.
pub fn run_to_dir(config: &ExperimentConfig, out_dir: &Path) -> Result<Vec<RoundMetrics>> {
    let metrics = run_experiment(config)?;
    fs::create_dir_all(out_dir)?;
    write_metrics(&metrics, &out_dir.join("metrics.csv"), MetricsFormat::Csv)?;
    write_metrics(&metrics, &out_dir.join("metrics.json"), MetricsFormat::Json)?;
    if metrics.iter().any(|m| m.weighted_global_loss.is_some()) {
        write_weighted_loss(&metrics, &out_dir.join("weighted_loss.csv"))?;
    }
    Ok(metrics)
}

// ---------------------------------------------------------------------------
// Result files

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsFormat {
    Csv,
    Json,
}

/// 17 significant digits, enough to reproduce every `f64` exactly.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn metrics_fields(m: &RoundMetrics) -> [String; 9] {
    [
        m.round.to_string(),
        fmt_float(m.global_loss),
        fmt_float(m.grad_norm_sq),
        fmt_float(m.consensus_error),
        fmt_float(m.test_metric),
        m.bytes_intra.to_string(),
        m.bytes_inter.to_string(),
        m.retransmissions.to_string(),
        m.packet_failures.to_string(),
    ]
}

pub fn write_metrics(metrics: &[RoundMetrics], path: &Path, format: MetricsFormat) -> Result<()> {
    match format {
        MetricsFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(METRICS_HEADER)?;
            for m in metrics {
                w.write_record(metrics_fields(m))?;
            }
            w.flush()?;
        }
        MetricsFormat::Json => {
            let mut text = String::from("[");
            for (i, m) in metrics.iter().enumerate() {
                text.push_str(if i == 0 { "\n  {" } else { ",\n  {" });
                for (j, (key, value)) in METRICS_HEADER.iter().zip(metrics_fields(m)).enumerate() {
                    let sep = if j == 0 { "" } else { ", " };
                    write!(text, "{sep}\"{key}\": {value}").expect("writing to a String");
                }
                text.push('}');
            }
            text.push_str(if metrics.is_empty() { "]\n" } else { "\n]\n" });
            fs::write(path, text)?;
        }
    }
    Ok(())
}

fn write_weighted_loss(metrics: &[RoundMetrics], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["round", "weighted_global_loss"])?;
    for m in metrics {
        if let Some(loss) = m.weighted_global_loss {
            w.write_record([m.round.to_string(), fmt_float(loss)])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize) -> Result<T> {
    record
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Io(format!("bad value in column {}", METRICS_HEADER[i])))
}

/// Reads a file produced by [`write_metrics`] in CSV format.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<RoundMetrics>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(METRICS_HEADER) {
        return Err(Error::Io(format!("{}: unexpected header", path.display())));
    }
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(RoundMetrics {
                round: parse_field(&rec, 0)?,
                global_loss: parse_field(&rec, 1)?,
                grad_norm_sq: parse_field(&rec, 2)?,
                consensus_error: parse_field(&rec, 3)?,
                test_metric: parse_field(&rec, 4)?,
                bytes_intra: parse_field(&rec, 5)?,
                bytes_inter: parse_field(&rec, 6)?,
                retransmissions: parse_field(&rec, 7)?,
                packet_failures: parse_field(&rec, 8)?,
                weighted_global_loss: None,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Sweeps

/// Axes of a parameter sweep. Absent axes keep the base configuration.
/// Sweeping `planes` keeps the total satellite count fixed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub gossip_rounds: Option<Vec<usize>>,
    pub planes: Option<Vec<usize>>,
    pub pinned_p: Option<Vec<f64>>,
    pub tx_power_dbm: Option<Vec<f64>>,
    pub algorithm: Option<Vec<Algorithm>>,
    pub alpha: Option<Vec<f64>>,
    pub seed: Option<Vec<u64>>,
}

impl SweepGrid {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("sweep grid: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// One configuration of a sweep and the axis values that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub index: usize,
    pub params: BTreeMap<String, String>,
    pub config: ExperimentConfig,
}

type Setter = Box<dyn Fn(&mut ExperimentConfig) -> Result<()>>;
type Axis = (String, Vec<(String, Setter)>);

fn axis<T: Clone + ToString + 'static>(
    name: &str,
    values: &Option<Vec<T>>,
    apply: impl Fn(&mut ExperimentConfig, T) -> Result<()> + Clone + 'static,
) -> Result<Option<Axis>> {
    let Some(values) = values else { return Ok(None) };
    if values.is_empty() {
        return Err(Error::Config(format!("sweep axis {name} is empty")));
    }
    let setters = values
        .iter()
        .map(|v| {
            let (v, apply) = (v.clone(), apply.clone());
            let label = v.to_string();
            let set: Setter = Box::new(move |c| apply(c, v.clone()));
            (label, set)
        })
        .collect();
    Ok(Some((name.to_string(), setters)))
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Expands the grid into the cartesian product of its axes, in axis order
/// `algorithm, planes, gossip_rounds, pinned_p, tx_power_dbm, alpha, seed`
/// with the last axis varying fastest. Every cell keeps the base seed unless
/// `seed` is swept.
pub fn expand_grid(base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<SweepCell>> {
    let total = base.constellation.planes * base.constellation.sats_per_plane;
    let axes: Vec<Axis> = [
        axis("algorithm", &grid.algorithm, |c, a| {
            c.algorithm = a;
            Ok(())
        })?,
        axis("planes", &grid.planes, move |c, m| {
            if m == 0 || !total.is_multiple_of(m) {
                return Err(Error::Config(format!(
                    "{total} satellites cannot be split into {m} planes"
                )));
            }
            c.constellation.planes = m;
            c.constellation.sats_per_plane = total / m;
            Ok(())
        })?,
        axis("gossip_rounds", &grid.gossip_rounds, |c, g| {
            c.consensus.gossip_rounds = g;
            Ok(())
        })?,
        axis("pinned_p", &grid.pinned_p, |c, p| {
            c.consensus.links = LinkMode::Pinned;
            c.consensus.pinned_p = p;
            Ok(())
        })?,
        axis("tx_power_dbm", &grid.tx_power_dbm, |c, dbm| {
            c.consensus.links = LinkMode::Physical;
            c.link.success_prob_override = None;
            c.link.tx_power_dbm = dbm;
            Ok(())
        })?,
        axis("alpha", &grid.alpha, |c, a| {
            c.training.partition = PartitionKind::Dirichlet;
            c.training.alpha = a;
            Ok(())
        })?,
        axis("seed", &grid.seed, |c, s| {
            c.seed = s;
            Ok(())
        })?,
    ]
    .into_iter()
    .flatten()
    .collect();

    let mut cells = vec![(BTreeMap::new(), base.clone())];
    for (name, setters) in &axes {
        let mut next = Vec::with_capacity(cells.len() * setters.len());
        for (params, config) in &cells {
            for (label, set) in setters {
                let mut config = config.clone();
                set(&mut config)?;
                let mut params = params.clone();
                params.insert(name.clone(), label.clone());
                next.push((params, config));
            }
        }
        cells = next;
    }
    cells
        .into_iter()
        .enumerate()
        .map(|(index, (params, config))| {
            config.validate()?;
            Ok(SweepCell { index, params, config })
        })
        .collect()
}

/// One row of the sweep summary table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub cell: usize,
    pub algorithm: String,
    pub planes: usize,
    pub sats_per_plane: usize,
    pub gossip_rounds: usize,
    pub links: String,
    pub tx_power_dbm: f64,
    pub alpha: Option<f64>,
    pub seed: u64,
    pub final_loss: f64,
    pub final_consensus_error: f64,
    pub total_bytes: u64,
    pub lambda_a: f64,
    pub lambda_r: f64,
    pub lambda_a_lambda_r_pow_c: f64,
    pub lambda_consensus: f64,
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub cell: SweepCell,
    pub metrics: Vec<RoundMetrics>,
    pub summary: SweepSummary,
}

fn links_label(config: &ExperimentConfig) -> String {
    match (config.consensus.links, config.link.success_prob_override) {
        (LinkMode::Reliable, _) => "reliable".into(),
        (LinkMode::Pinned, _) => format!("p={}", config.consensus.pinned_p),
        (LinkMode::Physical, Some(p)) => format!("p={p}"),
        (LinkMode::Physical, None) => "physical".into(),
    }
}

/// Runs every cell of the grid.
pub fn sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<Vec<SweepOutcome>> {
    let cells = expand_grid(base, grid)?;
    cells
        .into_iter()
        .map(|cell| {
            let mut sim = Simulation::new(&cell.config)?;
            let spectrum = sim.spectrum()?;
            let initial = sim.evaluate()?;
            let metrics: Vec<RoundMetrics> =
                (0..cell.config.training.rounds).map(|_| sim.step()).collect::<Result<_>>()?;
            let last = metrics.last().unwrap_or(&initial);
            let c = &cell.config;
            let summary = SweepSummary {
                cell: cell.index,
                algorithm: c.algorithm.name().into(),
                planes: c.constellation.planes,
                sats_per_plane: c.constellation.sats_per_plane,
                gossip_rounds: c.consensus.gossip_rounds,
                links: links_label(c),
                tx_power_dbm: c.link.tx_power_dbm,
                alpha: (c.training.partition == PartitionKind::Dirichlet).then_some(c.training.alpha),
                seed: c.seed,
                final_loss: last.global_loss,
                final_consensus_error: last.consensus_error,
                total_bytes: last.bytes_intra + last.bytes_inter,
                lambda_a: spectrum.lambda_a,
                lambda_r: spectrum.lambda_r,
                lambda_a_lambda_r_pow_c: spectrum.lambda_a_times_lambda_r_pow_c,
                lambda_consensus: spectrum.lambda_consensus,
            };
            Ok(SweepOutcome { cell, metrics, summary })
        })
        .collect()
}

/// Writes `cell_NNN.csv` per cell and `summary.csv`.
pub fn write_sweep(outcomes: &[SweepOutcome], out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    for o in outcomes {
        let path = out_dir.join(format!("cell_{:03}.csv", o.cell.index));
        write_metrics(&o.metrics, &path, MetricsFormat::Csv)?;
    }
    let mut w = csv::Writer::from_path(out_dir.join("summary.csv"))?;
    for o in outcomes {
        w.serialize(&o.summary)?;
    }
    w.flush()?;
    Ok(())
}

/// Spectral summary for a configuration without running it.
pub fn config_spectrum(config: &ExperimentConfig) -> Result<ConsensusSpectrum> {
    Simulation::new(config)?.spectrum()
}
