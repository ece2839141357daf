//! Desk-scale learning tasks, data partitioning and local optimizers.
//!
//! Two task families are provided: ridge-regularized least squares (whose
//! global optimum is available from the normal equations) and logistic
//! regression on two Gaussian blobs.

use std::ops::{Deref, DerefMut};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding::{domain, StreamKey};

/// Flat parameter vector of one satellite.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelVector(pub Vec<f64>);

impl ModelVector {
    pub fn zeros(dim: usize) -> Self {
        ModelVector(vec![0.0; dim])
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// `self += a · other`
    pub fn axpy(&mut self, a: f64, other: &[f64]) {
        self.0.iter_mut().zip(other).for_each(|(s, o)| *s += a * o);
    }
}

impl Deref for ModelVector {
    type Target = Vec<f64>;
    fn deref(&self) -> &Vec<f64> {
        &self.0
    }
}

impl DerefMut for ModelVector {
    fn deref_mut(&mut self) -> &mut Vec<f64> {
        &mut self.0
    }
}

impl From<Vec<f64>> for ModelVector {
    fn from(v: Vec<f64>) -> Self {
        ModelVector(v)
    }
}

impl<'a> IntoIterator for &'a ModelVector {
    type Item = &'a f64;
    type IntoIter = std::slice::Iter<'a, f64>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl AsRef<[f64]> for ModelVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Unweighted mean of a set of models.
pub fn average(models: &[ModelVector]) -> ModelVector {
    let dim = models.first().map_or(0, |m| m.len());
    let mut out = ModelVector::zeros(dim);
    for m in models {
        out.axpy(1.0, m);
    }
    let n = models.len().max(1) as f64;
    out.iter_mut().for_each(|x| *x /= n);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    LeastSquares,
    Logistic,
}

/// A dataset with its loss. Features are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub kind: TaskKind,
    pub dim: usize,
    pub features: Vec<f64>,
    pub labels: Vec<f64>,
    pub regularization: f64,
    /// Hidden parameter the data was generated from, when known.
    pub ground_truth: Option<Vec<f64>>,
}

impl Task {
    pub fn new(
        kind: TaskKind,
        dim: usize,
        features: Vec<f64>,
        labels: Vec<f64>,
        regularization: f64,
    ) -> Result<Self> {
        if dim == 0 || labels.is_empty() || features.len() != dim * labels.len() {
            return Err(Error::Dimension(format!(
                "{} feature values for {} labels of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if !(regularization >= 0.0) {
            return Err(Error::InvalidArgument("regularization must be non-negative".into()));
        }
        Ok(Task {
            kind,
            dim,
            features,
            labels,
            regularization,
            ground_truth: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn subset(&self, indices: &[usize]) -> Task {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Task {
            kind: self.kind,
            dim: self.dim,
            features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            regularization: self.regularization,
            ground_truth: self.ground_truth.clone(),
        }
    }

    /// Mean loss and gradient over `batch` (indices may repeat).
    pub fn loss_and_gradient(&self, w: &[f64], batch: &[usize]) -> Result<(f64, ModelVector)> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty mini-batch".into()));
        }
        if w.len() != self.dim {
            return Err(Error::Dimension(format!(
                "model of length {} for a task of dimension {}",
                w.len(),
                self.dim
            )));
        }
        if let Some(&bad) = batch.iter().find(|&&i| i >= self.len()) {
            return Err(Error::InvalidArgument(format!(
                "sample index {bad} out of range for {} samples",
                self.len()
            )));
        }
        let mut loss = 0.0;
        let mut grad = ModelVector::zeros(self.dim);
        for &i in batch {
            let x = self.row(i);
            let y = self.labels[i];
            let z: f64 = x.iter().zip(w).map(|(a, b)| a * b).sum();
            let (l, scale) = match self.kind {
                TaskKind::LeastSquares => {
                    let r = z - y;
                    (0.5 * r * r, r)
                }
                TaskKind::Logistic => {
                    let margin = y * z;
                    (softplus(-margin), -y * sigmoid(-margin))
                }
            };
            loss += l;
            grad.axpy(scale, x);
        }
        let inv = 1.0 / batch.len() as f64;
        loss *= inv;
        grad.iter_mut().for_each(|g| *g *= inv);
        if self.regularization > 0.0 {
            loss += 0.5 * self.regularization * w.iter().map(|x| x * x).sum::<f64>();
            grad.axpy(self.regularization, w);
        }
        Ok((loss, grad))
    }

    pub fn full_loss_and_gradient(&self, w: &[f64]) -> Result<(f64, ModelVector)> {
        let all: Vec<usize> = (0..self.len()).collect();
        self.loss_and_gradient(w, &all)
    }

    /// Classification accuracy for logistic tasks; mean loss otherwise.
    pub fn test_metric(&self, w: &[f64]) -> Result<f64> {
        match self.kind {
            TaskKind::LeastSquares => Ok(self.full_loss_and_gradient(w)?.0),
            TaskKind::Logistic => {
                let correct = (0..self.len())
                    .filter(|&i| {
                        let z: f64 = self.row(i).iter().zip(w).map(|(a, b)| a * b).sum();
                        z * self.labels[i] > 0.0
                    })
                    .count();
                Ok(correct as f64 / self.len() as f64)
            }
        }
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Synthetic dataset. Least squares: standard-normal features, labels
/// `x·w* + noise·ε`. Logistic: balanced ±1 labels, features drawn around
/// `±μ` with spread `noise`.
pub fn generate_dataset(kind: TaskKind, n: usize, dim: usize, noise: f64, seed: u64) -> Result<Task> {
    if n == 0 || dim == 0 {
        return Err(Error::InvalidArgument(format!(
            "dataset needs n ≥ 1 and dim ≥ 1, got n={n}, dim={dim}"
        )));
    }
    if !(noise >= 0.0) {
        return Err(Error::InvalidArgument("noise level must be non-negative".into()));
    }
    let key = StreamKey::root(seed).child(domain::DATA);
    let mut rng = key.child(0).rng();
    let truth: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let mut rng = key.child(1).rng();
    let mut features = Vec::with_capacity(n * dim);
    let mut labels = Vec::with_capacity(n);
    match kind {
        TaskKind::LeastSquares => {
            for _ in 0..n {
                let x: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let eps: f64 = rng.sample(StandardNormal);
                labels.push(x.iter().zip(&truth).map(|(a, b)| a * b).sum::<f64>() + noise * eps);
                features.extend(x);
            }
        }
        TaskKind::Logistic => {
            let norm = truth.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
            let centre: Vec<f64> = truth.iter().map(|x| 1.5 * x / norm).collect();
            for _ in 0..n {
                let y = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                for c in &centre {
                    let e: f64 = rng.sample(StandardNormal);
                    features.push(y * c + noise * e);
                }
                labels.push(y);
            }
        }
    }
    let mut task = Task::new(kind, dim, features, labels, 0.0)?;
    task.ground_truth = Some(truth);
    Ok(task)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum PartitionMode {
    Iid,
    Dirichlet { alpha: f64 },
}

/// Spread of the per-satellite parameter offsets used to make regression
/// data heterogeneous. Smaller `alpha` gives larger offsets.
pub fn regression_dispersion(alpha: f64) -> f64 {
    0.2 / alpha
}

/// One satellite's share of the data.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub indices: Vec<usize>,
    pub task: Task,
}

pub fn partition_data(task: &Task, parts: usize, mode: PartitionMode, seed: u64) -> Result<Vec<Shard>> {
    if parts == 0 {
        return Err(Error::InvalidArgument("cannot partition into zero parts".into()));
    }
    if task.len() < parts {
        return Err(Error::InvalidArgument(format!(
            "{} samples cannot cover {parts} satellites",
            task.len()
        )));
    }
    let key = StreamKey::root(seed).child(domain::PARTITION);
    let mut rng = key.child(0).rng();
    let index_sets = match mode {
        PartitionMode::Iid => iid_split(task.len(), parts, &mut rng),
        PartitionMode::Dirichlet { alpha } => {
            if !(alpha > 0.0) {
                return Err(Error::InvalidArgument(format!("Dirichlet alpha must be positive, got {alpha}")));
            }
            match task.kind {
                TaskKind::Logistic => dirichlet_split(task, parts, alpha, &mut rng)?,
                TaskKind::LeastSquares => iid_split(task.len(), parts, &mut rng),
            }
        }
    };
    let mut shards: Vec<Shard> = index_sets
        .into_iter()
        .map(|mut indices| {
            indices.sort_unstable();
            let task = task.subset(&indices);
            Shard { indices, task }
        })
        .collect();
    if let (PartitionMode::Dirichlet { alpha }, TaskKind::LeastSquares) = (mode, task.kind) {
        // shift each satellite's labels as if generated from w* + δ
        let spread = regression_dispersion(alpha);
        for (s, shard) in shards.iter_mut().enumerate() {
            let mut rng = StreamKey::root(seed)
                .path(&[domain::HETEROGENEITY, s as u64])
                .rng();
            let delta: Vec<f64> = (0..task.dim)
                .map(|_| spread * rng.sample::<f64, _>(StandardNormal))
                .collect();
            for i in 0..shard.task.len() {
                let shift: f64 = shard.task.row(i).iter().zip(&delta).map(|(a, b)| a * b).sum();
                shard.task.labels[i] += shift;
            }
        }
    }
    Ok(shards)
}

fn iid_split<R: Rng>(n: usize, parts: usize, rng: &mut R) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut out = vec![Vec::with_capacity(n / parts + 1); parts];
    for (pos, i) in order.into_iter().enumerate() {
        out[pos % parts].push(i);
    }
    out
}

fn dirichlet_weights<R: Rng>(parts: usize, alpha: f64, rng: &mut R) -> Result<Vec<f64>> {
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let draws: Vec<f64> = (0..parts).map(|_| gamma.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        Ok(draws.into_iter().map(|d| d / total).collect())
    } else {
        Ok(vec![1.0 / parts as f64; parts])
    }
}

/// Per-class proportions across satellites drawn from Dir(α). Satellites
/// left empty take one sample from the currently largest shard.
fn dirichlet_split<R: Rng>(task: &Task, parts: usize, alpha: f64, rng: &mut R) -> Result<Vec<Vec<usize>>> {
    let mut classes: Vec<f64> = task.labels.clone();
    classes.sort_by(f64::total_cmp);
    classes.dedup();
    let mut out = vec![Vec::new(); parts];
    for class in classes {
        let mut members: Vec<usize> = (0..task.len()).filter(|&i| task.labels[i] == class).collect();
        members.shuffle(rng);
        let weights = dirichlet_weights(parts, alpha, rng)?;
        let mut cumulative = 0.0;
        let mut start = 0;
        for (s, w) in weights.iter().enumerate() {
            cumulative += w;
            let end = if s + 1 == parts {
                members.len()
            } else {
                ((cumulative * members.len() as f64).round() as usize).clamp(start, members.len())
            };
            out[s].extend_from_slice(&members[start..end]);
            start = end;
        }
    }
    while let Some(empty) = out.iter().position(Vec::is_empty) {
        let largest = (0..parts).max_by_key(|&s| out[s].len()).expect("parts > 0");
        let moved = out[largest].pop().expect("largest shard is non-empty");
        out[empty].push(moved);
    }
    Ok(out)
}

/// Sample-weighted global objective over all shards.
pub fn global_loss_and_gradient(tasks: &[Task], w: &[f64]) -> Result<(f64, ModelVector)> {
    let total: usize = tasks.iter().map(Task::len).sum();
    let mut loss = 0.0;
    let mut grad = ModelVector::zeros(w.len());
    for t in tasks {
        let (l, g) = t.full_loss_and_gradient(w)?;
        let weight = t.len() as f64 / total as f64;
        loss += weight * l;
        grad.axpy(weight, &g);
    }
    Ok((loss, grad))
}

/// Minimizer of the global least-squares objective via the normal equations.
pub fn least_squares_optimum(tasks: &[Task]) -> Result<ModelVector> {
    let first = tasks
        .first()
        .ok_or_else(|| Error::InvalidArgument("no tasks".into()))?;
    if tasks.iter().any(|t| t.kind != TaskKind::LeastSquares) {
        return Err(Error::InvalidArgument(
            "normal equations only apply to least-squares tasks".into(),
        ));
    }
    let d = first.dim;
    let total: usize = tasks.iter().map(Task::len).sum();
    let mut gram = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    for t in tasks {
        for i in 0..t.len() {
            let x = DVector::from_column_slice(t.row(i));
            gram += &x * x.transpose();
            rhs += &x * t.labels[i];
        }
    }
    gram /= total as f64;
    rhs /= total as f64;
    for i in 0..d {
        gram[(i, i)] += first.regularization;
    }
    let sol = gram
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("normal equations are singular".into()))?
        .solve(&rhs);
    Ok(ModelVector(sol.iter().copied().collect()))
}

/// Largest smoothness constant over the local objectives: top eigenvalue of
/// `XᵀX/n` (a quarter of it for logistic loss) plus the ridge weight.
pub fn smoothness_constant(tasks: &[Task]) -> f64 {
    tasks
        .iter()
        .map(|t| {
            let x = DMatrix::from_row_slice(t.len(), t.dim, &t.features);
            let curvature = (x.transpose() * &x / t.len() as f64).symmetric_eigenvalues().max();
            let scale = match t.kind {
                TaskKind::LeastSquares => 1.0,
                TaskKind::Logistic => 0.25,
            };
            scale * curvature + t.regularization
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub rounds: usize,
    pub sam_radius: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 0.1,
            lr_decay: 0.998,
            local_epochs: 5,
            batch_size: 64,
            rounds: 300,
            sam_radius: 0.01,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config("lr_decay must lie in (0, 1]".into()));
        }
        if self.local_epochs < 1 || self.batch_size < 1 {
            return Err(Error::Config("local_epochs and batch_size must be at least 1".into()));
        }
        if !(self.sam_radius >= 0.0) {
            return Err(Error::Config("sam_rho must be non-negative".into()));
        }
        Ok(())
    }

    /// `η₀ · decayᵗ`
    pub fn learning_rate_at(&self, round: usize) -> f64 {
        self.learning_rate * self.lr_decay.powi(round as i32)
    }
}

/// Result of a sequence of local steps.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalRun {
    pub model: ModelVector,
    pub gradient_evaluations: usize,
}

fn sample_batch<R: Rng + ?Sized>(n: usize, batch_size: usize, rng: &mut R) -> Vec<usize> {
    (0..batch_size).map(|_| rng.random_range(0..n)).collect()
}

/// `steps` SGD updates on mini-batches drawn with replacement.
pub fn local_sgd<R: Rng + ?Sized>(
    model: &ModelVector,
    task: &Task,
    steps: usize,
    lr: f64,
    batch_size: usize,
    rng: &mut R,
) -> Result<LocalRun> {
    let mut w = model.clone();
    for _ in 0..steps {
        let batch = sample_batch(task.len(), batch_size, rng);
        let (_, g) = task.loss_and_gradient(&w, &batch)?;
        w.axpy(-lr, &g);
    }
    Ok(LocalRun {
        model: w,
        gradient_evaluations: steps,
    })
}

/// One sharpness-aware step: gradient at `w + ρ·g/‖g‖`, applied at `w`.
pub fn sam_step(model: &ModelVector, task: &Task, lr: f64, rho: f64, batch: &[usize]) -> Result<ModelVector> {
    let (_, g) = task.loss_and_gradient(model, batch)?;
    let norm = g.norm();
    let mut perturbed = model.clone();
    if norm > 0.0 {
        perturbed.axpy(rho / norm, &g);
    }
    let (_, g_adv) = task.loss_and_gradient(&perturbed, batch)?;
    let mut w = model.clone();
    w.axpy(-lr, &g_adv);
    Ok(w)
}

/// `steps` SAM updates on fresh mini-batches.
pub fn local_sam<R: Rng + ?Sized>(
    model: &ModelVector,
    task: &Task,
    steps: usize,
    lr: f64,
    rho: f64,
    batch_size: usize,
    rng: &mut R,
) -> Result<LocalRun> {
    let mut w = model.clone();
    for _ in 0..steps {
        let batch = sample_batch(task.len(), batch_size, rng);
        w = sam_step(&w, task, lr, rho, &batch)?;
    }
    Ok(LocalRun {
        model: w,
        gradient_evaluations: 2 * steps,
    })
}
