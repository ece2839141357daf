//! Mixing matrices and their spectral analysis.
//!
//! All matrices are dense `n × n` with `n = M·K`, indexed plane-major like
//! [`ConstellationConfig::index`](crate::topology::ConstellationConfig::index).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::links::LinkProbabilities;
use crate::topology::ring_neighbors;
use crate::training::ModelVector;

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_STEPS: usize = 100_000;
const RITZ_BASIS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixKind {
    FullTorus,
    Intra,
    Inter,
    ExpectedInter,
    /// Products and powers of the above.
    Composite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixingMatrix {
    pub kind: MatrixKind,
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub entries: DMatrix<f64>,
}

impl MixingMatrix {
    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.entries.iter().all(|&x| (-tol..=1.0 + tol).contains(&x))
            && self
                .entries
                .row_iter()
                .all(|r| (r.sum() - 1.0).abs() <= tol)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let n = self.size();
        (0..n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    pub fn is_doubly_stochastic(&self, tol: f64) -> bool {
        self.is_row_stochastic(tol)
            && self
                .entries
                .column_iter()
                .all(|c| (c.sum() - 1.0).abs() <= tol)
    }

    /// Matrix product `self · rhs`.
    pub fn then_after(&self, rhs: &MixingMatrix) -> MixingMatrix {
        MixingMatrix {
            kind: MatrixKind::Composite,
            num_planes: self.num_planes,
            sats_per_plane: self.sats_per_plane,
            entries: &self.entries * &rhs.entries,
        }
    }

    pub fn pow(&self, exponent: usize) -> MixingMatrix {
        let n = self.size();
        let mut acc = DMatrix::identity(n, n);
        for _ in 0..exponent {
            acc = &acc * &self.entries;
        }
        MixingMatrix {
            kind: if exponent == 1 { self.kind } else { MatrixKind::Composite },
            num_planes: self.num_planes,
            sats_per_plane: self.sats_per_plane,
            entries: acc,
        }
    }

    /// Apply to stacked row vectors: `out[i] = Σ_j Q[i, j] · models[j]`.
    pub fn apply<V: AsRef<[f64]>>(&self, models: &[V]) -> Result<Vec<ModelVector>> {
        if models.len() != self.size() {
            return Err(Error::Dimension(format!(
                "{} models for a {}×{} mixing matrix",
                models.len(),
                self.size(),
                self.size()
            )));
        }
        let dim = models.first().map_or(0, |m| m.as_ref().len());
        Ok((0..self.size())
            .map(|i| {
                let mut out = ModelVector::zeros(dim);
                for (j, m) in models.iter().enumerate() {
                    let q = self.get(i, j);
                    if q != 0.0 {
                        out.axpy(q, m.as_ref());
                    }
                }
                out
            })
            .collect())
    }
}

fn check_sizes(sizes: &[f64], m: usize, k: usize) -> Result<()> {
    if m < 1 || k < 1 {
        return Err(Error::Config(format!("need M ≥ 1 and K ≥ 1, got M={m}, K={k}")));
    }
    if sizes.len() != m * k {
        return Err(Error::Dimension(format!(
            "{} data sizes for {} satellites",
            sizes.len(),
            m * k
        )));
    }
    if let Some(bad) = sizes.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "data sizes must be positive, got {bad}"
        )));
    }
    Ok(())
}

/// Row `i` gets weight `sizes[j] / Σ sizes[group]` on every `j` in `group`.
fn weighted_rows(
    kind: MatrixKind,
    sizes: &[f64],
    m: usize,
    k: usize,
    group: impl Fn(usize) -> Vec<usize>,
) -> MixingMatrix {
    let n = m * k;
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        let members = group(i);
        let mass: f64 = members.iter().map(|&j| sizes[j]).sum();
        for j in members {
            entries[(i, j)] = sizes[j] / mass;
        }
    }
    MixingMatrix {
        kind,
        num_planes: m,
        sats_per_plane: k,
        entries,
    }
}

/// Block-diagonal orbit-reduce operator: each plane averages to its
/// data-weighted mean.
pub fn intra_plane_matrix(sizes: &[f64], m: usize, k: usize) -> Result<MixingMatrix> {
    check_sizes(sizes, m, k)?;
    Ok(weighted_rows(MatrixKind::Intra, sizes, m, k, |i| {
        let plane = i / k;
        (plane * k..(plane + 1) * k).collect()
    }))
}

/// Gossip operator over same-slot satellites in the left, own and right
/// planes. With `M = 2` the single neighbour plane is counted once; with
/// `M = 1` the result is the identity.
pub fn inter_plane_matrix(sizes: &[f64], m: usize, k: usize) -> Result<MixingMatrix> {
    check_sizes(sizes, m, k)?;
    Ok(weighted_rows(MatrixKind::Inter, sizes, m, k, |i| {
        let (plane, slot) = (i / k, i % k);
        let (left, right) = ring_neighbors(plane, m);
        std::iter::once(plane)
            .chain(left)
            .chain(right)
            .map(|p| p * k + slot)
            .collect()
    }))
}

/// Expected gossip operator under packet loss with self-compensation: each
/// off-diagonal weight is scaled by the link's success probability and the
/// lost mass returns to the diagonal.
pub fn expected_inter_matrix(q_r: &MixingMatrix, probs: &LinkProbabilities) -> Result<MixingMatrix> {
    let n = q_r.size();
    if probs.num_satellites() != n {
        return Err(Error::Dimension(format!(
            "link table for {} satellites, matrix of size {n}",
            probs.num_satellites()
        )));
    }
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        let mut received = 0.0;
        for j in (0..n).filter(|&j| j != i) {
            let q = q_r.get(i, j);
            if q == 0.0 {
                continue;
            }
            let p = probs.get(i, j);
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
            }
            entries[(i, j)] = q * p;
            received += q * p;
        }
        entries[(i, i)] = 1.0 - received;
    }
    Ok(MixingMatrix {
        kind: MatrixKind::ExpectedInter,
        num_planes: q_r.num_planes,
        sats_per_plane: q_r.sats_per_plane,
        entries,
    })
}

/// Single-step consensus over the full torus neighbourhood (self included).
pub fn torus_mixing_matrix(sizes: &[f64], m: usize, k: usize) -> Result<MixingMatrix> {
    check_sizes(sizes, m, k)?;
    Ok(weighted_rows(MatrixKind::FullTorus, sizes, m, k, |i| {
        let (plane, slot) = (i / k, i % k);
        let (kp, kn) = ring_neighbors(slot, k);
        let (ml, mr) = ring_neighbors(plane, m);
        std::iter::once(i)
            .chain(kp.into_iter().chain(kn).map(|s| plane * k + s))
            .chain(ml.into_iter().chain(mr).map(|p| p * k + slot))
            .collect()
    }))
}

fn centered(q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = q.nrows();
    q.map(|x| x - 1.0 / n as f64)
}

/// Largest singular value of a square matrix by power iteration on `AᵀA`.
///
/// The iteration stops once the Rayleigh quotient changes by less than a
/// relative 1e-10. The estimate is then refined by Rayleigh-Ritz on a short
/// Krylov basis grown from the final iterate, which resolves slowly decaying
/// modes the plain iteration leaves behind.
pub fn operator_norm(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.ncols();
    if n == 0 {
        return Ok(0.0);
    }
    let apply = |v: &DVector<f64>| a.transpose() * (a * v);
    // fixed, irregular start so the iteration is deterministic and unlikely
    // to be orthogonal to the top singular vector
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 1.618_033_988_7 + 0.3).sin());
    v /= v.norm();
    let mut prev = f64::NAN;
    let mut converged = false;
    for _ in 0..POWER_MAX_STEPS {
        let w = apply(&v);
        let rayleigh = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 || rayleigh == 0.0 {
            return Ok(0.0);
        }
        let settled = (rayleigh - prev).abs() <= POWER_TOL * rayleigh;
        prev = rayleigh;
        if settled {
            converged = true;
            break;
        }
        v = w / wn;
    }
    if !converged {
        return Err(Error::NoConvergence(POWER_MAX_STEPS));
    }
    Ok(ritz_refine(&apply, v, prev).sqrt())
}

/// Largest Ritz value of `B` on `span{v, Bv, ..., B^(m-1) v}`, never below
/// `floor`.
fn ritz_refine(apply: &dyn Fn(&DVector<f64>) -> DVector<f64>, v: DVector<f64>, floor: f64) -> f64 {
    let mut basis: Vec<DVector<f64>> = vec![v];
    while basis.len() < RITZ_BASIS.min(basis[0].len()) {
        let mut next = apply(basis.last().expect("basis is non-empty"));
        let scale = next.norm();
        // two passes of Gram-Schmidt keep the basis orthonormal
        for _ in 0..2 {
            for b in &basis {
                next -= b * b.dot(&next);
            }
        }
        let norm = next.norm();
        if norm <= 1e-12 * scale || norm == 0.0 {
            break;
        }
        basis.push(next / norm);
    }
    let images: Vec<DVector<f64>> = basis.iter().map(apply).collect();
    let m = basis.len();
    let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (basis[i].dot(&images[j]) + basis[j].dot(&images[i])));
    h.symmetric_eigenvalues().max().max(floor)
}

/// `λ = ‖Q − J‖₂` with `J = 𝟙𝟙ᵀ/n`.
pub fn spectral_lambda(q: &MixingMatrix) -> Result<f64> {
    operator_norm(&centered(&q.entries))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContractionReport {
    pub lambda: f64,
    /// `(t, ‖Qᵗ − J‖, λᵗ)` for `t = 1..=t_max`.
    pub steps: Vec<(usize, f64, f64)>,
    pub holds: bool,
}

impl ContractionReport {
    pub fn margins(&self) -> impl Iterator<Item = f64> + '_ {
        self.steps.iter().map(|&(_, norm, bound)| bound - norm)
    }
}

pub const CONTRACTION_SLACK: f64 = 1e-9;

/// Resolution at which two computed spectral norms of stochastic matrices
/// can be told apart; equal norms may differ by a few ulps.
pub const SPECTRAL_ACCURACY: f64 = 1e-12;

/// Check `‖Qᵗ − J‖ ≤ λᵗ + 1e-9` for `t = 1..=t_max` against a supplied `λ`.
pub fn contraction_against(q: &MixingMatrix, lambda: f64, t_max: usize) -> Result<ContractionReport> {
    if t_max < 1 {
        return Err(Error::InvalidArgument("t_max must be at least 1".into()));
    }
    if !q.is_symmetric(1e-12) {
        return Err(Error::InvalidArgument(
            "contraction check is defined for symmetric mixing matrices".into(),
        ));
    }
    let n = q.size();
    let mut power = DMatrix::identity(n, n);
    let mut steps = Vec::with_capacity(t_max);
    for t in 1..=t_max {
        power = &power * &q.entries;
        let norm = operator_norm(&centered(&power))?;
        steps.push((t, norm, lambda.powi(t as i32)));
    }
    let holds = steps
        .iter()
        .all(|&(_, norm, bound)| norm <= bound + CONTRACTION_SLACK);
    Ok(ContractionReport { lambda, steps, holds })
}

/// Check the contraction bound using `λ` of the matrix itself.
pub fn contraction_bound_check(q: &MixingMatrix, t_max: usize) -> Result<ContractionReport> {
    contraction_against(q, spectral_lambda(q)?, t_max)
}

/// Spectral summary of the two-phase consensus operator.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ConsensusSpectrum {
    #[serde(rename = "M")]
    pub num_planes: usize,
    #[serde(rename = "K")]
    pub sats_per_plane: usize,
    #[serde(rename = "C")]
    pub gossip_rounds: usize,
    pub lambda_a: f64,
    pub lambda_r: f64,
    pub lambda_a_times_lambda_r_pow_c: f64,
    /// `‖E{Q_r}^C · Q_a − J‖₂`, the contraction of one whole consensus step.
    pub lambda_consensus: f64,
}

pub fn consensus_spectrum(
    sizes: &[f64],
    m: usize,
    k: usize,
    gossip_rounds: usize,
    probs: &LinkProbabilities,
) -> Result<ConsensusSpectrum> {
    let q_a = intra_plane_matrix(sizes, m, k)?;
    let e_q_r = expected_inter_matrix(&inter_plane_matrix(sizes, m, k)?, probs)?;
    let lambda_a = spectral_lambda(&q_a)?;
    let lambda_r = spectral_lambda(&e_q_r)?;
    let step = e_q_r.pow(gossip_rounds).then_after(&q_a);
    Ok(ConsensusSpectrum {
        num_planes: m,
        sats_per_plane: k,
        gossip_rounds,
        lambda_a,
        lambda_r,
        lambda_a_times_lambda_r_pow_c: lambda_a * lambda_r.powi(gossip_rounds as i32),
        lambda_consensus: spectral_lambda(&step)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::ConstellationConfig;
    use proptest::prelude::*;

    const ROW_SUM_TOL: f64 = 1e-12;

    fn svd_norm(a: &DMatrix<f64>) -> f64 {
        a.clone().singular_values().max()
    }

    #[test]
    fn intra_examples() {
        let q = intra_plane_matrix(&[1.0, 1.0, 1.0], 1, 3).unwrap();
        assert!(q.entries.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));

        let q = intra_plane_matrix(&[1.0, 3.0, 2.0, 2.0], 2, 2).unwrap();
        let expected = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.25, 0.75, 0.0, 0.0, //
                0.25, 0.75, 0.0, 0.0, //
                0.0, 0.0, 0.5, 0.5, //
                0.0, 0.0, 0.5, 0.5,
            ],
        );
        assert_eq!(q.entries, expected);

        let q = intra_plane_matrix(&[2.0, 5.0, 1.0], 3, 1).unwrap();
        assert_eq!(q.entries, DMatrix::identity(3, 3));

        assert!(intra_plane_matrix(&[1.0, 0.0], 1, 2).is_err());
        assert!(intra_plane_matrix(&[1.0, -1.0], 1, 2).is_err());
    }

    #[test]
    fn inter_examples() {
        let q = inter_plane_matrix(&[1.0; 5], 5, 1).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let d = (i + 5 - j) % 5;
                let expected = if d == 0 || d == 1 || d == 4 { 1.0 / 3.0 } else { 0.0 };
                assert!((q.get(i, j) - expected).abs() < 1e-15);
            }
        }
        let q = inter_plane_matrix(&[1.0; 4], 1, 4).unwrap();
        assert_eq!(q.entries, DMatrix::identity(4, 4));

        let q = inter_plane_matrix(&[1.0, 2.0, 3.0], 3, 1).unwrap();
        for (j, e) in [1.0 / 6.0, 2.0 / 6.0, 3.0 / 6.0].iter().enumerate() {
            assert!((q.get(0, j) - e).abs() < 1e-15);
        }

        // two planes: the single neighbour plane is weighted once
        let q = inter_plane_matrix(&[1.0, 1.0, 3.0, 1.0], 2, 2).unwrap();
        assert!((q.get(0, 2) - 0.75).abs() < 1e-15);
        assert!((q.get(0, 0) - 0.25).abs() < 1e-15);
        assert_eq!(q.get(0, 1), 0.0);
    }

    #[test]
    fn expected_inter_examples() {
        let cfg = ConstellationConfig::new(3, 1);
        let q_r = inter_plane_matrix(&[1.0; 3], 3, 1).unwrap();
        let e = expected_inter_matrix(&q_r, &LinkProbabilities::reliable(3)).unwrap();
        assert!((&e.entries - &q_r.entries).abs().max() < 1e-15);

        let e = expected_inter_matrix(&q_r, &LinkProbabilities::pinned(&cfg, 0.0).unwrap()).unwrap();
        assert_eq!(e.entries, DMatrix::identity(3, 3));

        let e = expected_inter_matrix(&q_r, &LinkProbabilities::pinned(&cfg, 0.5).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { 2.0 / 3.0 } else { 1.0 / 6.0 };
                assert!((e.get(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn torus_examples() {
        let q = torus_mixing_matrix(&[1.0; 16], 4, 4).unwrap();
        for i in 0..16 {
            let nz: Vec<f64> = q.entries.row(i).iter().copied().filter(|&x| x > 0.0).collect();
            assert_eq!(nz.len(), 5);
            assert!(nz.iter().all(|&x| (x - 0.2).abs() < 1e-15));
        }
        let q = torus_mixing_matrix(&[1.0; 4], 1, 4).unwrap();
        for i in 0..4 {
            let nz: Vec<f64> = q.entries.row(i).iter().copied().filter(|&x| x > 0.0).collect();
            assert_eq!(nz.len(), 3);
            assert!(nz.iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
        }
    }

    #[test]
    fn lambda_examples() {
        let j = MixingMatrix {
            kind: MatrixKind::Composite,
            num_planes: 1,
            sats_per_plane: 4,
            entries: DMatrix::from_element(4, 4, 0.25),
        };
        assert!(spectral_lambda(&j).unwrap() < 1e-12);
        let id = MixingMatrix {
            entries: DMatrix::identity(4, 4),
            ..j.clone()
        };
        assert!((spectral_lambda(&id).unwrap() - 1.0).abs() < 1e-10);

        let q = inter_plane_matrix(&[1.0; 5], 5, 1).unwrap();
        // circulant eigenvalue (1 + 2cos(2π/5)) / 3
        assert!((spectral_lambda(&q).unwrap() - 0.5393446629166316).abs() < 1e-9);
    }

    #[test]
    fn contraction_examples() {
        let j = MixingMatrix {
            kind: MatrixKind::Composite,
            num_planes: 1,
            sats_per_plane: 4,
            entries: DMatrix::from_element(4, 4, 0.25),
        };
        let r = contraction_bound_check(&j, 5).unwrap();
        assert!(r.holds);
        assert!(r.steps.iter().all(|&(_, n, b)| n < 1e-12 && b == 0.0));

        let q = inter_plane_matrix(&[1.0; 5], 5, 1).unwrap();
        let r = contraction_bound_check(&q, 20).unwrap();
        assert!(r.holds);
        for &(_, norm, bound) in &r.steps {
            assert!((norm - bound).abs() < 1e-9);
        }

        let asym = inter_plane_matrix(&[1.0, 2.0, 3.0], 3, 1).unwrap();
        assert!(contraction_bound_check(&asym, 3).is_err());
    }

    #[test]
    fn two_phase_contraction() {
        let cfg = ConstellationConfig::new(4, 4);
        let probs = LinkProbabilities::pinned(&cfg, 0.7).unwrap();
        let sizes = [1.0; 16];
        let q_a = intra_plane_matrix(&sizes, 4, 4).unwrap();
        let e = expected_inter_matrix(&inter_plane_matrix(&sizes, 4, 4).unwrap(), &probs).unwrap();
        let q = e.pow(2).then_after(&q_a);
        let s = consensus_spectrum(&sizes, 4, 4, 2, &probs).unwrap();
        let r = contraction_against(&q, s.lambda_a_times_lambda_r_pow_c, 10).unwrap();
        assert!(r.holds);
    }

    #[test]
    fn expected_inter_gap_single_slot() {
        // with one satellite per plane the gossip ring is connected
        for m in 2..7 {
            let cfg = ConstellationConfig::new(m, 1);
            let probs = LinkProbabilities::pinned(&cfg, 0.3).unwrap();
            let e = expected_inter_matrix(&inter_plane_matrix(&vec![1.0; m], m, 1).unwrap(), &probs)
                .unwrap();
            assert!(spectral_lambda(&e).unwrap() < 1.0 - 1e-6);
        }
    }

    #[test]
    fn plane_count_trend() {
        let mut prev = -1.0;
        for m in [1, 2, 4, 8] {
            let k = 16 / m;
            let s = consensus_spectrum(&[1.0; 16], m, k, 1, &LinkProbabilities::reliable(16)).unwrap();
            assert!(s.lambda_a_times_lambda_r_pow_c >= prev - SPECTRAL_ACCURACY);
            prev = s.lambda_a_times_lambda_r_pow_c;
        }
    }

    proptest! {
        #[test]
        fn constructed_matrices_are_row_stochastic(
            m in 1usize..6, k in 1usize..6,
            seed in proptest::collection::vec(0.1f64..10.0, 36),
        ) {
            let sizes = &seed[..m * k];
            for q in [
                intra_plane_matrix(sizes, m, k).unwrap(),
                inter_plane_matrix(sizes, m, k).unwrap(),
                torus_mixing_matrix(sizes, m, k).unwrap(),
            ] {
                prop_assert!(q.is_row_stochastic(ROW_SUM_TOL));
            }
            let q_r = inter_plane_matrix(sizes, m, k).unwrap();
            for i in 0..m * k {
                prop_assert!(q_r.entries.row(i).iter().filter(|&&x| x > 0.0).count() <= 3);
                for j in 0..m * k {
                    let same_plane = i / k == j / k;
                    let q_a = intra_plane_matrix(sizes, m, k).unwrap();
                    if !same_plane {
                        prop_assert_eq!(q_a.get(i, j), 0.0);
                    }
                }
            }
            let cfg = ConstellationConfig::new(m, k);
            let e = expected_inter_matrix(&q_r, &LinkProbabilities::pinned(&cfg, 0.4).unwrap()).unwrap();
            prop_assert!(e.is_row_stochastic(ROW_SUM_TOL));
        }

        #[test]
        fn uniform_sizes_give_doubly_stochastic(m in 1usize..6, k in 1usize..6, p in 0.0f64..=1.0) {
            let sizes = vec![1.0; m * k];
            let cfg = ConstellationConfig::new(m, k);
            let q_r = inter_plane_matrix(&sizes, m, k).unwrap();
            for q in [
                intra_plane_matrix(&sizes, m, k).unwrap(),
                torus_mixing_matrix(&sizes, m, k).unwrap(),
                expected_inter_matrix(&q_r, &LinkProbabilities::pinned(&cfg, p).unwrap()).unwrap(),
                q_r,
            ] {
                prop_assert!(q.is_symmetric(1e-15));
                prop_assert!(q.is_doubly_stochastic(ROW_SUM_TOL));
            }
        }

        #[test]
        fn power_iteration_matches_svd(m in 1usize..5, k in 1usize..5, c in 0usize..4,
                                       seed in proptest::collection::vec(0.5f64..4.0, 16)) {
            let sizes = &seed[..m * k];
            let q_a = intra_plane_matrix(sizes, m, k).unwrap();
            let q_r = inter_plane_matrix(sizes, m, k).unwrap();
            let q = q_r.pow(c).then_after(&q_a);
            let ours = spectral_lambda(&q).unwrap();
            let reference = svd_norm(&centered(&q.entries));
            prop_assert!((ours - reference).abs() <= 1e-6 * reference.max(1e-12) + 1e-12);
        }

        #[test]
        fn lambda_product_decreases_in_gossip_rounds(m in 3usize..9, p in 0.1f64..=1.0) {
            let cfg = ConstellationConfig::new(m, 1);
            let probs = LinkProbabilities::pinned(&cfg, p).unwrap();
            let sizes = vec![1.0; m];
            let s1 = consensus_spectrum(&sizes, m, 1, 1, &probs).unwrap();
            prop_assume!(s1.lambda_r < 1.0 && s1.lambda_a > 0.0);
            let s2 = consensus_spectrum(&sizes, m, 1, 2, &probs).unwrap();
            let s4 = consensus_spectrum(&sizes, m, 1, 4, &probs).unwrap();
            prop_assert!(s1.lambda_a_times_lambda_r_pow_c > s2.lambda_a_times_lambda_r_pow_c);
            prop_assert!(s2.lambda_a_times_lambda_r_pow_c > s4.lambda_a_times_lambda_r_pow_c);
        }
    }
}
