//! Constellation graph and static satellite geometry.
//!
//! A constellation of `M` planes with `K` satellites each is modelled as a 2D
//! torus: every satellite links to its ring neighbours in its own plane and
//! to the same-slot satellite in the two adjacent planes. Degenerate sizes
//! collapse duplicate neighbours (`K = 2`, `M = 2`) and drop absent ones
//! (`K = 1`, `M = 1`).
//!
//! Satellites are indexed plane-major: `index = plane * K + slot`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use crate::error::{Error, Result};

pub const EARTH_RADIUS_M: f64 = 6371e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SatelliteId {
    pub plane: usize,
    pub slot: usize,
}

impl SatelliteId {
    pub fn new(plane: usize, slot: usize) -> Self {
        SatelliteId { plane, slot }
    }
}

impl std::fmt::Display for SatelliteId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.plane, self.slot)
    }
}

/// Geometry and sizing of a Walker-style constellation. Angles in radians,
/// lengths in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationConfig {
    pub num_planes: usize,
    pub sats_per_plane: usize,
    pub altitude: f64,
    pub inclination: f64,
    /// Total right-ascension span shared out evenly across planes.
    pub raan_spread: f64,
    /// Extra in-plane anomaly added per plane index.
    pub phase_offset: f64,
    pub earth_radius: f64,
    /// When set, every link reports this distance instead of the geometric one.
    pub link_distance_override: Option<f64>,
}

impl Default for ConstellationConfig {
    fn default() -> Self {
        ConstellationConfig {
            num_planes: 10,
            sats_per_plane: 10,
            altitude: 604e3,
            inclination: 143f64.to_radians(),
            raan_spread: 2.0 * PI,
            phase_offset: 0.0,
            earth_radius: EARTH_RADIUS_M,
            link_distance_override: None,
        }
    }
}

impl ConstellationConfig {
    pub fn new(num_planes: usize, sats_per_plane: usize) -> Self {
        ConstellationConfig {
            num_planes,
            sats_per_plane,
            ..Default::default()
        }
    }

    pub fn num_satellites(&self) -> usize {
        self.num_planes * self.sats_per_plane
    }

    pub fn orbit_radius(&self) -> f64 {
        self.earth_radius + self.altitude
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_planes < 1 || self.sats_per_plane < 1 {
            return Err(Error::Config(format!(
                "constellation needs at least one plane and one satellite per plane (got M={}, K={})",
                self.num_planes, self.sats_per_plane
            )));
        }
        if !(self.altitude > 0.0) {
            return Err(Error::Config("altitude must be positive".into()));
        }
        if !(self.raan_spread > 0.0 && self.raan_spread <= 2.0 * PI + 1e-12) {
            return Err(Error::Config("raan_spread must lie in (0, 2π]".into()));
        }
        if let Some(d) = self.link_distance_override {
            if !(d > 0.0) {
                return Err(Error::Config("link distance override must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn contains(&self, sat: SatelliteId) -> bool {
        sat.plane < self.num_planes && sat.slot < self.sats_per_plane
    }

    fn check(&self, sat: SatelliteId) -> Result<()> {
        if self.contains(sat) {
            Ok(())
        } else {
            Err(Error::UnknownSatellite {
                plane: sat.plane,
                slot: sat.slot,
            })
        }
    }

    pub fn index(&self, sat: SatelliteId) -> usize {
        sat.plane * self.sats_per_plane + sat.slot
    }

    pub fn id(&self, index: usize) -> SatelliteId {
        SatelliteId::new(index / self.sats_per_plane, index % self.sats_per_plane)
    }

    pub fn satellites(&self) -> impl Iterator<Item = SatelliteId> + '_ {
        (0..self.num_satellites()).map(move |i| self.id(i))
    }
}

/// Up to four distinct neighbours of a satellite.
///
/// Duplicates are reported once: with `K = 2` only `intra_prev` is set, with
/// `M = 2` only `inter_left` is set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbors {
    pub intra_prev: Option<SatelliteId>,
    pub intra_next: Option<SatelliteId>,
    pub inter_left: Option<SatelliteId>,
    pub inter_right: Option<SatelliteId>,
}

impl Neighbors {
    pub fn intra(&self) -> impl Iterator<Item = SatelliteId> {
        self.intra_prev.into_iter().chain(self.intra_next)
    }

    pub fn inter(&self) -> impl Iterator<Item = SatelliteId> {
        self.inter_left.into_iter().chain(self.inter_right)
    }

    pub fn all(&self) -> impl Iterator<Item = SatelliteId> {
        self.intra().chain(self.inter())
    }

    pub fn degree(&self) -> usize {
        self.all().count()
    }
}

/// Distinct ring neighbours of `i` on a ring of `n` positions: (prev, next).
pub(crate) fn ring_neighbors(i: usize, n: usize) -> (Option<usize>, Option<usize>) {
    match n {
        0 | 1 => (None, None),
        2 => (Some(1 - i), None),
        _ => (Some((i + n - 1) % n), Some((i + 1) % n)),
    }
}

#[derive(Debug, Clone)]
pub struct ConstellationGraph {
    pub config: ConstellationConfig,
    pub intra_edges: BTreeSet<(SatelliteId, SatelliteId)>,
    pub inter_edges: BTreeSet<(SatelliteId, SatelliteId)>,
}

fn unordered(a: SatelliteId, b: SatelliteId) -> (SatelliteId, SatelliteId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn build_constellation(config: &ConstellationConfig) -> Result<ConstellationGraph> {
    config.validate()?;
    let mut intra_edges = BTreeSet::new();
    let mut inter_edges = BTreeSet::new();
    for sat in config.satellites() {
        let n = neighbors_unchecked(config, sat);
        for other in n.intra() {
            intra_edges.insert(unordered(sat, other));
        }
        for other in n.inter() {
            inter_edges.insert(unordered(sat, other));
        }
    }
    Ok(ConstellationGraph {
        config: config.clone(),
        intra_edges,
        inter_edges,
    })
}

fn neighbors_unchecked(config: &ConstellationConfig, sat: SatelliteId) -> Neighbors {
    let (k_prev, k_next) = ring_neighbors(sat.slot, config.sats_per_plane);
    let (m_left, m_right) = ring_neighbors(sat.plane, config.num_planes);
    Neighbors {
        intra_prev: k_prev.map(|k| SatelliteId::new(sat.plane, k)),
        intra_next: k_next.map(|k| SatelliteId::new(sat.plane, k)),
        inter_left: m_left.map(|m| SatelliteId::new(m, sat.slot)),
        inter_right: m_right.map(|m| SatelliteId::new(m, sat.slot)),
    }
}

impl ConstellationGraph {
    pub fn num_nodes(&self) -> usize {
        self.config.num_satellites()
    }

    pub fn neighbors(&self, sat: SatelliteId) -> Result<Neighbors> {
        self.config.check(sat)?;
        Ok(neighbors_unchecked(&self.config, sat))
    }

    pub fn degree(&self, sat: SatelliteId) -> Result<usize> {
        Ok(self.neighbors(sat)?.degree())
    }
}

/// Earth-centred position of a satellite on its circular orbit at the fixed
/// snapshot epoch.
pub fn satellite_position(config: &ConstellationConfig, sat: SatelliteId) -> Result<[f64; 3]> {
    config.check(sat)?;
    let m = sat.plane as f64;
    let raan = m * config.raan_spread / config.num_planes as f64;
    let anomaly =
        2.0 * PI * sat.slot as f64 / config.sats_per_plane as f64 + m * config.phase_offset;
    let r = config.orbit_radius();
    // in-plane position, tilted about x by the inclination, then rotated about z by the RAAN
    let (x0, y0) = (r * anomaly.cos(), r * anomaly.sin());
    let (ci, si) = (config.inclination.cos(), config.inclination.sin());
    let (x1, y1, z1) = (x0, y0 * ci, y0 * si);
    let (co, so) = (raan.cos(), raan.sin());
    Ok([co * x1 - so * y1, so * x1 + co * y1, z1])
}

pub fn link_distance(config: &ConstellationConfig, a: SatelliteId, b: SatelliteId) -> Result<f64> {
    config.check(a)?;
    config.check(b)?;
    if a == b {
        return Err(Error::InvalidArgument(format!(
            "link distance requested from {a} to itself"
        )));
    }
    if let Some(d) = config.link_distance_override {
        return Ok(d);
    }
    let pa = satellite_position(config, a)?;
    let pb = satellite_position(config, b)?;
    Ok(pa
        .iter()
        .zip(pb.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}
