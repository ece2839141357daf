//! Per-link packet success probabilities.

use crate::error::{Error, Result};
use crate::linkmodel::{success_probability, LinkBudgetParams};
use crate::topology::{build_constellation, link_distance, ConstellationConfig};

/// Dense table of success probabilities indexed by satellite index.
///
/// Entries for non-adjacent pairs are unused. Intra-plane links are always
/// reliable; only inter-plane links take a probability below one.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkProbabilities {
    n: usize,
    probs: Vec<f64>,
}

impl LinkProbabilities {
    pub fn reliable(num_satellites: usize) -> Self {
        LinkProbabilities {
            n: num_satellites,
            probs: vec![1.0; num_satellites * num_satellites],
        }
    }

    /// Every inter-plane link succeeds with the same probability `p`.
    pub fn pinned(config: &ConstellationConfig, p: f64) -> Result<Self> {
        Self::from_fn(config, |_, _| Ok(p))
    }

    /// Probabilities from the optical link budget at each link's geometric
    /// (or overridden) length.
    pub fn physical(config: &ConstellationConfig, params: &LinkBudgetParams) -> Result<Self> {
        params.validate()?;
        Self::from_fn(config, |a, b| {
            let d = link_distance(config, config.id(a), config.id(b))?;
            success_probability(params, d)
        })
    }

    fn from_fn(
        config: &ConstellationConfig,
        mut f: impl FnMut(usize, usize) -> Result<f64>,
    ) -> Result<Self> {
        let graph = build_constellation(config)?;
        let mut out = Self::reliable(config.num_satellites());
        for &(a, b) in &graph.inter_edges {
            let (i, j) = (config.index(a), config.index(b));
            let p = f(i, j)?;
            out.set(i, j, p)?;
        }
        Ok(out)
    }

    /// Set the probability of the undirected link `{i, j}`.
    pub fn set(&mut self, i: usize, j: usize, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "success probability {p} outside [0, 1]"
            )));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::Dimension(format!(
                "link ({i}, {j}) outside a table of {} satellites",
                self.n
            )));
        }
        self.probs[i * self.n + j] = p;
        self.probs[j * self.n + i] = p;
        Ok(())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.n + j]
    }

    pub fn num_satellites(&self) -> usize {
        self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinned_only_touches_inter_links() {
        let cfg = ConstellationConfig::new(3, 3);
        let lp = LinkProbabilities::pinned(&cfg, 0.25).unwrap();
        assert_eq!(lp.get(0, 3), 0.25);
        assert_eq!(lp.get(3, 0), 0.25);
        assert_eq!(lp.get(0, 1), 1.0);
        assert!(LinkProbabilities::pinned(&cfg, 1.5).is_err());
    }

    #[test]
    fn physical_uses_distance_override() {
        let cfg = ConstellationConfig {
            link_distance_override: Some(4.3106e6),
            ..ConstellationConfig::new(3, 2)
        };
        let lp = LinkProbabilities::physical(&cfg, &LinkBudgetParams::default()).unwrap();
        assert!((lp.get(0, 2) - 0.8876919621856892).abs() < 1e-9);
        assert_eq!(lp.get(0, 1), 1.0);
    }
}
