//! Named random substreams.
//!
//! Every random draw in a run is taken from a stream addressed by a path of
//! integers (round, satellite, link, ...) hashed together with the run seed.
//! Two draws never share a stream, so results do not depend on the order in
//! which satellites are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream domains. Keeping them in one place avoids accidental collisions.
pub mod domain {
    pub const DATA: u64 = 1;
    pub const PARTITION: u64 = 2;
    pub const LOCAL_UPDATE: u64 = 3;
    pub const GOSSIP: u64 = 4;
    pub const RETRANSMIT: u64 = 5;
    pub const HETEROGENEITY: u64 = 6;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A position in the stream tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey(u64);

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        StreamKey(splitmix64(seed))
    }

    pub fn child(self, label: u64) -> Self {
        StreamKey(splitmix64(self.0 ^ splitmix64(label.wrapping_add(0x5851_F42D_4C95_7F2D))))
    }

    pub fn path(self, labels: &[u64]) -> Self {
        labels.iter().fold(self, |k, &l| k.child(l))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    pub fn value(self) -> u64 {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn children_are_distinct_and_stable() {
        let root = StreamKey::root(7);
        assert_eq!(root.child(1), StreamKey::root(7).child(1));
        assert_ne!(root.child(1), root.child(2));
        assert_ne!(root.path(&[1, 2]), root.path(&[2, 1]));
        let a: u64 = root.child(3).rng().random();
        let b: u64 = root.child(3).rng().random();
        assert_eq!(a, b);
    }
}
