//! Named random streams derived from one root seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A node in a tree of seeds. Children are addressed by name, so adding a
/// new consumer never shifts the streams of existing ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedTree {
    seed: u64,
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        SeedTree { seed: root }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn child(&self, name: &str) -> SeedTree {
        SeedTree { seed: mix(self.seed ^ fnv1a(name.as_bytes())) }
    }

    pub fn index(&self, i: u64) -> SeedTree {
        SeedTree { seed: mix(self.seed ^ mix(i.wrapping_add(0x6a09_e667_f3bc_c909))) }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    pub fn stream(&self, name: &str) -> ChaCha8Rng {
        self.child(name).rng()
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

fn mix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}
