//! Deterministic randomness.
//!
//! Every randomized tactic draws from [`SplitMix64`] so that a fixed [`Seed`]
//! reproduces the same sample path in any implementation of the algorithm.

use serde::{Deserialize, Serialize};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_2: u64 = 0x94D0_49BB_1331_11EB;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// User-facing 64-bit seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn rng(self) -> SplitMix64 {
        SplitMix64::new(self.0)
    }

    /// Sub-seed for a pipeline node: one SplitMix64 output from
    /// `seed ^ fnv1a64(node_id)`.
    pub fn for_node(self, node_id: &str) -> Seed {
        let (z, _) = splitmix64(self.0 ^ fnv1a64(node_id.as_bytes()));
        Seed(z)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// One SplitMix64 step: returns `(output, next_state)`.
pub fn splitmix64(state: u64) -> (u64, u64) {
    let state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = state;
    z = (z ^ (z >> 30)).wrapping_mul(MIX_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_2);
    (z ^ (z >> 31), state)
}

/// Maps the high 53 bits of a 64-bit word onto `[0, 1)`.
#[inline]
pub fn unit_f64(z: u64) -> f64 {
    (z >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Pure form of the generator: uniform value in `[0, 1)` and the next state.
pub fn rng_next(state: u64) -> (f64, u64) {
    let (z, next) = splitmix64(state);
    (unit_f64(z), next)
}

/// FNV-1a, 64-bit. Stable across platforms and releases.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(state: u64) -> Self {
        SplitMix64 { state }
    }

    pub fn state(&self) -> u64 {
        self.state
    }

    pub fn next_u64(&mut self) -> u64 {
        let (z, next) = splitmix64(self.state);
        self.state = next;
        z
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        unit_f64(self.next_u64())
    }

    /// Uniform in the open interval `(0, 1)`: the 53-bit lattice shifted by
    /// half a step, so neither endpoint can occur.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform index in `0..bound`. `bound` must be positive.
    pub fn next_index(&mut self, bound: usize) -> usize {
        let j = (self.next_f64() * bound as f64) as usize;
        j.min(bound - 1)
    }

    /// Standard normal via Box–Muller (cosine branch only; one draw per call).
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_open01();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
