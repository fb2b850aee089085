//! Seed derivation for the named random streams.
//!
//! Every random draw in a run comes from one of a few named streams
//! (topology, data, compression, activation). Each stream seed is derived
//! from the master seed and a fixed label, so the streams are independent
//! of each other and of how long a run lasts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub const TOPOLOGY: &str = "topology";
pub const DATA: &str = "data";
pub const COMPRESSION: &str = "compression";
pub const ACTIVATION: &str = "activation";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mix a seed with a sequence of words into a new, well-spread seed.
pub fn mix(seed: u64, words: &[u64]) -> u64 {
    words
        .iter()
        .fold(splitmix64(seed), |acc, &w| splitmix64(acc ^ splitmix64(w)))
}

fn label_word(label: &str) -> u64 {
    // FNV-1a, fixed so that labels map to the same word on every platform.
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Seed of the named stream `label` under `master`.
pub fn stream_seed(master: u64, label: &str) -> u64 {
    mix(master, &[label_word(label)])
}

pub fn stream(master: u64, label: &str) -> StreamRng {
    StreamRng::seed_from_u64(stream_seed(master, label))
}

/// Which message of an agent a compression draw belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// The compressed decision-variable difference `x - u` (pull side).
    Pull = 0,
    /// The compressed tracker `y` (push side).
    Push = 1,
}

/// Compression randomness, split per (agent, iteration, direction).
///
/// Each message gets its own generator, so a run can be replayed from any
/// iteration and CPP and B-CPP draw from comparable streams.
#[derive(Debug, Clone, Copy)]
pub struct CompressionStreams {
    seed: u64,
}

impl CompressionStreams {
    pub fn new(master: u64) -> Self {
        Self {
            seed: stream_seed(master, COMPRESSION),
        }
    }

    pub fn rng(&self, agent: usize, iter: usize, direction: Direction) -> StreamRng {
        StreamRng::seed_from_u64(mix(self.seed, &[agent as u64, iter as u64, direction as u64]))
    }
}
