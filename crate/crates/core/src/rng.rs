//! Counter-based random substreams.
//!
//! Every random quantity in a simulation is addressed by a path of labels
//! (round, stage, ...) plus an index (user, advertiser, bootstrap draw). The
//! path is hashed into a ChaCha key and the index selects the ChaCha stream,
//! so a draw never depends on evaluation order or on how work is split
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stage labels. Each stage gets its own stream so that changing how many
/// values one stage consumes never shifts another.
pub mod stage {
    pub const GENDER: u64 = 0x01;
    pub const FOCAL_RATE: u64 = 0x02;
    pub const RATES: u64 = 0x03;
    pub const BIDS: u64 = 0x04;
    pub const NOISE: u64 = 0x05;
    pub const THRESHOLD: u64 = 0x06;
    pub const COMPETITOR: u64 = 0x07;
    pub const CLICK: u64 = 0x08;
    pub const BOOTSTRAP: u64 = 0x10;
    pub const ARM: u64 = 0x20;
    pub const ROUND: u64 = 0x30;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Substreams {
    key: u64,
}

impl Substreams {
    pub fn new(seed: u64) -> Self {
        Substreams { key: mix64(seed ^ 0x6A09_E667_F3BC_C908) }
    }

    /// Derive an independent family identified by `label`.
    pub fn child(&self, label: u64) -> Self {
        Substreams { key: mix64(self.key ^ mix64(label.wrapping_add(0x9E37_79B9_7F4A_7C15))) }
    }

    /// Streams for Monte Carlo round `round`.
    pub fn round(&self, round: u64) -> Self {
        self.child(stage::ROUND).child(round)
    }

    /// Generator for `(stage, index)`, e.g. the noise draws of user `index`.
    pub fn rng(&self, stage: u64, index: u64) -> ChaCha8Rng {
        let base = self.child(stage).key;
        let mut seed = [0u8; 32];
        let mut state = base;
        for chunk in seed.chunks_exact_mut(8) {
            state = mix64(state.wrapping_add(0x9E37_79B9_7F4A_7C15));
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(index);
        rng
    }

    /// Keyed generator for one stage, reusable across many indices.
    pub fn stage(&self, stage: u64) -> StageStreams {
        StageStreams { base: self.rng(stage, 0) }
    }
}

/// All index streams of one stage. `at(i)` equals `Substreams::rng(stage, i)`.
#[derive(Debug, Clone)]
pub struct StageStreams {
    base: ChaCha8Rng,
}

impl StageStreams {
    pub fn at(&self, index: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(index);
        rng
    }
}

impl From<u64> for Substreams {
    fn from(seed: u64) -> Self {
        Substreams::new(seed)
    }
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
