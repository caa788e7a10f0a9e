//! Named random streams split from a single master seed.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed and
//! separated by its stream id, so draws on one stream never shift draws on
//! another no matter how work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Init = 0,
    Selection = 1,
    Variation = 2,
    TieBreak = 3,
    Bootstrap = 4,
}

pub fn stream(master_seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(which as u64);
    rng
}

/// Stream set owned by one run's orchestrator.
#[derive(Debug, Clone)]
pub struct Streams {
    pub init: Rng,
    pub selection: Rng,
    pub variation: Rng,
    pub tie_break: Rng,
}

impl Streams {
    pub fn new(master_seed: u64) -> Self {
        Self {
            init: stream(master_seed, Stream::Init),
            selection: stream(master_seed, Stream::Selection),
            variation: stream(master_seed, Stream::Variation),
            tie_break: stream(master_seed, Stream::TieBreak),
        }
    }
}
