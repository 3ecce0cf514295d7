//! Seeded random streams.
//!
//! Every parallel unit of work (an agent, a restart, a draw) gets its own
//! stream derived from `(master seed, stage tag, unit index)`, so results do
//! not depend on how work is scheduled across threads.

use rand::distr::{Distribution, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Stage tags keep the streams of different pipeline stages disjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Covariates,
    Parameters,
    Simulation,
    SetOrder,
    DesignAgents,
    ContinuousLevels,
    Fedorov,
    PriorDraws,
    MixingDraws,
    Baseline,
    Custom(u64),
}

impl Stage {
    fn tag(self) -> u64 {
        match self {
            Stage::Covariates => 1,
            Stage::Parameters => 2,
            Stage::Simulation => 3,
            Stage::SetOrder => 4,
            Stage::DesignAgents => 5,
            Stage::ContinuousLevels => 6,
            Stage::Fedorov => 7,
            Stage::PriorDraws => 8,
            Stage::MixingDraws => 9,
            Stage::Baseline => 10,
            Stage::Custom(t) => 0x1000 + t,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A master seed from which independent substreams are derived.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SeedStream {
    seed: u64,
}

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A derived master seed for a nested stage.
    pub fn child(&self, stage: Stage) -> SeedStream {
        SeedStream::new(splitmix64(self.seed.rotate_left(17) ^ splitmix64(!stage.tag())))
    }

    /// Independent generator for unit `index` of `stage`.
    pub fn substream(&self, stage: Stage, index: u64) -> StreamRng {
        let key = splitmix64(self.seed ^ splitmix64(stage.tag()));
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        rng.set_stream(index);
        rng
    }
}

/// Uniform draw on the open interval (0, 1).
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Open01.sample(rng)
}

/// Uniform draw on [0, 1).
pub fn unit_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
