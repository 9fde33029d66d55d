//! Seeded random streams.
//!
//! Every stochastic component draws from xoshiro256++ seeded through
//! splitmix64, so a `(config, seed)` pair fully determines a run.

use rand::SeedableRng;
pub use rand_xoshiro::Xoshiro256PlusPlus as Rng64;

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// One output of the splitmix64 generator started at `x`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for run `run_index` of model `model_index` under `base_seed`.
pub fn derive_run_seed(base_seed: u64, model_index: u64, run_index: u64) -> u64 {
    base_seed ^ splitmix64((model_index << 40).wrapping_add(run_index))
}

pub fn rng_from_seed(seed: u64) -> Rng64 {
    Rng64::seed_from_u64(seed)
}

/// Independent named sub-streams of one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Reservoir,
    Init,
    Env,
    Policy,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Stream::Reservoir => 1,
            Stream::Init => 2,
            Stream::Env => 3,
            Stream::Policy => 4,
        }
    }
}

pub fn stream_seed(seed: u64, stream: Stream) -> u64 {
    splitmix64(seed ^ splitmix64(stream.tag()))
}

pub fn stream_rng(seed: u64, stream: Stream) -> Rng64 {
    rng_from_seed(stream_seed(seed, stream))
}
