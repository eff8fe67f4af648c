use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::Step;

pub type StepRng = ChaCha8Rng;

/// What a per-step random stream is used for. Each purpose gets its own
/// stream so spawning and evaluation can be reproduced independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Spawn,
    Evaluate,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Spawn => 0x5350_4157,
            Purpose::Evaluate => 0x4556_414c,
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Random stream for `(seed, step, purpose)`.
pub fn stream(seed: u64, step: Step, purpose: Purpose) -> StepRng {
    let mixed = splitmix64(splitmix64(seed) ^ splitmix64(u64::from(step) << 32 | purpose.tag()));
    ChaCha8Rng::seed_from_u64(mixed)
}
