//! Seeded random streams.
//!
//! Every random draw goes through ChaCha8, a counter-based generator whose
//! output is fixed across platforms. Work that is split per task or per
//! subject gets its own stream, keyed by `(seed, purpose, index)`, so results
//! do not depend on how the work is scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Stream purposes. Distinct purposes never share a stream for the same seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Setup = 1,
    Task = 2,
    Subject = 3,
    Injection = 4,
}

/// Independent stream for item `index` of the given purpose.
pub fn stream(seed: u64, purpose: Purpose, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) ^ index);
    rng
}
