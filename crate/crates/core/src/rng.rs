//! Deterministic random substreams.
//!
//! Every consumer of randomness (one SDE path, one field sample, one
//! bootstrap) owns a ChaCha stream derived from `(seed, purpose, index)`, so
//! results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent consumers of a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Brownian = 0,
    Bridge = 1,
    Field = 2,
    Bootstrap = 3,
    Evaluation = 4,
}

/// Returns the generator for the `index`-th consumer of `purpose` under `seed`.
pub fn substream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((purpose as u64) << 56));
    rng.set_stream(index);
    rng
}
