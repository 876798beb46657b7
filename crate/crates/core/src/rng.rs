//! Seeded random streams.
//!
//! Every run owns one ChaCha8 stream derived from `(master_seed, run_index)`,
//! so replicates are independent and reproducible on any platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type RngStream = ChaCha8Rng;

pub fn stream(master_seed: u64, run_index: u64) -> RngStream {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(run_index);
    rng
}
