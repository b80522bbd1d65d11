//! Seeded random streams.
//!
//! Every trial draws from its own ChaCha20 stream: the root seed fixes the
//! key and the trial index selects the stream, so results do not depend on
//! how trials are scheduled across threads.

use num_bigint::BigUint;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Identifier recorded in experiment configs and reports.
pub const ALGORITHM: &str = "chacha20";

pub fn stream(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform integer in `[0, 2^bits)`.
pub fn uniform_bits<R: RngCore + ?Sized>(rng: &mut R, bits: u64) -> BigUint {
    let words = bits.div_ceil(32) as usize;
    let mut digits: Vec<u32> = (0..words).map(|_| rng.next_u32()).collect();
    let rem = bits % 32;
    if rem != 0 {
        if let Some(last) = digits.last_mut() {
            *last &= (1u32 << rem) - 1;
        }
    }
    BigUint::new(digits)
}

/// Uniform `f64` in `[0, 1)`.
pub fn unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
