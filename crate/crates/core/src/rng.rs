//! Reproducible random streams.
//!
//! Every replica gets its own ChaCha stream selected by the replica index
//! under a common seed, so results never depend on which worker ran which
//! replica or in which order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

pub type Stream = ChaCha8Rng;

/// Independent stream number `replica` under `seed`.
pub fn replica_rng(seed: u64, replica: u64) -> Stream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    rng
}

/// Exponential waiting time with the given rate (infinite for rate 0).
pub fn exponential<T: Scalar, R: Rng + ?Sized>(rate: T, rng: &mut R) -> T {
    if !(rate > T::zero()) {
        return T::infinity();
    }
    // 1 - U lies in (0, 1], so the log is finite
    let u = 1.0 - rng.random::<f64>();
    T::of(-u.ln()) / rate
}
