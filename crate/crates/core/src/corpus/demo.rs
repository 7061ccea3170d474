//! Ramp-then-flat test signal used to contrast one-sample differences with
//! windowed regression derivatives under additive noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEMO_LEN: usize = 400;
const RAMP_LEN: usize = 200;

/// `[1, 2, ..., 200, 200 x 200] + U[0, 1)` noise, seeded.
pub fn demo_signal(seed: u64) -> Vec<f64> {
    demo_signal_with_amplitude(seed, 1.0)
}

/// Same skeleton with the uniform noise scaled by `amplitude`; amplitude 0
/// gives the noiseless skeleton.
pub fn demo_signal_with_amplitude(seed: u64, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..DEMO_LEN)
        .map(|i| {
            let skeleton = if i < RAMP_LEN {
                (i + 1) as f64
            } else {
                RAMP_LEN as f64
            };
            let noise: f64 = rng.random();
            skeleton + amplitude * noise
        })
        .collect()
}
