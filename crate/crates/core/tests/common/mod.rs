#![allow(dead_code)]

use randcs_core::numerics::SeededGaussianSource;
use randcs_core::sensing::{generate_binary_signal, Signal};

/// `s` entries of magnitude `magnitude` with random signs at uniformly random
/// positions.
pub fn signed_signal(seed: u64, n: usize, s: usize, magnitude: f64) -> Signal {
    let support = generate_binary_signal(seed, n, s).unwrap();
    let mut signs = SeededGaussianSource::new(seed, 0x5157_0000);
    let mut values = vec![0.0; n];
    for &i in support.support() {
        values[i] = if signs.next_uniform() < 0.5 { -magnitude } else { magnitude };
    }
    Signal::new(values)
}

/// `P[X ≥ m]` for `X ~ Binomial(r, p)`.
pub fn binomial_tail(r: usize, p: f64, m: usize) -> f64 {
    (m..=r)
        .map(|j| {
            let choose: f64 = (0..j).map(|i| (r - i) as f64 / (i + 1) as f64).product();
            choose * p.powi(j as i32) * (1.0 - p).powi((r - j) as i32)
        })
        .sum()
}
