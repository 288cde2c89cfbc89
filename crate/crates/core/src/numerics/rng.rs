//! Reproducible Gaussian streams.
//!
//! A stream is identified by `(master_seed, stream_index)`. The underlying
//! generator is xoshiro256++ whose 256-bit state is built from SplitMix64
//! mixes of both identifiers, so streams can be created in any order on any
//! thread.
//!
//! Gaussian deviates use a 256-layer ziggurat (Doornik's ZIGNOR layout):
//! one `u64` per draw on the fast path, with the low 8 bits picking the layer
//! and the top 52 bits the signed abscissa. Tables and the rare density
//! evaluations go through the pure-Rust `libm`, so a stream produces the same
//! bits on every platform.

use std::sync::OnceLock;

use rand::{Rng, RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use super::matrix::DenseMatrix;
use crate::error::{Error, Result};

const UNIT_SCALE: f64 = 1.0 / (1u64 << 53) as f64;

const ZIG_LAYERS: usize = 256;
/// Start of the tail.
const ZIG_R: f64 = 3.654_152_885_361_009;
/// Area of each layer.
const ZIG_V: f64 = 0.004_928_673_233_99;

struct ZigguratTables {
    x: [f64; ZIG_LAYERS + 1],
    f: [f64; ZIG_LAYERS + 1],
}

fn unnormalized_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x)
}

fn ziggurat() -> &'static ZigguratTables {
    static TABLES: OnceLock<ZigguratTables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut x = [0.0; ZIG_LAYERS + 1];
        x[0] = ZIG_V / unnormalized_pdf(ZIG_R);
        x[1] = ZIG_R;
        for i in 2..ZIG_LAYERS {
            x[i] = (-2.0 * libm::log(ZIG_V / x[i - 1] + unnormalized_pdf(x[i - 1]))).sqrt();
        }
        x[ZIG_LAYERS] = 0.0;
        let f = x.map(unnormalized_pdf);
        ZigguratTables { x, f }
    })
}

/// SplitMix64 finalizer, a bijection on `u64`.
fn mix64(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// 256-bit generator state. Every word depends on both identifiers: the
/// generator is linear, so streams sharing a state word would start out
/// correlated.
fn stream_seed(master_seed: u64, stream_index: u64) -> [u8; 32] {
    const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
    let m = mix64(master_seed ^ 0x6a09_e667_f3bc_c908);
    let t = mix64(stream_index ^ 0xbb67_ae85_84ca_a73b);
    let mut seed = [0u8; 32];
    for (i, chunk) in (1u64..).zip(seed.chunks_exact_mut(8)) {
        let w = mix64(m.wrapping_add(i.wrapping_mul(GAMMA)) ^ mix64(t.wrapping_sub(i.wrapping_mul(GAMMA))));
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    seed
}

#[derive(Clone)]
pub struct SeededGaussianSource {
    master_seed: u64,
    stream_index: u64,
    rng: Xoshiro256PlusPlus,
    tables: &'static ZigguratTables,
}

impl std::fmt::Debug for SeededGaussianSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SeededGaussianSource")
            .field("master_seed", &self.master_seed)
            .field("stream_index", &self.stream_index)
            .finish_non_exhaustive()
    }
}

impl SeededGaussianSource {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let rng = Xoshiro256PlusPlus::from_seed(stream_seed(master_seed, stream_index));
        Self {
            master_seed,
            stream_index,
            rng,
            tables: ziggurat(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * UNIT_SCALE
    }

    /// Uniform integer in `range`.
    pub fn next_index(&mut self, range: std::ops::Range<usize>) -> usize {
        self.rng.random_range(range)
    }

    /// Uniform on the open interval `(0, 1)`.
    fn next_open_unit(&mut self) -> f64 {
        ((self.rng.next_u64() >> 12) as f64 + 0.5) * (1.0 / (1u64 << 52) as f64)
    }

    /// Standard normal deviate.
    #[inline]
    pub fn next_gaussian(&mut self) -> f64 {
        let bits = self.rng.next_u64();
        let layer = (bits & 0xff) as usize;
        // Signed abscissa in (-1, 1) from the top 52 bits.
        let u = f64::from_bits((bits >> 12) | 0x4000_0000_0000_0000) - 3.0;
        let x = u * self.tables.x[layer];
        if x.abs() < self.tables.x[layer + 1] {
            return x;
        }
        self.gaussian_slow(layer, u, x)
    }

    /// Rejection branch of the ziggurat, taken on about 1% of draws.
    #[cold]
    #[inline(never)]
    fn gaussian_slow(&mut self, mut layer: usize, mut u: f64, mut x: f64) -> f64 {
        let tables = self.tables;
        loop {
            if layer == 0 {
                return self.tail(u < 0.0);
            }
            let fx = tables.f[layer + 1] + (tables.f[layer] - tables.f[layer + 1]) * self.next_uniform();
            if fx < unnormalized_pdf(x) {
                return x;
            }
            let bits = self.rng.next_u64();
            layer = (bits & 0xff) as usize;
            u = f64::from_bits((bits >> 12) | 0x4000_0000_0000_0000) - 3.0;
            x = u * tables.x[layer];
            if x.abs() < tables.x[layer + 1] {
                return x;
            }
        }
    }

    /// Marsaglia's tail sampler beyond `ZIG_R`.
    fn tail(&mut self, negative: bool) -> f64 {
        loop {
            let x = libm::log(self.next_open_unit()) / ZIG_R;
            let y = libm::log(self.next_open_unit());
            if -2.0 * y >= x * x {
                return if negative { x - ZIG_R } else { ZIG_R - x };
            }
        }
    }

    pub fn fill_gaussian(&mut self, out: &mut [f64], std_dev: f64) {
        for x in out {
            *x = std_dev * self.next_gaussian();
        }
    }
}

/// Draws a `k × n` matrix with iid `N(0, variance)` entries in row-major order,
/// consuming exactly `k·n` deviates from `source`.
pub fn sample_gaussian_matrix(
    source: &mut SeededGaussianSource,
    k: usize,
    n: usize,
    variance: f64,
) -> Result<DenseMatrix> {
    if k == 0 || n == 0 {
        return Err(Error::InvalidDimension(format!(
            "sensing matrix shape {k}x{n} must be at least 1x1"
        )));
    }
    if !(variance > 0.0 && variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "entry variance must be positive and finite, got {variance}"
        )));
    }
    let mut data = vec![0.0; k * n];
    source.fill_gaussian(&mut data, variance.sqrt());
    DenseMatrix::from_row_major(k, n, data)
}
