//! Measurement model: signals, sensing ensembles and measurement ensembles.
//!
//! Randomness layout for one ensemble seeded with `master_seed` and `r0`
//! rounds per half:
//!
//! | source               | stream index       |
//! |----------------------|--------------------|
//! | sensing matrix `r`   | `r`                |
//! | noise vector `r`     | `2·r0 + r`         |
//! | signal support       | [`SIGNAL_STREAM`]  |
//!
//! Rounds are 0-based: the first half `0..r0` feeds the estimates, the
//! second half `r0..2·r0` feeds the noise floor.

mod fixture;

use std::borrow::Cow;
use std::collections::BTreeSet;
use std::ops::Range;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

pub use fixture::{
    load_ensemble, load_measurements, load_vector, save_ensemble, save_measurements, save_vector,
    FixtureHeader, FIXTURE_MAGIC,
};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::numerics::{matvec, sample_gaussian_matrix, DenseMatrix, DenseVector, SeededGaussianSource};

/// Stream reserved for drawing signal supports.
pub const SIGNAL_STREAM: u64 = u64::MAX;

/// Ground-truth signal and its support.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    values: DenseVector,
    support: BTreeSet<usize>,
}

impl Signal {
    pub fn new(values: impl Into<DenseVector>) -> Self {
        let values = values.into();
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, _)| i)
            .collect();
        Self { values, support }
    }

    pub fn values(&self) -> &DenseVector {
        &self.values
    }

    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn dim(&self) -> usize {
        self.values.dim()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.values.scaled(c))
    }
}

/// Binary signal with exactly `s` ones at positions drawn uniformly without
/// replacement from the signal stream of `seed`.
pub fn generate_binary_signal(seed: u64, n: usize, s: usize) -> Result<Signal> {
    if s == 0 || s > n {
        return Err(Error::InvalidParameter(format!(
            "sparsity must satisfy 1 <= s <= n, got s = {s}, n = {n}"
        )));
    }
    let mut source = SeededGaussianSource::new(seed, SIGNAL_STREAM);
    let mut index: Vec<usize> = (0..n).collect();
    for i in 0..s {
        let j = source.next_index(i..n);
        index.swap(i, j);
    }
    let mut values = vec![0.0; n];
    for &i in &index[..s] {
        values[i] = 1.0;
    }
    Ok(Signal::new(values))
}

/// Per-coordinate noise variance convention.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseMode {
    /// `w ~ N(0, σ_w²)` per coordinate.
    Theory,
    /// `w ~ N(0, σ_w²/k)` per coordinate.
    Experiment,
}

impl NoiseMode {
    pub fn std_dev(self, sigma_w: f64, k: usize) -> f64 {
        match self {
            NoiseMode::Theory => sigma_w,
            NoiseMode::Experiment => sigma_w / (k as f64).sqrt(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMode::Theory => "theory",
            NoiseMode::Experiment => "experiment",
        }
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(NoiseMode::Theory),
            "experiment" => Ok(NoiseMode::Experiment),
            other => Err(Error::InvalidParameter(format!(
                "unknown noise mode {other:?} (expected theory or experiment)"
            ))),
        }
    }
}

/// `⌈2·s·ln n⌉`, at least 1.
pub fn default_measurements(n: usize, s: usize) -> usize {
    ((2.0 * s as f64 * (n as f64).ln()).ceil() as usize).max(1)
}

/// `⌈ln n⌉`, at least 1.
pub fn default_rounds(n: usize) -> usize {
    ((n as f64).ln().ceil() as usize).max(1)
}

/// `⌈1080·ln n⌉`, the round count under which the high-probability
/// guarantees hold. Far too large for routine experiments.
pub fn theory_rounds(n: usize) -> usize {
    ((1080.0 * (n as f64).ln()).ceil() as usize).max(1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveryConfig {
    pub n: usize,
    pub s: usize,
    pub k: usize,
    pub r0: usize,
    pub sigma_w: f64,
    pub noise_mode: NoiseMode,
    pub master_seed: u64,
}

impl RecoveryConfig {
    /// Experiment defaults: `k = ⌈2 s ln n⌉`, `r0 = ⌈ln n⌉`, `σ_w = 0.1`.
    pub fn new(n: usize, s: usize) -> Self {
        Self {
            n,
            s,
            k: default_measurements(n, s),
            r0: default_rounds(n),
            sigma_w: 0.1,
            noise_mode: NoiseMode::Experiment,
            master_seed: 0,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_r0(mut self, r0: usize) -> Self {
        self.r0 = r0;
        self
    }

    pub fn with_theory_r0(self) -> Self {
        let r0 = theory_rounds(self.n);
        self.with_r0(r0)
    }

    pub fn with_noise(mut self, sigma_w: f64, mode: NoiseMode) -> Self {
        self.sigma_w = sigma_w;
        self.noise_mode = mode;
        self
    }

    pub fn with_seed(mut self, master_seed: u64) -> Self {
        self.master_seed = master_seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.s == 0 || self.s > self.n {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= s <= n, got s = {}, n = {}",
                self.s, self.n
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be at least 1".into()));
        }
        if self.r0 == 0 {
            return Err(Error::InvalidParameter("r0 must be at least 1".into()));
        }
        if !(self.sigma_w >= 0.0 && self.sigma_w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma_w must be finite and nonnegative, got {}",
                self.sigma_w
            )));
        }
        Ok(())
    }
}

enum Storage {
    Materialized(Vec<DenseMatrix>),
    /// Matrices are regenerated from their streams each time they are used.
    OnDemand { generation_nanos: AtomicU64 },
}

/// The `2·r0` sensing matrices of one recovery, each `k × n` with
/// `N(0, 1/k)` entries.
pub struct SensingEnsemble {
    n: usize,
    k: usize,
    r0: usize,
    master_seed: u64,
    storage: Storage,
}

impl std::fmt::Debug for SensingEnsemble {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SensingEnsemble")
            .field("n", &self.n)
            .field("k", &self.k)
            .field("r0", &self.r0)
            .field("master_seed", &self.master_seed)
            .field("materialized", &self.is_materialized())
            .finish()
    }
}

/// Materializes all `2·r0` matrices, generating rounds in parallel when the
/// policy allows.
pub fn build_ensemble(config: &RecoveryConfig, exec: Execution) -> Result<SensingEnsemble> {
    config.validate()?;
    let matrices = exec
        .map_range(0..2 * config.r0, |r| {
            generate_matrix(config.master_seed, r, config.k, config.n)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(SensingEnsemble {
        n: config.n,
        k: config.k,
        r0: config.r0,
        master_seed: config.master_seed,
        storage: Storage::Materialized(matrices),
    })
}

fn generate_matrix(master_seed: u64, round: usize, k: usize, n: usize) -> Result<DenseMatrix> {
    let mut source = SeededGaussianSource::new(master_seed, round as u64);
    sample_gaussian_matrix(&mut source, k, n, 1.0 / k as f64)
}

impl SensingEnsemble {
    /// Ensemble whose matrices are drawn lazily, for shapes whose `2·r0`
    /// matrices do not fit in memory. Yields exactly the matrices
    /// [`build_ensemble`] would.
    pub fn on_demand(config: &RecoveryConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            n: config.n,
            k: config.k,
            r0: config.r0,
            master_seed: config.master_seed,
            storage: Storage::OnDemand {
                generation_nanos: AtomicU64::new(0),
            },
        })
    }

    /// Wraps explicit matrices, e.g. hand-built fixtures. Needs an even,
    /// nonzero count of equally shaped matrices.
    pub fn from_matrices(matrices: Vec<DenseMatrix>, master_seed: u64) -> Result<Self> {
        if matrices.is_empty() || !matrices.len().is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "an ensemble needs an even, nonzero number of matrices, got {}",
                matrices.len()
            )));
        }
        let (k, n) = (matrices[0].rows(), matrices[0].cols());
        for m in &matrices {
            if m.rows() != k || m.cols() != n {
                return Err(Error::DimensionMismatch {
                    context: "ensemble matrix columns",
                    expected: n,
                    found: m.cols(),
                });
            }
        }
        Ok(Self {
            n,
            k,
            r0: matrices.len() / 2,
            master_seed,
            storage: Storage::Materialized(matrices),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn r0(&self) -> usize {
        self.r0
    }

    pub fn rounds(&self) -> usize {
        2 * self.r0
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn is_materialized(&self) -> bool {
        matches!(self.storage, Storage::Materialized(_))
    }

    pub fn matrix(&self, round: usize) -> Result<Cow<'_, DenseMatrix>> {
        check_rounds(round..round + 1, self.rounds())?;
        match &self.storage {
            Storage::Materialized(ms) => Ok(Cow::Borrowed(&ms[round])),
            Storage::OnDemand { generation_nanos } => {
                let start = Instant::now();
                let m = generate_matrix(self.master_seed, round, self.k, self.n)?;
                generation_nanos.fetch_add(start.elapsed().as_nanos() as u64, Ordering::Relaxed);
                Ok(Cow::Owned(m))
            }
        }
    }

    /// Total time spent regenerating matrices, summed across threads. Always
    /// zero for materialized ensembles.
    pub fn generation_time(&self) -> std::time::Duration {
        match &self.storage {
            Storage::Materialized(_) => std::time::Duration::ZERO,
            Storage::OnDemand { generation_nanos } => {
                std::time::Duration::from_nanos(generation_nanos.load(Ordering::Relaxed))
            }
        }
    }

    pub fn materialized(&self) -> Option<&[DenseMatrix]> {
        match &self.storage {
            Storage::Materialized(ms) => Some(ms),
            Storage::OnDemand { .. } => None,
        }
    }
}

pub(crate) fn check_rounds(rounds: Range<usize>, available: usize) -> Result<()> {
    if rounds.start >= rounds.end || rounds.end > available {
        return Err(Error::InvalidRounds {
            start: rounds.start,
            end: rounds.end,
            available,
        });
    }
    Ok(())
}

/// The `2·r0` measurement vectors `b⁽ʳ⁾ = A⁽ʳ⁾z + w⁽ʳ⁾`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementEnsemble {
    vectors: Vec<DenseVector>,
    noise_mode: NoiseMode,
    sigma_w: f64,
}

impl MeasurementEnsemble {
    pub fn from_vectors(vectors: Vec<DenseVector>, sigma_w: f64, noise_mode: NoiseMode) -> Result<Self> {
        let k = vectors.first().map(DenseVector::dim).ok_or(Error::EmptyInput("measurement vectors"))?;
        if let Some(bad) = vectors.iter().find(|v| v.dim() != k) {
            return Err(Error::DimensionMismatch {
                context: "measurement vector length",
                expected: k,
                found: bad.dim(),
            });
        }
        Ok(Self {
            vectors,
            noise_mode,
            sigma_w,
        })
    }

    pub fn vectors(&self) -> &[DenseVector] {
        &self.vectors
    }

    pub fn rounds(&self) -> usize {
        self.vectors.len()
    }

    pub fn k(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn noise_mode(&self) -> NoiseMode {
        self.noise_mode
    }

    pub fn sigma_w(&self) -> f64 {
        self.sigma_w
    }
}

/// Noise vector for `round`, drawn from stream `2·r0 + round` of `noise_seed`.
/// All zeros when `σ_w = 0`.
pub fn noise_vector(
    noise_seed: u64,
    r0: usize,
    round: usize,
    k: usize,
    sigma_w: f64,
    mode: NoiseMode,
) -> DenseVector {
    let mut w = vec![0.0; k];
    if sigma_w > 0.0 {
        let mut source = SeededGaussianSource::new(noise_seed, (2 * r0 + round) as u64);
        source.fill_gaussian(&mut w, mode.std_dev(sigma_w, k));
    }
    DenseVector::new(w)
}

/// Measures `z` with one matrix of the ensemble.
pub fn measure_round(
    ensemble: &SensingEnsemble,
    round: usize,
    z: &Signal,
    sigma_w: f64,
    noise_mode: NoiseMode,
    noise_seed: u64,
) -> Result<DenseVector> {
    if z.dim() != ensemble.n() {
        return Err(Error::DimensionMismatch {
            context: "signal length",
            expected: ensemble.n(),
            found: z.dim(),
        });
    }
    let a = ensemble.matrix(round)?;
    let mut b = matvec(&a, z.values())?;
    if sigma_w > 0.0 {
        let w = noise_vector(noise_seed, ensemble.r0(), round, ensemble.k(), sigma_w, noise_mode);
        for (bp, wp) in b.iter_mut().zip(w.iter()) {
            *bp += wp;
        }
    }
    Ok(b)
}

pub fn measure(
    ensemble: &SensingEnsemble,
    z: &Signal,
    sigma_w: f64,
    noise_mode: NoiseMode,
    noise_seed: u64,
    exec: Execution,
) -> Result<MeasurementEnsemble> {
    if !(sigma_w >= 0.0 && sigma_w.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "sigma_w must be finite and nonnegative, got {sigma_w}"
        )));
    }
    let vectors = exec
        .map_range(0..ensemble.rounds(), |r| {
            measure_round(ensemble, r, z, sigma_w, noise_mode, noise_seed)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    MeasurementEnsemble::from_vectors(vectors, sigma_w, noise_mode)
}
