//! Solver-free recovery from a sensing ensemble.
//!
//! All three routines share the same first step: back-project every round of
//! the first half, `v⁽ʳ⁾ = A⁽ʳ⁾ᵀ b⁽ʳ⁾`. Each coordinate of `v⁽ʳ⁾` is an
//! unbiased estimate of the matching signal coordinate.
//!
//! - [`recover_basic`] takes the per-coordinate median over rounds.
//! - [`recover_suppressed`] additionally zeroes estimates whose magnitude is
//!   strictly below the noise floor `2σ/√k`, with `σ²` the median measurement
//!   energy over the second half.
//! - [`determine_support`] skips the medians and counts, per coordinate, the
//!   rounds with `|v_i⁽ʳ⁾| ≥ 2σ/√k`; a majority puts `i` in the support.

use std::collections::BTreeSet;
use std::ops::Range;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::numerics::{matvec_transposed_with, median, squared_norm, DenseVector};
use crate::sensing::{check_rounds, MeasurementEnsemble, SensingEnsemble};

/// Coordinates handed to one worker in the per-coordinate loops.
const COORD_CHUNK: usize = 512;

/// Which routine produced a [`RecoveredSignal`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RecoveryMethod {
    Basic,
    Suppressed,
    Support,
    Omp,
    Biht,
    Nbiht,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecoveredSignal {
    pub values: DenseVector,
    pub support: BTreeSet<usize>,
    pub method: RecoveryMethod,
}

impl RecoveredSignal {
    pub fn from_values(values: DenseVector, method: RecoveryMethod) -> Self {
        let support = nonzero_support(&values);
        Self {
            values,
            support,
            method,
        }
    }
}

pub(crate) fn nonzero_support(values: &[f64]) -> BTreeSet<usize> {
    values
        .iter()
        .enumerate()
        .filter(|(_, &x)| x != 0.0)
        .map(|(i, _)| i)
        .collect()
}

/// Back-projections `v⁽ʳ⁾` for a contiguous range of rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct BackProjection {
    pub rounds: Range<usize>,
    pub per_round: Vec<DenseVector>,
}

impl BackProjection {
    pub fn dim(&self) -> usize {
        self.per_round[0].dim()
    }

    /// Copies coordinate `i` of every round into `out`.
    fn gather(&self, i: usize, out: &mut [f64]) {
        for (slot, v) in out.iter_mut().zip(&self.per_round) {
            *slot = v[i];
        }
    }
}

/// Noise-floor estimate `σ²` and the classification threshold `2·√(σ²/k)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseFloor {
    pub sigma2: f64,
    pub threshold: f64,
}

impl NoiseFloor {
    pub fn from_sigma2(sigma2: f64, k: usize) -> Self {
        Self {
            sigma2,
            threshold: 2.0 * (sigma2 / k as f64).sqrt(),
        }
    }
}

fn check_pair(ensemble: &SensingEnsemble, measurements: &MeasurementEnsemble) -> Result<()> {
    if measurements.rounds() != ensemble.rounds() {
        return Err(Error::DimensionMismatch {
            context: "measurement rounds",
            expected: ensemble.rounds(),
            found: measurements.rounds(),
        });
    }
    if measurements.k() != ensemble.k() {
        return Err(Error::DimensionMismatch {
            context: "measurement length",
            expected: ensemble.k(),
            found: measurements.k(),
        });
    }
    Ok(())
}

pub fn back_project(
    ensemble: &SensingEnsemble,
    measurements: &MeasurementEnsemble,
    rounds: Range<usize>,
    exec: Execution,
) -> Result<BackProjection> {
    check_pair(ensemble, measurements)?;
    check_rounds(rounds.clone(), ensemble.rounds())?;
    let per_round = exec
        .map_range(rounds.clone(), |r| {
            let a = ensemble.matrix(r)?;
            matvec_transposed_with(&a, &measurements.vectors()[r], exec)
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(BackProjection { rounds, per_round })
}

/// Per-coordinate median of the back-projections over rounds `0..r0`.
pub fn recover_basic(
    ensemble: &SensingEnsemble,
    measurements: &MeasurementEnsemble,
    r0: usize,
    exec: Execution,
) -> Result<RecoveredSignal> {
    let v = back_project(ensemble, measurements, 0..r0, exec)?;
    let values = coordinate_medians(&v, exec);
    Ok(RecoveredSignal::from_values(values, RecoveryMethod::Basic))
}

fn coordinate_medians(v: &BackProjection, exec: Execution) -> DenseVector {
    let rounds = v.per_round.len();
    let mut out = vec![0.0; v.dim()];
    exec.for_each_chunk(&mut out, COORD_CHUNK, |offset, chunk| {
        let mut scratch = vec![0.0; rounds];
        for (j, slot) in chunk.iter_mut().enumerate() {
            v.gather(offset + j, &mut scratch);
            *slot = median(&mut scratch).expect("at least one round");
        }
    });
    DenseVector::new(out)
}

/// `σ² = median{‖b⁽ʳ⁾‖² : r ∈ rounds}`.
pub fn estimate_noise_floor(
    measurements: &MeasurementEnsemble,
    rounds: Range<usize>,
    k: usize,
) -> Result<NoiseFloor> {
    check_rounds(rounds.clone(), measurements.rounds())?;
    let mut energies: Vec<f64> = measurements.vectors()[rounds]
        .iter()
        .map(|b| squared_norm(b))
        .collect();
    let sigma2 = median(&mut energies)?;
    Ok(NoiseFloor::from_sigma2(sigma2, k))
}

fn second_half_floor(ensemble: &SensingEnsemble, measurements: &MeasurementEnsemble) -> Result<NoiseFloor> {
    let r0 = ensemble.r0();
    estimate_noise_floor(measurements, r0..2 * r0, ensemble.k())
}

/// Median recovery followed by noise-floor suppression.
///
/// Zeroes `ẑ_i` whenever `|ẑ_i| < 2σ/√k` (strict). A zero floor suppresses
/// nothing.
pub fn recover_suppressed(
    ensemble: &SensingEnsemble,
    measurements: &MeasurementEnsemble,
    exec: Execution,
) -> Result<RecoveredSignal> {
    let basic = recover_basic(ensemble, measurements, ensemble.r0(), exec)?;
    let floor = second_half_floor(ensemble, measurements)?;
    let mut values = basic.values;
    for x in values.iter_mut() {
        if x.abs() < floor.threshold {
            *x = 0.0;
        }
    }
    Ok(RecoveredSignal::from_values(values, RecoveryMethod::Suppressed))
}

/// Rounds in which each coordinate clears `threshold` in magnitude
/// (inclusive).
pub fn exceedance_counts(v: &BackProjection, threshold: f64, exec: Execution) -> Vec<usize> {
    let mut counts = vec![0usize; v.dim()];
    exec.for_each_chunk(&mut counts, COORD_CHUNK, |offset, chunk| {
        for round in &v.per_round {
            let coords = &round[offset..offset + chunk.len()];
            for (c, x) in chunk.iter_mut().zip(coords) {
                *c += usize::from(x.abs() >= threshold);
            }
        }
    });
    counts
}

/// Support by majority counting: `i ∈ S` iff `|v_i⁽ʳ⁾| ≥ 2σ/√k` in at least
/// `⌈r0/2⌉` of the first-half rounds.
///
/// A zero noise floor can only come from all-zero second-half measurements;
/// the support is then empty.
pub fn determine_support(
    ensemble: &SensingEnsemble,
    measurements: &MeasurementEnsemble,
    exec: Execution,
) -> Result<BTreeSet<usize>> {
    let r0 = ensemble.r0();
    let floor = second_half_floor(ensemble, measurements)?;
    if floor.sigma2 == 0.0 {
        return Ok(BTreeSet::new());
    }
    let v = back_project(ensemble, measurements, 0..r0, exec)?;
    let majority = r0.div_ceil(2);
    Ok(exceedance_counts(&v, floor.threshold, exec)
        .into_iter()
        .enumerate()
        .filter(|&(_, c)| c >= majority)
        .map(|(i, _)| i)
        .collect())
}
