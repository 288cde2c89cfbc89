//! Binary iterative hard thresholding and its normalized variant.
//!
//! Iteration: `x ← H_s(x + (step/k)·Aᵀ(y − sign(Ax)))` from `x = 0`, where
//! `H_s` keeps the `s` largest-magnitude entries. The normalized variant
//! rescales each thresholded iterate to unit norm and uses `step/√k` in place
//! of `step/k`: its unit-norm iterate lives on the scale of a unit-variance
//! matrix, so the step is expressed against `√k·A` rather than `A`.

use crate::error::{Error, Result};
use crate::numerics::{matvec, matvec_transposed, squared_norm, DenseMatrix, DenseVector};
use crate::recovery::{RecoveredSignal, RecoveryMethod};
use crate::sensing::Signal;

/// Signs of `Az`: `+1` for positive coordinates, `−1` otherwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OneBitMeasurements {
    pub signs: Vec<i8>,
}

impl OneBitMeasurements {
    pub fn from_values(values: &[f64]) -> Self {
        Self {
            signs: values.iter().map(|&x| sign(x)).collect(),
        }
    }
}

fn sign(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else {
        -1
    }
}

pub fn sign_quantize(a: &DenseMatrix, z: &Signal) -> Result<OneBitMeasurements> {
    Ok(OneBitMeasurements::from_values(&matvec(a, z.values())?))
}

/// Keeps the `s` largest-magnitude entries of `x` (lowest index wins ties)
/// and zeroes the rest.
pub fn hard_threshold(x: &[f64], s: usize) -> DenseVector {
    if s >= x.len() {
        return DenseVector::new(x.to_vec());
    }
    let mut out = vec![0.0; x.len()];
    if s == 0 {
        return DenseVector::new(out);
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.select_nth_unstable_by(s - 1, |&i, &j| {
        x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j))
    });
    for &i in &order[..s] {
        out[i] = x[i];
    }
    DenseVector::new(out)
}

/// One BIHT/NBIHT run, exposed step by step.
#[derive(Clone, Debug)]
pub struct IhtState<'a> {
    a: &'a DenseMatrix,
    signs: &'a OneBitMeasurements,
    s_budget: usize,
    step_size: f64,
    normalize: bool,
    iterate: DenseVector,
    iteration: usize,
}

impl<'a> IhtState<'a> {
    pub fn new(
        a: &'a DenseMatrix,
        signs: &'a OneBitMeasurements,
        s_budget: usize,
        step_size: f64,
        normalize: bool,
    ) -> Result<Self> {
        if signs.signs.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                context: "one-bit measurements",
                expected: a.rows(),
                found: signs.signs.len(),
            });
        }
        if !(step_size > 0.0 && step_size.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {step_size}"
            )));
        }
        Ok(Self {
            a,
            signs,
            s_budget,
            step_size,
            normalize,
            iterate: DenseVector::zeros(a.cols()),
            iteration: 0,
        })
    }

    /// Starts from `x` instead of zero.
    pub fn with_iterate(mut self, x: DenseVector) -> Result<Self> {
        if x.dim() != self.a.cols() {
            return Err(Error::DimensionMismatch {
                context: "initial iterate",
                expected: self.a.cols(),
                found: x.dim(),
            });
        }
        self.iterate = x;
        Ok(self)
    }

    pub fn iterate(&self) -> &DenseVector {
        &self.iterate
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn step(&mut self) -> Result<()> {
        let ax = matvec(self.a, &self.iterate)?;
        let mismatch: Vec<f64> = self
            .signs
            .signs
            .iter()
            .zip(ax.iter())
            .map(|(&y, &v)| f64::from(y - sign(v)))
            .collect();
        let grad = matvec_transposed(self.a, &mismatch)?;
        let k = self.a.rows() as f64;
        let scale = if self.normalize {
            self.step_size / k.sqrt()
        } else {
            self.step_size / k
        };
        let proposal: Vec<f64> = self
            .iterate
            .iter()
            .zip(grad.iter())
            .map(|(x, g)| x + scale * g)
            .collect();
        let mut next = hard_threshold(&proposal, self.s_budget);
        if self.normalize {
            let norm = squared_norm(&next).sqrt();
            if norm > 0.0 {
                for x in next.iter_mut() {
                    *x /= norm;
                }
            }
        }
        self.iterate = next;
        self.iteration += 1;
        Ok(())
    }

    fn into_recovered(self) -> RecoveredSignal {
        let method = if self.normalize {
            RecoveryMethod::Nbiht
        } else {
            RecoveryMethod::Biht
        };
        RecoveredSignal::from_values(self.iterate, method)
    }
}

fn run(
    a: &DenseMatrix,
    signs: &OneBitMeasurements,
    s_budget: usize,
    max_iters: usize,
    step: f64,
    normalize: bool,
) -> Result<RecoveredSignal> {
    if max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }
    let mut state = IhtState::new(a, signs, s_budget, step, normalize)?;
    for _ in 0..max_iters {
        state.step()?;
    }
    Ok(state.into_recovered())
}

pub fn biht(
    a: &DenseMatrix,
    signs: &OneBitMeasurements,
    s_budget: usize,
    max_iters: usize,
    step: f64,
) -> Result<RecoveredSignal> {
    run(a, signs, s_budget, max_iters, step, false)
}

pub fn nbiht(
    a: &DenseMatrix,
    signs: &OneBitMeasurements,
    s_budget: usize,
    max_iters: usize,
    step: f64,
) -> Result<RecoveredSignal> {
    run(a, signs, s_budget, max_iters, step, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{sample_gaussian_matrix, SeededGaussianSource};
    use crate::sensing::generate_binary_signal;
    use proptest::prelude::*;

    fn sort_oracle(x: &[f64], s: usize) -> Vec<f64> {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&i, &j| x[j].abs().total_cmp(&x[i].abs()).then(i.cmp(&j)));
        let mut out = vec![0.0; x.len()];
        for &i in order.iter().take(s) {
            out[i] = x[i];
        }
        out
    }

    #[test]
    fn quantization_convention() {
        assert_eq!(OneBitMeasurements::from_values(&[0.5, -0.2]).signs, vec![1, -1]);
        assert_eq!(OneBitMeasurements::from_values(&[0.0, 0.0, -0.0]).signs, vec![-1, -1, -1]);

        let a = sample_gaussian_matrix(&mut SeededGaussianSource::new(2, 0), 20, 30, 0.05).unwrap();
        let z = generate_binary_signal(2, 30, 4).unwrap();
        assert_eq!(
            sign_quantize(&a, &z).unwrap(),
            sign_quantize(&a, &z.scaled(2.0)).unwrap()
        );
    }

    #[test]
    fn threshold_ties_prefer_low_index() {
        let x = [1.0, -3.0, 3.0, 0.5, -1.0];
        assert_eq!(hard_threshold(&x, 2).as_ref(), &[0.0, -3.0, 3.0, 0.0, 0.0]);
        assert_eq!(hard_threshold(&x, 3).as_ref(), &[1.0, -3.0, 3.0, 0.0, 0.0]);
        assert_eq!(hard_threshold(&x, 0).as_ref(), &[0.0; 5]);
        assert_eq!(hard_threshold(&x, 9).as_ref(), &x);
    }

    proptest! {
        #[test]
        fn threshold_matches_sort_oracle(
            x in prop::collection::vec(prop_oneof![-5i32..5].prop_map(f64::from), 1..80),
            s in 0usize..90,
        ) {
            prop_assert_eq!(hard_threshold(&x, s).into_vec(), sort_oracle(&x, s));
        }
    }

    #[test]
    fn consistent_iterate_is_a_fixed_point() {
        let a = sample_gaussian_matrix(&mut SeededGaussianSource::new(3, 0), 25, 40, 0.04).unwrap();
        let mut x = vec![0.0; 40];
        x[3] = 0.6;
        x[17] = -0.8;
        let signs = OneBitMeasurements::from_values(&matvec(&a, &x).unwrap());
        for normalize in [false, true] {
            let mut state = IhtState::new(&a, &signs, 2, 1.0, normalize)
                .unwrap()
                .with_iterate(DenseVector::new(x.clone()))
                .unwrap();
            state.step().unwrap();
            assert_eq!(state.iterate().as_ref(), x.as_slice());
        }
    }

    #[test]
    fn full_budget_is_a_plain_gradient_step() {
        let a = sample_gaussian_matrix(&mut SeededGaussianSource::new(5, 0), 12, 7, 1.0 / 12.0).unwrap();
        let signs = OneBitMeasurements::from_values(&[1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0]);
        let mut state = IhtState::new(&a, &signs, 7, 0.5, false).unwrap();
        state.step().unwrap();
        // From zero every sign(Ax) is -1, so the mismatch is y + 1.
        let mismatch: Vec<f64> = signs.signs.iter().map(|&y| f64::from(y) + 1.0).collect();
        let grad = matvec_transposed(&a, &mismatch).unwrap();
        let expected: Vec<f64> = grad.iter().map(|g| 0.5 / 12.0 * g).collect();
        assert_eq!(state.iterate().as_ref(), expected.as_slice());
    }

    #[test]
    fn zero_matrix_keeps_zero_iterate() {
        let a = DenseMatrix::zeros(6, 9).unwrap();
        let z = Signal::new(vec![1.0; 9]);
        let signs = sign_quantize(&a, &z).unwrap();
        let out = nbiht(&a, &signs, 3, 10, 1.0).unwrap();
        assert!(out.values.iter().all(|&x| x == 0.0));
        assert!(out.support.is_empty());
        assert_eq!(out.method, RecoveryMethod::Nbiht);
    }

    #[test]
    fn iterates_respect_budget_and_unit_norm() {
        let (k, n, s) = (80, 300, 6);
        let a = sample_gaussian_matrix(&mut SeededGaussianSource::new(6, 0), k, n, 1.0 / k as f64).unwrap();
        let z = generate_binary_signal(6, n, s).unwrap();
        let signs = sign_quantize(&a, &z).unwrap();
        for normalize in [false, true] {
            let mut state = IhtState::new(&a, &signs, s, 1.0, normalize).unwrap();
            for _ in 0..30 {
                state.step().unwrap();
                let nnz = state.iterate().iter().filter(|&&x| x != 0.0).count();
                assert!(nnz <= s);
                if normalize {
                    let norm = squared_norm(state.iterate()).sqrt();
                    assert!((norm - 1.0).abs() < 1e-12, "norm {norm}");
                }
            }
        }
        let out = biht(&a, &signs, s, 30, 1.0).unwrap();
        assert!(out.support.len() <= s);
    }

    #[test]
    fn argument_checks() {
        let a = DenseMatrix::identity(3).unwrap();
        let signs = OneBitMeasurements::from_values(&[1.0, 1.0, -1.0]);
        assert!(biht(&a, &signs, 2, 0, 1.0).is_err());
        assert!(biht(&a, &signs, 2, 5, 0.0).is_err());
        assert!(biht(&a, &signs, 4, 5, 1.0).is_ok());
        let short = OneBitMeasurements::from_values(&[1.0]);
        assert!(matches!(biht(&a, &short, 1, 5, 1.0), Err(Error::DimensionMismatch { .. })));
    }
}
