//! Orthogonal matching pursuit with an incrementally updated QR factorization
//! of the selected columns.

use crate::error::{Error, Result};
use crate::numerics::{dot, matvec_transposed, squared_norm, DenseMatrix, DenseVector};
use crate::recovery::{RecoveredSignal, RecoveryMethod};

/// Relative pivot below which a new column counts as dependent.
const PIVOT_TOL: f64 = 1e-12;

/// Greedy state. `q` holds orthonormal columns spanning the selected
/// columns, `r` the upper-triangular factor (column-major), `qtb = Qᵀb`.
#[derive(Clone, Debug)]
pub struct OmpState<'a> {
    a: &'a DenseMatrix,
    b: &'a [f64],
    column_norms: Vec<f64>,
    selected: Vec<usize>,
    is_selected: Vec<bool>,
    q: Vec<Vec<f64>>,
    r: Vec<Vec<f64>>,
    qtb: Vec<f64>,
    residual: Vec<f64>,
}

impl<'a> OmpState<'a> {
    pub fn new(a: &'a DenseMatrix, b: &'a [f64]) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::DimensionMismatch {
                context: "omp measurements",
                expected: a.rows(),
                found: b.len(),
            });
        }
        Ok(Self {
            a,
            b,
            column_norms: a.column_norms(),
            selected: Vec::new(),
            is_selected: vec![false; a.cols()],
            q: Vec::new(),
            r: Vec::new(),
            qtb: Vec::new(),
            residual: b.to_vec(),
        })
    }

    pub fn residual(&self) -> &[f64] {
        &self.residual
    }

    pub fn residual_norm(&self) -> f64 {
        squared_norm(&self.residual).sqrt()
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    /// Least-squares coefficients aligned with [`Self::selected`], from
    /// back-substitution `R c = Qᵀb`.
    pub fn coefficients(&self) -> Vec<f64> {
        let t = self.selected.len();
        let mut c = vec![0.0; t];
        for i in (0..t).rev() {
            let mut acc = self.qtb[i];
            for (j, cj) in c.iter().enumerate().skip(i + 1) {
                acc -= self.r[j][i] * cj;
            }
            c[i] = acc / self.r[i][i];
        }
        c
    }

    /// Unselected column with the largest normalized correlation with the
    /// residual; lowest index on ties. `None` if every correlation is zero.
    fn best_column(&self) -> Result<Option<usize>> {
        let corr = matvec_transposed(self.a, &self.residual)?;
        let mut best: Option<(usize, f64)> = None;
        for (j, (&c, &norm)) in corr.iter().zip(&self.column_norms).enumerate() {
            if self.is_selected[j] || norm == 0.0 {
                continue;
            }
            let score = c.abs() / norm;
            if score > best.map_or(0.0, |(_, s)| s) {
                best = Some((j, score));
            }
        }
        Ok(best.map(|(j, _)| j))
    }

    /// Selects one more column and refits. Returns the chosen column, or
    /// `None` when the residual is orthogonal to every remaining column.
    pub fn step(&mut self) -> Result<Option<usize>> {
        let Some(j) = self.best_column()? else {
            return Ok(None);
        };
        self.add_column(j)?;
        Ok(Some(j))
    }

    fn add_column(&mut self, j: usize) -> Result<()> {
        let mut w = self.a.column(j);
        let mut rcol = vec![0.0; self.q.len() + 1];
        // Gram-Schmidt twice keeps Q orthonormal to working precision.
        for _ in 0..2 {
            for (i, qi) in self.q.iter().enumerate() {
                let c = dot(qi, &w);
                rcol[i] += c;
                for (wp, qp) in w.iter_mut().zip(qi) {
                    *wp -= c * qp;
                }
            }
        }
        let pivot = squared_norm(&w).sqrt();
        let lead = self.r.first().map_or(self.column_norms[j], |c| c[0].abs());
        if pivot.is_nan() || pivot <= PIVOT_TOL * lead {
            return Err(Error::RankDeficient { column: j, pivot });
        }
        for wp in &mut w {
            *wp /= pivot;
        }
        rcol[self.q.len()] = pivot;

        let step = dot(&w, &self.residual);
        for (rp, qp) in self.residual.iter_mut().zip(&w) {
            *rp -= step * qp;
        }
        self.qtb.push(dot(&w, self.b));
        self.q.push(w);
        self.r.push(rcol);
        self.selected.push(j);
        self.is_selected[j] = true;
        Ok(())
    }

    pub fn into_recovered(self) -> RecoveredSignal {
        let mut values = vec![0.0; self.a.cols()];
        for (&j, c) in self.selected.iter().zip(self.coefficients()) {
            values[j] = c;
        }
        RecoveredSignal {
            values: DenseVector::new(values),
            support: self.selected.iter().copied().collect(),
            method: RecoveryMethod::Omp,
        }
    }
}

/// Runs OMP for at most `s_budget` selections, stopping early once
/// `‖residual‖ ≤ residual_tol`. The support is the selected set.
pub fn omp(a: &DenseMatrix, b: &[f64], s_budget: usize, residual_tol: f64) -> Result<RecoveredSignal> {
    super::check_budget(s_budget, a.rows(), a.cols())?;
    let mut state = OmpState::new(a, b)?;
    while state.selected().len() < s_budget && state.residual_norm() > residual_tol {
        if state.step()?.is_none() {
            break;
        }
    }
    Ok(state.into_recovered())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{matvec, sample_gaussian_matrix, SeededGaussianSource};
    use crate::sensing::generate_binary_signal;

    #[test]
    fn identity_recovers_exactly() {
        let a = DenseMatrix::identity(8).unwrap();
        let z = [0.0, 2.0, 0.0, 0.0, -1.5, 0.0, 0.0, 0.25];
        let out = omp(&a, &z, 3, 0.0).unwrap();
        assert_eq!(out.values.as_ref(), &z);
        assert_eq!(out.support.into_iter().collect::<Vec<_>>(), vec![1, 4, 7]);
    }

    #[test]
    fn zero_measurements_select_nothing() {
        let a = sample_gaussian_matrix(&mut SeededGaussianSource::new(1, 0), 10, 20, 0.1).unwrap();
        let out = omp(&a, &[0.0; 10], 4, 0.0).unwrap();
        assert!(out.support.is_empty());
        assert!(out.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn budget_and_shape_checks() {
        let a = DenseMatrix::identity(4).unwrap();
        assert!(matches!(omp(&a, &[0.0; 4], 5, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(omp(&a, &[0.0; 3], 2, 0.0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn duplicate_columns_are_rank_deficient() {
        // Columns 0 and 1 are identical; b lies off their span so both get
        // chosen before the residual vanishes.
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let mut state = OmpState::new(&a, &[3.0, 1.0, 0.0]).unwrap();
        assert_eq!(state.step().unwrap(), Some(0));
        assert_eq!(state.step().unwrap(), Some(2));
        // Residual is zero now, so no further column correlates.
        assert_eq!(state.step().unwrap(), None);

        let mut forced = OmpState::new(&a, &[1.0, 0.0, 0.0]).unwrap();
        forced.add_column(0).unwrap();
        assert!(matches!(
            forced.add_column(1),
            Err(Error::RankDeficient { column: 1, .. })
        ));
    }

    #[test]
    fn residual_invariants_per_iteration() {
        let (k, n, s) = (60, 200, 8);
        let a = sample_gaussian_matrix(&mut SeededGaussianSource::new(4, 0), k, n, 1.0 / k as f64).unwrap();
        let z = generate_binary_signal(4, n, s).unwrap();
        let mut b = matvec(&a, z.values()).unwrap();
        let mut noise = SeededGaussianSource::new(4, 99);
        for x in b.iter_mut() {
            *x += 0.05 * noise.next_gaussian();
        }
        let b_norm = squared_norm(&b).sqrt();
        let mut state = OmpState::new(&a, &b).unwrap();
        let mut last = state.residual_norm();
        for _ in 0..s {
            state.step().unwrap().unwrap();
            let norm = state.residual_norm();
            assert!(norm <= last + 1e-12);
            last = norm;

            let coeffs = state.coefficients();
            let mut fitted = b.to_vec();
            for (&j, c) in state.selected().iter().zip(&coeffs) {
                for (p, f) in fitted.iter_mut().enumerate() {
                    *f -= a.get(p, j) * c;
                }
            }
            for (f, r) in fitted.iter().zip(state.residual()) {
                assert!((f - r).abs() <= 1e-8 * b_norm);
            }
            let norms = a.column_norms();
            for &j in state.selected() {
                let c = dot(&a.column(j), state.residual());
                assert!(c.abs() <= 1e-8 * norms[j] * b_norm);
            }
        }
        let mut sorted = state.selected().to_vec();
        sorted.dedup();
        assert_eq!(sorted.len(), s);
    }
}
