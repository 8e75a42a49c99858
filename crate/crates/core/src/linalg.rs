//! Small dense helpers shared by the estimators and the oracle.

use nalgebra::{DMatrix, DVector};

/// Reciprocal-condition threshold below which a symmetric block is treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// Ratio of smallest to largest eigenvalue magnitude of a symmetric matrix.
/// Returns 0 for an all-zero or non-finite matrix; 1 for an empty one.
pub fn symmetric_rcond(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    if m.iter().any(|v| !v.is_finite()) {
        return 0.0;
    }
    if m.nrows() == 1 {
        return if m[(0, 0)] > 0.0 { 1.0 } else { 0.0 };
    }
    let eig = m.clone().symmetric_eigenvalues();
    let max = eig.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |a, &v| a.min(v));
    if max <= 0.0 || min <= 0.0 {
        0.0
    } else {
        min / max
    }
}

/// LU factorisation of a symmetric block that passed the condition test.
pub struct Factor(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>);

impl Factor {
    /// None when the block fails the reciprocal-condition test.
    pub fn new(m: &DMatrix<f64>) -> Option<Self> {
        if symmetric_rcond(m) < RCOND_THRESHOLD {
            return None;
        }
        Some(Factor(m.clone().lu()))
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.0.solve(b).expect("factor checked for invertibility")
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.0.solve(b).expect("factor checked for invertibility")
    }

    pub fn inverse(&self) -> DMatrix<f64> {
        self.0.try_inverse().expect("factor checked for invertibility")
    }
}

pub fn select(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

pub fn select_vec(v: &[f64], idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}

/// Quadratic form `a' M b`.
pub fn bilinear(a: &DVector<f64>, m: &DMatrix<f64>, b: &DVector<f64>) -> f64 {
    a.dot(&(m * b))
}

/// Pairwise (cascade) summation; order-stable for a fixed input order.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        len if len <= 8 => v.iter().sum(),
        len => {
            let (l, r) = v.split_at(len / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}
