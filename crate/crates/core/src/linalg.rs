//! Small dense helpers that the solvers share.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Result, SahdlError};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
#[derive(Debug, Clone)]
pub(crate) struct Cholesky {
    lower: Array2<f64>,
}

impl Cholesky {
    pub(crate) fn factor(a: ArrayView2<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(SahdlError::Parameter(format!(
                "cholesky of non-square {}x{} matrix",
                n,
                a.ncols()
            )));
        }
        let mut l = Array2::<f64>::zeros((n, n));
        for j in 0..n {
            let mut diag = a[[j, j]];
            for p in 0..j {
                diag -= l[[j, p]] * l[[j, p]];
            }
            if !(diag > 0.0) || !diag.is_finite() {
                return Err(SahdlError::Numerical(format!(
                    "matrix not positive definite at pivot {j} (value {diag})"
                )));
            }
            let d = diag.sqrt();
            l[[j, j]] = d;
            for i in (j + 1)..n {
                let mut v = a[[i, j]];
                for p in 0..j {
                    v -= l[[i, p]] * l[[j, p]];
                }
                l[[i, j]] = v / d;
            }
        }
        Ok(Cholesky { lower: l })
    }

    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: ArrayView1<f64>) -> Array1<f64> {
        let l = &self.lower;
        let n = l.nrows();
        let mut y = b.to_owned();
        for i in 0..n {
            let mut v = y[i];
            for p in 0..i {
                v -= l[[i, p]] * y[p];
            }
            y[i] = v / l[[i, i]];
        }
        for i in (0..n).rev() {
            let mut v = y[i];
            for p in (i + 1)..n {
                v -= l[[p, i]] * y[p];
            }
            y[i] = v / l[[i, i]];
        }
        y
    }
}

pub(crate) fn norm2(v: ArrayView1<f64>) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn max_abs(v: ArrayView1<f64>) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}
