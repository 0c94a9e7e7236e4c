//! Dense symmetric positive-definite solves for the penalized normal equations.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor `L` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
    /// Jitter that had to be added to the diagonal, zero when none.
    pub jitter: f64,
}

impl Cholesky {
    /// Factorizes `a`; on failure retries once with `1e-10 * mean(diag)`
    /// added to the diagonal.
    pub fn factor_with_retry(a: &DMatrix<f64>) -> Result<Self> {
        match Self::factor(a) {
            Ok(ch) => Ok(ch),
            Err(first) => {
                let n = a.nrows();
                let mean_diag = (0..n).map(|i| a[(i, i)]).sum::<f64>() / n.max(1) as f64;
                let jitter = 1e-10 * mean_diag.abs();
                if !(jitter > 0.0) {
                    return Err(first);
                }
                let mut shifted = a.clone();
                for i in 0..n {
                    shifted[(i, i)] += jitter;
                }
                match Self::factor(&shifted) {
                    Ok(mut ch) => {
                        ch.jitter = jitter;
                        Ok(ch)
                    }
                    Err(_) => Err(first),
                }
            }
        }
    }

    /// Plain Cholesky; reports the smallest pivot encountered on failure.
    pub fn factor(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "cannot factor a {}x{} matrix",
                a.nrows(),
                a.ncols()
            )));
        }
        let mut l = DMatrix::<f64>::zeros(n, n);
        let mut smallest = f64::INFINITY;
        let scale = (0..n).map(|i| a[(i, i)].abs()).fold(0.0, f64::max);
        for j in 0..n {
            let mut diag = a[(j, j)];
            for k in 0..j {
                diag -= l[(j, k)] * l[(j, k)];
            }
            smallest = smallest.min(diag);
            // relative threshold: pivots at roundoff level mean numerical rank loss
            if !(diag > scale * 1e-14) || !diag.is_finite() {
                let mut worst = diag;
                // keep scanning the remaining diagonal for the report
                for i in j + 1..n {
                    let mut d = a[(i, i)];
                    for k in 0..j {
                        d -= l[(i, k)] * l[(i, k)];
                    }
                    worst = worst.min(d);
                }
                return Err(Error::SingularSystem {
                    smallest_pivot: worst.min(smallest),
                });
            }
            let ljj = diag.sqrt();
            l[(j, j)] = ljj;
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l, jitter: 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor_matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = b.clone();
        self.solve_in_place(x.as_mut_slice());
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = b.clone();
        for mut col in x.column_iter_mut() {
            self.solve_in_place(col.as_mut_slice());
        }
        x
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        let l = &self.l;
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s -= l[(i, k)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[(k, i)] * x[k];
            }
            x[i] = s / l[(i, i)];
        }
    }

    /// `A^{-1}`, filled symmetrically.
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut inv = self.solve_matrix(&DMatrix::identity(n, n));
        for i in 0..n {
            for j in i + 1..n {
                let v = 0.5 * (inv[(i, j)] + inv[(j, i)]);
                inv[(i, j)] = v;
                inv[(j, i)] = v;
            }
        }
        inv
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn solves_spd_system() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 2.0, 0.6, 2.0, 5.0, 1.0, 0.6, 1.0, 3.0]);
        let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let ch = Cholesky::factor(&a).unwrap();
        let x = ch.solve(&b);
        let r = &a * &x - &b;
        assert!(r.norm() < 1e-14);
        let inv = ch.inverse();
        let eye = &a * &inv;
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(eye[(i, j)], if i == j { 1.0 } else { 0.0 }, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn singular_reports_pivot() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        match Cholesky::factor(&a) {
            Err(Error::SingularSystem { smallest_pivot }) => assert!(smallest_pivot.abs() < 1e-12),
            other => panic!("expected SingularSystem, got {other:?}"),
        }
    }

    #[test]
    fn retry_adds_jitter_to_rank_deficient_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let ch = Cholesky::factor_with_retry(&a).unwrap();
        assert_eq!(ch.jitter, 1e-10);
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        assert_eq!(Cholesky::factor_with_retry(&b).unwrap().jitter, 0.0);
    }

    #[test]
    fn indefinite_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            Cholesky::factor_with_retry(&a),
            Err(Error::SingularSystem { smallest_pivot }) if smallest_pivot < 0.0
        ));
    }
}
