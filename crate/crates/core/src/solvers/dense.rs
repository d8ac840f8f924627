//! Dense LU with partial pivoting.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct DenseLu {
    n: usize,
    /// Row-major packed factors: unit-lower `L` below the diagonal, `U` on and above.
    lu: Vec<f64>,
    perm: Vec<usize>,
    sign: f64,
}

/// Factors `a` with row pivoting. Fails when a pivot drops below `1e-14` times the largest entry.
pub fn lu_dense(a: &DMatrix<f64>) -> Result<DenseLu> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidArgument(format!(
            "LU needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    let mut lu = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            lu[r * n + c] = a[(r, c)];
        }
    }
    let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for k in 0..n {
        let (p, pv) = (k..n)
            .map(|r| (r, lu[r * n + k].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pv > 1e-14 * scale) {
            return Err(Error::Singular {
                what: format!("dense LU column {k}"),
                pivot: pv,
                scale,
            });
        }
        if p != k {
            for c in 0..n {
                lu.swap(k * n + c, p * n + c);
            }
            perm.swap(k, p);
            sign = -sign;
        }
        let piv = lu[k * n + k];
        for r in k + 1..n {
            let f = lu[r * n + k] / piv;
            lu[r * n + k] = f;
            if f != 0.0 {
                for c in k + 1..n {
                    lu[r * n + c] -= f * lu[k * n + c];
                }
            }
        }
    }
    Ok(DenseLu { n, lu, perm, sign })
}

impl DenseLu {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn determinant(&self) -> f64 {
        (0..self.n).map(|k| self.lu[k * self.n + k]).product::<f64>() * self.sign
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s / self.lu[r * n + r];
        }
        x
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = b.to_vec();
        for r in 0..n {
            let mut s = y[r];
            for c in 0..r {
                s -= self.lu[c * n + r] * y[c];
            }
            y[r] = s / self.lu[r * n + r];
        }
        for r in (0..n).rev() {
            let mut s = y[r];
            for c in r + 1..n {
                s -= self.lu[c * n + r] * y[c];
            }
            y[r] = s;
        }
        let mut x = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            x[p] = y[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let lu = lu_dense(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!(lu.solve(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(lu.determinant(), 1.0);
    }

    #[test]
    fn hilbert_exact_solution() {
        // H x = b with x = (1, 1, 1, 1): b_i = sum_j 1/(i+j+1)
        let h = DMatrix::from_fn(4, 4, |i, j| 1.0 / (i + j + 1) as f64);
        let b: Vec<f64> = (0..4).map(|i| (0..4).map(|j| 1.0 / (i + j + 1) as f64).sum()).collect();
        let x = lu_dense(&h).unwrap().solve(&b);
        for v in x {
            assert!((v - 1.0).abs() < 1e-11);
        }
        // inverse of the 4x4 Hilbert matrix has integer entries; first column (16, -120, 240, -140)
        let col = lu_dense(&h).unwrap().solve(&[1.0, 0.0, 0.0, 0.0]);
        for (a, b) in col.iter().zip([16.0, -120.0, 240.0, -140.0]) {
            assert!((a - b).abs() < 1e-9 * b.abs());
        }
    }

    #[test]
    fn two_by_two_determinant_and_transpose() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        let lu = lu_dense(&a).unwrap();
        assert!((lu.determinant() - 6.0).abs() < 1e-15);
        let x = lu.solve(&[3.0, 3.0]);
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
        let xt = lu.solve_transpose(&[2.0, 4.0]);
        // A^T = [[2,0],[1,3]]
        assert!((xt[0] - 1.0).abs() < 1e-15 && (xt[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_reported() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(lu_dense(&a), Err(Error::Singular { .. })));
    }
}
