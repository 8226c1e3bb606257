use num_complex::Complex64;

use super::dense::{ComplexMatrix, ComplexVector, DenseMatrix};
use super::svd::svd;
use crate::error::{invalid, Result};

/// Minimum-norm least-squares solution of `B x ≈ y`.
///
/// Works on the real embedding `[[Re B, −Im B], [Im B, Re B]]`, whose SVD
/// carries every singular value of `B` twice. Singular values below
/// `rcond · σ_max` are treated as zero.
pub fn pinv_apply(b: &ComplexMatrix, y: &[Complex64], rcond: f64) -> Result<ComplexVector> {
    let (n, r) = (b.rows(), b.cols());
    if n == 0 || r == 0 {
        return Err(invalid("pinv of an empty matrix"));
    }
    if y.len() != n {
        return Err(invalid(format!("rhs length {} differs from {n} rows", y.len())));
    }
    let emb = DenseMatrix::from_fn(2 * n, 2 * r, |i, j| {
        let z = b[(i % n, j % r)];
        match (i < n, j < r) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    });
    let rhs: Vec<f64> = y.iter().map(|z| z.re).chain(y.iter().map(|z| z.im)).collect();
    let s = svd(&emb)?;
    let cutoff = rcond * s.sigma.first().copied().unwrap_or(0.0);
    let mut x = vec![0.0; 2 * r];
    for (k, &sig) in s.sigma.iter().enumerate() {
        if sig <= cutoff || sig == 0.0 {
            continue;
        }
        let coef: f64 = (0..2 * n).map(|i| s.u[(i, k)] * rhs[i]).sum::<f64>() / sig;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj += coef * s.v[(j, k)];
        }
    }
    Ok((0..r).map(|j| Complex64::new(x[j], x[j + r])).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn orthonormal_columns_give_adjoint() {
        let s = 0.5f64.sqrt();
        let b = ComplexMatrix::new(2, 2, vec![c(s, 0.0), c(0.0, s), c(0.0, s), c(s, 0.0)]).unwrap();
        let y = vec![c(1.0, 2.0), c(-0.5, 0.25)];
        let x = pinv_apply(&b, &y, 1e-12).unwrap();
        for j in 0..2 {
            let adj: Complex64 = (0..2).map(|i| b[(i, j)].conj() * y[i]).sum();
            assert!((x[j] - adj).norm() < 1e-14);
        }
    }

    #[test]
    fn square_matches_direct_solve() {
        let b = ComplexMatrix::new(2, 2, vec![c(1.0, 1.0), c(2.0, 0.0), c(0.0, -1.0), c(3.0, 0.5)]).unwrap();
        let y = vec![c(1.0, 0.0), c(0.0, 1.0)];
        let x = pinv_apply(&b, &y, 1e-12).unwrap();
        // Cramer's rule
        let det = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
        let x0 = (y[0] * b[(1, 1)] - b[(0, 1)] * y[1]) / det;
        let x1 = (b[(0, 0)] * y[1] - y[0] * b[(1, 0)]) / det;
        assert!((x[0] - x0).norm() < 1e-13 && (x[1] - x1).norm() < 1e-13);
    }

    #[test]
    fn zero_column_gets_zero_coefficient() {
        let b = ComplexMatrix::new(3, 2, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let y = vec![c(1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0)];
        let x = pinv_apply(&b, &y, 1e-12).unwrap();
        assert_eq!(x[1], c(0.0, 0.0));
        // least squares on the live column: (bᴴy)/(bᴴb) = (1 + 2)/(1 + 1 + 1)
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-14);
    }
}
