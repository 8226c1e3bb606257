use super::dense::{dot, norm2, DenseMatrix};
use super::qr::qr;
use super::rng::NormalStream;
use crate::error::{invalid, Error, Result};

const MAX_SWEEPS: usize = 80;

/// Thin SVD `A = U diag(σ) Vᵀ` with `σ` nonincreasing.
#[derive(Clone, Debug, PartialEq)]
pub struct SvdResult {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdResult {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.clone();
        us.scale_columns(&self.sigma);
        us.matmul(&self.v.transpose())
    }
}

/// One-sided Jacobi SVD. Tall inputs are first reduced by QR so the
/// rotations act on a square `k×k` factor.
pub fn svd(a: &DenseMatrix) -> Result<SvdResult> {
    if a.data().iter().any(|v| !v.is_finite()) {
        return Err(invalid("svd input has non-finite entries"));
    }
    if a.rows() == 0 || a.cols() == 0 {
        return Err(invalid("svd of an empty matrix"));
    }
    if a.rows() < a.cols() {
        let t = svd(&a.transpose())?;
        return Ok(SvdResult {
            u: t.v,
            sigma: t.sigma,
            v: t.u,
        });
    }
    // a power-of-two scaling is exact and keeps the squared norms inside QR
    // and Jacobi away from underflow and overflow
    let big = a.max_abs();
    let scale = if big > 0.0 { 2f64.powi(-(big.log2().round() as i32)) } else { 1.0 };
    let scaled = DenseMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)] * scale);
    let (q, r) = qr(&scaled);
    let small = jacobi_square(&r)?;
    Ok(SvdResult {
        u: q.matmul(&small.u),
        sigma: small.sigma.iter().map(|x| x / scale).collect(),
        v: small.v,
    })
}

fn jacobi_square(r: &DenseMatrix) -> Result<SvdResult> {
    let n = r.cols();
    // columns of the working matrix and of V
    let mut w: Vec<Vec<f64>> = (0..n).map(|j| r.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    let eps = f64::EPSILON;
    // a dot product of length n carries about n·eps relative rounding, so a
    // stricter cutoff can cycle forever on numerically zero columns
    let tol = eps * n.max(1) as f64;
    // columns below this squared norm are numerically zero and left alone
    let floor = (tol * r.frobenius_norm()).powi(2);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                let gamma = dot(&w[p], &w[q]);
                if gamma == 0.0 || alpha <= floor || beta <= floor || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!("Jacobi SVD did not converge in {MAX_SWEEPS} sweeps")));
    }

    let sigma: Vec<f64> = w.iter().map(|c| norm2(c)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
    let top = sigma[order[0]];
    let mut u_cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut deficient = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        if sigma[j] > top * 1e3 * eps * n as f64 && sigma[j] > 0.0 {
            u_cols.push(w[j].iter().map(|x| x / sigma[j]).collect());
        } else {
            u_cols.push(vec![0.0; n]);
            deficient.push(k);
        }
    }
    complete_orthonormal(&mut u_cols, &deficient);
    let v_cols: Vec<Vec<f64>> = order.iter().map(|&j| v[j].clone()).collect();
    Ok(SvdResult {
        u: DenseMatrix::from_columns(&u_cols)?,
        sigma: order.iter().map(|&j| sigma[j]).collect(),
        v: DenseMatrix::from_columns(&v_cols)?,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Fills the listed (zero) columns with unit vectors orthogonal to all
/// other columns, by Gram–Schmidt against the canonical basis.
fn complete_orthonormal(cols: &mut [Vec<f64>], slots: &[usize]) {
    let n = cols.first().map_or(0, Vec::len);
    let mut candidate = 0;
    for &slot in slots {
        while candidate < n {
            let mut e = vec![0.0; n];
            e[candidate] = 1.0;
            candidate += 1;
            for _ in 0..2 {
                for (k, c) in cols.iter().enumerate() {
                    if k == slot {
                        continue;
                    }
                    let d = dot(c, &e);
                    for (ei, ci) in e.iter_mut().zip(c) {
                        *ei -= d * ci;
                    }
                }
            }
            let nrm = norm2(&e);
            if nrm > 1e-6 {
                cols[slot] = e.iter().map(|x| x / nrm).collect();
                break;
            }
        }
    }
}

/// Keeps the leading `r` singular triplets.
pub fn truncate(s: &SvdResult, r: usize) -> Result<SvdResult> {
    if r == 0 || r > s.rank() {
        return Err(invalid(format!("truncation rank {r} outside 1..={}", s.rank())));
    }
    Ok(SvdResult {
        u: s.u.columns(0..r),
        sigma: s.sigma[..r].to_vec(),
        v: s.v.columns(0..r),
    })
}

/// Randomized SVD: Gaussian sketch, `q` power iterations with QR
/// re-orthogonalization after every product, then an exact SVD of the
/// projected `k×cols` matrix, `k = r + p`. Returns `r` triplets.
pub fn randomized_svd(a: &DenseMatrix, r: usize, p: usize, q: usize, seed: u64) -> Result<SvdResult> {
    let k = r + p;
    if r == 0 || k > a.rows().min(a.cols()) {
        return Err(invalid(format!(
            "randomized svd needs 1 <= r and r + p <= {} (got r={r}, p={p})",
            a.rows().min(a.cols())
        )));
    }
    let omega = NormalStream::new(seed).matrix(a.cols(), k);
    let (mut basis, _) = qr(&a.matmul(&omega));
    for _ in 0..q {
        let (z, _) = qr(&a.t_matmul(&basis));
        let (y, _) = qr(&a.matmul(&z));
        basis = y;
    }
    let b = basis.t_matmul(a);
    let small = svd(&b)?;
    let full = SvdResult {
        u: basis.matmul(&small.u),
        sigma: small.sigma,
        v: small.v,
    };
    truncate(&full, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthonormality_error(m: &DenseMatrix) -> f64 {
        m.t_matmul(m).sub(&DenseMatrix::identity(m.cols())).max_abs()
    }

    #[test]
    fn identity_and_diagonal() {
        let s = svd(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(s.sigma, vec![1.0, 1.0, 1.0]);
        let d = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let s = svd(&d).unwrap();
        assert!((s.sigma[0] - 3.0).abs() < 1e-15 && (s.sigma[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_shapes_reconstruct() {
        for (m, n, seed) in [(20, 8, 1), (8, 20, 2), (12, 12, 3), (1, 5, 4), (5, 1, 5)] {
            let a = NormalStream::new(seed).matrix(m, n);
            let s = svd(&a).unwrap();
            assert!(s.reconstruct().sub(&a).frobenius_norm() <= 1e-12 * a.frobenius_norm());
            assert!(orthonormality_error(&s.u) < 1e-10);
            assert!(orthonormality_error(&s.v) < 1e-10);
            assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rank_deficient_completes_u() {
        let mut g = NormalStream::new(17);
        let a = g.matrix(10, 2).matmul(&g.matrix(2, 6));
        let s = svd(&a).unwrap();
        assert!(s.sigma[2..].iter().all(|&x| x < 1e-13 * s.sigma[0]));
        assert!(orthonormality_error(&s.u) < 1e-10);
        assert!(s.reconstruct().sub(&a).frobenius_norm() <= 1e-12 * a.frobenius_norm());
        let z = svd(&DenseMatrix::zeros(4, 3)).unwrap();
        assert_eq!(z.sigma, vec![0.0; 3]);
        assert!(orthonormality_error(&z.u) < 1e-12);
    }

    #[test]
    fn rank_deficient_batch_converges() {
        let mut g = NormalStream::new(29);
        for k in 0..300 {
            let (rows, rank, cols) = [(30, 6, 20), (5, 1, 4), (12, 2, 12)][k % 3];
            let a = g.matrix(rows, rank).matmul(&g.matrix(rank, cols));
            let s = svd(&a).unwrap();
            assert!(s.reconstruct().sub(&a).frobenius_norm() <= 1e-12 * a.frobenius_norm());
            assert!(orthonormality_error(&s.u) < 1e-10 && orthonormality_error(&s.v) < 1e-10);
        }
    }

    #[test]
    fn extreme_scales() {
        let mut g = NormalStream::new(31);
        let base = g.matrix(15, 6).matmul(&g.matrix(6, 24));
        let ref_sigma = svd(&base).unwrap().sigma;
        for scale in [1e-150, 1e150] {
            let a = DenseMatrix::from_fn(15, 24, |i, j| base[(i, j)] * scale);
            let s = svd(&a).unwrap();
            assert!(s.reconstruct().sub(&a).frobenius_norm() <= 1e-12 * a.frobenius_norm());
            for (x, y) in s.sigma.iter().zip(&ref_sigma).take(6) {
                assert!((x / scale - y).abs() <= 1e-12 * ref_sigma[0]);
            }
        }
    }

    #[test]
    fn truncation_bounds() {
        let a = NormalStream::new(8).matrix(10, 6);
        let s = svd(&a).unwrap();
        assert_eq!(truncate(&s, 6).unwrap(), s);
        assert!(truncate(&s, 0).is_err() && truncate(&s, 7).is_err());
        let rank1 = DenseMatrix::from_fn(5, 4, |i, j| (i + 1) as f64 * (j as f64 - 1.5));
        let t = truncate(&svd(&rank1).unwrap(), 1).unwrap();
        assert!(t.reconstruct().sub(&rank1).frobenius_norm() < 1e-13 * rank1.frobenius_norm());
    }

    #[test]
    fn randomized_matches_exact_on_low_rank() {
        let mut g = NormalStream::new(99);
        let a = g.matrix(200, 5).matmul(&g.matrix(5, 50));
        let exact = svd(&a).unwrap();
        let r1 = randomized_svd(&a, 5, 10, 2, 7).unwrap();
        let r2 = randomized_svd(&a, 5, 10, 2, 7).unwrap();
        assert_eq!(r1, r2);
        for i in 0..5 {
            assert!((r1.sigma[i] - exact.sigma[i]).abs() <= 1e-10 * exact.sigma[i]);
        }
        assert!(r1.reconstruct().sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm());
        assert!(randomized_svd(&a, 45, 10, 0, 1).is_err());
    }

    #[test]
    fn randomized_full_rank_tiny() {
        let a = NormalStream::new(3).matrix(6, 4);
        let exact = svd(&a).unwrap();
        let r = randomized_svd(&a, 4, 0, 0, 11).unwrap();
        for i in 0..4 {
            assert!((r.sigma[i] - exact.sigma[i]).abs() <= 1e-8 * exact.sigma[0]);
        }
    }
}
