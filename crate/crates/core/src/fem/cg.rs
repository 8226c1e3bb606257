use super::sparse::SparseSpd;
use crate::error::{invalid, Error, Result};

pub const DEFAULT_CG_TOL: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
///
/// Stops when `‖b − Ax‖₂ ≤ tol·‖b‖₂` measured on the true residual.
/// `max_iter = None` means `10·n`.
pub fn cg_solve(a: &SparseSpd, b: &[f64], tol: f64, max_iter: Option<usize>) -> Result<Vec<f64>> {
    cg_solve_from(a, b, vec![0.0; b.len()], tol, max_iter)
}

/// As [`cg_solve`] with an explicit starting vector.
pub fn cg_solve_from(
    a: &SparseSpd,
    b: &[f64],
    mut x: Vec<f64>,
    tol: f64,
    max_iter: Option<usize>,
) -> Result<Vec<f64>> {
    let n = a.n();
    if b.len() != n || x.len() != n {
        return Err(invalid(format!("system of size {n} with rhs of length {}", b.len())));
    }
    let max_iter = max_iter.unwrap_or(10 * n.max(1));
    let bnorm = norm(b);
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let target = tol * bnorm;
    let dinv: Vec<f64> = a.diagonal().iter().map(|d| 1.0 / d).collect();
    let residual = |x: &[f64]| -> Vec<f64> { a.matvec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect() };

    let mut r = residual(&x);
    let mut iters = 0;
    loop {
        if norm(&r) <= target {
            return Ok(x);
        }
        let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(ri, d)| ri * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iters < max_iter {
            iters += 1;
            let ap = a.matvec(&p);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                return Err(Error::Solver {
                    iterations: iters,
                    residual: norm(&r) / bnorm,
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm(&r) <= target {
                break;
            }
            for i in 0..n {
                z[i] = r[i] * dinv[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        // the recursive residual can drift from the true one; restart on it
        r = residual(&x);
        if norm(&r) <= target {
            return Ok(x);
        }
        if iters >= max_iter {
            return Err(Error::Solver {
                iterations: iters,
                residual: norm(&r) / bnorm,
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::assemble_mass;
    use crate::fem::sparse::CsrMatrix;
    use crate::mesh::build_interval_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_system() {
        let a = SparseSpd::new(CsrMatrix::from_triplets(3, 3, (0..3).map(|i| (i, i, 1.0)).collect())).unwrap();
        let x = cg_solve(&a, &[1.0, -2.0, 3.0], DEFAULT_CG_TOL, None).unwrap();
        assert_eq!(x, vec![1.0, -2.0, 3.0]);
    }

    #[test]
    fn mass_manufactured_solution() {
        let m = build_interval_mesh(0.0, 1.0, 37).unwrap();
        let mm = assemble_mass(&m).unwrap();
        let b = mm.row_sums();
        let x = cg_solve(&mm, &b, DEFAULT_CG_TOL, None).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    #[test]
    fn random_spd_matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        let g: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect()).collect();
        let mut dense = vec![vec![0.0; n]; n];
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v: f64 = (0..n).map(|k| g[i][k] * g[j][k]).sum::<f64>() + if i == j { n as f64 * 0.1 } else { 0.0 };
                dense[i][j] = v;
                trip.push((i, j, v));
            }
        }
        let a = SparseSpd::new(CsrMatrix::from_triplets(n, n, trip)).unwrap();
        let b: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let x = cg_solve(&a, &b, DEFAULT_CG_TOL, None).unwrap();
        let oracle = dense_solve(dense, b.clone());
        for (u, v) in x.iter().zip(&oracle) {
            assert!((u - v).abs() < 1e-9 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn reports_non_convergence() {
        let m = build_interval_mesh(0.0, 1.0, 40).unwrap();
        let mm = assemble_mass(&m).unwrap();
        let b: Vec<f64> = (0..41).map(|i| (i as f64).sin()).collect();
        match cg_solve(&mm, &b, 1e-14, Some(2)) {
            Err(Error::Solver { iterations, residual }) => {
                assert_eq!(iterations, 2);
                assert!(residual > 1e-14);
            }
            other => panic!("expected solver error, got {other:?}"),
        }
    }
}
