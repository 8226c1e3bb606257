use super::dense::{dot, norm2, DenseMatrix};

/// Thin QR of a tall matrix; returns `Q` (m×k) and `R` (k×n), `k = min(m, n)`.
pub fn qr(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix) {
    let (q, r, _) = householder(a, false);
    (q, r)
}

/// Column-pivoted QR: `A[:, perm] = Q R` with `|R_00| ≥ |R_11| ≥ …`.
pub fn pivoted_qr(a: &DenseMatrix) -> (DenseMatrix, DenseMatrix, Vec<usize>) {
    householder(a, true)
}

/// Numerical rank: number of `|R_ii|` above `rel_tol · max |R_ii|`.
pub fn numerical_rank(a: &DenseMatrix, rel_tol: f64) -> usize {
    let (_, r, _) = pivoted_qr(a);
    let k = r.rows().min(r.cols());
    let diag: Vec<f64> = (0..k).map(|i| r[(i, i)].abs()).collect();
    let top = diag.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    diag.iter().filter(|&&d| d > rel_tol * top).count()
}

fn householder(a: &DenseMatrix, pivot: bool) -> (DenseMatrix, DenseMatrix, Vec<usize>) {
    let (m, n) = (a.rows(), a.cols());
    let k = m.min(n);
    // work column-major for cache-friendly column operations
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = cols.iter().map(|c| dot(c, c)).collect();
    let mut vs: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut betas = Vec::with_capacity(k);

    for j in 0..k {
        if pivot {
            // recompute exactly to avoid the classic downdating cancellation
            for (c, nrm) in cols.iter().zip(norms.iter_mut()).skip(j) {
                *nrm = dot(&c[j..], &c[j..]);
            }
            let p = (j..n).fold(j, |best, c| if norms[c] > norms[best] { c } else { best });
            cols.swap(j, p);
            norms.swap(j, p);
            perm.swap(j, p);
        }
        let x = &cols[j][j..];
        let alpha = norm2(x);
        let mut v = x.to_vec();
        let beta;
        if alpha == 0.0 {
            beta = 0.0;
        } else {
            let s = if x[0] >= 0.0 { 1.0 } else { -1.0 };
            v[0] += s * alpha;
            let vv = dot(&v, &v);
            beta = 2.0 / vv;
        }
        for c in cols.iter_mut().skip(j) {
            let t = beta * dot(&v, &c[j..]);
            for (ci, vi) in c[j..].iter_mut().zip(&v) {
                *ci -= t * vi;
            }
        }
        vs.push(v);
        betas.push(beta);
    }

    let r = DenseMatrix::from_fn(k, n, |i, j| if i <= j { cols[j][i] } else { 0.0 });
    // Q = H_0 H_1 … H_{k-1} applied to the first k unit vectors
    let mut q = DenseMatrix::zeros(m, k);
    for c in 0..k {
        let mut e = vec![0.0; m];
        e[c] = 1.0;
        for j in (0..k).rev() {
            let t = betas[j] * dot(&vs[j], &e[j..]);
            for (ei, vi) in e[j..].iter_mut().zip(&vs[j]) {
                *ei -= t * vi;
            }
        }
        q.set_column(c, &e);
    }
    (q, r, perm)
}
