//! Real nonsymmetric eigenproblem.
//!
//! Balancing by powers of two, Householder reduction to Hessenberg form,
//! Francis double-shift QR to real Schur form and back-substitution for
//! the eigenvectors. The Hessenberg/QR kernels follow the classic
//! EISPACK `orthes`/`hqr2` routines.

use num_complex::Complex64;

use super::dense::{ComplexMatrix, ComplexVector, DenseMatrix};
use crate::error::{invalid, Error, Result};

/// Eigenvalues sorted by nonincreasing modulus and the matching unit
/// eigenvectors (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct EigResult {
    pub values: ComplexVector,
    pub vectors: ComplexMatrix,
}

pub fn eig(a: &DenseMatrix) -> Result<EigResult> {
    let n = a.rows();
    if n != a.cols() {
        return Err(invalid(format!("eig needs a square matrix, got {}x{}", n, a.cols())));
    }
    if n == 0 {
        return Err(invalid("eig of an empty matrix"));
    }
    if a.data().iter().any(|v| !v.is_finite()) {
        return Err(invalid("eig input has non-finite entries"));
    }
    let mut h: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let scale = balance(&mut h);
    let mut v = orthes(&mut h);
    let (d, e) = hqr2(&mut h, &mut v)?;

    let mut pairs: Vec<(Complex64, Vec<Complex64>)> = Vec::with_capacity(n);
    let mut j = 0;
    while j < n {
        if e[j] == 0.0 {
            let vec = (0..n).map(|i| Complex64::new(scale[i] * v[i][j], 0.0)).collect();
            pairs.push((Complex64::new(d[j], 0.0), vec));
            j += 1;
        } else {
            let (lam, vec): (Complex64, Vec<Complex64>) = (
                Complex64::new(d[j], e[j]),
                (0..n).map(|i| Complex64::new(scale[i] * v[i][j], scale[i] * v[i][j + 1])).collect(),
            );
            let conj_vec = vec.iter().map(|z| z.conj()).collect();
            pairs.push((lam, vec));
            pairs.push((lam.conj(), conj_vec));
            j += 2;
        }
    }
    for (_, vec) in pairs.iter_mut() {
        normalize(vec);
    }
    pairs.sort_by(|(a, _), (b, _)| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.im.total_cmp(&a.im))
            .then(b.re.total_cmp(&a.re))
    });
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (c, (_, vec)) in pairs.iter().enumerate() {
        vectors.set_column(c, vec);
    }
    Ok(EigResult {
        values: pairs.iter().map(|(l, _)| *l).collect(),
        vectors,
    })
}

/// Unit 2-norm, with the first largest-modulus entry made real positive.
fn normalize(v: &mut [Complex64]) {
    let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if nrm == 0.0 {
        return;
    }
    let mut k = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[k].norm() * (1.0 + 1e-12) {
            k = i;
        }
    }
    let phase = v[k].conj() / v[k].norm();
    for z in v.iter_mut() {
        *z = *z * phase / nrm;
    }
}

/// Diagonal similarity `D⁻¹ A D` with power-of-two entries; returns `D`.
fn balance(a: &mut [Vec<f64>]) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    let n = a.len();
    let mut d = vec![1.0; n];
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j][i].abs();
                    r += a[i][j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                d[i] *= f;
                for x in a[i].iter_mut() {
                    *x /= f;
                }
                for row in a.iter_mut() {
                    row[i] *= f;
                }
            }
        }
    }
    d
}

/// Householder reduction to upper Hessenberg form; returns the
/// accumulated orthogonal transform.
fn orthes(h: &mut [Vec<f64>]) -> Vec<Vec<f64>> {
    let n = h.len();
    let high = n - 1;
    let mut ort = vec![0.0; n];
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    if n < 3 {
        return v;
    }
    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[i][m - 1].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i][m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[i][j];
            }
            f /= hh;
            for i in m..=high {
                h[i][j] -= f * ort[i];
            }
        }
        for row in h.iter_mut() {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * row[j];
            }
            f /= hh;
            for j in m..=high {
                row[j] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[m][m - 1] = scale * g;
    }
    for m in (1..high).rev() {
        if h[m][m - 1] == 0.0 {
            continue;
        }
        for i in m + 1..=high {
            ort[i] = h[i][m - 1];
        }
        for j in m..=high {
            let mut g = 0.0;
            for i in m..=high {
                g += ort[i] * v[i][j];
            }
            // double division avoids possible underflow
            g = (g / ort[m]) / h[m][m - 1];
            for i in m..=high {
                v[i][j] += g * ort[i];
            }
        }
    }
    v
}

/// Smith's complex division `(xr + i xi) / (yr + i yi)`.
fn cdiv(xr: f64, xi: f64, yr: f64, yi: f64) -> (f64, f64) {
    if yr.abs() > yi.abs() {
        let r = yi / yr;
        let d = yr + r * yi;
        ((xr + r * xi) / d, (xi - r * xr) / d)
    } else {
        let r = yr / yi;
        let d = yi + r * yr;
        ((r * xr + xi) / d, (r * xi - xr) / d)
    }
}

/// Francis double-shift QR on a Hessenberg matrix followed by
/// back-substitution; `v` ends up holding the (unnormalized) eigenvectors.
#[allow(clippy::many_single_char_names, unused_assignments)]
fn hqr2(h: &mut [Vec<f64>], v: &mut [Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let nn = h.len();
    let mut d = vec![0.0; nn];
    let mut e = vec![0.0; nn];
    let low = 0usize;
    let high = nn - 1;
    let eps = f64::EPSILON;
    let mut exshift = 0.0;
    let (mut p, mut q, mut r, mut s, mut z) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut t, mut w, mut x, mut y);

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[i][j].abs();
        }
    }

    let max_total = 60 * nn.max(1);
    let mut total = 0usize;
    let mut n = nn as isize - 1;
    let mut iter = 0;
    while n >= low as isize {
        let nu = n as usize;
        // look for a single small subdiagonal element
        let mut l = nu;
        while l > low {
            s = h[l - 1][l - 1].abs() + h[l][l].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[l][l - 1] == 0.0 || h[l][l - 1].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            // one root
            h[nu][nu] += exshift;
            d[nu] = h[nu][nu];
            e[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            // two roots
            w = h[nu][nu - 1] * h[nu - 1][nu];
            p = (h[nu - 1][nu - 1] - h[nu][nu]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            h[nu][nu] += exshift;
            h[nu - 1][nu - 1] += exshift;
            x = h[nu][nu];
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                d[nu - 1] = x + z;
                d[nu] = d[nu - 1];
                if z != 0.0 {
                    d[nu] = x - w / z;
                }
                e[nu - 1] = 0.0;
                e[nu] = 0.0;
                x = h[nu][nu - 1];
                s = x.abs() + z.abs();
                p = x / s;
                q = z / s;
                r = (p * p + q * q).sqrt();
                p /= r;
                q /= r;
                for j in nu - 1..nn {
                    z = h[nu - 1][j];
                    h[nu - 1][j] = q * z + p * h[nu][j];
                    h[nu][j] = q * h[nu][j] - p * z;
                }
                for row in h.iter_mut().take(nu + 1) {
                    z = row[nu - 1];
                    row[nu - 1] = q * z + p * row[nu];
                    row[nu] = q * row[nu] - p * z;
                }
                for row in v.iter_mut().take(high + 1).skip(low) {
                    z = row[nu - 1];
                    row[nu - 1] = q * z + p * row[nu];
                    row[nu] = q * row[nu] - p * z;
                }
            } else {
                d[nu - 1] = x + p;
                d[nu] = x + p;
                e[nu - 1] = z;
                e[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            // no convergence yet
            x = h[nu][nu];
            y = 0.0;
            w = 0.0;
            if l < nu {
                y = h[nu - 1][nu - 1];
                w = h[nu][nu - 1] * h[nu - 1][nu];
            }
            if iter == 10 {
                // Wilkinson's exceptional shift
                exshift += x;
                for i in low..=nu {
                    h[i][i] -= x;
                }
                s = h[nu][nu - 1].abs() + h[nu - 1][nu - 2].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in low..=nu {
                        h[i][i] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            total += 1;
            if total > max_total {
                return Err(Error::Numeric(format!("QR iteration did not converge after {total} sweeps")));
            }

            // look for two consecutive small subdiagonal elements
            let mut m = nu - 2;
            loop {
                z = h[m][m];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[m + 1][m] + h[m][m + 1];
                q = h[m + 1][m + 1] - z - r - s;
                r = h[m + 2][m + 1];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                if h[m][m - 1].abs() * (q.abs() + r.abs())
                    < eps * (p.abs() * (h[m - 1][m - 1].abs() + z.abs() + h[m + 1][m + 1].abs()))
                {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                h[i][i - 2] = 0.0;
                if i > m + 2 {
                    h[i][i - 3] = 0.0;
                }
            }

            // double QR step on rows l..=n and columns m..=n
            let mut k = m;
            while k < nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[k][k - 1];
                    q = h[k + 1][k - 1];
                    r = if notlast { h[k + 2][k - 1] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        h[k][k - 1] = -s * x;
                    } else if l != m {
                        h[k][k - 1] = -h[k][k - 1];
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..nn {
                        p = h[k][j] + q * h[k + 1][j];
                        if notlast {
                            p += r * h[k + 2][j];
                            h[k + 2][j] -= p * z;
                        }
                        h[k][j] -= p * x;
                        h[k + 1][j] -= p * y;
                    }
                    for row in h.iter_mut().take(nu.min(k + 3) + 1) {
                        p = x * row[k] + y * row[k + 1];
                        if notlast {
                            p += z * row[k + 2];
                            row[k + 2] -= p * r;
                        }
                        row[k] -= p;
                        row[k + 1] -= p * q;
                    }
                    for row in v.iter_mut().take(high + 1).skip(low) {
                        p = x * row[k] + y * row[k + 1];
                        if notlast {
                            p += z * row[k + 2];
                            row[k + 2] -= p * r;
                        }
                        row[k] -= p;
                        row[k + 1] -= p * q;
                    }
                }
                k += 1;
            }
        }
    }

    // back-substitute to find vectors of the upper triangular form
    if norm == 0.0 {
        return Ok((d, e));
    }
    for nu in (0..nn).rev() {
        p = d[nu];
        q = e[nu];
        if q == 0.0 {
            let mut l = nu;
            h[nu][nu] = 1.0;
            for i in (0..nu).rev() {
                w = h[i][i] - p;
                r = 0.0;
                for j in l..=nu {
                    r += h[i][j] * h[j][nu];
                }
                if e[i] < 0.0 {
                    z = w;
                    s = r;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        h[i][nu] = if w != 0.0 { -r / w } else { -r / (eps * norm) };
                    } else {
                        x = h[i][i + 1];
                        y = h[i + 1][i];
                        q = (d[i] - p) * (d[i] - p) + e[i] * e[i];
                        t = (x * s - z * r) / q;
                        h[i][nu] = t;
                        h[i + 1][nu] = if x.abs() > z.abs() { (-r - w * t) / x } else { (-s - y * t) / z };
                    }
                    t = h[i][nu].abs();
                    if (eps * t) * t > 1.0 {
                        for row in h.iter_mut().take(nu + 1).skip(i) {
                            row[nu] /= t;
                        }
                    }
                }
            }
        } else if q < 0.0 {
            let mut l = nu - 1;
            if h[nu][nu - 1].abs() > h[nu - 1][nu].abs() {
                h[nu - 1][nu - 1] = q / h[nu][nu - 1];
                h[nu - 1][nu] = -(h[nu][nu] - p) / h[nu][nu - 1];
            } else {
                let (cr, ci) = cdiv(0.0, -h[nu - 1][nu], h[nu - 1][nu - 1] - p, q);
                h[nu - 1][nu - 1] = cr;
                h[nu - 1][nu] = ci;
            }
            h[nu][nu - 1] = 0.0;
            h[nu][nu] = 1.0;
            for i in (0..nu.saturating_sub(1)).rev() {
                let mut ra = 0.0;
                let mut sa = 0.0;
                for j in l..=nu {
                    ra += h[i][j] * h[j][nu - 1];
                    sa += h[i][j] * h[j][nu];
                }
                w = h[i][i] - p;
                if e[i] < 0.0 {
                    z = w;
                    r = ra;
                    s = sa;
                } else {
                    l = i;
                    if e[i] == 0.0 {
                        let (cr, ci) = cdiv(-ra, -sa, w, q);
                        h[i][nu - 1] = cr;
                        h[i][nu] = ci;
                    } else {
                        x = h[i][i + 1];
                        y = h[i + 1][i];
                        let mut vr = (d[i] - p) * (d[i] - p) + e[i] * e[i] - q * q;
                        let vi = (d[i] - p) * 2.0 * q;
                        if vr == 0.0 && vi == 0.0 {
                            vr = eps * norm * (w.abs() + q.abs() + x.abs() + y.abs() + z.abs());
                        }
                        let (cr, ci) = cdiv(x * r - z * ra + q * sa, x * s - z * sa - q * ra, vr, vi);
                        h[i][nu - 1] = cr;
                        h[i][nu] = ci;
                        if x.abs() > z.abs() + q.abs() {
                            h[i + 1][nu - 1] = (-ra - w * h[i][nu - 1] + q * h[i][nu]) / x;
                            h[i + 1][nu] = (-sa - w * h[i][nu] - q * h[i][nu - 1]) / x;
                        } else {
                            let (cr, ci) = cdiv(-r - y * h[i][nu - 1], -s - y * h[i][nu], z, q);
                            h[i + 1][nu - 1] = cr;
                            h[i + 1][nu] = ci;
                        }
                    }
                    t = h[i][nu - 1].abs().max(h[i][nu].abs());
                    if (eps * t) * t > 1.0 {
                        for row in h.iter_mut().take(nu + 1).skip(i) {
                            row[nu - 1] /= t;
                            row[nu] /= t;
                        }
                    }
                }
            }
        }
    }

    // back transformation
    for j in (low..nn).rev() {
        for row in v.iter_mut().take(high + 1).skip(low) {
            let mut acc = 0.0;
            for k in low..=j.min(high) {
                acc += row[k] * h[k][j];
            }
            row[j] = acc;
        }
    }
    Ok((d, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rng::NormalStream;

    fn residual(a: &DenseMatrix, r: &EigResult) -> f64 {
        let ca = ComplexMatrix::from_real(a);
        let mut worst: f64 = 0.0;
        for (j, lam) in r.values.iter().enumerate() {
            let w = r.vectors.column(j);
            let aw = ca.matvec(&w);
            let res = aw.iter().zip(&w).map(|(x, y)| (x - lam * y).norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(res);
        }
        worst
    }

    #[test]
    fn diagonal() {
        let a = DenseMatrix::from_rows(&[vec![-1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let r = eig(&a).unwrap();
        assert_eq!(r.values, vec![Complex64::new(2.0, 0.0), Complex64::new(-1.0, 0.0)]);
    }

    #[test]
    fn rotation() {
        let c = std::f64::consts::FRAC_PI_4.cos();
        let a = DenseMatrix::from_rows(&[vec![c, -c], vec![c, c]]).unwrap();
        let r = eig(&a).unwrap();
        let expect = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4);
        assert!((r.values[0] - expect).norm() < 1e-12);
        assert!((r.values[1] - expect.conj()).norm() < 1e-12);
        assert!(residual(&a, &r) < 1e-12);
    }

    fn lu_det(a: &DenseMatrix) -> f64 {
        let n = a.rows();
        let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs())).unwrap();
            if p != k {
                m.swap(p, k);
                det = -det;
            }
            det *= m[k][k];
            for i in k + 1..n {
                let f = m[i][k] / m[k][k];
                for j in k..n {
                    m[i][j] -= f * m[k][j];
                }
            }
        }
        det
    }

    #[test]
    fn determinant_and_residuals_on_random_matrices() {
        for seed in 0..20 {
            let a = NormalStream::new(seed).matrix(8, 8);
            let r = eig(&a).unwrap();
            let prod: Complex64 = r.values.iter().product();
            let det = lu_det(&a);
            assert!((prod.re - det).abs() <= 1e-8 * det.abs().max(1e-300));
            assert!(prod.im.abs() <= 1e-8 * det.abs());
            assert!(residual(&a, &r) <= 1e-9 * a.frobenius_norm());
            // conjugate pairs adjacent, positive imaginary part first
            for (k, l) in r.values.iter().enumerate() {
                if l.im > 0.0 {
                    assert!((r.values[k + 1] - l.conj()).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn symmetric_has_real_spectrum() {
        let g = NormalStream::new(4).matrix(9, 9);
        let s = g.t_matmul(&g);
        let r = eig(&s).unwrap();
        assert!(r.values.iter().all(|l| l.im.abs() <= 1e-10 * s.frobenius_norm()));
        assert!(r.values.windows(2).all(|w| w[0].norm() >= w[1].norm()));
    }

    #[test]
    fn badly_scaled_and_defective_inputs() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 1e6, 0.0],
            vec![1e-6, 2.0, 1e5],
            vec![0.0, 1e-5, 3.0],
        ])
        .unwrap();
        let r = eig(&a).unwrap();
        assert!(residual(&a, &r) <= 1e-9 * a.frobenius_norm());
        let j = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let r = eig(&j).unwrap();
        assert!(r.values.iter().all(|l| (l - 1.0).norm() < 1e-12));
        let z = eig(&DenseMatrix::zeros(3, 3)).unwrap();
        assert!(z.values.iter().all(|l| l.norm() == 0.0));
        let one = eig(&DenseMatrix::from_rows(&[vec![0.5]]).unwrap()).unwrap();
        assert_eq!(one.values[0], Complex64::new(0.5, 0.0));
    }
}
