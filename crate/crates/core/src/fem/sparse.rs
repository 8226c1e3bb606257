use crate::error::{invalid, Result};

/// Compressed sparse row matrix with sorted, unique column ids per row.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// triplet order, so the result is deterministic.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < rows && c < cols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn transpose_matvec(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (r, yr) in y.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[c] += v * yr;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scale(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }

    /// `self += b·other`; both matrices must share a sparsity pattern.
    pub fn axpy(&mut self, b: f64, other: &CsrMatrix) -> Result<()> {
        if !self.same_pattern(other) {
            return Err(invalid("axpy needs identical sparsity patterns"));
        }
        for (v, w) in self.values.iter_mut().zip(&other.values) {
            *v += b * w;
        }
        Ok(())
    }

    fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }
}

/// Symmetric positive definite sparse matrix (mass/stiffness type).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseSpd {
    inner: CsrMatrix,
}

impl SparseSpd {
    /// Wraps a square CSR matrix after checking symmetry and a positive
    /// diagonal.
    pub fn new(inner: CsrMatrix) -> Result<Self> {
        if inner.rows != inner.cols {
            return Err(invalid("SPD matrix must be square"));
        }
        let scale = inner.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for r in 0..inner.rows {
            let mut has_diag = false;
            for (c, v) in inner.row(r) {
                if c == r {
                    has_diag = v > 0.0;
                } else if (v - inner.get(c, r)).abs() > 1e-12 * scale {
                    return Err(invalid(format!("matrix not symmetric at ({r}, {c})")));
                }
            }
            if !has_diag {
                return Err(invalid(format!("diagonal entry {r} is not positive")));
            }
        }
        Ok(SparseSpd { inner })
    }

    /// Wraps a matrix known to be symmetric by construction.
    pub(crate) fn new_unchecked(inner: CsrMatrix) -> Self {
        SparseSpd { inner }
    }

    pub fn n(&self) -> usize {
        self.inner.rows
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.inner
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.inner.get(r, c)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.inner.matvec(x)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n()).map(|r| self.inner.get(r, r)).collect()
    }

    /// Row sums, i.e. `M·1`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n()).map(|r| self.inner.row(r).map(|(_, v)| v).sum()).collect()
    }

    /// `a·self + b·other`; both matrices must share a sparsity pattern.
    pub fn lincomb(&self, a: f64, other: &SparseSpd, b: f64) -> Result<SparseSpd> {
        if !self.inner.same_pattern(&other.inner) {
            return Err(invalid("lincomb needs identical sparsity patterns"));
        }
        let mut out = self.inner.clone();
        for (v, w) in out.values.iter_mut().zip(&other.inner.values) {
            *v = a * *v + b * w;
        }
        Ok(SparseSpd { inner: out })
    }

    /// Imposes `x[node] = value` symmetrically: the row and column are
    /// cleared, the diagonal set to one and `rhs` corrected.
    pub fn apply_dirichlet(&mut self, rhs: &mut [f64], node: usize, value: f64) {
        let m = &mut self.inner;
        for r in 0..m.rows {
            let span = m.row_ptr[r]..m.row_ptr[r + 1];
            for k in span {
                let c = m.col_idx[k];
                if r == node {
                    m.values[k] = if c == node { 1.0 } else { 0.0 };
                } else if c == node {
                    rhs[r] -= m.values[k] * value;
                    m.values[k] = 0.0;
                }
            }
        }
        rhs[node] = value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_are_summed() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 0, 2.0), (1, 2, 0.5), (0, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.matvec(&[1.0, 1.0, 2.0]), vec![1.0, 3.0]);
        assert_eq!(m.transpose_matvec(&[1.0, 2.0]), vec![2.0, -1.0, 3.0]);
    }

    #[test]
    fn spd_checks() {
        let asym = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0)]);
        assert!(SparseSpd::new(asym).is_err());
        let neg = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(SparseSpd::new(neg).is_err());
    }

    #[test]
    fn dirichlet_keeps_symmetry() {
        let m = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0), (1, 2, -1.0), (2, 1, -1.0), (2, 2, 2.0)],
        );
        let mut a = SparseSpd::new(m).unwrap();
        let mut rhs = vec![0.0, 0.0, 0.0];
        a.apply_dirichlet(&mut rhs, 2, 3.0);
        assert_eq!(rhs, vec![0.0, 3.0, 3.0]);
        assert_eq!(a.get(1, 2), 0.0);
        assert_eq!(a.get(2, 1), 0.0);
        assert_eq!(a.get(2, 2), 1.0);
    }
}
