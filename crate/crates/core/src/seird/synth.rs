//! Snapshots of known linear dynamics `u_k = Φ Λ^k c`.
//!
//! Complex eigenvalues must come in conjugate pairs so the data stay real;
//! each pair `ρe^{±iθ}` acts as the rotation-scaling block
//! `ρ[[cos θ, −sin θ], [sin θ, cos θ]]` on two basis columns.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::fem::FeField;
use crate::linalg::rng::NormalStream;
use crate::linalg::{qr, DenseMatrix};
use crate::mesh::build_interval_mesh;
use crate::series::{Snapshot, SnapshotSeries};

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub eigenvalues: Vec<Complex64>,
    pub n: usize,
    pub m: usize,
    pub dt_o: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            eigenvalues: vec![
                Complex64::new(0.95, 0.0),
                Complex64::new(0.8, 0.0),
                Complex64::from_polar(0.6, 0.4),
                Complex64::from_polar(0.6, -0.4),
            ],
            n: 200,
            m: 40,
            dt_o: 1.0,
            seed: 0,
        }
    }
}

const SAME_TOL: f64 = 1e-12;

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let k = self.eigenvalues.len();
        if k == 0 || self.n < k.max(2) || self.m == 0 {
            return Err(invalid(format!(
                "need 1 <= #eigenvalues <= n, n >= 2 and m >= 1 (got {k}, n={}, m={})",
                self.n, self.m
            )));
        }
        if !(self.dt_o > 0.0) || !self.dt_o.is_finite() {
            return Err(invalid("dt_o must be positive"));
        }
        for (a, la) in self.eigenvalues.iter().enumerate() {
            if !la.re.is_finite() || !la.im.is_finite() || la.norm() == 0.0 {
                return Err(invalid(format!("eigenvalue {la} must be finite and nonzero")));
            }
            if self.eigenvalues[a + 1..].iter().any(|lb| (la - lb).norm() <= SAME_TOL) {
                return Err(invalid(format!("duplicate eigenvalue {la}")));
            }
            if la.im.abs() > SAME_TOL && !self.eigenvalues.iter().any(|lb| (la.conj() - lb).norm() <= SAME_TOL) {
                return Err(invalid(format!("eigenvalue {la} lacks its conjugate")));
            }
        }
        Ok(())
    }

    /// Block-diagonal real propagator and the orthonormal basis.
    fn operator(&self, g: &mut NormalStream) -> (DenseMatrix, DenseMatrix) {
        let k = self.eigenvalues.len();
        let mut block = DenseMatrix::zeros(k, k);
        let mut col = 0;
        for l in &self.eigenvalues {
            if l.im < -SAME_TOL {
                continue;
            }
            if l.im.abs() <= SAME_TOL {
                block[(col, col)] = l.re;
                col += 1;
            } else {
                block[(col, col)] = l.re;
                block[(col, col + 1)] = -l.im;
                block[(col + 1, col)] = l.im;
                block[(col + 1, col + 1)] = l.re;
                col += 2;
            }
        }
        let (phi, _) = qr(&g.matrix(self.n, k));
        (block, phi)
    }

    /// The `n × (m+1)` snapshot matrix.
    pub fn matrix(&self) -> Result<DenseMatrix> {
        self.validate()?;
        let mut g = NormalStream::new(self.seed);
        let (block, phi) = self.operator(&mut g);
        let mut z: Vec<f64> = (0..self.eigenvalues.len()).map(|_| 1.0 + g.next_uniform()).collect();
        let mut out = DenseMatrix::zeros(self.n, self.m + 1);
        for k in 0..=self.m {
            out.set_column(k, &phi.matvec(&z));
            z = block.matvec(&z);
        }
        Ok(out)
    }
}

/// Synthetic series on an `n`-node interval mesh, field name `u`.
pub fn synth_linear_series(spec: &SynthSpec) -> Result<SnapshotSeries> {
    let data = spec.matrix()?;
    let mesh = Arc::new(build_interval_mesh(0.0, 1.0, spec.n - 1)?);
    let snaps = (0..=spec.m)
        .map(|k| {
            let f = FeField::new(mesh.clone(), data.column(k), "u")?;
            Snapshot::new(k, k as f64 * spec.dt_o, vec![f])
        })
        .collect::<Result<Vec<_>>>()?;
    SnapshotSeries::new(snaps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(eigs: Vec<Complex64>, n: usize, m: usize) -> SynthSpec {
        SynthSpec {
            eigenvalues: eigs,
            n,
            m,
            dt_o: 1.0,
            seed: 4,
        }
    }

    #[test]
    fn constant_and_geometric() {
        let y = spec(vec![Complex64::new(1.0, 0.0)], 3, 5).matrix().unwrap();
        for k in 1..6 {
            for i in 0..3 {
                assert!((y[(i, k)] - y[(i, 0)]).abs() < 1e-14);
            }
        }
        let y = spec(vec![Complex64::new(0.5, 0.0)], 2, 4).matrix().unwrap();
        for k in 1..5 {
            assert!((y[(0, k)] - 0.5 * y[(0, k - 1)]).abs() < 1e-15);
        }
    }

    #[test]
    fn oscillation_period_from_zero_crossings() {
        let (rho, theta) = (0.9, 0.3);
        let s = spec(vec![Complex64::from_polar(rho, theta), Complex64::from_polar(rho, -theta)], 4, 200);
        let y = s.matrix().unwrap();
        // undo the decay; a single harmonic with angular step θ remains
        let row: Vec<f64> = (0..=200).map(|k| y[(0, k)] / rho.powi(k as i32)).collect();
        let crossings = row.windows(2).filter(|w| w[0].signum() != w[1].signum()).count() as f64;
        let expected = 200.0 * theta / std::f64::consts::PI;
        assert!((crossings - expected).abs() <= 1.0, "{crossings} vs {expected}");
    }

    #[test]
    fn invalid_specs() {
        assert!(spec(vec![Complex64::new(0.5, 0.0); 2], 4, 3).validate().is_err());
        assert!(spec(vec![Complex64::new(0.5, 0.1)], 4, 3).validate().is_err());
        assert!(spec(vec![Complex64::new(0.5, 0.0); 1], 1, 3).validate().is_err());
        assert!(synth_linear_series(&spec(vec![Complex64::new(0.7, 0.0)], 4, 3)).unwrap().len() == 4);
    }
}
