//! Exact dynamic mode decomposition.
//!
//! Snapshots `u_0 … u_m` are split into `Y1 = [u_0 … u_{m−1}]` and
//! `Y2 = [u_1 … u_m]`. With the rank-`r` SVD `Y1 ≈ U_r Σ_r V_rᵀ` the
//! reduced operator is `Ã = U_rᵀ Y2 V_r Σ_r⁻¹`; its eigenpairs `Ã W = W Λ`
//! give the modes `Ψ = Y2 V_r Σ_r⁻¹ W`, the continuous eigenvalues
//! `ω = ln(λ)/Δt_o` and, with `b = Ψ⁺ u_0`, the model
//! `u(t) ≈ Re(Ψ exp(ω (t − t0)) b)`.

mod model_io;

use std::sync::Arc;

use log::warn;
use num_complex::Complex64;

pub use model_io::{read_model, write_model};

use crate::error::{invalid, Error, Result};
use crate::linalg::{eig, pinv_apply, randomized_svd, svd, truncate, ComplexMatrix, ComplexVector, DenseMatrix, SvdResult};
use crate::mesh::SimplicialMesh;

/// Singular values below this fraction of `σ_0` are never inverted.
pub const SIGMA_CUTOFF: f64 = 1e-12;
/// Eigenvalues with smaller modulus have no logarithm and are dropped.
pub const LAMBDA_CUTOFF: f64 = 1e-14;
const PINV_RCOND: f64 = 1e-12;

/// Uniformly sampled snapshots stored as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotMatrix {
    pub data: DenseMatrix,
    pub t0: f64,
    pub dt_o: f64,
    pub field_name: String,
    pub mesh: Option<Arc<SimplicialMesh>>,
}

impl SnapshotMatrix {
    pub fn new(data: DenseMatrix, t0: f64, dt_o: f64, field_name: impl Into<String>) -> Result<Self> {
        if !(dt_o > 0.0) || !dt_o.is_finite() || !t0.is_finite() {
            return Err(invalid(format!("sampling interval must be positive (got {dt_o})")));
        }
        if data.rows() == 0 || data.cols() < 2 {
            return Err(invalid(format!(
                "need at least one row and two snapshots, got {}x{}",
                data.rows(),
                data.cols()
            )));
        }
        Ok(SnapshotMatrix {
            data,
            t0,
            dt_o,
            field_name: field_name.into(),
            mesh: None,
        })
    }

    pub fn with_mesh(mut self, mesh: Arc<SimplicialMesh>) -> Self {
        self.mesh = Some(mesh);
        self
    }

    /// State dimension `n`.
    pub fn n(&self) -> usize {
        self.data.rows()
    }

    /// Number of transitions `m` (one less than the snapshot count).
    pub fn m(&self) -> usize {
        self.data.cols() - 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt_o
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.data.cols()).map(|k| self.time(k)).collect()
    }

    /// Snapshots `first..=last` as a new matrix starting at their own time.
    pub fn window(&self, first: usize, last: usize) -> Result<SnapshotMatrix> {
        if last >= self.data.cols() || first >= last {
            return Err(invalid(format!(
                "window {first}..={last} outside 0..={}",
                self.data.cols() - 1
            )));
        }
        let mut w = SnapshotMatrix::new(self.data.columns(first..last + 1), self.time(first), self.dt_o, self.field_name.clone())?;
        w.mesh = self.mesh.clone();
        Ok(w)
    }
}

/// `(Y1, Y2)`: all columns but the last, all columns but the first.
pub fn split(y: &SnapshotMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let c = y.data.cols();
    if c < 2 {
        return Err(invalid("split needs at least two snapshots"));
    }
    Ok((y.data.columns(0..c - 1), y.data.columns(1..c)))
}

/// `κ(r) = Σ_{i>r} σ_i² / Σ σ_i²` for `r = 1..=len`, i.e. the variance
/// left out by a rank-`r` truncation.
pub fn discarded_energy(sigma: &[f64]) -> Result<Vec<f64>> {
    if sigma.is_empty() || sigma.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) {
        return Err(invalid("singular values must be nonempty, finite and nonnegative"));
    }
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return Err(invalid("all singular values are zero"));
    }
    let mut tail = vec![0.0; sigma.len() + 1];
    for i in (0..sigma.len()).rev() {
        tail[i] = tail[i + 1] + sigma[i] * sigma[i];
    }
    Ok((1..=sigma.len()).map(|r| tail[r] / total).collect())
}

/// Smallest `r` with `κ(r) ≤ τ`.
pub fn choose_rank(sigma: &[f64], tau: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&tau) {
        return Err(invalid(format!("threshold τ must lie in [0, 1), got {tau}")));
    }
    let kappa = discarded_energy(sigma)?;
    Ok(kappa.iter().position(|&k| k <= tau).map_or(sigma.len(), |i| i + 1))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RankSpec {
    Fixed(usize),
    /// Hard threshold τ on the discarded variance.
    Threshold(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SvdMethod {
    Exact,
    Randomized { seed: u64, oversample: usize, power_iters: usize },
}

/// How the amplitudes `b` are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AmplitudeMode {
    /// `b = Ψ⁺ u_0`.
    #[default]
    FirstSnapshot,
    /// Least squares over every training snapshot,
    /// `min_b Σ_k ‖Ψ Λ^k b − u_k‖`.
    AllSnapshots,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitOptions {
    pub rank: RankSpec,
    pub svd: SvdMethod,
    pub amplitudes: AmplitudeMode,
}

impl FitOptions {
    pub fn exact(rank: RankSpec) -> Self {
        FitOptions {
            rank,
            svd: SvdMethod::Exact,
            amplitudes: AmplitudeMode::FirstSnapshot,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DmdModel {
    pub lambda: ComplexVector,
    pub omega: ComplexVector,
    /// `n × r`, unnormalized exact-DMD modes.
    pub modes: ComplexMatrix,
    pub amplitudes: ComplexVector,
    pub t0: f64,
    pub dt_o: f64,
    pub field_name: String,
}

/// Model output at one time: the real part and the size of the discarded
/// imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub values: Vec<f64>,
    pub imag_norm: f64,
}

impl DmdModel {
    pub fn rank(&self) -> usize {
        self.lambda.len()
    }

    pub fn n(&self) -> usize {
        self.modes.rows()
    }

    /// Modes whose eigenvalue sits on the negative real axis: the principal
    /// logarithm puts them at the Nyquist frequency `π/Δt_o`, so values
    /// between samples are not meaningful for them.
    pub fn aliased(&self) -> Vec<bool> {
        self.lambda
            .iter()
            .map(|l| l.re < 0.0 && l.im.abs() <= 1e-12 * l.norm())
            .collect()
    }

    pub fn evaluate(&self, t: f64) -> Evaluation {
        let coef: Vec<Complex64> = self
            .omega
            .iter()
            .zip(&self.amplitudes)
            .map(|(w, b)| (w * (t - self.t0)).exp() * b)
            .collect();
        let z = self.modes.matvec(&coef);
        Evaluation {
            values: z.iter().map(|c| c.re).collect(),
            imag_norm: z.iter().map(|c| c.im * c.im).sum::<f64>().sqrt(),
        }
    }

    /// Columns `evaluate(t).values` for each requested time.
    pub fn reconstruct(&self, times: &[f64]) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.n(), times.len());
        for (k, &t) in times.iter().enumerate() {
            out.set_column(k, &self.evaluate(t).values);
        }
        out
    }
}

fn compute_svd(y1: &DenseMatrix, opts: &FitOptions) -> Result<SvdResult> {
    let kmax = y1.rows().min(y1.cols());
    match (opts.svd, opts.rank) {
        (SvdMethod::Exact, _) => svd(y1),
        (SvdMethod::Randomized { .. }, RankSpec::Threshold(_)) => Err(invalid(
            "threshold rank selection needs the full spectrum; use the exact SVD",
        )),
        (SvdMethod::Randomized { seed, oversample, power_iters }, RankSpec::Fixed(r)) => {
            if r == 0 || r > kmax {
                return Err(invalid(format!("rank {r} outside 1..={kmax}")));
            }
            let p = oversample.min(kmax - r);
            if p < oversample {
                warn!("oversampling reduced from {oversample} to {p} to fit a {}x{} matrix", y1.rows(), y1.cols());
            }
            randomized_svd(y1, r, p, power_iters, seed)
        }
    }
}

/// Fits an exact-DMD model to the snapshot matrix.
pub fn fit(y: &SnapshotMatrix, opts: &FitOptions) -> Result<DmdModel> {
    let (y1, y2) = split(y)?;
    if y1.cols() < 2 {
        return Err(Error::Fit("at least three snapshots are required".into()));
    }
    let kmax = y1.rows().min(y1.cols());
    match opts.rank {
        RankSpec::Fixed(r) if r == 0 || r > kmax => {
            return Err(invalid(format!("rank {r} outside 1..={kmax}")));
        }
        RankSpec::Threshold(tau) if !(0.0..1.0).contains(&tau) => {
            return Err(invalid(format!("threshold τ must lie in [0, 1), got {tau}")));
        }
        _ => {}
    }
    let s = compute_svd(&y1, opts)?;
    let mut r = match opts.rank {
        RankSpec::Fixed(r) => r,
        RankSpec::Threshold(tau) => choose_rank(&s.sigma, tau)?,
    };
    let s0 = s.sigma[0];
    let usable = s.sigma.iter().take(r).take_while(|&&x| x > SIGMA_CUTOFF * s0).count();
    if usable == 0 {
        return Err(Error::Fit("snapshot matrix is numerically zero".into()));
    }
    if usable < r {
        warn!("rank reduced from {r} to {usable}: remaining singular values are below {SIGMA_CUTOFF:e}·σ0");
        r = usable;
    }
    let t = truncate(&s, r)?;

    // B = Y2 V_r Σ_r⁻¹ and Ã = U_rᵀ B
    let mut b = y2.matmul(&t.v);
    b.scale_columns(&t.sigma.iter().map(|x| 1.0 / x).collect::<Vec<_>>());
    let a_tilde = t.u.t_matmul(&b);
    let e = eig(&a_tilde).map_err(|err| Error::Fit(format!("eigendecomposition failed: {err}")))?;

    let keep: Vec<usize> = (0..r).filter(|&j| e.values[j].norm() >= LAMBDA_CUTOFF).collect();
    if keep.len() < r {
        warn!("dropped {} mode(s) with |λ| < {LAMBDA_CUTOFF:e}", r - keep.len());
    }
    if keep.is_empty() {
        return Err(Error::Fit("every eigenvalue vanishes".into()));
    }
    let mut w = ComplexMatrix::zeros(r, keep.len());
    for (c, &j) in keep.iter().enumerate() {
        w.set_column(c, &e.vectors.column(j));
    }
    let modes = ComplexMatrix::real_matmul(&b, &w);
    let lambda: ComplexVector = keep.iter().map(|&j| e.values[j]).collect();
    let omega: ComplexVector = lambda.iter().map(|l| l.ln() / y.dt_o).collect();
    if lambda.iter().any(|l| l.re < 0.0 && l.im.abs() <= 1e-12 * l.norm()) {
        warn!("negative real eigenvalue(s): principal logarithm aliases them to the Nyquist frequency");
    }

    let amplitudes = match opts.amplitudes {
        AmplitudeMode::FirstSnapshot => {
            let u0: ComplexVector = y.data.column(0).iter().map(|&x| Complex64::new(x, 0.0)).collect();
            pinv_apply(&modes, &u0, PINV_RCOND)?
        }
        AmplitudeMode::AllSnapshots => {
            let (n, k) = (modes.rows(), modes.cols());
            let cols = y.data.cols();
            let mut stacked = ComplexMatrix::zeros(n * cols, k);
            let mut rhs = Vec::with_capacity(n * cols);
            for s in 0..cols {
                let pw: Vec<Complex64> = lambda.iter().map(|l| l.powu(s as u32)).collect();
                for i in 0..n {
                    for j in 0..k {
                        stacked[(s * n + i, j)] = modes[(i, j)] * pw[j];
                    }
                    rhs.push(Complex64::new(y.data[(i, s)], 0.0));
                }
            }
            pinv_apply(&stacked, &rhs, PINV_RCOND)?
        }
    };

    Ok(DmdModel {
        lambda,
        omega,
        modes,
        amplitudes,
        t0: y.t0,
        dt_o: y.dt_o,
        field_name: y.field_name.clone(),
    })
}

/// Per-snapshot relative errors and the global relative Frobenius error.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorReport {
    /// `η_k = ‖u_k − û_k‖ / ‖u_k‖`; `None` where the truth column is zero.
    pub eta: Vec<Option<f64>>,
    pub eta_f: f64,
    /// Columns before this index are reconstruction, the rest prediction.
    pub split_index: usize,
}

pub fn errors(truth: &DenseMatrix, approx: &DenseMatrix, split_index: usize) -> Result<ErrorReport> {
    if (truth.rows(), truth.cols()) != (approx.rows(), approx.cols()) {
        return Err(invalid(format!(
            "truth is {}x{} but approximation is {}x{}",
            truth.rows(),
            truth.cols(),
            approx.rows(),
            approx.cols()
        )));
    }
    let mut num_total = 0.0;
    let mut den_total = 0.0;
    let mut eta = Vec::with_capacity(truth.cols());
    for k in 0..truth.cols() {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..truth.rows() {
            let d = truth[(i, k)] - approx[(i, k)];
            num += d * d;
            den += truth[(i, k)] * truth[(i, k)];
        }
        num_total += num;
        den_total += den;
        eta.push((den > 0.0).then(|| (num / den).sqrt()));
    }
    if den_total == 0.0 {
        return Err(invalid("truth snapshots are all zero; relative error undefined"));
    }
    Ok(ErrorReport {
        eta,
        eta_f: (num_total / den_total).sqrt(),
        split_index,
    })
}

impl ErrorReport {
    /// CSV with header `time,eta,regime` and a final `eta_F,<value>,` row.
    pub fn to_csv(&self, times: &[f64]) -> Result<String> {
        if times.len() != self.eta.len() {
            return Err(invalid("one time per error column is required"));
        }
        let mut s = String::from("time,eta,regime\n");
        for (k, (t, e)) in times.iter().zip(&self.eta).enumerate() {
            let regime = if k < self.split_index { "reconstruction" } else { "prediction" };
            match e {
                Some(v) => s.push_str(&format!("{t},{v:.16e},{regime}\n")),
                None => s.push_str(&format!("{t},nan,{regime}\n")),
            }
        }
        s.push_str(&format!("eta_F,{:.16e},\n", self.eta_f));
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rng::NormalStream;

    fn scalar_series() -> SnapshotMatrix {
        SnapshotMatrix::new(DenseMatrix::from_rows(&[vec![1.0, 0.5, 0.25, 0.125]]).unwrap(), 0.0, 1.0, "x").unwrap()
    }

    #[test]
    fn split_shapes() {
        let y = SnapshotMatrix::new(DenseMatrix::from_fn(2, 3, |i, j| (10 * i + j) as f64), 0.0, 1.0, "u").unwrap();
        let (a, b) = split(&y).unwrap();
        assert_eq!(a.column(0), vec![0.0, 10.0]);
        assert_eq!(a.column(1), vec![1.0, 11.0]);
        assert_eq!(b.column(0), vec![1.0, 11.0]);
        assert_eq!(b.column(1), vec![2.0, 12.0]);
        let two = SnapshotMatrix::new(DenseMatrix::from_fn(4, 2, |i, j| (i + j) as f64), 0.0, 1.0, "u").unwrap();
        let (a, b) = split(&two).unwrap();
        assert_eq!((a.cols(), b.cols()), (1, 1));
        assert!(SnapshotMatrix::new(DenseMatrix::zeros(3, 1), 0.0, 1.0, "u").is_err());
    }

    #[test]
    fn rank_by_threshold() {
        assert_eq!(choose_rank(&[3.0, 1.0], 0.2).unwrap(), 1);
        assert_eq!(choose_rank(&[3.0, 1.0], 0.05).unwrap(), 2);
        for tau in [0.0, 0.3, 0.99] {
            assert_eq!(choose_rank(&[1.0, 0.0, 0.0], tau).unwrap(), 1);
        }
        assert!(choose_rank(&[0.0, 0.0], 0.1).is_err());
        assert!(choose_rank(&[1.0], 1.0).is_err());
    }

    #[test]
    fn scalar_geometric_sequence() {
        let y = scalar_series();
        let m = fit(&y, &FitOptions::exact(RankSpec::Fixed(1))).unwrap();
        assert!((m.lambda[0] - 0.5).norm() < 1e-15);
        assert!((m.omega[0] - 0.5f64.ln()).norm() < 1e-15);
        let rec = m.reconstruct(&y.times());
        for k in 0..4 {
            assert!((rec[(0, k)] - y.data[(0, k)]).abs() < 1e-12);
        }
        assert!((m.evaluate(3.0).values[0] - 0.125).abs() < 1e-12);
        // between samples the model follows λ^((t − t0)/Δt_o)
        assert!((m.evaluate(1.5).values[0] - 0.5f64.powf(1.5)).abs() < 1e-12);
    }

    fn linear_series(lams: &[f64], n: usize, m: usize, seed: u64) -> SnapshotMatrix {
        let mut g = NormalStream::new(seed);
        let phi = g.matrix(n, lams.len());
        let c: Vec<f64> = (0..lams.len()).map(|_| 1.0 + g.next_uniform()).collect();
        let data = DenseMatrix::from_fn(n, m + 1, |i, k| {
            (0..lams.len()).map(|j| phi[(i, j)] * lams[j].powi(k as i32) * c[j]).sum()
        });
        SnapshotMatrix::new(data, 0.0, 1.0, "u").unwrap()
    }

    #[test]
    fn recovers_synthetic_eigenvalues() {
        let y = linear_series(&[0.9, 0.7], 5, 10, 3);
        let m = fit(&y, &FitOptions::exact(RankSpec::Fixed(2))).unwrap();
        assert!((m.lambda[0] - 0.9).norm() < 1e-8);
        assert!((m.lambda[1] - 0.7).norm() < 1e-8);
        let rec = m.reconstruct(&y.times());
        let rep = errors(&y.data, &rec, y.data.cols()).unwrap();
        assert!(rep.eta_f < 1e-10);
        // residual optimality of the amplitudes
        let u0: Vec<Complex64> = y.data.column(0).iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let pb = m.modes.matvec(&m.amplitudes);
        for j in 0..m.rank() {
            let g: Complex64 = (0..m.n()).map(|i| m.modes[(i, j)].conj() * (pb[i] - u0[i])).sum();
            assert!(g.norm() < 1e-8 * y.data.frobenius_norm());
        }
    }

    #[test]
    fn rank_above_snapshot_count_is_rejected() {
        let y = linear_series(&[0.9], 5, 4, 1);
        assert!(matches!(fit(&y, &FitOptions::exact(RankSpec::Fixed(5))), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn least_squares_amplitudes_match_on_exact_data() {
        let y = linear_series(&[0.95, 0.6], 6, 8, 9);
        let mut opts = FitOptions::exact(RankSpec::Fixed(2));
        let a = fit(&y, &opts).unwrap();
        opts.amplitudes = AmplitudeMode::AllSnapshots;
        let b = fit(&y, &opts).unwrap();
        for (x, z) in a.amplitudes.iter().zip(&b.amplitudes) {
            assert!((x - z).norm() < 1e-8 * x.norm());
        }
    }

    #[test]
    fn error_metrics() {
        let t = DenseMatrix::from_rows(&[vec![1.0, 0.0, 3.0], vec![1.0, 0.0, 4.0]]).unwrap();
        let same = errors(&t, &t, 2).unwrap();
        assert_eq!(same.eta_f, 0.0);
        assert_eq!(same.eta, vec![Some(0.0), None, Some(0.0)]);
        let zero = errors(&t, &DenseMatrix::zeros(2, 3), 2).unwrap();
        assert_eq!(zero.eta_f, 1.0);
        assert_eq!(zero.eta[2], Some(1.0));
        assert!(errors(&t, &DenseMatrix::zeros(3, 3), 0).is_err());
        let csv = same.to_csv(&[0.0, 0.25, 0.5]).unwrap();
        assert!(csv.starts_with("time,eta,regime\n0,0.0000000000000000e0,reconstruction\n"));
        assert!(csv.contains("0.5,0.0000000000000000e0,prediction\n"));
        assert!(csv.ends_with("eta_F,0.0000000000000000e0,\n"));
    }
}
