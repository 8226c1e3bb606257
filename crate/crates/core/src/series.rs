//! Time-stamped multi-field snapshots, possibly on different meshes.

use std::sync::Arc;

use log::debug;

use crate::dmd::SnapshotMatrix;
use crate::error::{invalid, Error, Result};
use crate::fem::FeField;
use crate::l2projection::{build_default_projection, ProjectionOperator};
use crate::linalg::DenseMatrix;
use crate::mesh::SimplicialMesh;
use crate::qoi::{total_population, QoiSeries};

/// Relative tolerance when checking uniform sampling.
const TIME_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub index: usize,
    pub time: f64,
    /// All fields share one mesh.
    pub fields: Vec<FeField>,
}

impl Snapshot {
    pub fn new(index: usize, time: f64, fields: Vec<FeField>) -> Result<Self> {
        let first = fields.first().ok_or_else(|| invalid("snapshot without fields"))?;
        if fields.iter().any(|f| !Arc::ptr_eq(&f.mesh, &first.mesh) && !f.mesh.same_geometry(&first.mesh)) {
            return Err(invalid(format!("snapshot {index}: fields live on different meshes")));
        }
        if !time.is_finite() {
            return Err(invalid(format!("snapshot {index}: non-finite time")));
        }
        Ok(Snapshot { index, time, fields })
    }

    pub fn mesh(&self) -> &Arc<SimplicialMesh> {
        &self.fields[0].mesh
    }

    pub fn field(&self, name: &str) -> Option<&FeField> {
        self.fields.iter().find(|f| f.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.fields.iter().map(|f| f.name.as_str()).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SnapshotSeries {
    pub snapshots: Vec<Snapshot>,
}

impl SnapshotSeries {
    pub fn new(snapshots: Vec<Snapshot>) -> Result<Self> {
        if snapshots.windows(2).any(|w| !(w[1].time > w[0].time)) {
            return Err(invalid("snapshot times must increase strictly"));
        }
        Ok(SnapshotSeries { snapshots })
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// Position of the snapshot taken at `t`.
    pub fn position_of_time(&self, t: f64) -> Option<usize> {
        let scale = t.abs().max(1.0);
        self.snapshots.iter().position(|s| (s.time - t).abs() <= TIME_TOL * scale)
    }

    /// True when every snapshot uses the same mesh.
    pub fn is_uniform(&self) -> bool {
        match self.snapshots.first() {
            None => true,
            Some(first) => self
                .snapshots
                .iter()
                .all(|s| Arc::ptr_eq(s.mesh(), first.mesh()) || s.mesh().same_geometry(first.mesh())),
        }
    }

    /// Column-stacked values of `field` over positions `first..=last`.
    /// Requires a uniform store and uniform sampling.
    pub fn snapshot_matrix(&self, field: &str, first: usize, last: usize) -> Result<SnapshotMatrix> {
        if !self.is_uniform() {
            return Err(invalid("snapshots live on different meshes; project them first"));
        }
        if last >= self.len() || first >= last {
            return Err(invalid(format!("window {first}..={last} outside 0..{}", self.len())));
        }
        let window = &self.snapshots[first..=last];
        let dt_o = window[1].time - window[0].time;
        for (k, s) in window.iter().enumerate() {
            let expect = window[0].time + k as f64 * dt_o;
            if (s.time - expect).abs() > TIME_TOL * expect.abs().max(1.0) {
                return Err(invalid(format!("snapshot at t = {} breaks uniform sampling", s.time)));
            }
        }
        let cols: Vec<Vec<f64>> = window
            .iter()
            .map(|s| {
                s.field(field)
                    .map(|f| f.values.clone())
                    .ok_or_else(|| invalid(format!("field `{field}` missing at t = {}", s.time)))
            })
            .collect::<Result<_>>()?;
        let data = DenseMatrix::from_columns(&cols)?;
        Ok(SnapshotMatrix::new(data, window[0].time, dt_o, field)?.with_mesh(window[0].mesh().clone()))
    }

    /// L²-projects every snapshot onto `target`. Operators are reused while
    /// consecutive snapshots share a donor mesh. Returns the projected series
    /// and the largest Galerkin residual per snapshot.
    pub fn project_onto(&self, target: &Arc<SimplicialMesh>) -> Result<(SnapshotSeries, Vec<f64>)> {
        let mut op: Option<ProjectionOperator> = None;
        let mut out = Vec::with_capacity(self.len());
        let mut residuals = Vec::with_capacity(self.len());
        for s in &self.snapshots {
            let in_snapshot = |e: Error| Error::InSnapshot {
                index: s.index,
                source: Box::new(e),
            };
            let reuse = op.as_ref().is_some_and(|o| Arc::ptr_eq(&o.donor, s.mesh()));
            if !reuse {
                op = Some(build_default_projection(s.mesh().clone(), target.clone()).map_err(in_snapshot)?);
            }
            let p = op.as_ref().expect("operator built above");
            let mut worst: f64 = 0.0;
            let mut fields = Vec::with_capacity(s.fields.len());
            for f in &s.fields {
                let g = p.project(f).map_err(in_snapshot)?;
                worst = worst.max(p.galerkin_residual(&f.values, &g.values));
                fields.push(g);
            }
            debug!("projected snapshot {} (t = {}), residual {worst:.3e}", s.index, s.time);
            residuals.push(worst);
            out.push(Snapshot::new(s.index, s.time, fields)?);
        }
        Ok((SnapshotSeries::new(out)?, residuals))
    }

    /// Normalizable total-population series over all snapshots.
    pub fn population(&self) -> Result<QoiSeries> {
        let values = self
            .snapshots
            .iter()
            .map(|s| total_population(&s.fields))
            .collect::<Result<Vec<_>>>()?;
        QoiSeries::new("population", self.times(), values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_interval_mesh, refine, RefinementPlan};

    fn series_on(meshes: &[Arc<SimplicialMesh>]) -> SnapshotSeries {
        let snaps = meshes
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let t = k as f64 * 0.5;
                let f = FeField::interpolate(m.clone(), "u", |x| x[0] * (1.0 + t)).unwrap();
                Snapshot::new(k, t, vec![f]).unwrap()
            })
            .collect();
        SnapshotSeries::new(snaps).unwrap()
    }

    #[test]
    fn uniform_matrix_and_time_lookup() {
        let m = Arc::new(build_interval_mesh(0.0, 1.0, 4).unwrap());
        let s = series_on(&[m.clone(), m.clone(), m]);
        assert!(s.is_uniform());
        let y = s.snapshot_matrix("u", 1, 2).unwrap();
        assert_eq!((y.n(), y.m(), y.t0, y.dt_o), (5, 1, 0.5, 0.5));
        assert_eq!(s.position_of_time(1.0), Some(2));
        assert!(s.snapshot_matrix("v", 0, 2).is_err());
    }

    #[test]
    fn projection_makes_store_uniform() {
        let a = Arc::new(build_interval_mesh(0.0, 1.0, 4).unwrap());
        let b = Arc::new(refine(&a, &RefinementPlan::refine_only([1], 3)).unwrap());
        let s = series_on(&[a.clone(), b, a]);
        assert!(!s.is_uniform());
        assert!(s.snapshot_matrix("u", 0, 2).is_err());
        let target = Arc::new(build_interval_mesh(0.0, 1.0, 16).unwrap());
        let (p, res) = s.project_onto(&target).unwrap();
        assert!(p.is_uniform());
        assert!(res.iter().all(|r| *r < 1e-10));
        // linear fields are reproduced exactly
        for snap in &p.snapshots {
            let f = &snap.fields[0];
            for n in 0..target.n_nodes() {
                assert!((f.values[n] - target.node(n)[0] * (1.0 + snap.time)).abs() < 1e-10);
            }
        }
    }
}
