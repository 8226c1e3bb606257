//! P1 finite elements: fields, quadrature, assembly, CG and the flux-jump
//! indicator.

pub mod assembly;
pub mod cg;
pub mod quadrature;
pub mod sparse;

use std::sync::Arc;

pub use assembly::{assemble_mass, assemble_stiffness, assemble_weighted_mass};
pub use cg::{cg_solve, cg_solve_from, DEFAULT_CG_TOL};
pub use quadrature::QuadratureRule;
pub use sparse::{CsrMatrix, SparseSpd};

use crate::error::{invalid, Result};
use crate::mesh::{dist, SimplicialMesh};

/// Nodal P1 field bound to a mesh.
#[derive(Clone, Debug, PartialEq)]
pub struct FeField {
    pub mesh: Arc<SimplicialMesh>,
    pub values: Vec<f64>,
    pub name: String,
}

impl FeField {
    pub fn new(mesh: Arc<SimplicialMesh>, values: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(invalid(format!(
                "field has {} values for {} nodes",
                values.len(),
                mesh.n_nodes()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("field value {k} is not finite")));
        }
        Ok(FeField {
            mesh,
            values,
            name: name.into(),
        })
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: Arc<SimplicialMesh>, name: impl Into<String>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..mesh.n_nodes()).map(|i| f(mesh.node(i))).collect();
        Self::new(mesh, values, name)
    }

    pub fn constant(mesh: Arc<SimplicialMesh>, name: impl Into<String>, c: f64) -> Result<Self> {
        let n = mesh.n_nodes();
        Self::new(mesh, vec![c; n], name)
    }

    /// Point value by barycentric interpolation.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        let loc = self.mesh.locate_point(x)?;
        Ok(self.value_in(loc.element, &loc.bary))
    }

    pub(crate) fn value_in(&self, e: usize, bary: &[f64; 3]) -> f64 {
        self.mesh
            .element(e)
            .iter()
            .zip(bary)
            .map(|(&n, l)| l * self.values[n])
            .sum()
    }

    pub fn integrate(&self) -> f64 {
        (0..self.mesh.n_elements())
            .map(|e| {
                let v = self.mesh.element(e);
                let mean = v.iter().map(|&n| self.values[n]).sum::<f64>() / v.len() as f64;
                self.mesh.measure(e) * mean
            })
            .sum()
    }

    /// `sqrt(∫ u²)`, exact for P1.
    pub fn l2_norm(&self) -> f64 {
        l2_norm_of(&self.mesh, &self.values)
    }

    /// Largest absolute nodal value.
    pub fn inf_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Elementwise constant gradient.
    pub fn gradient(&self, e: usize) -> [f64; 2] {
        let g = self.mesh.shape_gradients(e);
        let mut out = [0.0; 2];
        for (a, &n) in self.mesh.element(e).iter().enumerate() {
            out[0] += g[a][0] * self.values[n];
            out[1] += g[a][1] * self.values[n];
        }
        out
    }

    /// Per-element flux-jump score
    /// `sqrt(Σ_f h_f [[∇u·n]]_f² |f|)` over interior facets.
    ///
    /// In 2D `h_f` and `|f|` are the edge length. In 1D `|f| = 1` and `h_f`
    /// is the larger of the two adjacent element lengths.
    pub fn flux_jump_indicator(&self) -> Vec<f64> {
        let mesh = &*self.mesh;
        let grads: Vec<[f64; 2]> = (0..mesh.n_elements()).map(|e| self.gradient(e)).collect();
        let mut acc = vec![0.0; mesh.n_elements()];
        for f in mesh.facets() {
            let (a, Some(b)) = f.elements else { continue };
            let contrib = match mesh.dim() {
                1 => {
                    let jump = grads[a][0] - grads[b][0];
                    mesh.diameter(a).max(mesh.diameter(b)) * jump * jump
                }
                _ => {
                    let (p, q) = (mesh.node(f.nodes[0]), mesh.node(f.nodes[1]));
                    let len = dist(p, q);
                    let n = [(q[1] - p[1]) / len, -(q[0] - p[0]) / len];
                    let jump = (grads[a][0] - grads[b][0]) * n[0] + (grads[a][1] - grads[b][1]) * n[1];
                    len * jump * jump * len
                }
            };
            acc[a] += contrib;
            acc[b] += contrib;
        }
        acc.into_iter().map(f64::sqrt).collect()
    }
}

/// `sqrt(vᵀ M v)` assembled elementwise, without forming `M`.
pub fn l2_norm_of(mesh: &SimplicialMesh, values: &[f64]) -> f64 {
    let mut s = 0.0;
    for e in 0..mesh.n_elements() {
        let v = mesh.element(e);
        let k = v.len() as f64;
        // ∫ (Σ u_a λ_a)² = |e| (Σ u_a² + (Σ u_a)²) / ((k)(k+1))
        let sum: f64 = v.iter().map(|&n| values[n]).sum();
        let sq: f64 = v.iter().map(|&n| values[n] * values[n]).sum();
        s += mesh.measure(e) * (sq + sum * sum) / (k * (k + 1.0));
    }
    s.max(0.0).sqrt()
}
