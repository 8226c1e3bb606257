//! L²-projection of P1 fields between non-matching meshes.
//!
//! `M u_proj = P u` with `M_ij = ∫ N_i^t N_j^t` on the target mesh and
//! `P_ij = ∫ N_i^t N_j^d` coupling target and donor basis functions.
//!
//! `P` is integrated target element by target element. In 2D each target
//! triangle is split uniformly `sub_splits` times (4 children per split)
//! and a degree-`quad_degree` rule is applied on every piece, donor basis
//! functions being evaluated through point location. In 1D the target
//! segment is additionally cut at the donor nodes it contains, so each
//! piece sees a single donor element and the rule is exact.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::fem::{assemble_mass, cg_solve, CsrMatrix, FeField, QuadratureRule, SparseSpd, DEFAULT_CG_TOL};
use crate::linalg::{numerical_rank, DenseMatrix};
use crate::mesh::SimplicialMesh;

pub const DEFAULT_QUAD_DEGREE: usize = 4;
pub const DEFAULT_SUB_SPLITS: usize = 2;
/// Relative threshold on `|R_ii|` used by [`ProjectionOperator::rank_check`].
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct ProjectionOperator {
    pub donor: Arc<SimplicialMesh>,
    pub target: Arc<SimplicialMesh>,
    pub mass: SparseSpd,
    pub p: CsrMatrix,
    pub quad_degree: usize,
    pub sub_splits: usize,
    pub tol: f64,
}

/// Assembles `M` on `target` and `P` between `target` and `donor`.
pub fn build_projection(
    donor: Arc<SimplicialMesh>,
    target: Arc<SimplicialMesh>,
    quad_degree: usize,
    sub_splits: usize,
) -> Result<ProjectionOperator> {
    if donor.dim() != target.dim() {
        return Err(invalid(format!(
            "donor is {}D but target is {}D",
            donor.dim(),
            target.dim()
        )));
    }
    let rule = QuadratureRule::new(target.dim(), quad_degree)?;
    let mass = assemble_mass(&target)?;
    let trip = match target.dim() {
        1 => assemble_p_1d(&donor, &target, &rule, sub_splits)?,
        _ => assemble_p_2d(&donor, &target, &rule, sub_splits)?,
    };
    let p = CsrMatrix::from_triplets(target.n_nodes(), donor.n_nodes(), trip);
    Ok(ProjectionOperator {
        donor,
        target,
        mass,
        p,
        quad_degree,
        sub_splits,
        tol: DEFAULT_CG_TOL,
    })
}

/// [`build_projection`] with the default rule and sub-splitting.
pub fn build_default_projection(donor: Arc<SimplicialMesh>, target: Arc<SimplicialMesh>) -> Result<ProjectionOperator> {
    build_projection(donor, target, DEFAULT_QUAD_DEGREE, DEFAULT_SUB_SPLITS)
}

type Triplets = Vec<(usize, usize, f64)>;

fn assemble_p_1d(donor: &SimplicialMesh, target: &SimplicialMesh, rule: &QuadratureRule, splits: usize) -> Result<Triplets> {
    let mut donor_x: Vec<f64> = donor.coords().to_vec();
    donor_x.sort_by(f64::total_cmp);
    let pieces_per_cut = 1usize << splits;
    let mut trip = Vec::new();
    let mut missing = Vec::new();
    for e in 0..target.n_elements() {
        let tv = target.element(e);
        let (a, b) = (target.node(tv[0])[0], target.node(tv[1])[0]);
        let tol = 1e-12 * (b - a);
        let lo = donor_x.partition_point(|&x| x <= a + tol);
        let hi = donor_x.partition_point(|&x| x < b - tol);
        let mut cuts = Vec::with_capacity(hi.saturating_sub(lo) + 2);
        cuts.push(a);
        cuts.extend_from_slice(&donor_x[lo..hi.max(lo)]);
        cuts.push(b);
        for w in cuts.windows(2) {
            let (x0, x1) = (w[0], w[1]);
            let mid = [0.5 * (x0 + x1)];
            let de = match donor.locate_point(&mid) {
                Ok(loc) => loc.element,
                Err(_) => {
                    missing.push(mid.to_vec());
                    continue;
                }
            };
            let dv = donor.element(de);
            let h = (x1 - x0) / pieces_per_cut as f64;
            for k in 0..pieces_per_cut {
                let s0 = x0 + k as f64 * h;
                for (p, wq) in rule.points.iter().zip(&rule.weights) {
                    let x = [s0 + p[1] * h];
                    let tb = target.barycentric(e, &x);
                    let db = donor.barycentric(de, &x);
                    for i in 0..2 {
                        for j in 0..2 {
                            trip.push((tv[i], dv[j], wq * h * tb[i] * db[j]));
                        }
                    }
                }
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::Coverage { points: missing });
    }
    Ok(trip)
}

/// Barycentric vertices of the `4^splits` children of the reference
/// triangle under repeated midpoint subdivision.
fn sub_triangles(splits: usize) -> Vec<[[f64; 3]; 3]> {
    let mut tris = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
    let mid = |a: &[f64; 3], b: &[f64; 3]| [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1]), 0.5 * (a[2] + b[2])];
    for _ in 0..splits {
        let mut next = Vec::with_capacity(tris.len() * 4);
        for [a, b, c] in tris {
            let (ab, bc, ca) = (mid(&a, &b), mid(&b, &c), mid(&c, &a));
            next.push([a, ab, ca]);
            next.push([ab, b, bc]);
            next.push([ca, bc, c]);
            next.push([ab, bc, ca]);
        }
        tris = next;
    }
    tris
}

fn assemble_p_2d(donor: &SimplicialMesh, target: &SimplicialMesh, rule: &QuadratureRule, splits: usize) -> Result<Triplets> {
    let subs = sub_triangles(splits);
    // bary coordinates (w.r.t. the target element) and weights of all points
    let mut ref_points: Vec<([f64; 3], f64)> = Vec::with_capacity(subs.len() * rule.points.len());
    let w_scale = 1.0 / (subs.len() as f64 * rule.reference_measure());
    for s in &subs {
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let mut b = [0.0; 3];
            for (k, vert) in s.iter().enumerate() {
                for c in 0..3 {
                    b[c] += p[k] * vert[c];
                }
            }
            ref_points.push((b, w * w_scale));
        }
    }
    let mut trip = Vec::with_capacity(target.n_elements() * ref_points.len() * 9 / 4);
    let mut missing = Vec::new();
    for e in 0..target.n_elements() {
        let tv = target.element(e);
        let area = target.measure(e);
        let verts = [target.node(tv[0]), target.node(tv[1]), target.node(tv[2])];
        // accumulate per element to keep the triplet list short
        let mut local: Vec<(usize, usize, f64)> = Vec::new();
        for (b, w) in &ref_points {
            let x = [
                b[0] * verts[0][0] + b[1] * verts[1][0] + b[2] * verts[2][0],
                b[0] * verts[0][1] + b[1] * verts[1][1] + b[2] * verts[2][1],
            ];
            let loc = match donor.locate_point(&x) {
                Ok(loc) => loc,
                Err(_) => {
                    missing.push(x.to_vec());
                    continue;
                }
            };
            let dv = donor.element(loc.element);
            for i in 0..3 {
                for j in 0..3 {
                    let val = w * area * b[i] * loc.bary[j];
                    match local.iter_mut().find(|t| t.0 == tv[i] && t.1 == dv[j]) {
                        Some(t) => t.2 += val,
                        None => local.push((tv[i], dv[j], val)),
                    }
                }
            }
        }
        trip.extend(local);
    }
    if !missing.is_empty() {
        return Err(Error::Coverage { points: missing });
    }
    Ok(trip)
}

impl ProjectionOperator {
    /// Projects a donor field onto the target mesh.
    pub fn project(&self, u: &FeField) -> Result<FeField> {
        if !Arc::ptr_eq(&u.mesh, &self.donor) && !u.mesh.same_geometry(&self.donor) {
            return Err(invalid("field is not defined on the donor mesh of this operator"));
        }
        let values = self.project_values(&u.values)?;
        FeField::new(self.target.clone(), values, u.name.clone())
    }

    /// Solves `M x = P u` for raw donor nodal values.
    pub fn project_values(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.donor.n_nodes() {
            return Err(invalid(format!(
                "{} values for a donor with {} nodes",
                u.len(),
                self.donor.n_nodes()
            )));
        }
        let rhs = self.p.matvec(u);
        cg_solve(&self.mass, &rhs, self.tol, None)
    }

    /// `‖M u_proj − P u‖ / ‖P u‖`, the discrete Galerkin orthogonality defect.
    pub fn galerkin_residual(&self, u: &[f64], u_proj: &[f64]) -> f64 {
        let pu = self.p.matvec(u);
        let mu = self.mass.matvec(u_proj);
        let num: f64 = pu.iter().zip(&mu).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = pu.iter().map(|a| a * a).sum::<f64>().sqrt();
        if den == 0.0 {
            num
        } else {
            num / den
        }
    }

    /// Numerical rank of `P` by column-pivoted QR.
    pub fn rank_check(&self) -> usize {
        let mut dense = DenseMatrix::zeros(self.p.rows(), self.p.cols());
        for r in 0..self.p.rows() {
            for (c, v) in self.p.row(r) {
                dense[(r, c)] = v;
            }
        }
        numerical_rank(&dense, RANK_TOL)
    }
}
