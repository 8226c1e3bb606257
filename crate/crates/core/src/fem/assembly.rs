use super::quadrature::QuadratureRule;
use super::sparse::{CsrMatrix, SparseSpd};
use crate::error::{invalid, Error, Result};
use crate::mesh::SimplicialMesh;

fn check_element(mesh: &SimplicialMesh, e: usize) -> Result<f64> {
    let m = mesh.measure(e);
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Assembly {
            element: e,
            reason: format!("degenerate element (measure {m:e})"),
        });
    }
    Ok(m)
}

/// Same-mesh rule: exact for products of two P1 functions.
fn mass_rule(dim: usize) -> QuadratureRule {
    let degree = if dim == 1 { 3 } else { 2 };
    QuadratureRule::new(dim, degree).expect("built-in rule")
}

/// Consistent P1 mass matrix `M_ij = ∫ φ_i φ_j`.
pub fn assemble_mass(mesh: &SimplicialMesh) -> Result<SparseSpd> {
    let rule = mass_rule(mesh.dim());
    let k = mesh.dim() + 1;
    let scale = 1.0 / rule.reference_measure();
    let mut trip = Vec::with_capacity(mesh.n_elements() * k * k);
    for e in 0..mesh.n_elements() {
        let jac = check_element(mesh, e)? * scale;
        let v = mesh.element(e);
        for a in 0..k {
            for b in 0..k {
                let val: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(p, w)| w * p[a] * p[b])
                    .sum();
                trip.push((v[a], v[b], jac * val));
            }
        }
    }
    let n = mesh.n_nodes();
    Ok(SparseSpd::new_unchecked(CsrMatrix::from_triplets(n, n, trip)))
}

/// `W_ij = ∫ w φ_i φ_j` for a nodal P1 weight `w`. Exact in 1D (3-point
/// products integrate with the degree-3 Gauss rule); in 2D a degree-4 rule
/// is used.
pub fn assemble_weighted_mass(mesh: &SimplicialMesh, w: &[f64]) -> Result<CsrMatrix> {
    if w.len() != mesh.n_nodes() {
        return Err(invalid("weight length differs from node count"));
    }
    let rule = QuadratureRule::new(mesh.dim(), 3)?;
    let k = mesh.dim() + 1;
    let scale = 1.0 / rule.reference_measure();
    let mut trip = Vec::with_capacity(mesh.n_elements() * k * k);
    for e in 0..mesh.n_elements() {
        let jac = check_element(mesh, e)? * scale;
        let v = mesh.element(e);
        let wq: Vec<f64> = rule
            .points
            .iter()
            .map(|p| (0..k).map(|c| p[c] * w[v[c]]).sum())
            .collect();
        for a in 0..k {
            for b in 0..k {
                let val: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .zip(&wq)
                    .map(|((p, qw), wv)| qw * wv * p[a] * p[b])
                    .sum();
                trip.push((v[a], v[b], jac * val));
            }
        }
    }
    let n = mesh.n_nodes();
    Ok(CsrMatrix::from_triplets(n, n, trip))
}

/// `K_ij = ∫ κ ∇φ_i·∇φ_j` with a nodal P1 coefficient `κ`. Gradients are
/// elementwise constant so only the element mean of `κ` enters.
pub fn assemble_stiffness(mesh: &SimplicialMesh, kappa: &[f64]) -> Result<CsrMatrix> {
    if kappa.len() != mesh.n_nodes() {
        return Err(invalid("coefficient length differs from node count"));
    }
    let dim = mesh.dim();
    let k = dim + 1;
    let mut trip = Vec::with_capacity(mesh.n_elements() * k * k);
    for e in 0..mesh.n_elements() {
        let meas = check_element(mesh, e)?;
        let v = mesh.element(e);
        let mean = v.iter().map(|&i| kappa[i]).sum::<f64>() / k as f64;
        let g = mesh.shape_gradients(e);
        for a in 0..k {
            for b in 0..k {
                let dot: f64 = (0..dim).map(|d| g[a][d] * g[b][d]).sum();
                trip.push((v[a], v[b], meas * mean * dot));
            }
        }
    }
    let n = mesh.n_nodes();
    Ok(CsrMatrix::from_triplets(n, n, trip))
}
