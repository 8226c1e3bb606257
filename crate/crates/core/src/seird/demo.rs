//! Projection of an indicator function from an adapted triangle mesh.
//!
//! The donor starts as a 10×10 mesh of `[-1, 1]²`. Three times, every
//! triangle that touches the boundary of the square `[-a, a]²` is bisected
//! and its children bisected again. The nodal indicator of the closed square
//! is then projected onto a structured 80×80 mesh and onto a jittered
//! 92×92 mesh.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::Result;
use crate::fem::FeField;
use crate::l2projection::build_default_projection;
use crate::linalg::rng::NormalStream;
use crate::mesh::{build_structured_triangle_mesh, refine, RefinementPlan, SimplicialMesh};

pub const DEMO_HALF_WIDTH: f64 = 0.3;
const GEOM_TOL: f64 = 1e-12;
const JITTER: f64 = 0.25;

#[derive(Clone, Debug)]
pub struct ProjectionSummary {
    pub label: String,
    pub n_elements: usize,
    pub n_nodes: usize,
    pub inf_norm: f64,
    pub integral: f64,
    pub field: FeField,
}

#[derive(Clone, Debug)]
pub struct DemoReport {
    pub donor: FeField,
    pub donor_integral: f64,
    pub targets: Vec<ProjectionSummary>,
}

impl DemoReport {
    pub fn donor_elements(&self) -> usize {
        self.donor.mesh.n_elements()
    }

    pub fn donor_nodes(&self) -> usize {
        self.donor.mesh.n_nodes()
    }

    /// Plain-text summary, one `key value` line per item.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "donor_elements {}\ndonor_nodes {}\ndonor_integral {:.16e}\n",
            self.donor_elements(),
            self.donor_nodes(),
            self.donor_integral
        );
        for t in &self.targets {
            s.push_str(&format!(
                "{0}_elements {1}\n{0}_nodes {2}\n{0}_inf_norm {3:.16e}\n{0}_integral {4:.16e}\n",
                t.label, t.n_elements, t.n_nodes, t.inf_norm, t.integral
            ));
        }
        s
    }
}

/// True when the closed triangle meets the boundary of the closed square
/// `[-a, a]²`: it intersects the square (no separating axis) and is not
/// contained in its interior.
pub(crate) fn touches_square_boundary(tri: &[[f64; 2]; 3], a: f64) -> bool {
    let strictly_inside = tri.iter().all(|p| p[0].abs() < a - GEOM_TOL && p[1].abs() < a - GEOM_TOL);
    if strictly_inside {
        return false;
    }
    for axis in 0..2 {
        let lo = tri.iter().map(|p| p[axis]).fold(f64::INFINITY, f64::min);
        let hi = tri.iter().map(|p| p[axis]).fold(f64::NEG_INFINITY, f64::max);
        if hi < -a - GEOM_TOL || lo > a + GEOM_TOL {
            return false;
        }
    }
    let corners = [[-a, -a], [a, -a], [a, a], [-a, a]];
    let orient = (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1]) - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]);
    for k in 0..3 {
        let (p, q) = (tri[k], tri[(k + 1) % 3]);
        // outward normal for a counter-clockwise triangle
        let mut n = [q[1] - p[1], p[0] - q[0]];
        if orient < 0.0 {
            n = [-n[0], -n[1]];
        }
        let len = n[0].hypot(n[1]);
        let gap = corners
            .iter()
            .map(|c| (n[0] * (c[0] - p[0]) + n[1] * (c[1] - p[1])) / len)
            .fold(f64::INFINITY, f64::min);
        if gap > GEOM_TOL {
            return false;
        }
    }
    true
}

fn triangle(mesh: &SimplicialMesh, e: usize) -> [[f64; 2]; 3] {
    let v = mesh.element(e);
    let p = |k: usize| [mesh.node(v[k])[0], mesh.node(v[k])[1]];
    [p(0), p(1), p(2)]
}

/// The adapted donor mesh.
pub fn demo_donor_mesh() -> Result<SimplicialMesh> {
    let mut mesh = build_structured_triangle_mesh((-1.0, 1.0), (-1.0, 1.0), 10, 10)?;
    let cap = u32::MAX;
    for _ in 0..3 {
        let marked: BTreeSet<usize> = (0..mesh.n_elements())
            .filter(|&e| touches_square_boundary(&triangle(&mesh, e), DEMO_HALF_WIDTH))
            .collect();
        let once = refine(&mesh, &RefinementPlan::refine_only(marked.iter().copied(), cap))?;
        // children of marked elements: their centroids lie inside a marked parent
        let children: Vec<usize> = (0..once.n_elements())
            .filter(|&e| {
                mesh.locate_point(&once.centroid(e))
                    .map(|loc| marked.contains(&loc.element))
                    .unwrap_or(false)
            })
            .collect();
        mesh = refine(&once, &RefinementPlan::refine_only(children, cap))?;
    }
    Ok(mesh)
}

/// Structured mesh with interior nodes moved by up to `JITTER·h` per
/// coordinate.
pub fn jittered_mesh(n: usize, seed: u64) -> Result<SimplicialMesh> {
    let base = build_structured_triangle_mesh((-1.0, 1.0), (-1.0, 1.0), n, n)?;
    let h = 2.0 / n as f64;
    let mut g = NormalStream::new(seed);
    let mut coords = base.coords().to_vec();
    for p in coords.chunks_mut(2) {
        let interior = p.iter().all(|x| x.abs() < 1.0 - GEOM_TOL);
        let (dx, dy) = (g.next_uniform() - 0.5, g.next_uniform() - 0.5);
        if interior {
            p[0] += 2.0 * JITTER * h * dx;
            p[1] += 2.0 * JITTER * h * dy;
        }
    }
    SimplicialMesh::new(2, coords, base.cells().to_vec())
}

pub fn indicator_projection_demo(seed: u64) -> Result<DemoReport> {
    let donor_mesh = Arc::new(demo_donor_mesh()?);
    let a = DEMO_HALF_WIDTH + GEOM_TOL;
    let donor = FeField::interpolate(donor_mesh.clone(), "u", |x| {
        if x[0].abs() <= a && x[1].abs() <= a {
            1.0
        } else {
            0.0
        }
    })?;
    let targets = [
        ("structured", Arc::new(build_structured_triangle_mesh((-1.0, 1.0), (-1.0, 1.0), 80, 80)?)),
        ("jittered", Arc::new(jittered_mesh(92, seed)?)),
    ];
    let mut out = Vec::new();
    for (label, target) in targets {
        let op = build_default_projection(donor_mesh.clone(), target.clone())?;
        let field = op.project(&donor)?;
        out.push(ProjectionSummary {
            label: label.to_string(),
            n_elements: target.n_elements(),
            n_nodes: target.n_nodes(),
            inf_norm: field.inf_norm(),
            integral: field.integrate(),
            field,
        });
    }
    Ok(DemoReport {
        donor_integral: donor.integrate(),
        donor,
        targets: out,
    })
}
