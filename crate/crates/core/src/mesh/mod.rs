//! Simplicial meshes in one and two dimensions.
//!
//! A mesh stores
//!   - node coordinates (flat, `dim` values per node),
//!   - element connectivity (flat, `dim + 1` node ids per element),
//!   - a refinement level and an optional parent per element.
//!
//! Triangles follow the newest-vertex convention: local vertex 0 is the
//! newest vertex and the edge `(1, 2)` opposite to it is the refinement
//! edge. Segments are stored left to right.

mod locate;
mod refine;

use std::collections::HashMap;
use std::sync::OnceLock;

pub use locate::Location;
pub use refine::{refine, RefinementPlan};

use crate::error::{invalid, Error, Result};
use locate::BinGrid;

/// Nodes closer than this are considered duplicates.
pub const NODE_TOL: f64 = 1e-12;
/// Barycentric slack accepted when testing containment.
pub const BARY_TOL: f64 = 1e-10;

/// An element that was replaced by its children.
#[derive(Clone, Debug, PartialEq)]
pub struct Ancestor {
    pub nodes: Vec<usize>,
    pub level: u32,
    pub parent: Option<usize>,
}

/// A facet (end point in 1D, edge in 2D) with its one or two incident elements.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    pub nodes: Vec<usize>,
    pub elements: (usize, Option<usize>),
}

impl Facet {
    pub fn is_boundary(&self) -> bool {
        self.elements.1.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct SimplicialMesh {
    dim: usize,
    coords: Vec<f64>,
    cells: Vec<usize>,
    levels: Vec<u32>,
    parents: Vec<Option<usize>>,
    history: Vec<Ancestor>,
    locator: OnceLock<BinGrid>,
}

impl PartialEq for SimplicialMesh {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.coords == other.coords
            && self.cells == other.cells
            && self.levels == other.levels
            && self.parents == other.parents
            && self.history == other.history
    }
}

impl SimplicialMesh {
    /// Builds a level-0 mesh from raw arrays and checks every mesh invariant.
    ///
    /// Elements with negative orientation are flipped (triangles swap local
    /// vertices 1 and 2, which keeps the refinement edge).
    pub fn new(dim: usize, coords: Vec<f64>, cells: Vec<usize>) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(invalid(format!("unsupported dimension {dim}")));
        }
        if coords.len() % dim != 0 || cells.len() % (dim + 1) != 0 {
            return Err(invalid("coordinate or connectivity array has the wrong length"));
        }
        let n_elems = cells.len() / (dim + 1);
        let mut mesh = SimplicialMesh {
            dim,
            coords,
            cells,
            levels: vec![0; n_elems],
            parents: vec![None; n_elems],
            history: Vec::new(),
            locator: OnceLock::new(),
        };
        let n_nodes = mesh.n_nodes();
        if let Some(&bad) = mesh.cells.iter().find(|&&i| i >= n_nodes) {
            return Err(invalid(format!("node index {bad} out of range ({n_nodes} nodes)")));
        }
        for e in 0..n_elems {
            if mesh.signed_measure(e) < 0.0 {
                let k = e * (dim + 1);
                mesh.cells.swap(k + dim - 1, k + dim);
            }
        }
        mesh.validate()?;
        Ok(mesh)
    }

    pub(crate) fn from_parts(
        dim: usize,
        coords: Vec<f64>,
        cells: Vec<usize>,
        levels: Vec<u32>,
        parents: Vec<Option<usize>>,
        history: Vec<Ancestor>,
    ) -> Self {
        SimplicialMesh {
            dim,
            coords,
            cells,
            levels,
            parents,
            history,
            locator: OnceLock::new(),
        }
    }

    /// Same nodes and elements, ignoring refinement history.
    pub fn same_geometry(&self, other: &SimplicialMesh) -> bool {
        self.dim == other.dim && self.coords == other.coords && self.cells == other.cells
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_nodes(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn n_elements(&self) -> usize {
        self.levels.len()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn element(&self, e: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.cells[e * k..(e + 1) * k]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn level(&self, e: usize) -> u32 {
        self.levels[e]
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    /// History index of the element this one was bisected from.
    pub fn parent(&self, e: usize) -> Option<usize> {
        self.parents[e]
    }

    pub fn ancestor(&self, id: usize) -> &Ancestor {
        &self.history[id]
    }

    pub(crate) fn history(&self) -> &[Ancestor] {
        &self.history
    }

    /// Other leaf elements sharing the parent of `e` (excluding `e`).
    pub fn siblings(&self, e: usize) -> Vec<usize> {
        match self.parents[e] {
            None => Vec::new(),
            Some(p) => (0..self.n_elements())
                .filter(|&k| k != e && self.parents[k] == Some(p))
                .collect(),
        }
    }

    /// Leaf elements grouped by parent, keyed by history index.
    pub fn sibling_groups(&self) -> HashMap<usize, Vec<usize>> {
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for (e, p) in self.parents.iter().enumerate() {
            if let Some(p) = p {
                groups.entry(*p).or_default().push(e);
            }
        }
        groups
    }

    fn signed_measure(&self, e: usize) -> f64 {
        let v = self.element(e);
        match self.dim {
            1 => self.node(v[1])[0] - self.node(v[0])[0],
            _ => {
                let (a, b, c) = (self.node(v[0]), self.node(v[1]), self.node(v[2]));
                0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
            }
        }
    }

    /// Length (1D) or area (2D) of element `e`.
    pub fn measure(&self, e: usize) -> f64 {
        self.signed_measure(e).abs()
    }

    pub fn total_measure(&self) -> f64 {
        (0..self.n_elements()).map(|e| self.measure(e)).sum()
    }

    /// Longest edge length.
    pub fn diameter(&self, e: usize) -> f64 {
        let v = self.element(e);
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(dist(self.node(v[i]), self.node(v[j])));
            }
        }
        d
    }

    pub fn min_diameter(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.diameter(e))
            .fold(f64::INFINITY, f64::min)
    }

    /// Axis-aligned bounding box as `(min, max)` per coordinate.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        let mut bb = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for i in 0..self.n_nodes() {
            for (d, x) in self.node(i).iter().enumerate() {
                bb[d].0 = bb[d].0.min(*x);
                bb[d].1 = bb[d].1.max(*x);
            }
        }
        bb
    }

    pub fn centroid(&self, e: usize) -> Vec<f64> {
        let v = self.element(e);
        let mut c = vec![0.0; self.dim];
        for &n in v {
            for (d, x) in self.node(n).iter().enumerate() {
                c[d] += x / v.len() as f64;
            }
        }
        c
    }

    /// Barycentric coordinates of `x` with respect to element `e`.
    pub fn barycentric(&self, e: usize, x: &[f64]) -> [f64; 3] {
        let v = self.element(e);
        match self.dim {
            1 => {
                let (a, b) = (self.node(v[0])[0], self.node(v[1])[0]);
                let l1 = (x[0] - a) / (b - a);
                [1.0 - l1, l1, 0.0]
            }
            _ => {
                let (a, b, c) = (self.node(v[0]), self.node(v[1]), self.node(v[2]));
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
                let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
                [1.0 - l1 - l2, l1, l2]
            }
        }
    }

    /// Gradients of the P1 shape functions of element `e`, one `dim`-vector
    /// per local vertex.
    pub fn shape_gradients(&self, e: usize) -> [[f64; 2]; 3] {
        let v = self.element(e);
        match self.dim {
            1 => {
                let h = self.node(v[1])[0] - self.node(v[0])[0];
                [[-1.0 / h, 0.0], [1.0 / h, 0.0], [0.0, 0.0]]
            }
            _ => {
                let (a, b, c) = (self.node(v[0]), self.node(v[1]), self.node(v[2]));
                let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
                let g1 = [(c[1] - a[1]) / det, -(c[0] - a[0]) / det];
                let g2 = [-(b[1] - a[1]) / det, (b[0] - a[0]) / det];
                [[-g1[0] - g2[0], -g1[1] - g2[1]], g1, g2]
            }
        }
    }

    /// All facets with their incident elements, in first-seen order.
    pub fn facets(&self) -> Vec<Facet> {
        let mut index: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut facets: Vec<Facet> = Vec::new();
        let mut overfull = None;
        for e in 0..self.n_elements() {
            for key in self.element_facets(e) {
                match index.get(&key) {
                    Some(&k) => {
                        if facets[k].elements.1.is_some() {
                            overfull = Some(k);
                        }
                        facets[k].elements.1 = Some(e);
                    }
                    None => {
                        index.insert(key.clone(), facets.len());
                        facets.push(Facet {
                            nodes: key,
                            elements: (e, None),
                        });
                    }
                }
            }
        }
        debug_assert!(overfull.is_none(), "facet shared by more than two elements");
        facets
    }

    /// Sorted node keys of the facets of element `e`.
    pub(crate) fn element_facets(&self, e: usize) -> Vec<Vec<usize>> {
        let v = self.element(e);
        match self.dim {
            1 => vec![vec![v[0]], vec![v[1]]],
            _ => (0..3)
                .map(|i| {
                    let (a, b) = (v[(i + 1) % 3], v[(i + 2) % 3]);
                    vec![a.min(b), a.max(b)]
                })
                .collect(),
        }
    }

    /// Checks positivity, index range, node uniqueness and conformity.
    pub fn validate(&self) -> Result<()> {
        let n_nodes = self.n_nodes();
        for e in 0..self.n_elements() {
            if self.element(e).iter().any(|&i| i >= n_nodes) {
                return Err(invalid(format!("element {e} references a missing node")));
            }
            let m = self.signed_measure(e);
            if !(m > 0.0) {
                return Err(Error::Assembly {
                    element: e,
                    reason: format!("non-positive measure {m:e}"),
                });
            }
        }
        self.check_duplicate_nodes()?;
        self.check_conformity()
    }

    fn check_duplicate_nodes(&self) -> Result<()> {
        let mut order: Vec<usize> = (0..self.n_nodes()).collect();
        order.sort_by(|&a, &b| self.node(a)[0].total_cmp(&self.node(b)[0]));
        for (k, &a) in order.iter().enumerate() {
            for &b in &order[k + 1..] {
                if self.node(b)[0] - self.node(a)[0] > NODE_TOL {
                    break;
                }
                if dist(self.node(a), self.node(b)) <= NODE_TOL {
                    return Err(invalid(format!("nodes {a} and {b} coincide")));
                }
            }
        }
        Ok(())
    }

    fn check_conformity(&self) -> Result<()> {
        let mut count: HashMap<Vec<usize>, usize> = HashMap::new();
        for e in 0..self.n_elements() {
            for key in self.element_facets(e) {
                *count.entry(key).or_default() += 1;
            }
        }
        if let Some((f, c)) = count.iter().find(|(_, &c)| c > 2) {
            return Err(invalid(format!("facet {f:?} shared by {c} elements")));
        }
        if self.dim == 2 {
            // a node strictly inside a boundary edge is a hanging node
            let used = self.used_nodes();
            for (f, _) in count.iter().filter(|(_, &c)| c == 1) {
                let (a, b) = (self.node(f[0]), self.node(f[1]));
                let len = dist(a, b);
                for (n, _) in used.iter().enumerate().filter(|(_, u)| **u) {
                    if n == f[0] || n == f[1] {
                        continue;
                    }
                    let p = self.node(n);
                    if p[0] < a[0].min(b[0]) - NODE_TOL
                        || p[0] > a[0].max(b[0]) + NODE_TOL
                        || p[1] < a[1].min(b[1]) - NODE_TOL
                        || p[1] > a[1].max(b[1]) + NODE_TOL
                    {
                        continue;
                    }
                    if (dist(a, p) + dist(p, b) - len).abs() <= 1e-12 * len.max(1.0) {
                        return Err(invalid(format!("hanging node {n} on edge {f:?}")));
                    }
                }
            }
        }
        Ok(())
    }

    fn used_nodes(&self) -> Vec<bool> {
        let mut used = vec![false; self.n_nodes()];
        for &i in &self.cells {
            used[i] = true;
        }
        used
    }

    /// Locates the element containing `x`; ties on shared facets resolve to
    /// the lowest element id.
    pub fn locate_point(&self, x: &[f64]) -> Result<Location> {
        self.locator
            .get_or_init(|| BinGrid::build(self))
            .locate(self, x)
    }

    /// Exact containment test with barycentric slack [`BARY_TOL`].
    pub fn contains(&self, e: usize, x: &[f64]) -> Option<[f64; 3]> {
        let b = self.barycentric(e, x);
        let inside = b[..=self.dim].iter().all(|&l| l >= -BARY_TOL && l <= 1.0 + BARY_TOL);
        inside.then_some(b)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Uniform mesh of `[a, b]` with `n_elems` segments.
pub fn build_interval_mesh(a: f64, b: f64, n_elems: usize) -> Result<SimplicialMesh> {
    if n_elems == 0 {
        return Err(invalid("interval mesh needs at least one element"));
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(invalid(format!("interval [{a}, {b}] is empty")));
    }
    let h = (b - a) / n_elems as f64;
    let mut coords: Vec<f64> = (0..=n_elems).map(|i| a + i as f64 * h).collect();
    coords[n_elems] = b;
    let cells = (0..n_elems).flat_map(|i| [i, i + 1]).collect();
    SimplicialMesh::new(1, coords, cells)
}

/// Structured triangulation of a rectangle: `nx * ny` cells, each split
/// along its lower-left to upper-right diagonal. The right-angle vertex of
/// each triangle is its newest vertex.
pub fn build_structured_triangle_mesh(
    x_range: (f64, f64),
    y_range: (f64, f64),
    nx: usize,
    ny: usize,
) -> Result<SimplicialMesh> {
    if nx == 0 || ny == 0 {
        return Err(invalid("structured mesh needs nx, ny >= 1"));
    }
    if !(x_range.0 < x_range.1) || !(y_range.0 < y_range.1) {
        return Err(invalid(format!("degenerate ranges {x_range:?} x {y_range:?}")));
    }
    let hx = (x_range.1 - x_range.0) / nx as f64;
    let hy = (y_range.1 - y_range.0) / ny as f64;
    let mut coords = Vec::with_capacity(2 * (nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = if j == ny { y_range.1 } else { y_range.0 + j as f64 * hy };
        for i in 0..=nx {
            let x = if i == nx { x_range.1 } else { x_range.0 + i as f64 * hx };
            coords.push(x);
            coords.push(y);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(6 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            cells.extend_from_slice(&[b, c, a, d, a, c]);
        }
    }
    SimplicialMesh::new(2, coords, cells)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interval_paper_preset() {
        let m = build_interval_mesh(0.0, 1.0, 125).unwrap();
        assert_eq!(m.n_nodes(), 126);
        for e in 0..m.n_elements() {
            assert_relative_eq!(m.measure(e), 0.008, epsilon = 1e-15);
        }
    }

    #[test]
    fn interval_minimal_and_uniform() {
        let m = build_interval_mesh(0.0, 1.0, 1).unwrap();
        assert_eq!(m.coords(), &[0.0, 1.0]);
        assert_eq!(m.n_elements(), 1);
        let m = build_interval_mesh(0.0, 2.0, 4).unwrap();
        assert!((0..4).all(|e| m.measure(e) == 0.5));
    }

    #[test]
    fn interval_rejects_bad_input() {
        assert!(matches!(build_interval_mesh(0.0, 1.0, 0), Err(Error::InvalidArgument(_))));
        assert!(build_interval_mesh(1.0, 1.0, 3).is_err());
    }

    #[test]
    fn structured_counts() {
        let m = build_structured_triangle_mesh((-1.0, 1.0), (-1.0, 1.0), 80, 80).unwrap();
        assert_eq!((m.n_nodes(), m.n_elements()), (6561, 12800));
        let m = build_structured_triangle_mesh((-1.0, 1.0), (-1.0, 1.0), 10, 10).unwrap();
        assert_eq!((m.n_nodes(), m.n_elements()), (121, 200));
        let m = build_structured_triangle_mesh((0.0, 1.0), (0.0, 1.0), 1, 1).unwrap();
        assert_eq!((m.n_nodes(), m.n_elements()), (4, 2));
        assert_relative_eq!(m.total_measure(), 1.0, epsilon = 1e-15);
        assert!(build_structured_triangle_mesh((0.0, 0.0), (0.0, 1.0), 1, 1).is_err());
    }

    #[test]
    fn new_rejects_duplicates_and_flips_orientation() {
        let err = SimplicialMesh::new(1, vec![0.0, 0.0, 1.0], vec![0, 2, 1, 2]);
        assert!(err.is_err());
        let m = SimplicialMesh::new(2, vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0], vec![0, 2, 1]).unwrap();
        assert_eq!(m.element(0), &[0, 1, 2]);
        assert!(SimplicialMesh::new(2, vec![0.0, 0.0, 1.0, 0.0, 2.0, 0.0], vec![0, 1, 2]).is_err());
    }

    #[test]
    fn hanging_node_is_detected() {
        // big triangle next to two small ones sharing a split edge
        let coords = vec![0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.5, 0.5, 1.0, 1.0];
        let cells = vec![0, 1, 2, 1, 4, 3, 3, 4, 2];
        assert!(SimplicialMesh::new(2, coords, cells).is_err());
    }

    #[test]
    fn facet_census_of_square() {
        let m = build_structured_triangle_mesh((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        let f = m.facets();
        assert_eq!(f.iter().filter(|f| f.is_boundary()).count(), 8);
        assert_eq!(f.iter().filter(|f| !f.is_boundary()).count(), 8);
    }

    #[test]
    fn shape_gradients_sum_to_zero() {
        let m = build_structured_triangle_mesh((0.0, 2.0), (0.0, 1.0), 3, 2).unwrap();
        for e in 0..m.n_elements() {
            let g = m.shape_gradients(e);
            assert!((g[0][0] + g[1][0] + g[2][0]).abs() < 1e-12);
            assert!((g[0][1] + g[1][1] + g[2][1]).abs() < 1e-12);
        }
    }
}
