use super::{SimplicialMesh, BARY_TOL};
use crate::error::{Error, Result};

const BOX_TOL: f64 = 1e-10;
const MAX_BINS_PER_AXIS: usize = 4096;

/// Element hit by a point location query.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Location {
    pub element: usize,
    /// Barycentric coordinates; only the first `dim + 1` entries are used.
    pub bary: [f64; 3],
}

/// Uniform background grid; each bin lists (in increasing order) the
/// elements whose inflated bounding box overlaps it.
#[derive(Clone, Debug)]
pub(crate) struct BinGrid {
    origin: [f64; 2],
    cell: [f64; 2],
    shape: [usize; 2],
    bins: Vec<Vec<u32>>,
    bbox: Vec<(f64, f64)>,
}

impl BinGrid {
    pub(crate) fn build(mesh: &SimplicialMesh) -> Self {
        let dim = mesh.dim();
        let bbox = mesh.bounding_box();
        let n = mesh.n_elements().max(1);
        let mean_diam =
            (0..mesh.n_elements()).map(|e| mesh.diameter(e)).sum::<f64>() / n as f64;
        let mut origin = [0.0; 2];
        let mut cell = [1.0; 2];
        let mut shape = [1usize; 2];
        for d in 0..dim {
            let width = (bbox[d].1 - bbox[d].0).max(f64::MIN_POSITIVE);
            let k = ((width / mean_diam).ceil() as usize).clamp(1, MAX_BINS_PER_AXIS);
            origin[d] = bbox[d].0;
            cell[d] = width / k as f64;
            shape[d] = k;
        }
        let mut bins = vec![Vec::new(); shape[0] * shape[1]];
        for e in 0..mesh.n_elements() {
            let mut lo = [0usize; 2];
            let mut hi = [0usize; 2];
            for d in 0..dim {
                let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
                for &v in mesh.element(e) {
                    a = a.min(mesh.node(v)[d]);
                    b = b.max(mesh.node(v)[d]);
                }
                lo[d] = bin_index(a - BOX_TOL, origin[d], cell[d], shape[d]);
                hi[d] = bin_index(b + BOX_TOL, origin[d], cell[d], shape[d]);
            }
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    bins[j * shape[0] + i].push(e as u32);
                }
            }
        }
        BinGrid {
            origin,
            cell,
            shape,
            bins,
            bbox,
        }
    }

    pub(crate) fn locate(&self, mesh: &SimplicialMesh, x: &[f64]) -> Result<Location> {
        let dim = mesh.dim();
        let not_found = || Error::NotFound { point: x.to_vec() };
        if x.len() < dim {
            return Err(not_found());
        }
        for d in 0..dim {
            if !(x[d] >= self.bbox[d].0 - BOX_TOL && x[d] <= self.bbox[d].1 + BOX_TOL) {
                return Err(not_found());
            }
        }
        let mut idx = [0usize; 2];
        for d in 0..dim {
            idx[d] = bin_index(x[d], self.origin[d], self.cell[d], self.shape[d]);
        }
        let bin = &self.bins[idx[1] * self.shape[0] + idx[0]];
        for &e in bin {
            let e = e as usize;
            let bary = mesh.barycentric(e, x);
            if bary[..=dim]
                .iter()
                .all(|&l| l >= -BARY_TOL && l <= 1.0 + BARY_TOL)
            {
                return Ok(Location { element: e, bary });
            }
        }
        Err(not_found())
    }
}

fn bin_index(x: f64, origin: f64, cell: f64, n: usize) -> usize {
    let k = ((x - origin) / cell).floor();
    if k <= 0.0 {
        0
    } else {
        (k as usize).min(n - 1)
    }
}

#[cfg(test)]
mod tests {
    use crate::mesh::{build_interval_mesh, build_structured_triangle_mesh};

    #[test]
    fn midpoint_of_segment() {
        let m = build_interval_mesh(0.0, 1.0, 4).unwrap();
        let loc = m.locate_point(&[0.375]).unwrap();
        assert_eq!(loc.element, 1);
        assert!((loc.bary[0] - 0.5).abs() < 1e-14 && (loc.bary[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn node_resolves_to_lowest_incident_element() {
        let m = build_interval_mesh(0.0, 1.0, 4).unwrap();
        let loc = m.locate_point(&[0.5]).unwrap();
        assert_eq!(loc.element, 1);
        assert!((loc.bary[1] - 1.0).abs() < 1e-14);

        let m = build_structured_triangle_mesh((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        // centre node (index 4) touches elements 0, 1, 3, 4, 6, 7
        let loc = m.locate_point(&[0.5, 0.5]).unwrap();
        assert_eq!(loc.element, 0);
        assert!(loc.bary.iter().any(|&b| (b - 1.0).abs() < 1e-12));
    }

    #[test]
    fn outside_is_not_found() {
        let m = build_interval_mesh(0.0, 1.0, 4).unwrap();
        assert!(m.locate_point(&[1.0 + 1e-6]).is_err());
        assert!(m.locate_point(&[1.0 + 1e-11]).is_ok());
        let m = build_structured_triangle_mesh((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap();
        assert!(m.locate_point(&[-0.5, 0.5]).is_err());
    }
}
