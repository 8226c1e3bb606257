//! Quantities of interest on snapshot fields.
//!
//! Threshold-based quantities use the exact superlevel set `{u_h ≥ θ}` of the
//! P1 field: inside each simplex it is the simplex clipped by a half-space,
//! found by cutting edges at the linear crossing.

use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::fem::FeField;

/// Compartments that make up the living-plus-dead population.
pub const POPULATION_FIELDS: [&str; 5] = ["s", "e", "i", "r", "d"];

/// `(∫s + ∫e + ∫i + ∫r + ∫d) / |Ω|`. Fields are looked up by name and must
/// share one mesh.
pub fn total_population(fields: &[FeField]) -> Result<f64> {
    let mut total = 0.0;
    let mut mesh = None;
    for name in POPULATION_FIELDS {
        let f = fields
            .iter()
            .find(|f| f.name == name)
            .ok_or_else(|| invalid(format!("compartment `{name}` missing")))?;
        match mesh {
            None => mesh = Some(f.mesh.clone()),
            Some(ref m) if m.n_nodes() != f.mesh.n_nodes() => {
                return Err(invalid("compartments live on different meshes"));
            }
            _ => {}
        }
        total += f.integrate();
    }
    let omega = mesh.expect("at least one compartment").total_measure();
    Ok(total / omega)
}

/// Vertices of `{u ≥ θ}` within element `e`, in boundary order.
fn superlevel_piece(field: &FeField, e: usize, threshold: f64) -> Vec<[f64; 2]> {
    let mesh = &*field.mesh;
    let verts: Vec<([f64; 2], f64)> = mesh
        .element(e)
        .iter()
        .map(|&n| {
            let x = mesh.node(n);
            ([x[0], x.get(1).copied().unwrap_or(0.0)], field.values[n])
        })
        .collect();
    let cut = |(p, up): ([f64; 2], f64), (q, uq): ([f64; 2], f64)| {
        let t = (threshold - up) / (uq - up);
        [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
    };
    let mut out = Vec::with_capacity(4);
    if verts.len() == 2 {
        let (a, b) = (verts[0], verts[1]);
        match (a.1 >= threshold, b.1 >= threshold) {
            (true, true) => out.extend([a.0, b.0]),
            (true, false) => out.extend([a.0, cut(a, b)]),
            (false, true) => out.extend([cut(a, b), b.0]),
            (false, false) => {}
        }
        return out;
    }
    for k in 0..verts.len() {
        let (p, q) = (verts[k], verts[(k + 1) % verts.len()]);
        let (pin, qin) = (p.1 >= threshold, q.1 >= threshold);
        if pin {
            out.push(p.0);
        }
        if pin != qin {
            out.push(cut(p, q));
        }
    }
    out
}

/// Measure and first moments of a clipped piece.
fn moments(piece: &[[f64; 2]], dim: usize) -> (f64, [f64; 2]) {
    if piece.len() < 2 {
        return (0.0, [0.0; 2]);
    }
    if dim == 1 {
        let len = (piece[1][0] - piece[0][0]).abs();
        return (len, [len * 0.5 * (piece[0][0] + piece[1][0]), 0.0]);
    }
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for k in 0..piece.len() {
        let (p, q) = (piece[k], piece[(k + 1) % piece.len()]);
        let cross = p[0] * q[1] - q[0] * p[1];
        a += cross;
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    // signed sums; orientation cancels in the ratio, so carry the sign
    let s = a.signum();
    (0.5 * a.abs(), [s * cx / 6.0, s * cy / 6.0])
}

/// Largest coordinate along `axis` of any point where `u_h ≥ θ`; the lower
/// end of the domain along `axis` when no such point exists.
pub fn front_position(field: &FeField, threshold: f64, axis: usize) -> Result<f64> {
    let mesh = &*field.mesh;
    if axis >= mesh.dim() {
        return Err(invalid(format!("axis {axis} out of range for a {}D mesh", mesh.dim())));
    }
    let mut best = f64::NEG_INFINITY;
    for e in 0..mesh.n_elements() {
        for p in superlevel_piece(field, e, threshold) {
            best = best.max(p[axis]);
        }
    }
    Ok(if best.is_finite() { best } else { mesh.bounding_box()[axis].0 })
}

/// Centroid of `{u_h ≥ θ}`.
pub fn region_center_of_mass(field: &FeField, threshold: f64) -> Result<Vec<f64>> {
    let mesh = &*field.mesh;
    let mut vol = 0.0;
    let mut mom = [0.0; 2];
    for e in 0..mesh.n_elements() {
        let (v, m) = moments(&superlevel_piece(field, e, threshold), mesh.dim());
        vol += v;
        mom[0] += m[0];
        mom[1] += m[1];
    }
    if !(vol > 0.0) {
        return Err(Error::UndefinedRegion);
    }
    Ok(mom[..mesh.dim()].iter().map(|m| m / vol).collect())
}

/// Integral of `{u_h ≥ θ}`'s indicator.
pub fn region_measure(field: &FeField, threshold: f64) -> f64 {
    (0..field.mesh.n_elements())
        .map(|e| moments(&superlevel_piece(field, e, threshold), field.mesh.dim()).0)
        .sum()
}

/// A scalar quantity sampled over time.
#[derive(Clone, Debug, PartialEq)]
pub struct QoiSeries {
    pub kind: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// Divisor applied by [`QoiSeries::normalized`], if any.
    pub reference: Option<f64>,
}

impl QoiSeries {
    pub fn new(kind: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(invalid("times and values differ in length"));
        }
        if values.iter().chain(&times).any(|v| !v.is_finite()) {
            return Err(invalid("QoI series must be finite"));
        }
        Ok(QoiSeries {
            kind: kind.into(),
            times,
            values,
            reference: None,
        })
    }

    /// Values divided by the first one.
    pub fn normalized(&self) -> Result<QoiSeries> {
        let r = *self.values.first().ok_or_else(|| invalid("empty series"))?;
        if r == 0.0 {
            return Err(invalid("cannot normalize by a zero first value"));
        }
        Ok(QoiSeries {
            kind: self.kind.clone(),
            times: self.times.clone(),
            values: self.values.iter().map(|v| v / r).collect(),
            reference: Some(r),
        })
    }

    /// Largest `|v − 1|` of the normalized series.
    pub fn max_relative_drift(&self) -> Result<f64> {
        Ok(self.normalized()?.values.iter().fold(0.0, |m, v| m.max((v - 1.0).abs())))
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("time,value\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            let _ = writeln!(s, "{t},{v:.16e}");
        }
        s
    }
}
