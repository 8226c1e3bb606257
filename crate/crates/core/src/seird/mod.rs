//! Snapshot generators.
//!
//! The main one is a 1D SEIRD reaction-diffusion model on `[0, 1]`:
//!
//! ```text
//! s_t + f β_i s i + f β_e s e − ∇·(n ν_s ∇s) = 0
//! e_t − f β_i s i − f β_e s e + (α + γ_e) e − ∇·(n ν_e ∇e) = 0
//! i_t − α e + (γ_i + δ) i − ∇·(n ν_i ∇i) = 0
//! r_t − γ_e e − γ_i i − ∇·(n ν_r ∇r) = 0
//! d_t − δ i = 0,   c_t − α e = 0
//! ```
//!
//! with `n = s + e + i + r` and the Allee factor `f = 1 − A_e/n`. `c`
//! accumulates the inflow into `i`. Space is P1 Galerkin, time BDF2 with a
//! backward-Euler first step; each step is a Gauss–Seidel Picard loop
//! (s, e, i, r, d, c) in which `n`, `f` and the infectious weight
//! `β_i i + β_e e` are lagged.

mod config;
mod demo;
mod synth;

use std::collections::BTreeSet;
use std::sync::Arc;

use log::{debug, info};

pub use config::{parse_config, parse_config_str, RunConfig, Scenario};
pub use demo::{demo_donor_mesh, indicator_projection_demo, jittered_mesh, DemoReport, ProjectionSummary, DEMO_HALF_WIDTH};
pub use synth::{synth_linear_series, SynthSpec};

use crate::error::{invalid, Error, Result};
use crate::fem::{assemble_mass, assemble_stiffness, assemble_weighted_mass, cg_solve_from, CsrMatrix, FeField, SparseSpd};
use crate::l2projection::build_default_projection;
use crate::mesh::{build_interval_mesh, refine, RefinementPlan, SimplicialMesh};
use crate::qoi::QoiSeries;
use crate::series::{Snapshot, SnapshotSeries};

/// Field names in storage order.
pub const COMPARTMENTS: [&str; 6] = ["s", "e", "i", "r", "d", "c"];
const S: usize = 0;
const E: usize = 1;
const I: usize = 2;
const R: usize = 3;
const D: usize = 4;
const C: usize = 5;

/// Linear solves inside the Picard loop.
const INNER_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Zero population.
    Dirichlet,
    /// Zero flux.
    Neumann,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeirdParams {
    pub beta_i: f64,
    pub beta_e: f64,
    pub alpha: f64,
    pub gamma_e: f64,
    pub gamma_i: f64,
    pub delta: f64,
    pub nu_s: f64,
    pub nu_e: f64,
    pub nu_i: f64,
    pub nu_r: f64,
    pub a_e: f64,
    pub dt: f64,
    pub dt_o: f64,
    pub t_end: f64,
    /// Condition at `x = 1`; `x = 0` is always zero flux.
    pub right_boundary: Boundary,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

impl Default for SeirdParams {
    fn default() -> Self {
        SeirdParams {
            beta_i: 0.375,
            beta_e: 0.375,
            alpha: 0.09375,
            gamma_e: 0.125,
            gamma_i: 0.03125,
            delta: 0.0046875,
            nu_s: 3.75e-5,
            nu_e: 0.75e-3,
            nu_i: 0.75e-10,
            nu_r: 3.75e-5,
            a_e: 0.0,
            dt: 0.25,
            dt_o: 0.25,
            t_end: 44.0,
            right_boundary: Boundary::Dirichlet,
            picard_tol: 1e-8,
            picard_max_iter: 25,
        }
    }
}

fn whole_ratio(a: f64, b: f64, what: &str) -> Result<usize> {
    let q = a / b;
    let k = q.round();
    if k < 1.0 || (q - k).abs() > 1e-9 * q.max(1.0) {
        return Err(invalid(format!("{what} must be a positive integer multiple (got ratio {q})")));
    }
    Ok(k as usize)
}

impl SeirdParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("beta_i", self.beta_i),
            ("beta_e", self.beta_e),
            ("alpha", self.alpha),
            ("gamma_e", self.gamma_e),
            ("gamma_i", self.gamma_i),
            ("delta", self.delta),
            ("nu_s", self.nu_s),
            ("nu_e", self.nu_e),
            ("nu_i", self.nu_i),
            ("nu_r", self.nu_r),
            ("a_e", self.a_e),
        ];
        if let Some((k, v)) = rates.iter().find(|(_, v)| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid(format!("{k} must be finite and nonnegative (got {v})")));
        }
        if !(self.dt > 0.0) || !(self.t_end > 0.0) || !self.dt.is_finite() || !self.t_end.is_finite() {
            return Err(invalid("dt and t_end must be positive"));
        }
        if !(self.picard_tol > 0.0) || self.picard_max_iter == 0 {
            return Err(invalid("picard_tol must be positive and picard_max_iter at least 1"));
        }
        self.output_stride()?;
        let steps = self.steps()?;
        if steps % self.output_stride()? != 0 {
            return Err(invalid("t_end must be a multiple of dt_o"));
        }
        Ok(())
    }

    pub fn steps(&self) -> Result<usize> {
        whole_ratio(self.t_end, self.dt, "t_end / dt")
    }

    /// Time steps per output interval.
    pub fn output_stride(&self) -> Result<usize> {
        whole_ratio(self.dt_o, self.dt, "dt_o / dt")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AmrPolicy {
    pub initial_elements: usize,
    pub initial_uniform_levels: u32,
    /// `None` disables adaptation.
    pub remesh_every: Option<usize>,
    pub refine_fraction: f64,
    pub coarsen_fraction: f64,
    pub max_level: u32,
}

impl Default for AmrPolicy {
    fn default() -> Self {
        AmrPolicy {
            initial_elements: 125,
            initial_uniform_levels: 2,
            remesh_every: Some(4),
            refine_fraction: 0.3,
            coarsen_fraction: 0.05,
            max_level: 2,
        }
    }
}

impl AmrPolicy {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(self.refine_fraction) || !in_unit(self.coarsen_fraction) {
            return Err(invalid("refine/coarsen fractions must lie in [0, 1]"));
        }
        if self.refine_fraction + self.coarsen_fraction > 1.0 {
            return Err(invalid("refine_fraction + coarsen_fraction must not exceed 1"));
        }
        if self.initial_elements == 0 {
            return Err(invalid("initial_elements must be positive"));
        }
        if self.initial_uniform_levels > self.max_level {
            return Err(invalid("initial_uniform_levels exceeds max_level"));
        }
        if self.remesh_every == Some(0) {
            return Err(invalid("remesh_every must be positive"));
        }
        Ok(())
    }

    /// The initial mesh after uniform refinement; also the default
    /// reference mesh.
    pub fn initial_mesh(&self) -> Result<SimplicialMesh> {
        let mut mesh = build_interval_mesh(0.0, 1.0, self.initial_elements)?;
        for _ in 0..self.initial_uniform_levels {
            mesh = refine(&mesh, &RefinementPlan::refine_all(&mesh, self.max_level))?;
        }
        Ok(mesh)
    }
}

fn quartic_bump(x: f64, c: f64) -> f64 {
    (-(x - c).powi(4) / 1e-5).exp()
}

pub fn initial_s(x: f64) -> f64 {
    (-(x + 1.0).powi(4)).exp()
        + (-(x - 0.35).powi(2) / 1e-2).exp()
        + 0.125 * (quartic_bump(x, 0.62) + quartic_bump(x, 0.52) + quartic_bump(x, 0.42))
        + 0.25 * quartic_bump(x, 0.735)
}

pub fn initial_e(x: f64) -> f64 {
    0.05 * quartic_bump(x, 0.75)
}

/// Nodal initial compartments `s, e, i, r, d, c` on a 1D mesh.
pub fn seird_initial_conditions(mesh: Arc<SimplicialMesh>) -> Result<Vec<FeField>> {
    if mesh.dim() != 1 {
        return Err(invalid("the SEIRD model is one-dimensional"));
    }
    COMPARTMENTS
        .iter()
        .map(|&name| match name {
            "s" => FeField::interpolate(mesh.clone(), name, |x| initial_s(x[0])),
            "e" => FeField::interpolate(mesh.clone(), name, |x| initial_e(x[0])),
            _ => FeField::constant(mesh.clone(), name, 0.0),
        })
        .collect()
}

/// Solution at one time level together with the previous level for BDF2.
#[derive(Clone, Debug, PartialEq)]
pub struct SeirdState {
    pub mesh: Arc<SimplicialMesh>,
    pub step: usize,
    pub time: f64,
    /// `COMPARTMENTS` order.
    pub u: Vec<Vec<f64>>,
    /// Level `n − 1`, absent before the first step.
    pub prev: Option<Vec<Vec<f64>>>,
}

impl SeirdState {
    pub fn new(fields: &[FeField]) -> Result<Self> {
        let mesh = fields.first().ok_or_else(|| invalid("no fields"))?.mesh.clone();
        let u = COMPARTMENTS
            .iter()
            .map(|name| {
                fields
                    .iter()
                    .find(|f| f.name == *name)
                    .map(|f| f.values.clone())
                    .ok_or_else(|| invalid(format!("compartment `{name}` missing")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SeirdState {
            mesh,
            step: 0,
            time: 0.0,
            u,
            prev: None,
        })
    }

    pub fn initial(mesh: Arc<SimplicialMesh>) -> Result<Self> {
        Self::new(&seird_initial_conditions(mesh)?)
    }

    pub fn fields(&self) -> Result<Vec<FeField>> {
        COMPARTMENTS
            .iter()
            .zip(&self.u)
            .map(|(name, v)| FeField::new(self.mesh.clone(), v.clone(), *name))
            .collect()
    }
}

fn right_node(mesh: &SimplicialMesh) -> usize {
    (0..mesh.n_nodes())
        .max_by(|&a, &b| mesh.node(a)[0].total_cmp(&mesh.node(b)[0]))
        .expect("nonempty mesh")
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn axpy_into(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Per-step diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub picard_iterations: usize,
    pub picard_update: f64,
}

/// Advances one time step. The first step (no `prev`) is backward Euler.
pub fn step(state: &SeirdState, params: &SeirdParams) -> Result<(SeirdState, StepStats)> {
    let mesh = &*state.mesh;
    let n = mesh.n_nodes();
    let t_new = (state.step + 1) as f64 * params.dt;
    let fail = |reason: String| Error::Step { time: t_new, reason };

    // BDF coefficient a0 and history h so that u_t ≈ a0·u − h
    let (a0, hist): (f64, Vec<Vec<f64>>) = match &state.prev {
        None => (1.0 / params.dt, state.u.iter().map(|u| u.iter().map(|x| x / params.dt).collect()).collect()),
        Some(prev) => (
            1.5 / params.dt,
            state
                .u
                .iter()
                .zip(prev)
                .map(|(u, p)| u.iter().zip(p).map(|(a, b)| (4.0 * a - b) / (2.0 * params.dt)).collect())
                .collect(),
        ),
    };

    let mass = assemble_mass(mesh)?;
    let mhist: Vec<Vec<f64>> = hist.iter().map(|h| mass.matvec(h)).collect();
    let dirichlet = (params.right_boundary == Boundary::Dirichlet).then(|| right_node(mesh));
    let nus = [params.nu_s, params.nu_e, params.nu_i, params.nu_r];

    let solve = |matrix: CsrMatrix, mut rhs: Vec<f64>, guess: &[f64]| -> Result<Vec<f64>> {
        let mut a = SparseSpd::new_unchecked(matrix);
        if let Some(node) = dirichlet {
            a.apply_dirichlet(&mut rhs, node, 0.0);
        }
        cg_solve_from(&a, &rhs, guess.to_vec(), INNER_TOL, None)
            .map_err(|e| fail(format!("linear solve failed: {e}")))
    };

    let mut u = state.u.clone();
    let mut update = f64::INFINITY;
    let mut iters = 0;
    while iters < params.picard_max_iter {
        iters += 1;
        let old = u.clone();
        let npop: Vec<f64> = (0..n).map(|k| u[S][k] + u[E][k] + u[I][k] + u[R][k]).collect();
        let allee: Vec<f64> = npop
            .iter()
            .map(|&p| {
                if params.a_e == 0.0 {
                    1.0
                } else if p > 0.0 {
                    1.0 - params.a_e / p
                } else {
                    0.0
                }
            })
            .collect();
        let weight: Vec<f64> = (0..n)
            .map(|k| allee[k] * (params.beta_i * u[I][k] + params.beta_e * u[E][k]))
            .collect();
        let w = assemble_weighted_mass(mesh, &weight)?;
        let k_pop = assemble_stiffness(mesh, &npop)?;
        let lhs = |reaction: f64, nu: f64, extra: Option<&CsrMatrix>| -> Result<CsrMatrix> {
            let mut a = mass.csr().clone();
            a.scale(a0 + reaction);
            a.axpy(nu, &k_pop)?;
            if let Some(x) = extra {
                a.axpy(1.0, x)?;
            }
            Ok(a)
        };

        // s: (a0 M + W + K_s) s = M h_s
        u[S] = solve(lhs(0.0, nus[0], Some(&w))?, mhist[S].clone(), &u[S])?;
        // e: (a0 M + (α+γ_e) M + K_e) e = M h_e + W s
        let mut rhs = mhist[E].clone();
        axpy_into(&mut rhs, 1.0, &w.matvec(&u[S]));
        u[E] = solve(lhs(params.alpha + params.gamma_e, nus[1], None)?, rhs, &u[E])?;
        // i: (a0 M + (γ_i+δ) M + K_i) i = M h_i + α M e
        let me = mass.matvec(&u[E]);
        let mut rhs = mhist[I].clone();
        axpy_into(&mut rhs, params.alpha, &me);
        u[I] = solve(lhs(params.gamma_i + params.delta, nus[2], None)?, rhs, &u[I])?;
        // r: (a0 M + K_r) r = M h_r + γ_e M e + γ_i M i
        let mut rhs = mhist[R].clone();
        axpy_into(&mut rhs, params.gamma_e, &me);
        axpy_into(&mut rhs, params.gamma_i, &mass.matvec(&u[I]));
        u[R] = solve(lhs(0.0, nus[3], None)?, rhs, &u[R])?;
        // nodal ODEs
        for k in 0..n {
            u[D][k] = (hist[D][k] + params.delta * u[I][k]) / a0;
            u[C][k] = (hist[C][k] + params.alpha * u[E][k]) / a0;
        }

        let num = norm(&u.iter().flatten().zip(old.iter().flatten()).map(|(x, y)| x - y).collect::<Vec<_>>());
        let den = norm(&u.iter().flatten().copied().collect::<Vec<_>>());
        update = if den > 0.0 { num / den } else { num };
        if update <= params.picard_tol {
            break;
        }
    }
    if !(update <= params.picard_tol) {
        return Err(fail(format!(
            "Picard iteration stalled after {iters} iterations (relative update {update:.3e})"
        )));
    }
    if u.iter().flatten().any(|v| !v.is_finite()) {
        return Err(fail("non-finite values".into()));
    }
    Ok((
        SeirdState {
            mesh: state.mesh.clone(),
            step: state.step + 1,
            time: t_new,
            u,
            prev: Some(state.u.clone()),
        },
        StepStats {
            picard_iterations: iters,
            picard_update: update,
        },
    ))
}

/// Refinement plan from the flux-jump ranking of `s + e + i` indicators:
/// the top `refine_fraction` below `max_level` are refined, and complete
/// sibling groups inside the bottom `coarsen_fraction` are merged.
pub fn amr_plan(state: &SeirdState, policy: &AmrPolicy) -> Result<RefinementPlan> {
    let mesh = &state.mesh;
    let ne = mesh.n_elements();
    let mut score = vec![0.0; ne];
    for c in [S, E, I] {
        let f = FeField::new(mesh.clone(), state.u[c].clone(), COMPARTMENTS[c])?;
        for (s, v) in score.iter_mut().zip(f.flux_jump_indicator()) {
            *s += v;
        }
    }
    let mut order: Vec<usize> = (0..ne).collect();
    order.sort_by(|&a, &b| score[b].total_cmp(&score[a]).then(a.cmp(&b)));
    let n_ref = (policy.refine_fraction * ne as f64).round() as usize;
    let n_coarse = (policy.coarsen_fraction * ne as f64).round() as usize;
    let refine: BTreeSet<usize> = order[..n_ref]
        .iter()
        .copied()
        .filter(|&e| mesh.level(e) < policy.max_level)
        .collect();
    let bottom: BTreeSet<usize> = order[ne - n_coarse..].iter().copied().filter(|e| !refine.contains(e)).collect();
    let coarsen: BTreeSet<usize> = bottom
        .iter()
        .copied()
        .filter(|&e| {
            mesh.parent(e).is_some() && {
                let sib = mesh.siblings(e);
                sib.len() == 1 && bottom.contains(&sib[0])
            }
        })
        .collect();
    Ok(RefinementPlan {
        refine,
        coarsen,
        max_level: policy.max_level,
    })
}

/// Applies `plan` and transfers both time levels to the new mesh by
/// L²-projection, restoring the boundary value afterwards.
pub fn remesh(state: &SeirdState, plan: &RefinementPlan, params: &SeirdParams) -> Result<SeirdState> {
    let new_mesh = Arc::new(refine(&state.mesh, plan)?);
    let op = build_default_projection(state.mesh.clone(), new_mesh.clone())?;
    let transfer = |levels: &Vec<Vec<f64>>| -> Result<Vec<Vec<f64>>> {
        let mut out = levels.iter().map(|v| op.project_values(v)).collect::<Result<Vec<_>>>()?;
        if params.right_boundary == Boundary::Dirichlet {
            let node = right_node(&new_mesh);
            for c in [S, E, I, R] {
                out[c][node] = 0.0;
            }
        }
        Ok(out)
    };
    Ok(SeirdState {
        mesh: new_mesh.clone(),
        step: state.step,
        time: state.time,
        u: transfer(&state.u)?,
        prev: state.prev.as_ref().map(transfer).transpose()?,
    })
}

/// Result of [`run_seird_amr`].
#[derive(Clone, Debug)]
pub struct SeirdRun {
    /// Snapshots on the meshes they were computed on.
    pub adaptive: SnapshotSeries,
    /// The same snapshots projected onto the reference mesh.
    pub projected: SnapshotSeries,
    pub reference: Arc<SimplicialMesh>,
    pub population_adaptive: QoiSeries,
    pub population_projected: QoiSeries,
    pub remesh_count: usize,
    pub max_picard_iterations: usize,
    /// Smallest element size seen on any adaptive mesh.
    pub min_element_size: f64,
    pub max_level_seen: u32,
}

/// Runs the model for `t_end`, adapting the mesh every
/// `policy.remesh_every` steps. Each output snapshot is also projected onto
/// `reference` (the uniformly refined initial mesh when `None`).
pub fn run_seird_amr(params: &SeirdParams, policy: &AmrPolicy, reference: Option<Arc<SimplicialMesh>>) -> Result<SeirdRun> {
    params.validate()?;
    policy.validate()?;
    let start = Arc::new(policy.initial_mesh()?);
    let reference = reference.unwrap_or_else(|| start.clone());
    let steps = params.steps()?;
    let stride = params.output_stride()?;

    let mut state = SeirdState::initial(start)?;
    let mut adaptive = Vec::with_capacity(steps / stride + 1);
    let mut projected = Vec::with_capacity(steps / stride + 1);
    let mut op = build_default_projection(state.mesh.clone(), reference.clone())?;
    let mut remesh_count = 0;
    let mut max_picard = 0;
    let mut min_h = state.mesh.min_diameter();
    let mut max_level = state.mesh.levels().iter().copied().max().unwrap_or(0);

    let mut record = |state: &SeirdState, op: &crate::l2projection::ProjectionOperator| -> Result<()> {
        let k = state.step / stride;
        let time = k as f64 * params.dt_o;
        let fields = state.fields()?;
        let proj = fields.iter().map(|f| op.project(f)).collect::<Result<Vec<_>>>()?;
        adaptive.push(Snapshot::new(k, time, fields)?);
        projected.push(Snapshot::new(k, time, proj)?);
        Ok(())
    };
    record(&state, &op)?;

    for n in 1..=steps {
        let (next, stats) = step(&state, params)?;
        state = next;
        max_picard = max_picard.max(stats.picard_iterations);
        if n % stride == 0 {
            record(&state, &op)?;
        }
        if let Some(every) = policy.remesh_every {
            if n % every == 0 && n < steps {
                let plan = amr_plan(&state, policy)?;
                if !plan.is_empty() {
                    state = remesh(&state, &plan, params)?;
                    op = build_default_projection(state.mesh.clone(), reference.clone())?;
                    remesh_count += 1;
                    min_h = min_h.min(state.mesh.min_diameter());
                    max_level = max_level.max(state.mesh.levels().iter().copied().max().unwrap_or(0));
                    debug!(
                        "t = {}: remeshed to {} elements ({} refined, {} coarsened)",
                        state.time,
                        state.mesh.n_elements(),
                        plan.refine.len(),
                        plan.coarsen.len()
                    );
                }
            }
        }
    }
    info!(
        "SEIRD run finished: {steps} steps, {remesh_count} remeshes, at most {max_picard} Picard iterations"
    );
    let adaptive = SnapshotSeries::new(adaptive)?;
    let projected = SnapshotSeries::new(projected)?;
    Ok(SeirdRun {
        population_adaptive: adaptive.population()?,
        population_projected: projected.population()?,
        adaptive,
        projected,
        reference,
        remesh_count,
        max_picard_iterations: max_picard,
        min_element_size: min_h,
        max_level_seen: max_level,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet_params() -> SeirdParams {
        SeirdParams {
            beta_i: 0.0,
            beta_e: 0.0,
            alpha: 0.0,
            gamma_e: 0.0,
            gamma_i: 0.0,
            delta: 0.0,
            nu_s: 0.0,
            nu_e: 0.0,
            nu_i: 0.0,
            nu_r: 0.0,
            t_end: 2.0,
            ..SeirdParams::default()
        }
    }

    #[test]
    fn initial_profiles() {
        let mesh = Arc::new(build_interval_mesh(0.0, 1.0, 500).unwrap());
        let f = seird_initial_conditions(mesh.clone()).unwrap();
        let at = |name: &str, x: f64| f.iter().find(|g| g.name == name).unwrap().evaluate(&[x]).unwrap();
        assert!((at("e", 0.75) - 0.05).abs() < 1e-15);
        // at the Gaussian peak only the far tail and the 0.42 bump add to 1
        let by_hand = 1.0 + (-(1.35f64).powi(4)).exp() + (-(0.07f64).powi(4) / 1e-5).exp() / 8.0;
        assert!((at("s", 0.35) - by_hand).abs() < 1e-12);
        for name in ["i", "r", "d", "c"] {
            assert_eq!(f.iter().find(|g| g.name == name).unwrap().inf_norm(), 0.0);
        }
        let tri = Arc::new(crate::mesh::build_structured_triangle_mesh((0.0, 1.0), (0.0, 1.0), 1, 1).unwrap());
        assert!(seird_initial_conditions(tri).is_err());
    }

    #[test]
    fn zero_state_stays_zero() {
        let mesh = Arc::new(build_interval_mesh(0.0, 1.0, 20).unwrap());
        let fields: Vec<FeField> = COMPARTMENTS.iter().map(|c| FeField::constant(mesh.clone(), *c, 0.0).unwrap()).collect();
        let mut s = SeirdState::new(&fields).unwrap();
        for _ in 0..3 {
            s = step(&s, &SeirdParams::default()).unwrap().0;
        }
        assert!(s.u.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn no_dynamics_keeps_state() {
        let mesh = Arc::new(build_interval_mesh(0.0, 1.0, 40).unwrap());
        let mut s = SeirdState::initial(mesh).unwrap();
        let p = SeirdParams {
            right_boundary: Boundary::Neumann,
            ..quiet_params()
        };
        let u0 = s.u.clone();
        for _ in 0..8 {
            s = step(&s, &p).unwrap().0;
        }
        for (a, b) in s.u.iter().flatten().zip(u0.iter().flatten()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(SeirdParams::default().validate().is_ok());
        assert_eq!(SeirdParams::default().steps().unwrap(), 176);
        let bad = SeirdParams { dt_o: 0.3, ..SeirdParams::default() };
        assert!(bad.validate().is_err());
        let neg = SeirdParams { alpha: -1.0, ..SeirdParams::default() };
        assert!(neg.validate().is_err());
        let p = AmrPolicy { refine_fraction: 0.9, coarsen_fraction: 0.2, ..AmrPolicy::default() };
        assert!(p.validate().is_err());
    }

    #[test]
    fn preset_mesh_sizes() {
        let m = AmrPolicy::default().initial_mesh().unwrap();
        assert_eq!(m.n_elements(), 500);
        assert!((m.min_diameter() - 0.002).abs() < 1e-15);
    }

    #[test]
    fn amr_plan_respects_levels_and_pairs() {
        let policy = AmrPolicy::default();
        let mesh = Arc::new(policy.initial_mesh().unwrap());
        let s = SeirdState::initial(mesh.clone()).unwrap();
        let plan = amr_plan(&s, &policy).unwrap();
        // everything starts at the finest level
        assert!(plan.refine.is_empty());
        assert!(!plan.coarsen.is_empty());
        for &e in &plan.coarsen {
            assert!(mesh.siblings(e).iter().all(|x| plan.coarsen.contains(x)));
        }
        let coarse = remesh(&s, &plan, &SeirdParams::default()).unwrap();
        assert_eq!(coarse.mesh.n_elements(), 500 - plan.coarsen.len() / 2);
        assert_eq!(coarse.u[0][right_node(&coarse.mesh)], 0.0);
    }
}
