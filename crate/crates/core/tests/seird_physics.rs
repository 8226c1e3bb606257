use std::f64::consts::PI;
use std::sync::Arc;

use amrdmd::fem::FeField;
use amrdmd::mesh::build_interval_mesh;
use amrdmd::seird::{run_seird_amr, step, AmrPolicy, Boundary, SeirdParams, SeirdState, COMPARTMENTS};

fn no_reactions() -> SeirdParams {
    SeirdParams {
        beta_i: 0.0,
        beta_e: 0.0,
        alpha: 0.0,
        gamma_e: 0.0,
        gamma_i: 0.0,
        delta: 0.0,
        right_boundary: Boundary::Neumann,
        ..SeirdParams::default()
    }
}

fn cosine_amplitude(state: &SeirdState) -> f64 {
    let f = FeField::new(state.mesh.clone(), state.u[0].clone(), "s").unwrap();
    let c = FeField::interpolate(state.mesh.clone(), "c", |x| (PI * x[0]).cos()).unwrap();
    let prod: Vec<f64> = f.values.iter().zip(&c.values).map(|(a, b)| a * b).collect();
    // ∫ s cos(πx) ≈ a/2 on the unit interval
    2.0 * FeField::new(state.mesh.clone(), prod, "p").unwrap().integrate()
}

#[test]
fn small_cosine_mode_decays_at_the_linearized_rate() {
    // with e = i = r = 0 the population is s and the flux is s·ν_s·∇s;
    // around s ≈ C the cos(πx) mode decays like exp(−C ν_s π² t)
    let (base, amp, nu) = (1.0, 1e-3, 0.01);
    let params = SeirdParams {
        nu_s: nu,
        t_end: 5.0,
        ..no_reactions()
    };
    let mesh = Arc::new(build_interval_mesh(0.0, 1.0, 400).unwrap());
    let fields: Vec<FeField> = COMPARTMENTS
        .iter()
        .map(|&name| match name {
            "s" => FeField::interpolate(mesh.clone(), name, |x| base + amp * (PI * x[0]).cos()).unwrap(),
            _ => FeField::constant(mesh.clone(), name, 0.0).unwrap(),
        })
        .collect();
    let mut state = SeirdState::new(&fields).unwrap();
    let (t1, t2) = (1.0, 5.0);
    let mut a1 = 0.0;
    for n in 1..=params.steps().unwrap() {
        state = step(&state, &params).unwrap().0;
        if (n as f64 * params.dt - t1).abs() < 1e-12 {
            a1 = cosine_amplitude(&state);
        }
    }
    let a2 = cosine_amplitude(&state);
    let rate = (a1 / a2).ln() / (t2 - t1);
    let expected = base * nu * PI * PI;
    assert!((rate / expected - 1.0).abs() < 0.01, "rate {rate} vs {expected}");
}

#[test]
fn closed_domain_without_deaths_conserves_population_every_step() {
    let params = SeirdParams {
        delta: 0.0,
        right_boundary: Boundary::Neumann,
        dt_o: 0.25,
        t_end: 20.0,
        ..SeirdParams::default()
    };
    let run = run_seird_amr(&params, &AmrPolicy::default(), None).unwrap();
    assert!(run.remesh_count > 0);
    for q in [&run.population_adaptive, &run.population_projected] {
        for w in q.values.windows(2) {
            assert!(((w[1] - w[0]) / w[0]).abs() <= 1e-6, "{} -> {}", w[0], w[1]);
        }
    }
    // the epidemic actually moved people between compartments
    let last = run.adaptive.snapshots.last().unwrap();
    assert!(last.field("r").unwrap().integrate() > 1e-3);
}

#[test]
fn dirichlet_boundary_drains_population() {
    let params = SeirdParams {
        t_end: 10.0,
        ..SeirdParams::default()
    };
    let run = run_seird_amr(&params, &AmrPolicy::default(), None).unwrap();
    let v = &run.population_adaptive.values;
    assert!(v.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
}

#[test]
fn disabled_adaptation_matches_a_fixed_mesh_run() {
    let params = SeirdParams {
        t_end: 6.0,
        ..SeirdParams::default()
    };
    let policy = AmrPolicy {
        remesh_every: None,
        ..AmrPolicy::default()
    };
    let run = run_seird_amr(&params, &policy, None).unwrap();
    assert_eq!(run.remesh_count, 0);

    let mesh = Arc::new(policy.initial_mesh().unwrap());
    let mut state = SeirdState::initial(mesh).unwrap();
    for _ in 0..params.steps().unwrap() {
        state = step(&state, &params).unwrap().0;
    }
    let last = run.adaptive.snapshots.last().unwrap();
    for (k, name) in COMPARTMENTS.iter().enumerate() {
        let got = &last.field(name).unwrap().values;
        let diff = got.iter().zip(&state.u[k]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-10, "{name}: {diff}");
    }
}

#[test]
fn undershoots_stay_small_in_the_preset() {
    // consistent-mass Galerkin has no discrete maximum principle, so steep
    // fronts may dip slightly below zero; the dip must stay negligible
    let params = SeirdParams {
        t_end: 12.0,
        ..SeirdParams::default()
    };
    let run = run_seird_amr(&params, &AmrPolicy::default(), None).unwrap();
    for s in &run.adaptive.snapshots {
        for f in &s.fields {
            let min = f.values.iter().copied().fold(f64::INFINITY, f64::min);
            let scale = f.inf_norm().max(1e-3);
            assert!(min > -1e-5 * scale, "{} at t = {}: {min}", f.name, s.time);
        }
    }
}
