use std::fs::File;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use amrdmd::dmd::{errors, fit, read_model, write_model, AmplitudeMode, FitOptions, RankSpec, SvdMethod};
use amrdmd::fem::FeField;
use amrdmd::io::{read_mesh_file, read_store, write_fields, write_mesh_file, write_store};
use amrdmd::linalg::DenseMatrix;
use amrdmd::qoi::{front_position, region_center_of_mass, region_measure, QoiSeries};
use amrdmd::seird::{indicator_projection_demo, parse_config, run_seird_amr, synth_linear_series, Scenario};
use amrdmd::series::{Snapshot, SnapshotSeries};
use log::{info, warn};

use crate::output::{check_file_target, sidecar, write_file_atomic, OutDir, RunManifest, RUN_MANIFEST};
use crate::{AmplitudeChoice, CliError, ErrorsArgs, FitArgs, Globals, PredictArgs, QoiArgs, QoiKind, SvdChoice};

/// Matches store times given on the command line.
const TIME_TOL: f64 = 1e-9;

type CliResult<T> = Result<T, CliError>;

fn require_exists(p: &Path) -> CliResult<()> {
    if p.exists() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{} does not exist", p.display())))
    }
}

/// Runs `body` inside a claimed directory, leaving a `.failed` marker if it
/// fails.
fn in_out_dir(dir: &OutDir, body: impl FnOnce() -> CliResult<()>) -> CliResult<()> {
    let r = body();
    if let Err(e) = &r {
        dir.mark_failed(e);
    }
    r
}

fn require_uniform(series: &SnapshotSeries, what: &Path) -> CliResult<()> {
    if series.is_uniform() {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{}: snapshots live on different meshes; project first",
            what.display()
        )))
    }
}

fn position(series: &SnapshotSeries, t: f64, what: &Path) -> CliResult<usize> {
    series
        .position_of_time(t)
        .ok_or_else(|| CliError::Usage(format!("{} has no snapshot at t = {t}", what.display())))
}

pub fn simulate(g: &Globals, config: &Path, out_dir: &Path) -> CliResult<()> {
    require_exists(config)?;
    let cfg = parse_config(config)?;
    let dir = OutDir::claim(out_dir, g.force)?;
    in_out_dir(&dir, || {
        let mut man = RunManifest::new("simulate");
        man.input(config);
        man.config(&cfg.entries);
        match &cfg.scenario {
            Scenario::Seird { params, policy } => {
                let run = run_seird_amr(params, policy, None)?;
                man.stage("simulate");
                info!(
                    "{} snapshots, {} remeshes, smallest element {:.3e}, population drift {:.3e}",
                    run.adaptive.len(),
                    run.remesh_count,
                    run.min_element_size,
                    run.population_adaptive.max_relative_drift()?
                );
                write_store(&run.adaptive, &dir.path)?;
                write_mesh_file(&run.reference, &dir.join("reference.mesh.txt"))?;
                write_file_atomic(
                    &dir.join("population.csv"),
                    run.population_adaptive.normalized()?.to_csv().as_bytes(),
                )?;
                man.stage("write");
            }
            Scenario::Synthetic(spec) => {
                let mut spec = spec.clone();
                if let Some(s) = g.seed {
                    spec.seed = s;
                }
                man.seed("synthetic", spec.seed);
                let series = synth_linear_series(&spec)?;
                man.stage("simulate");
                write_store(&series, &dir.path)?;
                write_mesh_file(series.snapshots[0].mesh(), &dir.join("reference.mesh.txt"))?;
                man.stage("write");
            }
        }
        man.output(&dir.path);
        man.write_to(&dir.join(RUN_MANIFEST))
    })
}

pub fn demo_indicator(g: &Globals, out: &Path) -> CliResult<()> {
    let dir = OutDir::claim(out, g.force)?;
    in_out_dir(&dir, || {
        let mut man = RunManifest::new("demo indicator");
        let seed = g.seed.unwrap_or(0);
        man.seed("jitter", seed);
        let report = indicator_projection_demo(seed)?;
        man.stage("project");
        let write_field = |label: &str, f: &FeField| -> CliResult<()> {
            write_mesh_file(&f.mesh, &dir.join(&format!("{label}.mesh.txt")))?;
            let mut buf = Vec::new();
            write_fields(std::slice::from_ref(f), &mut buf)?;
            write_file_atomic(&dir.join(&format!("{label}.field.txt")), &buf)
        };
        write_field("donor", &report.donor)?;
        for t in &report.targets {
            write_field(&t.label, &t.field)?;
            info!("{}: {} elements, sup norm {:.6}", t.label, t.n_elements, t.inf_norm);
        }
        write_file_atomic(&dir.join("summary.txt"), report.to_text().as_bytes())?;
        man.stage("write");
        man.output(&dir.path);
        man.write_to(&dir.join(RUN_MANIFEST))
    })
}

pub fn project(g: &Globals, store: &Path, target_mesh: &Path, out_dir: &Path) -> CliResult<()> {
    require_exists(store)?;
    require_exists(target_mesh)?;
    let dir = OutDir::claim(out_dir, g.force)?;
    in_out_dir(&dir, || {
        let mut man = RunManifest::new("project");
        man.input(store);
        man.input(target_mesh);
        let series = read_store(store)?;
        let target = Arc::new(read_mesh_file(target_mesh)?);
        man.stage("read");
        let (projected, residuals) = series.project_onto(&target).map_err(|e| match e.root() {
            amrdmd::Error::Coverage { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Core(e),
        })?;
        man.stage("project");
        let mut csv = String::from("index,time,residual\n");
        for (s, r) in projected.snapshots.iter().zip(&residuals) {
            info!("snapshot {} (t = {}): Galerkin residual {r:.3e}", s.index, s.time);
            csv.push_str(&format!("{},{},{r:.16e}\n", s.index, s.time));
        }
        write_store(&projected, &dir.path)?;
        write_file_atomic(&dir.join("projection.csv"), csv.as_bytes())?;
        man.stage("write");
        man.output(&dir.path);
        man.write_to(&dir.join(RUN_MANIFEST))
    })
}

fn parse_window(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Usage(format!("window `{s}` is not `first:last`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a < b) {
        return Err(CliError::Usage(format!("window `{s}` must have first < last")));
    }
    Ok((a, b))
}

pub fn dmd_fit(g: &Globals, a: &FitArgs) -> CliResult<()> {
    require_exists(&a.store)?;
    check_file_target(&a.out, g.force)?;
    let mut man = RunManifest::new("dmd fit");
    man.input(&a.store);
    let series = read_store(&a.store)?;
    require_uniform(&series, &a.store)?;
    let (first, last) = match &a.window {
        Some(w) => {
            let (t0, t1) = parse_window(w)?;
            (position(&series, t0, &a.store)?, position(&series, t1, &a.store)?)
        }
        None => (0, series.len().saturating_sub(1)),
    };
    let y = series.snapshot_matrix(&a.field, first, last)?;
    let rank = match (a.rank, a.tau) {
        (Some(r), None) => RankSpec::Fixed(r),
        (None, Some(t)) => RankSpec::Threshold(t),
        _ => return Err(CliError::Usage("give exactly one of --rank and --tau".into())),
    };
    let svd = match a.svd {
        SvdChoice::Exact => SvdMethod::Exact,
        SvdChoice::Randomized => {
            let seed = g.seed.unwrap_or(0);
            man.seed("randomized-svd", seed);
            SvdMethod::Randomized {
                seed,
                oversample: a.oversample,
                power_iters: a.power_iters,
            }
        }
    };
    let amplitudes = match a.amplitudes {
        AmplitudeChoice::First => AmplitudeMode::FirstSnapshot,
        AmplitudeChoice::All => AmplitudeMode::AllSnapshots,
    };
    man.stage("read");
    let model = fit(&y, &FitOptions { rank, svd, amplitudes })?;
    man.stage("fit");
    let max_mod = model.lambda.iter().map(|l| l.norm()).fold(0.0, f64::max);
    info!(
        "field {}: {} snapshots from t = {}, rank {}, max |λ| {max_mod:.6}",
        a.field,
        y.m() + 1,
        y.t0,
        model.rank()
    );
    if model.aliased().iter().any(|&x| x) {
        warn!("some eigenvalues sit on the negative real axis; their frequencies alias");
    }
    let mut buf = Vec::new();
    write_model(&model, &mut buf)?;
    write_file_atomic(&a.out, &buf)?;
    man.stage("write");
    man.output(&a.out);
    man.write_to(&sidecar(&a.out))
}

pub fn dmd_predict(g: &Globals, a: &PredictArgs) -> CliResult<()> {
    require_exists(&a.model)?;
    require_exists(&a.mesh)?;
    let model_path = a.model.display().to_string();
    let model = read_model(BufReader::new(File::open(&a.model).map_err(amrdmd::Error::from)?), &model_path)?;
    let mesh = Arc::new(read_mesh_file(&a.mesh)?);
    if mesh.n_nodes() != model.n() {
        return Err(CliError::Usage(format!(
            "model has {} nodal values but the mesh has {} nodes",
            model.n(),
            mesh.n_nodes()
        )));
    }
    let times: Vec<f64> = match (&a.times, a.until) {
        (Some(t), None) => t.clone(),
        (None, Some(until)) => {
            let span = (until - model.t0) / model.dt_o;
            if !(span >= -TIME_TOL) {
                return Err(CliError::Usage(format!("--until {until} precedes the model start {}", model.t0)));
            }
            let k = (span + TIME_TOL).floor() as usize;
            (0..=k).map(|j| model.t0 + j as f64 * model.dt_o).collect()
        }
        _ => return Err(CliError::Usage("give exactly one of --times and --until".into())),
    };
    if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
        return Err(CliError::Usage("evaluation times must be finite and nonempty".into()));
    }
    let dir = OutDir::claim(&a.out, g.force)?;
    in_out_dir(&dir, || {
        let mut man = RunManifest::new("dmd predict");
        man.input(&a.model);
        man.input(&a.mesh);
        let mut worst_imag: f64 = 0.0;
        let snaps = times
            .iter()
            .enumerate()
            .map(|(k, &t)| {
                let ev = model.evaluate(t);
                worst_imag = worst_imag.max(ev.imag_norm);
                let f = FeField::new(mesh.clone(), ev.values, model.field_name.clone())?;
                Snapshot::new(k, t, vec![f])
            })
            .collect::<amrdmd::Result<Vec<_>>>()?;
        let series = SnapshotSeries::new(snaps)?;
        info!("{} times evaluated, largest discarded imaginary norm {worst_imag:.3e}", times.len());
        man.stage("evaluate");
        write_store(&series, &dir.path)?;
        man.stage("write");
        man.output(&dir.path);
        man.write_to(&dir.join(RUN_MANIFEST))
    })
}

pub fn report_errors(g: &Globals, a: &ErrorsArgs) -> CliResult<()> {
    require_exists(&a.truth)?;
    require_exists(&a.approx)?;
    check_file_target(&a.out, g.force)?;
    let mut man = RunManifest::new("report errors");
    man.input(&a.truth);
    man.input(&a.approx);
    let truth = read_store(&a.truth)?;
    let approx = read_store(&a.approx)?;
    require_uniform(&truth, &a.truth)?;
    require_uniform(&approx, &a.approx)?;
    let column = |s: &Snapshot, what: &Path| -> CliResult<Vec<f64>> {
        s.field(&a.field)
            .map(|f| f.values.clone())
            .ok_or_else(|| CliError::Usage(format!("{}: field `{}` missing at t = {}", what.display(), a.field, s.time)))
    };
    let mut tcols = Vec::with_capacity(approx.len());
    let mut acols = Vec::with_capacity(approx.len());
    for s in &approx.snapshots {
        let k = position(&truth, s.time, &a.truth)?;
        tcols.push(column(&truth.snapshots[k], &a.truth)?);
        acols.push(column(s, &a.approx)?);
    }
    let times = approx.times();
    let split = match a.split_time {
        Some(ts) => times.iter().filter(|&&t| t <= ts + TIME_TOL * ts.abs().max(1.0)).count(),
        None => times.len(),
    };
    let report = errors(&DenseMatrix::from_columns(&tcols)?, &DenseMatrix::from_columns(&acols)?, split)?;
    info!("field {}: eta_F {:.3e}", a.field, report.eta_f);
    write_file_atomic(&a.out, report.to_csv(&times)?.as_bytes())?;
    man.stage("report");
    man.output(&a.out);
    man.write_to(&sidecar(&a.out))
}

pub fn report_qoi(g: &Globals, a: &QoiArgs) -> CliResult<()> {
    require_exists(&a.store)?;
    check_file_target(&a.out, g.force)?;
    let mut man = RunManifest::new("report qoi");
    man.input(&a.store);
    let series = read_store(&a.store)?;
    let q = match a.kind {
        QoiKind::Population => series.population()?.normalized()?,
        kind => {
            let name = a.field.as_deref().ok_or_else(|| CliError::Usage("--field is required for this QoI".into()))?;
            let theta = a.threshold.ok_or_else(|| CliError::Usage("--threshold is required for this QoI".into()))?;
            let mut values = Vec::with_capacity(series.len());
            for s in &series.snapshots {
                let f = s
                    .field(name)
                    .ok_or_else(|| CliError::Usage(format!("field `{name}` missing at t = {}", s.time)))?;
                let v = match kind {
                    QoiKind::Front => front_position(f, theta, a.axis)?,
                    QoiKind::Center => {
                        let c = region_center_of_mass(f, theta)
                            .map_err(|e| CliError::Runtime(format!("t = {}: {e}", s.time)))?;
                        *c.get(a.axis)
                            .ok_or_else(|| CliError::Usage(format!("axis {} out of range", a.axis)))?
                    }
                    _ => region_measure(f, theta),
                };
                values.push(v);
            }
            let label = format!("{kind:?}").to_lowercase();
            QoiSeries::new(label, series.times(), values)?
        }
    };
    write_file_atomic(&a.out, q.to_csv().as_bytes())?;
    man.stage("report");
    man.output(&a.out);
    man.write_to(&sidecar(&a.out))
}
