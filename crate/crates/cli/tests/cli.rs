use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn amrdmd(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amrdmd"))
        .current_dir(dir)
        .arg("--quiet")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(o: Output) -> Output {
    assert_eq!(code(&o), 0, "stderr: {}", stderr(&o));
    o
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// `(time, eta, regime)` rows and the `eta_F` footer of a report.
fn read_report(path: &Path) -> (Vec<(f64, f64, String)>, f64) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("time,eta,regime"));
    let mut rows = Vec::new();
    let mut eta_f = f64::NAN;
    for line in lines {
        let parts: Vec<&str> = line.split(',').collect();
        assert_eq!(parts.len(), 3, "{line}");
        if parts[0] == "eta_F" {
            eta_f = parts[1].parse().unwrap();
        } else {
            rows.push((parts[0].parse().unwrap(), parts[1].parse().unwrap(), parts[2].to_string()));
        }
    }
    (rows, eta_f)
}

fn field_node_counts(store: &Path) -> Vec<usize> {
    let manifest = fs::read_to_string(store.join("manifest.txt")).unwrap();
    manifest
        .lines()
        .map(|l| {
            let field = l.split_whitespace().nth(3).unwrap();
            let text = fs::read_to_string(store.join(field)).unwrap();
            text.split_whitespace().next().unwrap().parse().unwrap()
        })
        .collect()
}

#[test]
fn seird_preset_pipeline_end_to_end() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "preset.cfg", "# paper preset\nscenario = seird\n");
    ok(amrdmd(d, &["simulate", "preset.cfg", "raw"]));
    let manifest = fs::read_to_string(d.join("raw/manifest.txt")).unwrap();
    assert_eq!(manifest.lines().count(), 177);
    assert!(manifest.lines().last().unwrap().starts_with("176 44 "));
    assert!(d.join("raw/run.txt").exists());
    let counts = field_node_counts(&d.join("raw"));
    assert!(counts.iter().any(|&c| c != counts[0]), "the raw store should be adaptive");

    // the raw store cannot feed DMD directly
    let o = amrdmd(d, &["dmd", "fit", "--store", "raw", "--field", "s", "--rank", "15", "--out", "m.txt"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("project first"));

    ok(amrdmd(d, &["project", "raw", "raw/reference.mesh.txt", "proj"]));
    let counts = field_node_counts(&d.join("proj"));
    assert!(counts.iter().all(|&c| c == 501));

    ok(amrdmd(d, &["report", "qoi", "proj", "--out", "pop.csv"]));
    let pop = fs::read_to_string(d.join("pop.csv")).unwrap();
    for line in pop.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((0.999..=1.001).contains(&v));
    }

    let fit_args = ["dmd", "fit", "--store", "proj", "--field", "i", "--window", "3:30", "--rank", "15", "--out", "i.model"];
    ok(amrdmd(d, &fit_args));
    ok(amrdmd(d, &["dmd", "predict", "--model", "i.model", "--mesh", "raw/reference.mesh.txt", "--until", "44", "--out", "pred"]));
    ok(amrdmd(d, &["report", "errors", "proj", "pred", "--field", "i", "--split-time", "30", "--out", "i.csv"]));
    let (rows, eta_f) = read_report(&d.join("i.csv"));
    assert_eq!(rows.len(), 165);
    assert_eq!(rows[0].0, 3.0);
    assert_eq!(rows.last().unwrap().0, 44.0);
    assert!(rows.iter().filter(|r| r.2 == "reconstruction").all(|r| r.0 <= 30.0));
    assert_eq!(rows.iter().filter(|r| r.2 == "prediction").count(), 56);
    assert!(eta_f > 0.0 && eta_f < 1.0);

    // refitting into the same file needs --force and reproduces it exactly
    let first = fs::read(d.join("i.model")).unwrap();
    assert_eq!(code(&amrdmd(d, &fit_args)), 4);
    let mut forced = vec!["--force"];
    forced.extend_from_slice(&fit_args);
    ok(amrdmd(d, &forced));
    assert_eq!(fs::read(d.join("i.model")).unwrap(), first);
}

#[test]
fn config_errors_exit_2_with_line_numbers_and_leave_no_output() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "empty.cfg", "");
    let o = amrdmd(d, &["simulate", "empty.cfg", "out"]);
    assert_eq!(code(&o), 2);
    assert!(!d.join("out").exists());

    write(d, "bad.cfg", "scenario = seird\n\nt_end = 44\nbogus_key = 1\n");
    let o = amrdmd(d, &["simulate", "bad.cfg", "out"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
    assert!(!d.join("out").exists());

    let o = amrdmd(d, &["simulate", "missing.cfg", "out"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn output_collisions_exit_4_and_force_only_replaces_tool_output() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "syn.cfg", "scenario = synthetic\nn = 20\nm = 10\n");
    ok(amrdmd(d, &["simulate", "syn.cfg", "store"]));
    assert_eq!(code(&amrdmd(d, &["simulate", "syn.cfg", "store"])), 4);
    ok(amrdmd(d, &["--force", "simulate", "syn.cfg", "store"]));

    fs::create_dir(d.join("precious")).unwrap();
    write(&d.join("precious"), "notes.txt", "keep me");
    assert_eq!(code(&amrdmd(d, &["--force", "simulate", "syn.cfg", "precious"])), 4);
    assert_eq!(fs::read_to_string(d.join("precious/notes.txt")).unwrap(), "keep me");
}

#[test]
fn dmd_argument_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "syn.cfg", "scenario = synthetic\nn = 30\nm = 12\n");
    ok(amrdmd(d, &["simulate", "syn.cfg", "store"]));

    let both = amrdmd(d, &["dmd", "fit", "--store", "store", "--field", "u", "--rank", "3", "--tau", "0.1", "--out", "m"]);
    assert_eq!(code(&both), 2);
    let neither = amrdmd(d, &["dmd", "fit", "--store", "store", "--field", "u", "--out", "m"]);
    assert_eq!(code(&neither), 2);
    let too_big = amrdmd(d, &["dmd", "fit", "--store", "store", "--field", "u", "--rank", "13", "--out", "m"]);
    assert_eq!(code(&too_big), 2);
    let bad_tau = amrdmd(d, &["dmd", "fit", "--store", "store", "--field", "u", "--tau", "1.5", "--out", "m"]);
    assert_eq!(code(&bad_tau), 2);
    let no_time = amrdmd(d, &["dmd", "fit", "--store", "store", "--field", "u", "--window", "0.5:4", "--rank", "2", "--out", "m"]);
    assert_eq!(code(&no_time), 2);
    let thresholded_sketch = amrdmd(d, &["dmd", "fit", "--store", "store", "--field", "u", "--tau", "0.01", "--svd", "randomized", "--out", "m"]);
    assert_eq!(code(&thresholded_sketch), 2);
    assert!(!d.join("m").exists());
}

#[test]
fn synthetic_round_trip_recovers_the_data() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "syn.cfg", "scenario = synthetic\n");
    ok(amrdmd(d, &["simulate", "syn.cfg", "store"]));
    ok(amrdmd(d, &["dmd", "fit", "--store", "store", "--field", "u", "--window", "0:30", "--tau", "1e-12", "--out", "m"]));
    let model = fs::read_to_string(d.join("m")).unwrap();
    assert!(model.contains("\nr 4\n"), "{model}");
    ok(amrdmd(d, &["dmd", "predict", "--model", "m", "--mesh", "store/reference.mesh.txt", "--until", "40", "--out", "pred"]));
    ok(amrdmd(d, &["report", "errors", "store", "pred", "--field", "u", "--split-time", "30", "--out", "e.csv"]));
    let (rows, eta_f) = read_report(&d.join("e.csv"));
    assert_eq!(rows.len(), 41);
    assert!(rows.iter().all(|r| r.1 < 1e-8));
    assert!(eta_f < 1e-8);

    // identical inputs give an identical error report
    ok(amrdmd(d, &["report", "errors", "store", "store", "--field", "u", "--out", "self.csv"]));
    let (_, self_eta) = read_report(&d.join("self.csv"));
    assert_eq!(self_eta, 0.0);
}

#[test]
fn randomized_fits_follow_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "syn.cfg", "scenario = synthetic\nn = 60\nm = 30\n");
    ok(amrdmd(d, &["simulate", "syn.cfg", "store"]));
    let fit = |seed: &str, out: &str| {
        ok(amrdmd(d, &["--seed", seed, "dmd", "fit", "--store", "store", "--field", "u", "--rank", "4", "--svd", "randomized", "--out", out]));
        fs::read(d.join(out)).unwrap()
    };
    assert_eq!(fit("7", "a"), fit("7", "b"));
    let run = fs::read_to_string(d.join("a.run.txt")).unwrap();
    assert!(run.contains("seed randomized-svd 7"));

    ok(amrdmd(d, &["--seed", "3", "simulate", "syn.cfg", "other"]));
    let a = fs::read(d.join("store/snap_00001.field.txt")).unwrap();
    let b = fs::read(d.join("other/snap_00001.field.txt")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn projection_onto_own_mesh_is_identity_and_coverage_failures_are_marked() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "syn.cfg", "scenario = synthetic\nn = 25\nm = 5\n");
    ok(amrdmd(d, &["simulate", "syn.cfg", "store"]));
    ok(amrdmd(d, &["project", "store", "store/reference.mesh.txt", "same"]));
    for k in 0..=5 {
        let name = format!("snap_{k:05}.field.txt");
        let parse = |p: PathBuf| -> Vec<f64> {
            fs::read_to_string(p).unwrap().lines().skip(2).map(|l| l.trim().parse().unwrap()).collect()
        };
        let a = parse(d.join("store").join(&name));
        let b = parse(d.join("same").join(&name));
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-10 * x.abs().max(1.0)));
    }

    // a target reaching beyond the donor domain
    let wide = "1 3 2\n0.0\n1.0\n2.0\n0 1\n1 2\n";
    write(d, "wide.mesh.txt", wide);
    let o = amrdmd(d, &["project", "store", "wide.mesh.txt", "bad"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("snapshot 0"), "{}", stderr(&o));
    assert!(d.join("bad/.failed").exists());
    assert!(!d.join("bad/manifest.txt").exists());
}

#[test]
fn qoi_reports_need_their_parameters() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "syn.cfg", "scenario = synthetic\nn = 25\nm = 5\n");
    ok(amrdmd(d, &["simulate", "syn.cfg", "store"]));
    assert_eq!(code(&amrdmd(d, &["report", "qoi", "store", "--kind", "front", "--out", "f.csv"])), 2);
    ok(amrdmd(d, &["report", "qoi", "store", "--kind", "measure", "--field", "u", "--threshold=-1e9", "--out", "m.csv"]));
    let text = fs::read_to_string(d.join("m.csv")).unwrap();
    assert_eq!(text.lines().count(), 7);
    for line in text.lines().skip(1) {
        let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }
    // population needs the SEIRD compartments
    assert_eq!(code(&amrdmd(d, &["report", "qoi", "store", "--out", "p.csv"])), 2);
}

#[test]
fn indicator_demo_writes_meshes_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    ok(amrdmd(d, &["demo", "indicator", "--out", "demo"]));
    let summary = fs::read_to_string(d.join("demo/summary.txt")).unwrap();
    assert!(summary.contains("donor_elements 1672\n"));
    assert!(summary.contains("donor_nodes 857\n"));
    for f in ["donor", "structured", "jittered"] {
        assert!(d.join(format!("demo/{f}.mesh.txt")).exists());
        assert!(d.join(format!("demo/{f}.field.txt")).exists());
    }
}
