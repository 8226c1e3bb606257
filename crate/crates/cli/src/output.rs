//! Output locations, failure markers and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::CliError;

pub const FAILED_MARKER: &str = ".failed";
pub const RUN_MANIFEST: &str = "run.txt";

/// A directory that receives a store. Creating it claims the path; if the
/// command then fails, a `.failed` marker records why.
pub struct OutDir {
    pub path: PathBuf,
}

fn looks_replaceable(dir: &Path) -> bool {
    let Ok(mut entries) = fs::read_dir(dir) else { return false };
    let empty = entries.next().is_none();
    empty || [amrdmd::io::MANIFEST, FAILED_MARKER, RUN_MANIFEST].iter().any(|f| dir.join(f).exists())
}

impl OutDir {
    pub fn claim(path: &Path, force: bool) -> Result<Self, CliError> {
        if path.exists() {
            if !force {
                return Err(CliError::Safety(format!("{} already exists; pass --force to replace it", path.display())));
            }
            // only ever remove something this tool could have written
            if !path.is_dir() || !looks_replaceable(path) {
                return Err(CliError::Safety(format!(
                    "refusing to replace {}: it is not an output directory of this tool",
                    path.display()
                )));
            }
            fs::remove_dir_all(path).map_err(|e| CliError::Runtime(format!("cannot remove {}: {e}", path.display())))?;
        }
        fs::create_dir_all(path).map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
        Ok(OutDir { path: path.to_path_buf() })
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn mark_failed(&self, err: &CliError) {
        let _ = fs::write(self.path.join(FAILED_MARKER), format!("{err}\n"));
    }
}

/// Refuses to overwrite an existing file unless forced.
pub fn check_file_target(path: &Path, force: bool) -> Result<(), CliError> {
    if path.is_dir() {
        return Err(CliError::Safety(format!("{} is a directory", path.display())));
    }
    if path.exists() && !force {
        return Err(CliError::Safety(format!("{} already exists; pass --force to replace it", path.display())));
    }
    Ok(())
}

/// Writes through a sibling temporary so a failed run never leaves a
/// truncated artifact behind.
pub fn write_file_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents)
        .and_then(|_| fs::rename(&tmp, path))
        .map_err(|e| {
            let _ = fs::remove_file(&tmp);
            CliError::Runtime(format!("cannot write {}: {e}", path.display()))
        })
}

/// Provenance for one invocation: written last, so every file it names
/// already exists. Timings are wall-clock and therefore the only
/// non-reproducible bytes a run produces.
pub struct RunManifest {
    command: String,
    args: Vec<String>,
    inputs: Vec<String>,
    outputs: Vec<String>,
    seeds: Vec<(String, u64)>,
    config: Vec<(String, String)>,
    timings: Vec<(String, f64)>,
    stage_start: Instant,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            seeds: Vec::new(),
            config: Vec::new(),
            timings: Vec::new(),
            stage_start: Instant::now(),
        }
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.display().to_string());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.display().to_string());
    }

    pub fn seed(&mut self, stage: &str, seed: u64) {
        self.seeds.push((stage.to_string(), seed));
    }

    pub fn config(&mut self, entries: &[(String, String)]) {
        self.config.extend_from_slice(entries);
    }

    /// Closes the current stage and starts the next one.
    pub fn stage(&mut self, name: &str) {
        self.timings.push((name.to_string(), self.stage_start.elapsed().as_secs_f64()));
        self.stage_start = Instant::now();
    }

    /// FNV-1a over the command line: equal invocations share an id.
    fn run_id(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.args.join("\0").bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "run_id {}", self.run_id());
        let _ = writeln!(s, "tool amrdmd {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "command {}", self.command);
        let _ = writeln!(s, "args {}", self.args.join(" "));
        for p in &self.inputs {
            let _ = writeln!(s, "input {p}");
        }
        for p in &self.outputs {
            let _ = writeln!(s, "output {p}");
        }
        for (stage, seed) in &self.seeds {
            let _ = writeln!(s, "seed {stage} {seed}");
        }
        for (k, v) in &self.config {
            let _ = writeln!(s, "config {k} = {v}");
        }
        for (stage, secs) in &self.timings {
            let _ = writeln!(s, "seconds {stage} {secs:.3}");
        }
        s
    }

    pub fn write_to(&self, path: &Path) -> Result<(), CliError> {
        write_file_atomic(path, self.render().as_bytes())
    }
}

/// `<file>.run.txt` next to a single-file artifact.
pub fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".run.txt");
    PathBuf::from(s)
}
