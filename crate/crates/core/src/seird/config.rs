//! `key = value` run configuration.
//!
//! ```text
//! scenario = seird          # or `synthetic`
//! t_end = 44
//! remesh_every = 4          # `never` disables adaptation
//! right_boundary = dirichlet
//! ```
//!
//! Every key must belong to the chosen scenario; unknown or repeated keys
//! are errors. Omitted keys keep their defaults (the paper preset for
//! `seird`).

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;

use super::{AmrPolicy, Boundary, SeirdParams, SynthSpec};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Scenario {
    Seird { params: SeirdParams, policy: AmrPolicy },
    Synthetic(SynthSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Every `key = value` pair as written, for manifests.
    pub entries: Vec<(String, String)>,
}

struct Entries {
    source: String,
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn error(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            source_name: self.source.clone(),
            line,
            message: message.into(),
        }
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()> {
        if let Some((line, raw)) = self.map.remove(key) {
            *slot = raw
                .parse()
                .map_err(|_| self.error(line, format!("invalid value `{raw}` for `{key}`")))?;
        }
        Ok(())
    }

    fn take_with<T>(&mut self, key: &str, slot: &mut T, f: impl Fn(&str) -> Option<T>) -> Result<()> {
        if let Some((line, raw)) = self.map.remove(key) {
            *slot = f(&raw).ok_or_else(|| self.error(line, format!("invalid value `{raw}` for `{key}`")))?;
        }
        Ok(())
    }

    fn reject_leftovers(&self, scenario: &str) -> Result<()> {
        match self.map.iter().min_by_key(|(_, (line, _))| *line) {
            None => Ok(()),
            Some((key, (line, _))) => Err(self.error(*line, format!("unknown key `{key}` for scenario `{scenario}`"))),
        }
    }
}

/// `re`, or `modulus@angle` for a point in polar form.
fn parse_eigenvalue(tok: &str) -> Option<Complex64> {
    match tok.split_once('@') {
        Some((m, a)) => Some(Complex64::from_polar(m.trim().parse().ok()?, a.trim().parse().ok()?)),
        None => Some(Complex64::new(tok.trim().parse().ok()?, 0.0)),
    }
}

pub fn parse_config_str(text: &str, source_name: &str) -> Result<RunConfig> {
    let mut entries = Entries {
        source: source_name.to_string(),
        map: BTreeMap::new(),
    };
    let mut ordered = Vec::new();
    let mut last_line = 0;
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        last_line = line;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| entries.error(line, format!("expected `key = value`, found `{content}`")))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if key.is_empty() || value.is_empty() {
            return Err(entries.error(line, "empty key or value"));
        }
        if let Some((first, _)) = entries.map.get(&key) {
            return Err(entries.error(line, format!("`{key}` already set on line {first}")));
        }
        ordered.push((key.clone(), value.clone()));
        entries.map.insert(key, (line, value));
    }
    let (line, scenario) = entries
        .map
        .remove("scenario")
        .ok_or_else(|| entries.error(last_line.max(1), "missing required key `scenario`"))?;

    let scenario = match scenario.as_str() {
        "seird" => {
            let mut p = SeirdParams::default();
            let mut a = AmrPolicy::default();
            entries.take("beta_i", &mut p.beta_i)?;
            entries.take("beta_e", &mut p.beta_e)?;
            entries.take("alpha", &mut p.alpha)?;
            entries.take("gamma_e", &mut p.gamma_e)?;
            entries.take("gamma_i", &mut p.gamma_i)?;
            entries.take("delta", &mut p.delta)?;
            entries.take("nu_s", &mut p.nu_s)?;
            entries.take("nu_e", &mut p.nu_e)?;
            entries.take("nu_i", &mut p.nu_i)?;
            entries.take("nu_r", &mut p.nu_r)?;
            entries.take("a_e", &mut p.a_e)?;
            entries.take("dt", &mut p.dt)?;
            entries.take("dt_o", &mut p.dt_o)?;
            entries.take("t_end", &mut p.t_end)?;
            entries.take("picard_tol", &mut p.picard_tol)?;
            entries.take("picard_max_iter", &mut p.picard_max_iter)?;
            entries.take_with("right_boundary", &mut p.right_boundary, |v| match v {
                "dirichlet" => Some(Boundary::Dirichlet),
                "neumann" => Some(Boundary::Neumann),
                _ => None,
            })?;
            entries.take("initial_elements", &mut a.initial_elements)?;
            entries.take("initial_uniform_levels", &mut a.initial_uniform_levels)?;
            entries.take_with("remesh_every", &mut a.remesh_every, |v| match v {
                "never" => Some(None),
                _ => v.parse::<usize>().ok().filter(|k| *k > 0).map(Some),
            })?;
            entries.take("refine_fraction", &mut a.refine_fraction)?;
            entries.take("coarsen_fraction", &mut a.coarsen_fraction)?;
            entries.take("max_level", &mut a.max_level)?;
            entries.reject_leftovers("seird")?;
            p.validate().map_err(|e| entries.error(line, e.to_string()))?;
            a.validate().map_err(|e| entries.error(line, e.to_string()))?;
            Scenario::Seird { params: p, policy: a }
        }
        "synthetic" => {
            let mut s = SynthSpec::default();
            entries.take_with("eigenvalues", &mut s.eigenvalues, |v| {
                v.split(',').map(parse_eigenvalue).collect::<Option<Vec<_>>>()
            })?;
            entries.take("n", &mut s.n)?;
            entries.take("m", &mut s.m)?;
            entries.take("dt_o", &mut s.dt_o)?;
            entries.take("seed", &mut s.seed)?;
            entries.reject_leftovers("synthetic")?;
            s.validate().map_err(|e| entries.error(line, e.to_string()))?;
            Scenario::Synthetic(s)
        }
        other => return Err(entries.error(line, format!("unknown scenario `{other}`"))),
    };
    Ok(RunConfig {
        scenario,
        entries: ordered,
    })
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text, &path.display().to_string())
}
