//! Flat `key = value` configuration. Unset keys take per-scenario defaults.

use std::collections::BTreeMap;
use std::f64::consts::E;
use std::path::Path;

use serde::Serialize;

use crate::harness::scenario::ScenarioName;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            _ => Err(Error::Config(format!("unknown format '{s}' (csv or jsonl)"))),
        }
    }
}

/// Raw overrides; `None` means "use the scenario default".
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Overrides {
    pub nx: Option<usize>,
    pub nz: Option<usize>,
    pub truncation: Option<f64>,
    pub height: Option<f64>,
    pub beta: Option<f64>,
    pub nu: Option<f64>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub cadence: Option<usize>,
    pub cfl: Option<f64>,
    pub cs: Option<f64>,
    pub delta: Option<f64>,
    pub u_amplitude: Option<f64>,
    pub format: Option<OutputFormat>,
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value '{v}' for key '{key}'")))
}

impl Overrides {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", n + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut o = Overrides::default();
        for (k, v) in &map {
            o.set(k, v)?;
        }
        Ok(o)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Sets one key; keys use the CLI flag spelling (`t-end` or `t_end`).
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key.replace('-', "_").as_str() {
            "nx" => self.nx = Some(parse(key, v)?),
            "nz" => self.nz = Some(parse(key, v)?),
            "L" | "l" | "truncation" => self.truncation = Some(parse(key, v)?),
            "b" | "height" => self.height = Some(parse(key, v)?),
            "beta" => self.beta = Some(parse(key, v)?),
            "nu" => self.nu = Some(parse(key, v)?),
            "dt" => self.dt = Some(parse(key, v)?),
            "t_end" => self.t_end = Some(parse(key, v)?),
            "cadence" => self.cadence = Some(parse(key, v)?),
            "cfl" => self.cfl = Some(parse(key, v)?),
            "cs" => self.cs = Some(parse(key, v)?),
            "delta" => self.delta = Some(parse(key, v)?),
            "u_amplitude" => self.u_amplitude = Some(parse(key, v)?),
            "format" => self.format = Some(v.parse()?),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// `other` wins wherever it is set.
    pub fn merged(&self, other: &Overrides) -> Overrides {
        Overrides {
            nx: other.nx.or(self.nx),
            nz: other.nz.or(self.nz),
            truncation: other.truncation.or(self.truncation),
            height: other.height.or(self.height),
            beta: other.beta.or(self.beta),
            nu: other.nu.or(self.nu),
            dt: other.dt.or(self.dt),
            t_end: other.t_end.or(self.t_end),
            cadence: other.cadence.or(self.cadence),
            cfl: other.cfl.or(self.cfl),
            cs: other.cs.or(self.cs),
            delta: other.delta.or(self.delta),
            u_amplitude: other.u_amplitude.or(self.u_amplitude),
            format: other.format.or(self.format),
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Settings {
    pub nx: usize,
    pub nz: usize,
    pub truncation: f64,
    pub height: f64,
    pub beta: f64,
    pub nu: f64,
    /// Largest allowed step; `None` leaves only the stability limit.
    pub dt: Option<f64>,
    pub t_end: f64,
    pub cadence: usize,
    pub cfl: f64,
    pub cs: f64,
    pub delta: f64,
    pub u_amplitude: f64,
    pub format: OutputFormat,
}

impl Settings {
    /// Fills every value left unset in `o` with the default of `name`.
    pub fn resolve(name: ScenarioName, o: &Overrides) -> Settings {
        use ScenarioName::*;
        let semi = name.is_semi_infinite();
        let regular = name == Regularity;
        let default_nz = if semi {
            256
        } else if regular {
            16
        } else {
            128
        };
        let default_amp = match name {
            Regularity => 0.01,
            Flipped => E * E,
            _ => E.powi(3),
        };
        let default_t_end = if regular { 2.0 } else { 20.0 };
        Settings {
            nx: o.nx.unwrap_or(if regular { 16 } else { 32 }),
            nz: o.nz.unwrap_or(default_nz),
            truncation: o.truncation.unwrap_or(20.0),
            height: o.height.unwrap_or(std::f64::consts::PI),
            beta: o.beta.unwrap_or(1.8),
            nu: o.nu.unwrap_or(0.05),
            dt: o.dt,
            t_end: o.t_end.unwrap_or(default_t_end),
            cadence: o.cadence.unwrap_or(1),
            cfl: o.cfl.unwrap_or(0.25),
            cs: o.cs.unwrap_or(1.0),
            delta: o.delta.unwrap_or(0.05),
            u_amplitude: o.u_amplitude.unwrap_or(default_amp),
            format: o.format.unwrap_or(OutputFormat::Csv),
        }
    }
}
