//! Per-record time series and their CSV / JSON-lines serialization.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::harness::config::OutputFormat;
use crate::{Error, Result};

/// Bits of [`DiagnosticsRecord::flags`].
pub mod flags {
    /// The run stopped with a detected singularity at this record.
    pub const BLOWUP: u32 = 1;
    /// `F'' >= D F^2 - tol` failed.
    pub const F_INEQ: u32 = 1 << 1;
    /// The log-bound chain failed by more than 1e-8.
    pub const LOG_BOUND: u32 = 1 << 2;
    /// `r(t) > B/2`.
    pub const R_ABOVE_HALF_B: u32 = 1 << 3;
    /// `max|u| > max|u0| e^{-7t} (1 + 1e-6)`.
    pub const DECAY: u32 = 1 << 4;
    /// `max v > -2`.
    pub const V_BOUND: u32 = 1 << 5;
    /// `u` was clipped at zero on the step that produced this record.
    pub const CLIPPED: u32 = 1 << 6;
}

pub const COLUMNS: [&str; 14] = [
    "t",
    "dt",
    "int_u2_phi",
    "int_psiz_phi",
    "int_logu_phi",
    "F",
    "dF",
    "ddF",
    "E",
    "r",
    "h2_u",
    "min_u",
    "max_u",
    "flags",
];

/// One output row. Quantities that do not apply to a scenario are NaN.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub int_u2_phi: f64,
    pub int_psiz_phi: f64,
    pub int_logu_phi: f64,
    #[serde(rename = "F")]
    pub f: f64,
    #[serde(rename = "dF")]
    pub df: f64,
    #[serde(rename = "ddF")]
    pub ddf: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub r: f64,
    pub h2_u: f64,
    pub min_u: f64,
    pub max_u: f64,
    pub flags: u32,
}

impl DiagnosticsRecord {
    fn numbers(&self) -> [f64; 13] {
        [
            self.t,
            self.dt,
            self.int_u2_phi,
            self.int_psiz_phi,
            self.int_logu_phi,
            self.f,
            self.df,
            self.ddf,
            self.e,
            self.r,
            self.h2_u,
            self.min_u,
            self.max_u,
        ]
    }

    fn from_numbers(v: [f64; 13], flags: u32) -> Self {
        DiagnosticsRecord {
            t: v[0],
            dt: v[1],
            int_u2_phi: v[2],
            int_psiz_phi: v[3],
            int_logu_phi: v[4],
            f: v[5],
            df: v[6],
            ddf: v[7],
            e: v[8],
            r: v[9],
            h2_u: v[10],
            min_u: v[11],
            max_u: v[12],
            flags,
        }
    }

    pub fn zero() -> Self {
        Self::from_numbers([0.0; 13], 0)
    }
}

/// 17 significant digits; enough to reproduce every double exactly.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

fn parse_number(s: &str) -> Result<f64> {
    match s {
        "NaN" => Ok(f64::NAN),
        _ => s.parse().map_err(|_| Error::Config(format!("bad number '{s}'"))),
    }
}

pub fn write_csv(records: &[DiagnosticsRecord], mut w: impl Write) -> Result<()> {
    writeln!(w, "{}", COLUMNS.join(","))?;
    for r in records {
        let mut fields: Vec<String> = r.numbers().iter().map(|&x| format_number(x)).collect();
        fields.push(r.flags.to_string());
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn write_jsonl(records: &[DiagnosticsRecord], mut w: impl Write) -> Result<()> {
    for r in records {
        let mut m = Map::new();
        for (k, x) in COLUMNS.iter().zip(r.numbers()) {
            let v = if x.is_finite() {
                Value::Number(serde_json::Number::from_f64(x).expect("finite"))
            } else {
                Value::Null
            };
            m.insert((*k).to_string(), v);
        }
        m.insert("flags".into(), Value::from(r.flags));
        writeln!(w, "{}", Value::Object(m))?;
    }
    Ok(())
}

/// Writes `records` to `path` in the given format.
pub fn emit(records: &[DiagnosticsRecord], path: &Path, format: OutputFormat) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(records, file),
        OutputFormat::Jsonl => write_jsonl(records, file),
    }
}

pub fn read_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header != COLUMNS.join(",") {
        return Err(Error::Config(format!("unexpected header '{header}'")));
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != COLUMNS.len() {
            return Err(Error::Config(format!("expected {} fields, found {}", COLUMNS.len(), parts.len())));
        }
        let mut v = [0.0; 13];
        for (slot, p) in v.iter_mut().zip(&parts) {
            *slot = parse_number(p)?;
        }
        let flags = parts[13].parse().map_err(|_| Error::Config(format!("bad flags '{}'", parts[13])))?;
        out.push(DiagnosticsRecord::from_numbers(v, flags));
    }
    Ok(out)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut out = Vec::new();
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Value = serde_json::from_str(&line).map_err(|e| Error::Config(e.to_string()))?;
        let mut nums = [0.0; 13];
        for (slot, k) in nums.iter_mut().zip(COLUMNS) {
            *slot = v.get(k).and_then(Value::as_f64).unwrap_or(f64::NAN);
        }
        let flags = v.get("flags").and_then(Value::as_u64).unwrap_or(0) as u32;
        out.push(DiagnosticsRecord::from_numbers(nums, flags));
    }
    Ok(out)
}

/// `run.csv` becomes `run.summary.json`.
pub fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

pub fn write_summary(summary: &impl Serialize, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::Config(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Tag embedded in summaries: `BLOWUPLAB_BUILD_TAG` at compile time, else
/// the package version.
pub fn build_tag() -> &'static str {
    option_env!("BLOWUPLAB_BUILD_TAG").unwrap_or(concat!("blowuplab-", env!("CARGO_PKG_VERSION")))
}
