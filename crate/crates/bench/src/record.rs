//! One row per (instance, configuration) run.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use ctop_core::solver::Status;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Feasible,
    Infeasible,
    Timeout,
    DataError,
}

impl RunStatus {
    pub fn is_solved(self) -> bool {
        matches!(self, RunStatus::Feasible | RunStatus::Infeasible)
    }
}

impl From<Status> for RunStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Feasible => RunStatus::Feasible,
            Status::Infeasible => RunStatus::Infeasible,
            Status::Timeout => RunStatus::Timeout,
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunStatus::Feasible => "feasible",
            RunStatus::Infeasible => "infeasible",
            RunStatus::Timeout => "timeout",
            RunStatus::DataError => "data-error",
        })
    }
}

/// Column order is the CSV schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub n: usize,
    pub m: usize,
    pub density: f64,
    pub k: usize,
    pub model: String,
    pub checks: bool,
    pub domred: bool,
    pub sym: bool,
    /// `span`, `pairwise` or `off`.
    pub vi: String,
    pub status: RunStatus,
    #[serde(rename = "time_ms", serialize_with = "ser_ms", deserialize_with = "de_ms")]
    pub time_us: u64,
    pub choice_points: u64,
    pub fails: u64,
    pub fired_check: Option<String>,
}

impl RunRecord {
    /// `model/flags`, the key performance profiles group by.
    pub fn config_label(&self) -> String {
        let mut parts = Vec::new();
        if self.checks {
            parts.push("checks".to_string());
        }
        if self.domred {
            parts.push("domred".to_string());
        }
        if self.sym {
            parts.push("sym".to_string());
        }
        if self.vi != "off" {
            parts.push(format!("vi-{}", self.vi));
        }
        if parts.is_empty() {
            parts.push("plain".to_string());
        }
        format!("{}/{}", self.model, parts.join("+"))
    }

    pub fn time_s(&self) -> f64 {
        self.time_us as f64 / 1e6
    }
}

fn ser_ms<S: Serializer>(us: &u64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_ms(*us))
}

fn de_ms<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
    let text = String::deserialize(d)?;
    parse_ms(&text).map_err(serde::de::Error::custom)
}

/// Microseconds as milliseconds with exactly three decimals.
pub fn format_ms(us: u64) -> String {
    format!("{}.{:03}", us / 1000, us % 1000)
}

pub fn parse_ms(text: &str) -> Result<u64, String> {
    let bad = || format!("bad millisecond value `{text}`");
    let (whole, frac) = text.split_once('.').unwrap_or((text, ""));
    if frac.len() > 3 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let whole = u64::from_str(whole).map_err(|_| bad())?;
    let frac = if frac.is_empty() { 0 } else { u64::from_str(&format!("{frac:0<3}")).map_err(|_| bad())? };
    Ok(whole * 1000 + frac)
}

pub fn write_csv<W: Write>(out: W, records: &[RunRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> csv::Result<Vec<RunRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn to_jsonl(records: &[RunRecord]) -> String {
    records.iter().map(|r| serde_json::to_string(r).expect("records serialize") + "\n").collect()
}
