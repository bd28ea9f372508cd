//! Fraction of instances solved within `t`, per configuration.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::record::RunRecord;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub config: String,
    pub time_s: f64,
    pub fraction: f64,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ProfileError {
    #[error("no run records to profile")]
    Empty,
    #[error("time grid must be nonempty, positive and ascending")]
    BadGrid,
}

/// `per_decade` log-spaced points from `lo` up to and including `hi`.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo && per_decade > 0);
    let steps = ((hi / lo).log10() * per_decade as f64).ceil() as usize;
    let mut grid: Vec<f64> = (0..steps).map(|i| lo * 10f64.powf(i as f64 / per_decade as f64)).collect();
    grid.retain(|&t| t < hi * (1.0 - 1e-9));
    grid.push(hi);
    grid
}

/// Configurations appear in the order of their first record.
pub fn emit_profile(records: &[RunRecord], grid: &[f64]) -> Result<Vec<ProfilePoint>, ProfileError> {
    if records.is_empty() {
        return Err(ProfileError::Empty);
    }
    if grid.is_empty() || grid[0] <= 0.0 || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(ProfileError::BadGrid);
    }
    let mut configs: Vec<String> = Vec::new();
    for r in records {
        let label = r.config_label();
        if !configs.contains(&label) {
            configs.push(label);
        }
    }
    let mut out = Vec::with_capacity(configs.len() * grid.len());
    for config in configs {
        let mine: Vec<&RunRecord> = records.iter().filter(|r| r.config_label() == config).collect();
        for &t in grid {
            let solved = mine.iter().filter(|r| r.status.is_solved() && r.time_s() <= t).count();
            out.push(ProfilePoint { config: config.clone(), time_s: t, fraction: solved as f64 / mine.len() as f64 });
        }
    }
    Ok(out)
}

/// Fraction solved at the last grid point of `config`.
pub fn final_fraction(points: &[ProfilePoint], config: &str) -> Option<f64> {
    points.iter().rev().find(|p| p.config == config).map(|p| p.fraction)
}

pub fn write_profile_csv<W: Write>(out: W, points: &[ProfilePoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}
