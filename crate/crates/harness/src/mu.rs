//! Start-up determination of the sign convention, cached per output directory.

use std::path::Path;

use gdnls_core::evolution::determine_mu_star;
use gdnls_core::{make_grid, Complex64, WaveParams};
use serde::{Deserialize, Serialize};

use crate::error::HarnessResult;
use crate::output::MuRecord;

pub const CACHE_FILE: &str = "mu_star.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Cached {
    re: f64,
    im: f64,
    residuals: Vec<f64>,
    best_residual: f64,
    runner_up: f64,
}

/// Residual probe on the stationary wave `omega = 1, c = 0, alpha = 1`.
pub fn determine(half_length: f64, points: usize) -> HarnessResult<MuRecord> {
    let grid = make_grid(half_length, points)?;
    let wave = WaveParams::generic(1.0, 0.0, 1.0)?;
    let d = determine_mu_star(&wave, &grid)?;
    Ok(MuRecord {
        re: d.mu_star.re,
        im: d.mu_star.im,
        residuals: d.residuals.iter().map(|r| r.1).collect(),
        best_residual: d.best_residual,
        runner_up: d.runner_up,
        source: format!("computed (L = {half_length}, N = {points})"),
    })
}

/// Reads `mu_star.json` from `dir`, or runs the probe and writes it there.
pub fn cached(dir: &Path) -> HarnessResult<MuRecord> {
    let path = dir.join(CACHE_FILE);
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(c) = serde_json::from_str::<Cached>(&text) {
            return Ok(MuRecord {
                re: c.re,
                im: c.im,
                residuals: c.residuals,
                best_residual: c.best_residual,
                runner_up: c.runner_up,
                source: format!("cached in {CACHE_FILE}"),
            });
        }
    }
    let record = determine(40.0, 1024)?;
    std::fs::create_dir_all(dir)?;
    let cached = Cached {
        re: record.re,
        im: record.im,
        residuals: record.residuals.clone(),
        best_residual: record.best_residual,
        runner_up: record.runner_up,
    };
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&cached).expect("serialises") + "\n",
    )?;
    Ok(record)
}

impl MuRecord {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}
