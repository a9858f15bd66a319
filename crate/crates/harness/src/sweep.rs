//! Cross-product parameter sweeps over `(omega, c, alpha, T, N)`.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{DataConfig, RunConfig};
use crate::error::{HarnessError, HarnessResult};
use crate::experiments::run_experiment;
use crate::output::{Cell, MuRecord, Table};

pub const INDEX_FILE: &str = "index.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub index: usize,
    pub config: RunConfig,
}

fn axis<T: Copy>(values: &[T], fallback: T) -> Vec<T> {
    if values.is_empty() {
        vec![fallback]
    } else {
        values.to_vec()
    }
}

/// Expands the template's sweep axes; empty axes keep the template value.
pub fn cells(template: &RunConfig) -> Vec<SweepCell> {
    let axes = &template.sweep;
    let (omega0, speed0) = match template.data {
        DataConfig::Solitary { omega, speed } => (omega, speed),
        _ => (f64::NAN, f64::NAN),
    };
    let mut out = Vec::new();
    for &omega in &axis(&axes.omega, omega0) {
        for &speed in &axis(&axes.speed, speed0) {
            for &alpha in &axis(&axes.alpha, template.equation.alpha) {
                for &duration in &axis(&axes.duration, template.time.duration) {
                    for &points in &axis(&axes.points, template.grid.points) {
                        let mut cfg = template.clone();
                        cfg.sweep = Default::default();
                        if let DataConfig::Solitary { .. } = cfg.data {
                            cfg.data = DataConfig::Solitary { omega, speed };
                        }
                        cfg.equation.alpha = alpha;
                        cfg.time.duration = duration;
                        cfg.grid.points = points;
                        out.push(SweepCell {
                            index: out.len(),
                            config: cfg,
                        });
                    }
                }
            }
        }
    }
    out
}

pub fn cell_dir(root: &Path, index: usize) -> PathBuf {
    root.join(format!("cell_{index:04}"))
}

/// Runs every cell with at most `workers` concurrent runs and writes
/// `index.csv`. Failed cells are recorded and do not stop the sweep.
pub fn sweep(
    template: &RunConfig,
    root: &Path,
    mu: &MuRecord,
    workers: usize,
) -> HarnessResult<Table> {
    let template_has_axes_for_data =
        !(template.sweep.omega.is_empty() && template.sweep.speed.is_empty());
    if template_has_axes_for_data && !matches!(template.data, DataConfig::Solitary { .. }) {
        return Err(HarnessError::config(
            "sweep",
            "omega/speed axes need solitary data",
        ));
    }
    std::fs::create_dir_all(root)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Usage(format!("worker pool: {e}")))?;
    let cells = cells(template);
    let results: Vec<_> = pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let m = cell.config.exponents().map(|e| e.m).ok();
                let run = run_experiment(&cell.config, &cell_dir(root, cell.index), mu);
                (cell, m, run)
            })
            .collect()
    });
    let mut index = Table::new(&[
        "cell",
        "omega",
        "speed",
        "alpha",
        "duration",
        "points",
        "m",
        "status",
        "checks_passed",
        "checks_total",
    ]);
    for (cell, m, run) in results {
        let manifest = match &run {
            Ok(m) => m,
            Err(f) => &f.manifest,
        };
        let (omega, speed) = match cell.config.data {
            DataConfig::Solitary { omega, speed } => (omega, speed),
            _ => (f64::NAN, f64::NAN),
        };
        let cfg = &cell.config;
        index.push(vec![
            cell.index.into(),
            omega.into(),
            speed.into(),
            cfg.equation.alpha.into(),
            cfg.time.duration.into(),
            cfg.grid.points.into(),
            m.map_or(Cell::Text("NA".into()), |m| Cell::Int(m as i64)),
            manifest.status.clone().into(),
            manifest.checks.iter().filter(|c| c.passed).count().into(),
            manifest.checks.len().into(),
        ]);
    }
    index.write(&root.join(INDEX_FILE))?;
    Ok(index)
}
