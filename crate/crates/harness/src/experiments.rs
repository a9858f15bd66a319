//! The experiment registry. Each experiment fills a table (written as
//! `series.csv`) and a list of checks (recorded in the manifest).

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use gdnls_core::diagnostics::{
    interp_check_1, interp_check_2, kato_smoothing_report, local_smoothing, loglog_slope, mass,
    small_time_continuity, InterpVariant, SmoothingReport, WavePackets,
};
use gdnls_core::evolution::{
    evolve, evolve_with_stride, integrate, NoPart, NonStiffPart, Nonlinearity,
};
use gdnls_core::picard::{
    contraction_factor, default_perturbation, dependence_probe, picard_solve, scaled_datum,
    XtNormParams,
};
use gdnls_core::profiles::{decay_profile, solitary_wave, Branch};
use gdnls_core::spectral::japanese_bracket;
use gdnls_core::{
    ClassExponents, ClassParams, Complex64, EquationSpec, Field, FrozenCoefficient, Grid,
    Trajectory, WaveParams,
};
use rayon::prelude::*;

use crate::config::{CoefficientKind, DataConfig, RunConfig, StepperName};
use crate::error::{HarnessError, HarnessResult};
use crate::output::{Check, Derived, MuRecord, RunManifest, Table, SERIES_FILE};

/// Relative self-convergence error below which an order is not measurable.
pub const SATURATION: f64 = 1e-12;

#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub table: Table,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub derived: Option<Derived>,
}

/// A finished (or failed) run with its manifest already on disk.
#[derive(Debug)]
pub struct RunFailure {
    pub manifest: Box<RunManifest>,
    pub error: HarnessError,
}

struct Setup {
    grid: Arc<Grid>,
    spec: EquationSpec,
    exponents: ClassExponents,
}

fn setup(cfg: &RunConfig, mu: &MuRecord) -> HarnessResult<Setup> {
    let exponents = cfg.exponents()?;
    Ok(Setup {
        grid: grid_for(cfg, &exponents, cfg.grid.points)?,
        spec: cfg.equation_spec(mu.value())?,
        exponents,
    })
}

fn grid_for(cfg: &RunConfig, e: &ClassExponents, points: usize) -> HarnessResult<Arc<Grid>> {
    let order = e
        .max_derivative_needed()
        .max(cfg.study.smoothing_k + 1)
        .max(8);
    Ok(Arc::new(Grid::with_max_derivative(
        cfg.grid.half_length,
        points,
        order,
    )?))
}

fn wave_params(omega: f64, speed: f64, alpha: f64) -> HarnessResult<WaveParams> {
    let branch = if (4.0 * omega - speed * speed).abs() <= 1e-14 * omega.abs().max(1.0) {
        Branch::Degenerate
    } else {
        Branch::Generic
    };
    Ok(WaveParams::new(omega, speed, alpha, branch)?)
}

fn read_field_file(path: &str, grid: &Arc<Grid>) -> HarnessResult<Field> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::config("data", format!("cannot read {path}: {e}")))?;
    let mut values = Vec::with_capacity(grid.len());
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| HarnessError::config("data", format!("{path}:{}: {e}", lineno + 1)))?;
        match nums.as_slice() {
            [re] => values.push(Complex64::new(*re, 0.0)),
            [re, im] => values.push(Complex64::new(*re, *im)),
            _ => {
                return Err(HarnessError::config(
                    "data",
                    format!("{path}:{}: expected one or two columns", lineno + 1),
                ))
            }
        }
    }
    if values.len() != grid.len() {
        return Err(HarnessError::config(
            "data",
            format!(
                "{path} has {} values, grid has {}",
                values.len(),
                grid.len()
            ),
        ));
    }
    Ok(Field::new(Arc::clone(grid), values)?)
}

/// The datum on `grid`, with the wave parameters for solitary data.
fn datum(
    cfg: &RunConfig,
    grid: &Arc<Grid>,
    e: &ClassExponents,
) -> HarnessResult<(Field, Option<WaveParams>)> {
    match &cfg.data {
        DataConfig::Solitary { omega, speed } => {
            let p = wave_params(*omega, *speed, cfg.equation.alpha)?;
            Ok((solitary_wave(&p, grid, 0.0)?, Some(p)))
        }
        DataConfig::Decay { c0, m } => Ok((
            decay_profile(Complex64::new(*c0, 0.0), m.unwrap_or(e.m), grid)?,
            None,
        )),
        DataConfig::File { path } => Ok((read_field_file(path, grid)?, None)),
    }
}

fn class_params(cfg: &RunConfig, u0: &Field, e: ClassExponents) -> HarnessResult<ClassParams> {
    let measured = ClassParams::measure(u0, e)?;
    Ok(match cfg.class.lambda {
        Some(lambda) => ClassParams::new(e, lambda, measured.nu)?,
        None => measured,
    })
}

fn derived(e: &ClassExponents, class: Option<&ClassParams>) -> Derived {
    Derived {
        m: e.m,
        big_m: e.big_m,
        k: e.k,
        s: e.s(),
        lambda: class.map(|c| c.lambda),
        nu: class.map(|c| c.nu),
    }
}

/// Runs the configured experiment in `dir`: the manifest is written first
/// with status `running`, then finalised together with `series.csv`.
pub fn run_experiment(
    cfg: &RunConfig,
    dir: &Path,
    mu: &MuRecord,
) -> Result<RunManifest, RunFailure> {
    let mut manifest = RunManifest::begin(cfg, mu.clone());
    let early = |manifest: RunManifest, error: HarnessError| RunFailure {
        manifest: Box::new(manifest),
        error,
    };
    if let Err(e) = cfg.validate() {
        return Err(early(manifest, e));
    }
    if let Err(e) = std::fs::create_dir_all(dir)
        .map_err(HarnessError::from)
        .and_then(|_| manifest.write(dir).map(|_| ()))
    {
        return Err(early(manifest, e));
    }
    let start = Instant::now();
    let mut outcome = Outcome::default();
    let result = dispatch(cfg, mu, &mut outcome);
    manifest.wall_clock_seconds = start.elapsed().as_secs_f64();
    manifest.checks = std::mem::take(&mut outcome.checks);
    manifest.notes = std::mem::take(&mut outcome.notes);
    manifest.derived = outcome.derived.take();
    let mut write_error = None;
    if !outcome.table.header.is_empty() {
        match outcome.table.write(&dir.join(SERIES_FILE)) {
            Ok(()) => manifest.outputs.push(SERIES_FILE.into()),
            Err(e) => write_error = Some(e),
        }
    }
    let error = result.err().or(write_error);
    manifest.status = match (&error, manifest.passed()) {
        (Some(_), _) => "error".into(),
        (None, true) => "passed".into(),
        (None, false) => "failed".into(),
    };
    manifest.error = error.as_ref().map(|e| e.to_string());
    if let Err(e) = manifest.write(dir) {
        return Err(RunFailure {
            manifest: Box::new(manifest),
            error: e,
        });
    }
    match error {
        Some(error) => Err(RunFailure {
            manifest: Box::new(manifest),
            error,
        }),
        None => Ok(manifest),
    }
}

pub fn dispatch(cfg: &RunConfig, mu: &MuRecord, out: &mut Outcome) -> HarnessResult<()> {
    match cfg.experiment.as_str() {
        "soliton_propagation" => soliton_propagation(cfg, mu, out),
        "picard_study" => picard_study(cfg, mu, out),
        "smoothing_probe" => smoothing_probe(cfg, mu, out),
        "inequality_sweep" => inequality_sweep(cfg, mu, out),
        "small_time_probe" => small_time_probe(cfg, mu, out),
        "convergence_study" => convergence_study(cfg, mu, out),
        "dependence_study" => dependence_study(cfg, mu, out),
        other => Err(HarnessError::Usage(format!("unknown experiment '{other}'"))),
    }
}

fn is_real(spec: &EquationSpec) -> bool {
    spec.mu.im == 0.0
}

fn soliton_rows(table: &mut Table, traj: &Trajectory, p: &WaveParams) -> HarnessResult<(f64, f64)> {
    let mass0 = mass(&traj.steps()[0]);
    let guards = traj.boundary_guard();
    let mut last_error = 0.0;
    let mut drift: f64 = 0.0;
    for (n, u) in traj.steps().iter().enumerate() {
        let t = traj.time(n);
        let exact = gdnls_core::profiles::solitary_wave_unguarded(p, traj.grid(), t);
        last_error = (u - &exact).l2_norm() / exact.l2_norm();
        let m = mass(u);
        drift = drift.max((m - mass0).abs() / mass0);
        table.push(vec![
            t.into(),
            last_error.into(),
            m.into(),
            guards[n].into(),
        ]);
    }
    Ok((last_error, drift))
}

fn soliton_propagation(cfg: &RunConfig, mu: &MuRecord, out: &mut Outcome) -> HarnessResult<()> {
    let s = setup(cfg, mu)?;
    out.derived = Some(derived(&s.exponents, None));
    let (u0, p) = datum(cfg, &s.grid, &s.exponents)?;
    let p =
        p.ok_or_else(|| HarnessError::config("data", "soliton_propagation needs solitary data"))?;
    out.table = Table::new(&["t", "l2_error", "mass", "boundary_guard"]);
    let traj = match evolve_with_stride(
        &u0,
        cfg.time.duration,
        cfg.time.dt,
        cfg.time.stepper.stepper(),
        &s.spec,
        cfg.time.record_every,
    ) {
        Ok(t) => t,
        Err(failure) => {
            if let Some(partial) = &failure.partial {
                soliton_rows(&mut out.table, partial, &p)?;
                out.notes.push(format!(
                    "partial trajectory up to t = {}",
                    partial.final_time()
                ));
            }
            return Err(gdnls_core::Error::from(failure).into());
        }
    };
    let (error, drift) = soliton_rows(&mut out.table, &traj, &p)?;
    out.checks.push(Check::at_most(
        "relative_l2_error",
        error,
        cfg.study.tolerance,
    ));
    if is_real(&s.spec) {
        out.checks
            .push(Check::at_most("relative_mass_drift", drift, 1e-8));
    }
    Ok(())
}

/// `distance(n+1)/distance(n)` over iterations whose distance is above the
/// round-off floor `floor`.
fn contraction_ratios(distances: &[f64], floor: f64) -> Vec<f64> {
    distances
        .windows(2)
        .filter(|w| w[0] > floor && w[1] > floor)
        .map(|w| w[1] / w[0])
        .collect()
}

fn smoothing_checks(out: &mut Outcome, label: &str, r: &SmoothingReport) {
    out.checks.push(Check::new(
        &format!("{label}_sup_le_l1"),
        r.sup,
        format!("<= l1 = {:e}", r.l1),
        r.sup <= r.l1 && r.sup.is_finite(),
    ));
}

fn picard_study(cfg: &RunConfig, mu: &MuRecord, out: &mut Outcome) -> HarnessResult<()> {
    let s = setup(cfg, mu)?;
    let (u0, _) = datum(cfg, &s.grid, &s.exponents)?;
    let class = class_params(cfg, &u0, s.exponents)?;
    out.derived = Some(derived(&s.exponents, Some(&class)));
    let p = XtNormParams::new(class, cfg.time.duration, cfg.time.dt)?;
    let boundary = u0.boundary_ratio();
    out.notes.push(format!("datum boundary ratio {boundary:e}"));

    let outcome = picard_solve(&u0, &s.spec, &p, cfg.study.tolerance, cfg.study.max_iter)?;
    out.table = Table::new(&[
        "iteration",
        "distance",
        "ratio",
        "weighted_lower_bound",
        "sobolev_sup",
        "weighted_inf_sup",
        "weighted_deriv_sum",
        "smoothing",
        "time_deriv_sum",
        "proximity",
    ]);
    let mut previous: Option<f64> = None;
    for r in &outcome.history {
        let ratio = previous.map_or(f64::NAN, |d| r.distance / d);
        previous = Some(r.distance);
        let n = &r.norms;
        out.table.push(vec![
            r.iteration.into(),
            r.distance.into(),
            ratio.into(),
            r.weighted_lower_bound.into(),
            n.sobolev_sup.into(),
            n.weighted_inf_sup.into(),
            n.weighted_deriv_sum.into(),
            n.smoothing.into(),
            n.time_deriv_sum.into(),
            n.proximity.into(),
        ]);
    }

    let distances: Vec<f64> = outcome.history.iter().map(|r| r.distance).collect();
    let floor = 1e-10 * u0.l2_norm();
    let ratios = contraction_ratios(&distances, floor);
    let worst = ratios.iter().cloned().fold(f64::NAN, f64::max);
    out.notes.push(format!(
        "{} ratios above the distance floor {floor:e}",
        ratios.len()
    ));
    out.checks.push(Check::new(
        "converged",
        distances.last().copied().unwrap_or(f64::NAN),
        format!("<= {:e}", cfg.study.tolerance),
        outcome.converged,
    ));
    out.checks.push(Check::new(
        "max_contraction_ratio",
        worst,
        "< 0.9",
        !ratios.is_empty() && worst < 0.9,
    ));
    let lower = outcome
        .history
        .iter()
        .map(|r| r.weighted_lower_bound)
        .fold(f64::INFINITY, f64::min);
    out.checks.push(Check::at_least(
        "min_weighted_lower_bound",
        lower,
        0.5 * class.lambda,
    ));
    let ball: Vec<f64> = outcome
        .history
        .iter()
        .map(|r| r.norms.ball_norm())
        .collect();
    let growth = ball.iter().cloned().fold(0.0, f64::max) / ball[0];
    out.checks
        .push(Check::at_most("ball_norm_growth", growth, 2.0));

    let direct = evolve(
        &u0,
        cfg.time.duration,
        cfg.time.dt,
        StepperName::Ifrk4.stepper(),
        &s.spec,
    )
    .map_err(gdnls_core::Error::from)?;
    let mismatch = outcome.solution.sup_l2_distance(&direct)?;
    out.checks
        .push(Check::at_most("match_direct_solver", mismatch, 1e-4));

    let k = cfg.study.smoothing_k;
    let coarse = local_smoothing(&outcome.solution, k)?;
    let half = XtNormParams::new(class, cfg.time.duration, 0.5 * cfg.time.dt)?;
    let fine_solution =
        picard_solve(&u0, &s.spec, &half, cfg.study.tolerance, cfg.study.max_iter)?.solution;
    let fine = local_smoothing(&fine_solution, k)?;
    smoothing_checks(out, "smoothing_dt", &coarse);
    smoothing_checks(out, "smoothing_dt_half", &fine);
    out.checks.push(Check::at_most(
        "smoothing_dt_halving_change",
        (fine.sup / coarse.sup - 1.0).abs(),
        0.1,
    ));
    out.notes.push(format!(
        "local smoothing k = {k}: sup {:e} (dt), {:e} (dt/2)",
        coarse.sup, fine.sup
    ));

    if cfg.study.contraction {
        let delta = default_perturbation(&u0);
        let full = contraction_factor(&u0, &s.spec, &p, &delta)?;
        let halved = contraction_factor(
            &u0,
            &s.spec,
            &p.with_duration(0.5 * cfg.time.duration)?,
            &delta,
        )?;
        out.checks
            .push(Check::new("contraction_factor", full, "< 0.9", full < 0.9));
        out.checks.push(Check::new(
            "contraction_factor_half_T",
            halved,
            format!("< factor(T) = {full:e}"),
            halved < full,
        ));
    }
    Ok(())
}

fn probe_coefficient(
    cfg: &RunConfig,
    s: &Setup,
    grid: &Arc<Grid>,
) -> HarnessResult<FrozenCoefficient> {
    let m = s.exponents.m as i32;
    Ok(match cfg.study.coefficient {
        CoefficientKind::Zero => FrozenCoefficient::zero(grid),
        CoefficientKind::Bracket => FrozenCoefficient::from_coefficient(
            Field::from_real_fn(grid, |x| japanese_bracket(x).powi(-m)).scale(s.spec.mu),
            s.exponents.big_m,
        )?,
        CoefficientKind::Data => {
            let (u0, _) = datum(cfg, grid, &s.exponents)?;
            FrozenCoefficient::from_data(&u0, &s.spec, s.exponents.big_m)?
        }
    })
}

fn random_packets(seed: u64, sample: usize) -> WavePackets {
    WavePackets::random(seed.wrapping_add(sample as u64), 3, 5.0, 3.0)
}

fn smoothing_probe(cfg: &RunConfig, mu: &MuRecord, out: &mut Outcome) -> HarnessResult<()> {
    let s = setup(cfg, mu)?;
    out.derived = Some(derived(&s.exponents, None));
    out.table = Table::new(&[
        "points",
        "sample",
        "ratio",
        "sup_half_ratio",
        "smoothing",
        "data_norm",
    ]);
    let mut maxima = Vec::new();
    for points in [cfg.grid.points, 2 * cfg.grid.points] {
        let grid = grid_for(cfg, &s.exponents, points)?;
        let fc = probe_coefficient(cfg, &s, &grid)?;
        let reports = (0..cfg.study.samples)
            .into_par_iter()
            .map(|i| {
                let v0 = random_packets(cfg.seed, i).sample_unit_half_norm(&grid)?;
                kato_smoothing_report(&v0, &fc, cfg.time.duration, cfg.time.dt)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut max: f64 = 0.0;
        for (i, r) in reports.iter().enumerate() {
            max = max.max(r.ratio());
            out.table.push(vec![
                points.into(),
                i.into(),
                r.ratio().into(),
                r.sup_half_ratio().into(),
                r.smoothing.into(),
                r.data_norm.into(),
            ]);
        }
        maxima.push(max);
    }
    out.checks.push(Check::new(
        "max_ratio_refinement_factor",
        maxima[1] / maxima[0],
        "in (1/2, 2)",
        maxima.iter().all(|m| m.is_finite())
            && (maxima[1] / maxima[0]) < 2.0
            && (maxima[0] / maxima[1]) < 2.0,
    ));

    let free = FrozenCoefficient::zero(&s.grid);
    let v0 = random_packets(cfg.seed, 0).sample_unit_half_norm(&s.grid)?;
    let r = kato_smoothing_report(&v0, &free, cfg.time.duration, cfg.time.dt)?;
    out.checks.push(Check::at_most(
        "free_flow_sup_half_deviation",
        (r.sup_half_ratio() - 1.0).abs(),
        1e-10,
    ));
    Ok(())
}

fn inequality_ratios(f: &Field) -> HarnessResult<[f64; 5]> {
    Ok([
        interp_check_1(f, 2.0, 2.0, 0.5, InterpVariant::BesselOfWeight)?,
        interp_check_1(f, 2.0, 2.0, 0.5, InterpVariant::WeightOfBessel)?,
        interp_check_2(f, 1, 1, 1)?,
        interp_check_2(f, 1, 1, 2)?,
        interp_check_2(f, 1, 1, 3)?,
    ])
}

const INEQUALITY_COLUMNS: [&str; 5] = [
    "bessel_of_weight",
    "weight_of_bessel",
    "weighted_deriv_1",
    "weighted_deriv_2",
    "weighted_deriv_3",
];

fn inequality_sweep(cfg: &RunConfig, mu: &MuRecord, out: &mut Outcome) -> HarnessResult<()> {
    let s = setup(cfg, mu)?;
    out.derived = Some(derived(&s.exponents, None));
    let mut header = vec!["points", "sample"];
    header.extend(INEQUALITY_COLUMNS);
    out.table = Table::new(&header);
    let mut maxima = Vec::new();
    let mut scale_error: f64 = 0.0;
    let a = Complex64::new(-3.7e2, 1.9e2);
    for points in [cfg.grid.points, 2 * cfg.grid.points] {
        let grid = grid_for(cfg, &s.exponents, points)?;
        let rows = (0..cfg.study.samples)
            .into_par_iter()
            .map(|i| {
                let f = random_packets(cfg.seed, i).sample(&grid);
                let r = inequality_ratios(&f)?;
                let scaled = inequality_ratios(&f.scale(a))?;
                let err = r
                    .iter()
                    .zip(&scaled)
                    .map(|(x, y)| (x - y).abs() / x.abs())
                    .fold(0.0, f64::max);
                Ok((r, err))
            })
            .collect::<HarnessResult<Vec<_>>>()?;
        let mut max = [0.0f64; 5];
        for (i, (r, err)) in rows.iter().enumerate() {
            scale_error = scale_error.max(*err);
            let mut row = vec![points.into(), i.into()];
            for (c, v) in r.iter().enumerate() {
                max[c] = max[c].max(*v);
                row.push((*v).into());
            }
            out.table.push(row);
        }
        maxima.push(max);
    }
    for (c, name) in INEQUALITY_COLUMNS.iter().enumerate() {
        let (coarse, fine) = (maxima[0][c], maxima[1][c]);
        let change = (fine / coarse - 1.0).abs();
        out.checks.push(Check::new(
            &format!("{name}_max_refinement_change"),
            change,
            format!("<= 0.5 (max {coarse:e} -> {fine:e})"),
            coarse.is_finite() && fine.is_finite() && change <= 0.5,
        ));
    }
    out.checks
        .push(Check::at_most("scale_invariance", scale_error, 1e-12));
    Ok(())
}

fn small_time_probe(cfg: &RunConfig, mu: &MuRecord, out: &mut Outcome) -> HarnessResult<()> {
    let s = setup(cfg, mu)?;
    let (u0, _) = datum(cfg, &s.grid, &s.exponents)?;
    out.derived = Some(derived(&s.exponents, None));
    let fc = FrozenCoefficient::from_data(&u0, &s.spec, s.exponents.big_m)?;
    let report = small_time_continuity(&u0, &fc, &cfg.study.times, s.exponents.m, cfg.time.dt)?;
    out.table = Table::new(&["t", "sup_difference", "weighted_difference"]);
    for (i, &t) in report.times.iter().enumerate() {
        out.table.push(vec![
            t.into(),
            report.sup_differences[i].into(),
            report.weighted_differences[i].into(),
        ]);
    }
    out.checks
        .push(Check::within("sup_slope", report.slope, 1.0, 0.1));
    out.checks.push(Check::within(
        "weighted_slope",
        report.weighted_slope,
        1.0,
        0.1,
    ));
    Ok(())
}

/// One row of an order table.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderRow {
    pub dt: f64,
    /// `||u_dt - u_{dt/2}||_2`
    pub error: f64,
    /// `log2(error / next error)`, when both are above saturation.
    pub order: Option<f64>,
    pub status: &'static str,
}

/// Self-convergence table from final states on a halving ladder.
pub fn order_table(ladder: &[f64], finals: &[Field]) -> Vec<OrderRow> {
    let scale = finals
        .last()
        .map_or(1.0, |f| f.l2_norm().max(f64::MIN_POSITIVE));
    let errors: Vec<f64> = finals
        .windows(2)
        .map(|w| (&w[0] - &w[1]).l2_norm())
        .collect();
    errors
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let saturated = |e: f64| e <= SATURATION * scale;
            let next = errors.get(i + 1).copied();
            let order = next
                .filter(|&n| !saturated(e) && !saturated(n))
                .map(|n| (e / n).log2());
            let status = if saturated(e) {
                "saturated"
            } else if next.is_some_and(|n| n > e) {
                "warning: non-monotone"
            } else {
                "ok"
            };
            OrderRow {
                dt: ladder[i],
                error: e,
                order,
                status,
            }
        })
        .collect()
}

/// Least-squares order through the unsaturated rows.
pub fn fitted_order(rows: &[OrderRow]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.status != "saturated")
        .map(|r| (r.dt, r.error))
        .unzip();
    (xs.len() >= 2).then(|| loglog_slope(&xs, &ys))
}

fn convergence_study(cfg: &RunConfig, mu: &MuRecord, out: &mut Outcome) -> HarnessResult<()> {
    let s = setup(cfg, mu)?;
    out.derived = Some(derived(&s.exponents, None));
    let ladder = &cfg.study.ladder;
    for w in ladder.windows(2) {
        if ((w[0] / w[1]) - 2.0).abs() > 1e-9 {
            return Err(HarnessError::config(
                "study.ladder",
                "each rung must halve dt",
            ));
        }
    }
    let (u0, _) = datum(cfg, &s.grid, &s.exponents)?;
    out.table = Table::new(&["stepper", "dt", "error", "order", "status"]);
    let nonlinear = Nonlinearity(&s.spec);
    let part: &(dyn NonStiffPart + Sync) = if cfg.equation.linear {
        &NoPart
    } else {
        &nonlinear
    };
    for &stepper in &cfg.study.steppers {
        let finals = ladder
            .par_iter()
            .map(|&dt| {
                let n = gdnls_core::evolution::step_count(cfg.time.duration, dt)?;
                let traj = integrate(&u0, 0.0, dt, n, stepper.stepper(), part, n)
                    .map_err(gdnls_core::Error::from)?;
                Ok(traj.last().clone())
            })
            .collect::<HarnessResult<Vec<_>>>()?;
        let rows = order_table(ladder, &finals);
        for r in &rows {
            out.table.push(vec![
                stepper.label().into(),
                r.dt.into(),
                r.error.into(),
                r.order.unwrap_or(f64::NAN).into(),
                r.status.into(),
            ]);
        }
        if cfg.equation.linear {
            let worst = rows.iter().map(|r| r.error).fold(0.0, f64::max);
            out.checks.push(Check::new(
                &format!("{}_linear_saturated", stepper.label()),
                worst,
                "all rows at round-off",
                rows.iter().all(|r| r.status == "saturated"),
            ));
            continue;
        }
        match fitted_order(&rows) {
            Some(order) => {
                let (target, tol) = match stepper {
                    StepperName::Strang => (2.0, 0.2),
                    StepperName::Ifrk4 => (4.0, 0.4),
                };
                out.checks.push(Check::within(
                    &format!("{}_order", stepper.label()),
                    order,
                    target,
                    tol,
                ));
            }
            None => out.notes.push(format!(
                "{}: errors at round-off, order saturated",
                stepper.label()
            )),
        }
    }
    Ok(())
}

fn dependence_study(cfg: &RunConfig, mu: &MuRecord, out: &mut Outcome) -> HarnessResult<()> {
    let s = setup(cfg, mu)?;
    let (u0, _) = datum(cfg, &s.grid, &s.exponents)?;
    let class = class_params(cfg, &u0, s.exponents)?;
    out.derived = Some(derived(&s.exponents, Some(&class)));
    let p = XtNormParams::new(class, cfg.time.duration, cfg.time.dt)?;
    out.table = Table::new(&["perturbation", "lhs", "rhs", "ratio"]);
    let reports = cfg
        .study
        .perturbations
        .par_iter()
        .map(|&eps| Ok(dependence_probe(&u0, &scaled_datum(&u0, eps), &s.spec, &p)?))
        .collect::<HarnessResult<Vec<_>>>()?;
    let mut ratios = Vec::new();
    for (eps, r) in cfg.study.perturbations.iter().zip(&reports) {
        let ratio = r.ratio().unwrap_or(f64::NAN);
        ratios.push(ratio);
        out.table.push(vec![
            (*eps).into(),
            r.lhs.into(),
            r.rhs.into(),
            ratio.into(),
        ]);
    }
    let max = ratios.iter().cloned().fold(f64::NAN, f64::max);
    let min = ratios.iter().cloned().fold(f64::NAN, f64::min);
    out.checks.push(Check::new(
        "ratio_spread",
        max / min,
        "< 2",
        max.is_finite() && min > 0.0 && max / min < 2.0,
    ));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use gdnls_core::make_grid;

    #[test]
    fn order_table_flags_saturation_and_non_monotone() {
        let g = make_grid(1.0, 8).unwrap();
        let f = |v: f64| Field::constant(&g, Complex64::new(v, 0.0));
        let finals = vec![f(1.0), f(1.0), f(1.0), f(1.0)];
        let rows = order_table(&[0.4, 0.2, 0.1, 0.05], &finals);
        assert!(rows.iter().all(|r| r.status == "saturated"));
        assert_eq!(fitted_order(&rows), None);

        let finals = vec![f(1.0), f(1.1), f(1.15), f(1.0)];
        let rows = order_table(&[0.4, 0.2, 0.1, 0.05], &finals);
        assert_eq!(rows[0].status, "ok");
        assert!(rows[1].status.starts_with("warning"));
    }

    #[test]
    fn order_table_recovers_synthetic_order() {
        let g = make_grid(1.0, 8).unwrap();
        let ladder = [0.1, 0.05, 0.025, 0.0125];
        let finals: Vec<Field> = ladder
            .iter()
            .map(|dt| Field::constant(&g, Complex64::new(1.0 + 3.0 * dt * dt, 0.0)))
            .collect();
        let rows = order_table(&ladder, &finals);
        let order = fitted_order(&rows).unwrap();
        assert!((order - 2.0).abs() < 1e-6, "{order}");
    }

    #[test]
    fn ratios_ignore_round_off_floor() {
        let r = contraction_ratios(&[1e-2, 1e-3, 1e-4, 1e-15, 2e-15], 1e-12);
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|&x| (x - 0.1).abs() < 1e-12));
    }
}
