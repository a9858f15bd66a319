//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;

use gdnls_core::diagnostics::mass;
use gdnls_core::evolution::{determine_mu_star, evolve_with_stride, MU_CANDIDATES};
use gdnls_core::profiles::decay_profile;
use gdnls_core::{make_grid, Complex64, EquationSpec, Stepper, WaveParams, MU_STAR};
use gdnls_lab::config::{DataConfig, StepperName};
use gdnls_lab::output::{MuRecord, RunManifest, SERIES_FILE};
use gdnls_lab::{mu, run_experiment, RunConfig};

struct Verdict {
    passed: bool,
    detail: String,
}

fn report(n: usize, title: &str, v: &Verdict) -> bool {
    println!(
        "criterion {n:>2} {} {title}: {}",
        if v.passed { "PASS" } else { "FAIL" },
        v.detail
    );
    v.passed
}

fn run(cfg: &RunConfig, dir: &Path, mu: &MuRecord) -> RunManifest {
    match run_experiment(cfg, dir, mu) {
        Ok(m) => m,
        Err(f) => *f.manifest,
    }
}

fn checks(m: &RunManifest, names: &[&str]) -> Verdict {
    let mut passed = m.error.is_none();
    let mut parts = Vec::new();
    if let Some(e) = &m.error {
        parts.push(format!("error: {e}"));
    }
    for name in names {
        match m.checks.iter().find(|c| c.name == *name) {
            Some(c) => {
                passed &= c.passed;
                parts.push(format!("{} = {:.4e} ({})", c.name, c.value, c.threshold));
            }
            None => {
                passed = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    Verdict {
        passed,
        detail: parts.join("; "),
    }
}

fn prefixed(m: &RunManifest, suffix: &str) -> Vec<String> {
    m.checks
        .iter()
        .filter(|c| c.name.ends_with(suffix))
        .map(|c| c.name.clone())
        .collect()
}

fn criterion_1() -> Verdict {
    let g = make_grid(40.0, 4096).unwrap();
    let p = WaveParams::generic(1.0, 0.0, 1.0).unwrap();
    let d = determine_mu_star(&p, &g).unwrap();
    let others_ok = d
        .residuals
        .iter()
        .filter(|(mu, _)| *mu != d.mu_star)
        .all(|(_, r)| *r >= 1e-2);
    let list: Vec<String> = MU_CANDIDATES
        .iter()
        .zip(&d.residuals)
        .map(|(mu, (_, r))| format!("mu = {mu}: {r:.3e}"))
        .collect();
    Verdict {
        passed: d.mu_star == MU_STAR && d.best_residual <= 1e-6 && others_ok,
        detail: format!("mu* = {}; {}", d.mu_star, list.join(", ")),
    }
}

fn decay_mass_drift() -> (f64, f64) {
    let g = make_grid(30.0, 2048).unwrap();
    let u0 = decay_profile(Complex64::new(0.5, 0.0), 3, &g).unwrap();
    let spec = EquationSpec::new(MU_STAR, 1.0).unwrap();
    let traj = evolve_with_stride(&u0, 1.0, 1e-3, Stepper::Ifrk4, &spec, 50).unwrap();
    let m0 = mass(&u0);
    let drift = traj
        .steps()
        .iter()
        .map(|u| (mass(u) - m0).abs() / m0)
        .fold(0.0, f64::max);
    (drift, u0.boundary_ratio())
}

fn series(dir: &Path) -> Option<Vec<u8>> {
    std::fs::read(dir.join(SERIES_FILE)).ok()
}

fn main() {
    let root = tempfile::tempdir().unwrap();
    let mu = mu::cached(root.path()).unwrap();
    let mut all = true;

    all &= report(1, "solitary-wave exactness and mu*", &criterion_1());

    let soliton = RunConfig::defaults_for("soliton_propagation").unwrap();
    assert_eq!(
        (soliton.grid.half_length, soliton.grid.points),
        (40.0, 4096)
    );
    assert_eq!((soliton.time.duration, soliton.time.dt), (1.0, 1e-4));
    assert_eq!(soliton.time.stepper, StepperName::Ifrk4);
    assert_eq!(
        soliton.data,
        DataConfig::Solitary {
            omega: 1.0,
            speed: 1.0
        }
    );
    let soliton_run = run(&soliton, &root.path().join("soliton"), &mu);
    all &= report(
        2,
        "soliton propagation",
        &checks(&soliton_run, &["relative_l2_error"]),
    );

    let mut v = checks(&soliton_run, &["relative_mass_drift"]);
    let (drift, boundary) = decay_mass_drift();
    v.passed &= drift <= 1e-8;
    v.detail.push_str(&format!(
        "; decay data drift = {drift:.4e} (<= 1e-8, boundary ratio {boundary:.1e})"
    ));
    all &= report(3, "mass conservation", &v);

    let converge = RunConfig::defaults_for("convergence_study").unwrap();
    assert_eq!(converge.study.ladder.len(), 4);
    let converge_run = run(&converge, &root.path().join("converge"), &mu);
    all &= report(
        4,
        "convergence orders",
        &checks(&converge_run, &["strang_order", "ifrk4_order"]),
    );

    let picard = RunConfig::defaults_for("picard_study").unwrap();
    assert_eq!((picard.grid.half_length, picard.grid.points), (30.0, 2048));
    assert_eq!((picard.time.duration, picard.time.dt), (0.05, 2e-4));
    assert_eq!(picard.data, DataConfig::Decay { c0: 0.5, m: None });
    assert_eq!(picard.study.smoothing_k, 6);
    let picard_run = run(&picard, &root.path().join("picard"), &mu);
    all &= report(
        5,
        "Picard contraction",
        &checks(
            &picard_run,
            &[
                "max_contraction_ratio",
                "match_direct_solver",
                "min_weighted_lower_bound",
            ],
        ),
    );
    all &= report(
        6,
        "contraction factor shrinks with T",
        &checks(
            &picard_run,
            &["contraction_factor", "contraction_factor_half_T"],
        ),
    );

    let smoothing = RunConfig::defaults_for("smoothing_probe").unwrap();
    assert_eq!((smoothing.grid.points, smoothing.study.samples), (1024, 20));
    let smoothing_run = run(&smoothing, &root.path().join("smoothing"), &mu);
    all &= report(
        7,
        "Kato smoothing ratio",
        &checks(
            &smoothing_run,
            &[
                "max_ratio_refinement_factor",
                "free_flow_sup_half_deviation",
            ],
        ),
    );

    let inequality = RunConfig::defaults_for("inequality_sweep").unwrap();
    assert_eq!(inequality.study.samples, 100);
    let inequality_run = run(&inequality, &root.path().join("inequality"), &mu);
    let mut names = prefixed(&inequality_run, "_max_refinement_change");
    names.push("scale_invariance".into());
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    all &= report(
        8,
        "interpolation inequalities",
        &checks(&inequality_run, &refs),
    );

    let continuity = RunConfig::defaults_for("small_time_probe").unwrap();
    let continuity_run = run(&continuity, &root.path().join("continuity"), &mu);
    all &= report(
        9,
        "small-time continuity",
        &checks(&continuity_run, &["sup_slope", "weighted_slope"]),
    );

    all &= report(
        10,
        "local smoothing functional",
        &checks(
            &picard_run,
            &[
                "smoothing_dt_sup_le_l1",
                "smoothing_dt_half_sup_le_l1",
                "smoothing_dt_halving_change",
            ],
        ),
    );

    let mut identical = Vec::new();
    let mut passed = true;
    for (name, cfg) in [
        ("soliton", &soliton),
        ("converge", &converge),
        ("picard", &picard),
        ("smoothing", &smoothing),
        ("inequality", &inequality),
        ("continuity", &continuity),
        (
            "dependence",
            &RunConfig::defaults_for("dependence_study").unwrap(),
        ),
    ] {
        let first_dir = root.path().join(name);
        if name == "dependence" {
            run(cfg, &first_dir, &mu);
        }
        let again = root.path().join(format!("{name}_again"));
        run(cfg, &again, &mu);
        let same = matches!((series(&first_dir), series(&again)), (Some(a), Some(b)) if a == b);
        passed &= same;
        identical.push(format!(
            "{name}: {}",
            if same { "identical" } else { "DIFFERENT" }
        ));
    }
    all &= report(
        11,
        "determinism",
        &Verdict {
            passed,
            detail: identical.join(", "),
        },
    );

    if !all {
        std::process::exit(1);
    }
}
