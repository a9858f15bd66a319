use gdnls_core::diagnostics::loglog_slope;
use gdnls_core::evolution::{evolve, step_count};
use gdnls_core::profiles::{decay_profile, solitary_wave};
use gdnls_core::{make_grid, Complex64, EquationSpec, Field, Stepper, WaveParams, MU_STAR};

fn final_state(u0: &Field, spec: &EquationSpec, stepper: Stepper, dt: f64, t: f64) -> Field {
    evolve(u0, t, dt, stepper, spec).unwrap().last().clone()
}

fn self_convergence_order(stepper: Stepper, ladder: &[f64]) -> f64 {
    let g = make_grid(40.0, 256).unwrap();
    let p = WaveParams::generic(1.0, 1.0, 1.0).unwrap();
    let spec = EquationSpec::new(MU_STAR, 1.0).unwrap();
    let u0 = solitary_wave(&p, &g, 0.0).unwrap();
    let finals: Vec<Field> = ladder
        .iter()
        .map(|&dt| final_state(&u0, &spec, stepper, dt, 0.5))
        .collect();
    let errors: Vec<f64> = finals
        .windows(2)
        .map(|w| (&w[0] - &w[1]).l2_norm())
        .collect();
    loglog_slope(&ladder[..errors.len()], &errors)
}

#[test]
fn strang_is_second_order() {
    let order = self_convergence_order(Stepper::Strang, &[0.01, 0.005, 0.0025, 0.00125]);
    assert!((order - 2.0).abs() < 0.2, "{order}");
}

#[test]
fn ifrk4_is_fourth_order() {
    let order = self_convergence_order(Stepper::Ifrk4, &[0.02, 0.01, 0.005, 0.0025]);
    assert!((order - 4.0).abs() < 0.4, "{order}");
}

#[test]
fn steppers_agree_on_decay_data() {
    let g = make_grid(30.0, 512).unwrap();
    let spec = EquationSpec::new(MU_STAR, 1.0).unwrap();
    let u0 = decay_profile(Complex64::new(0.5, 0.0), 3, &g).unwrap();
    let a = final_state(&u0, &spec, Stepper::Ifrk4, 1e-3, 0.1);
    let b = final_state(&u0, &spec, Stepper::Strang, 2.5e-4, 0.1);
    assert!((&a - &b).l2_norm() < 1e-5, "{}", (&a - &b).l2_norm());
}

#[test]
fn step_count_rejects_non_dividing_steps() {
    assert_eq!(step_count(1.0, 0.25).unwrap(), 4);
    assert!(step_count(1.0, 0.3).is_err());
}
