use gdnls_core::diagnostics::WavePackets;
use gdnls_core::evolution::{
    duhamel, evolve, frozen_evolve, propagator_trajectory, propagator_w, step_count,
};
use gdnls_core::picard::{phi_map, picard_solve, XtNormParams};
use gdnls_core::profiles::decay_profile;
use gdnls_core::spectral::japanese_bracket;
use gdnls_core::{
    make_grid, ClassExponents, ClassParams, Complex64, EquationSpec, Field, FrozenCoefficient,
    Stepper, Trajectory, MU_STAR,
};

fn bracket_coefficient(g: &std::sync::Arc<gdnls_core::Grid>) -> FrozenCoefficient {
    let b = Field::from_real_fn(g, |x| japanese_bracket(x).powi(-3)).scale(MU_STAR);
    FrozenCoefficient::from_coefficient(b, 2).unwrap()
}

#[test]
fn duhamel_matches_direct_inhomogeneous_solve() {
    let g = make_grid(20.0, 512).unwrap();
    let fc = bracket_coefficient(&g);
    let dt = 1e-3;
    let n = step_count(0.2, dt).unwrap();
    let forcing = Trajectory::new(
        0.0,
        dt,
        (0..=n)
            .map(|i| {
                let t = i as f64 * dt;
                Field::from_fn(&g, |x| {
                    Complex64::new((-x * x).exp() * t.cos(), x.sin() * (-0.1 * x * x).exp())
                })
            })
            .collect(),
    )
    .unwrap();
    let z = duhamel(&fc, &forcing, dt).unwrap();
    let direct = frozen_evolve(&fc, &Field::zeros(&g), Some(&forcing), n, dt).unwrap();
    assert!(z.sup_l2_distance(&direct).unwrap() < 1e-12);

    let fine = duhamel(&fc, &forcing, dt / 4.0).unwrap();
    assert!(z.sup_l2_distance(&fine).unwrap() < 1e-9);
}

fn worst_l2_growth(n: usize) -> f64 {
    let g = make_grid(30.0, n).unwrap();
    let fc = bracket_coefficient(&g);
    (0..20)
        .map(|seed| {
            let v0 = WavePackets::random(seed, 3, 5.0, 3.0).sample(&g);
            let traj = propagator_trajectory(&fc, &v0, 0.5, 1e-3).unwrap();
            let n0 = v0.l2_norm();
            traj.steps()
                .iter()
                .map(|u| u.l2_norm() / n0)
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[test]
fn frozen_group_is_bounded_on_l2() {
    let coarse = worst_l2_growth(512);
    let fine = worst_l2_growth(1024);
    assert!(coarse.is_finite() && coarse >= 1.0 - 1e-12, "{coarse}");
    assert!(
        fine / coarse < 2.0 && coarse / fine < 2.0,
        "{coarse} {fine}"
    );
}

#[test]
fn frozen_group_runs_backwards() {
    let g = make_grid(30.0, 512).unwrap();
    let fc = bracket_coefficient(&g);
    let v0 = Field::from_fn(&g, |x| Complex64::from_polar((-0.5 * x * x).exp(), 2.0 * x));
    let there = propagator_w(&fc, &v0, 1.0, 1e-3).unwrap();
    let back = propagator_w(&fc, &there, -1.0, 1e-3).unwrap();
    assert!((&back - &v0).l2_norm() < 1e-8 * v0.l2_norm());
}

fn default_problem(n: usize) -> (Field, EquationSpec, XtNormParams) {
    let g = make_grid(30.0, n).unwrap();
    let u0 = decay_profile(Complex64::new(0.5, 0.0), 3, &g).unwrap();
    let spec = EquationSpec::new(MU_STAR, 1.0).unwrap();
    let class = ClassParams::measure(&u0, ClassExponents::for_alpha(1.0).unwrap()).unwrap();
    (u0, spec, XtNormParams::new(class, 0.02, 2e-4).unwrap())
}

#[test]
fn direct_solution_is_a_fixed_point_of_phi() {
    let (u0, spec, p) = default_problem(512);
    let u = evolve(&u0, p.duration, p.dt, Stepper::Ifrk4, &spec).unwrap();
    let fc = FrozenCoefficient::from_data(&u0, &spec, 2).unwrap();
    let image = phi_map(&u, &u0, &spec, &fc, &p).unwrap();
    let d = image.sup_l2_distance(&u).unwrap();
    assert!(d <= 1e-6, "{d}");
}

#[test]
fn picard_iterates_contract_to_the_direct_solution() {
    let (u0, spec, p) = default_problem(512);
    let out = picard_solve(&u0, &spec, &p, 1e-11, 25).unwrap();
    assert!(out.converged);
    let ratios = out.ratios();
    assert!(ratios.iter().take(3).all(|&r| r < 0.9), "{ratios:?}");
    let direct = evolve(&u0, p.duration, p.dt, Stepper::Ifrk4, &spec).unwrap();
    assert!(out.solution.sup_l2_distance(&direct).unwrap() < 1e-6);
    let lambda = p.class.lambda;
    assert!(out
        .history
        .iter()
        .all(|r| r.weighted_lower_bound >= 0.5 * lambda));
}

#[test]
fn one_iteration_when_tolerance_is_loose() {
    let (u0, spec, p) = default_problem(256);
    let out = picard_solve(&u0, &spec, &p, 1e3, 25).unwrap();
    assert_eq!(out.history.len(), 1);
    assert!(out.converged);
}
