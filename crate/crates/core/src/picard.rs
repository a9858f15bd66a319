//! The frozen-coefficient fixed-point map and Picard iteration.
//!
//! With `b = mu |u0|^a` the equation is rewritten as
//!
//! ```text
//! w_t = i w_xx + b w_x + mu (|v|^a - |u0|^a) v_x,    w(0) = u0,
//! ```
//!
//! and `Phi(v)` is its solution `W_b(t) u0 + int_0^t W_b(t - t') F(v)(t') dt'`.
//! The Picard iterates start from `v^0(t) = W_b(t) u0`.

use num_complex::Complex64;

use crate::diagnostics::{local_smoothing, weighted_l2, weighted_linf};
use crate::error::{Error, Result};
use crate::evolution::{
    evolve, frozen_evolve, propagator_trajectory, regularized_modulus_pow, rhs, step_count,
    EquationSpec, FrozenCoefficient, Stepper, Trajectory,
};
use crate::profiles::{weighted_inf, ClassParams};
use crate::spectral::{deriv, homogeneous_norm, sobolev_norm, weighted, Field};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XtNormParams {
    pub class: ClassParams,
    pub duration: f64,
    pub dt: f64,
}

impl XtNormParams {
    pub fn new(class: ClassParams, duration: f64, dt: f64) -> Result<Self> {
        step_count(duration, dt)?;
        if dt > duration {
            return Err(Error::config("dt", "must not exceed T"));
        }
        Ok(XtNormParams {
            class,
            duration,
            dt,
        })
    }

    pub fn steps(&self) -> usize {
        step_count(self.duration, self.dt).expect("validated on construction")
    }

    pub fn with_duration(&self, duration: f64) -> Result<Self> {
        Self::new(self.class, duration, self.dt)
    }
}

/// One entry per component of the contraction-space norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XtNormBreakdown {
    /// `sup_t ||v||_{s,2}`
    pub sobolev_sup: f64,
    /// `sup_t ||<x>^m v||_inf`
    pub weighted_inf_sup: f64,
    /// `sup_t sum_{j<=M} ||<x>^m d^{j+1} v||_2`
    pub weighted_deriv_sum: f64,
    /// `||d^{k+1} v||_{l^inf L^2(I_j x [0,T])}`
    pub smoothing: f64,
    /// `sup_t sum_{j<=1} ||<x>^m d_t d^j v||_2`
    pub time_deriv_sum: f64,
    /// `sup_t ||<x>^m (v - u0)||_inf`
    pub proximity: f64,
}

impl XtNormBreakdown {
    /// Components entering the ball radius (everything but `proximity`).
    pub fn ball_norm(&self) -> f64 {
        self.sobolev_sup + self.weighted_inf_sup + self.weighted_deriv_sum + self.smoothing
    }

    fn check_finite(self) -> Result<Self> {
        let named = [
            ("sobolev_sup", self.sobolev_sup),
            ("weighted_inf_sup", self.weighted_inf_sup),
            ("weighted_deriv_sum", self.weighted_deriv_sum),
            ("smoothing", self.smoothing),
            ("time_deriv_sum", self.time_deriv_sum),
            ("proximity", self.proximity),
        ];
        match named.iter().find(|(_, v)| !v.is_finite()) {
            Some((name, _)) => Err(Error::Overflow(format!("xt_norm component {name}"))),
            None => Ok(self),
        }
    }
}

fn check_covers(v: &Trajectory, p: &XtNormParams) -> Result<()> {
    if (v.final_time() - p.duration).abs() > 0.5 * v.dt() || v.t0() != 0.0 {
        return Err(Error::Precondition(format!(
            "trajectory covers [{}, {}], expected [0, {}]",
            v.t0(),
            v.final_time(),
            p.duration
        )));
    }
    Ok(())
}

/// All components of the contraction-space norm. Time derivatives come from
/// the equation, `d_t v = i v_xx + mu |v|^a v_x`, not from differencing.
pub fn xt_norm(
    v: &Trajectory,
    u0: &Field,
    spec: &EquationSpec,
    p: &XtNormParams,
) -> Result<XtNormBreakdown> {
    check_covers(v, p)?;
    let class = &p.class.exponents;
    let m = class.m;
    let mut out = XtNormBreakdown {
        sobolev_sup: 0.0,
        weighted_inf_sup: 0.0,
        weighted_deriv_sum: 0.0,
        smoothing: local_smoothing(v, class.k)?.sup,
        time_deriv_sum: 0.0,
        proximity: 0.0,
    };
    for snap in v.steps() {
        out.sobolev_sup = out.sobolev_sup.max(sobolev_norm(snap, class.s()));
        out.weighted_inf_sup = out.weighted_inf_sup.max(weighted_linf(snap, m));
        let mut sum = 0.0;
        for j in 0..=class.big_m {
            sum += weighted_l2(snap, m, j + 1)?;
        }
        out.weighted_deriv_sum = out.weighted_deriv_sum.max(sum);
        let vt = rhs(snap, spec)?;
        let td = weighted_l2(&vt, m, 0)? + weighted_l2(&vt, m, 1)?;
        out.time_deriv_sum = out.time_deriv_sum.max(td);
        out.proximity = out.proximity.max(weighted_linf(&(snap - u0), m));
    }
    out.check_finite()
}

/// `mu (|v|^a - |u0|^a) v_x` at every snapshot of `v`.
pub fn difference_forcing(v: &Trajectory, u0: &Field, spec: &EquationSpec) -> Result<Trajectory> {
    let base = regularized_modulus_pow(u0, spec.alpha, spec.epsilon);
    let mut steps = Vec::with_capacity(v.len());
    for snap in v.steps() {
        let diff = &regularized_modulus_pow(snap, spec.alpha, spec.epsilon) - &base;
        let f = (&diff * &deriv(snap, 1)?).scale(spec.mu);
        steps.push(if spec.dealias { f.dealiased() } else { f });
    }
    Trajectory::new(v.t0(), v.dt(), steps)
}

fn require_lower_bound(u0: &Field, m: u32) -> Result<f64> {
    let lambda = weighted_inf(u0, m);
    if !(lambda > 0.0) {
        return Err(Error::Precondition(format!(
            "inf <x>^{m} |u0| = {lambda:e}; the datum must be bounded below"
        )));
    }
    Ok(lambda)
}

/// `Phi(v)`: solves the frozen-coefficient problem with the difference
/// nonlinearity of `v` as forcing, on `v`'s time grid.
pub fn phi_map(
    v: &Trajectory,
    u0: &Field,
    spec: &EquationSpec,
    fc: &FrozenCoefficient,
    p: &XtNormParams,
) -> Result<Trajectory> {
    require_lower_bound(u0, p.class.m())?;
    check_covers(v, p)?;
    let forcing = difference_forcing(v, u0, spec)?;
    frozen_evolve(fc, u0, Some(&forcing), v.len() - 1, v.dt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// `sup_t ||v^{n} - v^{n-1}||_2`
    pub distance: f64,
    pub norms: XtNormBreakdown,
    /// `inf_{x,t} <x>^m |v^n|`
    pub weighted_lower_bound: f64,
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub solution: Trajectory,
    pub history: Vec<IterationRecord>,
    pub converged: bool,
}

impl PicardOutcome {
    /// `distance(n+1) / distance(n)` for consecutive iterations.
    pub fn ratios(&self) -> Vec<f64> {
        self.history
            .windows(2)
            .map(|w| w[1].distance / w[0].distance)
            .collect()
    }
}

fn lower_bound_over(v: &Trajectory, m: u32) -> f64 {
    v.steps()
        .iter()
        .map(|s| weighted_inf(s, m))
        .fold(f64::INFINITY, f64::min)
}

/// Iterates `v^{n+1} = Phi(v^n)` from `v^0 = W_b(t) u0` until the sup-t L²
/// distance drops to `tol` or `max_iter` maps have been applied.
pub fn picard_solve(
    u0: &Field,
    spec: &EquationSpec,
    p: &XtNormParams,
    tol: f64,
    max_iter: usize,
) -> Result<PicardOutcome> {
    spec.validate()?;
    require_lower_bound(u0, p.class.m())?;
    let fc = FrozenCoefficient::from_data(u0, spec, p.class.big_m())?;
    let mut current = propagator_trajectory(&fc, u0, p.duration, p.dt)?;
    let mut history = Vec::new();
    let mut rising = 0;
    let mut converged = false;
    for iteration in 1..=max_iter.max(1) {
        let next = phi_map(&current, u0, spec, &fc, p)?;
        let distance = next.sup_l2_distance(&current)?;
        if let Some(prev) = history.last().map(|r: &IterationRecord| r.distance) {
            rising = if distance > prev { rising + 1 } else { 0 };
        }
        history.push(IterationRecord {
            iteration,
            distance,
            norms: xt_norm(&next, u0, spec, p)?,
            weighted_lower_bound: lower_bound_over(&next, p.class.m()),
        });
        current = next;
        if rising >= 3 {
            return Err(Error::Divergence {
                iterations: iteration,
                last_distance: distance,
            });
        }
        if distance <= tol {
            converged = true;
            break;
        }
    }
    Ok(PicardOutcome {
        solution: current,
        history,
        converged,
    })
}

/// Relative `1e-3` smooth bump multiplying the datum, so the perturbed datum
/// keeps the weighted lower bound.
pub fn default_perturbation(u0: &Field) -> Field {
    u0.map_with_x(|x, c| c * (1e-3 * (-0.5 * (x - 1.0) * (x - 1.0)).exp()))
}

/// `||Phi(v1) - Phi(v2)|| / ||v1 - v2||` in sup-t L², with `v1 = W_b(t) u0`
/// and `v2 = W_b(t)(u0 + delta)`.
pub fn contraction_factor(
    u0: &Field,
    spec: &EquationSpec,
    p: &XtNormParams,
    delta: &Field,
) -> Result<f64> {
    if delta.sup_norm() == 0.0 {
        return Err(Error::Degenerate("perturbation is identically zero".into()));
    }
    require_lower_bound(u0, p.class.m())?;
    let fc = FrozenCoefficient::from_data(u0, spec, p.class.big_m())?;
    let v1 = propagator_trajectory(&fc, u0, p.duration, p.dt)?;
    let v2 = propagator_trajectory(&fc, &(u0 + delta), p.duration, p.dt)?;
    let denominator = v1.sup_l2_distance(&v2)?;
    if !(denominator > 0.0) {
        return Err(Error::Degenerate("perturbed trajectories coincide".into()));
    }
    let numerator =
        phi_map(&v1, u0, spec, &fc, p)?.sup_l2_distance(&phi_map(&v2, u0, spec, &fc, p)?)?;
    Ok(numerator / denominator)
}

/// `sum_{j=1}^{M+1} || |x|^m d^j f ||_2 + sum_{j=0}^{k} ||d^j f||_2`
pub fn triple_norm(f: &Field, class: &ClassParams) -> Result<f64> {
    let e = &class.exponents;
    let mut total = 0.0;
    for j in 1..=e.big_m + 1 {
        let d = deriv(f, j)?;
        total += d.map_with_x(|x, c| c * x.abs().powi(e.m as i32)).l2_norm();
    }
    for j in 0..=e.k {
        total += deriv(f, j)?.l2_norm();
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DependenceReport {
    pub triple_sup: f64,
    /// `sup_t ||D^{k+1/2} w||_2`
    pub half_derivative_sup: f64,
    pub smoothing: f64,
    pub weighted_sup: f64,
    pub time_deriv_sum: f64,
    /// Sum of the five solution-side terms for `w = u - v`.
    pub lhs: f64,
    /// `|||u0 - v0||| + ||u0 - v0||_{s,2}`
    pub rhs: f64,
}

impl DependenceReport {
    /// `None` when both data coincide.
    pub fn ratio(&self) -> Option<f64> {
        (self.rhs > 0.0).then(|| self.lhs / self.rhs)
    }
}

/// Solves both problems and compares the size of `u - v` with that of the data.
pub fn dependence_probe(
    u0: &Field,
    v0: &Field,
    spec: &EquationSpec,
    p: &XtNormParams,
) -> Result<DependenceReport> {
    let class = &p.class;
    let e = &class.exponents;
    require_lower_bound(u0, e.m)?;
    require_lower_bound(v0, e.m)?;
    let u = evolve(u0, p.duration, p.dt, Stepper::Ifrk4, spec)?;
    let v = evolve(v0, p.duration, p.dt, Stepper::Ifrk4, spec)?;
    let w = u.zip_with(&v, |a, b| a - b)?;
    let mut report = DependenceReport {
        triple_sup: 0.0,
        half_derivative_sup: 0.0,
        smoothing: local_smoothing(&w, e.k)?.sup,
        weighted_sup: 0.0,
        time_deriv_sum: 0.0,
        lhs: 0.0,
        rhs: 0.0,
    };
    for ((us, vs), ws) in u.steps().iter().zip(v.steps()).zip(w.steps()) {
        report.triple_sup = report.triple_sup.max(triple_norm(ws, class)?);
        report.half_derivative_sup = report.half_derivative_sup.max(homogeneous_norm(ws, e.s()));
        report.weighted_sup = report.weighted_sup.max(weighted_linf(ws, e.m));
        let wt = &rhs(us, spec)? - &rhs(vs, spec)?;
        let td =
            weighted(&wt, e.m as f64).l2_norm() + weighted(&deriv(&wt, 1)?, e.m as f64).l2_norm();
        report.time_deriv_sum = report.time_deriv_sum.max(td);
    }
    report.lhs = report.triple_sup
        + report.half_derivative_sup
        + report.smoothing
        + report.weighted_sup
        + report.time_deriv_sum;
    let d0 = u0 - v0;
    report.rhs = triple_norm(&d0, class)? + sobolev_norm(&d0, e.s());
    if !(report.lhs.is_finite() && report.rhs.is_finite()) {
        return Err(Error::Overflow("dependence probe".into()));
    }
    Ok(report)
}

/// `u0` scaled by `1 + eps`, the perturbation used by the dependence study.
pub fn scaled_datum(u0: &Field, eps: f64) -> Field {
    u0.scale(Complex64::new(1.0 + eps, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::MU_STAR;
    use crate::profiles::{decay_profile, ClassExponents};
    use crate::spectral::make_grid;

    fn small_setup() -> (Field, EquationSpec, XtNormParams) {
        let g = make_grid(15.0, 256).unwrap();
        let u0 = decay_profile(Complex64::new(0.5, 0.0), 3, &g).unwrap();
        let class = ClassParams::measure(&u0, ClassExponents::for_alpha(1.0).unwrap()).unwrap();
        let spec = EquationSpec::new(MU_STAR, 1.0).unwrap();
        let p = XtNormParams::new(class, 0.02, 1e-3).unwrap();
        (u0, spec, p)
    }

    #[test]
    fn constant_trajectory_has_zero_proximity() {
        let (u0, spec, p) = small_setup();
        let v = Trajectory::constant(&u0, 0.0, p.dt, p.steps() + 1).unwrap();
        let n = xt_norm(&v, &u0, &spec, &p).unwrap();
        assert_eq!(n.proximity, 0.0);
        assert!(n.sobolev_sup > 0.0 && n.smoothing > 0.0);
    }

    #[test]
    fn zero_trajectory_has_zero_norms() {
        let (u0, spec, p) = small_setup();
        let zero = Field::zeros(u0.grid());
        let v = Trajectory::constant(&zero, 0.0, p.dt, p.steps() + 1).unwrap();
        let n = xt_norm(&v, &zero, &spec, &p).unwrap();
        assert_eq!(n.ball_norm() + n.time_deriv_sum + n.proximity, 0.0);
    }

    #[test]
    fn phi_of_constant_trajectory_is_the_free_propagator() {
        let (u0, spec, p) = small_setup();
        let fc = FrozenCoefficient::from_data(&u0, &spec, 2).unwrap();
        let v = Trajectory::constant(&u0, 0.0, p.dt, p.steps() + 1).unwrap();
        let forcing = difference_forcing(&v, &u0, &spec).unwrap();
        assert!(forcing.steps().iter().all(|f| f.sup_norm() == 0.0));
        let phi = phi_map(&v, &u0, &spec, &fc, &p).unwrap();
        let w = propagator_trajectory(&fc, &u0, p.duration, p.dt).unwrap();
        assert!(phi.sup_l2_distance(&w).unwrap() < 1e-14);
    }

    #[test]
    fn phi_rejects_data_without_lower_bound() {
        let (u0, spec, p) = small_setup();
        let zero = Field::zeros(u0.grid());
        let fc = FrozenCoefficient::from_data(&zero, &spec, 2).unwrap();
        let v = Trajectory::constant(&zero, 0.0, p.dt, p.steps() + 1).unwrap();
        assert!(matches!(
            phi_map(&v, &zero, &spec, &fc, &p),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn loose_tolerance_stops_after_one_iteration() {
        let (u0, spec, p) = small_setup();
        let out = picard_solve(&u0, &spec, &p, 1e3, 10).unwrap();
        assert_eq!(out.history.len(), 1);
        assert!(out.converged);
    }

    #[test]
    fn zero_perturbation_is_degenerate() {
        let (u0, spec, p) = small_setup();
        assert!(matches!(
            contraction_factor(&u0, &spec, &p, &Field::zeros(u0.grid())),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn identical_data_have_zero_dependence() {
        let (u0, spec, p) = small_setup();
        let r = dependence_probe(&u0, &u0, &spec, &p).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.ratio(), None);
        let zero = Field::zeros(u0.grid());
        assert!(matches!(
            dependence_probe(&u0, &zero, &spec, &p),
            Err(Error::Precondition(_))
        ));
    }
}
