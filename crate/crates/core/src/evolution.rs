//! Right-hand sides, time steppers, the frozen-coefficient propagator and the
//! Duhamel integral.
//!
//! Every stepper treats the dispersive part `i d_x^2` exactly in Fourier
//! space. What remains (the nonlinearity, or `b(x) d_x w + f` for the frozen
//! linear problem) is supplied through [`NonStiffPart`].

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::profiles::{check_alpha, solitary_time_derivative, solitary_wave, WaveParams};
use crate::spectral::{deriv, Field, Grid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// `mu |u|^a d_x u`
    Gdnls,
    /// `mu d_x(|u|^a u)`
    Divergence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationSpec {
    pub mu: Complex64,
    pub alpha: f64,
    pub form: Form,
    /// Regularisation of `|u|^a` near zeros of `u`.
    pub epsilon: f64,
    /// 2/3-rule truncation of the nonlinear term.
    pub dealias: bool,
}

impl EquationSpec {
    pub fn new(mu: Complex64, alpha: f64) -> Result<Self> {
        let spec = EquationSpec {
            mu,
            alpha,
            form: Form::Gdnls,
            epsilon: 0.0,
            dealias: false,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_form(mut self, form: Form) -> Self {
        self.form = form;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.epsilon = epsilon;
        self.validate()?;
        Ok(self)
    }

    pub fn with_dealias(mut self, dealias: bool) -> Self {
        self.dealias = dealias;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if (self.mu.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::Parameter(format!(
                "|mu| must be 1, got {}",
                self.mu.norm()
            )));
        }
        check_alpha(self.alpha)?;
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Parameter(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

/// `(|f|^2 + eps^2)^{a/2}` pointwise, exactly `|f|^a` for `eps = 0`.
pub fn regularized_modulus_pow(f: &Field, alpha: f64, epsilon: f64) -> Field {
    f.map(|c| {
        let m = if epsilon == 0.0 {
            c.norm().powf(alpha)
        } else {
            (c.norm_sqr() + epsilon * epsilon).powf(0.5 * alpha)
        };
        Complex64::new(m, 0.0)
    })
}

/// The nonlinear term alone, `mu |u|^a u_x` or `mu (|u|^a u)_x`.
pub fn nonlinear_term(u: &Field, spec: &EquationSpec) -> Result<Field> {
    let weight = regularized_modulus_pow(u, spec.alpha, spec.epsilon);
    let term = match spec.form {
        Form::Gdnls => (&weight * &deriv(u, 1)?).scale(spec.mu),
        Form::Divergence => deriv(&(&weight * u), 1)?.scale(spec.mu),
    };
    let term = if spec.dealias { term.dealiased() } else { term };
    term.ensure_finite("nonlinear term")
}

fn dispersive_term(u: &Field) -> Result<Field> {
    Ok(deriv(u, 2)?.scale(Complex64::i()))
}

/// `i u_xx + mu |u|^a u_x`
pub fn rhs_gdnls(u: &Field, spec: &EquationSpec) -> Result<Field> {
    let spec = EquationSpec {
        form: Form::Gdnls,
        ..*spec
    };
    Ok(&dispersive_term(u)? + &nonlinear_term(u, &spec)?)
}

/// `i u_xx + mu (|u|^a u)_x`
pub fn rhs_divergence(u: &Field, spec: &EquationSpec) -> Result<Field> {
    let spec = EquationSpec {
        form: Form::Divergence,
        ..*spec
    };
    Ok(&dispersive_term(u)? + &nonlinear_term(u, &spec)?)
}

/// Right-hand side of the form selected in `spec`.
pub fn rhs(u: &Field, spec: &EquationSpec) -> Result<Field> {
    Ok(&dispersive_term(u)? + &nonlinear_term(u, spec)?)
}

/// Frozen coefficient `b(x) = mu |u0(x)|^a` with its size proxies.
#[derive(Debug, Clone)]
pub struct FrozenCoefficient {
    b: Field,
    a1: f64,
    a2: f64,
}

impl FrozenCoefficient {
    /// `b = mu |u0|^a`, with `A1` summed over `M` derivatives.
    pub fn from_data(u0: &Field, spec: &EquationSpec, big_m: u32) -> Result<Self> {
        let b = regularized_modulus_pow(u0, spec.alpha, spec.epsilon).scale(spec.mu);
        Self::from_coefficient(b, big_m)
    }

    pub fn from_coefficient(b: Field, big_m: u32) -> Result<Self> {
        if !b.is_finite() {
            return Err(Error::Overflow("frozen coefficient".into()));
        }
        let a1 = c_m_norm(&b, big_m)?;
        let a2 = unit_interval_sup_sum(&b);
        Ok(FrozenCoefficient { b, a1, a2 })
    }

    pub fn zero(grid: &Arc<Grid>) -> Self {
        FrozenCoefficient {
            b: Field::zeros(grid),
            a1: 0.0,
            a2: 0.0,
        }
    }

    pub fn b(&self) -> &Field {
        &self.b
    }

    pub fn a1(&self) -> f64 {
        self.a1
    }

    pub fn a2(&self) -> f64 {
        self.a2
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.b.grid()
    }
}

fn c_m_norm(b: &Field, big_m: u32) -> Result<f64> {
    let mut total = 0.0;
    for k in 0..=big_m {
        total += deriv(b, k)?.sup_norm();
    }
    Ok(total)
}

/// Index ranges of the nodes in each unit interval `[j, j+1)` meeting the box.
pub fn unit_intervals(grid: &Grid) -> Vec<(i64, std::ops::Range<usize>)> {
    let mut out: Vec<(i64, std::ops::Range<usize>)> = Vec::new();
    for (idx, &x) in grid.nodes().iter().enumerate() {
        let j = x.floor() as i64;
        match out.last_mut() {
            Some((last, range)) if *last == j => range.end = idx + 1,
            _ => out.push((j, idx..idx + 1)),
        }
    }
    out
}

fn unit_interval_sup_sum(b: &Field) -> f64 {
    unit_intervals(b.grid())
        .into_iter()
        .map(|(_, range)| {
            b.values()[range]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max)
        })
        .sum()
}

/// `i w_xx + b w_x + forcing`
pub fn rhs_frozen(w: &Field, fc: &FrozenCoefficient, forcing: Option<&Field>) -> Result<Field> {
    w.ensure_same_grid(fc.b())?;
    let mut out = &dispersive_term(w)? + &(fc.b() * &deriv(w, 1)?);
    if let Some(f) = forcing {
        w.ensure_same_grid(f)?;
        out = &out + f;
    }
    out.ensure_finite("rhs_frozen")
}

/// Magnitudes entering the admissibility hypotheses on `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport {
    /// `sup_{x, 0 <= l <= 2L} |int_0^l Im b(x +- r) dr|`
    pub im_integral_sup: f64,
    /// `sum_{k <= M} ||b^(k)||_inf`
    pub a1: f64,
    /// `sum_j max_{[j, j+1)} |b|`
    pub a2: f64,
}

pub fn coefficient_admissibility(
    fc: &FrozenCoefficient,
    big_m: u32,
) -> Result<AdmissibilityReport> {
    let grid = fc.grid();
    let n = grid.len();
    let dx = grid.dx();
    let im: Vec<f64> = fc.b().values().iter().map(|c| c.im).collect();
    let mut sup: f64 = 0.0;
    if im.iter().any(|&v| v != 0.0) {
        for start in 0..n {
            for direction in [1isize, -1] {
                // trapezoid over l in [0, 2L], periodically continued
                let mut acc = 0.0;
                let mut prev = im[start];
                for step in 1..=n as isize {
                    let idx = (start as isize + direction * step).rem_euclid(n as isize) as usize;
                    acc += 0.5 * dx * (prev + im[idx]);
                    prev = im[idx];
                    sup = sup.max(acc.abs());
                }
            }
        }
    }
    Ok(AdmissibilityReport {
        im_integral_sup: sup,
        a1: c_m_norm(fc.b(), big_m)?,
        a2: unit_interval_sup_sum(fc.b()),
    })
}

/// Time-indexed snapshots `u(t0 + n dt)`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    grid: Arc<Grid>,
    t0: f64,
    dt: f64,
    steps: Vec<Field>,
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, steps: Vec<Field>) -> Result<Self> {
        let first = steps
            .first()
            .ok_or_else(|| Error::Precondition("trajectory needs at least one snapshot".into()))?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Parameter(format!(
                "trajectory dt must be positive, got {dt}"
            )));
        }
        for s in &steps {
            first.ensure_same_grid(s)?;
        }
        Ok(Trajectory {
            grid: Arc::clone(first.grid()),
            t0,
            dt,
            steps,
        })
    }

    /// `v(t) = v0` for every sample time.
    pub fn constant(field: &Field, t0: f64, dt: f64, count: usize) -> Result<Self> {
        Self::new(t0, dt, vec![field.clone(); count.max(1)])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> &[Field] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn final_time(&self) -> f64 {
        self.time(self.steps.len() - 1)
    }

    pub fn last(&self) -> &Field {
        self.steps.last().expect("non-empty trajectory")
    }

    pub fn max_amplitudes(&self) -> Vec<f64> {
        self.steps.iter().map(Field::sup_norm).collect()
    }

    pub fn boundary_guard(&self) -> Vec<f64> {
        self.steps.iter().map(Field::boundary_ratio).collect()
    }

    pub fn map(&self, f: impl Fn(&Field) -> Field) -> Trajectory {
        Trajectory {
            grid: Arc::clone(&self.grid),
            t0: self.t0,
            dt: self.dt,
            steps: self.steps.iter().map(f).collect(),
        }
    }

    /// Snapshot-wise combination of two trajectories on the same time grid.
    pub fn zip_with(
        &self,
        other: &Trajectory,
        f: impl Fn(&Field, &Field) -> Field,
    ) -> Result<Trajectory> {
        self.check_compatible(other)?;
        Ok(Trajectory {
            grid: Arc::clone(&self.grid),
            t0: self.t0,
            dt: self.dt,
            steps: self
                .steps
                .iter()
                .zip(&other.steps)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn check_compatible(&self, other: &Trajectory) -> Result<()> {
        if self.len() != other.len()
            || (self.dt - other.dt).abs() > 1e-12 * self.dt
            || (self.t0 - other.t0).abs() > 1e-12 * self.dt
        {
            return Err(Error::Shape(format!(
                "trajectories differ in time grid: {} x {} vs {} x {}",
                self.len(),
                self.dt,
                other.len(),
                other.dt
            )));
        }
        self.steps[0].ensure_same_grid(&other.steps[0])
    }

    /// `max_n ||a(t_n) - b(t_n)||_2`
    pub fn sup_l2_distance(&self, other: &Trajectory) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(self
            .steps
            .iter()
            .zip(&other.steps)
            .map(|(a, b)| (a - b).l2_norm())
            .fold(0.0, f64::max))
    }

    /// Cubic Lagrange interpolation in time through the four nearest samples.
    pub fn interpolate(&self, t: f64) -> Field {
        let n = self.steps.len();
        let pos = (t - self.t0) / self.dt;
        let nearest = pos.round();
        if (pos - nearest).abs() < 1e-9 && nearest >= 0.0 && (nearest as usize) < n {
            return self.steps[nearest as usize].clone();
        }
        if n == 1 {
            return self.steps[0].clone();
        }
        if n < 4 {
            let i = (pos.floor().max(0.0) as usize).min(n - 2);
            let s = pos - i as f64;
            return self.steps[i].scale(1.0 - s).axpy(s, &self.steps[i + 1]);
        }
        let base = (pos.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let s = pos - base as f64;
        let nodes = [0.0, 1.0, 2.0, 3.0];
        let mut out = Field::zeros(&self.grid);
        for (i, &xi) in nodes.iter().enumerate() {
            let w: f64 = nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &xj)| (s - xj) / (xi - xj))
                .product();
            out = out.axpy(w, &self.steps[base + i]);
        }
        out
    }
}

/// Failed run: the error plus every snapshot accepted before it.
#[derive(Debug, Clone)]
pub struct EvolveFailure {
    pub partial: Option<Trajectory>,
    pub error: Error,
}

impl From<EvolveFailure> for Error {
    fn from(f: EvolveFailure) -> Self {
        f.error
    }
}

impl std::fmt::Display for EvolveFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let kept = self.partial.as_ref().map_or(0, Trajectory::len);
        write!(f, "{} ({} snapshots kept)", self.error, kept)
    }
}

/// The part of the right-hand side integrated explicitly.
pub trait NonStiffPart {
    fn eval(&self, u: &Field, t: f64) -> Result<Field>;
}

/// `mu |u|^a u_x` (or the divergence form) of the nonlinear equation.
pub struct Nonlinearity<'a>(pub &'a EquationSpec);

impl NonStiffPart for Nonlinearity<'_> {
    fn eval(&self, u: &Field, _t: f64) -> Result<Field> {
        nonlinear_term(u, self.0)
    }
}

/// `b(x) w_x + f(x, t)` with the forcing interpolated from a trajectory.
pub struct FrozenPart<'a> {
    pub coefficient: &'a FrozenCoefficient,
    pub forcing: Option<&'a Trajectory>,
}

impl NonStiffPart for FrozenPart<'_> {
    fn eval(&self, w: &Field, t: f64) -> Result<Field> {
        let mut out = self.coefficient.b() * &deriv(w, 1)?;
        if let Some(f) = self.forcing {
            out = &out + &f.interpolate(t);
        }
        out.ensure_finite("frozen right-hand side")
    }
}

/// Pure dispersion: nothing besides `i d_x^2`.
pub struct NoPart;

impl NonStiffPart for NoPart {
    fn eval(&self, u: &Field, _t: f64) -> Result<Field> {
        Ok(Field::zeros(u.grid()))
    }
}

/// Cached `e^{-i xi^2 tau}` factors for a fixed sub-step `tau`.
struct LinearFlow {
    factors: Vec<Complex64>,
}

impl LinearFlow {
    fn new(grid: &Grid, tau: f64) -> Self {
        LinearFlow {
            factors: grid
                .wavenumbers()
                .iter()
                .map(|&xi| Complex64::from_polar(1.0, -xi * xi * tau))
                .collect(),
        }
    }

    fn apply(&self, f: &Field) -> Field {
        let grid = f.grid();
        let mut buf = f.values().to_vec();
        grid.forward_in_place(&mut buf);
        buf.iter_mut().zip(&self.factors).for_each(|(c, e)| *c *= e);
        grid.inverse_in_place(&mut buf);
        Field::new(Arc::clone(grid), buf).expect("same length")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepper {
    /// Second-order splitting: half linear, RK4 nonlinear, half linear.
    Strang,
    /// Integrating-factor (Lawson) fourth-order Runge-Kutta.
    Ifrk4,
}

impl Stepper {
    pub fn order(self) -> u32 {
        match self {
            Stepper::Strang => 2,
            Stepper::Ifrk4 => 4,
        }
    }
}

/// One step of size `h` from time `t`, reusing the cached half-step flow.
struct StepKernel {
    half: LinearFlow,
    h: f64,
}

impl StepKernel {
    fn new(grid: &Grid, h: f64) -> Self {
        StepKernel {
            half: LinearFlow::new(grid, 0.5 * h),
            h,
        }
    }

    fn ifrk4(&self, u: &Field, t: f64, part: &dyn NonStiffPart) -> Result<Field> {
        let h = self.h;
        let e = &self.half;
        let k1 = part.eval(u, t)?;
        let u_half = e.apply(u);
        let k1_half = e.apply(&k1);
        let k2 = part.eval(&u_half.axpy(0.5 * h, &k1_half), t + 0.5 * h)?;
        let k3 = part.eval(&u_half.axpy(0.5 * h, &k2), t + 0.5 * h)?;
        let k4 = part.eval(&e.apply(&u_half.axpy(h, &k3)), t + h)?;
        let combo = u_half.zip_with(&k1_half, |a, b| a + (h / 6.0) * b);
        let combo = combo.zip_with(&(&k2 + &k3), |a, b| a + (h / 3.0) * b);
        Ok(e.apply(&combo).axpy(h / 6.0, &k4))
    }

    fn strang(&self, u: &Field, t: f64, part: &dyn NonStiffPart) -> Result<Field> {
        let h = self.h;
        let u1 = self.half.apply(u);
        let k1 = part.eval(&u1, t)?;
        let k2 = part.eval(&u1.axpy(0.5 * h, &k1), t + 0.5 * h)?;
        let k3 = part.eval(&u1.axpy(0.5 * h, &k2), t + 0.5 * h)?;
        let k4 = part.eval(&u1.axpy(h, &k3), t + h)?;
        let incr = (&(&k1 + &k4) + &(&k2 + &k3).scale(2.0)).scale(h / 6.0);
        Ok(self.half.apply(&(&u1 + &incr)))
    }

    fn step(&self, stepper: Stepper, u: &Field, t: f64, part: &dyn NonStiffPart) -> Result<Field> {
        match stepper {
            Stepper::Strang => self.strang(u, t, part),
            Stepper::Ifrk4 => self.ifrk4(u, t, part),
        }
    }
}

/// One IFRK4 step of size `dt` (negative `dt` runs backwards).
pub fn step_ifrk4(u: &Field, t: f64, dt: f64, part: &dyn NonStiffPart) -> Result<Field> {
    StepKernel::new(u.grid(), dt)
        .ifrk4(u, t, part)?
        .ensure_finite("step_ifrk4")
}

/// One Strang splitting step of the nonlinear equation.
pub fn step_strang(u: &Field, dt: f64, spec: &EquationSpec) -> Result<Field> {
    step_strang_with(u, 0.0, dt, &Nonlinearity(spec))
}

pub fn step_strang_with(u: &Field, t: f64, dt: f64, part: &dyn NonStiffPart) -> Result<Field> {
    StepKernel::new(u.grid(), dt)
        .strang(u, t, part)?
        .ensure_finite("step_strang")
}

/// Number of steps of size `dt` covering `duration`; `dt` must divide it.
pub fn step_count(duration: f64, dt: f64) -> Result<usize> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::config(
            "T",
            format!("must be positive, got {duration}"),
        ));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::config("dt", format!("must be positive, got {dt}")));
    }
    let n = (duration / dt).round();
    if n < 1.0 || (n * dt - duration).abs() > 1e-9 * duration {
        return Err(Error::config(
            "dt",
            format!("dt = {dt} does not divide T = {duration}"),
        ));
    }
    Ok(n as usize)
}

/// Advances `u0` by `n_steps` steps of size `h`, keeping every `stride`-th
/// snapshot (always including the first and last).
pub fn integrate(
    u0: &Field,
    t0: f64,
    h: f64,
    n_steps: usize,
    stepper: Stepper,
    part: &dyn NonStiffPart,
    stride: usize,
) -> std::result::Result<Trajectory, EvolveFailure> {
    let stride = stride.max(1);
    let kernel = StepKernel::new(u0.grid(), h);
    let mut snapshots = vec![u0.clone()];
    let mut u = u0.clone();
    let recorded_dt = h.abs() * stride as f64;
    let fail = |snapshots: Vec<Field>, error: Error| EvolveFailure {
        partial: Trajectory::new(t0, recorded_dt, snapshots).ok(),
        error,
    };
    for n in 0..n_steps {
        let t = t0 + n as f64 * h;
        let next = match kernel.step(stepper, &u, t, part) {
            Ok(v) if v.is_finite() => v,
            Ok(_) => {
                return Err(fail(
                    snapshots,
                    Error::StepFailure {
                        step: n + 1,
                        time: t + h,
                        reason: "non-finite values".into(),
                    },
                ))
            }
            Err(e) => {
                return Err(fail(
                    snapshots,
                    Error::StepFailure {
                        step: n + 1,
                        time: t + h,
                        reason: e.to_string(),
                    },
                ))
            }
        };
        u = next;
        if (n + 1) % stride == 0 || n + 1 == n_steps {
            snapshots.push(u.clone());
        }
    }
    Trajectory::new(t0, recorded_dt, snapshots).map_err(|error| EvolveFailure {
        partial: None,
        error,
    })
}

/// Solves the nonlinear equation on `[0, T]`, keeping every step.
pub fn evolve(
    u0: &Field,
    duration: f64,
    dt: f64,
    stepper: Stepper,
    spec: &EquationSpec,
) -> std::result::Result<Trajectory, EvolveFailure> {
    evolve_with_stride(u0, duration, dt, stepper, spec, 1)
}

/// As [`evolve`], recording every `stride`-th step (stride must divide the step count).
pub fn evolve_with_stride(
    u0: &Field,
    duration: f64,
    dt: f64,
    stepper: Stepper,
    spec: &EquationSpec,
    stride: usize,
) -> std::result::Result<Trajectory, EvolveFailure> {
    let setup = || -> Result<usize> {
        spec.validate()?;
        let n = step_count(duration, dt)?;
        if n % stride.max(1) != 0 {
            return Err(Error::config(
                "stride",
                format!("{stride} does not divide the {n} steps"),
            ));
        }
        Ok(n)
    };
    let n = setup().map_err(|error| EvolveFailure {
        partial: None,
        error,
    })?;
    integrate(u0, 0.0, dt, n, stepper, &Nonlinearity(spec), stride)
}

/// `W_b(t) v0`: the frozen linear flow, by IFRK4 with steps of at most `dt`.
/// Negative `t` runs the group backwards.
pub fn propagator_w(fc: &FrozenCoefficient, v0: &Field, t: f64, dt: f64) -> Result<Field> {
    v0.ensure_same_grid(fc.b())?;
    if t == 0.0 {
        return Ok(v0.clone());
    }
    if !(dt > 0.0) {
        return Err(Error::config("dt", format!("must be positive, got {dt}")));
    }
    let n = (t.abs() / dt).ceil().max(1.0) as usize;
    let h = t / n as f64;
    let part = FrozenPart {
        coefficient: fc,
        forcing: None,
    };
    let traj = integrate(v0, 0.0, h, n, Stepper::Ifrk4, &part, n)?;
    Ok(traj.last().clone())
}

/// Trajectory `t -> W_b(t) v0` on `[0, T]` with step `dt`.
pub fn propagator_trajectory(
    fc: &FrozenCoefficient,
    v0: &Field,
    duration: f64,
    dt: f64,
) -> Result<Trajectory> {
    let n = step_count(duration, dt)?;
    frozen_evolve(fc, v0, None, n, dt)
}

/// Solves `w_t = i w_xx + b w_x + f`, `w(0) = w0`, with `n` steps of `dt`.
pub fn frozen_evolve(
    fc: &FrozenCoefficient,
    w0: &Field,
    forcing: Option<&Trajectory>,
    n_steps: usize,
    dt: f64,
) -> Result<Trajectory> {
    w0.ensure_same_grid(fc.b())?;
    let part = FrozenPart {
        coefficient: fc,
        forcing,
    };
    Ok(integrate(w0, 0.0, dt, n_steps, Stepper::Ifrk4, &part, 1)?)
}

/// `z(t) = int_0^t W_b(t - t') f(t') dt'` on the forcing's time grid, by
/// integrating `z_t = i z_xx + b z_x + f`, `z(0) = 0` with sub-steps of at
/// most `dt`.
pub fn duhamel(fc: &FrozenCoefficient, forcing: &Trajectory, dt: f64) -> Result<Trajectory> {
    forcing.steps()[0].ensure_same_grid(fc.b())?;
    if !(dt > 0.0) {
        return Err(Error::config("dt", format!("must be positive, got {dt}")));
    }
    let sub = (forcing.dt() / dt).round().max(1.0) as usize;
    if ((sub as f64) * dt - forcing.dt()).abs() > 1e-9 * forcing.dt() {
        return Err(Error::config(
            "dt",
            format!(
                "{dt} does not divide the forcing sample spacing {}",
                forcing.dt()
            ),
        ));
    }
    let n = (forcing.len() - 1) * sub;
    let z0 = Field::zeros(fc.grid());
    if n == 0 {
        return Trajectory::new(forcing.t0(), forcing.dt(), vec![z0]);
    }
    let part = FrozenPart {
        coefficient: fc,
        forcing: Some(forcing),
    };
    let traj = integrate(&z0, forcing.t0(), dt, n, Stepper::Ifrk4, &part, sub)?;
    Ok(traj)
}

/// Sup-norm residual `|d_t psi - rhs(psi)|` of the exact solitary wave at `t = 0`.
pub fn solitary_residual(p: &WaveParams, grid: &Arc<Grid>, spec: &EquationSpec) -> Result<f64> {
    let psi = solitary_wave(p, grid, 0.0)?;
    let dt_psi = solitary_time_derivative(p, grid, 0.0);
    Ok((&dt_psi - &rhs(&psi, spec)?).sup_norm())
}

/// The four unit candidates `+1, -1, +i, -i` for the coefficient `mu`.
pub const MU_CANDIDATES: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(0.0, -1.0),
];

/// Outcome of the sign-convention probe.
#[derive(Debug, Clone, PartialEq)]
pub struct MuDetermination {
    pub residuals: Vec<(Complex64, f64)>,
    pub mu_star: Complex64,
    pub best_residual: f64,
    /// Smallest residual among the rejected candidates.
    pub runner_up: f64,
}

/// Picks the unit `mu` for which the solitary wave `p` solves the equation.
pub fn determine_mu_star(p: &WaveParams, grid: &Arc<Grid>) -> Result<MuDetermination> {
    let mut residuals = Vec::with_capacity(MU_CANDIDATES.len());
    for mu in MU_CANDIDATES {
        let spec = EquationSpec::new(mu, p.alpha())?;
        residuals.push((mu, solitary_residual(p, grid, &spec)?));
    }
    let mut sorted = residuals.clone();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
    Ok(MuDetermination {
        mu_star: sorted[0].0,
        best_residual: sorted[0].1,
        runner_up: sorted[1].1,
        residuals,
    })
}

/// The sign convention determined by the residual probe: `mu* = -1`.
pub const MU_STAR: Complex64 = Complex64::new(-1.0, 0.0);
