//! Solitary waves and the algebraically decaying data class.
//!
//! The solitary-wave family is
//!
//! ```text
//! psi(x, t) = phi(x - ct) exp i{ w t + (c/2)(x - ct) - 1/(a+2) int_{-inf}^{x-ct} phi^a }
//! ```
//!
//! with a `cosh` profile for `w > c^2/4` and an algebraic one on the
//! degenerate curve `w = c^2/4, c > 0`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::diagnostics::{weighted_l2, weighted_linf};
use crate::error::{Error, Result};
use crate::spectral::{japanese_bracket, sobolev_norm, Field, Grid};

/// Largest admissible `max |u(boundary)| / ||u||_inf` on a truncated box.
pub const BOUNDARY_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `omega > c^2 / 4`
    Generic,
    /// `omega = c^2 / 4`, `c > 0`
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveParams {
    omega: f64,
    speed: f64,
    alpha: f64,
    branch: Branch,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )))
    }
}

impl WaveParams {
    pub fn new(omega: f64, speed: f64, alpha: f64, branch: Branch) -> Result<Self> {
        check_alpha(alpha)?;
        if !(omega.is_finite() && speed.is_finite()) {
            return Err(Error::Parameter("omega and c must be finite".into()));
        }
        match branch {
            Branch::Generic if omega <= 0.25 * speed * speed => Err(Error::Parameter(format!(
                "generic branch needs omega > c^2/4, got omega = {omega}, c = {speed}"
            ))),
            Branch::Degenerate
                if speed <= 0.0
                    || (omega - 0.25 * speed * speed).abs() > 1e-12 * omega.abs().max(1.0) =>
            {
                Err(Error::Parameter(format!(
                    "degenerate branch needs omega = c^2/4 and c > 0, got omega = {omega}, c = {speed}"
                )))
            }
            _ => Ok(WaveParams {
                omega,
                speed,
                alpha,
                branch,
            }),
        }
    }

    pub fn generic(omega: f64, speed: f64, alpha: f64) -> Result<Self> {
        Self::new(omega, speed, alpha, Branch::Generic)
    }

    /// Degenerate wave with `omega = c^2 / 4`.
    pub fn degenerate(speed: f64, alpha: f64) -> Result<Self> {
        Self::new(0.25 * speed * speed, speed, alpha, Branch::Degenerate)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Exponential rate `(a/2) sqrt(4w - c^2)` of `phi^a` on the generic branch.
    fn rate(&self) -> f64 {
        0.5 * self.alpha * (4.0 * self.omega - self.speed * self.speed).sqrt()
    }

    /// `phi^a(y)`, evaluated without forming `cosh` explicitly.
    pub fn phi_pow_alpha(&self, y: f64) -> f64 {
        let (w, c, a) = (self.omega, self.speed, self.alpha);
        match self.branch {
            Branch::Generic => {
                let z = self.rate() * y.abs();
                let e = (-z).exp();
                // 4 sqrt(w) cosh(z) - 2c = e^z (2 sqrt(w)(1 + e^{-2z}) - 2c e^{-z})
                (2.0 + a) * (4.0 * w - c * c) * e / (2.0 * w.sqrt() * (1.0 + e * e) - 2.0 * c * e)
            }
            Branch::Degenerate => {
                let q = 0.5 * a * c * y;
                (a + 2.0) * c / (1.0 + q * q)
            }
        }
    }

    /// `phi'(y) / phi(y)`
    pub fn log_derivative(&self, y: f64) -> f64 {
        let (w, c, a) = (self.omega, self.speed, self.alpha);
        match self.branch {
            Branch::Generic => {
                let beta = self.rate();
                let z = beta * y.abs();
                let e = (-z).exp();
                let ratio = (1.0 - e * e) / ((1.0 + e * e) - (c / w.sqrt()) * e);
                -(beta / a) * y.signum() * ratio
            }
            Branch::Degenerate => {
                let q = 0.5 * a * c;
                -(1.0 / a) * 2.0 * q * q * y / (1.0 + q * q * y * y)
            }
        }
    }

    /// `int_{-inf}^{y} phi^a` for `y` in the far left tail.
    ///
    /// Generic branch: `phi^a ~ C e^{beta y}` with `C` fitted at `y`, so the
    /// tail is `phi^a(y) / beta`. Degenerate branch: closed form via `atan`.
    fn left_tail(&self, y: f64) -> f64 {
        match self.branch {
            Branch::Generic => self.phi_pow_alpha(y) / self.rate(),
            Branch::Degenerate => {
                let a = self.alpha;
                let z = 0.5 * a * self.speed * y;
                // atan(z) + pi/2, written to avoid cancellation for z << 0
                let angle = if z < 0.0 {
                    (-1.0 / z).atan()
                } else {
                    z.atan() + 0.5 * PI
                };
                2.0 * (a + 2.0) / a * angle
            }
        }
    }

    /// Cumulative `int_{-inf}^{y_j} phi^a` at `y_j = start + j * step`, by
    /// composite Simpson on each cell plus the analytic left tail.
    pub fn phase_integral(&self, start: f64, step: f64, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        let mut acc = self.left_tail(start);
        let mut left = self.phi_pow_alpha(start);
        for j in 0..count {
            if j > 0 {
                let y0 = start + (j - 1) as f64 * step;
                let y1 = start + j as f64 * step;
                let mid = self.phi_pow_alpha(0.5 * (y0 + y1));
                let right = self.phi_pow_alpha(y1);
                acc += step / 6.0 * (left + 4.0 * mid + right);
                left = right;
            }
            out.push(acc);
        }
        out
    }
}

/// Solitary-wave amplitude `phi_{w,c}(x)`.
pub fn phi(p: &WaveParams, x: f64) -> f64 {
    p.phi_pow_alpha(x).powf(1.0 / p.alpha)
}

/// Samples `psi_{w,c}(., t)` without the boundary guard.
pub fn solitary_wave_unguarded(p: &WaveParams, grid: &Arc<Grid>, t: f64) -> Field {
    let (w, c, a) = (p.omega, p.speed, p.alpha);
    let start = grid.nodes()[0] - c * t;
    let integral = p.phase_integral(start, grid.dx(), grid.len());
    let values = integral
        .iter()
        .enumerate()
        .map(|(j, &int)| {
            let y = start + j as f64 * grid.dx();
            let theta = w * t + 0.5 * c * y - int / (a + 2.0);
            Complex64::from_polar(phi(p, y), theta)
        })
        .collect();
    Field::new(Arc::clone(grid), values).expect("length matches grid")
}

/// Samples `psi_{w,c}(., t)`; fails when the wave is not negligible at the
/// box boundary.
pub fn solitary_wave(p: &WaveParams, grid: &Arc<Grid>, t: f64) -> Result<Field> {
    let field = solitary_wave_unguarded(p, grid, t);
    let ratio = field.boundary_ratio();
    if ratio > BOUNDARY_GUARD {
        return Err(Error::Truncation {
            amplitude: ratio,
            limit: BOUNDARY_GUARD,
        });
    }
    Ok(field)
}

/// Exact `d/dt psi_{w,c}(x_j, t)`.
pub fn solitary_time_derivative(p: &WaveParams, grid: &Arc<Grid>, t: f64) -> Field {
    let (w, c, a) = (p.omega, p.speed, p.alpha);
    let psi = solitary_wave_unguarded(p, grid, t);
    psi.map_with_x(|x, value| {
        let y = x - c * t;
        let factor = Complex64::new(
            -c * p.log_derivative(y),
            w - c * (0.5 * c - p.phi_pow_alpha(y) / (a + 2.0)),
        );
        factor * value
    })
}

/// `c0 <x>^{-m}`
pub fn decay_profile(c0: Complex64, m: u32, grid: &Arc<Grid>) -> Result<Field> {
    if c0 == Complex64::new(0.0, 0.0) {
        return Err(Error::Parameter(
            "decay profile amplitude must be nonzero".into(),
        ));
    }
    if m < 1 {
        return Err(Error::Parameter("decay exponent m must be >= 1".into()));
    }
    Ok(Field::from_fn(grid, |x| {
        c0 * japanese_bracket(x).powi(-(m as i32))
    }))
}

/// `min_j <x_j>^m |f(x_j)|`
pub fn weighted_inf(f: &Field, m: u32) -> f64 {
    f.grid()
        .nodes()
        .iter()
        .zip(f.values())
        .map(|(&x, c)| japanese_bracket(x).powi(m as i32) * c.norm())
        .fold(f64::INFINITY, f64::min)
}

/// Exponents of the data class: weight `m`, number of weighted derivatives
/// `M` and regularity index `k` (with `s = k + 1/2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassExponents {
    pub alpha: f64,
    pub m: u32,
    pub big_m: u32,
    pub k: u32,
}

/// Default number of weighted derivatives.
pub const DEFAULT_BIG_M: u32 = 2;

/// `floor(2/a + 1)`
pub fn default_weight_exponent(alpha: f64) -> u32 {
    // nudge so that exact reciprocals such as 2/(2/3) land on the integer
    (2.0 / alpha + 1.0 + 1e-12).floor() as u32
}

impl ClassExponents {
    /// `m = floor(2/a + 1)`, `M = 2`, `k = m + M + 1`.
    pub fn for_alpha(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let m = default_weight_exponent(alpha);
        Self::new(alpha, m, DEFAULT_BIG_M, m + DEFAULT_BIG_M + 1)
    }

    pub fn new(alpha: f64, m: u32, big_m: u32, k: u32) -> Result<Self> {
        check_alpha(alpha)?;
        if (m as f64) <= 1.0 / alpha {
            return Err(Error::Parameter(format!(
                "weight exponent m = {m} must exceed 1/alpha = {}",
                1.0 / alpha
            )));
        }
        if big_m < 1 {
            return Err(Error::Parameter("M must be a positive integer".into()));
        }
        if k < m + big_m + 1 {
            return Err(Error::Parameter(format!(
                "k = {k} must be at least m + M + 1 = {}",
                m + big_m + 1
            )));
        }
        Ok(ClassExponents { alpha, m, big_m, k })
    }

    pub fn s(&self) -> f64 {
        self.k as f64 + 0.5
    }

    /// Highest spatial derivative any class diagnostic needs.
    pub fn max_derivative_needed(&self) -> u32 {
        (self.k + 1).max(self.big_m + 2)
    }
}

/// `||f||_{s,2} + ||<x>^m f||_inf + sum_{j<=M} ||<x>^m d^{j+1} f||_2`
pub fn class_nu(f: &Field, p: &ClassExponents) -> Result<f64> {
    let mut nu = sobolev_norm(f, p.s()) + weighted_linf(f, p.m);
    for j in 0..=p.big_m {
        nu += weighted_l2(f, p.m, j + 1)?;
    }
    if nu.is_finite() {
        Ok(nu)
    } else {
        Err(Error::Overflow("class_nu".into()))
    }
}

/// Exponents together with the measured bounds `lambda` and `nu` of a datum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassParams {
    pub exponents: ClassExponents,
    pub lambda: f64,
    pub nu: f64,
}

impl ClassParams {
    pub fn new(exponents: ClassExponents, lambda: f64, nu: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::Precondition(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(lambda < nu) {
            return Err(Error::Parameter(format!(
                "lambda = {lambda} must be smaller than nu = {nu}"
            )));
        }
        Ok(ClassParams {
            exponents,
            lambda,
            nu,
        })
    }

    /// Measures `lambda = inf <x>^m |u0|` and `nu` for a datum.
    pub fn measure(u0: &Field, exponents: ClassExponents) -> Result<Self> {
        let lambda = weighted_inf(u0, exponents.m);
        let nu = class_nu(u0, &exponents)?;
        Self::new(exponents, lambda, nu)
    }

    pub fn m(&self) -> u32 {
        self.exponents.m
    }

    pub fn k(&self) -> u32 {
        self.exponents.k
    }

    pub fn big_m(&self) -> u32 {
        self.exponents.big_m
    }

    pub fn alpha(&self) -> f64 {
        self.exponents.alpha
    }

    pub fn s(&self) -> f64 {
        self.exponents.s()
    }
}
