//! Weighted norms, local smoothing functionals and the inequality probes.
//!
//! The inequalities probed here carry non-explicit constants, so every probe
//! reports a ratio; callers test boundedness and stability under refinement.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evolution::{
    propagator_trajectory, propagator_w, rhs, unit_intervals, EquationSpec, FrozenCoefficient,
    Trajectory,
};
use crate::spectral::{
    deriv, homogeneous_norm, japanese_bracket, sobolev_norm, weighted, Field, Grid,
};

/// `||<x>^m d_x^j f||_2`
pub fn weighted_l2(f: &Field, m: u32, j: u32) -> Result<f64> {
    weighted_l2_real(f, m as f64, j)
}

/// As [`weighted_l2`] with a real weight exponent.
pub fn weighted_l2_real(f: &Field, m: f64, j: u32) -> Result<f64> {
    let d = deriv(f, j)?;
    Ok(weighted(&d, m).l2_norm())
}

/// `max_j <x_j>^m |f(x_j)|`
pub fn weighted_linf(f: &Field, m: u32) -> f64 {
    f.grid()
        .nodes()
        .iter()
        .zip(f.values())
        .map(|(&x, c)| japanese_bracket(x).powi(m as i32) * c.norm())
        .fold(0.0, f64::max)
}

/// `||f||_2^2`
pub fn mass(f: &Field) -> f64 {
    let n = f.l2_norm();
    n * n
}

/// Space-time L² norms of `d_x^{k+1} u` over the cells `[j, j+1] x [0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingReport {
    /// `(j, value)` for each unit interval meeting the box.
    pub intervals: Vec<(i64, f64)>,
    pub sup: f64,
    pub l1: f64,
}

impl SmoothingReport {
    pub fn value_at(&self, j: i64) -> Option<f64> {
        self.intervals
            .iter()
            .find(|(i, _)| *i == j)
            .map(|(_, v)| *v)
    }
}

/// `sup_j ||d_x^{order} u||_{L^2(I_j x [0,T])}` together with every cell
/// value; trapezoid rule in time.
pub fn space_time_cells(traj: &Trajectory, order: u32) -> Result<SmoothingReport> {
    let grid = traj.grid();
    if order > grid.max_derivative() {
        return Err(Error::config(
            "derivative order",
            format!(
                "local smoothing needs order {order}, grid allows {}",
                grid.max_derivative()
            ),
        ));
    }
    let cells = unit_intervals(grid);
    let mut acc = vec![0.0; cells.len()];
    let n = traj.len();
    for (step, u) in traj.steps().iter().enumerate() {
        if n == 1 {
            break;
        }
        let w = if step == 0 || step == n - 1 {
            0.5 * traj.dt()
        } else {
            traj.dt()
        };
        let d = deriv(u, order)?;
        for (slot, (_, range)) in acc.iter_mut().zip(&cells) {
            let s: f64 = d.values()[range.clone()].iter().map(|c| c.norm_sqr()).sum();
            *slot += w * s * grid.dx();
        }
    }
    let intervals: Vec<(i64, f64)> = cells
        .iter()
        .zip(acc)
        .map(|((j, _), v)| (*j, v.sqrt()))
        .collect();
    let sup = intervals.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let l1 = intervals.iter().map(|(_, v)| *v).sum();
    if !(sup.is_finite() && f64::is_finite(l1)) {
        return Err(Error::Overflow("local smoothing".into()));
    }
    Ok(SmoothingReport { intervals, sup, l1 })
}

/// Local smoothing functional for `d_x^{k+1} u`.
pub fn local_smoothing(traj: &Trajectory, k: u32) -> Result<SmoothingReport> {
    space_time_cells(traj, k + 1)
}

/// Components of the homogeneous smoothing estimate for the frozen flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KatoReport {
    /// `sup_t ||D^{1/2} u(t)||_2`
    pub sup_half_derivative: f64,
    /// `sup_j ||d_x u||_{L^2(I_j x [0,T])}`
    pub smoothing: f64,
    /// `||D^{1/2} v0||_2`
    pub data_norm: f64,
}

impl KatoReport {
    pub fn ratio(&self) -> f64 {
        (self.sup_half_derivative + self.smoothing) / self.data_norm
    }

    /// `sup_t ||D^{1/2} u(t)|| / ||D^{1/2} v0||`
    pub fn sup_half_ratio(&self) -> f64 {
        self.sup_half_derivative / self.data_norm
    }
}

pub fn kato_smoothing_report(
    v0: &Field,
    fc: &FrozenCoefficient,
    duration: f64,
    dt: f64,
) -> Result<KatoReport> {
    let data_norm = homogeneous_norm(v0, 0.5);
    if !(data_norm > 0.0) {
        return Err(Error::Degenerate(
            "smoothing ratio needs ||D^{1/2} v0|| > 0".into(),
        ));
    }
    let traj = propagator_trajectory(fc, v0, duration, dt)?;
    let sup_half_derivative = traj
        .steps()
        .iter()
        .map(|u| homogeneous_norm(u, 0.5))
        .fold(0.0, f64::max);
    let smoothing = space_time_cells(&traj, 1)?.sup;
    Ok(KatoReport {
        sup_half_derivative,
        smoothing,
        data_norm,
    })
}

/// `(sup_t ||D^{1/2} u|| + ||u_x||_{l^inf L^2}) / ||D^{1/2} v0||` for the frozen flow.
pub fn kato_smoothing_ratio(
    v0: &Field,
    fc: &FrozenCoefficient,
    duration: f64,
    dt: f64,
) -> Result<f64> {
    Ok(kato_smoothing_report(v0, fc, duration, dt)?.ratio())
}

/// Which line of the weighted/Bessel interpolation inequality to test.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpVariant {
    /// `||J^{ga}(<x>^{(1-g)b} f)|| <= c ||<x>^b f||^{1-g} ||J^a f||^g`
    BesselOfWeight,
    /// `||<x>^{ga} J^{(1-g)b} f|| <= c ||J^b f||^{1-g} ||<x>^a f||^g`
    WeightOfBessel,
}

fn ratio_or_degenerate(num: f64, den: f64) -> Result<f64> {
    if !(den > 0.0) || !den.is_finite() {
        return Err(Error::Degenerate(format!(
            "inequality denominator is {den:e}"
        )));
    }
    Ok(num / den)
}

/// Left side over right side (with unit constant) of the weighted/Bessel
/// interpolation inequality. `gamma = 1` is accepted as the closed endpoint.
pub fn interp_check_1(
    f: &Field,
    a: f64,
    b: f64,
    gamma: f64,
    variant: InterpVariant,
) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Parameter(format!(
            "a, b must be positive, got {a}, {b}"
        )));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::Parameter(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    let (num, den) = match variant {
        InterpVariant::BesselOfWeight => {
            let num = sobolev_norm(&weighted(f, (1.0 - gamma) * b), gamma * a);
            let den = weighted(f, b).l2_norm().powf(1.0 - gamma) * sobolev_norm(f, a).powf(gamma);
            (num, den)
        }
        InterpVariant::WeightOfBessel => {
            let inner = crate::spectral::bessel(f, (1.0 - gamma) * b)?;
            let num = weighted(&inner, gamma * a).l2_norm();
            let den = sobolev_norm(f, b).powf(1.0 - gamma) * weighted(f, a).l2_norm().powf(gamma);
            (num, den)
        }
    };
    ratio_or_degenerate(num, den)
}

/// `||<x>^k d^j f||^2` over the selected right side of the integration-by-parts
/// inequality, with unit constant. `variant` is 1, 2 or 3.
pub fn interp_check_2(f: &Field, k: u32, j: u32, variant: u8) -> Result<f64> {
    if k < 1 || j < 1 {
        return Err(Error::Parameter(format!(
            "k and j must be >= 1, got {k}, {j}"
        )));
    }
    let w = |p: u32, d: u32| weighted_l2(f, p, d);
    let lhs = w(k, j)?.powi(2);
    let lower = w(k - 1, j - 1)?.powi(2);
    let product = match variant {
        1 => w(k, j + 1)? * w(k, j - 1)?,
        2 => w(k - 1, j + 1)? * w(k + 1, j - 1)?,
        3 => w(k + 1, j + 1)? * w(k - 1, j - 1)?,
        other => {
            return Err(Error::Parameter(format!(
                "variant must be 1, 2 or 3, got {other}"
            )))
        }
    };
    ratio_or_degenerate(lhs, product + lower)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// `||W(t) u0 - u0||_inf` and its `<x>^m`-weighted version at each time.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub times: Vec<f64>,
    pub sup_differences: Vec<f64>,
    pub weighted_differences: Vec<f64>,
    pub slope: f64,
    pub weighted_slope: f64,
}

pub fn small_time_continuity(
    u0: &Field,
    fc: &FrozenCoefficient,
    times: &[f64],
    m: u32,
    dt: f64,
) -> Result<ContinuityReport> {
    let mut sup_differences = Vec::with_capacity(times.len());
    let mut weighted_differences = Vec::with_capacity(times.len());
    for &t in times {
        let diff = &propagator_w(fc, u0, t, dt)? - u0;
        sup_differences.push(diff.sup_norm());
        weighted_differences.push(weighted_linf(&diff, m));
    }
    Ok(ContinuityReport {
        times: times.to_vec(),
        slope: loglog_slope(times, &sup_differences),
        weighted_slope: loglog_slope(times, &weighted_differences),
        sup_differences,
        weighted_differences,
    })
}

/// `max_n ||(u_{n+1} - u_{n-1}) / (2 dt) - rhs(u_n)||_2` over interior snapshots.
pub fn residual(traj: &Trajectory, spec: &EquationSpec) -> Result<f64> {
    if traj.len() < 3 {
        return Err(Error::Precondition(
            "residual needs at least three snapshots".into(),
        ));
    }
    let steps = traj.steps();
    let mut worst: f64 = 0.0;
    for n in 1..steps.len() - 1 {
        let central = (&steps[n + 1] - &steps[n - 1]).scale(0.5 / traj.dt());
        worst = worst.max((&central - &rhs(&steps[n], spec)?).l2_norm());
    }
    Ok(worst)
}

/// A smooth, rapidly decaying random function defined independently of any
/// grid: a finite sum of Gaussian wave packets. Sampling the same packets on
/// finer grids is what makes refinement studies meaningful.
#[derive(Debug, Clone, PartialEq)]
pub struct WavePackets {
    packets: Vec<Packet>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Packet {
    amplitude: Complex64,
    centre: f64,
    width: f64,
    wavenumber: f64,
}

impl WavePackets {
    /// `count` packets with centres in `[-spread, spread]`, widths in
    /// `[0.5, 2]` and carrier wavenumbers in `[-kmax, kmax]`.
    pub fn random(seed: u64, count: usize, spread: f64, kmax: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let packets = (0..count.max(1))
            .map(|_| Packet {
                amplitude: Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                centre: rng.gen_range(-spread..=spread),
                width: rng.gen_range(0.5..2.0),
                wavenumber: rng.gen_range(-kmax..=kmax),
            })
            .collect();
        WavePackets { packets }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.packets
            .iter()
            .map(|p| {
                let z = (x - p.centre) / p.width;
                p.amplitude * Complex64::from_polar((-0.5 * z * z).exp(), p.wavenumber * x)
            })
            .sum()
    }

    pub fn sample(&self, grid: &Arc<Grid>) -> Field {
        Field::from_fn(grid, |x| self.eval(x))
    }

    /// Sample rescaled so that `||D^{1/2} f||_2 = 1` on this grid.
    pub fn sample_unit_half_norm(&self, grid: &Arc<Grid>) -> Result<Field> {
        let f = self.sample(grid);
        let n = homogeneous_norm(&f, 0.5);
        if !(n > 0.0) {
            return Err(Error::Degenerate(
                "random datum has zero H^1/2 seminorm".into(),
            ));
        }
        Ok(f.scale(1.0 / n))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{FrozenCoefficient, MU_STAR};
    use crate::profiles::decay_profile;
    use crate::spectral::make_grid;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn weighted_norm_examples() {
        let g = make_grid(40.0, 2048).unwrap();
        assert_eq!(weighted_l2(&Field::zeros(&g), 3, 2).unwrap(), 0.0);
        let f = decay_profile(c(1.0, 0.0), 3, &g).unwrap();
        // int_{-L}^{L} <x>^{-2} = 2 atan(L), which tends to pi as L grows
        let v = weighted_l2(&f, 2, 0).unwrap();
        assert!((v - (2.0 * 40f64.atan()).sqrt()).abs() < 1e-6, "{v}");
        assert!((v - PI.sqrt()).abs() < 0.015);
        let a = c(-0.7, 2.4);
        let scaled = weighted_l2(&f.scale(a), 2, 1).unwrap();
        assert!((scaled - 2.5 * weighted_l2(&f, 2, 1).unwrap()).abs() < 1e-12 * scaled);
    }

    #[test]
    fn weighted_linf_examples() {
        let g = make_grid(20.0, 512).unwrap();
        let f = decay_profile(c(0.0, -1.5), 4, &g).unwrap();
        assert!((weighted_linf(&f, 4) - 1.5).abs() < 1e-13);
        assert_eq!(weighted_linf(&Field::zeros(&g), 4), 0.0);
        let h = Field::from_real_fn(&g, |x| (-x * x).exp());
        let vals: Vec<f64> = (0..6).map(|m| weighted_linf(&h, m)).collect();
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn smoothing_of_zero_and_plane_wave() {
        let g = make_grid(8.0, 256).unwrap();
        let zero = Trajectory::constant(&Field::zeros(&g), 0.0, 0.1, 5).unwrap();
        let r = local_smoothing(&zero, 2).unwrap();
        assert!(r.sup == 0.0 && r.l1 == 0.0);

        // free flow of e^{i xi0 x}: modulus stays 1 on every cell
        let xi0 = 3.0 * PI / 8.0;
        let wave = Field::from_fn(&g, |x| Complex64::from_polar(1.0, xi0 * x));
        let t_end = 0.5;
        let traj = propagator_trajectory(&FrozenCoefficient::zero(&g), &wave, t_end, 0.05).unwrap();
        let k = 2;
        let r = local_smoothing(&traj, k).unwrap();
        let expected = xi0.powi(k as i32 + 1) * t_end.sqrt();
        assert_eq!(r.intervals.len(), 16);
        for (_, v) in &r.intervals {
            assert!((v - expected).abs() < 1e-10 * expected);
        }
        assert!((r.l1 - 16.0 * expected).abs() < 1e-9 * r.l1);
        assert!(local_smoothing(&traj, 8).is_err());
    }

    #[test]
    fn smoothing_report_single_cell_equality() {
        let g = make_grid(8.0, 256).unwrap();
        let bump = Field::from_real_fn(&g, |x| {
            let y = x - 0.5;
            if y.abs() < 0.45 {
                (-1.0 / (1.0 - (y / 0.45).powi(2))).exp()
            } else {
                0.0
            }
        });
        let traj = Trajectory::constant(&bump, 0.0, 0.1, 3).unwrap();
        let r = space_time_cells(&traj, 0).unwrap();
        assert_eq!(r.sup, r.l1);
        assert!(r.value_at(0).unwrap() > 0.0);
    }

    #[test]
    fn smoothing_translation_shifts_cells() {
        let g = make_grid(16.0, 512).unwrap();
        let packets = WavePackets::random(7, 3, 2.0, 2.0);
        let shifted = Field::from_fn(&g, |x| packets.eval(x - 3.0));
        let base = packets.sample(&g);
        let traj_a = Trajectory::constant(&base, 0.0, 0.1, 4).unwrap();
        let traj_b = Trajectory::constant(&shifted, 0.0, 0.1, 4).unwrap();
        let a = local_smoothing(&traj_a, 1).unwrap();
        let b = local_smoothing(&traj_b, 1).unwrap();
        for j in -8..8 {
            let (va, vb) = (a.value_at(j).unwrap(), b.value_at(j + 3).unwrap());
            assert!((va - vb).abs() < 1e-9 * a.sup, "cell {j}: {va} vs {vb}");
        }
    }

    #[test]
    fn kato_free_flow_isometry() {
        let g = make_grid(20.0, 256).unwrap();
        let xi0 = 5.0 * PI / 20.0;
        let wave = Field::from_fn(&g, |x| Complex64::from_polar(1.0, xi0 * x));
        let r = kato_smoothing_report(&wave, &FrozenCoefficient::zero(&g), 0.4, 0.01).unwrap();
        assert!((r.sup_half_ratio() - 1.0).abs() < 1e-12);
        assert!(r.ratio() >= 1.0);
        assert!(matches!(
            kato_smoothing_ratio(&Field::zeros(&g), &FrozenCoefficient::zero(&g), 0.4, 0.01),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn interp_1_endpoint_and_errors() {
        let g = make_grid(20.0, 512).unwrap();
        let f = WavePackets::random(3, 4, 4.0, 3.0).sample(&g);
        let r = interp_check_1(&f, 2.0, 2.0, 1.0, InterpVariant::BesselOfWeight).unwrap();
        assert!((r - 1.0).abs() < 1e-13);
        let r = interp_check_1(&f, 2.0, 2.0, 1.0, InterpVariant::WeightOfBessel).unwrap();
        assert!((r - 1.0).abs() < 1e-13);
        assert!(matches!(
            interp_check_1(
                &Field::zeros(&g),
                2.0,
                2.0,
                0.5,
                InterpVariant::BesselOfWeight
            ),
            Err(Error::Degenerate(_))
        ));
        assert!(interp_check_1(&f, 2.0, 2.0, 0.0, InterpVariant::BesselOfWeight).is_err());
    }

    #[test]
    fn interp_2_gaussian() {
        let g = make_grid(20.0, 512).unwrap();
        let f = Field::from_real_fn(&g, |x| (-x * x).exp());
        let r = interp_check_2(&f, 1, 1, 1).unwrap();
        assert!(r.is_finite() && r < 10.0, "{r}");
        assert!(matches!(
            interp_check_2(&Field::zeros(&g), 1, 1, 1),
            Err(Error::Degenerate(_))
        ));
        assert!(interp_check_2(&f, 1, 1, 4).is_err());
    }

    #[test]
    fn small_time_continuity_at_zero() {
        let g = make_grid(30.0, 512).unwrap();
        let u0 = decay_profile(c(0.5, 0.0), 3, &g).unwrap();
        let spec = EquationSpec::new(MU_STAR, 1.0).unwrap();
        let fc = FrozenCoefficient::from_data(&u0, &spec, 2).unwrap();
        let r = small_time_continuity(&u0, &fc, &[0.0], 3, 1e-4).unwrap();
        assert_eq!(r.sup_differences[0], 0.0);
        assert_eq!(r.weighted_differences[0], 0.0);
    }

    #[test]
    fn mass_and_residual() {
        let g = make_grid(10.0, 128).unwrap();
        assert_eq!(mass(&Field::zeros(&g)), 0.0);
        let spec = EquationSpec::new(MU_STAR, 1.0).unwrap();
        let short = Trajectory::constant(&Field::zeros(&g), 0.0, 0.1, 2).unwrap();
        assert!(residual(&short, &spec).is_err());
    }

    #[test]
    fn loglog_slope_of_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 3.0 * x.powf(1.5)).collect();
        assert!((loglog_slope(&xs, &ys) - 1.5).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn inequality_ratios_are_scale_invariant(
            seed in 0u64..1000,
            re in -3.0f64..3.0,
            im in 0.1f64..3.0,
        ) {
            let g = make_grid(20.0, 256).unwrap();
            let f = WavePackets::random(seed, 3, 4.0, 2.0).sample(&g);
            let a = c(re, im);
            let fa = f.scale(a);
            for variant in [InterpVariant::BesselOfWeight, InterpVariant::WeightOfBessel] {
                let r0 = interp_check_1(&f, 2.0, 2.0, 0.5, variant).unwrap();
                let r1 = interp_check_1(&fa, 2.0, 2.0, 0.5, variant).unwrap();
                prop_assert!((r0 - r1).abs() <= 1e-12 * r0);
            }
            for variant in 1..=3u8 {
                let r0 = interp_check_2(&f, 1, 1, variant).unwrap();
                let r1 = interp_check_2(&fa, 1, 1, variant).unwrap();
                prop_assert!((r0 - r1).abs() <= 1e-12 * r0);
            }
        }

        #[test]
        fn norms_are_absolutely_homogeneous(
            seed in 0u64..1000,
            re in -3.0f64..3.0,
            im in -3.0f64..3.0,
        ) {
            let g = make_grid(20.0, 256).unwrap();
            let f = WavePackets::random(seed, 3, 4.0, 2.0).sample(&g);
            let a = c(re, im);
            let fa = f.scale(a);
            let n = a.norm();
            let pairs = [
                (weighted_l2(&fa, 2, 1).unwrap(), weighted_l2(&f, 2, 1).unwrap()),
                (weighted_linf(&fa, 3), weighted_linf(&f, 3)),
                (sobolev_norm(&fa, 1.5), sobolev_norm(&f, 1.5)),
            ];
            for (lhs, rhs) in pairs {
                prop_assert!((lhs - n * rhs).abs() <= 1e-12 * (n * rhs).max(1e-300));
            }
        }
    }
}
