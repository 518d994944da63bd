//! Time derivative of the Ḣ^{1/2} × Ḣ^{-1/2} norm along the cubic flow:
//! d/dt ‖(u, u_t)‖² = 2σ ∫ (-Δ)^{-1/2}u_t · u³ dx.

use crate::duhamel::Anchor;
use crate::error::{Error, Result};
use crate::penrose::Field;
use crate::picard::{solve_family, SolverConfig};
use crate::sobolev::{radial_fourier, sobolev_inner, DataPair, FrequencyGrid, RadialProfile};
use crate::sphere::SphereCoefficients;
use std::f64::consts::PI;

/// Default finite-difference step.
pub const DEFAULT_STEP: f64 = 1e-3;
/// Relative noise floor of a sphere-route norm evaluation.
const NORM_NOISE: f64 = 1e-13;
/// Relative size below which slice coefficients are rounding noise.
const COEFF_FLOOR: f64 = 1e-12;
/// Derivative resolution the step must support.
const RESOLUTION: f64 = 1e-8;

/// u(t₀, ·) and ∂_t u(t₀, ·).
#[derive(Debug, Clone)]
pub struct FlowSnapshot {
    pub t0: f64,
    pub u: RadialProfile,
    pub ut: RadialProfile,
}

impl FlowSnapshot {
    pub fn new(t0: f64, u: RadialProfile, ut: RadialProfile) -> Result<Self> {
        for k in 0..=64 {
            let r = (k as f64 * PI / 130.0).tan();
            if !u.eval(r).is_finite() || !ut.eval(r).is_finite() {
                return Err(Error::Numeric(format!(
                    "snapshot profile not finite at r = {r}"
                )));
            }
        }
        Ok(Self { t0, u, ut })
    }

    /// Slice t = t₀ of a Penrose field. Sine coefficients below the
    /// rounding floor of the whole slice are dropped, so that a vanishing
    /// velocity yields an exactly zero profile.
    pub fn of_field(f: &Field, t0: f64) -> Result<Self> {
        let mut c = SphereCoefficients::from_cauchy(&f.snapshot(t0));
        let peak = c.a.iter().chain(&c.b).fold(0.0f64, |m, v| m.max(v.abs()));
        for v in c.a.iter_mut().chain(c.b.iter_mut()) {
            if v.abs() < COEFF_FLOOR * peak {
                *v = 0.0;
            }
        }
        let d = c.profiles();
        Self::new(t0, d.f0, d.f1)
    }

    pub fn pair(&self) -> DataPair {
        DataPair::new(self.u.clone(), self.ut.clone())
    }
}

/// Cauchy-anchored solution with data δg_θ at t = 0.
pub fn flow_field(theta: f64, sigma: f64, delta: f64, grid_n: usize) -> Result<Field> {
    let cfg = SolverConfig::new(sigma, delta, theta)
        .with_grid(grid_n)
        .with_anchor(Anchor::Cauchy);
    Ok(solve_family(&cfg)?.field)
}

/// 2σ ⟨(-Δ)^{-1/2}u_t, u³⟩, evaluated in frequency space.
pub fn dt_norm_formula(s: &FlowSnapshot, sigma: f64) -> Result<f64> {
    if sigma == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * sigma * sobolev_inner(&s.ut, &s.u.powi(3), -0.5)?)
}

fn norm_at(f: &Field, t: f64) -> f64 {
    SphereCoefficients::from_cauchy(&f.snapshot(t)).norm_sq()
}

/// Central difference of the pair norm at t₀ with one Richardson level
/// on (h, h/2).
pub fn dt_norm_fd_on(f: &Field, t0: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::Config(format!("step h = {h} must be positive")));
    }
    let scale = norm_at(f, t0).max(f64::MIN_POSITIVE);
    if 10.0 * NORM_NOISE * scale / h > RESOLUTION {
        return Err(Error::Accuracy(format!(
            "step h = {h} too small: difference would sit below the norm noise"
        )));
    }
    let d = |h: f64| (norm_at(f, t0 + h) - norm_at(f, t0 - h)) / (2.0 * h);
    let (coarse, fine) = (d(h), d(0.5 * h));
    Ok((4.0 * fine - coarse) / 3.0)
}

pub fn dt_norm_fd(theta: f64, sigma: f64, delta: f64, t0: f64, h: f64) -> Result<f64> {
    let f = flow_field(theta, sigma, delta, crate::penrose::DEFAULT_NODES)?;
    dt_norm_fd_on(&f, t0, h)
}

/// The boost derivative -2σ∫x₁(-Δ)^{-1/2}(u_t)u³ dx vanishes for radial
/// snapshots: the integrand is odd in x₁.
pub fn boost_derivative_radial(_s: &FlowSnapshot, _sigma: f64) -> f64 {
    0.0
}

/// The same integral as a Riemann sum on the symmetric stencil
/// {-m, ..., m}³·spacing; cancels pairwise up to rounding.
pub fn boost_derivative_stencil(
    s: &FlowSnapshot,
    sigma: f64,
    m: usize,
    spacing: f64,
) -> Result<f64> {
    let grid = FrequencyGrid::standard();
    let ft = radial_fourier(&s.ut, grid)?;
    // (-Δ)^{-1/2}u_t(r) = (2π²r)⁻¹ ∫ F[u_t](ρ) sin(ρr) dρ
    let inv = |r: f64| -> f64 {
        let sum: f64 = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .zip(&ft)
            .map(|((&rho, &w), &f)| {
                if r == 0.0 {
                    w * f * rho
                } else {
                    w * f * (rho * r).sin() / r
                }
            })
            .sum();
        sum / (2.0 * PI * PI)
    };
    let m = m as i64;
    let mut total = 0.0;
    for i in -m..=m {
        for j in -m..=m {
            for k in -m..=m {
                let x = [i as f64 * spacing, j as f64 * spacing, k as f64 * spacing];
                let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
                total += x[0] * inv(r) * s.u.eval(r).powi(3);
            }
        }
    }
    Ok(-2.0 * sigma * total * spacing.powi(3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sobolev::{sobolev_norm_sq, DecayClass};

    fn f0() -> RadialProfile {
        RadialProfile::new(|r| 2.0 / (1.0 + r * r), DecayClass::Rational)
    }

    fn agree(a: f64, b: f64) -> bool {
        (a.abs() < 1e-8 && b.abs() < 1e-8) || (a - b).abs() < 1e-4 * a.abs().max(b.abs())
    }

    #[test]
    fn zero_velocity_and_linear_flow() {
        let s = FlowSnapshot::new(0.0, f0(), RadialProfile::zero()).unwrap();
        assert_eq!(dt_norm_formula(&s, 1.0).unwrap(), 0.0);
        let s = FlowSnapshot::new(0.0, f0(), f0()).unwrap();
        assert_eq!(dt_norm_formula(&s, 0.0).unwrap(), 0.0);
        let lin = flow_field(0.8, 0.0, 0.3, 64).unwrap();
        assert!(dt_norm_fd_on(&lin, 0.3, DEFAULT_STEP).unwrap().abs() < 1e-8);
    }

    #[test]
    fn cubed_velocity_gives_minus_half_norm() {
        let eps = 0.1;
        let cube = f0().powi(3);
        let s = FlowSnapshot::new(0.0, f0().scaled(eps), cube.scaled(eps)).unwrap();
        let want = 2.0 * eps.powi(4) * sobolev_norm_sq(&cube, -0.5).unwrap();
        let got = dt_norm_formula(&s, 1.0).unwrap();
        assert!(got > 0.0 && (got - want).abs() < 1e-12 * want);
        assert_eq!(dt_norm_formula(&s, -1.0).unwrap(), -got);
    }

    #[test]
    fn formula_matches_finite_difference() {
        for &(theta, sigma, t0) in &[(PI / 4.0, 1.0, 0.0), (PI / 2.0, -1.0, 0.5), (0.0, 1.0, 0.5)] {
            let f = flow_field(theta, sigma, 0.3, 96).unwrap();
            let fd = dt_norm_fd_on(&f, t0, DEFAULT_STEP).unwrap();
            let formula = dt_norm_formula(&FlowSnapshot::of_field(&f, t0).unwrap(), sigma).unwrap();
            assert!(
                agree(fd, formula),
                "θ={theta} σ={sigma} t0={t0}: {fd} vs {formula}"
            );
        }
    }

    #[test]
    fn phase_zero_vanishes_at_initial_time() {
        let f = flow_field(0.0, 1.0, 0.3, 96).unwrap();
        assert!(dt_norm_fd_on(&f, 0.0, DEFAULT_STEP).unwrap().abs() < 1e-8);
        let s = FlowSnapshot::of_field(&f, 0.0).unwrap();
        assert!(dt_norm_formula(&s, 1.0).unwrap().abs() < 1e-8);
    }

    #[test]
    fn tiny_step_is_rejected() {
        let f = flow_field(0.3, 1.0, 0.3, 32).unwrap();
        assert!(matches!(
            dt_norm_fd_on(&f, 0.0, 1e-9),
            Err(Error::Accuracy(_))
        ));
        assert!(matches!(dt_norm_fd_on(&f, 0.0, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn radial_boost_derivative_vanishes() {
        let s = FlowSnapshot::new(0.0, f0(), f0().powi(3)).unwrap();
        assert_eq!(boost_derivative_radial(&s, 1.0), 0.0);
        let v = boost_derivative_stencil(&s, 1.0, 6, 0.4).unwrap();
        assert!(v.abs() < 1e-10, "{v}");
        let z = FlowSnapshot::new(0.0, RadialProfile::zero(), RadialProfile::zero()).unwrap();
        assert_eq!(boost_derivative_radial(&z, -1.0), 0.0);
    }
}
