//! The sextic functional S(w) = ∬ w³ ⊡⁻¹(w³), its closed form on the
//! maximizer family and the sharp constants.

use crate::duhamel::{antibox_cubic, SourceField};
use crate::error::{Error, Result};
use crate::penrose::Field;
use crate::quadrature::GaussRule;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

/// Sharp constants in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsTable {
    /// Linear Strichartz constant 3/(16π).
    pub s0: f64,
    /// |S³| = 2π².
    pub sphere_volume: f64,
    /// Second-order constant for σ = +1: 29/(2¹⁰π³).
    pub s1_focusing: f64,
    /// Second-order constant for σ = -1: 5/(2¹⁰π³).
    pub s1_defocusing: f64,
}

impl ConstantsTable {
    pub fn standard() -> Self {
        let pi3 = PI.powi(3);
        Self {
            s0: 3.0 / (16.0 * PI),
            sphere_volume: 2.0 * PI * PI,
            s1_focusing: 29.0 / (1024.0 * pi3),
            s1_defocusing: 5.0 / (1024.0 * pi3),
        }
    }

    /// S₁ for the sign of σ.
    pub fn s1(&self, sigma: f64) -> Result<f64> {
        Ok(if sign(sigma)? > 0.0 {
            self.s1_focusing
        } else {
            self.s1_defocusing
        })
    }

    /// (name, value, formula) rows.
    pub fn rows(&self) -> Vec<(&'static str, f64, &'static str)> {
        vec![
            ("s0", self.s0, "3/(16 pi)"),
            ("sphere_volume", self.sphere_volume, "2 pi^2"),
            ("s1_focusing", self.s1_focusing, "29/(2^10 pi^3)"),
            ("s1_defocusing", self.s1_defocusing, "5/(2^10 pi^3)"),
        ]
    }
}

/// Angle reduced to [0, 2π).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseAngle(f64);

impl PhaseAngle {
    pub fn new(theta: f64) -> Self {
        let t = theta.rem_euclid(2.0 * PI);
        Self(if t >= 2.0 * PI { 0.0 } else { t })
    }

    pub fn radians(&self) -> f64 {
        self.0
    }
}

/// ±1 from a nonzero σ.
pub fn sign(sigma: f64) -> Result<f64> {
    if sigma > 0.0 {
        Ok(1.0)
    } else if sigma < 0.0 {
        Ok(-1.0)
    } else {
        Err(Error::Domain(
            "σ = 0: the equation is linear and S₁ is undefined".into(),
        ))
    }
}

/// S(w) = 8π ∬_T (Ũ³/sin²R)·W̃ with W̃ = antibox_cubic(Ũ).
pub fn scal(f: &Field) -> Result<f64> {
    let w = antibox_cubic(f);
    let s = SourceField::cubic(f);
    let grid = f.grid();
    let (wt, sv, wv) = (grid.weights(), s.values(), w.values());
    let n = grid.n();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            row += wt[j] * sv[[i, j]] * wv[[i, j]];
        }
        total += wt[i] * row;
    }
    let v = 4.0 * PI * total;
    if !v.is_finite() {
        return Err(Error::Accuracy("S(w) integrand is not finite".into()));
    }
    Ok(v)
}

/// π³(24cos²θ + 5)/128.
pub fn scal_closed_form(theta: PhaseAngle) -> f64 {
    let c = theta.radians().cos();
    PI.powi(3) * (24.0 * c * c + 5.0) / 128.0
}

/// Smallest node count accepted by `scal_quadrature4`.
pub const QUAD4_MIN_NODES: usize = 32;

type Term = (f64, Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64) -> f64>);

/// sin(Z - Y) cos³(Y + Z - θ) as Σ_t c_t a_t(Y) b_t(Z), from
/// cos(Y + Z - θ) = cos(Y-θ)cos Z - sin(Y-θ)sin Z and
/// sin(Z - Y) = sin Z cos Y - cos Z sin Y.
fn separable_terms(theta: f64) -> Vec<Term> {
    let binom = [1.0, 3.0, 3.0, 1.0];
    let mut terms: Vec<Term> = Vec::with_capacity(8);
    for k in 0..4i32 {
        let c = binom[k as usize] * if k % 2 == 0 { 1.0 } else { -1.0 };
        let ya = move |y: f64| (y - theta).cos().powi(3 - k) * (y - theta).sin().powi(k);
        let zb = move |z: f64| z.cos().powi(3 - k) * z.sin().powi(k);
        terms.push((
            c,
            Box::new(move |y| y.cos() * ya(y)),
            Box::new(move |z| z.sin() * zb(z)),
        ));
        terms.push((
            -c,
            Box::new(move |y| y.sin() * ya(y)),
            Box::new(move |z| z.cos() * zb(z)),
        ));
    }
    terms
}

/// S(v_θ) = 4π ∬∬ F(X⁻, X⁺) F(Y, Z) over Y ≤ X⁻, Z ≤ X⁺, X⁻ ≤ X⁺ with
/// F(Y, Z) = sin(Z - Y) cos³(Y + Z - θ): the inner integral is assembled
/// from separable one-dimensional antiderivatives, each taken with its own
/// Gauss rule on [-π/2, x].
pub fn scal_quadrature4(theta: PhaseAngle, n: usize) -> Result<f64> {
    if n < QUAD4_MIN_NODES {
        return Err(Error::Config(format!(
            "quadruple integral needs at least {QUAD4_MIN_NODES} nodes, got {n}"
        )));
    }
    let th = theta.radians();
    let outer = GaussRule::legendre(n).on(-FRAC_PI_2, FRAC_PI_2);
    let inner = GaussRule::legendre(64);
    let terms = separable_terms(th);
    let x = &outer.nodes;
    let cum: Vec<(f64, Vec<f64>, Vec<f64>)> = terms
        .iter()
        .map(|(c, a, b)| {
            let aa = x
                .iter()
                .map(|&xi| inner.integrate_on(-FRAC_PI_2, xi, a))
                .collect();
            let bb = x
                .iter()
                .map(|&xi| inner.integrate_on(-FRAC_PI_2, xi, b))
                .collect();
            (*c, aa, bb)
        })
        .collect();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            let f = (x[j] - x[i]).sin() * (x[i] + x[j] - th).cos().powi(3);
            let w: f64 = cum.iter().map(|(c, a, b)| c * a[i] * b[j]).sum();
            row += outer.weights[j] * f * w;
        }
        total += outer.weights[i] * row;
    }
    Ok(4.0 * PI * total)
}

/// 0 for σ > 0, π/2 for σ < 0.
pub fn best_theta(sigma: f64) -> Result<PhaseAngle> {
    Ok(PhaseAngle::new(if sign(sigma)? > 0.0 {
        0.0
    } else {
        FRAC_PI_2
    }))
}

/// S₀δ⁴ + σ S₁(σ) δ⁶.
pub fn i_expansion(delta: f64, sigma: f64) -> Result<f64> {
    if delta < 0.0 {
        return Err(Error::Domain(format!("δ = {delta} must be nonnegative")));
    }
    let c = ConstantsTable::standard();
    let s = sign(sigma)?;
    Ok(c.s0 * delta.powi(4) + s * c.s1(sigma)? * delta.powi(6))
}

/// δ⁶ coefficient of ‖Φ(δg_θ)‖⁴ implied by the explicit factor 4:
/// 4σ S(v_θ)/|S³|³.
pub fn c6_with_factor_four(theta: PhaseAngle, sigma: f64) -> f64 {
    let vol = ConstantsTable::standard().sphere_volume;
    4.0 * sigma * scal_closed_form(theta) / vol.powi(3)
}
