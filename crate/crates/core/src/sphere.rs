//! Ḣ^{1/2} × Ḣ^{-1/2} norms of Cauchy data through their sine series on
//! R ∈ [0, π]: ‖(f₀, f₁)‖² = 2π² [Σ m a_m² + Σ b_m²/m].

use crate::penrose::CauchyData;
use crate::sobolev::{DataPair, DecayClass, RadialProfile};
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Default number of sample intervals on [0, π].
pub const SPHERE_SAMPLES: usize = 512;

/// Coefficients a_1, ..., a_{N-1} of Σ a_m sin(mR) interpolating
/// f(kπ/N), k = 1, ..., N-1 (DST-I through a length-2N FFT).
pub fn sine_coefficients<F: Fn(f64) -> f64>(f: F, n: usize) -> Vec<f64> {
    assert!(n >= 2, "need at least two sample intervals");
    let mut buf = vec![Complex::new(0.0, 0.0); 2 * n];
    for k in 1..n {
        let v = f(k as f64 * PI / n as f64);
        buf[k] = Complex::new(v, 0.0);
        buf[2 * n - k] = Complex::new(-v, 0.0);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(2 * n).process(&mut buf);
    (1..n).map(|m| -buf[m].im / n as f64).collect()
}

/// Σ_{m≥1} c_m sin(mR).
pub fn sine_sum(coeffs: &[f64], big_r: f64) -> f64 {
    // sin((m+1)x) = 2 cos x sin(mx) - sin((m-1)x)
    let two_cos = 2.0 * big_r.cos();
    let (mut prev, mut cur) = (0.0, big_r.sin());
    let mut total = 0.0;
    for &c in coeffs {
        total += c * cur;
        let next = two_cos * cur - prev;
        prev = cur;
        cur = next;
    }
    total
}

/// Σ m c_m: the slope of Σ c_m sin(mR) at R = 0.
pub fn sine_slope_at_zero(coeffs: &[f64]) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| (i + 1) as f64 * c)
        .sum()
}

fn truncate(mut c: Vec<f64>) -> Vec<f64> {
    let peak = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let cut = 1e-18 * peak;
    while c.last().is_some_and(|v| v.abs() <= cut) {
        c.pop();
    }
    c
}

/// Sine coefficients of (ψ₀, ψ₁).
#[derive(Debug, Clone, PartialEq)]
pub struct SphereCoefficients {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl SphereCoefficients {
    pub fn from_cauchy(c: &CauchyData) -> Self {
        Self::from_cauchy_with(c, SPHERE_SAMPLES)
    }

    pub fn from_cauchy_with(c: &CauchyData, n: usize) -> Self {
        Self {
            a: sine_coefficients(|r| c.psi0(r), n),
            b: sine_coefficients(|r| c.psi1(r), n),
        }
    }

    pub fn from_pair(d: &DataPair) -> Self {
        Self::from_cauchy(&crate::penrose::lift_data(d))
    }

    /// Coordinates in which the pair norm is Euclidean.
    pub fn weighted(&self) -> Vec<f64> {
        let s = (2.0 * PI * PI).sqrt();
        let mut v = Vec::with_capacity(self.a.len() + self.b.len());
        v.extend(
            self.a
                .iter()
                .enumerate()
                .map(|(i, a)| s * ((i + 1) as f64).sqrt() * a),
        );
        v.extend(
            self.b
                .iter()
                .enumerate()
                .map(|(i, b)| s * b / ((i + 1) as f64).sqrt()),
        );
        v
    }

    pub fn inner(&self, other: &Self) -> f64 {
        let pa: f64 = self
            .a
            .iter()
            .zip(&other.a)
            .enumerate()
            .map(|(i, (x, y))| (i + 1) as f64 * x * y)
            .sum();
        let pb: f64 = self
            .b
            .iter()
            .zip(&other.b)
            .enumerate()
            .map(|(i, (x, y))| x * y / (i + 1) as f64)
            .sum();
        2.0 * PI * PI * (pa + pb)
    }

    pub fn norm_sq(&self) -> f64 {
        self.inner(self)
    }

    /// Minkowski profiles u = ψ₀/r and ∂_t u = 2ψ₁/(r(1 + r²)) at t = 0 of
    /// the data these coefficients describe, evaluated by summing the
    /// (truncated) sine series.
    pub fn profiles(&self) -> DataPair {
        let a = Arc::new(truncate(self.a.clone()));
        let b = Arc::new(truncate(self.b.clone()));
        let (a2, b2) = (a.clone(), b.clone());
        let u = move |r: f64| {
            if r == 0.0 {
                return 2.0 * sine_slope_at_zero(&a2);
            }
            sine_sum(&a2, 2.0 * r.atan()) / r
        };
        let ut = move |r: f64| {
            if r == 0.0 {
                return 4.0 * sine_slope_at_zero(&b2);
            }
            2.0 * sine_sum(&b2, 2.0 * r.atan()) / (r * (1.0 + r * r))
        };
        DataPair::new(
            RadialProfile::new(u, DecayClass::Rational),
            RadialProfile::new(ut, DecayClass::Rational),
        )
    }
}

/// Pair norm through the sine series of the lifted data.
pub fn conformal_norm_sq(d: &DataPair) -> f64 {
    SphereCoefficients::from_pair(d).norm_sq()
}

pub fn conformal_inner(a: &DataPair, b: &DataPair) -> f64 {
    SphereCoefficients::from_pair(a).inner(&SphereCoefficients::from_pair(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sobolev::{pair_inner, pair_norm_sq};
    use proptest::prelude::*;

    #[test]
    fn dst_matches_direct_sum() {
        let f = |r: f64| r * (PI - r) * (1.0 + r.cos());
        let n = 32;
        let fast = sine_coefficients(f, n);
        for m in 1..n {
            let direct: f64 = (1..n)
                .map(|k| f(k as f64 * PI / n as f64) * (m as f64 * k as f64 * PI / n as f64).sin())
                .sum::<f64>()
                * 2.0
                / n as f64;
            assert!((fast[m - 1] - direct).abs() < 1e-13);
        }
    }

    #[test]
    fn pure_modes_are_recovered() {
        let c = sine_coefficients(|r| 3.0 * r.sin() - 0.5 * (4.0 * r).sin(), 64);
        assert!((c[0] - 3.0).abs() < 1e-14 && (c[3] + 0.5).abs() < 1e-14);
        assert!(c
            .iter()
            .enumerate()
            .all(|(i, v)| i == 0 || i == 3 || v.abs() < 1e-14));
        assert!((sine_sum(&c, 0.7) - (3.0 * 0.7f64.sin() - 0.5 * 2.8f64.sin())).abs() < 1e-13);
    }

    #[test]
    fn family_norm_is_sphere_volume() {
        for theta in [0.0, 1.0, PI / 2.0, 4.0] {
            let n = conformal_norm_sq(&DataPair::maximizer(theta));
            assert!((n - 2.0 * PI * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn agrees_with_fourier_route() {
        let g = RadialProfile::new(
            |r| (-(r * r)).exp() * (1.0 - 0.3 * r * r),
            DecayClass::Schwartz,
        );
        let h = RadialProfile::new(|r| 1.0 / (1.0 + r * r).powi(2), DecayClass::Rational);
        let d = DataPair::new(g.clone(), h.clone());
        let e = DataPair::new(h, g);
        let a = conformal_norm_sq(&d);
        let b = pair_norm_sq(&d).unwrap();
        assert!((a - b).abs() / b < 1e-9, "{a} vs {b}");
        let x = conformal_inner(&d, &e);
        let y = pair_inner(&d, &e).unwrap();
        assert!((x - y).abs() / b < 1e-9, "{x} vs {y}");
    }

    #[test]
    fn profiles_reproduce_the_data() {
        let d = DataPair::maximizer(0.5);
        let p = SphereCoefficients::from_pair(&d).profiles();
        for r in [0.0, 0.2, 1.0, 7.0, 60.0] {
            assert!((p.f0.eval(r) - d.f0.eval(r)).abs() < 1e-13);
            assert!((p.f1.eval(r) - d.f1.eval(r)).abs() < 1e-13);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn norm_is_homogeneous_and_nonnegative(a in -2.0f64..2.0, th in 0.0f64..6.3) {
            let d = DataPair::maximizer(th).scaled(a);
            let n = conformal_norm_sq(&d);
            prop_assert!(n >= 0.0);
            prop_assert!((n - a * a * 2.0 * PI * PI).abs() < 1e-11);
        }
    }
}
