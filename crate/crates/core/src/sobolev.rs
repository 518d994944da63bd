//! Homogeneous Sobolev norms of radial data through the radial Fourier
//! transform F(ρ) = (4π/ρ) ∫ f(r) sin(ρr) r dr.

use crate::error::{Error, Result};
use crate::quadrature::{wynn_epsilon, GaussRule};
use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

/// How a profile behaves at large radius; selects the r-quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayClass {
    Rational,
    Schwartz,
    /// Vanishes for r beyond `support`.
    Compact {
        support: f64,
    },
}

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A radial function r ↦ f(r).
#[derive(Clone)]
pub struct RadialProfile {
    eval: ProfileFn,
    decay: DecayClass,
    scale: f64,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("decay", &self.decay)
            .field("scale", &self.scale)
            .finish()
    }
}

impl RadialProfile {
    pub fn new<F>(f: F, decay: DecayClass) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(f),
            decay,
            scale: 1.0,
        }
    }

    /// Characteristic length used to lay out the r-panels.
    pub fn with_scale(mut self, scale: f64) -> Self {
        assert!(scale > 0.0, "profile scale must be positive");
        self.scale = scale;
        self
    }

    pub fn zero() -> Self {
        Self::new(|_| 0.0, DecayClass::Compact { support: 1.0 })
    }

    pub fn eval(&self, r: f64) -> f64 {
        (self.eval)(r)
    }

    pub fn decay(&self) -> DecayClass {
        self.decay
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn scaled(&self, a: f64) -> Self {
        let f = self.eval.clone();
        Self {
            eval: Arc::new(move |r| a * f(r)),
            decay: self.decay,
            scale: self.scale,
        }
    }

    /// Pointwise a·self + b·other.
    pub fn combine(&self, a: f64, other: &RadialProfile, b: f64) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let decay = match (self.decay, other.decay) {
            (DecayClass::Compact { support: s }, DecayClass::Compact { support: t }) => {
                DecayClass::Compact { support: s.max(t) }
            }
            (DecayClass::Schwartz, DecayClass::Schwartz) => DecayClass::Schwartz,
            _ => DecayClass::Rational,
        };
        Self {
            eval: Arc::new(move |r| a * f(r) + b * g(r)),
            decay,
            scale: self.scale.max(other.scale),
        }
    }

    /// Pointwise power f(r)^k.
    pub fn powi(&self, k: i32) -> Self {
        let f = self.eval.clone();
        Self {
            eval: Arc::new(move |r| f(r).powi(k)),
            decay: self.decay,
            scale: self.scale,
        }
    }

    /// Cubic Hermite interpolant through samples (r_i, v_i); zero beyond the
    /// last radius. Radii must be strictly increasing and nonnegative.
    pub fn from_samples(r: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if r.len() != v.len() || r.len() < 2 {
            return Err(Error::Parse("need at least two (r, value) samples".into()));
        }
        if r[0] < 0.0 || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parse(
                "radii must be nonnegative and strictly increasing".into(),
            ));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Parse("sample values must be finite".into()));
        }
        let n = r.len();
        let mut slope = vec![0.0; n];
        for i in 0..n {
            slope[i] = if i == 0 {
                (v[1] - v[0]) / (r[1] - r[0])
            } else if i == n - 1 {
                (v[n - 1] - v[n - 2]) / (r[n - 1] - r[n - 2])
            } else {
                let h0 = r[i] - r[i - 1];
                let h1 = r[i + 1] - r[i];
                let d0 = (v[i] - v[i - 1]) / h0;
                let d1 = (v[i + 1] - v[i]) / h1;
                (h1 * d0 + h0 * d1) / (h0 + h1)
            };
        }
        let support = r[n - 1];
        let scale = (support / 12.0).max(1e-3);
        let (rr, vv) = (r, v);
        let f = move |x: f64| -> f64 {
            if x > rr[n - 1] || x < rr[0] {
                return if x < rr[0] { vv[0] } else { 0.0 };
            }
            let k = match rr.partition_point(|&ri| ri <= x) {
                0 => 0,
                p if p >= n => n - 2,
                p => p - 1,
            };
            let h = rr[k + 1] - rr[k];
            let s = (x - rr[k]) / h;
            let (s2, s3) = (s * s, s * s * s);
            (2.0 * s3 - 3.0 * s2 + 1.0) * vv[k]
                + (s3 - 2.0 * s2 + s) * h * slope[k]
                + (-2.0 * s3 + 3.0 * s2) * vv[k + 1]
                + (s3 - s2) * h * slope[k + 1]
        };
        Ok(Self::new(f, DecayClass::Compact { support }).with_scale(scale))
    }

    /// Parses whitespace-separated two-column text (r, value). Blank lines
    /// and lines starting with '#' are skipped.
    pub fn parse_two_column(text: &str) -> Result<Self> {
        let mut r = Vec::new();
        let mut v = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse(format!(
                    "line {}: expected two columns",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            r.push(parse(cols[0])?);
            v.push(parse(cols[1])?);
        }
        Self::from_samples(r, v)
    }
}

/// Radial data pair (position in Ḣ^{1/2}, velocity in Ḣ^{-1/2}).
#[derive(Debug, Clone)]
pub struct DataPair {
    pub f0: RadialProfile,
    pub f1: RadialProfile,
}

impl DataPair {
    pub fn new(f0: RadialProfile, f1: RadialProfile) -> Self {
        Self { f0, f1 }
    }

    pub fn zero() -> Self {
        Self::new(RadialProfile::zero(), RadialProfile::zero())
    }

    /// The family f_θ = (cos θ · 2/(1+r²), sin θ · (2/(1+r²))²).
    pub fn maximizer(theta: f64) -> Self {
        let (c, s) = (theta.cos(), theta.sin());
        Self::new(
            RadialProfile::new(move |r| c * 2.0 / (1.0 + r * r), DecayClass::Rational),
            RadialProfile::new(
                move |r| {
                    let q = 2.0 / (1.0 + r * r);
                    s * q * q
                },
                DecayClass::Rational,
            ),
        )
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self::new(self.f0.scaled(a), self.f1.scaled(a))
    }

    pub fn combine(&self, a: f64, other: &DataPair, b: f64) -> Self {
        Self::new(
            self.f0.combine(a, &other.f0, b),
            self.f1.combine(a, &other.f1, b),
        )
    }
}

/// Quadrature in ρ for ∫_0^∞ · dρ.
#[derive(Debug, Clone)]
pub struct FrequencyGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Default number of ρ nodes.
pub const DEFAULT_FREQUENCY_NODES: usize = 400;
/// Default frequency cutoff for unit-scale profiles.
pub const DEFAULT_RHO_MAX: f64 = 60.0;

impl FrequencyGrid {
    /// Gauss–Legendre in u mapped by ρ = tan(πu/2), covering [0, ρ_max].
    pub fn tan_mapped(n: usize, rho_max: f64) -> Self {
        let u_max = 2.0 / PI * rho_max.atan();
        let rule = GaussRule::legendre(n).on(0.0, u_max);
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
            let a = 0.5 * PI * u;
            let c = a.cos();
            nodes.push(a.tan());
            weights.push(w * 0.5 * PI / (c * c));
        }
        Self { nodes, weights }
    }

    /// Shared default grid.
    pub fn standard() -> &'static FrequencyGrid {
        static GRID: OnceLock<FrequencyGrid> = OnceLock::new();
        GRID.get_or_init(|| FrequencyGrid::tan_mapped(DEFAULT_FREQUENCY_NODES, DEFAULT_RHO_MAX))
    }
}

fn panel_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::legendre(16))
}

/// Number of accelerated tail half-periods.
const TAIL_TERMS: usize = 24;
/// Radius (in units of the profile scale) integrated directly before the tail.
const DIRECT_RADIUS: f64 = 12.0;

/// Radial Fourier transform at a single frequency.
pub fn radial_fourier_at(f: &RadialProfile, rho: f64) -> Result<f64> {
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(Error::Domain(format!("frequency {rho} must be positive")));
    }
    let rule = panel_rule();
    let g = |r: f64| f.eval(r) * r * (rho * r).sin();
    let half = PI / rho;
    let scale = f.scale();
    let reach = DIRECT_RADIUS * scale;
    let end = match f.decay() {
        DecayClass::Compact { support } => support,
        _ => (reach / half).ceil().max(1.0) * half,
    };
    // Breakpoints: geometric near the origin, half-periods once they are
    // shorter than the geometric spacing.
    let mut breaks = vec![0.0];
    let mut b = 0.5 * scale;
    while b < end.min(half) {
        breaks.push(b);
        b *= 2.0;
    }
    if rho * end > 20.0 || !matches!(f.decay(), DecayClass::Compact { .. }) {
        let mut k = 1.0;
        while k * half < end * (1.0 - 1e-12) {
            if k * half > *breaks.last().unwrap() {
                breaks.push(k * half);
            }
            k += 1.0;
        }
    } else {
        let last = *breaks.last().unwrap();
        let pieces = 8;
        for i in 1..pieces {
            breaks.push(last + (end - last) * i as f64 / pieces as f64);
        }
    }
    breaks.push(end);
    let mut direct = 0.0;
    let mut magnitude = 0.0;
    for w in breaks.windows(2) {
        let v = rule.integrate_on(w[0], w[1], g);
        direct += v;
        magnitude += v.abs();
    }
    let total = match f.decay() {
        DecayClass::Compact { .. } => direct,
        _ => {
            let mut partial = Vec::with_capacity(TAIL_TERMS + 1);
            partial.push(direct);
            let mut s = direct;
            for k in 0..TAIL_TERMS {
                let a = end + k as f64 * half;
                let v = rule.integrate_on(a, a + half, g);
                s += v;
                partial.push(s);
            }
            let full = wynn_epsilon(&partial);
            let short = wynn_epsilon(&partial[..partial.len() - 4]);
            let gap = (full - short).abs();
            if !full.is_finite() || gap > 1e-6 * magnitude.max(f64::MIN_POSITIVE) {
                return Err(Error::Accuracy(format!(
                    "radial transform at ρ={rho} did not converge (gap {gap:e})"
                )));
            }
            full
        }
    };
    if !total.is_finite() {
        return Err(Error::Accuracy(format!("non-finite transform at ρ={rho}")));
    }
    Ok(4.0 * PI / rho * total)
}

/// F(ρ_i) on every grid node.
pub fn radial_fourier(f: &RadialProfile, grid: &FrequencyGrid) -> Result<Vec<f64>> {
    grid.nodes
        .iter()
        .map(|&rho| radial_fourier_at(f, rho))
        .collect()
}

fn weighted_product(grid: &FrequencyGrid, power: i32, a: &[f64], b: &[f64]) -> f64 {
    let sum: f64 = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .zip(a.iter().zip(b))
        .map(|((&rho, &w), (&x, &y))| w * rho.powi(power) * x * y)
        .sum();
    sum / (2.0 * PI * PI)
}

fn exponent(s: f64) -> Result<i32> {
    if s == 0.5 {
        Ok(3)
    } else if s == -0.5 {
        Ok(1)
    } else {
        Err(Error::Domain(format!("Sobolev order {s} is not ±1/2")))
    }
}

/// ‖f‖²_{Ḣ^s} = (2π²)⁻¹ ∫ ρ^{2s+2} F(ρ)² dρ for s = ±1/2.
pub fn sobolev_norm_sq(f: &RadialProfile, s: f64) -> Result<f64> {
    sobolev_norm_sq_on(f, s, FrequencyGrid::standard())
}

pub fn sobolev_norm_sq_on(f: &RadialProfile, s: f64, grid: &FrequencyGrid) -> Result<f64> {
    let p = exponent(s)?;
    let ft = radial_fourier(f, grid)?;
    Ok(weighted_product(grid, p, &ft, &ft))
}

/// Ḣ^s inner product of two radial functions.
pub fn sobolev_inner(a: &RadialProfile, b: &RadialProfile, s: f64) -> Result<f64> {
    let grid = FrequencyGrid::standard();
    let p = exponent(s)?;
    let fa = radial_fourier(a, grid)?;
    let fb = radial_fourier(b, grid)?;
    Ok(weighted_product(grid, p, &fa, &fb))
}

pub fn pair_norm_sq(d: &DataPair) -> Result<f64> {
    Ok(sobolev_norm_sq(&d.f0, 0.5)? + sobolev_norm_sq(&d.f1, -0.5)?)
}

pub fn pair_inner(a: &DataPair, b: &DataPair) -> Result<f64> {
    Ok(sobolev_inner(&a.f0, &b.f0, 0.5)? + sobolev_inner(&a.f1, &b.f1, -0.5)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f0() -> RadialProfile {
        RadialProfile::new(|r| 2.0 / (1.0 + r * r), DecayClass::Rational)
    }

    fn f0_sq() -> RadialProfile {
        RadialProfile::new(
            |r| 4.0 / ((1.0 + r * r) * (1.0 + r * r)),
            DecayClass::Rational,
        )
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn transform_of_reference_profiles() {
        // Oracles: ∫ 2r sin(ρr)/(1+r²) dr = π e^{-ρ} and
        // ∫ 4r sin(ρr)/(1+r²)² dr = π ρ e^{-ρ}.
        for rho in [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let a = radial_fourier_at(&f0(), rho).unwrap();
            let want_a = 4.0 * PI * PI * (-rho).exp() / rho;
            assert!(rel(a, want_a) < 1e-10, "ρ={rho}: {a} vs {want_a}");
            let b = radial_fourier_at(&f0_sq(), rho).unwrap();
            let want_b = 4.0 * PI * PI * (-rho).exp();
            assert!(rel(b, want_b) < 1e-10, "ρ={rho}: {b} vs {want_b}");
        }
    }

    #[test]
    fn gradient_of_f0_is_f0_squared() {
        for rho in [0.05, 0.3, 1.0, 3.0, 8.0] {
            let lhs = radial_fourier_at(&f0_sq(), rho).unwrap();
            let rhs = rho * radial_fourier_at(&f0(), rho).unwrap();
            assert!(rel(lhs, rhs) < 1e-10);
        }
    }

    #[test]
    fn zero_profile_transforms_to_zero() {
        let z = RadialProfile::zero();
        assert_eq!(radial_fourier_at(&z, 1.3).unwrap(), 0.0);
        assert_eq!(sobolev_norm_sq(&z, 0.5).unwrap(), 0.0);
        assert_eq!(pair_norm_sq(&DataPair::zero()).unwrap(), 0.0);
    }

    #[test]
    fn norms_of_reference_profiles() {
        let two_pi2 = 2.0 * PI * PI;
        assert!(rel(sobolev_norm_sq(&f0(), 0.5).unwrap(), two_pi2) < 1e-10);
        assert!(rel(sobolev_norm_sq(&f0_sq(), -0.5).unwrap(), two_pi2) < 1e-10);
        // 16π⁴ ∫ ρ³ e^{-2ρ} / (2π²) = 3π².
        assert!(rel(sobolev_norm_sq(&f0_sq(), 0.5).unwrap(), 3.0 * PI * PI) < 1e-10);
        assert!(sobolev_norm_sq(&f0(), 0.25).is_err());
    }

    #[test]
    fn pair_norm_of_family_is_sphere_volume() {
        for theta in [0.0, 0.4, PI / 3.0, PI / 2.0, 2.0] {
            let n = pair_norm_sq(&DataPair::maximizer(theta)).unwrap();
            assert!(rel(n, 2.0 * PI * PI) < 1e-10, "θ={theta}: {n}");
        }
        let d = DataPair::maximizer(0.3).scaled(0.2);
        assert!(rel(pair_norm_sq(&d).unwrap(), 0.04 * 2.0 * PI * PI) < 1e-10);
    }

    #[test]
    fn inner_product_examples() {
        let a = DataPair::maximizer(0.0);
        let b = DataPair::maximizer(PI / 2.0);
        assert!(rel(pair_inner(&a, &a).unwrap(), 2.0 * PI * PI) < 1e-10);
        assert!(pair_inner(&a, &b).unwrap().abs() < 1e-12);
        assert_eq!(pair_inner(&a, &DataPair::zero()).unwrap(), 0.0);
    }

    #[test]
    fn doubling_frequency_grid_changes_norm_negligibly() {
        let d = DataPair::maximizer(0.7);
        let coarse = FrequencyGrid::tan_mapped(400, DEFAULT_RHO_MAX);
        let fine = FrequencyGrid::tan_mapped(800, DEFAULT_RHO_MAX);
        let a = sobolev_norm_sq_on(&d.f0, 0.5, &coarse).unwrap()
            + sobolev_norm_sq_on(&d.f1, -0.5, &coarse).unwrap();
        let b = sobolev_norm_sq_on(&d.f0, 0.5, &fine).unwrap()
            + sobolev_norm_sq_on(&d.f1, -0.5, &fine).unwrap();
        assert!(rel(a, b) < 1e-10);
    }

    #[test]
    fn compact_profile_transform() {
        // Indicator of the unit ball: F = 4π (sin ρ - ρ cos ρ)/ρ³.
        let ball = RadialProfile::new(
            |r| if r <= 1.0 { 1.0 } else { 0.0 },
            DecayClass::Compact { support: 1.0 },
        );
        for rho in [0.5, 3.0, 40.0] {
            let got = radial_fourier_at(&ball, rho).unwrap();
            let want = 4.0 * PI * (rho.sin() - rho * rho.cos()) / rho.powi(3);
            assert!((got - want).abs() < 1e-12, "ρ={rho}: {got} vs {want}");
        }
    }

    #[test]
    fn samples_interpolate_and_parse() {
        let text = "# r value\n0 1\n1 0.5\n2 0.2\n\n3 0.1\n";
        let p = RadialProfile::parse_two_column(text).unwrap();
        assert_eq!(p.eval(1.0), 0.5);
        assert_eq!(p.eval(3.5), 0.0);
        assert!(matches!(p.decay(), DecayClass::Compact { support } if support == 3.0));
        assert!(RadialProfile::parse_two_column("0 1\n0 2\n").is_err());
        assert!(RadialProfile::parse_two_column("0 1 2\n").is_err());
        assert!(RadialProfile::parse_two_column("0 x\n1 2\n").is_err());
    }

    #[test]
    fn sampled_profile_norm_approaches_closed_form() {
        let r: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.01).collect();
        let v: Vec<f64> = r.iter().map(|x| (-x * x).exp()).collect();
        let sampled = RadialProfile::from_samples(r, v).unwrap();
        let exact = RadialProfile::new(|x| (-x * x).exp(), DecayClass::Schwartz);
        let a = sobolev_norm_sq(&sampled, -0.5).unwrap();
        let b = sobolev_norm_sq(&exact, -0.5).unwrap();
        assert!(rel(a, b) < 1e-6, "{a} vs {b}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn cauchy_schwarz(t1 in 0.0f64..6.3, t2 in 0.0f64..6.3, s in 0.3f64..3.0) {
            let a = DataPair::maximizer(t1);
            let gauss = RadialProfile::new(move |r| (-(r / s) * (r / s)).exp(), DecayClass::Schwartz).with_scale(s);
            let b = DataPair::new(gauss.clone(), gauss.scaled(t2.cos()));
            let ab = pair_inner(&a, &b).unwrap();
            let aa = pair_norm_sq(&a).unwrap();
            let bb = pair_norm_sq(&b).unwrap();
            prop_assert!(ab * ab <= aa * bb * (1.0 + 1e-10));
        }
    }
}
