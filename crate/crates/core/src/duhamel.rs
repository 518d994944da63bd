//! The retarded Duhamel operator as a Goursat problem on the Penrose
//! square, the Cauchy-anchored variant, and the exact W̃_θ.

use crate::coords::PenrosePoint;
use crate::error::{Error, Result};
use crate::penrose::{Field, SquareGrid};
use ndarray::{Array1, Array2};
use std::f64::consts::FRAC_PI_2;

/// Right-hand side of ∂₊∂₋W̃ = s on the full square, swap-odd.
#[derive(Debug, Clone)]
pub struct SourceField {
    grid: SquareGrid,
    values: Array2<f64>,
}

impl SourceField {
    pub fn new(grid: SquareGrid, values: Array2<f64>) -> Result<Self> {
        let n = grid.n();
        if values.dim() != (n, n) {
            return Err(Error::Invariant("source shape does not match grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("source contains non-finite values".into()));
        }
        let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in i..n {
                defect = defect.max((values[[i, j]] + values[[j, i]]).abs());
            }
        }
        if defect > 1e-12 * peak.max(1.0) {
            return Err(Error::Invariant(format!(
                "source is not swap-odd (defect {defect:e})"
            )));
        }
        Ok(Self { grid, values })
    }

    /// s(X⁻, X⁺) sampled on the upper triangle and mirrored.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &SquareGrid, f: F) -> Self {
        let field = Field::from_fn(grid, f);
        Self {
            grid: grid.clone(),
            values: field.into_values(),
        }
    }

    /// Ũ³ / sin²(X⁺ - X⁻), zero on the diagonal.
    pub fn cubic(f: &Field) -> Self {
        let grid = f.grid().clone();
        let x = grid.nodes();
        let v = f.values();
        let n = grid.n();
        let values = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                0.0
            } else {
                let s = (x[j] - x[i]).sin();
                v[[i, j]].powi(3) / (s * s)
            }
        });
        Self { grid, values }
    }

    pub fn grid(&self) -> &SquareGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

/// W̃(X⁻, X⁺) = ∬_{[-π/2, X⁻]×[-π/2, X⁺]} s, i.e. Q s Qᵀ with Q the spectral
/// cumulative-integration matrix.
pub fn goursat_solve(s: &SourceField) -> Field {
    let q = s.grid.integration();
    let w = q.dot(&s.values).dot(&q.t());
    Field::antisymmetrized(s.grid.clone(), w)
}

/// Where the Duhamel term takes vanishing data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Anchor {
    /// Zero data at past null infinity (the retarded operator).
    #[default]
    Scattering,
    /// Zero Cauchy data on T = 0 (equivalently t = 0).
    Cauchy,
}

/// sin(R)·(Penrose transform of ⊡⁻¹(u³)) for the field Ũ.
pub fn antibox_cubic(f: &Field) -> Field {
    goursat_solve(&SourceField::cubic(f))
}

pub fn antibox_cubic_anchored(f: &Field, anchor: Anchor) -> Field {
    let w = antibox_cubic(f);
    match anchor {
        Anchor::Scattering => w,
        Anchor::Cauchy => {
            let e = free_part(&w);
            let values = w.values() - e.values();
            Field::antisymmetrized(w.grid().clone(), values)
        }
    }
}

/// The free field with the same T = 0 data as `w`:
/// E = F(X⁺) - F(X⁻), F(X) = ½[W̃(-X, X) + 2∫₀^X ∂_T W̃(-Y, Y) dY].
pub fn free_part(w: &Field) -> Field {
    let grid = w.grid();
    let n = grid.n();
    let v = w.values();
    let (dm, dp) = w.node_gradients();
    // Gauss nodes are symmetric: -x_j is x_{n-1-j}.
    let g = Array1::from_shape_fn(n, |j| 0.5 * (dm[[n - 1 - j, j]] + dp[[n - 1 - j, j]]));
    let cumulative = grid.integration().dot(&g);
    let at_zero = grid
        .interpolator()
        .eval(cumulative.as_slice().unwrap(), 0.0);
    let profile: Vec<f64> = (0..n)
        .map(|j| 0.5 * (v[[n - 1 - j, j]] + 2.0 * (cumulative[j] - at_zero)))
        .collect();
    let values = Array2::from_shape_fn((n, n), |(i, j)| profile[j] - profile[i]);
    Field::antisymmetrized(grid.clone(), values)
}

/// ∬_{[a, xm]×[b, xp]} sin(pY + qZ + c) dY dZ.
fn rect_sin(p: f64, q: f64, c: f64, a: f64, xm: f64, b: f64, xp: f64) -> f64 {
    match (p == 0.0, q == 0.0) {
        (true, true) => (xm - a) * (xp - b) * c.sin(),
        (true, false) => (xm - a) * ((q * b + c).cos() - (q * xp + c).cos()) / q,
        (false, true) => (xp - b) * ((p * a + c).cos() - (p * xm + c).cos()) / p,
        (false, false) => {
            -((p * xm + q * xp + c).sin() - (p * a + q * xp + c).sin() - (p * xm + q * b + c).sin()
                + (p * a + q * b + c).sin())
                / (p * q)
        }
    }
}

/// W̃_θ(X⁻, X⁺) = ∫_{-π/2}^{X⁻}∫_{-π/2}^{X⁺} sin(Z - Y) cos³(Y + Z - θ) dZ dY,
/// by expanding the integrand into sines of linear forms:
/// (3/8)[sin(2Z - θ) + sin(θ - 2Y)] + (1/8)[sin(4Z + 2Y - 3θ) + sin(3θ - 4Y - 2Z)].
pub fn wtheta_exact(theta: f64, q: PenrosePoint) -> f64 {
    let (a, b) = (-FRAC_PI_2, -FRAC_PI_2);
    let (xm, xp) = (q.xm, q.xp);
    0.375 * (rect_sin(0.0, 2.0, -theta, a, xm, b, xp) + rect_sin(-2.0, 0.0, theta, a, xm, b, xp))
        + 0.125
            * (rect_sin(2.0, 4.0, -3.0 * theta, a, xm, b, xp)
                + rect_sin(-4.0, -2.0, 3.0 * theta, a, xm, b, xp))
}

/// The θ-source sin(X⁺ - X⁻) cos³(X⁺ + X⁻ - θ).
pub fn theta_source(grid: &SquareGrid, theta: f64) -> SourceField {
    SourceField::from_fn(grid, |xm, xp| {
        (xp - xm).sin() * (xp + xm - theta).cos().powi(3)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penrose::maximizer_field;
    use crate::quadrature::GaussRule;
    use proptest::prelude::*;

    fn nested_oracle(theta: f64, xm: f64, xp: f64) -> f64 {
        // Independent check: 200-point Gauss–Legendre in each variable.
        let rule = GaussRule::legendre(200);
        rule.integrate_on(-FRAC_PI_2, xm, |y| {
            rule.integrate_on(-FRAC_PI_2, xp, |z| {
                (z - y).sin() * (y + z - theta).cos().powi(3)
            })
        })
    }

    fn exact_field(grid: &SquareGrid, theta: f64) -> Field {
        Field::from_fn(grid, |xm, xp| {
            wtheta_exact(theta, PenrosePoint::new(xm, xp))
        })
    }

    #[test]
    fn trig_expansion_identity() {
        for &(y, z, th) in &[(0.3f64, -1.1f64, 0.4f64), (1.2, 0.5, 2.0), (-0.7, 0.9, 0.0)] {
            let lhs = (z - y).sin() * (y + z - th).cos().powi(3);
            let rhs = 0.375 * ((2.0 * z - th).sin() + (th - 2.0 * y).sin())
                + 0.125
                    * ((4.0 * z + 2.0 * y - 3.0 * th).sin() + (3.0 * th - 4.0 * y - 2.0 * z).sin());
            assert!((lhs - rhs).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_matches_nested_quadrature() {
        for &(th, xm, xp) in &[
            (0.0, 0.0, FRAC_PI_2),
            (0.7, -0.3, 1.0),
            (2.0, 1.2, -0.4),
            (FRAC_PI_2, 0.5, 0.5),
        ] {
            let a = wtheta_exact(th, PenrosePoint::new(xm, xp));
            let b = nested_oracle(th, xm, xp);
            assert!((a - b).abs() < 1e-12, "θ={th}: {a} vs {b}");
        }
    }

    #[test]
    fn exact_boundary_values() {
        for th in [0.0, 0.4, 1.9] {
            assert!(wtheta_exact(th, PenrosePoint::new(-FRAC_PI_2, 0.8)).abs() < 1e-15);
            for x in [-1.0, 0.0, 0.6] {
                assert!(wtheta_exact(th, PenrosePoint::new(x, x)).abs() < 1e-14);
                let p = wtheta_exact(th, PenrosePoint::new(x, 0.9));
                let q = wtheta_exact(th, PenrosePoint::new(0.9, x));
                assert!((p + q).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn goursat_matches_exact() {
        for (n, tol) in [(96, 1e-8), (192, 1e-10)] {
            let g = SquareGrid::new(n).unwrap();
            for th in [0.0, 0.9, FRAC_PI_2] {
                let w = goursat_solve(&theta_source(&g, th));
                let err = w.max_abs_diff(&exact_field(&g, th));
                assert!(err < tol, "n={n} θ={th}: {err:e}");
            }
        }
    }

    #[test]
    fn goursat_output_is_swap_odd_and_zero_source_gives_zero() {
        let g = SquareGrid::new(48).unwrap();
        let w = goursat_solve(&theta_source(&g, 0.3));
        assert!(w.swap_asymmetry() < 1e-10);
        let z = goursat_solve(&SourceField::from_fn(&g, |_, _| 0.0));
        assert_eq!(z.sup_norm(), 0.0);
    }

    #[test]
    fn source_must_be_swap_odd() {
        let g = SquareGrid::new(16).unwrap();
        let bad = Array2::from_elem((16, 16), 1.0);
        assert!(matches!(SourceField::new(g, bad), Err(Error::Invariant(_))));
    }

    #[test]
    fn antibox_of_family_is_theta_instance() {
        let g = SquareGrid::new(64).unwrap();
        for th in [0.0, 1.1] {
            let a = antibox_cubic(&maximizer_field(&g, th, 1.0));
            let b = goursat_solve(&theta_source(&g, th));
            assert!(a.max_abs_diff(&b) < 1e-13);
        }
        assert_eq!(antibox_cubic(&Field::zeros(&g)).sup_norm(), 0.0);
    }

    #[test]
    fn boundary_conditions_of_antibox() {
        let g = SquareGrid::new(64).unwrap();
        let f = maximizer_field(&g, 0.4, 1.0);
        let w = antibox_cubic(&f);
        // Past null infinity and the axis.
        for x in [-0.9, 0.0, 1.3] {
            assert!(w.eval(-FRAC_PI_2, x).abs() < 1e-10);
            assert!(w.eval(x, x).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_difference_reproduces_source() {
        let g = SquareGrid::new(64).unwrap();
        let th = 0.6;
        let w = goursat_solve(&theta_source(&g, th));
        let h = 1e-3;
        for &(y, z) in &[(-0.5, 0.3), (0.2, 1.0), (-1.0, -0.2)] {
            let d = (w.eval(y + h, z + h) - w.eval(y + h, z - h) - w.eval(y - h, z + h)
                + w.eval(y - h, z - h))
                / (4.0 * h * h);
            let s = (z - y).sin() * (y + z - th).cos().powi(3);
            assert!((d - s).abs() < 1e-5, "{d} vs {s}");
        }
    }

    #[test]
    fn cauchy_anchor_has_vanishing_data_at_t0() {
        let g = SquareGrid::new(64).unwrap();
        let f = maximizer_field(&g, 0.8, 1.0);
        let b = antibox_cubic_anchored(&f, Anchor::Cauchy);
        for x in [0.2, 0.7, 1.4] {
            let (v, dm, dp) = b.eval_with_gradient(-x, x);
            assert!(v.abs() < 1e-12, "value {v:e}");
            assert!((dm + dp).abs() < 1e-10, "∂_T {:e}", dm + dp);
        }
        // Same wave operator: the difference is a free field, so its mixed
        // derivative vanishes.
        let e = antibox_cubic(&f).sub(&b).unwrap();
        let h = 1e-3;
        let (y, z) = (-0.3, 0.8);
        let d = (e.eval(y + h, z + h) - e.eval(y + h, z - h) - e.eval(y - h, z + h)
            + e.eval(y - h, z - h))
            / (4.0 * h * h);
        assert!(d.abs() < 1e-6);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn goursat_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, t1 in 0.0f64..3.2, t2 in 0.0f64..3.2) {
            let g = SquareGrid::new(32).unwrap();
            let s1 = theta_source(&g, t1);
            let s2 = theta_source(&g, t2);
            let combo = SourceField::new(g.clone(), s1.values() * a + s2.values() * b).unwrap();
            let lhs = goursat_solve(&combo);
            let rhs = goursat_solve(&s1).combine(a, &goursat_solve(&s2), b).unwrap();
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }

        #[test]
        fn antibox_is_cubic(a in -2.0f64..2.0, th in 0.0f64..3.2) {
            let g = SquareGrid::new(32).unwrap();
            let f = maximizer_field(&g, th, 1.0);
            let lhs = antibox_cubic(&f.scaled(a));
            let rhs = antibox_cubic(&f).scaled(a * a * a);
            prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        }
    }
}
