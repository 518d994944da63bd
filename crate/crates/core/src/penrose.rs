//! Fields Ũ = sin(R)·V on the Penrose square, lifting of Minkowski radial
//! data, d'Alembert evolution and spacetime L⁴ norms.

use crate::coords::{penrose_forward, TRIANGLE_TOL};
use crate::error::{Error, Result};
use crate::quadrature::{integration_matrix, Barycentric, GaussRule};
use crate::sobolev::{DataPair, RadialProfile};
use ndarray::{Array1, Array2};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io::{BufRead, Write};
use std::sync::{Arc, OnceLock};

/// Smallest admissible node count per axis.
pub const MIN_NODES: usize = 16;
/// Default node count per axis.
pub const DEFAULT_NODES: usize = 96;

struct GridInner {
    n: usize,
    rule: GaussRule,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    bary: Barycentric,
    diff: Array2<f64>,
    integ: Array2<f64>,
}

/// Tensor Gauss–Legendre grid on [-π/2, π/2]², shared by reference.
#[derive(Clone)]
pub struct SquareGrid(Arc<GridInner>);

impl fmt::Debug for SquareGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SquareGrid(n={})", self.0.n)
    }
}

impl PartialEq for SquareGrid {
    fn eq(&self, other: &Self) -> bool {
        self.0.n == other.0.n
    }
}

impl SquareGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        let rule = GaussRule::legendre(n);
        let mapped = rule.on(-FRAC_PI_2, FRAC_PI_2);
        let bary = Barycentric::gauss(&rule, -FRAC_PI_2, FRAC_PI_2);
        let diff = bary.differentiation_matrix();
        let integ = integration_matrix(&rule, -FRAC_PI_2, FRAC_PI_2);
        Ok(Self(Arc::new(GridInner {
            n,
            nodes: mapped.nodes,
            weights: mapped.weights,
            rule,
            bary,
            diff,
            integ,
        })))
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn nodes(&self) -> &[f64] {
        &self.0.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }

    /// Gauss–Legendre rule on [-1, 1] underlying the grid.
    pub fn reference_rule(&self) -> &GaussRule {
        &self.0.rule
    }

    pub fn interpolator(&self) -> &Barycentric {
        &self.0.bary
    }

    /// Spectral differentiation matrix along one axis.
    pub fn differentiation(&self) -> &Array2<f64> {
        &self.0.diff
    }

    /// Spectral cumulative integration from -π/2 along one axis.
    pub fn integration(&self) -> &Array2<f64> {
        &self.0.integ
    }
}

/// Discretised Ũ(X⁻_i, X⁺_j), stored on the full square with the swap-odd
/// extension Ũ(X⁺, X⁻) = -Ũ(X⁻, X⁺).
#[derive(Debug, Clone)]
pub struct Field {
    grid: SquareGrid,
    values: Array2<f64>,
}

/// Tolerance for the swap-odd check, relative to the field's sup norm.
const SWAP_TOL: f64 = 1e-12;

impl Field {
    /// Wraps values, checking shape, finiteness and swap-oddness.
    pub fn new(grid: SquareGrid, values: Array2<f64>) -> Result<Self> {
        let n = grid.n();
        if values.dim() != (n, n) {
            return Err(Error::Invariant(format!(
                "field shape {:?} does not match grid {n}",
                values.dim()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("field contains non-finite values".into()));
        }
        let f = Self { grid, values };
        let asym = f.swap_asymmetry();
        if asym > SWAP_TOL * f.sup_norm().max(1.0) {
            return Err(Error::Invariant(format!(
                "field is not swap-odd (defect {asym:e})"
            )));
        }
        Ok(f)
    }

    /// Antisymmetric part of arbitrary values, without checks.
    pub(crate) fn antisymmetrized(grid: SquareGrid, values: Array2<f64>) -> Self {
        let t = values.t().to_owned();
        let values = (values - t) * 0.5;
        Self { grid, values }
    }

    /// Samples f on the upper triangle X⁻ < X⁺ and mirrors it.
    pub fn from_fn<F: Fn(f64, f64) -> f64>(grid: &SquareGrid, f: F) -> Self {
        let n = grid.n();
        let x = grid.nodes();
        let mut values = Array2::zeros((n, n));
        for i in 0..n {
            for j in i + 1..n {
                let v = f(x[i], x[j]);
                values[[i, j]] = v;
                values[[j, i]] = -v;
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn zeros(grid: &SquareGrid) -> Self {
        let n = grid.n();
        Self {
            grid: grid.clone(),
            values: Array2::zeros((n, n)),
        }
    }

    pub fn grid(&self) -> &SquareGrid {
        &self.grid
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// max |Ũ_ij + Ũ_ji|.
    pub fn swap_asymmetry(&self) -> f64 {
        let n = self.grid.n();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in i..n {
                m = m.max((self.values[[i, j]] + self.values[[j, i]]).abs());
            }
        }
        m
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: &self.values * a,
        }
    }

    /// a·self + b·other on the same grid.
    pub fn combine(&self, a: f64, other: &Field, b: f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Config("fields live on different grids".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: &self.values * a + &other.values * b,
        })
    }

    pub fn sub(&self, other: &Field) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Spectral interpolant at (X⁻, X⁺).
    pub fn eval(&self, xm: f64, xp: f64) -> f64 {
        let b = self.grid.interpolator();
        let la = Array1::from(b.basis(xm));
        let lb = Array1::from(b.basis(xp));
        la.dot(&self.values.dot(&lb))
    }

    /// Value and (∂₋Ũ, ∂₊Ũ) at (X⁻, X⁺).
    pub fn eval_with_gradient(&self, xm: f64, xp: f64) -> (f64, f64, f64) {
        let b = self.grid.interpolator();
        let (la, dla) = b.basis_with_derivative(xm);
        let (lb, dlb) = b.basis_with_derivative(xp);
        let (la, dla) = (Array1::from(la), Array1::from(dla));
        let ulb = self.values.dot(&Array1::from(lb));
        let udlb = self.values.dot(&Array1::from(dlb));
        (la.dot(&ulb), dla.dot(&ulb), la.dot(&udlb))
    }

    /// Values on the tensor set {a_i} × {b_j}.
    pub fn eval_tensor(&self, a: &[f64], b: &[f64]) -> Array2<f64> {
        let bary = self.grid.interpolator();
        let la = bary.matrix(a);
        let lb = bary.matrix(b);
        la.dot(&self.values).dot(&lb.t())
    }

    /// ∂₋Ũ and ∂₊Ũ on the grid nodes.
    pub fn node_gradients(&self) -> (Array2<f64>, Array2<f64>) {
        let d = self.grid.differentiation();
        (d.dot(&self.values), self.values.dot(&d.t()))
    }

    /// Minkowski u(t, r) and ∂_t u(t, r) from Ũ.
    pub fn minkowski_at(&self, t: f64, r: f64) -> Result<(f64, f64)> {
        const R_SMALL: f64 = 1e-4;
        if r < R_SMALL {
            // u is even in r: remove the r² term by extrapolation.
            let (u1, v1) = self.minkowski_at(t, R_SMALL)?;
            let (u2, v2) = self.minkowski_at(t, 2.0 * R_SMALL)?;
            let k = (r / R_SMALL).powi(2);
            let u0 = (4.0 * u1 - u2) / 3.0;
            let v0 = (4.0 * v1 - v2) / 3.0;
            return Ok((u0 + k * (u1 - u0), v0 + k * (v1 - v0)));
        }
        let q = penrose_forward(t, r)?;
        let edge = FRAC_PI_2 - TRIANGLE_TOL;
        if q.xm <= -edge || q.xp >= edge {
            return Err(Error::Domain(format!(
                "(t, r) = ({t}, {r}) maps onto the null boundary"
            )));
        }
        let (v, dm, dp) = self.eval_with_gradient(q.xm, q.xp);
        let (cm, cp) = (q.xm.cos(), q.xp.cos());
        Ok((v / r, (cp * cp * dp + cm * cm * dm) / r))
    }

    /// Penrose data of the t = t0 slice, re-lifted: ψ₀(R') = Ũ at
    /// (arctan(t0 - r), arctan(t0 + r)) and ψ₁ = (1 + r²)∂_tŨ/2 with
    /// r = tan(R'/2).
    pub fn snapshot(&self, t0: f64) -> CauchyData {
        let field = self.clone();
        let f2 = self.clone();
        CauchyData::new(
            move |big_r| {
                if big_r <= 0.0 || big_r >= PI {
                    return 0.0;
                }
                let r = (0.5 * big_r).tan();
                field.eval((t0 - r).atan(), (t0 + r).atan())
            },
            move |big_r| {
                if big_r <= 0.0 || big_r >= PI {
                    return 0.0;
                }
                let r = (0.5 * big_r).tan();
                let (xm, xp) = ((t0 - r).atan(), (t0 + r).atan());
                let (_, dm, dp) = f2.eval_with_gradient(xm, xp);
                let (cm, cp) = (xm.cos(), xp.cos());
                0.5 * (1.0 + r * r) * (cp * cp * dp + cm * cm * dm)
            },
        )
    }

    /// Text dump: n, the nodes, then n rows of n values (row = fixed X⁻).
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.grid.n();
        writeln!(w, "{n}")?;
        let nodes: Vec<String> = self
            .grid
            .nodes()
            .iter()
            .map(|x| format!("{x:.17e}"))
            .collect();
        writeln!(w, "{}", nodes.join(" "))?;
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| format!("{:.17e}", self.values[[i, j]]))
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_dump<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("truncated field dump".into()))?
                .map_err(|e| Error::Parse(e.to_string()))
        };
        let n: usize = next()?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("node count: {e}")))?;
        let grid = SquareGrid::new(n)?;
        let parse_row = |s: String| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(e.to_string())))
                .collect()
        };
        let nodes = parse_row(next()?)?;
        if nodes.len() != n
            || nodes
                .iter()
                .zip(grid.nodes())
                .any(|(a, b)| (a - b).abs() > 1e-14)
        {
            return Err(Error::Parse(
                "node line does not match the Gauss–Legendre grid".into(),
            ));
        }
        let mut values = Array2::zeros((n, n));
        for i in 0..n {
            let row = parse_row(next()?)?;
            if row.len() != n {
                return Err(Error::Parse(format!("row {i} has {} values", row.len())));
            }
            for (j, v) in row.into_iter().enumerate() {
                values[[i, j]] = v;
            }
        }
        Field::new(grid, values)
    }
}

type CurveFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Cauchy data (ψ₀, ψ₁) on R ∈ [0, π] at T = 0.
#[derive(Clone)]
pub struct CauchyData {
    psi0: CurveFn,
    psi1: CurveFn,
}

impl fmt::Debug for CauchyData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CauchyData")
    }
}

impl CauchyData {
    pub fn new<A, B>(psi0: A, psi1: B) -> Self
    where
        A: Fn(f64) -> f64 + Send + Sync + 'static,
        B: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            psi0: Arc::new(psi0),
            psi1: Arc::new(psi1),
        }
    }

    pub fn psi0(&self, big_r: f64) -> f64 {
        (self.psi0)(big_r)
    }

    pub fn psi1(&self, big_r: f64) -> f64 {
        (self.psi1)(big_r)
    }

    /// Checks ψ(0) = ψ(π) = 0 for both components.
    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("psi0(0)", self.psi0(0.0)),
            ("psi0(pi)", self.psi0(PI)),
            ("psi1(0)", self.psi1(0.0)),
            ("psi1(pi)", self.psi1(PI)),
        ] {
            if !(v.abs() <= 1e-10) {
                return Err(Error::Invariant(format!("{name} = {v} does not vanish")));
            }
        }
        Ok(())
    }
}

/// ψ₀ = sin R · f₀(r)/Ω₀, ψ₁ = sin R · f₁(r)/Ω₀² with r = tan(R/2),
/// Ω₀ = 2/(1 + r²).
pub fn lift_data(d: &DataPair) -> CauchyData {
    let (f0, f1) = (d.f0.clone(), d.f1.clone());
    CauchyData::new(
        move |big_r| lifted(&f0, big_r, 1),
        move |big_r| lifted(&f1, big_r, 2),
    )
}

fn lifted(f: &RadialProfile, big_r: f64, power: i32) -> f64 {
    if big_r <= 0.0 || big_r >= PI {
        return 0.0;
    }
    let r = (0.5 * big_r).tan();
    let inv_omega = 0.5 * (1.0 + r * r);
    big_r.sin() * f.eval(r) * inv_omega.powi(power)
}

fn odd_rule() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::legendre(48))
}

/// d'Alembert evolution: Ũ(X⁻, X⁺) = F(X⁺) - F(X⁻) with
/// F(X) = ½[ψ̃₀(2X) + ∫₀^{2X} ψ̃₁], tildes denoting odd extensions.
pub fn linear_evolve(c: &CauchyData, grid: &SquareGrid) -> Result<Field> {
    let rule = odd_rule();
    let profile: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| {
            let y = 2.0 * x;
            let (s, a) = (y.signum(), y.abs());
            let psi0 = s * c.psi0(a.min(PI));
            let int1 = rule.integrate_on(0.0, a.min(PI), |t| c.psi1(t));
            0.5 * (psi0 + int1)
        })
        .collect();
    if profile.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "Cauchy data evaluated to a non-finite value".into(),
        ));
    }
    let n = grid.n();
    let values = Array2::from_shape_fn((n, n), |(i, j)| profile[j] - profile[i]);
    Ok(Field {
        grid: grid.clone(),
        values,
    })
}

/// Closed-form free field of f_θ scaled by `amp`:
/// Ũ = amp · sin(X⁺ - X⁻) cos(X⁺ + X⁻ - θ).
pub fn maximizer_field(grid: &SquareGrid, theta: f64, amp: f64) -> Field {
    Field::from_fn(grid, |xm, xp| {
        amp * (xp - xm).sin() * (xp + xm - theta).cos()
    })
}

/// Weighted sum 4π Σ w_i w_j g(Ũ_ij)/sin²(x_j - x_i) over i ≠ j.
pub(crate) fn triangle_integral<F: Fn(usize, usize) -> f64>(
    grid: &SquareGrid,
    integrand: F,
) -> f64 {
    let n = grid.n();
    let (x, w) = (grid.nodes(), grid.weights());
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in 0..n {
            if i != j {
                let s = (x[j] - x[i]).sin();
                row += w[j] * integrand(i, j) / (s * s);
            }
        }
        total += w[i] * row;
    }
    4.0 * PI * total
}

/// ‖u‖⁴_{L⁴(R^{1+3})} = 8π ∬_T Ũ⁴ / sin²R.
pub fn l4_norm4(f: &Field) -> Result<f64> {
    let v = f.values();
    let total = triangle_integral(f.grid(), |i, j| v[[i, j]].powi(4));
    if !total.is_finite() {
        return Err(Error::Accuracy("L4 integrand is not finite".into()));
    }
    Ok(total)
}

/// Minkowski profiles u(t0, ·) and ∂_t u(t0, ·) sampled on `radii` and
/// interpolated between them.
pub fn sample_minkowski(
    f: &Field,
    t0: f64,
    radii: &[f64],
) -> Result<(RadialProfile, RadialProfile)> {
    let mut u = Vec::with_capacity(radii.len());
    let mut ut = Vec::with_capacity(radii.len());
    for &r in radii {
        let (a, b) = f.minkowski_at(t0, r)?;
        u.push(a);
        ut.push(b);
    }
    Ok((
        RadialProfile::from_samples(radii.to_vec(), u)?,
        RadialProfile::from_samples(radii.to_vec(), ut)?,
    ))
}
