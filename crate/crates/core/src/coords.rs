//! Lorentz boosts, Poincaré-dilation transforms and the Penrose maps between
//! Minkowski space and the compactified cylinder.

use crate::error::{Error, Result};
use std::f64::consts::FRAC_PI_2;

/// Tolerance (radians) for membership of the closed triangle.
pub const TRIANGLE_TOL: f64 = 1e-12;

/// A spacetime point (t, x1, x2, x3).
pub type FourPoint = [f64; 4];

/// Boost velocity β with |β| < 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoostParams {
    beta: [f64; 3],
}

impl BoostParams {
    pub fn new(beta: [f64; 3]) -> Result<Self> {
        let speed = norm3(&beta);
        if !speed.is_finite() || speed >= 1.0 {
            return Err(Error::Domain(format!("boost speed {speed} must be < 1")));
        }
        Ok(Self { beta })
    }

    pub fn identity() -> Self {
        Self { beta: [0.0; 3] }
    }

    pub fn beta(&self) -> [f64; 3] {
        self.beta
    }

    pub fn speed(&self) -> f64 {
        norm3(&self.beta)
    }

    pub fn gamma(&self) -> f64 {
        let s = self.speed();
        1.0 / (1.0 - s * s).sqrt()
    }

    /// L^β p, realised as an axis boost conjugated by the reflection that
    /// swaps e1 and β/|β|.
    pub fn apply(&self, p: FourPoint) -> FourPoint {
        let speed = self.speed();
        if speed == 0.0 {
            return p;
        }
        let dir = [
            self.beta[0] / speed,
            self.beta[1] / speed,
            self.beta[2] / speed,
        ];
        let h = Householder::swapping_e1(dir);
        let xi = h.apply([p[1], p[2], p[3]]);
        let q = boost_axis(speed, [p[0], xi[0], xi[1], xi[2]]);
        let back = h.apply([q[1], q[2], q[3]]);
        [q[0], back[0], back[1], back[2]]
    }
}

/// Orthogonal reflection I - 2vvᵀ mapping e1 to a unit vector d (and back).
struct Householder {
    v: Option<[f64; 3]>,
}

impl Householder {
    fn swapping_e1(d: [f64; 3]) -> Self {
        let w = [1.0 - d[0], -d[1], -d[2]];
        let n = norm3(&w);
        if n < 1e-15 {
            return Self { v: None };
        }
        Self {
            v: Some([w[0] / n, w[1] / n, w[2] / n]),
        }
    }

    fn apply(&self, x: [f64; 3]) -> [f64; 3] {
        match self.v {
            None => x,
            Some(v) => {
                let dot = v[0] * x[0] + v[1] * x[1] + v[2] * x[2];
                [
                    x[0] - 2.0 * dot * v[0],
                    x[1] - 2.0 * dot * v[1],
                    x[2] - 2.0 * dot * v[2],
                ]
            }
        }
    }
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn boost_axis(alpha: f64, p: FourPoint) -> FourPoint {
    let g = 1.0 / (1.0 - alpha * alpha).sqrt();
    [
        g * (p[0] - alpha * p[1]),
        g * (p[1] - alpha * p[0]),
        p[2],
        p[3],
    ]
}

/// Boost with velocity α along the first spatial axis.
pub fn apply_boost(alpha: f64, p: FourPoint) -> Result<FourPoint> {
    if !alpha.is_finite() || alpha.abs() >= 1.0 {
        return Err(Error::Domain(format!(
            "boost parameter {alpha} must satisfy |α| < 1"
        )));
    }
    Ok(boost_axis(alpha, p))
}

/// Minkowski quadratic form τ² - |ξ|².
pub fn minkowski_form(p: &FourPoint) -> f64 {
    p[0] * p[0] - p[1] * p[1] - p[2] * p[2] - p[3] * p[3]
}

/// Λ(t, x) = L^β(λ(t - t0), λ(x - x0)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareParams {
    lambda: f64,
    boost: BoostParams,
    t0: f64,
    x0: [f64; 3],
}

impl PoincareParams {
    pub fn new(lambda: f64, boost: BoostParams, t0: f64, x0: [f64; 3]) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::Domain(format!("dilation {lambda} must be positive")));
        }
        Ok(Self {
            lambda,
            boost,
            t0,
            x0,
        })
    }

    pub fn identity() -> Self {
        Self {
            lambda: 1.0,
            boost: BoostParams::identity(),
            t0: 0.0,
            x0: [0.0; 3],
        }
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn boost(&self) -> BoostParams {
        self.boost
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn x0(&self) -> [f64; 3] {
        self.x0
    }
}

pub fn apply_poincare(params: &PoincareParams, p: FourPoint) -> FourPoint {
    let l = params.lambda;
    let shifted = [
        l * (p[0] - params.t0),
        l * (p[1] - params.x0[0]),
        l * (p[2] - params.x0[1]),
        l * (p[3] - params.x0[2]),
    ];
    params.boost.apply(shifted)
}

/// Minkowski null coordinates x⁻ = t - r, x⁺ = t + r.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullCoords {
    pub xm: f64,
    pub xp: f64,
}

impl NullCoords {
    pub fn from_tr(t: f64, r: f64) -> Result<Self> {
        if r < 0.0 {
            return Err(Error::Domain(format!("radius {r} is negative")));
        }
        Ok(Self {
            xm: t - r,
            xp: t + r,
        })
    }
}

/// Point (X⁻, X⁺) of the Penrose triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenrosePoint {
    pub xm: f64,
    pub xp: f64,
}

impl PenrosePoint {
    pub fn new(xm: f64, xp: f64) -> Self {
        Self { xm, xp }
    }

    /// T = X⁺ + X⁻.
    pub fn big_t(&self) -> f64 {
        self.xp + self.xm
    }

    /// R = X⁺ - X⁻.
    pub fn big_r(&self) -> f64 {
        self.xp - self.xm
    }

    /// Closed-triangle membership up to `TRIANGLE_TOL`.
    pub fn in_triangle(&self) -> bool {
        self.xm >= -FRAC_PI_2 - TRIANGLE_TOL
            && self.xp <= FRAC_PI_2 + TRIANGLE_TOL
            && self.xm <= self.xp + TRIANGLE_TOL
    }
}

pub fn penrose_forward(t: f64, r: f64) -> Result<PenrosePoint> {
    let n = NullCoords::from_tr(t, r)?;
    Ok(PenrosePoint {
        xm: n.xm.atan(),
        xp: n.xp.atan(),
    })
}

pub fn penrose_inverse(q: PenrosePoint) -> Result<(f64, f64)> {
    let edge = FRAC_PI_2 - TRIANGLE_TOL;
    if q.xm.abs() >= edge || q.xp.abs() >= edge {
        return Err(Error::Infinity(format!(
            "({}, {}) lies on the null boundary",
            q.xm, q.xp
        )));
    }
    let (a, b) = (q.xm.tan(), q.xp.tan());
    Ok((0.5 * (b + a), 0.5 * (b - a)))
}

/// Ω = 2 cos X⁺ cos X⁻.
pub fn conformal_factor(q: PenrosePoint) -> f64 {
    let v = 2.0 * q.xp.cos() * q.xm.cos();
    // cos(±π/2) is 6e-17 in floating point, not zero.
    if q.xm.abs() >= FRAC_PI_2 - TRIANGLE_TOL || q.xp.abs() >= FRAC_PI_2 - TRIANGLE_TOL {
        0.0
    } else {
        v.max(0.0)
    }
}
