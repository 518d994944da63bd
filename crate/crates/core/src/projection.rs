//! Nearest point on the radial slice {c·Γ_{λ,θ,t₀} f₀} of the maximizer
//! manifold, and the Gram matrix of its tangent directions.

use crate::error::{Error, Result};
use crate::functional::PhaseAngle;
use crate::sobolev::{DataPair, DecayClass, RadialProfile};
use crate::sphere::SphereCoefficients;
use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};

/// Evaluation budget shared by the Nelder–Mead restarts.
pub const MAX_EVALUATIONS: usize = 2000;
const SEEDS: [f64; 4] = [0.0, FRAC_PI_2, PI, 3.0 * FRAC_PI_2];
/// Step for the Gram-matrix tangents.
pub const GRAM_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ManifoldParams {
    pub c: f64,
    pub lambda: f64,
    pub theta: PhaseAngle,
    pub t0: f64,
}

impl ManifoldParams {
    pub fn new(c: f64, lambda: f64, theta: f64, t0: f64) -> Result<Self> {
        if !(c >= 0.0) || !c.is_finite() {
            return Err(Error::Domain(format!(
                "amplitude c = {c} must be nonnegative"
            )));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!(
                "dilation λ = {lambda} must be positive"
            )));
        }
        if !t0.is_finite() || !theta.is_finite() {
            return Err(Error::Domain("θ and t₀ must be finite".into()));
        }
        Ok(Self {
            c,
            lambda,
            theta: PhaseAngle::new(theta),
            t0,
        })
    }

    pub fn identity() -> Self {
        Self {
            c: 1.0,
            lambda: 1.0,
            theta: PhaseAngle::new(0.0),
            t0: 0.0,
        }
    }

    fn unchecked(c: f64, lambda: f64, theta: f64, t0: f64) -> Self {
        Self {
            c,
            lambda,
            theta: PhaseAngle::new(theta),
            t0,
        }
    }
}

/// v_θ = Ω cos(T - θ) and ∂_t v_θ at (t, r).
fn v_theta(theta: f64, t: f64, r: f64) -> (f64, f64) {
    let (xp, xm) = ((t + r).atan(), (t - r).atan());
    let (sp, cp) = xp.sin_cos();
    let (sm, cm) = xm.sin_cos();
    let omega = 2.0 * cp * cm;
    let phase = xp + xm - theta;
    let d_omega = -2.0 * (sp * cp * cp * cm + cp * sm * cm * cm);
    let v = omega * phase.cos();
    let vt = d_omega * phase.cos() - omega * phase.sin() * (cp * cp + cm * cm);
    (v, vt)
}

/// Data at t = 0 of c·λ v_θ(λ(t - t₀), λx).
pub fn gamma_apply(p: &ManifoldParams) -> DataPair {
    let (c, l, th, t0) = (p.c, p.lambda, p.theta.radians(), p.t0);
    DataPair::new(
        RadialProfile::new(
            move |r| c * l * v_theta(th, -l * t0, l * r).0,
            DecayClass::Rational,
        ),
        RadialProfile::new(
            move |r| c * l * l * v_theta(th, -l * t0, l * r).1,
            DecayClass::Rational,
        ),
    )
}

/// Coordinates in which the pair norm is Euclidean.
fn coords(d: &DataPair) -> DVector<f64> {
    DVector::from_vec(SphereCoefficients::from_pair(d).weighted())
}

/// x = (c, log λ, θ, t₀).
fn manifold_coords(x: &[f64; 4]) -> DVector<f64> {
    coords(&gamma_apply(&ManifoldParams::unchecked(
        x[0],
        x[1].exp(),
        x[2],
        x[3],
    )))
}

#[derive(Debug, Clone, Serialize)]
pub struct Projection {
    pub params: ManifoldParams,
    /// ‖d - f⋆‖.
    pub residual: f64,
    /// max_i |⟨d - f⋆, ∂ᵢΓ⟩| / (‖d - f⋆‖ ‖∂ᵢΓ‖); 0 when d lies on the slice.
    pub orthogonality: f64,
    /// The simplex collapsed before the gradient test was met.
    pub stagnated: bool,
    pub evaluations: usize,
}

struct Simplex {
    best: [f64; 4],
    value: f64,
    evals: usize,
    collapsed: bool,
}

fn nelder_mead<F: Fn(&[f64; 4]) -> f64>(
    f: F,
    start: [f64; 4],
    steps: [f64; 4],
    budget: usize,
) -> Simplex {
    let mut pts: Vec<[f64; 4]> = vec![start];
    for k in 0..4 {
        let mut p = start;
        p[k] += steps[k];
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(&f).collect();
    let mut evals = 5;
    let mut collapsed = false;
    let comb = |a: &[f64; 4], b: &[f64; 4], t: f64| -> [f64; 4] {
        std::array::from_fn(|k| a[k] + t * (b[k] - a[k]))
    };
    while evals < budget {
        let mut idx: Vec<usize> = (0..5).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = idx.iter().map(|&i| pts[i]).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();
        if (vals[4] - vals[0]).abs() <= 1e-14 * vals[0].abs() + 1e-300 {
            collapsed = true;
            break;
        }
        let centroid: [f64; 4] =
            std::array::from_fn(|k| pts[..4].iter().map(|p| p[k]).sum::<f64>() / 4.0);
        let xr = comb(&centroid, &pts[4], -1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < vals[0] {
            let xe = comb(&centroid, &pts[4], -2.0);
            let fe = f(&xe);
            evals += 1;
            if fe < fr {
                pts[4] = xe;
                vals[4] = fe;
            } else {
                pts[4] = xr;
                vals[4] = fr;
            }
        } else if fr < vals[3] {
            pts[4] = xr;
            vals[4] = fr;
        } else {
            let (xc, fc) = if fr < vals[4] {
                let x = comb(&centroid, &xr, 0.5);
                (x, f(&x))
            } else {
                let x = comb(&centroid, &pts[4], 0.5);
                (x, f(&x))
            };
            evals += 1;
            if fc < vals[4].min(fr) {
                pts[4] = xc;
                vals[4] = fc;
            } else {
                for k in 1..5 {
                    pts[k] = comb(&pts[0], &pts[k], 0.5);
                    vals[k] = f(&pts[k]);
                }
                evals += 4;
            }
        }
    }
    let k = (0..5).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
    Simplex {
        best: pts[k],
        value: vals[k],
        evals,
        collapsed,
    }
}

/// Gauss–Newton on the coefficient residual, accepting only decreasing steps.
fn gauss_newton(target: &DVector<f64>, mut x: [f64; 4]) -> ([f64; 4], usize) {
    let resid = |x: &[f64; 4]| manifold_coords(x) - target;
    let mut r = resid(&x);
    let mut evals = 1;
    for _ in 0..30 {
        let h = 1e-6;
        let mut jac = DMatrix::zeros(r.len(), 4);
        for k in 0..4 {
            let (mut a, mut b) = (x, x);
            a[k] += h;
            b[k] -= h;
            jac.set_column(k, &((resid(&a) - resid(&b)) / (2.0 * h)));
            evals += 2;
        }
        let Ok(step) = jac.svd(true, true).solve(&r, 1e-14) else {
            break;
        };
        let trial: [f64; 4] = std::array::from_fn(|k| x[k] - step[k]);
        let rt = resid(&trial);
        evals += 1;
        if rt.norm() >= r.norm() {
            break;
        }
        x = trial;
        r = rt;
        if step.amax() < 1e-13 {
            break;
        }
    }
    (x, evals)
}

/// Central-difference tangents ∂_c, ∂_λ, ∂_θ, ∂_{t₀} at p, in sphere coordinates.
fn tangents(p: &ManifoldParams, h: f64) -> Vec<DVector<f64>> {
    let (c, l, th, t0) = (p.c, p.lambda, p.theta.radians(), p.t0);
    let at = |c: f64, l: f64, th: f64, t0: f64| {
        coords(&gamma_apply(&ManifoldParams::unchecked(c, l, th, t0)))
    };
    vec![
        coords(&gamma_apply(&ManifoldParams::unchecked(1.0, l, th, t0))),
        (at(c, l + h, th, t0) - at(c, l - h, th, t0)) / (2.0 * h),
        (at(c, l, th + h, t0) - at(c, l, th - h, t0)) / (2.0 * h),
        (at(c, l, th, t0 + h) - at(c, l, th, t0 - h)) / (2.0 * h),
    ]
}

/// Metric projection of `d` onto the slice, seeded from `init` (θ overridden
/// by the four seeds).
pub fn project_radial(d: &DataPair, init: &ManifoldParams) -> Result<Projection> {
    let target = coords(d);
    let norm = target.norm();
    if !(norm > 0.0) {
        return Err(Error::Domain("cannot project zero data".into()));
    }
    let objective = |x: &[f64; 4]| (manifold_coords(x) - &target).norm_squared();
    let c0 = if init.c > 0.0 {
        init.c
    } else {
        norm / (2.0 * PI * PI).sqrt()
    };
    let runs: Vec<Simplex> = SEEDS
        .par_iter()
        .map(|&th| {
            let start = [c0, init.lambda.ln(), init.theta.radians() + th, init.t0];
            nelder_mead(
                objective,
                start,
                [0.1 * c0, 0.2, 0.3, 0.2],
                MAX_EVALUATIONS / SEEDS.len(),
            )
        })
        .collect();
    let best = runs
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .unwrap();
    let mut evaluations: usize = runs.iter().map(|s| s.evals).sum();
    let (mut x, gn_evals) = gauss_newton(&target, best.best);
    evaluations += gn_evals;
    if x[0] < 0.0 {
        x[0] = -x[0];
        x[2] += PI;
    }
    let params = ManifoldParams::new(x[0], x[1].exp(), x[2], x[3])?;
    let diff = &target - coords(&gamma_apply(&params));
    let residual = diff.norm();
    let mut orthogonality = 0.0;
    if residual > 1e-10 * norm {
        for t in tangents(&params, 1e-5 * params.lambda.max(1.0)) {
            let tn = t.norm();
            if tn > 0.0 {
                orthogonality = f64::max(orthogonality, diff.dot(&t).abs() / (residual * tn));
            }
        }
    }
    let stagnated = best.collapsed && orthogonality > 1e-5;
    Ok(Projection {
        params,
        residual,
        orthogonality,
        stagnated,
        evaluations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GramReport {
    /// Rows and columns ordered (Γf₀, ∂_λ, ∂_θ, ∂_{t₀}).
    pub matrix: [[f64; 4]; 4],
    pub eigenvalues: [f64; 4],
}

/// Gram matrix of the amplitude direction and the λ, θ, t₀ tangents at `at`.
pub fn gram_matrix(at: &ManifoldParams) -> Result<GramReport> {
    let t = tangents(at, GRAM_STEP);
    let m = Matrix4::from_fn(|i, j| t[i].dot(&t[j]));
    let scale = m.amax();
    let asym = (m - m.transpose()).amax();
    if asym > 1e-6 * scale {
        return Err(Error::Accuracy(format!("Gram matrix asymmetry {asym:.3e}")));
    }
    let eig = SymmetricEigen::new(m);
    let mut ev: [f64; 4] = std::array::from_fn(|k| eig.eigenvalues[k]);
    ev.sort_by(f64::total_cmp);
    Ok(GramReport {
        matrix: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])),
        eigenvalues: ev,
    })
}

/// A Gaussian bump with its components along the tangent space at `at`
/// removed, scaled to unit pair norm.
pub fn orthogonal_bump(at: &ManifoldParams) -> DataPair {
    let bump = DataPair::new(
        RadialProfile::new(|r| (-(r - 1.0) * (r - 1.0)).exp(), DecayClass::Schwartz),
        RadialProfile::new(|r| 0.5 * (-r * r).exp(), DecayClass::Schwartz),
    );
    let h = 1e-5;
    let (c, l, th, t0) = (at.c.max(1e-3), at.lambda, at.theta.radians(), at.t0);
    let g =
        |c: f64, l: f64, th: f64, t0: f64| gamma_apply(&ManifoldParams::unchecked(c, l, th, t0));
    let dirs = [
        g(1.0, l, th, t0),
        g(c, l + h, th, t0).combine(1.0 / (2.0 * h), &g(c, l - h, th, t0), -1.0 / (2.0 * h)),
        g(c, l, th + h, t0).combine(1.0 / (2.0 * h), &g(c, l, th - h, t0), -1.0 / (2.0 * h)),
        g(c, l, th, t0 + h).combine(1.0 / (2.0 * h), &g(c, l, th, t0 - h), -1.0 / (2.0 * h)),
    ];
    let tv: Vec<DVector<f64>> = dirs.iter().map(coords).collect();
    let bv = coords(&bump);
    let gram = DMatrix::from_fn(4, 4, |i, j| tv[i].dot(&tv[j]));
    let rhs = DVector::from_fn(4, |i, _| tv[i].dot(&bv));
    let a = gram
        .cholesky()
        .expect("tangent Gram matrix is positive definite")
        .solve(&rhs);
    let mut out = bump;
    for (k, d) in dirs.iter().enumerate() {
        out = out.combine(1.0, d, -a[k]);
    }
    let n = coords(&out).norm();
    out.scaled(1.0 / n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sobolev::pair_norm_sq;
    use crate::sphere::conformal_norm_sq;
    use proptest::prelude::*;

    const VOL: f64 = 2.0 * PI * PI;

    fn angle_gap(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d)
    }

    #[test]
    fn identity_gives_f0_pair() {
        let d = gamma_apply(&ManifoldParams::identity());
        for r in [0.0, 0.5, 3.0, 40.0] {
            assert!((d.f0.eval(r) - 2.0 / (1.0 + r * r)).abs() < 1e-15);
            assert!(d.f1.eval(r).abs() < 1e-15);
        }
    }

    #[test]
    fn phase_gives_family() {
        for th in [0.4, 2.0, 5.0] {
            let d = gamma_apply(&ManifoldParams::new(1.0, 1.0, th, 0.0).unwrap());
            let f = DataPair::maximizer(th);
            for r in [0.0, 0.5, 3.0, 40.0] {
                assert!((d.f0.eval(r) - f.f0.eval(r)).abs() < 1e-14);
                assert!((d.f1.eval(r) - f.f1.eval(r)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn time_derivative_matches_difference_quotient() {
        let h = 1e-5;
        for &(th, t, r) in &[(0.3, 0.2, 0.7), (2.0, -1.5, 3.0)] {
            let fd = (v_theta(th, t + h, r).0 - v_theta(th, t - h, r).0) / (2.0 * h);
            assert!((v_theta(th, t, r).1 - fd).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        assert!(ManifoldParams::new(-1.0, 1.0, 0.0, 0.0).is_err());
        assert!(ManifoldParams::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(project_radial(&DataPair::zero(), &ManifoldParams::identity()).is_err());
    }

    #[test]
    fn norm_through_fourier_route() {
        let p = ManifoldParams::new(0.8, 1.7, 1.0, 0.4).unwrap();
        let n = pair_norm_sq(&gamma_apply(&p)).unwrap();
        assert!((n.sqrt() - 0.8 * VOL.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn recovers_on_manifold_points() {
        for &(c, l, th, t0) in &[
            (0.3 / VOL.sqrt(), 1.0, 0.0, 0.0),
            (0.7, 1.6, 2.0, -0.4),
            (1.3, 0.6, 4.5, 0.8),
        ] {
            let p = ManifoldParams::new(c, l, th, t0).unwrap();
            let proj = project_radial(&gamma_apply(&p), &ManifoldParams::identity()).unwrap();
            let q = proj.params;
            assert!(proj.residual < 1e-8, "{proj:?}");
            assert!(
                (q.c - c).abs() < 1e-5 && (q.lambda - l).abs() < 1e-5 && (q.t0 - t0).abs() < 1e-5,
                "{proj:?}"
            );
            assert!(angle_gap(q.theta.radians(), th) < 1e-5, "{proj:?}");
            assert!(proj.orthogonality < 1e-5);
        }
    }

    #[test]
    fn bump_projection_is_orthogonal() {
        let p = ManifoldParams::new(0.3 / VOL.sqrt(), 1.0, 0.0, 0.0).unwrap();
        let bump = orthogonal_bump(&p);
        assert!((conformal_norm_sq(&bump) - 1.0).abs() < 1e-10);
        let d = gamma_apply(&p).combine(1.0, &bump, 1e-3);
        let proj = project_radial(&d, &ManifoldParams::identity()).unwrap();
        assert!(proj.orthogonality < 1e-6, "{proj:?}");
        assert!((proj.residual - 1e-3).abs() < 1e-6, "{proj:?}");
        assert!((proj.params.c - p.c).abs() < 1e-5);
    }

    #[test]
    fn gram_is_positive_definite() {
        let g = gram_matrix(&ManifoldParams::identity()).unwrap();
        assert!(g.eigenvalues.iter().all(|v| *v > 0.0), "{g:?}");
        assert!(g.matrix[0][2].abs() < 1e-6);
        for i in 0..4 {
            for j in 0..4 {
                assert!((g.matrix[i][j] - g.matrix[j][i]).abs() < 1e-8);
            }
        }
        assert!((g.matrix[0][0] - VOL).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn gamma_preserves_norm(c in 0.0f64..3.0, l in 0.5f64..2.0, th in 0.0f64..6.3, t0 in -1.0f64..1.0) {
            let p = ManifoldParams::new(c, l, th, t0).unwrap();
            let n = conformal_norm_sq(&gamma_apply(&p)).sqrt();
            prop_assert!((n - c * VOL.sqrt()).abs() < 1e-8);
        }
    }
}
