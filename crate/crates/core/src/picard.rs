//! Small-data solver Ũ = Ũ_lin + σ⊡⁻¹(Ũ³) by Picard iteration, plus the
//! δ-sweeps built on it: order fits, the δ⁶ coefficient, the θ-scan and
//! the perturbation residual.

use crate::duhamel::{antibox_cubic, antibox_cubic_anchored, Anchor};
use crate::error::{Error, Result};
use crate::functional::{scal_closed_form, ConstantsTable, PhaseAngle};
use crate::penrose::{
    l4_norm4, lift_data, linear_evolve, maximizer_field, Field, SquareGrid, DEFAULT_NODES,
};
use crate::sobolev::DataPair;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

pub const DEFAULT_FP_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 60;

/// Update ratio above which the iteration is declared non-contracting.
const DIVERGENCE_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub sigma: f64,
    pub delta: f64,
    pub theta: PhaseAngle,
    pub grid_n: usize,
    pub fp_tol: f64,
    pub max_iter: usize,
    #[serde(skip)]
    pub anchor: Anchor,
}

impl SolverConfig {
    pub fn new(sigma: f64, delta: f64, theta: f64) -> Self {
        Self {
            sigma,
            delta,
            theta: PhaseAngle::new(theta),
            grid_n: DEFAULT_NODES,
            fp_tol: DEFAULT_FP_TOL,
            max_iter: DEFAULT_MAX_ITER,
            anchor: Anchor::Scattering,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = PhaseAngle::new(theta);
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_grid(mut self, n: usize) -> Self {
        self.grid_n = n;
        self
    }

    pub fn with_anchor(mut self, anchor: Anchor) -> Self {
        self.anchor = anchor;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fp_tol > 0.0) {
            return Err(Error::Config(format!(
                "fp_tol = {} must be positive",
                self.fp_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be at least 1".into()));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::Config(format!(
                "delta = {} must be a nonnegative number",
                self.delta
            )));
        }
        if !self.sigma.is_finite() {
            return Err(Error::Config("sigma must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub field: Field,
    pub linear: Field,
    pub iterations: usize,
    pub final_residual: f64,
    pub l4_norm4: f64,
    /// Sup-norm of each update.
    pub updates: Vec<f64>,
}

/// δ·g_θ with g_θ = f_θ/|S³|^{1/2}.
pub fn family_data(theta: f64, delta: f64) -> DataPair {
    DataPair::maximizer(theta).scaled(delta / (2.0 * PI * PI).sqrt())
}

/// Solve from arbitrary radial data (already scaled to the wanted norm).
pub fn solve(d: &DataPair, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let grid = SquareGrid::new(cfg.grid_n)?;
    let lin = linear_evolve(&lift_data(d), &grid)?;
    iterate(lin, cfg)
}

/// Solve for δ·g_θ using the closed-form free field.
pub fn solve_family(cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    let grid = SquareGrid::new(cfg.grid_n)?;
    let amp = cfg.delta / (2.0 * PI * PI).sqrt();
    iterate(maximizer_field(&grid, cfg.theta.radians(), amp), cfg)
}

/// Fixed-point loop from a given free field.
pub fn iterate(lin: Field, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    if lin.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "linear field contains non-finite values".into(),
        ));
    }
    let mut u = lin.clone();
    let mut updates = Vec::new();
    for k in 1..=cfg.max_iter {
        let next = if cfg.sigma == 0.0 {
            lin.clone()
        } else {
            lin.combine(1.0, &antibox_cubic_anchored(&u, cfg.anchor), cfg.sigma)?
        };
        let upd = next.max_abs_diff(&u);
        u = next;
        if !upd.is_finite() {
            return Err(Error::Divergence(format!(
                "update became non-finite at iteration {k}"
            )));
        }
        updates.push(upd);
        if upd < cfg.fp_tol {
            let l4 = l4_norm4(&u)?;
            return Ok(SolveReport {
                field: u,
                linear: lin,
                iterations: k,
                final_residual: upd,
                l4_norm4: l4,
                updates,
            });
        }
        if k > 3 && upd > 1e3 * cfg.fp_tol {
            let prev = updates[k - 2];
            if upd / prev > DIVERGENCE_RATIO {
                return Err(Error::Divergence(format!(
                    "update ratio {:.3} at iteration {k} (δ = {} too large)",
                    upd / prev,
                    cfg.delta
                )));
            }
        }
    }
    let n = updates.len();
    if n >= 2 && updates[n - 1] >= updates[n - 2] {
        Err(Error::Divergence(format!(
            "updates still growing after {} iterations",
            cfg.max_iter
        )))
    } else {
        Err(Error::Accuracy(format!(
            "no convergence to {} in {} iterations (last update {:.3e})",
            cfg.fp_tol,
            cfg.max_iter,
            updates.last().copied().unwrap_or(f64::NAN)
        )))
    }
}

/// N(δ, θ) = ‖Φ(δg_θ)‖⁴_{L⁴}.
pub fn family_norm4(cfg: &SolverConfig) -> Result<f64> {
    Ok(solve_family(cfg)?.l4_norm4)
}

/// Largest δ of an ascending list for which the iteration contracts.
pub fn contraction_threshold(base: &SolverConfig, deltas: &[f64]) -> Option<f64> {
    let mut best = None;
    for &d in deltas {
        match solve_family(&base.with_delta(d)) {
            Ok(_) => best = Some(d),
            Err(_) => break,
        }
    }
    best
}

/// Least-squares slope of log y against log x.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// `k` geometrically spaced values from `a` to `b`.
pub fn geometric(a: f64, b: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![a];
    }
    (0..k)
        .map(|i| a * (b / a).powf(i as f64 / (k - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OrderFit {
    pub slope1: f64,
    pub slope2: f64,
    pub deltas: Vec<f64>,
    /// ‖Φ - S‖_{L⁴} per δ.
    pub first: Vec<f64>,
    /// ‖Φ - S - σ⊡⁻¹(S³)‖_{L⁴} per δ.
    pub second: Vec<f64>,
}

/// Log-log slopes of the first- and second-order Picard remainders.
pub fn order_fit(base: &SolverConfig, deltas: &[f64]) -> Result<OrderFit> {
    if deltas.len() < 4 {
        return Err(Error::Config(format!(
            "order fit needs at least 4 deltas, got {}",
            deltas.len()
        )));
    }
    let rows: Vec<(f64, f64)> = deltas
        .par_iter()
        .map(|&d| {
            let rep = solve_family(&base.with_delta(d))?;
            let r1 = rep.field.sub(&rep.linear)?;
            let r2 = r1.combine(1.0, &antibox_cubic(&rep.linear), -base.sigma)?;
            Ok((l4_norm4(&r1)?.powf(0.25), l4_norm4(&r2)?.powf(0.25)))
        })
        .collect::<Result<_>>()?;
    let (first, second): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
    Ok(OrderFit {
        slope1: log_log_slope(deltas, &first),
        slope2: log_log_slope(deltas, &second),
        deltas: deltas.to_vec(),
        first,
        second,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    pub c6_measured: f64,
    pub c8_bound: f64,
    pub deltas: Vec<f64>,
    pub norm4: Vec<f64>,
    /// (N - S₀δ⁴ - c6δ⁶)/δ⁸ per δ.
    pub c8_ratios: Vec<f64>,
    /// Richardson estimate of c6 from each pair (δ, δ/√2).
    pub c6_estimates: Vec<f64>,
    /// 4σS(v_θ)/|S³|³.
    pub c6_factor_four: f64,
    /// σS(v_θ)/|S³|³; equals σS₁ at the best phase.
    pub c6_without_factor: f64,
}

impl ExpansionReport {
    /// (max - min)/max|·| of the δ⁸ ratios over deltas in [lo, hi].
    pub fn c8_variation(&self, lo: f64, hi: f64) -> f64 {
        let r: Vec<f64> = self
            .deltas
            .iter()
            .zip(&self.c8_ratios)
            .filter(|(d, _)| **d >= lo - 1e-12 && **d <= hi + 1e-12)
            .map(|(_, r)| *r)
            .collect();
        let max = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
        let big = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (max - min) / big
    }
}

/// δ⁶ coefficient of N(δ) by Richardson extrapolation on (δ, δ/√2), taken
/// at the smallest δ, and the δ⁸ remainder over the sweep.
pub fn expansion_coefficient(base: &SolverConfig, deltas: &[f64]) -> Result<ExpansionReport> {
    if deltas.len() < 5 {
        return Err(Error::Config(format!(
            "expansion needs at least 5 deltas, got {}",
            deltas.len()
        )));
    }
    let s0 = ConstantsTable::standard().s0;
    let q = |d: f64, n: f64| (n - s0 * d.powi(4)) / d.powi(6);
    let pairs: Vec<(f64, f64)> = deltas
        .par_iter()
        .map(|&d| {
            let n = family_norm4(&base.with_delta(d))?;
            let h = family_norm4(&base.with_delta(d / 2f64.sqrt()))?;
            Ok((n, h))
        })
        .collect::<Result<_>>()?;
    let c6_estimates: Vec<f64> = deltas
        .iter()
        .zip(&pairs)
        .map(|(&d, &(n, h))| 2.0 * q(d / 2f64.sqrt(), h) - q(d, n))
        .collect();
    let smallest = deltas
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let c6 = c6_estimates[smallest];
    let norm4: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let c8_ratios: Vec<f64> = deltas
        .iter()
        .zip(&norm4)
        .map(|(&d, &n)| (n - s0 * d.powi(4) - c6 * d.powi(6)) / d.powi(8))
        .collect();
    let c8_bound = c8_ratios.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let vol3 = ConstantsTable::standard().sphere_volume.powi(3);
    let s = scal_closed_form(base.theta);
    Ok(ExpansionReport {
        c6_measured: c6,
        c8_bound,
        deltas: deltas.to_vec(),
        norm4,
        c8_ratios,
        c6_estimates,
        c6_factor_four: 4.0 * base.sigma * s / vol3,
        c6_without_factor: base.sigma * s / vol3,
    })
}

/// `m` equally spaced phases k·2π/m.
pub fn theta_grid(m: usize) -> Vec<f64> {
    (0..m).map(|k| 2.0 * PI * k as f64 / m as f64).collect()
}

/// Phase maximising N(δ, θ) over the grid, with the maximum.
pub fn candidate_max(base: &SolverConfig, thetas: &[f64]) -> Result<(PhaseAngle, f64)> {
    if thetas.is_empty() {
        return Err(Error::Config("empty θ grid".into()));
    }
    let values: Vec<f64> = thetas
        .par_iter()
        .map(|&th| family_norm4(&base.with_theta(th)))
        .collect::<Result<_>>()?;
    let (k, v) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, v)| (k, *v))
        .unwrap();
    Ok((PhaseAngle::new(thetas[k]), v))
}

/// ‖Φ((δ+ε)g_θ) - (1 + ε/δ)Φ(δg_θ)‖_{L⁴}.
pub fn perturbation_residual(base: &SolverConfig, eps: f64) -> Result<f64> {
    let d = base.delta;
    if !(d > 0.0) {
        return Err(Error::Domain(format!("δ = {d} must be positive")));
    }
    let u = solve_family(base)?.field;
    let ue = solve_family(&base.with_delta(d + eps))?.field;
    Ok(l4_norm4(&ue.combine(1.0, &u, -(1.0 + eps / d))?)?.powf(0.25))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn zero_data_is_one_iteration() {
        let rep = solve(&DataPair::zero(), &SolverConfig::new(1.0, 0.0, 0.0)).unwrap();
        assert_eq!(rep.iterations, 1);
        assert_eq!(rep.field.sup_norm(), 0.0);
    }

    #[test]
    fn converges_and_contracts() {
        let cfg = SolverConfig::new(1.0, 0.2, 0.0);
        let rep = solve_family(&cfg).unwrap();
        assert!(rep.final_residual <= cfg.fp_tol);
        assert!(rep.field.swap_asymmetry() < 1e-10);
        let diff = rep.field.max_abs_diff(&rep.linear);
        assert!(diff > 0.0 && diff < 0.2f64.powi(3));
        for w in rep.updates.windows(2) {
            assert!(w[1] < w[0] || w[1] < 1e-14);
        }
    }

    #[test]
    fn update_ratios_settle_for_moderate_delta() {
        for sigma in [1.0, -1.0] {
            let rep = solve_family(&SolverConfig::new(sigma, 0.5, 0.0)).unwrap();
            // ratios of updates well above round-off, from iteration 3 on
            let u: Vec<f64> = rep
                .updates
                .iter()
                .copied()
                .take_while(|v| *v > 1e-13)
                .collect();
            let ratios: Vec<f64> = u.windows(2).map(|w| w[1] / w[0]).skip(2).collect();
            assert!(ratios.len() >= 2, "{u:?}");
            assert!(ratios.iter().all(|r| *r < 1.0));
            for w in ratios.windows(2) {
                assert!(w[1] <= 1.1 * w[0], "{ratios:?}");
            }
        }
    }

    #[test]
    fn general_solver_matches_family_solver() {
        let cfg = SolverConfig::new(-1.0, 0.3, 0.7);
        let a = solve(&family_data(0.7, 0.3), &cfg).unwrap();
        let b = solve_family(&cfg).unwrap();
        assert!(a.field.max_abs_diff(&b.field) < 1e-12);
    }

    #[test]
    fn large_data_diverges() {
        let err = solve_family(&SolverConfig::new(1.0, 50.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)), "{err}");
    }

    #[test]
    fn bad_config_and_nan_input() {
        let mut cfg = SolverConfig::new(1.0, 0.1, 0.0);
        cfg.fp_tol = 0.0;
        assert!(matches!(solve_family(&cfg), Err(Error::Config(_))));
        let g = SquareGrid::new(16).unwrap();
        let mut f = Field::zeros(&g).into_values();
        f[[0, 1]] = f64::NAN;
        let bad = Field::new(g.clone(), f);
        assert!(bad.is_err());
        assert!(matches!(
            order_fit(&SolverConfig::new(1.0, 0.1, 0.0), &[0.1, 0.2]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn threshold_is_found() {
        let t = contraction_threshold(
            &SolverConfig::new(1.0, 0.0, 0.0).with_grid(48),
            &[0.5, 2.0, 50.0],
        );
        assert!(t.is_some_and(|d| (0.5..50.0).contains(&d)));
    }

    #[test]
    fn slope_of_exact_power() {
        let x = geometric(0.1, 1.0, 6);
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v.powi(3)).collect();
        assert!((log_log_slope(&x, &y) - 3.0).abs() < 1e-12);
        assert!(rel(x[5], 1.0) < 1e-15);
    }

    #[test]
    fn norm_is_even_and_pi_periodic_in_theta() {
        // Time reversal maps θ to -θ and the retarded solution to the
        // advanced one, so evenness is exact only for Cauchy anchoring;
        // the retarded norms differ at order δ⁸.
        let d = 0.4;
        let cauchy = SolverConfig::new(1.0, d, 0.0).with_anchor(Anchor::Cauchy);
        let retarded = SolverConfig::new(1.0, d, 0.0);
        for th in [0.3, 1.1] {
            let a = family_norm4(&cauchy.with_theta(th)).unwrap();
            let b = family_norm4(&cauchy.with_theta(-th)).unwrap();
            let c = family_norm4(&cauchy.with_theta(th + PI)).unwrap();
            assert!(rel(a, b) < 1e-9, "{a} {b}");
            assert!(rel(a, c) < 1e-9, "{a} {c}");
            let a = family_norm4(&retarded.with_theta(th)).unwrap();
            let b = family_norm4(&retarded.with_theta(-th)).unwrap();
            let c = family_norm4(&retarded.with_theta(th + PI)).unwrap();
            assert!(rel(a, c) < 1e-9, "{a} {c}");
            assert!((a - b).abs() / d.powi(8) < 1e-3, "{a} {b}");
        }
    }

    #[test]
    fn grid_refinement_is_stable() {
        let base = SolverConfig::new(1.0, 0.5, 0.4);
        let a = family_norm4(&base).unwrap();
        let b = family_norm4(&base.with_grid(144)).unwrap();
        assert!(rel(a, b) < 1e-10, "{a} {b}");
    }

    #[test]
    fn perturbation_vanishes_at_zero_eps() {
        assert_eq!(
            perturbation_residual(&SolverConfig::new(1.0, 0.3, 0.0), 0.0).unwrap(),
            0.0
        );
    }
}
