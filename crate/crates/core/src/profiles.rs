//! Orthogonality of symmetry-transform sequences and the decay of mixed
//! L⁴ integrals between orthogonally transformed fields.
//!
//! Boosts are stored through ℓ ≥ 1 with |β| = (ℓ² - 1)/(ℓ² + 1) and a
//! direction, so that γ = (ℓ + 1/ℓ)/2 stays accurate as |β| → 1.

use crate::coords::{BoostParams, PoincareParams};
use crate::error::{Error, Result};
use crate::penrose::Field;
use crate::quadrature::GaussRule;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::OnceLock;

pub const DEFAULT_N_MAX: usize = 1001;
pub const DEFAULT_GROW_THRESHOLD: f64 = 1e3;
pub const MIN_N_MAX: usize = 8;

/// A scalar sequence n ↦ value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expr {
    Const(f64),
    /// c^n
    Pow(f64),
    /// c·n
    Linear(f64),
}

impl Expr {
    pub fn eval(&self, n: usize) -> f64 {
        match *self {
            Expr::Const(c) => c,
            Expr::Pow(c) => c.powi(n as i32),
            Expr::Linear(c) => c * n as f64,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number {t:?} in {s:?}")))
        };
        if s == "n" {
            return Ok(Expr::Linear(1.0));
        }
        if let Some(base) = s.strip_suffix("^n") {
            return Ok(Expr::Pow(num(base)?));
        }
        if let Some(c) = s.strip_suffix("*n") {
            return Ok(Expr::Linear(num(c)?));
        }
        Ok(Expr::Const(num(s)?))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Pow(c) => write!(f, "{c}^n"),
            Expr::Linear(c) => write!(f, "{c}*n"),
        }
    }
}

/// Parameters of one transform: Λ(t, x) = L^β(λ(t - t₀), λ(x - x₀)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceTerm {
    pub lambda: f64,
    pub t: f64,
    pub x: [f64; 3],
    pub ell: f64,
    /// Unit boost direction (e₁ rotated by the `dir` angle in the x₁x₂ plane).
    pub dir: [f64; 3],
}

impl SequenceTerm {
    pub fn speed(&self) -> f64 {
        (self.ell - 1.0 / self.ell) / (self.ell + 1.0 / self.ell)
    }

    /// (γ, γ|β|).
    fn gamma_pair(&self) -> (f64, f64) {
        let inv = 1.0 / self.ell;
        (0.5 * (self.ell + inv), 0.5 * (self.ell - inv))
    }

    /// L^β p for this term's boost.
    fn boost(&self, p: [f64; 4]) -> [f64; 4] {
        let (g, gb) = self.gamma_pair();
        let d = self.dir;
        let par = d[0] * p[1] + d[1] * p[2] + d[2] * p[3];
        let tau = g * p[0] - gb * par;
        let par_new = g * par - gb * p[0];
        let k = par_new - par;
        [tau, p[1] + k * d[0], p[2] + k * d[1], p[3] + k * d[2]]
    }
}

/// n ↦ (λ_n, t_n, x_n, ℓ_n, direction angle φ_n).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransformSequence {
    pub lambda: Expr,
    pub t: Expr,
    pub x: [Expr; 3],
    pub ell: Expr,
    pub dir: Expr,
}

impl Default for TransformSequence {
    fn default() -> Self {
        Self::identity()
    }
}

impl TransformSequence {
    pub fn identity() -> Self {
        Self {
            lambda: Expr::Const(1.0),
            t: Expr::Const(0.0),
            x: [Expr::Const(0.0); 3],
            ell: Expr::Const(1.0),
            dir: Expr::Const(0.0),
        }
    }

    /// Parse `key=expr` pairs separated by commas; keys are lambda, t, x1,
    /// x2, x3, ell and dir, unset keys keep their identity values.
    pub fn parse(spec: &str) -> Result<Self> {
        let mut s = Self::identity();
        for item in spec.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=expr, got {item:?}")))?;
            let e = Expr::parse(v)?;
            match k.trim() {
                "lambda" => s.lambda = e,
                "t" => s.t = e,
                "x1" => s.x[0] = e,
                "x2" => s.x[1] = e,
                "x3" => s.x[2] = e,
                "ell" => s.ell = e,
                "dir" => s.dir = e,
                other => return Err(Error::Parse(format!("unknown sequence key {other:?}"))),
            }
        }
        Ok(s)
    }

    pub fn term(&self, n: usize) -> Result<SequenceTerm> {
        let lambda = self.lambda.eval(n);
        let ell = self.ell.eval(n);
        if !(lambda > 0.0) {
            return Err(Error::Domain(format!("λ_{n} = {lambda} must be positive")));
        }
        if !(ell >= 1.0) {
            return Err(Error::Domain(format!("ℓ_{n} = {ell} must be at least 1")));
        }
        let phi = self.dir.eval(n);
        Ok(SequenceTerm {
            lambda,
            t: self.t.eval(n),
            x: [self.x[0].eval(n), self.x[1].eval(n), self.x[2].eval(n)],
            ell,
            dir: [phi.cos(), phi.sin(), 0.0],
        })
    }

    pub fn poincare(&self, n: usize) -> Result<PoincareParams> {
        let s = self.term(n)?;
        let v = s.speed();
        let boost = BoostParams::new([v * s.dir[0], v * s.dir[1], v * s.dir[2]])?;
        PoincareParams::new(s.lambda, boost, s.t, s.x)
    }

    fn is_radial(&self) -> bool {
        self.ell == Expr::Const(1.0) && self.x.iter().all(|e| *e == Expr::Const(0.0))
    }
}

impl fmt::Display for TransformSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "lambda={},t={},x1={},x2={},x3={},ell={},dir={}",
            self.lambda, self.t, self.x[0], self.x[1], self.x[2], self.ell, self.dir
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum VerdictKind {
    Lorentz,
    Rescaling,
    Angular,
    Translation,
    None,
    Inconclusive,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VerdictKind::Lorentz => "lorentz",
            VerdictKind::Rescaling => "rescaling",
            VerdictKind::Angular => "angular",
            VerdictKind::Translation => "translation",
            VerdictKind::None => "none",
            VerdictKind::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct OrthogonalityVerdict {
    pub kind: VerdictKind,
    /// Value at n_max of the deciding indicator (the largest one otherwise).
    pub witness: f64,
    /// Indicators (lorentz, rescaling, angular, translation) at n_max.
    pub indicators: [f64; 4],
    pub note: Option<String>,
}

/// The four indicator values at index n; the angular one is None when
/// either boost vanishes.
fn indicators(a: &SequenceTerm, b: &SequenceTerm) -> [Option<f64>; 4] {
    let lorentz = a.ell / b.ell + b.ell / a.ell;
    let rescaling = a.lambda / b.lambda + b.lambda / a.lambda;
    let angular = if a.ell == 1.0 || b.ell == 1.0 {
        None
    } else {
        let d: f64 = (0..3)
            .map(|k| (a.dir[k] - b.dir[k]).powi(2))
            .sum::<f64>()
            .sqrt();
        Some(a.ell * d)
    };
    let l = a.lambda;
    let p = a.boost([
        l * (a.t - b.t),
        l * (a.x[0] - b.x[0]),
        l * (a.x[1] - b.x[1]),
        l * (a.x[2] - b.x[2]),
    ]);
    let translation = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    [Some(lorentz), Some(rescaling), angular, Some(translation)]
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Trend {
    Diverges,
    Bounded,
    Unclear,
}

fn trend(values: &[f64], threshold: f64) -> Trend {
    if values.iter().any(|v| v.is_nan()) {
        return Trend::Unclear;
    }
    if values.iter().all(|v| *v <= threshold) {
        return Trend::Bounded;
    }
    let tail = &values[values.len() / 2..];
    let last = *values.last().unwrap();
    if last > threshold && tail.windows(2).all(|w| w[1] >= w[0]) {
        Trend::Diverges
    } else {
        Trend::Unclear
    }
}

/// Orthogonality verdict from the indicators over n = 1..=n_max.
pub fn classify(
    a: &TransformSequence,
    b: &TransformSequence,
    n_max: usize,
    grow_threshold: f64,
) -> Result<OrthogonalityVerdict> {
    if n_max < MIN_N_MAX {
        return Err(Error::Config(format!(
            "n_max = {n_max} must be at least {MIN_N_MAX}"
        )));
    }
    let mut series: [Vec<f64>; 4] = Default::default();
    let mut skipped = 0usize;
    for n in 1..=n_max {
        let ind = indicators(&a.term(n)?, &b.term(n)?);
        for (k, v) in ind.iter().enumerate() {
            match v {
                Some(x) => series[k].push(*x),
                None => {
                    skipped += 1;
                    series[k].push(0.0)
                }
            }
        }
    }
    let note = (skipped > 0).then(|| {
        format!("angular indicator skipped at {skipped} indices: zero boost, direction undefined")
    });
    let last: [f64; 4] = std::array::from_fn(|k| *series[k].last().unwrap());
    let trends: Vec<Trend> = series.iter().map(|s| trend(s, grow_threshold)).collect();
    let kinds = [
        VerdictKind::Lorentz,
        VerdictKind::Rescaling,
        VerdictKind::Angular,
        VerdictKind::Translation,
    ];
    let (kind, witness) = match trends.iter().position(|t| *t == Trend::Diverges) {
        Some(k) => (kinds[k], last[k]),
        None => {
            let big = last.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if trends.iter().all(|t| *t == Trend::Bounded) {
                (VerdictKind::None, big)
            } else {
                (VerdictKind::Inconclusive, big)
            }
        }
    };
    Ok(OrthogonalityVerdict {
        kind,
        witness,
        indicators: last,
        note,
    })
}

/// Breakpoints on [-π/2, π/2] graded geometrically toward both ends.
fn graded_breaks() -> &'static [f64] {
    static BREAKS: OnceLock<Vec<f64>> = OnceLock::new();
    BREAKS.get_or_init(|| {
        let levels = 30;
        let mut half: Vec<f64> = (0..=levels)
            .map(|k| FRAC_PI_2 * (1.0 - 0.5f64.powi(k)))
            .collect();
        half.push(FRAC_PI_2);
        let mut breaks: Vec<f64> = half.iter().rev().map(|x| -x).collect();
        breaks.extend(half.iter().skip(1));
        breaks
    })
}

/// Composite 16-point rule whose panels are graded toward the ends both in
/// X and in X' = arctan(μ tan X + c).
fn frame_rule(mu: f64, c: f64) -> GaussRule {
    let base = graded_breaks();
    let mut breaks: Vec<f64> = base.to_vec();
    breaks.extend(
        base[1..base.len() - 1]
            .iter()
            .map(|&y| ((y.tan() - c) / mu).atan()),
    );
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    GaussRule::legendre(16).composite(&breaks)
}

/// ∬ |λ¹u₁∘Λ¹_n|^α |λ²u₂∘Λ²_n|^{4-α} dt dx for each n, with Λ restricted
/// to dilations and time translations.
///
/// In the frame of the larger dilation the integral becomes
/// 8π ∬_T |Ũ_K|^p |Ũ_J(X')|^q / sin²R with X' = arctan(μ tan X + c),
/// μ = λ_J/λ_K and c = λ_J(t_K - t_J).
pub fn mixed_l4_decay(
    w1: &Field,
    w2: &Field,
    a: &TransformSequence,
    b: &TransformSequence,
    alpha: f64,
    n_list: &[usize],
) -> Result<Vec<f64>> {
    if !(0.0..=4.0).contains(&alpha) {
        return Err(Error::Domain(format!("α = {alpha} must lie in [0, 4]")));
    }
    if !a.is_radial() || !b.is_radial() {
        return Err(Error::Domain(
            "mixed integrals need dilation/time-translation sequences (no boosts or spatial shifts)".into(),
        ));
    }
    n_list
        .par_iter()
        .map(|&n| {
            let (sa, sb) = (a.term(n)?, b.term(n)?);
            let ((fk, pk, sk), (fj, pj, sj)) = if sa.lambda >= sb.lambda {
                ((w1, alpha, sa), (w2, 4.0 - alpha, sb))
            } else {
                ((w2, 4.0 - alpha, sb), (w1, alpha, sa))
            };
            let mu = sj.lambda / sk.lambda;
            let c = sj.lambda * (sk.t - sj.t);
            let rule = frame_rule(mu, c);
            let x = &rule.nodes;
            let moved: Vec<f64> = x.iter().map(|&v| (mu * v.tan() + c).atan()).collect();
            let uk = fk.eval_tensor(x, x);
            let uj = fj.eval_tensor(&moved, &moved);
            let w = &rule.weights;
            let m = x.len();
            let mut total = 0.0;
            for i in 0..m {
                let mut row = 0.0;
                for j in 0..m {
                    if i == j {
                        continue;
                    }
                    let s = (x[j] - x[i]).sin();
                    row += w[j] * uk[[i, j]].abs().powf(pk) * uj[[i, j]].abs().powf(pj) / (s * s);
                }
                total += w[i] * row;
            }
            let v = 4.0 * PI * total;
            if !v.is_finite() {
                return Err(Error::Accuracy(format!(
                    "mixed integral not finite at n = {n}"
                )));
            }
            Ok(v)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::apply_poincare;
    use crate::penrose::{l4_norm4, maximizer_field, SquareGrid};

    fn seq(s: &str) -> TransformSequence {
        TransformSequence::parse(s).unwrap()
    }

    fn verdict(a: &str, b: &str) -> VerdictKind {
        classify(&seq(a), &seq(b), DEFAULT_N_MAX, DEFAULT_GROW_THRESHOLD)
            .unwrap()
            .kind
    }

    #[test]
    fn expression_parsing() {
        assert_eq!(Expr::parse("2^n").unwrap(), Expr::Pow(2.0));
        assert_eq!(Expr::parse("n").unwrap(), Expr::Linear(1.0));
        assert_eq!(Expr::parse("-0.5*n").unwrap(), Expr::Linear(-0.5));
        assert_eq!(Expr::parse(" 3 ").unwrap(), Expr::Const(3.0));
        assert!(Expr::parse("n^2").is_err());
        assert!(TransformSequence::parse("mu=2").is_err());
        assert!(TransformSequence::parse("lambda").is_err());
        let s = seq("lambda=2^n, t=n");
        assert_eq!(s.term(3).unwrap().lambda, 8.0);
        assert_eq!(seq(&s.to_string()), s);
    }

    #[test]
    fn boost_matches_coords() {
        let s = seq("ell=3,dir=0.7,lambda=2,t=0.5,x1=0.1").term(1).unwrap();
        let p = [0.3, -1.0, 2.0, 0.5];
        let q = apply_poincare(
            &seq("ell=3,dir=0.7,lambda=2,t=0.5,x1=0.1")
                .poincare(1)
                .unwrap(),
            p,
        );
        let shifted = [
            2.0 * (p[0] - 0.5),
            2.0 * (p[1] - 0.1),
            2.0 * p[2],
            2.0 * p[3],
        ];
        let r = s.boost(shifted);
        for k in 0..4 {
            assert!((q[k] - r[k]).abs() < 1e-12);
        }
        assert!((s.speed() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn canonical_verdicts() {
        assert_eq!(verdict("lambda=2^n", ""), VerdictKind::Rescaling);
        assert_eq!(verdict("", ""), VerdictKind::None);
        assert_eq!(
            verdict("lambda=3,t=n", "lambda=3"),
            VerdictKind::Translation
        );
        assert_eq!(verdict("ell=2^n", ""), VerdictKind::Lorentz);
        assert_eq!(
            verdict("ell=2^n,dir=0", "ell=2^n,dir=1.5707963267948966"),
            VerdictKind::Angular
        );
    }

    #[test]
    fn classification_is_symmetric() {
        for (a, b) in [
            ("lambda=2^n", "t=1"),
            ("ell=2^n", ""),
            ("t=n", "t=0.5*n,lambda=1"),
            ("x1=n", ""),
        ] {
            assert_eq!(verdict(a, b), verdict(b, a), "{a} vs {b}");
        }
    }

    #[test]
    fn bounded_oscillation_is_none_and_growth_without_trend_is_inconclusive() {
        assert_eq!(verdict("lambda=4", "lambda=0.5"), VerdictKind::None);
        assert_eq!(verdict("t=-1^n", ""), VerdictKind::None);
        // grows past the threshold but oscillates
        assert_eq!(verdict("t=-2^n", "t=2^n"), VerdictKind::Inconclusive);
        let v = classify(&seq(""), &seq(""), 20, 1e3).unwrap();
        assert!(v.note.is_some());
        assert!(classify(&seq(""), &seq(""), 4, 1e3).is_err());
    }

    #[test]
    fn huge_boosts_stay_finite() {
        let t = seq("ell=2^n").term(1000).unwrap();
        let (g, gb) = t.gamma_pair();
        assert!(g.is_finite() && gb.is_finite() && t.speed() == 1.0);
    }

    #[test]
    fn identical_sequences_give_constant_integral() {
        let g = SquareGrid::new(48).unwrap();
        let f = maximizer_field(&g, 0.0, 1.0);
        let s = seq("lambda=1.5^n,t=0.3*n");
        let v = mixed_l4_decay(&f, &f, &s, &s, 2.0, &[1, 3, 6]).unwrap();
        let want = l4_norm4(&f).unwrap();
        for x in v {
            assert!((x - want).abs() / want < 1e-9, "{x} {want}");
        }
    }

    #[test]
    fn endpoint_exponents_reduce_to_l4() {
        let g = SquareGrid::new(64).unwrap();
        let f = maximizer_field(&g, 0.4, 1.0);
        let want = l4_norm4(&f).unwrap();
        for alpha in [0.0, 4.0] {
            let v = mixed_l4_decay(
                &f,
                &f,
                &seq("lambda=2^n"),
                &seq("t=n"),
                alpha,
                &[1, 2, 4, 8],
            )
            .unwrap();
            for x in v {
                assert!((x - want).abs() / want < 1e-6, "α={alpha}: {x} {want}");
            }
        }
    }

    #[test]
    fn orthogonal_pairs_decay() {
        let g = SquareGrid::new(64).unwrap();
        let f = maximizer_field(&g, 0.0, 1.0);
        let ns: Vec<usize> = (1..=8).collect();
        let r = mixed_l4_decay(&f, &f, &seq("lambda=2^n"), &seq(""), 2.0, &ns).unwrap();
        assert!(r[7] < 0.05 * r[0], "{r:?}");
        let t = mixed_l4_decay(&f, &f, &seq("t=n"), &seq(""), 2.0, &ns).unwrap();
        assert!(t[2..].windows(2).all(|w| w[1] < w[0]), "{t:?}");
        assert!(mixed_l4_decay(&f, &f, &seq("ell=2"), &seq(""), 2.0, &ns).is_err());
        assert!(mixed_l4_decay(&f, &f, &seq(""), &seq(""), 5.0, &ns).is_err());
    }
}
