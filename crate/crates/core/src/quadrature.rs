//! Gauss–Legendre rules, barycentric interpolation, spectral cumulative
//! integration and Wynn's epsilon accelerator.

use ndarray::Array2;

/// Nodes and weights of a quadrature rule on an interval.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Value and derivative of the Legendre polynomial P_n at x.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    // P_n' from the standard identity; callers never ask for x = ±1.
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// P_0(x), ..., P_m(x).
pub fn legendre_values(m: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(m + 1);
    out.push(1.0);
    if m == 0 {
        return out;
    }
    out.push(x);
    for k in 2..=m {
        let kf = k as f64;
        let next = ((2.0 * kf - 1.0) * x * out[k - 1] - (kf - 1.0) * out[k - 2]) / kf;
        out.push(next);
    }
    out
}

impl GaussRule {
    /// n-point Gauss–Legendre rule on [-1, 1], nodes ascending.
    pub fn legendre(n: usize) -> Self {
        assert!(n >= 1, "a Gauss rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Affine image of a rule given on [-1, 1].
    pub fn on(&self, a: f64, b: f64) -> Self {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        Self {
            nodes: self.nodes.iter().map(|x| mid + half * x).collect(),
            weights: self.weights.iter().map(|w| w * half).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    /// Integral over [a, b] using this [-1, 1] rule without allocating.
    pub fn integrate_on<F: Fn(f64) -> f64>(&self, a: f64, b: f64, f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        half * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
    }

    /// Composite rule: this [-1, 1] rule copied onto every panel between
    /// consecutive breakpoints.
    pub fn composite(&self, breaks: &[f64]) -> Self {
        let mut nodes = Vec::with_capacity(self.len() * breaks.len());
        let mut weights = Vec::with_capacity(self.len() * breaks.len());
        for pair in breaks.windows(2) {
            let r = self.on(pair[0], pair[1]);
            nodes.extend(r.nodes);
            weights.extend(r.weights);
        }
        Self { nodes, weights }
    }
}

/// Barycentric Lagrange interpolation through a fixed node set.
#[derive(Debug, Clone)]
pub struct Barycentric {
    nodes: Vec<f64>,
    lam: Vec<f64>,
}

impl Barycentric {
    /// Weights for Gauss–Legendre nodes: (-1)^j sqrt((1 - ξ_j²) ω_j) in the
    /// reference variable. `rule` is the [-1, 1] rule, `a, b` the target
    /// interval.
    pub fn gauss(rule: &GaussRule, a: f64, b: f64) -> Self {
        let mapped = rule.on(a, b);
        let lam = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .enumerate()
            .map(|(j, (&x, &w))| {
                let s = ((1.0 - x * x) * w).sqrt();
                if j % 2 == 0 {
                    s
                } else {
                    -s
                }
            })
            .collect();
        Self {
            nodes: mapped.nodes,
            lam,
        }
    }

    /// Generic weights 1 / prod_{k != j}(x_j - x_k).
    pub fn new(nodes: Vec<f64>) -> Self {
        let n = nodes.len();
        let mut lam = vec![1.0; n];
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    lam[j] /= nodes[j] - nodes[k];
                }
            }
        }
        let scale = lam.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for l in &mut lam {
            *l /= scale;
        }
        Self { nodes, lam }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    fn coincident(&self, x: f64) -> Option<usize> {
        self.nodes.iter().position(|&xj| xj == x)
    }

    /// Differentiation matrix D with (D f)_i = p'(x_i).
    pub fn differentiation_matrix(&self) -> Array2<f64> {
        let n = self.nodes.len();
        let mut d = Array2::zeros((n, n));
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let v = (self.lam[j] / self.lam[i]) / (self.nodes[i] - self.nodes[j]);
                    d[[i, j]] = v;
                    diag -= v;
                }
            }
            d[[i, i]] = diag;
        }
        d
    }

    /// Lagrange basis values at x.
    pub fn basis(&self, x: f64) -> Vec<f64> {
        let n = self.nodes.len();
        if let Some(k) = self.coincident(x) {
            let mut l = vec![0.0; n];
            l[k] = 1.0;
            return l;
        }
        let mut l: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.lam)
            .map(|(&xj, &lj)| lj / (x - xj))
            .collect();
        let s: f64 = l.iter().sum();
        for v in &mut l {
            *v /= s;
        }
        l
    }

    /// Lagrange basis values and first derivatives at x.
    #[allow(clippy::needless_range_loop)]
    pub fn basis_with_derivative(&self, x: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.nodes.len();
        if let Some(k) = self.coincident(x) {
            let mut l = vec![0.0; n];
            l[k] = 1.0;
            let mut dl = vec![0.0; n];
            let mut diag = 0.0;
            for j in 0..n {
                if j != k {
                    let v = (self.lam[j] / self.lam[k]) / (self.nodes[k] - self.nodes[j]);
                    dl[j] = v;
                    diag -= v;
                }
            }
            dl[k] = diag;
            return (l, dl);
        }
        let a: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.lam)
            .map(|(&xj, &lj)| lj / (x - xj))
            .collect();
        let den: f64 = a.iter().sum();
        let dden: f64 = self
            .nodes
            .iter()
            .zip(&a)
            .map(|(&xj, &aj)| -aj / (x - xj))
            .sum();
        let l: Vec<f64> = a.iter().map(|aj| aj / den).collect();
        let dl = self
            .nodes
            .iter()
            .zip(a.iter().zip(&l))
            .map(|(&xj, (&aj, &lj))| (-aj / (x - xj) - lj * dden) / den)
            .collect();
        (l, dl)
    }

    pub fn eval(&self, values: &[f64], x: f64) -> f64 {
        self.basis(x).iter().zip(values).map(|(l, v)| l * v).sum()
    }

    /// Interpolation matrix L with L[i, j] = l_j(points[i]).
    pub fn matrix(&self, points: &[f64]) -> Array2<f64> {
        let n = self.nodes.len();
        let mut m = Array2::zeros((points.len(), n));
        for (i, &x) in points.iter().enumerate() {
            for (j, v) in self.basis(x).into_iter().enumerate() {
                m[[i, j]] = v;
            }
        }
        m
    }
}

/// Spectral integration matrix on the Gauss–Legendre nodes of [a, b]:
/// (Q f)_i = ∫_a^{x_i} p(x) dx where p interpolates f at the nodes.
pub fn integration_matrix(rule: &GaussRule, a: f64, b: f64) -> Array2<f64> {
    let n = rule.len();
    let half = 0.5 * (b - a);
    // c_m = (2m+1)/2 Σ_k w_k P_m(ξ_k) f_k, and ∫_{-1}^{ξ} P_m = J_m(ξ).
    let p_at_nodes: Vec<Vec<f64>> = rule.nodes.iter().map(|&x| legendre_values(n, x)).collect();
    let mut j_at_nodes = vec![vec![0.0; n]; n];
    for (i, x) in rule.nodes.iter().enumerate() {
        let p = &p_at_nodes[i];
        j_at_nodes[i][0] = x + 1.0;
        for m in 1..n {
            j_at_nodes[i][m] = (p[m + 1] - p[m - 1]) / (2.0 * m as f64 + 1.0);
        }
    }
    let mut q = Array2::zeros((n, n));
    for i in 0..n {
        for k in 0..n {
            let mut s = 0.0;
            for m in 0..n {
                s += (m as f64 + 0.5) * p_at_nodes[k][m] * j_at_nodes[i][m];
            }
            q[[i, k]] = half * rule.weights[k] * s;
        }
    }
    q
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums; returns
/// the highest even-column estimate that could be formed.
pub fn wynn_epsilon(partial: &[f64]) -> f64 {
    let n = partial.len();
    if n == 0 {
        return 0.0;
    }
    let mut best = partial[n - 1];
    let mut prev = vec![0.0; n + 1];
    let mut cur = partial.to_vec();
    for k in 1..n {
        let mut next = Vec::with_capacity(n - k);
        for j in 0..n - k {
            let d = cur[j + 1] - cur[j];
            if d == 0.0 || !d.is_finite() {
                return best;
            }
            next.push(prev[j + 1] + 1.0 / d);
        }
        prev = cur;
        cur = next;
        if k % 2 == 0 {
            match cur.last() {
                Some(v) if v.is_finite() => best = *v,
                _ => return best,
            }
        }
    }
    best
}
