//! Monic probabilists' Hermite polynomials, Gauss–Hermite rules and the
//! scaled basis functions P_K, P_Φ and Q.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::index::factorial;

/// H_n(x) via H_{n+1} = x H_n − n H_{n−1}.
pub fn hermite_eval(n: u32, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return p0;
    }
    for k in 1..n {
        let p2 = x * p1 - k as f64 * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// H_0(x), ..., H_n(x).
pub fn hermite_all(n: u32, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 1..n as usize {
        let v = x * out[k] - k as f64 * out[k - 1];
        out.push(v);
    }
    out
}

/// H_n(x)/√(n!), stable for large n.
pub fn hermite_normalized_all(n: u32, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n as usize + 1);
    out.push(1.0);
    if n >= 1 {
        out.push(x);
    }
    for k in 1..n as usize {
        let kf = k as f64;
        let v = (x * out[k] - kf.sqrt() * out[k - 1]) / (kf + 1.0).sqrt();
        out.push(v);
    }
    out
}

/// ‖H_n‖² in L²(ν) = n!.
pub fn hermite_norm_sq(n: u32) -> Result<f64> {
    factorial(n)
}

pub fn ln_hermite_norm_sq(n: u32) -> f64 {
    crate::index::ln_factorial(n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    /// e^{−x²} on ℝ.
    Standard,
    /// N(0, h/2).
    Configuration { h: f64 },
    /// N(0, h).
    Phase { h: f64 },
}

#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub weight_kind: WeightKind,
}

impl QuadratureRule {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn integrate_c<F: FnMut(f64) -> Complex64>(&self, mut f: F) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f(x) * w)
            .sum()
    }

    /// Rescales the standard rule to a probability measure.
    pub fn for_measure(&self, kind: WeightKind) -> Result<QuadratureRule> {
        if self.weight_kind != WeightKind::Standard {
            return invalid("rule is already adapted to a measure");
        }
        let scale = match kind {
            WeightKind::Standard => return Ok(self.clone()),
            WeightKind::Configuration { h } => positive_h(h)?.sqrt(),
            WeightKind::Phase { h } => (2.0 * positive_h(h)?).sqrt(),
        };
        let norm = std::f64::consts::PI.sqrt().recip();
        Ok(QuadratureRule {
            nodes: self.nodes.iter().map(|t| t * scale).collect(),
            weights: self.weights.iter().map(|w| w * norm).collect(),
            weight_kind: kind,
        })
    }
}

fn positive_h(h: f64) -> Result<f64> {
    if h > 0.0 && h.is_finite() {
        Ok(h)
    } else {
        invalid(format!("h must be positive, got {h}"))
    }
}

pub const MAX_RULE_ORDER: usize = 512;

fn rule_cache() -> &'static Mutex<HashMap<usize, Arc<QuadratureRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<QuadratureRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// n-point Gauss–Hermite rule for e^{−x²}, nodes ascending. Cached.
pub fn gauss_hermite_rule(n: usize) -> Result<Arc<QuadratureRule>> {
    if n == 0 || n > MAX_RULE_ORDER {
        return invalid(format!("Gauss–Hermite order {n} out of range"));
    }
    if let Some(r) = rule_cache().lock().unwrap().get(&n) {
        return Ok(r.clone());
    }
    let rule = Arc::new(compute_gauss_hermite(n)?);
    rule_cache().lock().unwrap().insert(n, rule.clone());
    Ok(rule)
}

// Newton iteration on orthonormal physicists' polynomials with the usual
// asymptotic starting guesses.
fn compute_gauss_hermite(n: usize) -> Result<QuadratureRule> {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        let mut ok = false;
        for _ in 0..100 {
            let (mut p1, mut p2) = (PIM4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                ok = true;
                break;
            }
        }
        if !ok {
            return Err(Error::NonConvergence {
                what: "Gauss–Hermite root finder".into(),
                detail: format!("order {n}, root {i}"),
            });
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    x.reverse();
    w.reverse();
    Ok(QuadratureRule {
        nodes: x,
        weights: w,
        weight_kind: WeightKind::Standard,
    })
}

/// Rule for N(0, h/2) or N(0, h).
pub fn measure_rule(n: usize, kind: WeightKind) -> Result<QuadratureRule> {
    gauss_hermite_rule(n)?.for_measure(kind)
}

/// Result of an order-doubling loop.
#[derive(Debug, Clone)]
pub struct Adaptive<T> {
    pub value: T,
    pub order: usize,
    pub converged: bool,
    pub change: f64,
}

pub const ADAPTIVE_RTOL: f64 = 1e-10;
pub const ADAPTIVE_MAX_ORDER: usize = 128;

/// Doubles the order from `start` until two successive values differ by less
/// than `rtol` (relative to the latest magnitude) or `max_order` is exceeded.
pub fn adaptive<T, F, D>(start: usize, max_order: usize, rtol: f64, mut eval: F, dist: D) -> Result<Adaptive<T>>
where
    F: FnMut(usize) -> Result<T>,
    D: Fn(&T, &T) -> (f64, f64),
{
    let mut n = start.max(1);
    let mut prev = eval(n)?;
    let mut change = f64::INFINITY;
    while n * 2 <= max_order {
        n *= 2;
        let next = eval(n)?;
        let (diff, scale) = dist(&prev, &next);
        change = diff / scale.max(1e-300);
        prev = next;
        if diff <= rtol * scale.max(1.0e-3) {
            return Ok(Adaptive {
                value: prev,
                order: n,
                converged: true,
                change,
            });
        }
    }
    Ok(Adaptive {
        value: prev,
        order: n,
        converged: false,
        change,
    })
}

pub fn scalar_dist(a: &f64, b: &f64) -> (f64, f64) {
    ((a - b).abs(), b.abs())
}

pub fn complex_dist(a: &Complex64, b: &Complex64) -> (f64, f64) {
    ((a - b).norm(), b.norm())
}

pub fn matrix_dist(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> (f64, f64) {
    let diff = a
        .iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    let scale = b.iter().map(|x| x.norm()).fold(0.0, f64::max);
    (diff, scale)
}

/// Tensor Gauss–Hermite grid for ∫ g(v) e^{−(v−c)ᵀ S (v−c)} dv with S symmetric
/// positive definite; nodes are v = c + L^{−T} t where S = L Lᵀ.
#[derive(Debug, Clone)]
pub struct GaussianGrid {
    dim: usize,
    rule: Arc<QuadratureRule>,
    center: Vec<f64>,
    map: DMatrix<f64>,
    jacobian: f64,
}

impl GaussianGrid {
    pub fn new(order: usize, s: &DMatrix<f64>, center: &[f64]) -> Result<Self> {
        let d = s.nrows();
        if s.ncols() != d || center.len() != d {
            return invalid("grid dimension mismatch");
        }
        let chol = nalgebra::Cholesky::new(s.clone())
            .ok_or_else(|| Error::InvalidArgument("quadratic form is not positive definite".into()))?;
        let l = chol.l();
        let det_l: f64 = (0..d).map(|i| l[(i, i)]).product();
        let map = l
            .transpose()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("singular quadratic form".into()))?;
        Ok(GaussianGrid {
            dim: d,
            rule: gauss_hermite_rule(order)?,
            center: center.to_vec(),
            map,
            jacobian: 1.0 / det_l,
        })
    }

    /// Isotropic weight e^{−|v−c|²/(2σ²)}.
    pub fn isotropic(order: usize, dim: usize, sigma: f64, center: &[f64]) -> Result<Self> {
        let s = DMatrix::from_diagonal_element(dim, dim, 1.0 / (2.0 * sigma * sigma));
        GaussianGrid::new(order, &s, center)
    }

    pub fn len(&self) -> usize {
        self.rule.order().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Writes node `i` into `v` and returns its weight.
    pub fn node(&self, mut i: usize, t: &mut [f64], v: &mut [f64]) -> f64 {
        let n = self.rule.order();
        let mut w = self.jacobian;
        for k in (0..self.dim).rev() {
            let d = i % n;
            i /= n;
            t[k] = self.rule.nodes[d];
            w *= self.rule.weights[d];
        }
        for r in 0..self.dim {
            let mut s = self.center[r];
            for c in 0..self.dim {
                s += self.map[(r, c)] * t[c];
            }
            v[r] = s;
        }
        w
    }

    /// Σ w g(v); `g` receives v and the reduced coordinates t (for which
    /// (v−c)ᵀS(v−c) = |t|²).
    pub fn integrate<F>(&self, g: F) -> Complex64
    where
        F: Fn(&[f64], &[f64]) -> Complex64 + Sync,
    {
        use rayon::prelude::*;
        const CHUNK: usize = 4096;
        let len = self.len();
        let chunks = len.div_ceil(CHUNK);
        let partial: Vec<Complex64> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut t = vec![0.0; self.dim];
                let mut v = vec![0.0; self.dim];
                let mut acc = Complex64::new(0.0, 0.0);
                for i in c * CHUNK..((c + 1) * CHUNK).min(len) {
                    let w = self.node(i, &mut t, &mut v);
                    acc += g(&v, &t) * w;
                }
                acc
            })
            .collect();
        partial.into_iter().sum()
    }
}

/// Which family a basis function belongs to.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisFunctionSpec {
    /// Π H_{α_j}(x_j √(2/h)) on configuration space.
    PK { alpha: Vec<u32>, h: f64 },
    /// Π H_{α_j}(x_j/√h) H_{β_j}(ξ_j/√h) on phase space.
    PPhi { alpha: Vec<u32>, beta: Vec<u32>, h: f64 },
    /// (2h)^{−|α|/2} Π (x_j − iξ_j)^{α_j} on phase space.
    Q { alpha: Vec<u32>, h: f64 },
}

/// Evaluates a basis function; `x` is the configuration point or the x-block,
/// `xi` the ξ-block (ignored for P_K).
pub fn basis_eval(spec: &BasisFunctionSpec, x: &[f64], xi: &[f64]) -> Result<Complex64> {
    match spec {
        BasisFunctionSpec::PK { alpha, h } => {
            check_dims(alpha.len(), x.len())?;
            Ok(Complex64::new(p_config(alpha, x, positive_h(*h)?), 0.0))
        }
        BasisFunctionSpec::PPhi { alpha, beta, h } => {
            check_dims(alpha.len(), x.len())?;
            check_dims(beta.len(), xi.len())?;
            Ok(Complex64::new(p_phase(alpha, beta, x, xi, positive_h(*h)?), 0.0))
        }
        BasisFunctionSpec::Q { alpha, h } => {
            check_dims(alpha.len(), x.len())?;
            check_dims(alpha.len(), xi.len())?;
            Ok(q_phase(alpha, x, xi, positive_h(*h)?))
        }
    }
}

fn check_dims(a: usize, b: usize) -> Result<()> {
    if a != b {
        return invalid(format!("point dimension {b} does not match index dimension {a}"));
    }
    Ok(())
}

pub fn p_config(alpha: &[u32], u: &[f64], h: f64) -> f64 {
    let s = (2.0 / h).sqrt();
    alpha
        .iter()
        .zip(u)
        .map(|(&a, &x)| hermite_eval(a, x * s))
        .product()
}

pub fn p_phase(alpha: &[u32], beta: &[u32], x: &[f64], xi: &[f64], h: f64) -> f64 {
    let s = h.sqrt().recip();
    let mut p = 1.0;
    for j in 0..alpha.len() {
        p *= hermite_eval(alpha[j], x[j] * s) * hermite_eval(beta[j], xi[j] * s);
    }
    p
}

pub fn q_phase(alpha: &[u32], x: &[f64], xi: &[f64], h: f64) -> Complex64 {
    let s = (2.0 * h).sqrt().recip();
    let mut p = Complex64::new(1.0, 0.0);
    for j in 0..alpha.len() {
        p *= (Complex64::new(x[j], -xi[j]) * s).powu(alpha[j]);
    }
    p
}

/// max |(x − iξ)^m − Σ_p C(m,p) (−i)^{m−p} H_p(x) H_{m−p}(ξ)| over the points.
pub fn hermite_binomial_check(m: u32, points: &[(f64, f64)]) -> Result<f64> {
    if m > 12 {
        return invalid("binomial check supports m ≤ 12");
    }
    let mut worst: f64 = 0.0;
    for &(x, xi) in points {
        let lhs = Complex64::new(x, -xi).powu(m);
        let hx = hermite_all(m, x);
        let hxi = hermite_all(m, xi);
        let mut rhs = Complex64::new(0.0, 0.0);
        let mut binom = 1.0;
        for p in 0..=m {
            let phase = Complex64::new(0.0, -1.0).powu(m - p);
            rhs += phase * binom * hx[p as usize] * hxi[(m - p) as usize];
            binom = binom * (m - p) as f64 / (p + 1) as f64;
        }
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_values() {
        assert_eq!(hermite_eval(0, 0.7), 1.0);
        assert_eq!(hermite_eval(2, 2.0), 3.0);
        assert_eq!(hermite_eval(3, 1.0), -2.0);
        let all = hermite_all(5, 0.3);
        for (n, v) in all.iter().enumerate() {
            assert_abs_diff_eq!(*v, hermite_eval(n as u32, 0.3), epsilon = 1e-14);
        }
    }

    #[test]
    fn gram_schmidt_oracle() {
        // Orthogonalize 1, x, x² against ν by hand with moments 1, 0, 1, 0, 3.
        let x: f64 = 2.0;
        let h2 = x * x - 1.0;
        assert_abs_diff_eq!(hermite_eval(2, x), h2, epsilon = 1e-15);
    }

    #[test]
    fn norms() {
        assert_eq!(hermite_norm_sq(0).unwrap(), 1.0);
        assert_eq!(hermite_norm_sq(3).unwrap(), 6.0);
        assert!(hermite_norm_sq(200).is_err());
        let nu = measure_rule(64, WeightKind::Configuration { h: 2.0 }).unwrap();
        let v = nu.integrate(|x| hermite_eval(5, x).powi(2));
        assert!((v - 120.0).abs() < 1e-9);
    }

    #[test]
    fn small_rules() {
        let r1 = gauss_hermite_rule(1).unwrap();
        assert_abs_diff_eq!(r1.nodes[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r1.weights[0], std::f64::consts::PI.sqrt(), epsilon = 1e-14);
        let r2 = gauss_hermite_rule(2).unwrap();
        assert_abs_diff_eq!(r2.nodes[1], 0.5f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(r2.nodes[0], -(0.5f64.sqrt()), epsilon = 1e-14);
        assert_abs_diff_eq!(r2.weights[0], std::f64::consts::PI.sqrt() / 2.0, epsilon = 1e-14);
        let r3 = gauss_hermite_rule(3).unwrap();
        let m4 = r3.integrate(|x| x.powi(4));
        assert_abs_diff_eq!(m4, 0.75 * std::f64::consts::PI.sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn exactness_and_mass() {
        for n in [5usize, 16, 64, 128] {
            let r = gauss_hermite_rule(n).unwrap();
            let mass: f64 = r.weights.iter().sum();
            assert!((mass - std::f64::consts::PI.sqrt()).abs() < 1e-12);
            assert!(r.weights.iter().all(|&w| w > 0.0));
            if n <= 16 {
                // Gaussian moments Γ(k+1/2) for even degrees up to 2n−2.
                for k in 0..n {
                    let exact = (0..k).fold(std::f64::consts::PI.sqrt(), |p, j| p * (j as f64 + 0.5));
                    let got = r.integrate(|x| x.powi(2 * k as i32));
                    assert!((got - exact).abs() < 1e-11 * exact.max(1.0), "n={n} k={k}");
                }
            }
        }
    }

    #[test]
    fn orthogonality_up_to_fifteen() {
        let nu = measure_rule(64, WeightKind::Configuration { h: 2.0 }).unwrap();
        for m in 0..=15u32 {
            for n in 0..=15u32 {
                let v = nu.integrate(|x| hermite_eval(m, x) * hermite_eval(n, x));
                let want = if m == n { factorial(n).unwrap() } else { 0.0 };
                let scale = (factorial(m).unwrap() * factorial(n).unwrap()).sqrt();
                assert!((v - want).abs() < 1e-9 * scale.max(1.0), "{m} {n} {v}");
            }
        }
    }

    #[test]
    fn basis_examples() {
        let one = basis_eval(&BasisFunctionSpec::Q { alpha: vec![0], h: 1.0 }, &[0.3], &[0.2]).unwrap();
        assert_eq!(one, Complex64::new(1.0, 0.0));
        let q = basis_eval(&BasisFunctionSpec::Q { alpha: vec![1], h: 0.5 }, &[0.3], &[0.2]).unwrap();
        assert_abs_diff_eq!(q.re, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(q.im, -0.2, epsilon = 1e-15);
        let p = basis_eval(&BasisFunctionSpec::PK { alpha: vec![1], h: 2.0 }, &[1.3], &[]).unwrap();
        assert_abs_diff_eq!(p.re, 1.3, epsilon = 1e-15);
        assert!(basis_eval(&BasisFunctionSpec::PK { alpha: vec![1, 0], h: 2.0 }, &[1.3], &[]).is_err());
    }

    #[test]
    fn binomial_identity() {
        assert_eq!(hermite_binomial_check(1, &[(0.4, -1.1)]).unwrap(), 0.0);
        assert!(hermite_binomial_check(2, &[(1.0, 1.0)]).unwrap() < 1e-12);
        let pts: Vec<(f64, f64)> = (0..100)
            .map(|k| {
                let t = k as f64 * 0.37;
                (2.0 * t.sin(), 1.5 * (1.3 * t).cos())
            })
            .collect();
        assert!(hermite_binomial_check(6, &pts).unwrap() < 1e-9);
    }

    #[test]
    fn normalized_recurrence_matches() {
        let v = hermite_normalized_all(30, 1.7);
        for n in [0u32, 5, 17, 30] {
            let want = hermite_eval(n, 1.7) / factorial(n).unwrap().sqrt();
            assert!((v[n as usize] - want).abs() < 1e-10 * want.abs().max(1.0));
        }
    }

    #[test]
    fn gaussian_grid_integrates_correlated_form() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]);
        let g = GaussianGrid::new(20, &s, &[0.5, -0.2]).unwrap();
        let mass = g.integrate(|_, _| Complex64::new(1.0, 0.0)).re;
        let want = std::f64::consts::PI / (s.determinant()).sqrt();
        assert!((mass - want).abs() < 1e-12);
        let mean = g.integrate(|v, _| Complex64::new(v[0], 0.0)).re / mass;
        assert!((mean - 0.5).abs() < 1e-12);
    }
}
