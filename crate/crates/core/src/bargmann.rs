//! Segal–Bargmann side: functions stored as coefficients over c_α Q_{α,h},
//! the integral transform and its reproducing kernel evaluated by quadrature,
//! the shift identity, the frame norm N_E and the covariance residuals of the
//! translation operators.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::fock::{bargmann_functor_map, segal_iso_eval, weyl_translation_matrix, FockVector, PhasePoint, Side};
use crate::hermite::{adaptive, complex_dist, scalar_dist, GaussianGrid};
use crate::index::{factorial, Basis, ModeSet, Truncation};
use crate::linalg::{c, max_abs_diff, CMatrix, CVector};
use crate::quantize::{anti_wick_matrix, AntiWickRoute, QuantizationConfig, Symbol, TrigAtom};

/// Element of the Segal–Bargmann space on a truncation.
#[derive(Debug, Clone)]
pub struct SBFunction {
    pub basis: Arc<Basis>,
    pub coeffs: CVector,
    pub h: f64,
}

impl SBFunction {
    pub fn new(basis: Arc<Basis>, coeffs: CVector, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return invalid("h must be positive");
        }
        if coeffs.len() != basis.len() {
            return invalid("coefficient count does not match the basis");
        }
        Ok(SBFunction { basis, coeffs, h })
    }

    pub fn truncation(&self) -> &Truncation {
        &self.basis.truncation
    }

    pub fn n_modes(&self) -> usize {
        self.basis.modes().len()
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    /// F(x, ξ) = Σ coeff_α c_α Q_{α,h}(x, ξ).
    pub fn eval(&self, x: &[f64], xi: &[f64]) -> Result<Complex64> {
        segal_iso_eval(&self.as_phase_vector(), self.h, x, xi)
    }

    fn as_phase_vector(&self) -> FockVector {
        FockVector {
            basis: self.basis.clone(),
            side: Side::Phase,
            coeffs: self.coeffs.clone(),
        }
    }

    /// The configuration-side vector with the same coefficients.
    pub fn to_fock(&self) -> FockVector {
        FockVector {
            basis: self.basis.clone(),
            side: Side::Configuration,
            coeffs: self.coeffs.clone(),
        }
    }
}

/// θ_{Eh}: c_α P_{α,h} ↦ c_α Q_{α,h}.
pub fn bargmann_transform(f: &FockVector, h: f64) -> Result<SBFunction> {
    let w = bargmann_functor_map(f)?;
    SBFunction::new(w.basis, w.coeffs, h)
}

/// Gauss–Hermite orders tried by the phase-space integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralPolicy {
    pub start: usize,
    pub max: usize,
    pub rtol: f64,
}

impl Default for IntegralPolicy {
    fn default() -> Self {
        IntegralPolicy {
            start: 16,
            max: 128,
            rtol: 1e-10,
        }
    }
}

impl IntegralPolicy {
    fn for_degree(self, degree: u32) -> Self {
        IntegralPolicy {
            start: self.start.max(degree as usize + 8),
            ..self
        }
    }
}

/// ∫ e^{lin·v} g(v) dN(0, var·I)(v) on a tensor grid. The real part of `lin`
/// is absorbed by recentering the Gaussian, the imaginary part stays in the
/// integrand.
pub fn gaussian_linear_integral<G>(lin: &[Complex64], var: f64, order: usize, g: G) -> Result<Complex64>
where
    G: Fn(&[f64]) -> Complex64 + Sync,
{
    let d = lin.len();
    if d > 4 {
        return Err(Error::Unsupported("tensor quadrature is limited to 4 real dimensions".into()));
    }
    let center: Vec<f64> = lin.iter().map(|z| var * z.re).collect();
    let shift: f64 = lin.iter().map(|z| z.re * z.re).sum::<f64>() * var / 2.0;
    let grid = GaussianGrid::isotropic(order, d, var.sqrt(), &center)?;
    let s = grid.integrate(|v, _| {
        let phase: f64 = lin.iter().zip(v).map(|(z, x)| z.im * x).sum();
        g(v) * c(0.0, phase).exp()
    });
    let norm = (2.0 * std::f64::consts::PI * var).powf(d as f64 / 2.0);
    Ok(s / norm * shift.exp())
}

fn converged<F>(what: &str, policy: IntegralPolicy, mut eval: F) -> Result<Complex64>
where
    F: FnMut(usize) -> Result<Complex64>,
{
    let a = adaptive(policy.start, policy.max, policy.rtol, &mut eval, complex_dist)?;
    if !a.converged {
        return Err(Error::NonConvergence {
            what: what.into(),
            detail: format!("relative change {:e} at order {}", a.change, a.order),
        });
    }
    Ok(a.value)
}

fn check_point(n: usize, x: &PhasePoint) -> Result<()> {
    if x.dim() != n {
        return invalid("phase point dimension does not match the modes");
    }
    if n > 2 {
        return Err(Error::Unsupported("phase-space quadrature is limited to 2 modes".into()));
    }
    Ok(())
}

/// ∫ f(u) e^{ℓ_{x−iξ}(u)/h − (x−iξ)²/4h} dμ^K(u) for a configuration function
/// f of `n` variables.
pub fn segal_bargmann_integral<F>(f: F, n: usize, x: &PhasePoint, h: f64, policy: IntegralPolicy) -> Result<Complex64>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    check_point(n, x)?;
    let z: Vec<Complex64> = (0..n).map(|j| c(x.x[j], -x.xi[j])).collect();
    let lin: Vec<Complex64> = z.iter().map(|w| w / h).collect();
    let z2: Complex64 = z.iter().map(|w| w * w).sum();
    let pre = (-z2 / (4.0 * h)).exp();
    let v = converged("Segal–Bargmann integral", policy, |order| gaussian_linear_integral(&lin, h / 2.0, order, &f))?;
    Ok(v * pre)
}

/// The integral transform of a Hermite-coefficient function at X, computed
/// by quadrature over μ^K.
pub fn kree_raczka_transform(f: &FockVector, x: &PhasePoint, h: f64) -> Result<Complex64> {
    if f.side != Side::Configuration {
        return invalid("expected a configuration-side vector");
    }
    let n = f.basis.modes().len();
    let policy = IntegralPolicy::default().for_degree(f.basis.truncation.total_degree_cap.min(64));
    segal_bargmann_integral(
        |u: &[f64]| segal_iso_eval(f, h, u, &[]).unwrap_or(c(f64::NAN, f64::NAN)),
        n,
        x,
        h,
        policy,
    )
}

/// Route used by [`reproducing_eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReproducingRoute {
    /// Direct basis evaluation.
    Basis,
    /// ∫ e^{ℓ_{x−iξ}(y+iη)/2h} F(Y) dμ^Φ(Y).
    Kernel,
    /// ∫ e^{−ℓ_{x+iξ}(y−iη)/2h} F(X+Y) dμ^Φ(Y).
    Shifted,
}

/// ρ_X(F).
pub fn reproducing_eval(f: &SBFunction, x: &PhasePoint, route: ReproducingRoute) -> Result<Complex64> {
    let n = f.n_modes();
    if x.dim() != n {
        return invalid("phase point dimension does not match the modes");
    }
    if route == ReproducingRoute::Basis {
        return f.eval(&x.x, &x.xi);
    }
    check_point(n, x)?;
    let h = f.h;
    let mut lin = vec![c(0.0, 0.0); 2 * n];
    for j in 0..n {
        let (a, b) = (x.x[j], x.xi[j]);
        match route {
            ReproducingRoute::Kernel => {
                lin[j] = c(a, -b) / (2.0 * h);
                lin[n + j] = c(b, a) / (2.0 * h);
            }
            _ => {
                lin[j] = c(-a, -b) / (2.0 * h);
                lin[n + j] = c(-b, a) / (2.0 * h);
            }
        }
    }
    let shifted = route == ReproducingRoute::Shifted;
    let policy = IntegralPolicy::default().for_degree(f.truncation().total_degree_cap.min(64));
    let g = |v: &[f64]| {
        let (mut p, mut q) = (v[..n].to_vec(), v[n..].to_vec());
        if shifted {
            for j in 0..n {
                p[j] += x.x[j];
                q[j] += x.xi[j];
            }
        }
        f.eval(&p, &q).unwrap_or(c(f64::NAN, f64::NAN))
    };
    converged("reproducing kernel", policy, |order| gaussian_linear_integral(&lin, h, order, g))
}

/// |LHS − RHS| of the shift identity
/// ∫ e^{−ℓ_{a−ib}(x+iξ)/2h} F(x+a, ξ+b) conj G(x, ξ) dμ^Φ = ∫ F conj G dμ^Φ.
pub fn shift_identity_residual(f: &SBFunction, g: &SBFunction, a: &[f64], b: &[f64], h: f64) -> Result<f64> {
    let n = f.n_modes();
    if g.n_modes() != n || a.len() != n || b.len() != n {
        return invalid("dimension mismatch in the shift identity");
    }
    if n > 2 {
        return Err(Error::Unsupported("phase-space quadrature is limited to 2 modes".into()));
    }
    if f.h != h || g.h != h {
        return invalid("both functions must use the given h");
    }
    let mut lin = vec![c(0.0, 0.0); 2 * n];
    for j in 0..n {
        lin[j] = c(-a[j], b[j]) / (2.0 * h);
        lin[n + j] = c(-b[j], -a[j]) / (2.0 * h);
    }
    let deg = f.truncation().total_degree_cap + g.truncation().total_degree_cap;
    let policy = IntegralPolicy::default().for_degree(deg.min(96));
    let lhs = converged("shift identity", policy, |order| {
        gaussian_linear_integral(&lin, h, order, |v| {
            let (x, xi) = v.split_at(n);
            let p: Vec<f64> = x.iter().zip(a).map(|(u, s)| u + s).collect();
            let q: Vec<f64> = xi.iter().zip(b).map(|(u, s)| u + s).collect();
            let fv = f.eval(&p, &q).unwrap_or(c(f64::NAN, f64::NAN));
            let gv = g.eval(x, xi).unwrap_or(c(f64::NAN, f64::NAN));
            fv * gv.conj()
        })
    })?;
    let zero = vec![c(0.0, 0.0); 2 * n];
    let rhs = converged("shift identity", policy, |order| {
        gaussian_linear_integral(&zero, h, order, |v| {
            let (x, xi) = v.split_at(n);
            let fv = f.eval(x, xi).unwrap_or(c(f64::NAN, f64::NAN));
            let gv = g.eval(x, xi).unwrap_or(c(f64::NAN, f64::NAN));
            fv * gv.conj()
        })
    })?;
    Ok((lhs - rhs).norm())
}

/// Output of [`frame_norm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameNorm {
    pub value: f64,
    pub order: usize,
    pub change: f64,
    pub converged: bool,
}

/// N_E(f)² = (2πh)^{−|E|} ∫ ‖i*_{X_E} f‖² dX_E, where i*_{X_E} pairs the E
/// modes of f with the coherent state at X_E.
pub fn frame_norm(f: &FockVector, e: &ModeSet, h: f64) -> Result<FrameNorm> {
    if !(h > 0.0) {
        return invalid("h must be positive");
    }
    let modes = f.basis.modes();
    if !e.is_subset(modes) {
        return invalid("E must be a subset of the vector's modes");
    }
    let k = e.len();
    if k == 0 {
        let v = f.norm();
        return Ok(FrameNorm {
            value: v,
            order: 0,
            change: 0.0,
            converged: true,
        });
    }
    if k > 3 {
        return Err(Error::Unsupported("the frame norm grid is limited to |E| ≤ 3".into()));
    }
    let pos: Vec<usize> = e.ids().iter().map(|&id| modes.position(id).unwrap()).collect();
    let rest: Vec<usize> = (0..modes.len()).filter(|p| !pos.contains(p)).collect();
    let mut ids: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut terms = Vec::new();
    for (i, d) in f.basis.iter().enumerate() {
        if f.coeffs[i] == c(0.0, 0.0) {
            continue;
        }
        let key: Vec<u32> = rest.iter().map(|&p| d[p]).collect();
        let next = ids.len();
        let id = *ids.entry(key).or_insert(next);
        let ed: Vec<usize> = pos.iter().map(|&p| d[p] as usize).collect();
        terms.push((f.coeffs[i], id, ed));
    }
    let slots = ids.len();
    let cap = f.basis.truncation.per_mode_cap as usize;
    let inv: Vec<f64> = (0..=cap).map(|n| 1.0 / factorial(n as u32).unwrap().sqrt()).collect();
    let eval = |order: usize| -> Result<f64> {
        let grid = GaussianGrid::isotropic(order, 2 * k, h.sqrt(), &vec![0.0; 2 * k])?;
        // coherent coefficients without their Gaussian factor, which is the grid weight
        let s = grid.integrate(|v, _| {
            let tabs: Vec<Vec<Complex64>> = (0..k)
                .map(|j| {
                    let z = c(v[k + j], -v[j]) / h.sqrt();
                    let step = c(0.0, 1.0) * z * std::f64::consts::FRAC_1_SQRT_2;
                    let mut cur = c(1.0, 0.0);
                    let mut out = Vec::with_capacity(cap + 1);
                    for n in 0..=cap {
                        if n > 0 {
                            cur *= step;
                        }
                        out.push((cur * inv[n]).conj());
                    }
                    out
                })
                .collect();
            let mut acc = vec![c(0.0, 0.0); slots];
            for (coef, id, ed) in &terms {
                let w = ed.iter().enumerate().fold(*coef, |p, (j, &n)| p * tabs[j][n]);
                acc[*id] += w;
            }
            c(acc.iter().map(|z| z.norm_sqr()).sum(), 0.0)
        });
        Ok(s.re / (2.0 * std::f64::consts::PI * h).powi(k as i32))
    };
    let a = adaptive(cap + 2, 4 * (cap + 2), 1e-12, eval, scalar_dist)?;
    Ok(FrameNorm {
        value: a.value.max(0.0).sqrt(),
        order: a.order,
        change: a.change,
        converged: a.converged,
    })
}

fn one_mode_basis(cap: u32) -> Arc<Basis> {
    Arc::new(Truncation::boxed(ModeSet::range(1), cap).basis())
}

/// Largest pointwise residual of
/// J^K(e^{iΦ_S(a+ib)} f)(u) = e^{−|b|²/2 + (i/2)ab + (i/√h)(a+ib)u} (J^K f)(u + √h b)
/// on one mode, with the left side built from the translation matrix.
pub fn configuration_covariance_residual(f: &FockVector, a: f64, b: f64, h: f64, pad: u32, points: &[f64]) -> Result<f64> {
    if f.side != Side::Configuration || f.basis.modes().len() != 1 {
        return invalid("expected a one-mode configuration vector");
    }
    let t = weyl_translation_matrix(&[c(a, b)], &f.basis, pad)?;
    let moved = t.matrix.apply(f);
    let mut worst = 0.0f64;
    for &u in points {
        let lhs = segal_iso_eval(&moved, h, &[u], &[])?;
        let pre = c(-b * b / 2.0, a * b / 2.0) + c(0.0, 1.0) * c(a, b) * u / h.sqrt();
        let rhs = pre.exp() * segal_iso_eval(f, h, &[u + h.sqrt() * b], &[])?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Largest pointwise residual of
/// J^Φ W e^{(i/√h)Φ_S(iY)} f (X) = e^{−|Y|²/4h − ℓ_{y+iη}(x−iξ)/2h} (J^Φ W f)(X + Y)
/// on one mode.
pub fn phase_covariance_residual(f: &FockVector, y: f64, eta: f64, h: f64, pad: u32, points: &[PhasePoint]) -> Result<f64> {
    if f.side != Side::Configuration || f.basis.modes().len() != 1 {
        return invalid("expected a one-mode configuration vector");
    }
    let z = c(0.0, 1.0) * c(y, eta) / h.sqrt();
    let t = weyl_translation_matrix(&[z], &f.basis, pad)?;
    let moved = bargmann_functor_map(&t.matrix.apply(f))?;
    let wf = bargmann_functor_map(f)?;
    let mut worst = 0.0f64;
    for p in points {
        if p.dim() != 1 {
            return invalid("expected one-mode phase points");
        }
        let lhs = segal_iso_eval(&moved, h, &p.x, &p.xi)?;
        let pre = -(y * y + eta * eta) / (4.0 * h) - c(y, eta) * c(p.x[0], -p.xi[0]) / (2.0 * h);
        let rhs = pre.exp() * segal_iso_eval(&wf, h, &[p.x[0] + y], &[p.xi[0] + eta])?;
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// max |Op^AW(e^{−(i/h)(yx+ηξ)}) − e^{−|Y|²/4h} e^{−(i/√h)Φ_S(y+iη)}| on one
/// mode; the translation is built with `pad` extra levels.
pub fn anti_wick_translation_residual(y: f64, eta: f64, h: f64, cap: u32, pad: u32) -> Result<f64> {
    let basis = one_mode_basis(cap);
    let f = Symbol::trig(ModeSet::range(1), vec![TrigAtom::new(vec![y / h], vec![eta / h], c(1.0, 0.0))])?;
    let cfg = QuantizationConfig::new(h, basis.truncation.clone())?;
    let aw = anti_wick_matrix(&f, &cfg, AntiWickRoute::Quadrature)?;
    let t = weyl_translation_matrix(&[-c(y, eta) / h.sqrt()], &basis, pad)?;
    let scale = (-(y * y + eta * eta) / (4.0 * h)).exp();
    let expected: CMatrix = t.matrix.entries * c(scale, 0.0);
    Ok(max_abs_diff(aw.matrix(), &expected))
}
