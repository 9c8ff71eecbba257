//! Symbol-class certificates H_m(M, ε), the Calderón–Vaillancourt product
//! bounds, kernel-decay checks for coherent matrix elements, and the constant
//! self-test.
//!
//! Every comparison made here is one-sided: a numerical lower estimate (an
//! operator norm on a truncation, a sampled derivative) is set against an
//! analytic upper bound. Truncation can weaken these checks but cannot make a
//! valid bound look violated.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::fock::PhasePoint;
use crate::index::{ModeSet, Truncation};
use crate::linalg::c;
use crate::quantize::symbol::{box_index, box_multi, taylor_exp, taylor_to_derivatives};
use crate::quantize::{telescoping_apply, weyl_coherent_element, QuantizationConfig, Symbol, SymbolKind, TrigAtom};

pub use crate::linalg::{operator_norm_lower, NormEstimate};

/// The factor 225π of the product bounds.
pub const CV_CONSTANT: f64 = 225.0 * PI;

/// Hypothesis H_m(M, ε) on a finite mode set, m ∈ {2, 4}.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolClassCert {
    pub m_bound: f64,
    pub modes: ModeSet,
    pub eps: Vec<f64>,
    pub order: u32,
    /// K₂ = sup max(1, ε³) or K₄ = sup max(1, ε⁶).
    pub k: f64,
}

/// K for a family of ε at the given order.
pub fn k_constant(eps: &[f64], order: u32) -> f64 {
    let p = if order == 2 { 3 } else { 6 };
    eps.iter().fold(1.0f64, |k, e| k.max(e.powi(p)))
}

impl SymbolClassCert {
    pub fn new(m_bound: f64, modes: ModeSet, eps: Vec<f64>, order: u32) -> Result<Self> {
        if !(m_bound > 0.0 && m_bound.is_finite()) {
            return invalid("M must be positive");
        }
        if order != 2 && order != 4 {
            return Err(Error::Unsupported(format!("certificate order {order}")));
        }
        if eps.len() != modes.len() {
            return invalid("one ε per mode is required");
        }
        if eps.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return invalid("ε must be finite and nonnegative");
        }
        let k = k_constant(&eps, order);
        Ok(SymbolClassCert {
            m_bound,
            modes,
            eps,
            order,
            k,
        })
    }

    /// Replaces K by a larger value, as when the supremum runs over a bigger
    /// index set than the certificate's modes.
    pub fn with_k(mut self, k: f64) -> Result<Self> {
        if k < self.k {
            return invalid(format!("K = {k} is below the value {} implied by ε", self.k));
        }
        self.k = k;
        Ok(self)
    }

    pub fn eps_of(&self, id: u32) -> Result<f64> {
        self.modes
            .position(id)
            .map(|p| self.eps[p])
            .ok_or_else(|| Error::InvalidArgument(format!("mode {id} is not certified")))
    }

    /// 225π K₂ √h ε_j or 225π K₄ h ε_j².
    fn factor(&self, id: u32, h: f64) -> Result<f64> {
        let e = self.eps_of(id)?;
        Ok(if self.order == 2 {
            CV_CONSTANT * self.k * h.sqrt() * e
        } else {
            CV_CONSTANT * self.k * h * e * e
        })
    }
}

fn check_h(h: f64) -> Result<()> {
    if !(h > 0.0 && h <= 1.0) {
        return invalid(format!("h must lie in (0, 1], got {h}"));
    }
    Ok(())
}

/// M Π_{j∈scope}(1 + 225π K₂ √h ε_j), or the K₄ h ε_j² form at order 4.
pub fn cv_bound(cert: &SymbolClassCert, h: f64, scope: &ModeSet) -> Result<f64> {
    check_h(h)?;
    let mut b = cert.m_bound;
    for &j in scope.ids() {
        b *= 1.0 + cert.factor(j, h)?;
    }
    Ok(b)
}

/// M Π(1 + 225π K₄′ h ρ_j δ_j) with K₄′ = sup max(1, (ρ_j δ_j)³), for
/// separate x and ξ derivative scales.
pub fn cv_bound_mixed(m_bound: f64, rho: &[f64], delta: &[f64], h: f64) -> Result<f64> {
    check_h(h)?;
    if rho.len() != delta.len() {
        return invalid("ρ and δ differ in length");
    }
    let k = rho.iter().zip(delta).fold(1.0f64, |k, (r, d)| k.max((r * d).powi(3)));
    Ok(rho.iter().zip(delta).fold(m_bound, |b, (r, d)| b * (1.0 + CV_CONSTANT * k * h * r * d)))
}

/// Bound on ‖Op^{hyb,Λ′} − Op^{hyb,Λ}‖:
/// M·[Σ_{j∈Λ′∖Λ} f_j]·Π_{k∈Λ′}(1 + f_k) with f_j the per-mode factor.
pub fn diff_bound(cert: &SymbolClassCert, lambda: &ModeSet, lambda2: &ModeSet, h: f64) -> Result<f64> {
    check_h(h)?;
    if !lambda.is_subset(lambda2) {
        return invalid("Λ must be contained in Λ′");
    }
    let mut sum = 0.0;
    for &j in lambda2.minus(lambda).ids() {
        sum += cert.factor(j, h)?;
    }
    if sum == 0.0 {
        return Ok(0.0);
    }
    let mut prod = 1.0;
    for &j in lambda2.ids() {
        prod *= 1.0 + cert.factor(j, h)?;
    }
    Ok(cert.m_bound * sum * prod)
}

/// Certificate derived from the atoms of a trig symbol: M = Σ|c_k| and
/// ε_j = max_k max(|y_kj|, |η_kj|).
pub fn trig_cert(modes: &ModeSet, atoms: &[TrigAtom], order: u32) -> Result<SymbolClassCert> {
    let n = modes.len();
    let m: f64 = atoms.iter().map(|a| a.c.norm()).sum();
    let eps: Vec<f64> = (0..n)
        .map(|j| atoms.iter().fold(0.0f64, |e, a| e.max(a.y[j].abs()).max(a.eta[j].abs())))
        .collect();
    SymbolClassCert::new(m.max(f64::MIN_POSITIVE), modes.clone(), eps, order)
}

/// Sample points for certification.
#[derive(Debug, Clone, PartialEq)]
pub struct CertGrid {
    pub points: Vec<Vec<f64>>,
    /// Mode subsets larger than this are not differentiated jointly.
    pub support_limit: usize,
}

impl CertGrid {
    /// The origin plus `count` uniform points in [−radius, radius]^{2n}.
    pub fn random(n_modes: usize, count: usize, radius: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut points = vec![vec![0.0; 2 * n_modes]];
        for _ in 0..count {
            points.push((0..2 * n_modes).map(|_| rng.gen_range(-radius..=radius)).collect());
        }
        CertGrid { points, support_limit: 2 }
    }

    pub fn default_for(n_modes: usize) -> Self {
        CertGrid::random(n_modes, 48, 3.0, 0x5eed)
    }

    /// Stretches x_j and ξ_j by `lengths[j]`, so a mode varying on scale
    /// 1/g_j is sampled where its derivatives live.
    pub fn scaled(mut self, lengths: &[f64]) -> Result<Self> {
        let n = lengths.len();
        if self.points.iter().any(|p| p.len() != 2 * n) {
            return invalid("one length per mode is required");
        }
        for p in &mut self.points {
            for j in 0..n {
                p[j] *= lengths[j];
                p[n + j] *= lengths[j];
            }
        }
        Ok(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DerivativeMethod {
    Analytic,
    Oracle,
    FiniteDifference,
}

/// Highest total order attempted by finite differences.
pub const FD_MAX_ORDER: u32 = 6;

/// Derivatives of `f` at `v` over the variables of the mode positions `sub`,
/// on the box {0..m}^{2|sub|} with layout (x_sub, ξ_sub). Entries that could
/// not be computed are NaN.
pub fn derivative_box(f: &Symbol, v: &[f64], sub: &[usize], m: u32) -> Result<(Vec<Complex64>, DerivativeMethod)> {
    let n = f.n_modes();
    if v.len() != 2 * n || sub.iter().any(|&p| p >= n) {
        return invalid("point or mode positions do not match the symbol");
    }
    let dim = 2 * sub.len();
    let size = (m as usize + 1).pow(dim as u32);
    let vars: Vec<usize> = sub.iter().copied().chain(sub.iter().map(|&p| n + p)).collect();
    match &f.kind {
        SymbolKind::Trig(atoms) => {
            let mut out = vec![c(0.0, 0.0); size];
            for a in atoms {
                let base = a.eval(v);
                let freq: Vec<f64> = sub.iter().map(|&p| a.y[p]).chain(sub.iter().map(|&p| a.eta[p])).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    let g = box_multi(i, dim, m);
                    let mut p = base;
                    for (k, &gk) in g.iter().enumerate() {
                        p *= c(0.0, -freq[k]).powu(gk);
                    }
                    *o += p;
                }
            }
            Ok((out, DerivativeMethod::Analytic))
        }
        SymbolKind::Gauss(terms) => {
            let mut out = vec![c(0.0, 0.0); size];
            let full = v.len();
            for t in terms {
                // −(v+d)ᵀA(v+d) with d supported on `vars`
                let av: Vec<f64> = (0..full).map(|i| (0..full).map(|j| t.form[(i, j)] * v[j]).sum()).collect();
                let q0: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
                let mut p = vec![c(0.0, 0.0); size];
                p[0] = c(-q0 + t.coeff.abs().ln(), 0.0);
                for (k, &vk) in vars.iter().enumerate() {
                    if m >= 1 {
                        let mut g = vec![0u32; dim];
                        g[k] = 1;
                        p[box_index(&g, m)] = c(-2.0 * av[vk], 0.0);
                    }
                    for (l, &vl) in vars.iter().enumerate().skip(k) {
                        let mut g = vec![0u32; dim];
                        g[k] += 1;
                        g[l] += 1;
                        if g.iter().all(|&x| x <= m) {
                            let coef = if k == l { t.form[(vk, vk)] } else { 2.0 * t.form[(vk, vl)] };
                            p[box_index(&g, m)] = c(-coef, 0.0);
                        }
                    }
                }
                let mut e = taylor_exp(&p, dim, m);
                taylor_to_derivatives(&mut e, dim, m);
                let sign = t.coeff.signum();
                for (o, x) in out.iter_mut().zip(e) {
                    *o += x * sign;
                }
            }
            Ok((out, DerivativeMethod::Analytic))
        }
        SymbolKind::ClosedForm { derivatives: Some(oracle), .. } => {
            let full = oracle(v, m);
            let fdim = 2 * n;
            let mut out = vec![c(0.0, 0.0); size];
            let mut g = vec![0u32; fdim];
            for (i, o) in out.iter_mut().enumerate() {
                let local = box_multi(i, dim, m);
                g.iter_mut().for_each(|x| *x = 0);
                for (k, &vk) in vars.iter().enumerate() {
                    g[vk] = local[k];
                }
                *o = full[box_index(&g, m)];
            }
            Ok((out, DerivativeMethod::Oracle))
        }
        SymbolKind::ClosedForm { eval, .. } => {
            let mut out = vec![c(f64::NAN, 0.0); size];
            for (i, o) in out.iter_mut().enumerate() {
                let g = box_multi(i, dim, m);
                let total: u32 = g.iter().sum();
                if total > FD_MAX_ORDER {
                    continue;
                }
                *o = finite_difference(&**eval, v, &vars, &g)?;
            }
            Ok((out, DerivativeMethod::FiniteDifference))
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |b, i| b * (n - i) as f64 / (i + 1) as f64)
}

/// Tensor central difference of multi-order `g` with per-variable steps, one
/// Richardson step on top.
fn finite_difference(eval: &(dyn Fn(&[f64]) -> Complex64 + Send + Sync), v: &[f64], vars: &[usize], g: &[u32]) -> Result<Complex64> {
    let total: u32 = g.iter().sum();
    if total == 0 {
        return Ok(eval(v));
    }
    let base = 1e-4f64.max(f64::EPSILON.powf(1.0 / (total as f64 + 4.0)));
    let steps: Vec<f64> = vars.iter().map(|&k| base * v[k].abs().max(1.0)).collect();
    let stencil = |scale: f64| -> Result<Complex64> {
        let active: Vec<usize> = (0..g.len()).filter(|&k| g[k] > 0).collect();
        let mut idx = vec![0u32; active.len()];
        let mut acc = c(0.0, 0.0);
        let mut p = v.to_vec();
        loop {
            let mut w = 1.0;
            p.copy_from_slice(v);
            for (a, &k) in active.iter().enumerate() {
                let ord = g[k];
                let i = idx[a];
                let s = steps[k] * scale;
                w *= if i % 2 == 0 { 1.0 } else { -1.0 } * binomial(ord, i) / s.powi(ord as i32);
                p[vars[k]] += (ord as f64 / 2.0 - i as f64) * s;
            }
            let fv = eval(&p);
            if !(fv.re.is_finite() && fv.im.is_finite()) {
                return Err(Error::NonFinite {
                    what: "finite-difference stencil".into(),
                    at: format!("{p:?}"),
                });
            }
            acc += fv * w;
            let mut a = 0;
            loop {
                if a == active.len() {
                    return Ok(acc);
                }
                idx[a] += 1;
                if idx[a] <= g[active[a]] {
                    break;
                }
                idx[a] = 0;
                a += 1;
            }
        }
    };
    let coarse = stencil(1.0)?;
    let fine = stencil(0.5)?;
    let d = (fine * 4.0 - coarse) / 3.0;
    if steps.iter().any(|s| s * 0.5 <= f64::MIN_POSITIVE) {
        return Err(Error::NonConvergence {
            what: "finite differences".into(),
            detail: "step underflow".into(),
        });
    }
    Ok(d)
}

/// Outcome of [`certify_symbol`]. `max_ratio ≤ 1` means the samples are
/// consistent with the certificate; it is evidence, not a proof.
#[derive(Debug, Clone, PartialEq)]
pub struct CertReport {
    pub max_ratio: f64,
    pub worst_alpha: Vec<u32>,
    pub worst_beta: Vec<u32>,
    pub worst_point: Vec<f64>,
    pub sup_abs: f64,
    pub checked: usize,
    pub skipped: usize,
    pub method: DerivativeMethod,
    pub support_limit: usize,
}

impl CertReport {
    pub fn passes(&self, slack: f64) -> bool {
        self.max_ratio <= 1.0 + slack
    }
}

fn subsets_of_size(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

struct Sampled {
    ratio: f64,
    gamma: Vec<u32>,
    sub: Vec<usize>,
    point: usize,
    sup: f64,
    checked: usize,
    skipped: usize,
    method: DerivativeMethod,
}

/// Visits every sampled derivative |∂^γF(v)| with γ over subsets of at most
/// `support_limit` modes, passing (|∂^γF|, γ, subset) to `score`.
fn sample_derivatives<S>(f: &Symbol, order: u32, grid: &CertGrid, score: S) -> Result<Sampled>
where
    S: Fn(f64, &[u32], &[usize]) -> Result<f64> + Sync,
{
    let n = f.n_modes();
    let k = n.min(grid.support_limit.max(1));
    let subs = if n == 0 { vec![vec![]] } else { subsets_of_size(n, k) };
    let results: Vec<Result<Sampled>> = grid
        .points
        .par_iter()
        .enumerate()
        .map(|(pi, v)| {
            if v.len() != 2 * n {
                return invalid("grid point dimension does not match the symbol");
            }
            let mut best = Sampled {
                ratio: 0.0,
                gamma: vec![0; 2 * k],
                sub: subs[0].clone(),
                point: pi,
                sup: 0.0,
                checked: 0,
                skipped: 0,
                method: DerivativeMethod::Analytic,
            };
            for sub in &subs {
                let (d, method) = derivative_box(f, v, sub, order)?;
                best.method = method;
                let dim = 2 * sub.len();
                for (i, z) in d.iter().enumerate() {
                    if z.re.is_nan() {
                        best.skipped += 1;
                        continue;
                    }
                    let g = box_multi(i, dim, order);
                    let a = z.norm();
                    if i == 0 {
                        best.sup = best.sup.max(a);
                    }
                    let r = score(a, &g, sub)?;
                    best.checked += 1;
                    if r > best.ratio {
                        best.ratio = r;
                        best.gamma = g;
                        best.sub = sub.clone();
                    }
                }
            }
            Ok(best)
        })
        .collect();
    let mut out: Option<Sampled> = None;
    for r in results {
        let r = r?;
        out = Some(match out {
            None => r,
            Some(mut o) => {
                o.sup = o.sup.max(r.sup);
                o.checked += r.checked;
                o.skipped += r.skipped;
                if r.ratio > o.ratio {
                    Sampled {
                        sup: o.sup,
                        checked: o.checked,
                        skipped: o.skipped,
                        ..r
                    }
                } else {
                    o
                }
            }
        });
    }
    out.ok_or_else(|| Error::InvalidArgument("empty certification grid".into()))
}

/// Below this magnitude a sampled derivative is treated as zero when the
/// matching ε vanishes.
const ZERO_DERIVATIVE: f64 = 1e-12;

/// Samples |∂_x^α ∂_ξ^β F| / (M Π ε_j^{α_j+β_j}) over (α, β) ∈ I_m and the
/// grid; γ = 0 compares |F| with M.
pub fn certify_symbol(f: &Symbol, cert: &SymbolClassCert, grid: &CertGrid) -> Result<CertReport> {
    if cert.modes != f.modes {
        return invalid("certificate modes differ from the symbol's");
    }
    let m = cert.m_bound;
    let s = sample_derivatives(f, cert.order, grid, |a, g, sub| {
        let k = sub.len();
        let mut denom = m;
        for (t, &p) in sub.iter().enumerate() {
            denom *= cert.eps[p].powi((g[t] + g[k + t]) as i32);
        }
        Ok(if denom > 0.0 {
            a / denom
        } else if a <= ZERO_DERIVATIVE * m {
            0.0
        } else {
            f64::INFINITY
        })
    })?;
    Ok(report(s, f.n_modes(), grid))
}

fn report(s: Sampled, n: usize, grid: &CertGrid) -> CertReport {
    let k = s.sub.len();
    let mut alpha = vec![0; n];
    let mut beta = vec![0; n];
    for (t, &p) in s.sub.iter().enumerate() {
        alpha[p] = s.gamma[t];
        beta[p] = s.gamma[k + t];
    }
    CertReport {
        max_ratio: s.ratio,
        worst_alpha: alpha,
        worst_beta: beta,
        worst_point: grid.points[s.point].clone(),
        sup_abs: s.sup,
        checked: s.checked,
        skipped: s.skipped,
        method: s.method,
        support_limit: grid.support_limit,
    }
}

/// Fitted C in ε_j = C s_j: the smallest C consistent with the samples,
/// then enlarged by `headroom`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleFit {
    pub constant: f64,
    pub raw: f64,
    pub headroom: f64,
}

pub const FIT_HEADROOM: f64 = 1.1;

pub fn fit_scale(f: &Symbol, m_bound: f64, scales: &[f64], order: u32, grid: &CertGrid) -> Result<ScaleFit> {
    if scales.len() != f.n_modes() {
        return invalid("one scale per mode is required");
    }
    let s = sample_derivatives(f, order, grid, |a, g, sub| {
        let k = sub.len();
        let mut total = 0;
        let mut denom = m_bound;
        for (t, &p) in sub.iter().enumerate() {
            let e = g[t] + g[k + t];
            total += e;
            denom *= scales[p].powi(e as i32);
        }
        if total == 0 {
            return Ok(0.0);
        }
        if denom == 0.0 {
            return if a <= ZERO_DERIVATIVE * m_bound {
                Ok(0.0)
            } else {
                invalid("a nonzero derivative meets a zero scale")
            };
        }
        Ok((a / denom).powf(1.0 / total as f64))
    })?;
    Ok(ScaleFit {
        constant: s.ratio * FIT_HEADROOM,
        raw: s.ratio,
        headroom: FIT_HEADROOM,
    })
}

/// Outcome of [`kernel_decay_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct KernelDecayReport {
    pub max_ratio: f64,
    pub max_lhs: f64,
    pub ratios: Vec<f64>,
}

/// Compares |⟨Op^{weyl,E}(T_h(E)F) Ψ_X, Ψ_Y⟩| with
/// M (450 K₂ √h)^{|E|} Π_j ε_j (1 + |x_j−y_j|²/h)^{−1}(1 + |ξ_j−η_j|²/h)^{−1}
/// (or the K₄ h ε_j² form at order 4). Modes outside E are frozen at
/// `z_rest` (the origin by default), which needs a trig symbol.
pub fn kernel_decay_check(
    f: &Symbol,
    cert: &SymbolClassCert,
    e: &ModeSet,
    h: f64,
    pairs: &[(PhasePoint, PhasePoint)],
    z_rest: Option<&PhasePoint>,
) -> Result<KernelDecayReport> {
    check_h(h)?;
    if e.is_empty() || !e.is_subset(&f.modes) {
        return invalid("E must be a nonempty subset of the symbol's modes");
    }
    let g = restrict(f, e, z_rest)?;
    let g = telescoping_apply(&g, e, h)?;
    let cfg = QuantizationConfig::new(h, Truncation::boxed(e.clone(), 0))?;
    let mut scale = cert.m_bound;
    for &j in e.ids() {
        let ej = cert.eps_of(j)?;
        scale *= if cert.order == 2 {
            450.0 * cert.k * h.sqrt() * ej
        } else {
            450.0 * cert.k * h * ej * ej
        };
    }
    let mut ratios = Vec::with_capacity(pairs.len());
    let mut max_lhs: f64 = 0.0;
    for (x, y) in pairs {
        if x.dim() != e.len() || y.dim() != e.len() {
            return invalid("coherent points must live on E");
        }
        let lhs = weyl_coherent_element(&g, x, y, &cfg)?.norm();
        max_lhs = max_lhs.max(lhs);
        let mut rhs = scale;
        for j in 0..e.len() {
            rhs /= (1.0 + (x.x[j] - y.x[j]).powi(2) / h) * (1.0 + (x.xi[j] - y.xi[j]).powi(2) / h);
        }
        ratios.push(if rhs > 0.0 {
            lhs / rhs
        } else if lhs <= ZERO_DERIVATIVE {
            0.0
        } else {
            f64::INFINITY
        });
    }
    Ok(KernelDecayReport {
        max_ratio: ratios.iter().cloned().fold(0.0, f64::max),
        max_lhs,
        ratios,
    })
}

/// F_{Z_{E^c}} as a symbol on E.
fn restrict(f: &Symbol, e: &ModeSet, z_rest: Option<&PhasePoint>) -> Result<Symbol> {
    if e == &f.modes {
        return Ok(f.clone());
    }
    let SymbolKind::Trig(atoms) = &f.kind else {
        return Err(Error::Unsupported("freezing modes outside E needs a trig symbol".into()));
    };
    let rest = f.modes.minus(e);
    let zero = PhasePoint::zero(rest.len());
    let z = z_rest.unwrap_or(&zero);
    if z.dim() != rest.len() {
        return invalid("frozen point dimension does not match E^c");
    }
    let pos_e: Vec<usize> = e.ids().iter().map(|&j| f.modes.position(j).unwrap()).collect();
    let pos_r: Vec<usize> = rest.ids().iter().map(|&j| f.modes.position(j).unwrap()).collect();
    let reduced = atoms
        .iter()
        .map(|a| {
            let phase: f64 = pos_r.iter().enumerate().map(|(t, &p)| a.y[p] * z.x[t] + a.eta[p] * z.xi[t]).sum();
            TrigAtom::new(
                pos_e.iter().map(|&p| a.y[p]).collect(),
                pos_e.iter().map(|&p| a.eta[p]).collect(),
                a.c * c(0.0, -phase).exp(),
            )
        })
        .collect();
    Symbol::trig(e.clone(), reduced)
}

/// Numerical values behind the constants of the kernel estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    /// (2πh)^{−1/2} ∫ (1 + x²/h)^{−1} dx at h = 1.
    pub schur: f64,
    /// max deviation of the Schur integral from √(π/2) over a few h.
    pub schur_error: f64,
    /// π^{−1/2} ∫ |p_k| e^{−x²} dx for k = 0, 1, 2.
    pub p_integrals: [f64; 3],
    pub c: f64,
    pub passed: bool,
}

/// ∫_ℝ g via x = t/(1 − t²) on (−1, 1), by double-exponential quadrature.
fn integrate_line<G: Fn(f64) -> f64>(g: G, breaks: &[f64]) -> f64 {
    let map = |x: f64| {
        // inverse of x = t/(1−t²) for the break points
        if x == 0.0 {
            0.0
        } else {
            (-1.0 + (1.0 + 4.0 * x * x).sqrt()) / (2.0 * x)
        }
    };
    let mut cuts = vec![-1.0];
    cuts.extend(breaks.iter().map(|&b| map(b)));
    cuts.push(1.0);
    let h = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return 0.0;
        }
        g(t / d) * (1.0 + t * t) / (d * d)
    };
    cuts.windows(2)
        .map(|w| quadrature::double_exponential::integrate(h, w[0], w[1], 1e-14).integral)
        .sum()
}

/// Schur constant and the p_k integrals; C = 25 must dominate the squares.
pub fn constant_integrals() -> ConstantsReport {
    let target = (PI / 2.0).sqrt();
    let schur_at = |h: f64| integrate_line(|x| 1.0 / (1.0 + x * x / h), &[]) / (2.0 * PI * h).sqrt();
    let schur = schur_at(1.0);
    let schur_error = [1.0, 0.5, 0.25, 0.1]
        .iter()
        .map(|&h| (schur_at(h) - target).abs())
        .fold(0.0, f64::max);
    let w = |x: f64| (-x * x).exp() / PI.sqrt();
    let k0 = 3f64.sqrt() / 2.0;
    let p_integrals = [
        integrate_line(|x| (3.0 - 4.0 * x * x).abs() * w(x), &[-k0, k0]),
        integrate_line(|x| (4.0 * x).abs() * w(x), &[0.0]),
        integrate_line(|x| w(x), &[]),
    ];
    let c_const: f64 = 25.0;
    let passed = schur_error < 1e-10 && p_integrals.iter().all(|&p| p <= c_const.sqrt());
    ConstantsReport {
        schur,
        schur_error,
        p_integrals,
        c: c_const,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CMatrix;
    use crate::quantize::GaussTerm;
    use nalgebra::DMatrix;
    use std::sync::Arc;

    fn one() -> ModeSet {
        ModeSet::range(1)
    }

    #[test]
    fn k_constant_formula() {
        assert_eq!(k_constant(&[0.5, 0.9], 2), 1.0);
        assert!((k_constant(&[0.5, 2.0], 2) - 8.0).abs() < 1e-15);
        assert!((k_constant(&[1.5], 4) - 1.5f64.powi(6)).abs() < 1e-12);
        assert!(SymbolClassCert::new(1.0, one(), vec![-0.1], 2).is_err());
        assert!(SymbolClassCert::new(0.0, one(), vec![0.1], 2).is_err());
        assert!(SymbolClassCert::new(1.0, one(), vec![0.1], 3).is_err());
    }

    #[test]
    fn cv_bound_examples() {
        let zero = SymbolClassCert::new(2.5, ModeSet::range(3), vec![0.0; 3], 2).unwrap();
        assert_eq!(cv_bound(&zero, 0.5, &ModeSet::range(3)).unwrap(), 2.5);
        let cert = SymbolClassCert::new(1.0, one(), vec![1.0], 2).unwrap();
        let b = cv_bound(&cert, 1.0, &one()).unwrap();
        assert!((b - (1.0 + 225.0 * PI)).abs() < 1e-9);
        assert!((b - 707.858).abs() < 1e-2);
        assert!(cv_bound(&cert, 1.5, &one()).is_err());
        let mixed = cv_bound_mixed(1.0, &[0.5], &[0.4], 1.0).unwrap();
        assert!((mixed - (1.0 + 225.0 * PI * 0.2)).abs() < 1e-12);
    }

    #[test]
    fn diff_bound_examples() {
        let cert = SymbolClassCert::new(1.0, one(), vec![0.1], 2).unwrap();
        assert_eq!(diff_bound(&cert, &one(), &one(), 1.0).unwrap(), 0.0);
        let d = diff_bound(&cert, &ModeSet::empty(), &one(), 1.0).unwrap();
        let f = 225.0 * PI * 0.1;
        assert!((d - f * (1.0 + f)).abs() < 1e-9);
        assert!((d - 5067.17).abs() < 0.01);
        let cert4 = SymbolClassCert::new(1.0, one(), vec![0.1], 4).unwrap();
        let d4 = diff_bound(&cert4, &ModeSet::empty(), &one(), 1.0).unwrap();
        let f4 = 225.0 * PI * 0.01;
        assert!((d4 - f4 * (1.0 + f4)).abs() < 1e-9);
        assert!(diff_bound(&cert, &one(), &ModeSet::empty(), 1.0).is_err());
    }

    #[test]
    fn trig_atom_certificate_is_exact() {
        let atoms = vec![
            TrigAtom::new(vec![0.7, -0.2], vec![0.3, 0.5], c(0.4, 0.1)),
            TrigAtom::new(vec![-0.1, 0.6], vec![0.9, 0.0], c(-0.3, 0.0)),
        ];
        let modes = ModeSet::range(2);
        let f = Symbol::trig(modes.clone(), atoms.clone()).unwrap();
        let cert = trig_cert(&modes, &atoms, 2).unwrap();
        assert!((cert.eps[0] - 0.9).abs() < 1e-15 && (cert.eps[1] - 0.6).abs() < 1e-15);
        let r = certify_symbol(&f, &cert, &CertGrid::default_for(2)).unwrap();
        assert!(r.passes(1e-12), "{r:?}");
        assert_eq!(r.method, DerivativeMethod::Analytic);
        // a single atom meets its bound with equality at the top derivative
        let single = vec![TrigAtom::new(vec![0.8], vec![0.5], c(2.0, 0.0))];
        let g = Symbol::trig(one(), single.clone()).unwrap();
        let r = certify_symbol(&g, &trig_cert(&one(), &single, 4).unwrap(), &CertGrid::default_for(1)).unwrap();
        assert!((r.max_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_symbol_certified_with_any_eps() {
        let f = Symbol::constant(one(), c(0.5, 0.0));
        let cert = SymbolClassCert::new(0.5, one(), vec![0.0], 4).unwrap();
        let r = certify_symbol(&f, &cert, &CertGrid::default_for(1)).unwrap();
        assert!((r.max_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn violation_is_detected() {
        let atoms = vec![TrigAtom::new(vec![2.0], vec![0.0], c(1.0, 0.0))];
        let f = Symbol::trig(one(), atoms).unwrap();
        let cert = SymbolClassCert::new(1.0, one(), vec![1.0], 2).unwrap();
        let r = certify_symbol(&f, &cert, &CertGrid::default_for(1)).unwrap();
        assert!((r.max_ratio - 4.0).abs() < 1e-12);
        assert_eq!(r.worst_alpha, vec![2]);
    }

    #[test]
    fn gauss_restricted_derivatives_match_full() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[0.9, 0.2, 0.0, 0.1, 0.2, 0.7, 0.05, 0.0, 0.0, 0.05, 1.1, 0.0, 0.1, 0.0, 0.0, 0.6],
        );
        let f = Symbol::gauss(ModeSet::range(2), vec![GaussTerm { coeff: 1.0, form: a }]).unwrap();
        let v = [0.3, -0.4, 0.2, 0.5];
        let (full, _) = derivative_box(&f, &v, &[0, 1], 2).unwrap();
        let (part, _) = derivative_box(&f, &v, &[1], 2).unwrap();
        for (i, z) in part.iter().enumerate() {
            let g = box_multi(i, 2, 2);
            let big = [0, g[0], 0, g[1]];
            assert!((z - full[box_index(&big, 2)]).norm() < 1e-13);
        }
    }

    #[test]
    fn finite_differences_match_analytic() {
        let atoms = vec![TrigAtom::new(vec![0.8], vec![-0.6], c(1.0, 0.0))];
        let trig = Symbol::trig(one(), atoms.clone()).unwrap();
        let a2 = atoms.clone();
        let closed = Symbol::closed_form(one(), Arc::new(move |v: &[f64]| a2[0].eval(v)), None, false);
        let v = [0.4, -1.3];
        let (exact, _) = derivative_box(&trig, &v, &[0], 2).unwrap();
        let (fd, method) = derivative_box(&closed, &v, &[0], 2).unwrap();
        assert_eq!(method, DerivativeMethod::FiniteDifference);
        for (a, b) in exact.iter().zip(&fd) {
            assert!((a - b).norm() < 1e-6, "{a} vs {b}");
        }
        let (fd4, _) = derivative_box(&closed, &v, &[0], 4).unwrap();
        assert!(fd4[box_index(&[4, 4], 4)].re.is_nan());
    }

    #[test]
    fn fitted_scale_certifies() {
        let f = Symbol::gauss(
            one(),
            vec![GaussTerm {
                coeff: 1.0,
                form: DMatrix::from_diagonal_element(2, 2, 0.25),
            }],
        )
        .unwrap();
        let grid = CertGrid::default_for(1);
        let fit = fit_scale(&f, 1.0, &[0.5], 2, &grid).unwrap();
        let cert = SymbolClassCert::new(1.0, one(), vec![fit.constant * 0.5], 2).unwrap();
        let r = certify_symbol(&f, &cert, &grid).unwrap();
        assert!(r.passes(1e-9), "{r:?}");
        let tight = SymbolClassCert::new(1.0, one(), vec![fit.raw * 0.5 * 0.95], 2).unwrap();
        assert!(!certify_symbol(&f, &tight, &grid).unwrap().passes(1e-9));
    }

    #[test]
    fn norm_lower_examples() {
        let id = CMatrix::identity(5, 5);
        assert!((operator_norm_lower(&id, 1e-12, 100).unwrap().value - 1.0).abs() < 1e-12);
        let mut d = CMatrix::zeros(3, 3);
        d[(0, 0)] = c(3.0, 0.0);
        d[(1, 1)] = c(1.0, 0.0);
        d[(2, 2)] = c(0.5, 0.0);
        assert!((operator_norm_lower(&d, 1e-12, 500).unwrap().value - 3.0).abs() < 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = CMatrix::from_fn(50, 50, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let svd = a.clone().svd(false, false);
        let top = svd.singular_values.max();
        let est = operator_norm_lower(&a, 1e-12, 20000).unwrap();
        assert!(est.value <= top * (1.0 + 1e-12));
        assert!((est.value - top).abs() / top < 1e-5, "{} vs {top}", est.value);
    }

    #[test]
    fn kernel_decay_constant_and_trig() {
        let cst = Symbol::constant(one(), c(1.0, 0.0));
        let cert = SymbolClassCert::new(1.0, one(), vec![0.3], 2).unwrap();
        let p = PhasePoint::new(vec![0.2], vec![-0.4]).unwrap();
        let r = kernel_decay_check(&cst, &cert, &one(), 0.5, &[(p.clone(), p.clone())], None).unwrap();
        assert!(r.max_lhs < 1e-14 && r.max_ratio == 0.0);

        let atoms = vec![
            TrigAtom::new(vec![0.9], vec![0.4], c(0.5, 0.0)),
            TrigAtom::new(vec![-0.9], vec![-0.4], c(0.5, 0.0)),
        ];
        let f = Symbol::trig(one(), atoms.clone()).unwrap();
        let cert = trig_cert(&one(), &atoms, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pairs: Vec<_> = (0..50)
            .map(|_| {
                let mut q = || PhasePoint::new(vec![rng.gen_range(-3.0..3.0)], vec![rng.gen_range(-3.0..3.0)]).unwrap();
                (q(), q())
            })
            .collect();
        let mut seen = Vec::new();
        for h in [0.25, 0.5, 1.0] {
            let r = kernel_decay_check(&f, &cert, &one(), h, &pairs, None).unwrap();
            assert!(r.max_ratio <= 1.0, "h={h}: {}", r.max_ratio);
            seen.push(r.max_ratio);
        }
        assert!(seen.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn kernel_decay_with_frozen_modes() {
        let atoms = vec![TrigAtom::new(vec![0.5, 0.3], vec![0.2, -0.6], c(1.0, 0.0))];
        let f = Symbol::trig(ModeSet::range(2), atoms.clone()).unwrap();
        let cert = trig_cert(&ModeSet::range(2), &atoms, 2).unwrap();
        let e = ModeSet::new(vec![1]).unwrap();
        let p = PhasePoint::new(vec![0.1], vec![0.2]).unwrap();
        let q = PhasePoint::new(vec![-0.4], vec![0.9]).unwrap();
        let z = PhasePoint::new(vec![1.0], vec![-2.0]).unwrap();
        let r = kernel_decay_check(&f, &cert, &e, 0.5, &[(p, q)], Some(&z)).unwrap();
        assert!(r.max_ratio <= 1.0 && r.max_lhs > 0.0);
    }

    #[test]
    fn constant_integrals_match_closed_forms() {
        let r = constant_integrals();
        assert!((r.schur - 1.2533141373155).abs() < 1e-10, "{}", r.schur);
        assert!(r.schur_error < 1e-10);
        assert!((r.p_integrals[1] - 4.0 / PI.sqrt()).abs() < 1e-10);
        assert!((r.p_integrals[2] - 1.0).abs() < 1e-12);
        assert!(r.p_integrals[0] <= 5.0 && r.p_integrals[0] > 1.0);
        assert!(r.passed);
    }
}
