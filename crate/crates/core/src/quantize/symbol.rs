//! Phase-space symbols, heat smoothing e^{(h/4)Δ_D} and the telescoping
//! operators T_h(E).

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::hermite::GaussianGrid;
use crate::index::ModeSet;
use crate::linalg::c;

/// c · e^{−i(y·x + η·ξ)}.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigAtom {
    pub y: Vec<f64>,
    pub eta: Vec<f64>,
    pub c: Complex64,
}

impl TrigAtom {
    pub fn new(y: Vec<f64>, eta: Vec<f64>, c: Complex64) -> Self {
        TrigAtom { y, eta, c }
    }

    pub fn eval(&self, v: &[f64]) -> Complex64 {
        let n = self.y.len();
        let mut phase = 0.0;
        for j in 0..n {
            phase += self.y[j] * v[j] + self.eta[j] * v[n + j];
        }
        self.c * c(0.0, -phase).exp()
    }

    /// |y_D|² + |η_D|² over the listed mode positions.
    pub fn freq_sq(&self, positions: &[usize]) -> f64 {
        positions
            .iter()
            .map(|&k| self.y[k] * self.y[k] + self.eta[k] * self.eta[k])
            .sum()
    }
}

/// κ · e^{−vᵀAv} with v = (x, ξ) and A symmetric positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussTerm {
    pub coeff: f64,
    pub form: DMatrix<f64>,
}

impl GaussTerm {
    pub fn eval(&self, v: &[f64]) -> f64 {
        let n = v.len();
        let mut q = 0.0;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += self.form[(i, j)] * v[j];
            }
            q += v[i] * s;
        }
        self.coeff * (-q).exp()
    }
}

pub type Evaluator = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

/// Partial derivatives on the box {0..m}^{2n}, laid out by [`box_index`].
pub type DerivativeOracle = Arc<dyn Fn(&[f64], u32) -> Vec<Complex64> + Send + Sync>;

#[derive(Clone)]
pub enum SymbolKind {
    ClosedForm {
        eval: Evaluator,
        derivatives: Option<DerivativeOracle>,
        real: bool,
    },
    Trig(Vec<TrigAtom>),
    Gauss(Vec<GaussTerm>),
}

impl fmt::Debug for SymbolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SymbolKind::ClosedForm { derivatives, real, .. } => f
                .debug_struct("ClosedForm")
                .field("derivatives", &derivatives.is_some())
                .field("real", real)
                .finish(),
            SymbolKind::Trig(a) => f.debug_tuple("Trig").field(a).finish(),
            SymbolKind::Gauss(g) => f.debug_tuple("Gauss").field(g).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Symbol {
    pub modes: ModeSet,
    pub kind: SymbolKind,
    pub label: String,
}

impl Symbol {
    pub fn trig(modes: ModeSet, atoms: Vec<TrigAtom>) -> Result<Self> {
        let n = modes.len();
        for a in &atoms {
            if a.y.len() != n || a.eta.len() != n {
                return invalid("atom frequency dimension does not match the modes");
            }
            if a.y.iter().chain(&a.eta).any(|v| !v.is_finite()) || !a.c.re.is_finite() || !a.c.im.is_finite() {
                return invalid("atom has non-finite data");
            }
        }
        Ok(Symbol {
            modes,
            kind: SymbolKind::Trig(atoms),
            label: "trig".into(),
        })
    }

    pub fn gauss(modes: ModeSet, terms: Vec<GaussTerm>) -> Result<Self> {
        let d = 2 * modes.len();
        for t in &terms {
            if t.form.nrows() != d || t.form.ncols() != d {
                return invalid("quadratic form has the wrong size");
            }
            let asym = (&t.form - t.form.transpose()).abs().max();
            if asym > 1e-12 * t.form.abs().max().max(1.0) {
                return invalid("quadratic form is not symmetric");
            }
            let ev = nalgebra::SymmetricEigen::new(t.form.clone()).eigenvalues.min();
            if !(ev > 0.0) {
                return Err(Error::Indefinite(ev));
            }
        }
        Ok(Symbol {
            modes,
            kind: SymbolKind::Gauss(terms),
            label: "gauss".into(),
        })
    }

    pub fn closed_form(modes: ModeSet, eval: Evaluator, derivatives: Option<DerivativeOracle>, real: bool) -> Self {
        Symbol {
            modes,
            kind: SymbolKind::ClosedForm {
                eval,
                derivatives,
                real,
            },
            label: "closed-form".into(),
        }
    }

    pub fn constant(modes: ModeSet, value: Complex64) -> Self {
        let n = modes.len();
        Symbol {
            modes,
            kind: SymbolKind::Trig(vec![TrigAtom::new(vec![0.0; n], vec![0.0; n], value)]),
            label: "constant".into(),
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// F at v = (x, ξ).
    pub fn eval(&self, v: &[f64]) -> Complex64 {
        match &self.kind {
            SymbolKind::ClosedForm { eval, .. } => eval(v),
            SymbolKind::Trig(atoms) => atoms.iter().map(|a| a.eval(v)).sum(),
            SymbolKind::Gauss(terms) => c(terms.iter().map(|t| t.eval(v)).sum(), 0.0),
        }
    }

    pub fn is_real(&self) -> bool {
        match &self.kind {
            SymbolKind::ClosedForm { real, .. } => *real,
            SymbolKind::Gauss(_) => true,
            SymbolKind::Trig(atoms) => atoms.iter().all(|a| {
                atoms.iter().any(|b| {
                    b.y.iter().zip(&a.y).all(|(p, q)| (p + q).abs() < 1e-14)
                        && b.eta.iter().zip(&a.eta).all(|(p, q)| (p + q).abs() < 1e-14)
                        && (b.c - a.c.conj()).norm() < 1e-14
                })
            }),
        }
    }

    fn positions(&self, d: &ModeSet) -> Result<Vec<usize>> {
        if !d.is_subset(&self.modes) {
            return invalid("mode set is not contained in the symbol's modes");
        }
        Ok(d.ids().iter().map(|&j| self.modes.position(j).unwrap()).collect())
    }
}

/// e^{(h/4)Δ_D} F: convolution in the (x_j, ξ_j), j ∈ D, with the Gaussian
/// of per-coordinate variance h/2.
pub fn heat_smooth(f: &Symbol, d: &ModeSet, h: f64) -> Result<Symbol> {
    if !(h > 0.0) {
        return invalid("h must be positive");
    }
    let pos = f.positions(d)?;
    if pos.is_empty() {
        return Ok(f.clone());
    }
    let kind = match &f.kind {
        SymbolKind::Trig(atoms) => SymbolKind::Trig(
            atoms
                .iter()
                .map(|a| {
                    let mut b = a.clone();
                    b.c *= (-(h / 4.0) * a.freq_sq(&pos)).exp();
                    b
                })
                .collect(),
        ),
        SymbolKind::Gauss(terms) => {
            let n = f.n_modes();
            let mut sigma2 = DMatrix::<f64>::zeros(2 * n, 2 * n);
            for &k in &pos {
                sigma2[(k, k)] = h;
                sigma2[(n + k, n + k)] = h;
            }
            let id = DMatrix::<f64>::identity(2 * n, 2 * n);
            let mut out = Vec::with_capacity(terms.len());
            for t in terms {
                // A' = A (I + 2ΣA)^{-1}, prefactor det(I + 2ΣA)^{-1/2}, 2Σ = h P_D.
                let m = &id + &sigma2 * &t.form;
                let det = m.determinant();
                let inv = m
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidArgument("singular smoothing update".into()))?;
                let a = &t.form * inv;
                let a = (&a + a.transpose()) * 0.5;
                out.push(GaussTerm {
                    coeff: t.coeff / det.sqrt(),
                    form: a,
                });
            }
            SymbolKind::Gauss(out)
        }
        SymbolKind::ClosedForm { eval, derivatives, real } => {
            let eval = smooth_closed_form(eval.clone(), &pos, f.n_modes(), h)?;
            let derivatives = derivatives.clone().map(|o| smooth_oracle(o, &pos, f.n_modes(), h));
            SymbolKind::ClosedForm {
                eval,
                derivatives,
                real: *real,
            }
        }
    };
    Ok(Symbol {
        modes: f.modes.clone(),
        kind,
        label: format!("heat[{:?}]({})", d.ids(), f.label),
    })
}

/// Gauss–Hermite order for the quadrature convolution of closed-form symbols.
pub const CONVOLUTION_ORDER: usize = 16;

fn convolution_grid(pos: &[usize], h: f64) -> Result<GaussianGrid> {
    let dim = 2 * pos.len();
    GaussianGrid::isotropic(CONVOLUTION_ORDER, dim, (h / 2.0).sqrt(), &vec![0.0; dim])
}

fn smooth_closed_form(eval: Evaluator, pos: &[usize], n: usize, h: f64) -> Result<Evaluator> {
    let grid = convolution_grid(pos, h)?;
    let norm = (std::f64::consts::PI * h).powi(pos.len() as i32).recip();
    let pos = pos.to_vec();
    Ok(Arc::new(move |v: &[f64]| {
        let mut t = vec![0.0; grid.dim()];
        let mut w = vec![0.0; grid.dim()];
        let mut shifted = v.to_vec();
        let mut acc = c(0.0, 0.0);
        for i in 0..grid.len() {
            let wt = grid.node(i, &mut t, &mut w);
            for (r, &k) in pos.iter().enumerate() {
                shifted[k] = v[k] + w[2 * r];
                shifted[n + k] = v[n + k] + w[2 * r + 1];
            }
            acc += eval(&shifted) * wt;
        }
        acc * norm
    }))
}

fn smooth_oracle(oracle: DerivativeOracle, pos: &[usize], n: usize, h: f64) -> DerivativeOracle {
    let grid = convolution_grid(pos, h).expect("valid convolution grid");
    let norm = (std::f64::consts::PI * h).powi(pos.len() as i32).recip();
    let pos = pos.to_vec();
    Arc::new(move |v: &[f64], m: u32| {
        let mut t = vec![0.0; grid.dim()];
        let mut w = vec![0.0; grid.dim()];
        let mut shifted = v.to_vec();
        let mut acc: Vec<Complex64> = Vec::new();
        for i in 0..grid.len() {
            let wt = grid.node(i, &mut t, &mut w);
            for (r, &k) in pos.iter().enumerate() {
                shifted[k] = v[k] + w[2 * r];
                shifted[n + k] = v[n + k] + w[2 * r + 1];
            }
            let d = oracle(&shifted, m);
            if acc.is_empty() {
                acc = vec![c(0.0, 0.0); d.len()];
            }
            for (a, x) in acc.iter_mut().zip(d) {
                *a += x * wt;
            }
        }
        acc.into_iter().map(|x| x * norm).collect()
    })
}

/// T_h(E)F = Π_{j∈E}(I − e^{(h/4)Δ_j}) F.
pub fn telescoping_apply(f: &Symbol, e: &ModeSet, h: f64) -> Result<Symbol> {
    let pos = f.positions(e)?;
    if pos.is_empty() {
        return Ok(f.clone());
    }
    match &f.kind {
        SymbolKind::Trig(atoms) => {
            let atoms = atoms
                .iter()
                .map(|a| {
                    let mut b = a.clone();
                    for &k in &pos {
                        b.c *= 1.0 - (-(h / 4.0) * a.freq_sq(&[k])).exp();
                    }
                    b
                })
                .collect();
            Ok(Symbol {
                modes: f.modes.clone(),
                kind: SymbolKind::Trig(atoms),
                label: format!("T[{:?}]({})", e.ids(), f.label),
            })
        }
        SymbolKind::Gauss(_) => {
            let mut terms = Vec::new();
            for s in e.subsets() {
                let sign = if s.len() % 2 == 0 { 1.0 } else { -1.0 };
                if let SymbolKind::Gauss(ts) = heat_smooth(f, &s, h)?.kind {
                    terms.extend(ts.into_iter().map(|mut t| {
                        t.coeff *= sign;
                        t
                    }));
                }
            }
            Ok(Symbol {
                modes: f.modes.clone(),
                kind: SymbolKind::Gauss(terms),
                label: format!("T[{:?}]({})", e.ids(), f.label),
            })
        }
        SymbolKind::ClosedForm { real, .. } => {
            let parts: Vec<(f64, Symbol)> = e
                .subsets()
                .into_iter()
                .map(|s| {
                    let sign = if s.len() % 2 == 0 { 1.0 } else { -1.0 };
                    heat_smooth(f, &s, h).map(|g| (sign, g))
                })
                .collect::<Result<_>>()?;
            let parts = Arc::new(parts);
            let p2 = parts.clone();
            let eval: Evaluator = Arc::new(move |v: &[f64]| parts.iter().map(|(s, g)| g.eval(v) * *s).sum());
            let has_oracle = p2.iter().all(|(_, g)| matches!(g.kind, SymbolKind::ClosedForm { derivatives: Some(_), .. }));
            let derivatives: Option<DerivativeOracle> = if has_oracle {
                Some(Arc::new(move |v: &[f64], m: u32| {
                    let mut acc: Vec<Complex64> = Vec::new();
                    for (s, g) in p2.iter() {
                        if let SymbolKind::ClosedForm { derivatives: Some(o), .. } = &g.kind {
                            let d = o(v, m);
                            if acc.is_empty() {
                                acc = vec![c(0.0, 0.0); d.len()];
                            }
                            for (a, x) in acc.iter_mut().zip(d) {
                                *a += x * *s;
                            }
                        }
                    }
                    acc
                }))
            } else {
                None
            };
            Ok(Symbol {
                modes: f.modes.clone(),
                kind: SymbolKind::ClosedForm {
                    eval,
                    derivatives,
                    real: *real,
                },
                label: format!("T[{:?}]({})", e.ids(), f.label),
            })
        }
    }
}

/// Flat index of γ in the box {0..m}^{dim}, first variable most significant.
pub fn box_index(gamma: &[u32], m: u32) -> usize {
    gamma.iter().fold(0usize, |acc, &g| acc * (m as usize + 1) + g as usize)
}

/// Inverse of [`box_index`].
pub fn box_multi(mut i: usize, dim: usize, m: u32) -> Vec<u32> {
    let b = m as usize + 1;
    let mut g = vec![0u32; dim];
    for k in (0..dim).rev() {
        g[k] = (i % b) as u32;
        i /= b;
    }
    g
}

/// Taylor coefficients of exp(P) on the box {0..m}^{dim}, given those of P.
pub fn taylor_exp(p: &[Complex64], dim: usize, m: u32) -> Vec<Complex64> {
    let size = p.len();
    let mut g = vec![c(0.0, 0.0); size];
    g[0] = p[0].exp();
    let multis: Vec<Vec<u32>> = (0..size).map(|i| box_multi(i, dim, m)).collect();
    let mut order: Vec<usize> = (1..size).collect();
    order.sort_by_key(|&i| multis[i].iter().sum::<u32>());
    let nonzero: Vec<usize> = (1..size).filter(|&j| p[j] != c(0.0, 0.0)).collect();
    let mut rest = vec![0u32; dim];
    for &i in &order {
        let gam = &multis[i];
        let k = gam.iter().position(|&x| x > 0).unwrap();
        // γ_k g_γ = Σ_{μ ≤ γ, μ_k ≥ 1} μ_k p_μ g_{γ−μ}
        let mut acc = c(0.0, 0.0);
        for &j in &nonzero {
            let mu = &multis[j];
            if mu[k] == 0 || mu.iter().zip(gam).any(|(a, b)| a > b) {
                continue;
            }
            for ((r, a), b) in rest.iter_mut().zip(gam).zip(mu) {
                *r = a - b;
            }
            acc += p[j] * g[box_index(&rest, m)] * mu[k] as f64;
        }
        g[i] = acc / gam[k] as f64;
    }
    g
}

/// Product of two box-truncated Taylor series.
pub fn taylor_mul(a: &[Complex64], b: &[Complex64], dim: usize, m: u32) -> Vec<Complex64> {
    let size = a.len();
    let multis: Vec<Vec<u32>> = (0..size).map(|i| box_multi(i, dim, m)).collect();
    let mut out = vec![c(0.0, 0.0); size];
    for (i, ma) in multis.iter().enumerate() {
        if a[i] == c(0.0, 0.0) {
            continue;
        }
        for (j, mb) in multis.iter().enumerate() {
            if b[j] == c(0.0, 0.0) {
                continue;
            }
            if ma.iter().zip(mb).any(|(x, y)| x + y > m) {
                continue;
            }
            let s: Vec<u32> = ma.iter().zip(mb).map(|(x, y)| x + y).collect();
            out[box_index(&s, m)] += a[i] * b[j];
        }
    }
    out
}

/// Converts Taylor coefficients to partial derivatives (multiply by γ!).
pub fn taylor_to_derivatives(t: &mut [Complex64], dim: usize, m: u32) {
    for (i, v) in t.iter_mut().enumerate() {
        let f: f64 = box_multi(i, dim, m)
            .iter()
            .map(|&g| (1..=g).map(|k| k as f64).product::<f64>())
            .product();
        *v *= f;
    }
}

/// All partials ∂^γ F(v), γ ∈ {0..m}^{2n}; `None` for closed-form symbols
/// without an oracle.
pub fn exact_derivatives(f: &Symbol, v: &[f64], m: u32) -> Option<Vec<Complex64>> {
    let dim = v.len();
    let size = (m as usize + 1).pow(dim as u32);
    match &f.kind {
        SymbolKind::ClosedForm { derivatives, .. } => derivatives.as_ref().map(|o| o(v, m)),
        SymbolKind::Trig(atoms) => {
            let n = dim / 2;
            let mut out = vec![c(0.0, 0.0); size];
            for a in atoms {
                let base = a.eval(v);
                for (i, o) in out.iter_mut().enumerate() {
                    let g = box_multi(i, dim, m);
                    let mut p = base;
                    for j in 0..n {
                        p *= c(0.0, -a.y[j]).powu(g[j]) * c(0.0, -a.eta[j]).powu(g[n + j]);
                    }
                    *o += p;
                }
            }
            Some(out)
        }
        SymbolKind::Gauss(terms) => {
            let mut out = vec![c(0.0, 0.0); size];
            for t in terms {
                // exponent −(v+d)ᵀA(v+d) = −vᵀAv − 2vᵀA d − dᵀA d
                let mut p = vec![c(0.0, 0.0); size];
                let q0: f64 = (0..dim).map(|i| (0..dim).map(|j| v[i] * t.form[(i, j)] * v[j]).sum::<f64>()).sum();
                p[0] = c(-q0 + t.coeff.abs().ln(), 0.0);
                for k in 0..dim {
                    let mut g = vec![0u32; dim];
                    if m >= 1 {
                        g[k] = 1;
                        let lin: f64 = (0..dim).map(|j| t.form[(k, j)] * v[j]).sum();
                        p[box_index(&g, m)] = c(-2.0 * lin, 0.0);
                    }
                    for l in k..dim {
                        let mut g = vec![0u32; dim];
                        g[k] += 1;
                        g[l] += 1;
                        if g.iter().all(|&x| x <= m) {
                            let coef = if k == l { t.form[(k, k)] } else { 2.0 * t.form[(k, l)] };
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
            Some(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_mode_gauss(cc: f64) -> Symbol {
        Symbol::gauss(
            ModeSet::range(1),
            vec![GaussTerm {
                coeff: 1.0,
                form: DMatrix::from_diagonal_element(2, 2, cc),
            }],
        )
        .unwrap()
    }

    #[test]
    fn constant_is_harmonic() {
        let f = Symbol::constant(ModeSet::range(2), c(2.5, 0.0));
        let g = heat_smooth(&f, &ModeSet::range(2), 0.7).unwrap();
        assert!((g.eval(&[0.1, 0.2, 0.3, 0.4]) - c(2.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn trig_multiplier() {
        let f = Symbol::trig(ModeSet::range(1), vec![TrigAtom::new(vec![0.8], vec![-1.3], c(1.0, 0.5))]).unwrap();
        let h = 0.6;
        let g = heat_smooth(&f, &ModeSet::range(1), h).unwrap();
        let SymbolKind::Trig(a) = &g.kind else { panic!() };
        let want = c(1.0, 0.5) * (-(h / 4.0) * (0.64 + 1.69f64)).exp();
        assert!((a[0].c - want).norm() < 1e-15);
        let t = telescoping_apply(&f, &ModeSet::range(1), h).unwrap();
        let SymbolKind::Trig(a) = &t.kind else { panic!() };
        let want = c(1.0, 0.5) * (1.0 - (-(h / 4.0) * (0.64 + 1.69f64)).exp());
        assert!((a[0].c - want).norm() < 1e-15);
    }

    #[test]
    fn gaussian_convolution_oracle() {
        let (cc, h) = (0.8, 0.5);
        let f = one_mode_gauss(cc);
        let g = heat_smooth(&f, &ModeSet::range(1), h).unwrap();
        for v in [[0.0, 0.0], [0.7, -1.1], [2.0, 0.3]] {
            let r2 = v[0] * v[0] + v[1] * v[1];
            let want = (-cc * r2 / (1.0 + cc * h)).exp() / (1.0 + cc * h);
            assert!((g.eval(&v).re - want).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_convolution_matches_gauss_update() {
        let (cc, h) = (0.8, 0.5);
        let f = one_mode_gauss(cc);
        let ff = f.clone();
        let cf = Symbol::closed_form(ModeSet::range(1), Arc::new(move |v: &[f64]| ff.eval(v)), None, true);
        let g1 = heat_smooth(&f, &ModeSet::range(1), h).unwrap();
        let g2 = heat_smooth(&cf, &ModeSet::range(1), h).unwrap();
        for v in [[0.0, 0.0], [0.7, -1.1]] {
            assert!((g1.eval(&v) - g2.eval(&v)).norm() < 1e-10);
        }
    }

    #[test]
    fn partition_of_identity_two_modes() {
        let modes = ModeSet::range(2);
        let f = Symbol::trig(
            modes.clone(),
            vec![
                TrigAtom::new(vec![0.5, -1.0], vec![0.3, 0.9], c(0.7, 0.1)),
                TrigAtom::new(vec![-0.2, 0.4], vec![1.2, 0.0], c(-0.3, 0.2)),
            ],
        )
        .unwrap();
        let h = 0.8;
        let v = [0.3, -0.4, 1.1, 0.2];
        let mut total = c(0.0, 0.0);
        for e in modes.subsets() {
            let rest = modes.minus(&e);
            let g = heat_smooth(&telescoping_apply(&f, &e, h).unwrap(), &rest, h).unwrap();
            total += g.eval(&v);
        }
        assert!((total - f.eval(&v)).norm() < 1e-10);
    }

    #[test]
    fn gauss_telescoping_partition() {
        let modes = ModeSet::range(2);
        let a = DMatrix::from_row_slice(4, 4, &[1.0, 0.2, 0.0, 0.0, 0.2, 0.5, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.5]);
        let f = Symbol::gauss(modes.clone(), vec![GaussTerm { coeff: 1.0, form: a }]).unwrap();
        let h = 0.7;
        let v = [0.3, -0.4, 1.1, 0.2];
        let mut total = c(0.0, 0.0);
        for e in modes.subsets() {
            let rest = modes.minus(&e);
            total += heat_smooth(&telescoping_apply(&f, &e, h).unwrap(), &rest, h).unwrap().eval(&v);
        }
        assert!((total - f.eval(&v)).norm() < 1e-10);
    }

    #[test]
    fn empty_telescoping_is_identity() {
        let f = one_mode_gauss(1.0);
        let g = telescoping_apply(&f, &ModeSet::empty(), 0.5).unwrap();
        assert_eq!(g.eval(&[0.3, 0.1]), f.eval(&[0.3, 0.1]));
    }

    #[test]
    fn indefinite_form_is_rejected() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let r = Symbol::gauss(ModeSet::range(1), vec![GaussTerm { coeff: 1.0, form: bad }]);
        assert!(matches!(r, Err(Error::Indefinite(_))));
    }

    #[test]
    fn gauss_derivatives_match_finite_differences() {
        let modes = ModeSet::range(1);
        let a = DMatrix::from_row_slice(2, 2, &[0.7, 0.2, 0.2, 0.4]);
        let f = Symbol::gauss(modes, vec![GaussTerm { coeff: 1.0, form: a }]).unwrap();
        let v = [0.3, -0.5];
        let d = exact_derivatives(&f, &v, 2).unwrap();
        let e = 1e-4;
        let fx = |x: f64, y: f64| f.eval(&[x, y]).re;
        let dx = (fx(v[0] + e, v[1]) - fx(v[0] - e, v[1])) / (2.0 * e);
        let dxy = (fx(v[0] + e, v[1] + e) - fx(v[0] + e, v[1] - e) - fx(v[0] - e, v[1] + e) + fx(v[0] - e, v[1] - e)) / (4.0 * e * e);
        let dxx = (fx(v[0] + e, v[1]) - 2.0 * fx(v[0], v[1]) + fx(v[0] - e, v[1])) / (e * e);
        assert!((d[box_index(&[0, 0], 2)].re - fx(v[0], v[1])).abs() < 1e-14);
        assert!((d[box_index(&[1, 0], 2)].re - dx).abs() < 1e-7);
        assert!((d[box_index(&[1, 1], 2)].re - dxy).abs() < 1e-6);
        assert!((d[box_index(&[2, 0], 2)].re - dxx).abs() < 1e-6);
    }

    #[test]
    fn trig_derivatives() {
        let f = Symbol::trig(ModeSet::range(1), vec![TrigAtom::new(vec![0.8], vec![-1.3], c(2.0, 0.0))]).unwrap();
        let v = [0.4, 0.9];
        let d = exact_derivatives(&f, &v, 4).unwrap();
        let want = f.eval(&v) * c(0.0, -0.8).powu(3) * c(0.0, 1.3).powu(2);
        assert!((d[box_index(&[3, 2], 4)] - want).norm() < 1e-13);
    }

    #[test]
    fn taylor_exp_of_linear_series() {
        // exp(a + b d0): coefficients e^a b^k / k!
        let (dim, m) = (2, 3);
        let mut p = vec![c(0.0, 0.0); 16];
        p[0] = c(0.5, 0.0);
        p[box_index(&[1, 0], m)] = c(2.0, 0.0);
        let g = taylor_exp(&p, dim, m);
        for k in 0..=3u32 {
            let want = 0.5f64.exp() * 2f64.powi(k as i32) / (1..=k).map(|x| x as f64).product::<f64>();
            assert!((g[box_index(&[k, 0], m)].re - want).abs() < 1e-13);
            assert!(g[box_index(&[k, 1], m)].norm() < 1e-15);
        }
        let sq = taylor_mul(&p, &p, dim, m);
        assert!((sq[box_index(&[1, 0], m)].re - 2.0).abs() < 1e-15);
    }
}
