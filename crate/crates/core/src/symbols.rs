//! Example symbols: lattice Gaussians e^{−H}, the mean-field family P_N, and
//! finite sums of plane waves, each with a certificate for the bounds module.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::bounds::{
    fit_scale, k_constant, trig_cert, CertGrid, ScaleFit, SymbolClassCert, CV_CONSTANT,
};
use crate::error::{invalid, Error, Result};
use crate::index::ModeSet;
use crate::linalg::c;
use crate::quantize::symbol::{box_index, taylor_exp, taylor_to_derivatives};
use crate::quantize::{GaussTerm, Symbol, TrigAtom};

/// Which lattice distance defines nearest neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LatticeNorm {
    /// |j − k|_∞ = 1, diagonal neighbours included.
    #[default]
    Sup,
    L1,
}

impl LatticeNorm {
    pub fn dist(self, a: &[i64], b: &[i64]) -> u64 {
        let d = a.iter().zip(b).map(|(x, y)| x.abs_diff(*y));
        match self {
            LatticeNorm::Sup => d.max().unwrap_or(0),
            LatticeNorm::L1 => d.sum(),
        }
    }
}

/// Finite window of ℤ^d; site i carries mode id i.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeWindow {
    pub d: usize,
    pub sites: Vec<Vec<i64>>,
}

impl LatticeWindow {
    pub fn new(d: usize, sites: Vec<Vec<i64>>) -> Result<Self> {
        if d == 0 || sites.is_empty() {
            return invalid("a window needs d ≥ 1 and at least one site");
        }
        if sites.iter().any(|s| s.len() != d) {
            return invalid("site dimension differs from d");
        }
        let mut sorted = sites.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != sites.len() {
            return invalid("duplicate lattice sites");
        }
        Ok(LatticeWindow { d, sites })
    }

    /// {lo, …, hi} ⊂ ℤ.
    pub fn line(lo: i64, hi: i64) -> Result<Self> {
        if hi < lo {
            return invalid("empty line window");
        }
        LatticeWindow::new(1, (lo..=hi).map(|j| vec![j]).collect())
    }

    /// {−r, …, r}^d.
    pub fn cube(d: usize, r: i64) -> Result<Self> {
        let mut sites = vec![vec![]];
        for _ in 0..d {
            sites = sites
                .into_iter()
                .flat_map(|s: Vec<i64>| {
                    (-r..=r).map(move |j| {
                        let mut t = s.clone();
                        t.push(j);
                        t
                    })
                })
                .collect();
        }
        LatticeWindow::new(d, sites)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn modes(&self) -> ModeSet {
        ModeSet::range(self.len() as u32)
    }

    /// Ordered pairs (j, k), j ≠ k, at distance exactly 1.
    pub fn neighbours(&self, norm: LatticeNorm) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut out = Vec::new();
        for j in 0..n {
            for k in 0..n {
                if j != k && norm.dist(&self.sites[j], &self.sites[k]) == 1 {
                    out.push((j, k));
                }
            }
        }
        out
    }
}

/// A symbol with the certificate it is claimed to satisfy.
#[derive(Debug, Clone)]
pub struct CertifiedSymbol {
    pub name: String,
    pub symbol: Symbol,
    pub cert: SymbolClassCert,
}

/// F = e^{−H} with H = Σ g_j²(x_j² + ξ_j²) + λ Σ_{|j−k|=1} g_j g_k x_j x_k.
#[derive(Debug, Clone)]
pub struct LatticeGaussian {
    pub window: LatticeWindow,
    pub g: Vec<f64>,
    pub lambda: f64,
    pub norm: LatticeNorm,
    /// Matrix A of H = vᵀAv, v = (x, ξ).
    pub form: DMatrix<f64>,
    pub min_eigenvalue: f64,
    pub symbol: Symbol,
}

pub fn lattice_gaussian(window: &LatticeWindow, g: &[f64], lambda: f64, norm: LatticeNorm) -> Result<LatticeGaussian> {
    let n = window.len();
    if g.len() != n {
        return invalid("one g_j per site is required");
    }
    if g.iter().any(|x| !(x.is_finite() && *x > 0.0)) || !lambda.is_finite() {
        return invalid("g_j must be positive and λ finite");
    }
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        a[(j, j)] = g[j] * g[j];
        a[(n + j, n + j)] = g[j] * g[j];
    }
    // each unordered pair appears twice in the ordered sum
    for (j, k) in window.neighbours(norm) {
        a[(j, k)] += 0.5 * lambda * g[j] * g[k];
        a[(k, j)] += 0.5 * lambda * g[j] * g[k];
    }
    let min_eigenvalue = a.clone().symmetric_eigen().eigenvalues.min();
    if min_eigenvalue <= 0.0 {
        return Err(Error::Indefinite(min_eigenvalue));
    }
    let symbol = Symbol::gauss(
        window.modes(),
        vec![GaussTerm {
            coeff: 1.0,
            form: a.clone(),
        }],
    )?
    .with_label(format!("lattice-gaussian(n={n}, λ={lambda})"));
    Ok(LatticeGaussian {
        window: window.clone(),
        g: g.to_vec(),
        lambda,
        norm,
        form: a,
        min_eigenvalue,
        symbol,
    })
}

impl LatticeGaussian {
    /// ε_j = C_m g_j with C_m fitted on a grid stretched by 1/g_j; M = 1.
    pub fn fitted_cert(&self, order: u32, seed: u64) -> Result<(SymbolClassCert, ScaleFit)> {
        let n = self.window.len();
        let lengths: Vec<f64> = self.g.iter().map(|g| 1.0 / g).collect();
        let grid = CertGrid::random(n, 48, 2.5, seed).scaled(&lengths)?;
        let fit = fit_scale(&self.symbol, 1.0, &self.g, order, &grid)?;
        let eps = self.g.iter().map(|g| fit.constant * g).collect();
        Ok((SymbolClassCert::new(1.0, self.window.modes(), eps, order)?, fit))
    }
}

/// Bounded pair potential V ≥ 0 with bounded derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Potential {
    Zero,
    /// amp·(1 + cos(freq·t)).
    Cosine { amp: f64, freq: f64 },
    /// amp·e^{−(t/width)²}.
    Bump { amp: f64, width: f64 },
}

impl Potential {
    fn validate(&self) -> Result<()> {
        match *self {
            Potential::Zero => Ok(()),
            Potential::Cosine { amp, freq } if amp >= 0.0 && amp.is_finite() && freq.is_finite() => Ok(()),
            Potential::Bump { amp, width } if amp >= 0.0 && amp.is_finite() && width > 0.0 && width.is_finite() => Ok(()),
            _ => invalid(format!("unsupported potential {self:?}")),
        }
    }

    /// V^{(r)}(t) for r = 0..=order.
    pub fn derivatives(&self, t: f64, order: u32) -> Vec<f64> {
        let len = order as usize + 1;
        match *self {
            Potential::Zero => vec![0.0; len],
            Potential::Cosine { amp, freq } => (0..len)
                .map(|r| {
                    let d = amp * freq.powi(r as i32) * (freq * t + r as f64 * PI / 2.0).cos();
                    if r == 0 {
                        amp + d
                    } else {
                        d
                    }
                })
                .collect(),
            Potential::Bump { amp, width } => {
                // d^r/dt^r e^{−s²} = (−1)^r H_r(s) e^{−s²} / w^r with physicists' H_r
                let s = t / width;
                let gauss = (-s * s).exp();
                let mut out = Vec::with_capacity(len);
                let (mut h0, mut h1) = (1.0, 2.0 * s);
                for r in 0..len {
                    let hr = if r == 0 { h0 } else { h1 };
                    let sign = if r % 2 == 0 { 1.0 } else { -1.0 };
                    out.push(amp * sign * hr * gauss / width.powi(r as i32));
                    if r >= 1 {
                        let next = 2.0 * s * h1 - 2.0 * r as f64 * h0;
                        h0 = h1;
                        h1 = next;
                    }
                }
                out
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivatives(t, 0)[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeanFieldOptions {
    /// Keep the j = k terms V(0) of the pair sum.
    pub include_diagonal: bool,
}

impl Default for MeanFieldOptions {
    fn default() -> Self {
        MeanFieldOptions { include_diagonal: true }
    }
}

/// Ordered pairs (j, k) of a line window {0..n−1} with |j − k| ≤ 1.
fn mean_field_pairs(n: usize, opts: MeanFieldOptions) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for j in 0..n {
        for k in 0..n {
            if j.abs_diff(k) == 1 || (j == k && opts.include_diagonal) {
                out.push((j, k));
            }
        }
    }
    out
}

/// P_N = exp(−(1/n)(Σ ξ_j² + Σ_{|j−k|≤1} V(x_j − x_k))) on n sites of a line.
pub fn mean_field_symbol(n: usize, v: Potential, opts: MeanFieldOptions) -> Result<Symbol> {
    if n == 0 {
        return invalid("the window must be nonempty");
    }
    v.validate()?;
    let pairs = Arc::new(mean_field_pairs(n, opts));
    let nf = n as f64;
    let p2 = pairs.clone();
    let eval = Arc::new(move |z: &[f64]| {
        let kin: f64 = z[n..].iter().map(|x| x * x).sum();
        let pot: f64 = p2.iter().map(|&(j, k)| v.eval(z[j] - z[k])).sum();
        c((-(kin + pot) / nf).exp(), 0.0)
    });
    let oracle = Arc::new(move |z: &[f64], m: u32| mean_field_derivatives(n, v, &pairs, z, m));
    Ok(Symbol::closed_form(ModeSet::range(n as u32), eval, Some(oracle), true)
        .with_label(format!("mean-field(n={n}, {v:?})")))
}

/// Box {0..m}^{2n} of partials of P_N: Taylor series of the exponent, then
/// exponentiated.
fn mean_field_derivatives(n: usize, v: Potential, pairs: &[(usize, usize)], z: &[f64], m: u32) -> Vec<Complex64> {
    let dim = 2 * n;
    let size = (m as usize + 1).pow(dim as u32);
    let nf = n as f64;
    let mut p = vec![c(0.0, 0.0); size];
    let mut g = vec![0u32; dim];
    let put = |g: &[u32], val: f64, p: &mut Vec<Complex64>| {
        if g.iter().all(|&x| x <= m) {
            p[box_index(g, m)] += val;
        }
    };
    for j in 0..n {
        let xi = z[n + j];
        put(&g, -xi * xi / nf, &mut p);
        g[n + j] = 1;
        put(&g, -2.0 * xi / nf, &mut p);
        g[n + j] = 2;
        put(&g, -1.0 / nf, &mut p);
        g[n + j] = 0;
    }
    let mut fact = vec![1.0f64; 2 * m as usize + 1];
    for r in 1..fact.len() {
        fact[r] = fact[r - 1] * r as f64;
    }
    for &(j, k) in pairs {
        if j == k {
            put(&g, -v.eval(0.0) / nf, &mut p);
            continue;
        }
        // V(t + d_j − d_k) = Σ_r V^{(r)}(t)/r! Σ_s C(r,s) d_j^s (−d_k)^{r−s}
        let dv = v.derivatives(z[j] - z[k], 2 * m);
        for (r, dr) in dv.iter().enumerate() {
            if *dr == 0.0 {
                continue;
            }
            for s in 0..=r {
                let b = r - s;
                if s > m as usize || b > m as usize {
                    continue;
                }
                let binom = fact[r] / (fact[s] * fact[b]);
                let sign = if b % 2 == 0 { 1.0 } else { -1.0 };
                g[j] = s as u32;
                g[k] = b as u32;
                put(&g, -dr / fact[r] * binom * sign / nf, &mut p);
            }
        }
        g[j] = 0;
        g[k] = 0;
    }
    let mut e = taylor_exp(&p, dim, m);
    taylor_to_derivatives(&mut e, dim, m);
    e
}

/// Members P_N with ε_j = C₁ n^{−1/2} and the shared constants.
#[derive(Debug, Clone)]
pub struct MeanFieldFamily {
    pub members: Vec<CertifiedSymbol>,
    pub potential: Potential,
    pub c1: f64,
    /// 225π K₄ C₁², so that at h = 1 the product bound is (1 + C₂/n)^n.
    pub c2: f64,
    pub k: f64,
    pub fit: ScaleFit,
}

/// Windows larger than this are not used to fit C₁.
pub const MEAN_FIELD_FIT_LIMIT: usize = 2;

/// Builds P_N for each size. C₁ is fitted at order 4 on the members with at
/// most two sites and K₄ is taken over the whole family.
pub fn mean_field_family(sizes: &[usize], v: Potential, opts: MeanFieldOptions) -> Result<MeanFieldFamily> {
    if sizes.is_empty() {
        return invalid("no window sizes given");
    }
    let symbols: Vec<(usize, Symbol)> = sizes
        .iter()
        .map(|&n| Ok((n, mean_field_symbol(n, v, opts)?)))
        .collect::<Result<_>>()?;
    let mut fit: Option<ScaleFit> = None;
    for (i, (n, f)) in symbols.iter().enumerate() {
        if *n > MEAN_FIELD_FIT_LIMIT {
            continue;
        }
        let root = (*n as f64).sqrt();
        let grid = CertGrid::random(*n, 48, 3.0, 0xe15 + i as u64).scaled(&vec![root; *n])?;
        let here = fit_scale(f, 1.0, &vec![1.0 / root; *n], 4, &grid)?;
        if fit.as_ref().map_or(true, |b| here.raw > b.raw) {
            fit = Some(here);
        }
    }
    let fit = fit.ok_or_else(|| Error::InvalidArgument(format!("C₁ needs a window of at most {MEAN_FIELD_FIT_LIMIT} sites")))?;
    let c1 = fit.constant;
    let all_eps: Vec<f64> = sizes.iter().map(|&n| c1 / (n as f64).sqrt()).collect();
    let k = k_constant(&all_eps, 4);
    let members = symbols
        .into_iter()
        .map(|(n, symbol)| {
            let eps = vec![c1 / (n as f64).sqrt(); n];
            let cert = SymbolClassCert::new(1.0, ModeSet::range(n as u32), eps, 4)?.with_k(k)?;
            Ok(CertifiedSymbol {
                name: format!("mean-field-{n}"),
                symbol,
                cert,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MeanFieldFamily {
        members,
        potential: v,
        c1,
        c2: CV_CONSTANT * k * c1 * c1,
        k,
        fit,
    })
}

/// Σ_k c_k e^{−i(y_k·x + η_k·ξ)} with its exact certificate.
pub fn trig_from_atoms(modes: ModeSet, atoms: Vec<TrigAtom>, order: u32) -> Result<CertifiedSymbol> {
    let cert = trig_cert(&modes, &atoms, order)?;
    let symbol = Symbol::trig(modes, atoms)?;
    Ok(CertifiedSymbol {
        name: symbol.label.clone(),
        symbol,
        cert,
    })
}

/// Real cosine a·cos(y·x + η·ξ) as a conjugate pair of atoms.
pub fn cosine_atoms(y: Vec<f64>, eta: Vec<f64>, a: f64) -> Vec<TrigAtom> {
    let neg = |v: &[f64]| v.iter().map(|t| -t).collect::<Vec<_>>();
    vec![
        TrigAtom::new(neg(&y), neg(&eta), c(a / 2.0, 0.0)),
        TrigAtom::new(y, eta, c(a / 2.0, 0.0)),
    ]
}

/// Certified symbols on one or two modes used by the bound checks: plane
/// waves, lattice Gaussians with λ ∈ {0, 0.3}, and P_N for n ∈ {1, 2}.
pub fn bound_battery(order: u32) -> Result<Vec<CertifiedSymbol>> {
    let mut out = Vec::new();
    let one = ModeSet::range(1);
    let two = ModeSet::range(2);
    let mut t = trig_from_atoms(one.clone(), cosine_atoms(vec![0.6], vec![0.3], 1.0), order)?;
    t.name = "cosine-1".into();
    out.push(t);
    let mut t = trig_from_atoms(
        two,
        vec![
            TrigAtom::new(vec![0.4, -0.2], vec![0.1, 0.5], c(0.5, 0.2)),
            TrigAtom::new(vec![-0.3, 0.0], vec![0.2, -0.4], c(-0.25, 0.0)),
            TrigAtom::new(vec![0.0, 0.0], vec![0.0, 0.0], c(0.3, 0.0)),
        ],
        order,
    )?;
    t.name = "trig-2".into();
    out.push(t);
    for (name, lambda, g) in [("gauss-decoupled", 0.0, vec![0.8]), ("gauss-coupled", 0.3, vec![0.8, 0.5])] {
        let w = LatticeWindow::line(0, g.len() as i64 - 1)?;
        let lg = lattice_gaussian(&w, &g, lambda, LatticeNorm::Sup)?;
        let (cert, _) = lg.fitted_cert(order, 7)?;
        out.push(CertifiedSymbol {
            name: name.into(),
            symbol: lg.symbol,
            cert,
        });
    }
    let fam = mean_field_family(&[1, 2], Potential::Cosine { amp: 0.5, freq: 1.0 }, MeanFieldOptions::default())?;
    for m in fam.members {
        let cert = if order == 4 {
            m.cert
        } else {
            // order 2 reuses ε; the order-2 K follows from it
            SymbolClassCert::new(m.cert.m_bound, m.cert.modes.clone(), m.cert.eps.clone(), 2)?
        };
        out.push(CertifiedSymbol { cert, ..m });
    }
    Ok(out)
}
