//! Coherent-state routes: the matrix element ⟨Op Ψ_X, Ψ_Y⟩ by centered
//! quadrature, the frame reconstruction
//! Op = (2πh)^{−2n} ∬ ⟨Op Ψ_X, Ψ_Y⟩ |Ψ_Y⟩⟨Ψ_X| dX dY for one mode, and the
//! direct hybrid route built from it.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::generating::smoothed_at;
use super::kernel::{mode_table, table_cap, ModeRule};
use super::symbol::{Symbol, SymbolKind, TrigAtom};
use crate::error::{Error, Result};
use crate::fock::{tensor_compress, PhasePoint};
use crate::hermite::GaussianGrid;
use crate::index::{factorial, Basis, ModeSet, Truncation};
use crate::linalg::{c, CMatrix};

/// Complex midpoint ω (with Re ω = (X+Y)/2) and log of the prefactor
/// e^{−(|X|²+|Y|²)/4h + t·s}.
fn midpoint(x: &PhasePoint, y: &PhasePoint, h: f64) -> (Vec<Complex64>, Complex64) {
    let n = x.dim();
    let r = 1.0 / (2.0 * h).sqrt();
    let a = (h / 2.0).sqrt();
    let mut w = vec![c(0.0, 0.0); 2 * n];
    let mut log = c(-(x.norm_sq() + y.norm_sq()) / (4.0 * h), 0.0);
    for j in 0..n {
        let s = c(x.x[j], x.xi[j]) * r;
        let t = c(y.x[j], -y.xi[j]) * r;
        w[j] = (s + t) * a;
        w[n + j] = c(0.0, a) * (t - s);
        log += t * s;
    }
    (w, log)
}

/// ⟨Op(F) Ψ_X, Ψ_Y⟩ by Gauss–Hermite quadrature centered at (X+Y)/2.
pub fn quadrature_coherent_element(f: &Symbol, x: &PhasePoint, y: &PhasePoint, h: f64, order: usize) -> Result<Complex64> {
    let n = f.n_modes();
    if n > 2 {
        return Err(Error::Unsupported("coherent-element quadrature is limited to 2 modes".into()));
    }
    let (w, log) = midpoint(x, y, h);
    let m: Vec<f64> = w.iter().map(|z| z.re).collect();
    let d: Vec<f64> = w.iter().map(|z| z.im).collect();
    let d2: f64 = d.iter().map(|v| v * v).sum();
    let grid = GaussianGrid::isotropic(order, 2 * n, (h / 2.0).sqrt(), &m)?;
    let sh = h.sqrt();
    let integral = grid.integrate(|v, t| {
        let phase: f64 = d.iter().zip(t).map(|(di, ti)| 2.0 * di * ti / sh).sum();
        f.eval(v) * c(0.0, phase).exp()
    });
    let norm = (std::f64::consts::PI * h).powi(n as i32);
    Ok(integral / norm * (log + d2 / h).exp())
}

/// Literal frame reconstruction of the Weyl matrix on one mode. The kernel
/// ⟨Op Ψ_X, Ψ_Y⟩ is taken in closed form, so the symbol must be trig or
/// Gaussian.
pub fn frame_weyl(f: &Symbol, basis: &Basis, h: f64, order: usize) -> Result<CMatrix> {
    if f.n_modes() != 1 {
        return Err(Error::Unsupported("the frame route is implemented for one mode".into()));
    }
    if matches!(f.kind, SymbolKind::ClosedForm { .. }) {
        return Err(Error::Unsupported("the frame route needs a closed-form kernel".into()));
    }
    let cap = table_cap(basis);
    let k = cap as usize + 1;
    // weight e^{−(|X|²+|Y|²−X·Y)/2h} over v = (x, ξ, y, η)
    let s = DMatrix::from_row_slice(
        4,
        4,
        &[1.0, 0.0, -0.5, 0.0, 0.0, 1.0, 0.0, -0.5, -0.5, 0.0, 1.0, 0.0, 0.0, -0.5, 0.0, 1.0],
    ) / (2.0 * h);
    let grid = GaussianGrid::new(order, &s, &[0.0; 4])?;
    let inv_fact: Vec<f64> = (0..=cap).map(|n| 1.0 / factorial(n).unwrap().sqrt()).collect();
    let r = 1.0 / (2.0 * h).sqrt();
    let a = (h / 2.0).sqrt();
    const CHUNK: usize = 8192;
    let len = grid.len();
    let partial: Vec<Result<CMatrix>> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|ch| {
            let mut acc = CMatrix::zeros(k, k);
            let mut t = [0.0; 4];
            let mut v = [0.0; 4];
            let mut py = vec![c(0.0, 0.0); k];
            let mut px = vec![c(0.0, 0.0); k];
            for i in ch * CHUNK..((ch + 1) * CHUNK).min(len) {
                let wt = grid.node(i, &mut t, &mut v);
                let s = c(v[0], v[1]) * r;
                let tt = c(v[2], -v[3]) * r;
                let omega = [(s + tt) * a, c(0.0, a) * (tt - s)];
                let ts = tt * s;
                let scalar = smoothed_at(f, &omega, h)? * c(0.0, ts.im).exp() * wt;
                let (zy, zx) = (tt.conj(), s.conj());
                py[0] = c(1.0, 0.0);
                px[0] = c(1.0, 0.0);
                for n in 1..k {
                    py[n] = py[n - 1] * zy;
                    px[n] = px[n - 1] * zx;
                }
                for be in 0..k {
                    let sb = scalar * px[be] * inv_fact[be];
                    for al in 0..k {
                        acc[(al, be)] += sb * py[al] * inv_fact[al];
                    }
                }
            }
            Ok(acc)
        })
        .collect();
    let mut m = CMatrix::zeros(k, k);
    for p in partial {
        m += p?;
    }
    let norm = (2.0 * std::f64::consts::PI * h).powi(2);
    let m = m / c(norm, 0.0);
    Ok(CMatrix::from_fn(basis.len(), basis.len(), |i, j| {
        m[(basis.dense(i)[0] as usize, basis.dense(j)[0] as usize)]
    }))
}

/// Direct hybrid route for trig symbols: per atom, the frame reconstruction
/// on the modes of E and μ^Φ quadrature on the remaining modes, combined as a
/// tensor product.
pub fn direct_hybrid_trig(f: &Symbol, e: &ModeSet, basis: &Basis, h: f64, frame_order: usize, aw_order: usize) -> Result<CMatrix> {
    let SymbolKind::Trig(atoms) = &f.kind else {
        return Err(Error::Unsupported("the direct hybrid route needs a trig symbol".into()));
    };
    if f.n_modes() > 3 {
        return Err(Error::Unsupported("the direct hybrid route is limited to 3 modes".into()));
    }
    let cap = table_cap(basis);
    let k = cap as usize + 1;
    let one = Truncation::boxed(ModeSet::range(1), cap).basis();
    let aw = mode_table(ModeRule::AntiWick, aw_order, cap, h)?;
    let mut total = CMatrix::zeros(basis.len(), basis.len());
    for atom in atoms {
        let mut per = Vec::with_capacity(f.n_modes());
        for (j, &id) in f.modes.ids().iter().enumerate() {
            let (y, eta) = (atom.y[j], atom.eta[j]);
            if e.contains(id) {
                let factor = Symbol::trig(ModeSet::range(1), vec![TrigAtom::new(vec![y], vec![eta], c(1.0, 0.0))])?;
                per.push(frame_weyl(&factor, &one, h, frame_order)?);
            } else {
                let vals: Vec<Complex64> = aw.coords.iter().map(|&(x, xi)| c(0.0, -(y * x + eta * xi)).exp()).collect();
                let row = CMatrix::from_row_slice(1, vals.len(), &vals) * &aw.table;
                per.push(CMatrix::from_fn(k, k, |a, b| row[(0, a * k + b)]));
            }
        }
        total += tensor_compress(basis, &per) * atom.c;
    }
    Ok(total)
}

/// Gauss–Hermite order for the coherent-element quadrature.
pub const ELEMENT_ORDER: usize = 40;
