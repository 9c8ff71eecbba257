//! Exact Weyl matrices for trig and Gaussian symbols.
//!
//! With unnormalized coherent vectors |s) = Σ s^α/√α! ê_α, the Weyl operator
//! of F satisfies (t|Op|s) = e^{t·s} F̃(w), where F̃ = e^{(h/4)Δ}F continued to
//! complex arguments and w_x = √(h/2)(s + t), w_ξ = i√(h/2)(t − s). For both
//! symbol kinds the right side is exp of a quadratic polynomial in u = (s, t),
//! so the normalized Taylor coefficients satisfy a two-term recurrence.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::symbol::{GaussTerm, Symbol, SymbolKind, TrigAtom};
use crate::error::{Error, Result};
use crate::fock::PhasePoint;
use crate::index::Basis;
use crate::linalg::{c, CMatrix};

/// exp(κ + bᵀu + uᵀRu) with u = (s, t) ∈ ℂ^{2n}.
struct ExpQuadratic {
    log_coeff: Complex64,
    b: Vec<Complex64>,
    r: DMatrix<Complex64>,
}

impl ExpQuadratic {
    fn eval(&self, u: &[Complex64]) -> Complex64 {
        let d = u.len();
        let mut e = self.log_coeff;
        for k in 0..d {
            e += self.b[k] * u[k];
            for l in 0..d {
                e += u[k] * self.r[(k, l)] * u[l];
            }
        }
        e.exp()
    }
}

/// L with w = L u; rows (x_1..x_n, ξ_1..ξ_n), columns (s_1..s_n, t_1..t_n).
fn coordinate_map(n: usize, h: f64) -> DMatrix<Complex64> {
    let a = (h / 2.0).sqrt();
    let mut l = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        l[(j, j)] = c(a, 0.0);
        l[(j, n + j)] = c(a, 0.0);
        l[(n + j, j)] = c(0.0, -a);
        l[(n + j, n + j)] = c(0.0, a);
    }
    l
}

fn pairing(n: usize) -> DMatrix<Complex64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(k, n + k)] = c(0.5, 0.0);
        j[(n + k, k)] = c(0.5, 0.0);
    }
    j
}

fn atom_generator(a: &TrigAtom, n: usize, h: f64) -> ExpQuadratic {
    let l = coordinate_map(n, h);
    let k: Vec<f64> = a.y.iter().chain(&a.eta).copied().collect();
    let b = (0..2 * n)
        .map(|col| (0..2 * n).map(|row| c(0.0, -k[row]) * l[(row, col)]).sum())
        .collect();
    let k2: f64 = k.iter().map(|x| x * x).sum();
    ExpQuadratic {
        log_coeff: a.c.ln() - h / 4.0 * k2,
        b,
        r: pairing(n),
    }
}

fn gauss_generator(t: &GaussTerm, n: usize, h: f64) -> Result<ExpQuadratic> {
    let d = 2 * n;
    let m = DMatrix::<f64>::identity(d, d) + &t.form * h;
    let det = m.determinant();
    let inv = m
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("singular smoothing update".into()))?;
    let smoothed = &t.form * inv;
    let a = smoothed.map(|x| c(x, 0.0));
    let l = coordinate_map(n, h);
    let r = pairing(n) - l.transpose() * a * &l;
    let r = (&r + r.transpose()) * c(0.5, 0.0);
    Ok(ExpQuadratic {
        log_coeff: c(t.coeff / det.sqrt(), 0.0).ln(),
        b: vec![c(0.0, 0.0); d],
        r,
    })
}

fn generators(f: &Symbol, h: f64) -> Result<Vec<ExpQuadratic>> {
    let n = f.n_modes();
    match &f.kind {
        SymbolKind::Trig(atoms) => Ok(atoms
            .iter()
            .filter(|a| a.c != c(0.0, 0.0))
            .map(|a| atom_generator(a, n, h))
            .collect()),
        SymbolKind::Gauss(terms) => terms.iter().map(|t| gauss_generator(t, n, h)).collect(),
        SymbolKind::ClosedForm { .. } => Err(Error::Unsupported(
            "closed-form symbols have no generating function".into(),
        )),
    }
}

/// Normalized coefficients d_γ = √γ! [u^γ] exp(q) over γ = (β, α) with
/// α, β in the basis; returned as M[α][β].
fn coefficient_matrix(q: &ExpQuadratic, basis: &Basis) -> CMatrix {
    let n = basis.modes().len();
    let dim = basis.len();
    let mut d = CMatrix::zeros(dim, dim); // d[(ib, ia)]
    d[(0, 0)] = q.log_coeff.exp();
    let two_r = &q.r * c(2.0, 0.0);
    for ib in 0..dim {
        for ia in 0..dim {
            if ib == 0 && ia == 0 {
                continue;
            }
            let (beta, alpha) = (basis.dense(ib), basis.dense(ia));
            // first nonzero coordinate of γ = (β, α)
            let k = match beta.iter().position(|&x| x > 0) {
                Some(k) => k,
                None => n + alpha.iter().position(|&x| x > 0).unwrap(),
            };
            let gk = if k < n { beta[k] } else { alpha[k - n] } as f64;
            let (ib1, ia1) = if k < n {
                (basis.shifted(ib, k, false).unwrap(), ia)
            } else {
                (ib, basis.shifted(ia, k - n, false).unwrap())
            };
            let mut acc = q.b[k] * d[(ib1, ia1)] / gk.sqrt();
            let (b1, a1) = (basis.dense(ib1), basis.dense(ia1));
            for l in 0..2 * n {
                let rk = two_r[(k, l)];
                if rk == c(0.0, 0.0) {
                    continue;
                }
                let gl = if l < n { b1[l] } else { a1[l - n] };
                if gl == 0 {
                    continue;
                }
                let (ib2, ia2) = if l < n {
                    (basis.shifted(ib1, l, false).unwrap(), ia1)
                } else {
                    (ib1, basis.shifted(ia1, l - n, false).unwrap())
                };
                acc += rk * d[(ib2, ia2)] * (gl as f64 / gk).sqrt();
            }
            d[(ib, ia)] = acc;
        }
    }
    d.transpose()
}

/// Weyl matrix of a trig or Gaussian symbol, exact up to rounding.
pub fn exact_weyl(f: &Symbol, basis: &Basis, h: f64) -> Result<CMatrix> {
    if f.modes != *basis.modes() {
        return Err(Error::InvalidArgument("symbol modes differ from the truncation modes".into()));
    }
    let mut m = CMatrix::zeros(basis.len(), basis.len());
    for g in generators(f, h)? {
        m += coefficient_matrix(&g, basis);
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite {
            what: "generating-function recurrence".into(),
            at: "matrix entries".into(),
        });
    }
    Ok(m)
}

/// e^{(h/4)Δ}F at a complex phase-space point.
pub fn smoothed_at(f: &Symbol, w: &[Complex64], h: f64) -> Result<Complex64> {
    let n = f.n_modes();
    match &f.kind {
        SymbolKind::Trig(atoms) => Ok(atoms
            .iter()
            .map(|a| {
                let mut e = c(0.0, 0.0);
                let mut k2 = 0.0;
                for j in 0..n {
                    e += w[j] * a.y[j] + w[n + j] * a.eta[j];
                    k2 += a.y[j] * a.y[j] + a.eta[j] * a.eta[j];
                }
                a.c * (c(0.0, -1.0) * e - h / 4.0 * k2).exp()
            })
            .sum()),
        SymbolKind::Gauss(terms) => {
            let d = 2 * n;
            let mut total = c(0.0, 0.0);
            for t in terms {
                let m = DMatrix::<f64>::identity(d, d) + &t.form * h;
                let det = m.determinant();
                let inv = m
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidArgument("singular smoothing update".into()))?;
                let a = &t.form * inv;
                let mut q = c(0.0, 0.0);
                for i in 0..d {
                    for j in 0..d {
                        q += w[i] * a[(i, j)] * w[j];
                    }
                }
                total += (-q).exp() * (t.coeff / det.sqrt());
            }
            Ok(total)
        }
        SymbolKind::ClosedForm { .. } => Err(Error::Unsupported(
            "closed-form symbols cannot be continued to complex points".into(),
        )),
    }
}

fn coherent_pair(x: &PhasePoint, y: &PhasePoint, h: f64) -> (Vec<Complex64>, f64) {
    let n = x.dim();
    let r = 1.0 / (2.0 * h).sqrt();
    let mut u = Vec::with_capacity(2 * n);
    for j in 0..n {
        u.push(c(x.x[j], x.xi[j]) * r);
    }
    for j in 0..n {
        u.push(c(y.x[j], -y.xi[j]) * r);
    }
    let norm = (x.norm_sq() + y.norm_sq()) / (4.0 * h);
    (u, norm)
}

/// ⟨Op(F) Ψ_X, Ψ_Y⟩ in closed form for trig and Gaussian symbols.
pub fn exact_coherent_element(f: &Symbol, x: &PhasePoint, y: &PhasePoint, h: f64) -> Result<Complex64> {
    let (u, norm) = coherent_pair(x, y, h);
    let total: Complex64 = generators(f, h)?.iter().map(|g| g.eval(&u)).sum();
    Ok(total * (-norm).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ladder_matrices, weyl_translation_matrix_auto};
    use crate::index::{ModeSet, Truncation};
    use crate::linalg::max_abs_diff;

    #[test]
    fn constant_gives_identity() {
        let modes = ModeSet::range(2);
        let b = Truncation::new(modes.clone(), 4, 6).basis();
        let f = Symbol::constant(modes, c(1.0, 0.0));
        let m = exact_weyl(&f, &b, 0.7).unwrap();
        assert!(max_abs_diff(&m, &CMatrix::identity(b.len(), b.len())) < 1e-14);
    }

    #[test]
    fn atom_matches_translation_matrix() {
        let modes = ModeSet::range(1);
        let b = Truncation::boxed(modes.clone(), 10).basis();
        let (y, eta, h) = (0.6, -0.35, 0.5);
        let f = Symbol::trig(modes, vec![TrigAtom::new(vec![y], vec![eta], c(1.0, 0.0))]).unwrap();
        let m = exact_weyl(&f, &b, h).unwrap();
        let z = c(y, eta) * (-h.sqrt());
        let u = weyl_translation_matrix_auto(&[z], &b).unwrap();
        assert!(max_abs_diff(&m, &u.matrix.entries) < 1e-10);
    }

    #[test]
    fn linear_symbols_by_differentiation() {
        // d/dε of e^{−iεx} at 0 is −i·Op(x) = −i(a + a*)√(h/2)
        let modes = ModeSet::range(1);
        let b = Truncation::boxed(modes.clone(), 6).basis();
        let h = 0.8;
        let eps = 1e-6;
        let plus = Symbol::trig(modes.clone(), vec![TrigAtom::new(vec![eps], vec![0.0], c(1.0, 0.0))]).unwrap();
        let minus = Symbol::trig(modes, vec![TrigAtom::new(vec![-eps], vec![0.0], c(1.0, 0.0))]).unwrap();
        let d = (exact_weyl(&plus, &b, h).unwrap() - exact_weyl(&minus, &b, h).unwrap()) * c(0.0, 0.5 / eps);
        let (a, ad) = ladder_matrices(0, &b).unwrap();
        let want = (a.entries + ad.entries) * c((h / 2.0).sqrt(), 0.0);
        assert!(max_abs_diff(&d, &want) < 1e-8);
    }

    #[test]
    fn gaussian_matrix_is_hermitian_and_diagonal_for_radial() {
        let modes = ModeSet::range(1);
        let b = Truncation::boxed(modes.clone(), 12).basis();
        let f = Symbol::gauss(modes, vec![GaussTerm { coeff: 1.0, form: DMatrix::identity(2, 2) }]).unwrap();
        let h = 1.0;
        let m = exact_weyl(&f, &b, h).unwrap();
        assert!(max_abs_diff(&m, &m.adjoint()) < 1e-14);
        // at c = h = 1 only the vacuum survives, with eigenvalue 1/2
        assert!((m[(0, 0)].re - 0.5).abs() < 1e-14);
        for n in 1..b.len() {
            assert!(m[(n, n)].norm() < 1e-14);
        }
    }

    #[test]
    fn radial_gaussian_spectrum() {
        let modes = ModeSet::range(1);
        let b = Truncation::boxed(modes.clone(), 8).basis();
        let cc = 0.7;
        let h = 0.5;
        let f = Symbol::gauss(modes, vec![GaussTerm { coeff: 1.0, form: DMatrix::from_diagonal_element(2, 2, cc) }]).unwrap();
        let m = exact_weyl(&f, &b, h).unwrap();
        // Weyl symbol e^{−c r²}: eigenvalue on ê_n is (1/(1+ch))((1−ch)/(1+ch))^n.
        let lam = 1.0 / (1.0 + cc * h);
        let q = (1.0 - cc * h) / (1.0 + cc * h);
        for n in 0..b.len() {
            assert!((m[(n, n)].re - lam * q.powi(n as i32)).abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn coherent_element_examples() {
        let modes = ModeSet::range(1);
        let one = Symbol::constant(modes, c(1.0, 0.0));
        let h = 0.6;
        let x = PhasePoint::new(vec![0.3], vec![-0.2]).unwrap();
        let y = PhasePoint::new(vec![-0.5], vec![0.4]).unwrap();
        assert!((exact_coherent_element(&one, &x, &x, h).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
        let k = exact_coherent_element(&one, &x, &y, h).unwrap();
        let d2 = (0.8f64).powi(2) + (0.6f64).powi(2);
        assert!((k.norm() - (-d2 / (4.0 * h)).exp()).abs() < 1e-14);
    }
}
