//! Dense complex helpers: matrix exponential, power iteration, deficits.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// max |A − Aᴴ|.
pub fn hermitian_deficit(a: &CMatrix) -> f64 {
    max_abs_diff(a, &a.adjoint())
}

/// max |AᴴA − I|.
pub fn unitarity_deficit(a: &CMatrix) -> f64 {
    let n = a.ncols();
    max_abs_diff(&(a.adjoint() * a), &CMatrix::identity(n, n))
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// exp(A) by scaling and squaring with the [13/13] Padé approximant.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Ok(a.clone());
    }
    const THETA13: f64 = 5.371_920_351_148_152;
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::NonFinite {
            what: "matrix exponential input".into(),
            at: "1-norm".into(),
        });
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * c(0.5f64.powi(s), 0.0);
    let id = CMatrix::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| c(PADE13[k], 0.0);
    let u_inner = &a6 * (&a6 * b(13) + &a4 * b(11) + &a2 * b(9)) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &id * b(1);
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b(12) + &a4 * b(10) + &a2 * b(8)) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &id * b(0);
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).ok_or_else(|| Error::NonConvergence {
        what: "matrix exponential".into(),
        detail: "singular Padé denominator".into(),
    })?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

#[derive(Debug, Clone)]
pub struct NormEstimate {
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Lower estimate of the spectral norm by power iteration on AᴴA.
/// The returned value is √ of a Rayleigh quotient, so it never exceeds ‖A‖.
pub fn operator_norm_lower(a: &CMatrix, tol: f64, max_iter: usize) -> Result<NormEstimate> {
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return Ok(NormEstimate {
            value: 0.0,
            iterations: 0,
            converged: true,
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite {
            what: "operator matrix".into(),
            at: "entries".into(),
        });
    }
    let ah = a.adjoint();
    // Deterministic start with all components nonzero.
    let mut v = CVector::from_fn(n, |i, _| c(1.0 + 0.1 * ((i * 7 + 3) % 11) as f64, 0.05 * ((i * 5 + 1) % 7) as f64));
    v /= c(v.norm(), 0.0);
    let mut last = 0.0;
    for it in 1..=max_iter {
        let av = a * &v;
        let sigma2 = av.norm_squared();
        let w = &ah * av;
        let wn = w.norm();
        if wn == 0.0 {
            return Ok(NormEstimate {
                value: sigma2.sqrt(),
                iterations: it,
                converged: true,
            });
        }
        v = w / c(wn, 0.0);
        if it > 1 && (sigma2 - last).abs() <= tol * sigma2 {
            let value = (a * &v).norm().max(sigma2.sqrt());
            return Ok(NormEstimate {
                value,
                iterations: it,
                converged: true,
            });
        }
        last = sigma2;
    }
    Ok(NormEstimate {
        value: (a * &v).norm().max(last.sqrt()),
        iterations: max_iter,
        converged: false,
    })
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let sym = (a + a.adjoint()) * c(0.5, 0.0);
    let mut ev: Vec<f64> = nalgebra::SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
    ev
}
