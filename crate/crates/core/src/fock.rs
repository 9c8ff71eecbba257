//! Truncated Fock spaces: ladder operators, Segal fields, coherent vectors,
//! translation operators e^{iΦ_S(X)} and the Segal isomorphisms as basis maps.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::hermite::hermite_normalized_all;
use crate::index::{Basis, Truncation};
use crate::linalg::{c, expm, max_abs_diff, unitarity_deficit, CMatrix, CVector};

/// X = (x, ξ) in ℝ^E × ℝ^E.
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if x.len() != xi.len() {
            return invalid("x and ξ blocks differ in length");
        }
        if x.iter().chain(&xi).any(|v| !v.is_finite()) {
            return invalid("phase point has non-finite entries");
        }
        Ok(PhasePoint { x, xi })
    }

    pub fn zero(n: usize) -> Self {
        PhasePoint {
            x: vec![0.0; n],
            xi: vec![0.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.x.iter().chain(&self.xi).map(|v| v * v).sum()
    }

    /// Flattened (x, ξ).
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.x.clone();
        v.extend_from_slice(&self.xi);
        v
    }

    pub fn from_flat(v: &[f64]) -> Self {
        let n = v.len() / 2;
        PhasePoint {
            x: v[..n].to_vec(),
            xi: v[n..].to_vec(),
        }
    }

    /// x + iξ per mode.
    pub fn complex(&self) -> Vec<Complex64> {
        self.x.iter().zip(&self.xi).map(|(&a, &b)| c(a, b)).collect()
    }

    /// The Fock parameter (ξ − ix)/√h of the coherent state centered at X.
    pub fn coherent_parameter(&self, h: f64) -> Vec<Complex64> {
        let s = h.sqrt().recip();
        self.x.iter().zip(&self.xi).map(|(&a, &b)| c(b * s, -a * s)).collect()
    }
}

/// Which Fock space a vector lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// F_s(ℓ²(E,ℂ)), basis ê_α.
    Configuration,
    /// F_s(ℓ²(E,ℂ)²), basis ŵ_α.
    Phase,
}

#[derive(Debug, Clone)]
pub struct FockVector {
    pub basis: Arc<Basis>,
    pub side: Side,
    pub coeffs: CVector,
}

impl FockVector {
    pub fn zeros(basis: Arc<Basis>, side: Side) -> Self {
        let n = basis.len();
        FockVector {
            basis,
            side,
            coeffs: CVector::zeros(n),
        }
    }

    pub fn vacuum(basis: Arc<Basis>, side: Side) -> Self {
        let mut v = FockVector::zeros(basis, side);
        v.coeffs[0] = c(1.0, 0.0);
        v
    }

    /// Normalized basis vector at enumeration index `i`.
    pub fn basis_vector(basis: Arc<Basis>, side: Side, i: usize) -> Self {
        let mut v = FockVector::zeros(basis, side);
        v.coeffs[i] = c(1.0, 0.0);
        v
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.norm()
    }

    pub fn inner(&self, other: &FockVector) -> Complex64 {
        // ⟨self, other⟩, linear in the first slot.
        other.coeffs.dotc(&self.coeffs)
    }
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    pub truncation: Truncation,
    pub entries: CMatrix,
    pub hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(truncation: Truncation, entries: CMatrix) -> Self {
        OperatorMatrix {
            truncation,
            entries,
            hermitian: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn apply(&self, v: &FockVector) -> FockVector {
        FockVector {
            basis: v.basis.clone(),
            side: v.side,
            coeffs: &self.entries * &v.coeffs,
        }
    }
}

fn mode_position(basis: &Basis, j: u32) -> Result<usize> {
    basis
        .modes()
        .position(j)
        .ok_or_else(|| Error::InvalidArgument(format!("mode {j} not in truncation")))
}

/// (a_j, a*_j) on the normalized basis; creation past the cap is dropped.
pub fn ladder_matrices(j: u32, basis: &Basis) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let k = mode_position(basis, j)?;
    let n = basis.len();
    let mut create = CMatrix::zeros(n, n);
    for i in 0..n {
        if let Some(up) = basis.shifted(i, k, true) {
            create[(up, i)] = c(((basis.dense(i)[k] + 1) as f64).sqrt(), 0.0);
        }
    }
    let annihilate = create.adjoint();
    let t = basis.truncation.clone();
    Ok((OperatorMatrix::new(t.clone(), annihilate), OperatorMatrix::new(t, create)))
}

/// Φ_S(X) = (a(X) + a*(X))/√2 with a(X) = Σ conj(X_j) a_j and a*(X) = Σ X_j a*_j.
pub fn segal_field_matrix(x: &[Complex64], basis: &Basis) -> Result<OperatorMatrix> {
    let modes = basis.modes();
    if x.len() != modes.len() {
        return invalid("field parameter dimension does not match the modes");
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return invalid("field parameter is not finite");
    }
    let n = basis.len();
    let mut m = CMatrix::zeros(n, n);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for i in 0..n {
        for (k, &xk) in x.iter().enumerate() {
            if let Some(up) = basis.shifted(i, k, true) {
                let s = ((basis.dense(i)[k] + 1) as f64).sqrt() * r;
                m[(up, i)] += xk * s;
                m[(i, up)] += xk.conj() * s;
            }
        }
    }
    let mut op = OperatorMatrix::new(basis.truncation.clone(), m);
    op.hermitian = true;
    Ok(op)
}

/// Per-mode coefficients i^n e^{−|z|²/4} (z/√2)^n / √(n!), n = 0..=cap.
pub fn coherent_coefficients_1d(z: Complex64, cap: u32) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(cap as usize + 1);
    let step = c(0.0, 1.0) * z * std::f64::consts::FRAC_1_SQRT_2;
    let mut cur = c((-z.norm_sqr() / 4.0).exp(), 0.0);
    out.push(cur);
    for n in 1..=cap {
        cur = cur * step / (n as f64).sqrt();
        out.push(cur);
    }
    out
}

/// Truncation of e^{iΦ_S(X)}Ω.
pub fn coherent_vector(x: &[Complex64], basis: Arc<Basis>) -> Result<FockVector> {
    if x.len() != basis.modes().len() {
        return invalid("coherent parameter dimension does not match the modes");
    }
    let cap = basis.truncation.per_mode_cap;
    let per: Vec<Vec<Complex64>> = x.iter().map(|&z| coherent_coefficients_1d(z, cap)).collect();
    let coeffs = CVector::from_iterator(
        basis.len(),
        basis.iter().map(|d| {
            d.iter()
                .enumerate()
                .fold(c(1.0, 0.0), |p, (k, &n)| p * per[k][n as usize])
        }),
    );
    Ok(FockVector {
        basis,
        side: Side::Configuration,
        coeffs,
    })
}

/// Normalized coherent state Ψ_X (equivalently φ_{X,h}) on the truncation.
pub fn phase_coherent_vector(point: &PhasePoint, h: f64, basis: Arc<Basis>) -> Result<FockVector> {
    coherent_vector(&point.coherent_parameter(h), basis)
}

/// Output of [`weyl_translation_matrix`].
#[derive(Debug, Clone)]
pub struct Translation {
    pub matrix: OperatorMatrix,
    /// max |U_crop(pad) − U_crop(pad')| over the modes, pad' > pad.
    pub crop_change: f64,
    /// max |UᴴU − I| of the padded exponentials before cropping.
    pub unitarity_deficit: f64,
    pub pad: u32,
}

pub const DEFAULT_CROP_THRESHOLD: f64 = 1e-7;

/// Threshold used by [`weyl_translation_matrix_auto`].
pub const AUTO_CROP_THRESHOLD: f64 = 1e-11;

/// Default pad: ⌈cap/2⌉.
pub fn default_pad(cap: u32) -> u32 {
    cap.div_ceil(2)
}

/// Single-mode e^{iΦ_S(z)} on levels 0..=cap+pad, cropped to 0..=cap.
fn translation_1d(z: Complex64, cap: u32, pad: u32) -> Result<(CMatrix, f64)> {
    let dim = (cap + pad + 1) as usize;
    let mut gen = CMatrix::zeros(dim, dim);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    for n in 0..dim - 1 {
        let s = ((n + 1) as f64).sqrt() * r;
        // i·Φ_S(z): creation part z·a*, annihilation part conj(z)·a.
        gen[(n + 1, n)] = c(0.0, 1.0) * z * s;
        gen[(n, n + 1)] = c(0.0, 1.0) * z.conj() * s;
    }
    let u = expm(&gen)?;
    let deficit = unitarity_deficit(&u);
    let keep = cap as usize + 1;
    Ok((u.view((0, 0), (keep, keep)).into_owned(), deficit))
}

/// e^{iΦ_S(X)} compressed to the truncation. Each mode is exponentiated on
/// its own padded ladder and the modes are combined as a tensor product.
pub fn weyl_translation_matrix(x: &[Complex64], basis: &Basis, pad: u32) -> Result<Translation> {
    weyl_translation_matrix_with(x, basis, pad, DEFAULT_CROP_THRESHOLD)
}

pub fn weyl_translation_matrix_with(x: &[Complex64], basis: &Basis, pad: u32, threshold: f64) -> Result<Translation> {
    if x.len() != basis.modes().len() {
        return invalid("translation parameter dimension does not match the modes");
    }
    if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return invalid("translation parameter is not finite");
    }
    let cap = basis.truncation.per_mode_cap;
    let mut per = Vec::with_capacity(x.len());
    let mut change: f64 = 0.0;
    let mut deficit: f64 = 0.0;
    for &z in x {
        let (u, d) = translation_1d(z, cap, pad)?;
        let (u2, _) = translation_1d(z, cap, pad + pad / 2 + 2)?;
        change = change.max(max_abs_diff(&u, &u2));
        deficit = deficit.max(d);
        per.push(u);
    }
    if change > threshold {
        return Err(Error::PadInsufficient {
            deficit: change,
            threshold,
        });
    }
    let entries = tensor_compress(basis, &per);
    Ok(Translation {
        matrix: OperatorMatrix::new(basis.truncation.clone(), entries),
        crop_change: change,
        unitarity_deficit: deficit,
        pad,
    })
}

/// Retries with growing pad until the crop change is below the threshold.
pub fn weyl_translation_matrix_auto(x: &[Complex64], basis: &Basis) -> Result<Translation> {
    let mut pad = default_pad(basis.truncation.per_mode_cap).max(4);
    loop {
        match weyl_translation_matrix_with(x, basis, pad, AUTO_CROP_THRESHOLD) {
            Err(Error::PadInsufficient { .. }) if pad < 400 => pad *= 2,
            other => return other,
        }
    }
}

/// Entries Π_k T_k[α_k][β_k] for per-mode tables.
pub fn tensor_compress(basis: &Basis, per_mode: &[CMatrix]) -> CMatrix {
    let n = basis.len();
    CMatrix::from_fn(n, n, |i, j| {
        let (a, b) = (basis.dense(i), basis.dense(j));
        let mut p = c(1.0, 0.0);
        for k in 0..a.len() {
            p *= per_mode[k][(a[k] as usize, b[k] as usize)];
        }
        p
    })
}

/// Relabels ê_α ↦ ŵ_α.
pub fn bargmann_functor_map(v: &FockVector) -> Result<FockVector> {
    if v.side != Side::Configuration {
        return invalid("functor expects a configuration-side vector");
    }
    Ok(FockVector {
        basis: v.basis.clone(),
        side: Side::Phase,
        coeffs: v.coeffs.clone(),
    })
}

/// Per-mode table of c_n P_n(u) on the configuration side.
fn config_tables(u: &[f64], h: f64, cap: u32) -> Vec<Vec<f64>> {
    let s = (2.0 / h).sqrt();
    u.iter().map(|&x| hermite_normalized_all(cap, x * s)).collect()
}

/// Per-mode table of c_n Q_n(x, ξ) = ((x − iξ)/√(2h))^n / √(n!).
pub fn q_tables(x: &[f64], xi: &[f64], h: f64, cap: u32) -> Vec<Vec<Complex64>> {
    let s = (2.0 * h).sqrt().recip();
    x.iter()
        .zip(xi)
        .map(|(&a, &b)| {
            let z = c(a, -b) * s;
            let mut out = Vec::with_capacity(cap as usize + 1);
            let mut cur = c(1.0, 0.0);
            out.push(cur);
            for n in 1..=cap {
                cur = cur * z / (n as f64).sqrt();
                out.push(cur);
            }
            out
        })
        .collect()
}

/// Evaluates J^K(v) at a configuration point (`xi` unused) or J^Φ(v) at a
/// phase point, depending on the vector's side.
pub fn segal_iso_eval(v: &FockVector, h: f64, x: &[f64], xi: &[f64]) -> Result<Complex64> {
    if !(h > 0.0) {
        return invalid("h must be positive");
    }
    let n = v.basis.modes().len();
    if x.len() != n {
        return invalid("point dimension does not match the modes");
    }
    let cap = v.basis.truncation.per_mode_cap;
    let mut acc = c(0.0, 0.0);
    match v.side {
        Side::Configuration => {
            let t = config_tables(x, h, cap);
            for (i, d) in v.basis.iter().enumerate() {
                let p: f64 = d.iter().enumerate().map(|(k, &a)| t[k][a as usize]).product();
                acc += v.coeffs[i] * p;
            }
        }
        Side::Phase => {
            if xi.len() != n {
                return invalid("ξ dimension does not match the modes");
            }
            let t = q_tables(x, xi, h, cap);
            for (i, d) in v.basis.iter().enumerate() {
                let p = d
                    .iter()
                    .enumerate()
                    .fold(c(1.0, 0.0), |p, (k, &a)| p * t[k][a as usize]);
                acc += v.coeffs[i] * p;
            }
        }
    }
    Ok(acc)
}

/// Smallest and largest eigenvalue of Σ_k |v_k⟩⟨v_k| over a set of vectors.
pub fn frame_operator_extremes(vectors: &[FockVector]) -> (f64, f64) {
    let n = vectors.first().map(|v| v.coeffs.len()).unwrap_or(0);
    let mut s = CMatrix::zeros(n, n);
    for v in vectors {
        s += &v.coeffs * v.coeffs.adjoint();
    }
    let ev = crate::linalg::hermitian_eigenvalues(&s);
    (ev[0], ev[ev.len() - 1])
}
