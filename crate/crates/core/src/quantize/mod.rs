//! Weyl, anti-Wick and hybrid operators as matrices on a truncated Fock space.
//!
//! Matrices use M[α][β] = ⟨Op ê_β, ê_α⟩ in the normalized basis of the
//! configuration side (Hermite functions with Planck constant h).

pub mod frame;
pub mod generating;
pub mod kernel;
pub mod symbol;

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;

pub use kernel::{ModeRule, QuadraturePolicy};
pub use symbol::{
    exact_derivatives, heat_smooth, telescoping_apply, DerivativeOracle, Evaluator, GaussTerm, Symbol, SymbolKind,
    TrigAtom,
};

use crate::error::{invalid, Error, Result};
use crate::fock::{phase_coherent_vector, weyl_translation_matrix_auto, weyl_translation_matrix_with, OperatorMatrix, PhasePoint};
use crate::index::{Basis, ModeSet, Truncation};
use crate::linalg::{c, CMatrix};

#[derive(Debug, Clone)]
pub struct QuantizationConfig {
    pub h: f64,
    pub truncation: Truncation,
    pub quadrature: QuadraturePolicy,
    /// Fixed pad for translation matrices; `None` escalates automatically.
    pub pad: Option<u32>,
    pub mc_samples: usize,
    pub seed: u64,
}

impl QuantizationConfig {
    pub fn new(h: f64, truncation: Truncation) -> Result<Self> {
        if !(h > 0.0 && h <= 1.0) {
            return invalid(format!("h must lie in (0, 1], got {h}"));
        }
        Ok(QuantizationConfig {
            h,
            truncation,
            quadrature: QuadraturePolicy::default(),
            pad: None,
            mc_samples: 100_000,
            seed: 0,
        })
    }

    pub fn basis(&self) -> Basis {
        self.truncation.basis()
    }

    pub fn modes(&self) -> &ModeSet {
        &self.truncation.modes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeylBackend {
    Auto,
    /// Generating-function recurrence (trig and Gaussian symbols).
    Exact,
    /// Σ c_k e^{iΦ_S(·)} via padded matrix exponentials (trig symbols).
    Translation,
    /// Cross-Wigner phase-space quadrature.
    Kernel,
    /// Coherent-state frame reconstruction, one mode.
    Frame,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AntiWickRoute {
    Auto,
    Quadrature,
    MonteCarlo,
    /// Weyl matrix of the fully smoothed symbol.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridRoute {
    Auto,
    /// Frame reconstruction on E, μ^Φ quadrature on the complement (trig).
    Direct,
    /// Weyl matrix of the symbol smoothed over the complement.
    Reduced,
    /// Mixed Wigner / anti-Wick phase-space quadrature.
    Kernel,
}

/// How a matrix was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub method: String,
    pub order: Option<usize>,
    /// Entrywise change at the last order increase.
    pub change: Option<f64>,
    pub converged: bool,
    pub mc_samples: Option<usize>,
    pub mc_stderr: Option<f64>,
    pub crop_change: Option<f64>,
    /// max |UᴴU − I| of the padded exponentials before cropping.
    pub unitarity_deficit: Option<f64>,
    pub pad: Option<u32>,
}

impl Diagnostics {
    fn exact(method: &str) -> Self {
        Diagnostics {
            method: method.into(),
            order: None,
            change: None,
            converged: true,
            mc_samples: None,
            mc_stderr: None,
            crop_change: None,
            unitarity_deficit: None,
            pad: None,
        }
    }

    fn adaptive(method: &str, a: &kernel::AdaptiveMatrix) -> Self {
        Diagnostics {
            order: Some(a.order),
            change: Some(a.change),
            converged: a.converged,
            ..Diagnostics::exact(method)
        }
    }
}

#[derive(Debug, Clone)]
pub struct Quantized {
    pub op: OperatorMatrix,
    pub diag: Diagnostics,
}

impl Quantized {
    fn new(f: &Symbol, cfg: &QuantizationConfig, entries: CMatrix, diag: Diagnostics) -> Self {
        let mut op = OperatorMatrix::new(cfg.truncation.clone(), entries);
        op.hermitian = f.is_real();
        Quantized { op, diag }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.op.entries
    }
}

fn check_modes(f: &Symbol, cfg: &QuantizationConfig) -> Result<()> {
    if f.modes != cfg.truncation.modes {
        return invalid("symbol modes must equal the truncation modes");
    }
    Ok(())
}

/// Sign σ in c·e^{−i(y·x + η·ξ)} ↦ c·e^{iΦ_S(σ√h(y + iη))}, fixed once by
/// comparing a coherent matrix element against the closed-form kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub sign: f64,
    pub residual: f64,
    pub rejected_residual: f64,
}

static CALIBRATION: OnceLock<std::result::Result<Calibration, Error>> = OnceLock::new();

pub fn calibration() -> Result<Calibration> {
    CALIBRATION.get_or_init(run_calibration).clone()
}

fn run_calibration() -> Result<Calibration> {
    let h = 0.5;
    let (y, eta) = (0.7, -0.4);
    let modes = ModeSet::range(1);
    let basis = Arc::new(Truncation::boxed(modes.clone(), 30).basis());
    let x0 = PhasePoint::new(vec![0.4], vec![0.3])?;
    let atom = Symbol::trig(modes, vec![TrigAtom::new(vec![y], vec![eta], c(1.0, 0.0))])?;
    let want = generating::exact_coherent_element(&atom, &x0, &x0, h)?;
    let psi = phase_coherent_vector(&x0, h, basis.clone())?;
    let mut res = [0.0; 2];
    for (i, sign) in [1.0, -1.0].into_iter().enumerate() {
        let z = c(y, eta) * (sign * h.sqrt());
        let u = weyl_translation_matrix_auto(&[z], &basis)?;
        let got = u.matrix.apply(&psi).inner(&psi);
        res[i] = (got - want).norm();
    }
    let (sign, residual, rejected) = if res[0] < res[1] {
        (1.0, res[0], res[1])
    } else {
        (-1.0, res[1], res[0])
    };
    if residual > 1e-8 || rejected < 1e-4 {
        return Err(Error::NonConvergence {
            what: "translation sign calibration".into(),
            detail: format!("residuals {residual:e} and {rejected:e}"),
        });
    }
    Ok(Calibration {
        sign,
        residual,
        rejected_residual: rejected,
    })
}

/// ⟨Op_h^{weyl}(F) Ψ_X, Ψ_Y⟩.
pub fn weyl_coherent_element(f: &Symbol, x: &PhasePoint, y: &PhasePoint, cfg: &QuantizationConfig) -> Result<Complex64> {
    if x.dim() != f.n_modes() || y.dim() != f.n_modes() {
        return invalid("phase point dimension does not match the symbol");
    }
    match f.kind {
        SymbolKind::ClosedForm { .. } => {
            let mut order = cfg.quadrature.start.max(16);
            let mut prev = frame::quadrature_coherent_element(f, x, y, cfg.h, order)?;
            while order * 3 / 2 <= cfg.quadrature.max {
                order = (order * 3 / 2) & !1;
                let next = frame::quadrature_coherent_element(f, x, y, cfg.h, order)?;
                let done = (next - prev).norm() <= cfg.quadrature.tol.max(1e-14);
                prev = next;
                if done {
                    return Ok(prev);
                }
            }
            Err(Error::NonConvergence {
                what: "coherent matrix element".into(),
                detail: format!("order {order}"),
            })
        }
        _ => generating::exact_coherent_element(f, x, y, cfg.h),
    }
}

fn translation_sum(atoms: &[TrigAtom], cfg: &QuantizationConfig, basis: &Basis) -> Result<(CMatrix, Diagnostics)> {
    let sign = calibration()?.sign;
    let sh = cfg.h.sqrt();
    let mut m = CMatrix::zeros(basis.len(), basis.len());
    let mut diag = Diagnostics::exact("translation");
    let mut crop: f64 = 0.0;
    let mut deficit: f64 = 0.0;
    let mut pad = 0;
    for a in atoms {
        let z: Vec<Complex64> = a.y.iter().zip(&a.eta).map(|(&y, &e)| c(y, e) * (sign * sh)).collect();
        let t = match cfg.pad {
            Some(p) => weyl_translation_matrix_with(&z, basis, p, crate::fock::DEFAULT_CROP_THRESHOLD)?,
            None => weyl_translation_matrix_auto(&z, basis)?,
        };
        crop = crop.max(t.crop_change);
        deficit = deficit.max(t.unitarity_deficit);
        pad = pad.max(t.pad);
        m += t.matrix.entries * a.c;
    }
    diag.crop_change = Some(crop);
    diag.unitarity_deficit = Some(deficit);
    diag.pad = Some(pad);
    Ok((m, diag))
}

fn kernel_matrix(f: &Symbol, rules: &[ModeRule], cfg: &QuantizationConfig, method: &str) -> Result<(CMatrix, Diagnostics)> {
    let basis = cfg.basis();
    let cap = kernel::table_cap(&basis);
    let separable = matches!(f.kind, SymbolKind::Trig(_));
    if !separable && f.n_modes() > 2 {
        return Err(Error::Unsupported(format!(
            "phase-space quadrature of a non-trig symbol on {} modes",
            f.n_modes()
        )));
    }
    let a = kernel::adaptive_matrix(&cfg.quadrature, cap, |order| {
        if separable {
            kernel::separable_trig_matrix(f, rules, &basis, cfg.h, order)
        } else {
            kernel::quadrature_matrix(f, rules, &basis, cfg.h, order)
        }
    })?;
    let diag = Diagnostics::adaptive(method, &a);
    Ok((a.matrix, diag))
}

pub fn weyl_matrix(f: &Symbol, cfg: &QuantizationConfig, backend: WeylBackend) -> Result<Quantized> {
    check_modes(f, cfg)?;
    let basis = cfg.basis();
    let backend = match (backend, &f.kind) {
        (WeylBackend::Auto, SymbolKind::ClosedForm { .. }) => WeylBackend::Kernel,
        (WeylBackend::Auto, _) => WeylBackend::Exact,
        (b, _) => b,
    };
    let (m, diag) = match backend {
        WeylBackend::Exact => (generating::exact_weyl(f, &basis, cfg.h)?, Diagnostics::exact("generating-function")),
        WeylBackend::Translation => {
            let SymbolKind::Trig(atoms) = &f.kind else {
                return Err(Error::Unsupported("the translation backend needs a trig symbol".into()));
            };
            translation_sum(atoms, cfg, &basis)?
        }
        WeylBackend::Kernel => kernel_matrix(f, &vec![ModeRule::Weyl; f.n_modes()], cfg, "wigner-quadrature")?,
        WeylBackend::Frame => {
            let cap = kernel::table_cap(&basis);
            let policy = QuadraturePolicy {
                start: 16,
                max: 40,
                tol: cfg.quadrature.tol.max(1e-9),
            };
            let a = kernel::adaptive_matrix(&policy, cap + 8, |order| frame::frame_weyl(f, &basis, cfg.h, order))?;
            (a.matrix.clone(), Diagnostics::adaptive("frame", &a))
        }
        WeylBackend::Auto => unreachable!(),
    };
    Ok(Quantized::new(f, cfg, m, diag))
}

pub fn anti_wick_matrix(f: &Symbol, cfg: &QuantizationConfig, route: AntiWickRoute) -> Result<Quantized> {
    check_modes(f, cfg)?;
    let route = match route {
        AntiWickRoute::Auto if f.n_modes() <= 2 || matches!(f.kind, SymbolKind::Trig(_)) => AntiWickRoute::Quadrature,
        AntiWickRoute::Auto => AntiWickRoute::MonteCarlo,
        r => r,
    };
    match route {
        AntiWickRoute::Quadrature => {
            let (m, diag) = kernel_matrix(f, &vec![ModeRule::AntiWick; f.n_modes()], cfg, "anti-wick-quadrature")?;
            Ok(Quantized::new(f, cfg, m, diag))
        }
        AntiWickRoute::MonteCarlo => {
            let mc = kernel::monte_carlo_anti_wick(f, &cfg.basis(), cfg.h, cfg.mc_samples, cfg.seed)?;
            let diag = Diagnostics {
                mc_samples: Some(mc.samples),
                mc_stderr: Some(mc.stderr),
                ..Diagnostics::exact("anti-wick-monte-carlo")
            };
            Ok(Quantized::new(f, cfg, mc.matrix, diag))
        }
        AntiWickRoute::Reduced => {
            let g = heat_smooth(f, &f.modes, cfg.h)?;
            let mut q = weyl_matrix(&g, cfg, WeylBackend::Auto)?;
            q.diag.method = format!("anti-wick-reduced/{}", q.diag.method);
            Ok(q)
        }
        AntiWickRoute::Auto => unreachable!(),
    }
}

/// Op_h^{hyb,E}(F): Weyl in the modes of E, anti-Wick in the others.
pub fn hybrid_matrix(f: &Symbol, e: &ModeSet, cfg: &QuantizationConfig, route: HybridRoute) -> Result<Quantized> {
    check_modes(f, cfg)?;
    if !e.is_subset(&f.modes) {
        return invalid("E must be contained in the symbol's modes");
    }
    let rest = f.modes.minus(e);
    if route == HybridRoute::Auto {
        if rest.is_empty() {
            return weyl_matrix(f, cfg, WeylBackend::Auto);
        }
        if e.is_empty() {
            return anti_wick_matrix(f, cfg, AntiWickRoute::Auto);
        }
    }
    let route = match (route, &f.kind) {
        (HybridRoute::Auto, SymbolKind::ClosedForm { .. }) => HybridRoute::Kernel,
        (HybridRoute::Auto, _) => HybridRoute::Reduced,
        (r, _) => r,
    };
    match route {
        HybridRoute::Reduced => {
            let g = heat_smooth(f, &rest, cfg.h)?;
            let mut q = weyl_matrix(&g, cfg, WeylBackend::Auto)?;
            q.diag.method = format!("hybrid-reduced/{}", q.diag.method);
            q.op.hermitian = f.is_real();
            Ok(q)
        }
        HybridRoute::Kernel => {
            let rules: Vec<ModeRule> = f
                .modes
                .ids()
                .iter()
                .map(|&j| if e.contains(j) { ModeRule::Weyl } else { ModeRule::AntiWick })
                .collect();
            let (m, diag) = kernel_matrix(f, &rules, cfg, "hybrid-kernel")?;
            Ok(Quantized::new(f, cfg, m, diag))
        }
        HybridRoute::Direct => {
            let basis = cfg.basis();
            let cap = kernel::table_cap(&basis);
            let policy = QuadraturePolicy {
                start: 16,
                max: 40,
                tol: cfg.quadrature.tol.max(1e-9),
            };
            let aw_order = cfg.quadrature.floor_for(cap).max(32);
            let a = kernel::adaptive_matrix(&policy, cap + 8, |order| {
                frame::direct_hybrid_trig(f, e, &basis, cfg.h, order, aw_order)
            })?;
            Ok(Quantized::new(f, cfg, a.matrix.clone(), Diagnostics::adaptive("hybrid-direct", &a)))
        }
        HybridRoute::Auto => unreachable!(),
    }
}

/// Σ_k c_k e^{−i√h Φ_S(y_k + iη_k)} for a finite discrete measure, with the
/// sign fixed by [`calibration`].
pub fn old_weyl_matrix(atoms: &[TrigAtom], cfg: &QuantizationConfig) -> Result<Quantized> {
    let n = cfg.truncation.modes.len();
    if atoms.iter().any(|a| a.y.len() != n || a.eta.len() != n) {
        return invalid("atom dimension does not match the truncation modes");
    }
    let f = Symbol::trig(cfg.truncation.modes.clone(), atoms.to_vec())?;
    let basis = cfg.basis();
    let (m, mut diag) = translation_sum(atoms, cfg, &basis)?;
    diag.method = "old-weyl".into();
    Ok(Quantized::new(&f, cfg, m, diag))
}

/// Total variation Σ|c_k|, the norm bound for old-weyl operators.
pub fn old_weyl_norm_bound(atoms: &[TrigAtom]) -> f64 {
    atoms.iter().map(|a| a.c.norm()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hermitian_deficit, hermitian_eigenvalues, max_abs_diff, operator_norm_lower};
    use nalgebra::DMatrix;

    fn cosine(modes: ModeSet, y: Vec<f64>, eta: Vec<f64>) -> Symbol {
        let my: Vec<f64> = y.iter().map(|v| -v).collect();
        let me: Vec<f64> = eta.iter().map(|v| -v).collect();
        Symbol::trig(
            modes,
            vec![TrigAtom::new(y, eta, c(0.5, 0.0)), TrigAtom::new(my, me, c(0.5, 0.0))],
        )
        .unwrap()
    }

    fn cfg1(cap: u32, h: f64) -> QuantizationConfig {
        QuantizationConfig::new(h, Truncation::boxed(ModeSet::range(1), cap)).unwrap()
    }

    #[test]
    fn h_out_of_range_is_rejected() {
        let t = Truncation::boxed(ModeSet::range(1), 2);
        assert!(QuantizationConfig::new(1.5, t.clone()).is_err());
        assert!(QuantizationConfig::new(0.0, t).is_err());
    }

    #[test]
    fn calibration_picks_negative_sign() {
        let cal = calibration().unwrap();
        assert_eq!(cal.sign, -1.0);
        assert!(cal.residual < 1e-10);
    }

    #[test]
    fn unit_symbol_all_backends() {
        let cfg = cfg1(10, 0.6);
        let one = Symbol::constant(ModeSet::range(1), c(1.0, 0.0));
        let id = CMatrix::identity(11, 11);
        for b in [WeylBackend::Exact, WeylBackend::Translation, WeylBackend::Kernel, WeylBackend::Frame] {
            let q = weyl_matrix(&one, &cfg, b).unwrap();
            assert!(max_abs_diff(q.matrix(), &id) < 1e-6, "{b:?}");
        }
        let aw = anti_wick_matrix(&one, &cfg, AntiWickRoute::Auto).unwrap();
        assert!(max_abs_diff(aw.matrix(), &id) < 1e-10);
    }

    #[test]
    fn cosine_backends_agree() {
        let cfg = cfg1(10, 0.5);
        let f = cosine(ModeSet::range(1), vec![0.8], vec![-0.3]);
        let exact = weyl_matrix(&f, &cfg, WeylBackend::Exact).unwrap();
        for b in [WeylBackend::Translation, WeylBackend::Kernel, WeylBackend::Frame] {
            let q = weyl_matrix(&f, &cfg, b).unwrap();
            assert!(max_abs_diff(q.matrix(), exact.matrix()) < 1e-5, "{b:?}: {:?}", q.diag);
        }
        assert!(hermitian_deficit(exact.matrix()) < 1e-12);
    }

    #[test]
    fn gaussian_weyl_against_kernel_quadrature() {
        let cfg = cfg1(12, 1.0);
        let f = Symbol::gauss(ModeSet::range(1), vec![GaussTerm { coeff: 1.0, form: DMatrix::identity(2, 2) }]).unwrap();
        let e = weyl_matrix(&f, &cfg, WeylBackend::Exact).unwrap();
        let k = weyl_matrix(&f, &cfg, WeylBackend::Kernel).unwrap();
        assert!(hermitian_deficit(e.matrix()) < 1e-12);
        assert!(max_abs_diff(e.matrix(), k.matrix()) < 1e-5);
    }

    #[test]
    fn anti_wick_bridge_one_mode() {
        let cfg = cfg1(10, 0.5);
        let g = Symbol::gauss(
            ModeSet::range(1),
            vec![GaussTerm {
                coeff: 1.0,
                form: DMatrix::from_row_slice(2, 2, &[0.6, 0.2, 0.2, 0.9]),
            }],
        )
        .unwrap();
        let t = cosine(ModeSet::range(1), vec![1.1], vec![0.4]);
        for f in [g, t] {
            let aw = anti_wick_matrix(&f, &cfg, AntiWickRoute::Quadrature).unwrap();
            let red = anti_wick_matrix(&f, &cfg, AntiWickRoute::Reduced).unwrap();
            assert!(max_abs_diff(aw.matrix(), red.matrix()) < 1e-5);
            let ev = hermitian_eigenvalues(aw.matrix());
            if matches!(f.kind, SymbolKind::Gauss(_)) {
                assert!(ev[0] > -1e-9);
            }
        }
    }

    #[test]
    fn hybrid_routes_two_modes() {
        let modes = ModeSet::range(2);
        let cfg = QuantizationConfig::new(0.5, Truncation::new(modes.clone(), 5, 5)).unwrap();
        let f = Symbol::trig(
            modes.clone(),
            vec![
                TrigAtom::new(vec![0.7, -0.2], vec![0.1, 0.5], c(0.4, 0.1)),
                TrigAtom::new(vec![-0.3, 0.6], vec![0.8, 0.0], c(-0.2, 0.3)),
            ],
        )
        .unwrap();
        let e = ModeSet::new(vec![0]).unwrap();
        let red = hybrid_matrix(&f, &e, &cfg, HybridRoute::Reduced).unwrap();
        let dir = hybrid_matrix(&f, &e, &cfg, HybridRoute::Direct).unwrap();
        let ker = hybrid_matrix(&f, &e, &cfg, HybridRoute::Kernel).unwrap();
        assert!(max_abs_diff(red.matrix(), dir.matrix()) < 1e-6, "{:?}", dir.diag);
        assert!(max_abs_diff(red.matrix(), ker.matrix()) < 1e-8);
    }

    #[test]
    fn hybrid_degenerations() {
        let modes = ModeSet::range(2);
        let cfg = QuantizationConfig::new(0.7, Truncation::new(modes.clone(), 4, 4)).unwrap();
        let f = cosine(modes.clone(), vec![0.6, 0.2], vec![-0.4, 0.9]);
        let all = hybrid_matrix(&f, &modes, &cfg, HybridRoute::Kernel).unwrap();
        let w = weyl_matrix(&f, &cfg, WeylBackend::Exact).unwrap();
        assert!(max_abs_diff(all.matrix(), w.matrix()) < 1e-8);
        let none = hybrid_matrix(&f, &ModeSet::empty(), &cfg, HybridRoute::Reduced).unwrap();
        let aw = anti_wick_matrix(&f, &cfg, AntiWickRoute::Quadrature).unwrap();
        assert!(max_abs_diff(none.matrix(), aw.matrix()) < 1e-8);
    }

    #[test]
    fn old_weyl_examples() {
        let cfg = cfg1(10, 0.5);
        let zero = [TrigAtom::new(vec![0.0], vec![0.0], c(1.0, 0.0))];
        let q = old_weyl_matrix(&zero, &cfg).unwrap();
        assert!(max_abs_diff(q.matrix(), &CMatrix::identity(11, 11)) < 1e-14);
        let single = [TrigAtom::new(vec![0.4], vec![-0.9], c(1.0, 0.0))];
        let u = old_weyl_matrix(&single, &cfg).unwrap();
        assert!(u.diag.unitarity_deficit.unwrap() < 1e-10);
        // columns well inside the cap are orthonormal up to the crop leak
        let lead = u.matrix().columns(0, 4).into_owned();
        assert!(max_abs_diff(&(lead.adjoint() * &lead), &CMatrix::identity(4, 4)) < 1e-6);
        let atoms = vec![
            TrigAtom::new(vec![0.4], vec![-0.9], c(0.3, 0.0)),
            TrigAtom::new(vec![-1.0], vec![0.2], c(0.1, -0.4)),
            TrigAtom::new(vec![0.5], vec![0.5], c(-0.2, 0.2)),
        ];
        let ow = old_weyl_matrix(&atoms, &cfg).unwrap();
        let w = weyl_matrix(&Symbol::trig(ModeSet::range(1), atoms.clone()).unwrap(), &cfg, WeylBackend::Exact).unwrap();
        assert!(max_abs_diff(ow.matrix(), w.matrix()) < 1e-5);
        let norm = operator_norm_lower(ow.matrix(), 1e-10, 1000).unwrap().value;
        assert!(norm <= old_weyl_norm_bound(&atoms) + 1e-8);
    }

    #[test]
    fn coherent_element_examples() {
        let cfg = cfg1(4, 0.5);
        let z = Symbol::closed_form(ModeSet::range(1), Arc::new(|v: &[f64]| c(v[0], 0.0)), None, true);
        let x = PhasePoint::new(vec![0.9], vec![-0.3]).unwrap();
        assert!((weyl_coherent_element(&z, &x, &x, &cfg).unwrap() - c(0.9, 0.0)).norm() < 1e-12);
        let y = PhasePoint::new(vec![-0.2], vec![0.4]).unwrap();
        let one = Symbol::constant(ModeSet::range(1), c(1.0, 0.0));
        let k = weyl_coherent_element(&one, &x, &y, &cfg).unwrap();
        let d2 = 1.1f64.powi(2) + 0.7f64.powi(2);
        assert!((k.norm() - (-d2 / (4.0 * 0.5)).exp()).abs() < 1e-13);
    }
}
