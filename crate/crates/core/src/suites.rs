//! Invariant suites with fixed defaults. Each returns named checks against
//! thresholds together with its wall-clock time and budget; the acceptance
//! tests and the command-line self-test both run these.

use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bargmann::{
    anti_wick_translation_residual, bargmann_transform, configuration_covariance_residual, frame_norm,
    kree_raczka_transform, phase_covariance_residual, reproducing_eval, segal_bargmann_integral,
    shift_identity_residual, IntegralPolicy, ReproducingRoute,
};
use crate::bounds::{cv_bound, diff_bound, kernel_decay_check, operator_norm_lower, constant_integrals, trig_cert, SymbolClassCert};
use crate::error::Result;
use crate::fock::{weyl_translation_matrix, weyl_translation_matrix_with, FockVector, PhasePoint, Side};
use crate::gaussmeasure::{
    cameron_martin_divergence_probe, ell_a, exp_ell, mc_integrate, tail_summability_report, GaussianMeasureSpec, MeasureKind,
    RngStream, WeightSequence,
};
use crate::hermite::{basis_eval, hermite_binomial_check, measure_rule, BasisFunctionSpec, WeightKind};
use crate::index::{factorial, Basis, ModeSet, Truncation};
use crate::linalg::{c, max_abs_diff, CMatrix};
use crate::quantize::{
    anti_wick_matrix, heat_smooth, hybrid_matrix, old_weyl_matrix, weyl_matrix, AntiWickRoute, GaussTerm, HybridRoute,
    QuantizationConfig, Symbol, TrigAtom, WeylBackend,
};
use crate::symbols::{bound_battery, cosine_atoms, lattice_gaussian, CertifiedSymbol, LatticeGaussian, LatticeNorm, LatticeWindow};

/// One named comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl Check {
    /// value < threshold.
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            passed: value < threshold,
        }
    }

    /// value ≤ threshold.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Check {
            name: name.into(),
            value: if ok { 1.0 } else { 0.0 },
            threshold: 1.0,
            passed: ok,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub id: u32,
    pub name: &'static str,
    pub checks: Vec<Check>,
    pub elapsed_secs: f64,
    pub budget_secs: f64,
}

impl SuiteReport {
    pub fn within_budget(&self) -> bool {
        self.elapsed_secs <= self.budget_secs
    }

    pub fn passed(&self) -> bool {
        self.within_budget() && !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// `PASS [3] bargmann (12 checks, 4.1 s / 60 s)`.
    pub fn line(&self) -> String {
        format!(
            "{} [{}] {} ({} checks, {:.2} s / {} s)",
            if self.passed() { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.checks.len(),
            self.elapsed_secs,
            self.budget_secs
        )
    }
}

fn timed(id: u32, name: &'static str, budget: f64, body: impl FnOnce(&mut Vec<Check>) -> Result<()>) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut checks = Vec::new();
    body(&mut checks)?;
    Ok(SuiteReport {
        id,
        name,
        checks,
        elapsed_secs: start.elapsed().as_secs_f64(),
        budget_secs: budget,
    })
}

fn random_point(rng: &mut ChaCha8Rng, n: usize, r: f64) -> PhasePoint {
    PhasePoint::new((0..n).map(|_| rng.gen_range(-r..r)).collect(), (0..n).map(|_| rng.gen_range(-r..r)).collect())
        .expect("finite point")
}

fn random_vector(b: &Arc<Basis>, rng: &mut ChaCha8Rng) -> FockVector {
    let mut v = FockVector::zeros(b.clone(), Side::Configuration);
    for i in 0..b.len() {
        v.coeffs[i] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    }
    v
}

fn boxed(n: u32, cap: u32) -> Truncation {
    if n == 1 {
        Truncation::boxed(ModeSet::range(1), cap)
    } else {
        Truncation::new(ModeSet::range(n), cap, cap)
    }
}

/// Schur constant and the p_k integrals.
pub fn constants_suite() -> Result<SuiteReport> {
    timed(1, "constants", 1.0, |out| {
        let r = constant_integrals();
        out.push(Check::below("schur integral vs sqrt(pi/2)", r.schur_error, 1e-10));
        for (k, p) in r.p_integrals.iter().enumerate() {
            out.push(Check::at_most(format!("p{k} integral <= sqrt(C)"), *p, r.c.sqrt()));
        }
        out.push(Check::below("p1 integral vs 4/sqrt(pi)", (r.p_integrals[1] - 4.0 / std::f64::consts::PI.sqrt()).abs(), 1e-10));
        Ok(())
    })
}

/// All multi-indices on `n` modes with |α| ≤ d.
fn multi_indices(n: usize, d: u32) -> Vec<Vec<u32>> {
    let b = Truncation::new(ModeSet::range(n as u32), d, d).basis();
    b.iter().map(|a| a.to_vec()).collect()
}

/// Max |G − I| for the Gram matrix of `f` under a tensor rule.
fn gram_deviation(nodes: &[f64], weights: &[f64], dim: usize, fs: &[Box<dyn Fn(&[f64]) -> Complex64 + '_>]) -> f64 {
    let k = nodes.len();
    let mut gram = CMatrix::zeros(fs.len(), fs.len());
    let mut idx = vec![0usize; dim];
    let mut v = vec![0.0; dim];
    let mut vals = vec![c(0.0, 0.0); fs.len()];
    loop {
        let mut w = 1.0;
        for (t, &i) in idx.iter().enumerate() {
            v[t] = nodes[i];
            w *= weights[i];
        }
        for (val, f) in vals.iter_mut().zip(fs) {
            *val = f(&v);
        }
        for a in 0..fs.len() {
            for b in 0..fs.len() {
                gram[(a, b)] += vals[a] * vals[b].conj() * w;
            }
        }
        let mut t = 0;
        loop {
            if t == dim {
                return max_abs_diff(&gram, &CMatrix::identity(fs.len(), fs.len()));
            }
            idx[t] += 1;
            if idx[t] < k {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
    }
}

/// Orthonormality of c_α P_{α,h} and c_α Q_{α,h}; Hermite binomial identity.
pub fn hermite_suite() -> Result<SuiteReport> {
    timed(2, "hermite", 10.0, |out| {
        for n in [1usize, 2] {
            let alphas = multi_indices(n, 6);
            let norms: Vec<f64> = alphas
                .iter()
                .map(|a| Ok(a.iter().map(|&k| factorial(k)).collect::<Result<Vec<_>>>()?.iter().product::<f64>().sqrt()))
                .collect::<Result<_>>()?;
            for h in [0.5, 1.0] {
                let rk = measure_rule(10, WeightKind::Configuration { h })?;
                let fs: Vec<Box<dyn Fn(&[f64]) -> Complex64>> = alphas
                    .iter()
                    .zip(&norms)
                    .map(|(a, &nm)| {
                        let spec = BasisFunctionSpec::PK { alpha: a.clone(), h };
                        Box::new(move |u: &[f64]| basis_eval(&spec, u, &[]).expect("dimensions match") / nm) as Box<dyn Fn(&[f64]) -> Complex64>
                    })
                    .collect();
                let d = gram_deviation(&rk.nodes, &rk.weights, n, &fs);
                out.push(Check::below(format!("P gram, {n} mode(s), h={h}"), d, 1e-8));

                let rp = measure_rule(10, WeightKind::Phase { h })?;
                let fs: Vec<Box<dyn Fn(&[f64]) -> Complex64>> = alphas
                    .iter()
                    .zip(&norms)
                    .map(|(a, &nm)| {
                        let spec = BasisFunctionSpec::Q { alpha: a.clone(), h };
                        Box::new(move |v: &[f64]| basis_eval(&spec, &v[..n], &v[n..]).expect("dimensions match") / nm)
                            as Box<dyn Fn(&[f64]) -> Complex64>
                    })
                    .collect();
                let d = gram_deviation(&rp.nodes, &rp.weights, 2 * n, &fs);
                out.push(Check::below(format!("Q gram, {n} mode(s), h={h}"), d, 1e-8));
            }
        }
        let pts: Vec<(f64, f64)> = (0..100)
            .map(|k| {
                let t = k as f64 * 0.37;
                (2.0 * t.sin(), 1.5 * (1.3 * t).cos())
            })
            .collect();
        for m in 0..=6 {
            out.push(Check::below(format!("binomial identity m={m}"), hermite_binomial_check(m, &pts)?, 1e-9));
        }
        Ok(())
    })
}

/// Transform of P_α, reproducing routes, Kree–Rączka, shift identity, frame norm.
pub fn bargmann_suite(seed: u64) -> Result<SuiteReport> {
    timed(3, "bargmann", 60.0, |out| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = 0.8;
        let mut worst: f64 = 0.0;
        for a in 0..=5u32 {
            for _ in 0..6 {
                let p = random_point(&mut rng, 1, 1.5);
                let spec = BasisFunctionSpec::PK { alpha: vec![a], h };
                let v = segal_bargmann_integral(|u: &[f64]| basis_eval(&spec, u, &[]).expect("one mode"), 1, &p, h, IntegralPolicy::default())?;
                let q = basis_eval(&BasisFunctionSpec::Q { alpha: vec![a], h }, &p.x, &p.xi)?;
                worst = worst.max((v - q).norm());
            }
        }
        out.push(Check::below("transform of P_alpha equals Q_alpha", worst, 1e-7));

        let h = 0.6;
        let b = Arc::new(Truncation::boxed(ModeSet::range(1), 4).basis());
        let mut worst: f64 = 0.0;
        for _ in 0..3 {
            let f = bargmann_transform(&random_vector(&b, &mut rng), h)?;
            for _ in 0..4 {
                let x = random_point(&mut rng, 1, 1.0);
                let d = reproducing_eval(&f, &x, ReproducingRoute::Basis)?;
                let k = reproducing_eval(&f, &x, ReproducingRoute::Kernel)?;
                let s = reproducing_eval(&f, &x, ReproducingRoute::Shifted)?;
                worst = worst.max((d - k).norm()).max((d - s).norm());
            }
        }
        out.push(Check::below("reproducing property, three routes", worst, 1e-6));

        let b3 = Arc::new(Truncation::boxed(ModeSet::range(1), 3).basis());
        let mut worst: f64 = 0.0;
        for _ in 0..4 {
            let v = random_vector(&b3, &mut rng);
            let x = random_point(&mut rng, 1, 1.0);
            let k = kree_raczka_transform(&v, &x, 0.9)?;
            let e = bargmann_transform(&v, 0.9)?.eval(&x.x, &x.xi)?;
            worst = worst.max((k - e).norm());
        }
        out.push(Check::below("Kree-Raczka integral vs evaluation", worst, 1e-6));

        let mut worst: f64 = 0.0;
        for _ in 0..3 {
            let f = bargmann_transform(&random_vector(&b3, &mut rng), 1.0)?;
            let g = bargmann_transform(&random_vector(&b3, &mut rng), 1.0)?;
            let (a, bb) = (rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
            worst = worst.max(shift_identity_residual(&f, &g, &[a], &[bb], 1.0)?);
        }
        out.push(Check::below("shift identity", worst, 1e-7));

        let b2 = Arc::new(Truncation::boxed(ModeSet::range(2), 3).basis());
        let mut worst: f64 = 0.0;
        for e in [ModeSet::range(1), ModeSet::range(2)] {
            let v = random_vector(&b2, &mut rng);
            let n = frame_norm(&v, &e, 0.7)?;
            worst = worst.max((n.value - v.norm()).abs() / v.norm());
        }
        out.push(Check::below("frame norm equals Fock norm", worst, 1e-5));
        Ok(())
    })
}

/// Translation covariance on both sides, the plane-wave anti-Wick identity
/// and the product law of the translations.
pub fn covariance_suite(seed: u64) -> Result<SuiteReport> {
    timed(4, "covariance", 60.0, |out| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (cap, pad) = (20, 10);
        let b = Arc::new(Truncation::boxed(ModeSet::range(1), cap).basis());
        let us: Vec<f64> = (0..25).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let ps: Vec<PhasePoint> = (0..25).map(|_| random_point(&mut rng, 1, 1.5)).collect();
        let (mut wc, mut wp): (f64, f64) = (0.0, 0.0);
        for _ in 0..5 {
            let (a, bb) = (rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7));
            let h = if rng.gen_bool(0.5) { 0.5 } else { 1.0 };
            for i in 0..3 {
                let f = FockVector::basis_vector(b.clone(), Side::Configuration, i);
                wc = wc.max(configuration_covariance_residual(&f, a, bb, h, pad, &us)?);
                wp = wp.max(phase_covariance_residual(&f, a * h.sqrt(), bb * h.sqrt(), h, pad, &ps)?);
            }
        }
        out.push(Check::below("configuration covariance", wc, 1e-6));
        out.push(Check::below("phase-space covariance", wp, 1e-6));
        out.push(Check::below("anti-Wick plane wave is a translation", anti_wick_translation_residual(0.4, -0.6, 0.5, 12, 8)?, 1e-5));

        // crops multiply correctly only on vectors well inside the cap
        let k = (2 * cap / 5) as usize + 1;
        let mut worst: f64 = 0.0;
        for _ in 0..3 {
            let x = c(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7));
            let y = c(rng.gen_range(-0.7..0.7), rng.gen_range(-0.7..0.7));
            let ux = weyl_translation_matrix(&[x], &b, pad)?.matrix.entries;
            let uy = weyl_translation_matrix(&[y], &b, pad)?.matrix.entries;
            let uxy = weyl_translation_matrix_with(&[x + y], &b, pad, 1e-3)?.matrix.entries;
            let phase = c(0.0, 0.5 * (x * y.conj()).im).exp();
            let lhs = (ux * uy).view((0, 0), (k, k)).into_owned();
            let rhs = (uxy * phase).view((0, 0), (k, k)).into_owned();
            worst = worst.max(max_abs_diff(&lhs, &rhs));
        }
        out.push(Check::below("translation product law", worst, 1e-6));
        Ok(())
    })
}

/// Cross-checks between the quantizers.
pub fn quantizer_suite() -> Result<SuiteReport> {
    timed(5, "quantizers", 600.0, |out| {
        let one_mode = ModeSet::range(1);
        let cfg = QuantizationConfig::new(0.6, boxed(1, 10))?;
        let unit = Symbol::constant(one_mode.clone(), c(1.0, 0.0));
        let id = CMatrix::identity(11, 11);
        for backend in [WeylBackend::Exact, WeylBackend::Translation, WeylBackend::Kernel, WeylBackend::Frame] {
            let q = weyl_matrix(&unit, &cfg, backend)?;
            out.push(Check::below(format!("weyl(1) = I, {backend:?}"), max_abs_diff(q.matrix(), &id), 1e-6));
        }

        let two = ModeSet::range(2);
        let cfg2 = QuantizationConfig::new(0.7, Truncation::new(two.clone(), 4, 4))?;
        let mut atoms = cosine_atoms(vec![0.6, 0.2], vec![-0.4, 0.9], 1.0);
        atoms.push(TrigAtom::new(vec![0.3, -0.5], vec![0.2, 0.1], c(0.2, -0.1)));
        let f2 = Symbol::trig(two.clone(), atoms)?;
        let all = hybrid_matrix(&f2, &two, &cfg2, HybridRoute::Kernel)?;
        let w = weyl_matrix(&f2, &cfg2, WeylBackend::Exact)?;
        out.push(Check::below("hybrid(all modes) = weyl", max_abs_diff(all.matrix(), w.matrix()), 1e-6));
        let none = hybrid_matrix(&f2, &ModeSet::empty(), &cfg2, HybridRoute::Reduced)?;
        let aw = anti_wick_matrix(&f2, &cfg2, AntiWickRoute::Quadrature)?;
        out.push(Check::below("hybrid(no modes) = anti-Wick", max_abs_diff(none.matrix(), aw.matrix()), 1e-6));

        let cfg1 = QuantizationConfig::new(0.5, boxed(1, 10))?;
        let g = Symbol::gauss(
            one_mode.clone(),
            vec![GaussTerm {
                coeff: 1.0,
                form: nalgebra::DMatrix::from_row_slice(2, 2, &[0.6, 0.2, 0.2, 0.9]),
            }],
        )?;
        let t = Symbol::trig(one_mode.clone(), cosine_atoms(vec![1.1], vec![0.4], 1.0))?;
        for (name, f) in [("gauss", g), ("trig", t)] {
            let aw = anti_wick_matrix(&f, &cfg1, AntiWickRoute::Quadrature)?;
            let smooth = heat_smooth(&f, &one_mode, cfg1.h)?;
            let w = weyl_matrix(&smooth, &cfg1, WeylBackend::Exact)?;
            out.push(Check::below(format!("anti-Wick = weyl of heat-smoothed, {name}"), max_abs_diff(aw.matrix(), w.matrix()), 1e-5));
        }

        let cfg5 = QuantizationConfig::new(0.5, Truncation::new(two.clone(), 5, 5))?;
        let f = Symbol::trig(
            two.clone(),
            vec![
                TrigAtom::new(vec![0.7, -0.2], vec![0.1, 0.5], c(0.4, 0.1)),
                TrigAtom::new(vec![-0.3, 0.6], vec![0.8, 0.0], c(-0.2, 0.3)),
            ],
        )?;
        let e = ModeSet::new(vec![0])?;
        let red = hybrid_matrix(&f, &e, &cfg5, HybridRoute::Reduced)?;
        let dir = hybrid_matrix(&f, &e, &cfg5, HybridRoute::Direct)?;
        out.push(Check::below("hybrid direct vs reduced route", max_abs_diff(red.matrix(), dir.matrix()), 1e-4));

        let atoms = vec![
            TrigAtom::new(vec![0.4], vec![-0.9], c(0.3, 0.0)),
            TrigAtom::new(vec![-1.0], vec![0.2], c(0.1, -0.4)),
            TrigAtom::new(vec![0.5], vec![0.5], c(-0.2, 0.2)),
        ];
        let ow = old_weyl_matrix(&atoms, &cfg1)?;
        let w = weyl_matrix(&Symbol::trig(one_mode, atoms)?, &cfg1, WeylBackend::Exact)?;
        out.push(Check::below("old-weyl = weyl, three atoms", max_abs_diff(ow.matrix(), w.matrix()), 1e-5));
        Ok(())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    Weyl,
    Hybrid,
    Difference,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::Weyl => "weyl",
            BoundKind::Hybrid => "hybrid",
            BoundKind::Difference => "difference",
        }
    }
}

/// A norm estimate from below against an analytic bound from above.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub symbol: String,
    pub kind: BoundKind,
    pub h: f64,
    pub cap: u32,
    pub lambda: Vec<u32>,
    pub lambda2: Vec<u32>,
    pub estimate: f64,
    pub bound: f64,
    pub converged: bool,
}

impl BoundRow {
    /// Tightness; at most 1 when the bound holds.
    pub fn ratio(&self) -> f64 {
        if self.bound > 0.0 {
            self.estimate / self.bound
        } else if self.estimate == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }

    pub fn holds(&self) -> bool {
        self.estimate <= self.bound
    }
}

const NORM_TOL: f64 = 1e-9;
const NORM_ITER: usize = 20_000;

fn norm(a: &CMatrix) -> Result<(f64, bool)> {
    let e = operator_norm_lower(a, NORM_TOL, NORM_ITER)?;
    Ok((e.value, e.converged))
}

/// Weyl norm against the product bound over all modes; hybrid norms for
/// every Λ ⊆ Γ against the product over Λ; differences of nested pairs.
pub fn bound_rows(s: &CertifiedSymbol, h: f64, cap: u32) -> Result<Vec<BoundRow>> {
    let gamma = s.symbol.modes.clone();
    let cfg = QuantizationConfig::new(h, if gamma.len() == 1 { Truncation::boxed(gamma.clone(), cap) } else { Truncation::new(gamma.clone(), cap, cap) })?;
    let mut rows = Vec::new();
    let w = weyl_matrix(&s.symbol, &cfg, WeylBackend::Auto)?;
    let (est, converged) = norm(w.matrix())?;
    rows.push(BoundRow {
        symbol: s.name.clone(),
        kind: BoundKind::Weyl,
        h,
        cap,
        lambda: gamma.ids().to_vec(),
        lambda2: vec![],
        estimate: est,
        bound: cv_bound(&s.cert, h, &gamma)?,
        converged,
    });
    let subsets = gamma.subsets();
    let mut hybrids = Vec::with_capacity(subsets.len());
    for lam in &subsets {
        let m = if lam == &gamma { w.matrix().clone() } else { hybrid_matrix(&s.symbol, lam, &cfg, HybridRoute::Auto)?.matrix().clone() };
        let (est, converged) = norm(&m)?;
        rows.push(BoundRow {
            symbol: s.name.clone(),
            kind: BoundKind::Hybrid,
            h,
            cap,
            lambda: lam.ids().to_vec(),
            lambda2: vec![],
            estimate: est,
            bound: cv_bound(&s.cert, h, lam)?,
            converged,
        });
        hybrids.push(m);
    }
    for (i, a) in subsets.iter().enumerate() {
        for (j, b) in subsets.iter().enumerate() {
            if a.len() < b.len() && a.is_subset(b) {
                let (est, converged) = norm(&(&hybrids[j] - &hybrids[i]))?;
                rows.push(BoundRow {
                    symbol: s.name.clone(),
                    kind: BoundKind::Difference,
                    h,
                    cap,
                    lambda: a.ids().to_vec(),
                    lambda2: b.ids().to_vec(),
                    estimate: est,
                    bound: diff_bound(&s.cert, a, b, h)?,
                    converged,
                });
            }
        }
    }
    Ok(rows)
}

/// The default battery at h ∈ {0.25, 1}, cap 12, both certificate orders.
pub fn bound_suite_rows() -> Result<Vec<BoundRow>> {
    let mut rows = Vec::new();
    for order in [2, 4] {
        for s in bound_battery(order)? {
            for h in [0.25, 1.0] {
                let mut r = bound_rows(&s, h, 12)?;
                for row in &mut r {
                    row.symbol = format!("{}/order{order}", row.symbol);
                }
                rows.extend(r);
            }
        }
    }
    Ok(rows)
}

pub fn bound_suite() -> Result<(SuiteReport, Vec<BoundRow>)> {
    let mut rows = Vec::new();
    let report = timed(6, "bound inequalities", 600.0, |out| {
        rows = bound_suite_rows()?;
        let symbols: std::collections::BTreeSet<&str> = rows.iter().map(|r| r.symbol.as_str()).collect();
        out.push(Check::holds(format!("battery has >= 5 symbols per order ({})", symbols.len() / 2), symbols.len() >= 10));
        for kind in [BoundKind::Weyl, BoundKind::Hybrid, BoundKind::Difference] {
            let of: Vec<&BoundRow> = rows.iter().filter(|r| r.kind == kind).collect();
            let worst = of.iter().map(|r| r.ratio()).fold(0.0, f64::max);
            let violations = of.iter().filter(|r| !r.holds()).count();
            out.push(Check::at_most(format!("{} violations (worst ratio {worst:.3e})", kind.as_str()), violations as f64, 0.0));
        }
        Ok(())
    })?;
    Ok((report, rows))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub est_norm_diff: f64,
    pub diff_bound: f64,
}

impl ConvergenceRow {
    pub fn ratio(&self) -> f64 {
        self.est_norm_diff / self.diff_bound
    }
}

/// ‖hybrid(Λ_{n+1}) − hybrid(Λ_n)‖ for Λ_n the first n modes.
pub fn convergence_rows(lg: &LatticeGaussian, cert: &SymbolClassCert, h: f64, truncation: Truncation) -> Result<Vec<ConvergenceRow>> {
    let gamma = lg.symbol.modes.clone();
    let cfg = QuantizationConfig::new(h, truncation)?;
    let ids = gamma.ids().to_vec();
    let mut prev: Option<(ModeSet, CMatrix)> = None;
    let mut rows = Vec::new();
    for n in 0..=ids.len() {
        let lam = ModeSet::new(ids[..n].to_vec())?;
        let m = hybrid_matrix(&lg.symbol, &lam, &cfg, HybridRoute::Auto)?.matrix().clone();
        if let Some((pl, pm)) = prev {
            let (est, _) = norm(&(&m - &pm))?;
            rows.push(ConvergenceRow {
                n: n - 1,
                est_norm_diff: est,
                diff_bound: diff_bound(cert, &pl, &lam, h)?,
            });
        }
        prev = Some((lam, m));
    }
    Ok(rows)
}

/// Nearest-neighbour Gaussian on four sites with g_j = 2^{−j}.
pub fn convergence_setup(lambda: f64) -> Result<(LatticeGaussian, SymbolClassCert)> {
    let w = LatticeWindow::line(0, 3)?;
    let g: Vec<f64> = (0..4).map(|j| 2f64.powi(-j)).collect();
    let lg = lattice_gaussian(&w, &g, lambda, LatticeNorm::Sup)?;
    let (cert, _) = lg.fitted_cert(2, 41)?;
    Ok((lg, cert))
}

pub fn convergence_suite() -> Result<(SuiteReport, Vec<ConvergenceRow>)> {
    let mut rows = Vec::new();
    let report = timed(7, "convergence", 600.0, |out| {
        let (lg, cert) = convergence_setup(0.3)?;
        rows = convergence_rows(&lg, &cert, 0.5, Truncation::new(lg.symbol.modes.clone(), 6, 6))?;
        out.push(Check::holds("nested differences decrease", rows.windows(2).all(|w| w[1].est_norm_diff < w[0].est_norm_diff)));
        let worst = rows.iter().map(|r| r.ratio()).fold(0.0, f64::max);
        out.push(Check::at_most("difference / bound", worst, 1.0));
        Ok(())
    })?;
    Ok((report, rows))
}

/// Gaussian functional norms by Monte Carlo, divergence probe, summability.
pub fn measure_suite(seed: u64) -> Result<SuiteReport> {
    measure_suite_with(seed, 100_000)
}

pub fn measure_suite_with(seed: u64, samples: usize) -> Result<SuiteReport> {
    timed(8, "gaussian measures", 60.0, |out| {
        let h = 1.0;
        let a = [c(0.3, 0.2), c(-0.1, 0.4), c(0.2, 0.0)];
        let spec = GaussianMeasureSpec::new(ModeSet::range(3), h, MeasureKind::Configuration)?;
        let a2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let re2: f64 = a.iter().map(|z| z.re * z.re).sum();
        let l = mc_integrate(|x| c(ell_a(&a, x).norm_sqr(), 0.0), &spec, RngStream::new(seed, 0), samples)?;
        out.push(Check::at_most("E|l_a|^2 in sigma units", (l.mean - c(h / 2.0 * a2, 0.0)).norm() / l.stderr, 3.0));
        let e = mc_integrate(|x| c(exp_ell(&a, x).norm_sqr(), 0.0), &spec, RngStream::new(seed, 1), samples)?;
        out.push(Check::at_most("E|exp(l_a)|^2 in sigma units", (e.mean - c((h * re2).exp(), 0.0)).norm() / e.stderr, 3.0));

        let m = cameron_martin_divergence_probe(1.0, &[10, 40], RngStream::new(seed, 2), 10_000)?;
        let f = m[1].1 / m[0].1;
        out.push(Check::holds(format!("divergence probe factor {f:.3} in [3, 5]"), (3.0..=5.0).contains(&f)));

        let count = 101;
        let w = WeightSequence::power_law_z1(1.0, count)?;
        let r = tail_summability_report(&w, 1.0, count)?;
        // list position p holds a site with |j| = ⌈p/2⌉
        let mut worst: f64 = 0.0;
        for (p, t) in r.terms.iter().enumerate() {
            let j = p.div_ceil(2) as f64;
            let bound = std::f64::consts::SQRT_2 * (-(1.0 + j).powi(2) / 4.0).exp();
            worst = worst.max(t / bound);
        }
        out.push(Check::at_most("tail terms / sqrt(2) exp(-(1+|j|)^2/4)", worst, 1.0));
        let last = r.partial_sums[count - 1] - r.partial_sums[count / 2];
        out.push(Check::below("partial sums settle (second-half increment)", last, 1e-12));
        Ok(())
    })
}

/// Kernel decay over random coherent pairs for one-mode trig symbols.
pub fn kernel_decay_suite(seed: u64) -> Result<SuiteReport> {
    timed(9, "kernel decay", 120.0, |out| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let one = ModeSet::range(1);
        let symbols = [
            cosine_atoms(vec![0.9], vec![0.4], 1.0),
            vec![
                TrigAtom::new(vec![0.5], vec![-0.3], c(0.6, 0.2)),
                TrigAtom::new(vec![-1.2], vec![0.7], c(-0.3, 0.1)),
                TrigAtom::new(vec![0.0], vec![0.0], c(0.5, 0.0)),
            ],
        ];
        for (k, atoms) in symbols.iter().enumerate() {
            let f = Symbol::trig(one.clone(), atoms.clone())?;
            let cert = trig_cert(&one, atoms, 2)?;
            let pairs: Vec<_> = (0..50).map(|_| (random_point(&mut rng, 1, 3.0), random_point(&mut rng, 1, 3.0))).collect();
            for h in [0.25, 1.0] {
                let r = kernel_decay_check(&f, &cert, &one, h, &pairs, None)?;
                out.push(Check::at_most(format!("trig symbol {k}, h={h}"), r.max_ratio, 1.0));
            }
        }
        Ok(())
    })
}

pub const DEFAULT_SEED: u64 = 20_240_601;

/// Every suite in order.
pub fn all_suites(seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(vec![
        constants_suite()?,
        hermite_suite()?,
        bargmann_suite(seed)?,
        covariance_suite(seed)?,
        quantizer_suite()?,
        bound_suite()?.0,
        convergence_suite()?.0,
        measure_suite(seed)?,
        kernel_decay_suite(seed)?,
    ])
}
