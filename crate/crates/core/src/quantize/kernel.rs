//! Phase-space quadrature of Op = ∫ F(X) K(X) dX with a per-mode operator
//! density K: the cross-Wigner functions for Weyl modes and |ŵ_β⟩⟨ŵ_α|
//! densities for anti-Wick modes. Any mix of the two gives the hybrid
//! operator for that mode split.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::symbol::{Symbol, SymbolKind};
use crate::error::{Error, Result};
use crate::hermite::gauss_hermite_rule;
use crate::index::{factorial, Basis};
use crate::linalg::{c, max_abs_diff, CMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeRule {
    Weyl,
    AntiWick,
}

/// Per-mode grid: node coordinates (x, ξ) and the table of weighted
/// densities, row = node, column = α·(cap+1) + β.
pub struct ModeTable {
    pub coords: Vec<(f64, f64)>,
    pub table: CMatrix,
    pub cap: u32,
}

fn laguerre(n: u32, a: f64, x: f64) -> f64 {
    let mut l0 = 1.0;
    if n == 0 {
        return l0;
    }
    let mut l1 = 1.0 + a - x;
    for k in 1..n {
        let k = k as f64;
        let l2 = ((2.0 * k + 1.0 + a - x) * l1 - (k + a) * l0) / (k + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

pub fn mode_table(rule: ModeRule, order: usize, cap: u32, h: f64) -> Result<ModeTable> {
    let gh = gauss_hermite_rule(order)?;
    let k = cap as usize + 1;
    let nodes = order * order;
    let mut coords = Vec::with_capacity(nodes);
    let mut table = CMatrix::zeros(nodes, k * k);
    let inv_fact: Vec<f64> = (0..=cap).map(|n| 1.0 / factorial(n).unwrap().sqrt()).collect();
    let pi = std::f64::consts::PI;
    for a in 0..order {
        for b in 0..order {
            let row = a * order + b;
            let (t, s) = (gh.nodes[a], gh.nodes[b]);
            let w = gh.weights[a] * gh.weights[b] / pi;
            match rule {
                ModeRule::Weyl => {
                    coords.push((h.sqrt() * t, h.sqrt() * s));
                    let z = c(t, s) * std::f64::consts::SQRT_2;
                    let r2 = 2.0 * (t * t + s * s);
                    for m in 0..=cap {
                        for n in 0..=m {
                            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                            let ratio = inv_fact[m as usize] / inv_fact[n as usize];
                            let v = z.powu(m - n) * (w * sign * ratio * laguerre(n, (m - n) as f64, r2));
                            table[(row, m as usize * k + n as usize)] = v;
                            table[(row, n as usize * k + m as usize)] = v.conj();
                        }
                    }
                }
                ModeRule::AntiWick => {
                    let scale = (2.0 * h).sqrt();
                    coords.push((scale * t, scale * s));
                    let z = c(t, -s);
                    let mut zp = vec![c(1.0, 0.0); k];
                    for n in 1..k {
                        zp[n] = zp[n - 1] * z;
                    }
                    for al in 0..k {
                        for be in 0..k {
                            table[(row, al * k + be)] = zp[be] * zp[al].conj() * (w * inv_fact[al] * inv_fact[be]);
                        }
                    }
                }
            }
        }
    }
    Ok(ModeTable { coords, table, cap })
}

/// Box cap used for per-mode tables of a truncation.
pub fn table_cap(basis: &Basis) -> u32 {
    basis.truncation.per_mode_cap.min(basis.truncation.total_degree_cap)
}

fn gather(basis: &Basis, entry: impl Fn(&[u32], &[u32]) -> Complex64 + Sync) -> CMatrix {
    let n = basis.len();
    let cols: Vec<Vec<Complex64>> = (0..n)
        .into_par_iter()
        .map(|j| (0..n).map(|i| entry(basis.dense(i), basis.dense(j))).collect())
        .collect();
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Quadrature of ∫F·K for one or two modes at a fixed Gauss–Hermite order.
pub fn quadrature_matrix(f: &Symbol, rules: &[ModeRule], basis: &Basis, h: f64, order: usize) -> Result<CMatrix> {
    let n = f.n_modes();
    if rules.len() != n || basis.modes().len() != n {
        return Err(Error::InvalidArgument("mode count mismatch".into()));
    }
    let cap = table_cap(basis);
    let k = cap as usize + 1;
    match n {
        1 => {
            let t = mode_table(rules[0], order, cap, h)?;
            let vals: Vec<Complex64> = t.coords.par_iter().map(|&(x, xi)| f.eval(&[x, xi])).collect();
            let fv = CMatrix::from_row_slice(1, vals.len(), &vals);
            let m = fv * &t.table;
            Ok(gather(basis, |a, b| m[(0, a[0] as usize * k + b[0] as usize)]))
        }
        2 => {
            let t1 = mode_table(rules[0], order, cap, h)?;
            let t2 = mode_table(rules[1], order, cap, h)?;
            let (n1, n2) = (t1.coords.len(), t2.coords.len());
            let rows: Vec<Vec<Complex64>> = (0..n1)
                .into_par_iter()
                .map(|i| {
                    let (x1, p1) = t1.coords[i];
                    t2.coords.iter().map(|&(x2, p2)| f.eval(&[x1, x2, p1, p2])).collect()
                })
                .collect();
            let fm = CMatrix::from_fn(n1, n2, |i, j| rows[i][j]);
            let s = fm * &t2.table; // n1 × k²
            let m = t1.table.transpose() * s; // k² × k²
            Ok(gather(basis, |a, b| {
                m[(a[0] as usize * k + b[0] as usize, a[1] as usize * k + b[1] as usize)]
            }))
        }
        _ => Err(Error::Unsupported(format!(
            "phase-space quadrature is limited to 2 modes, got {n}"
        ))),
    }
}

/// Separable route for trig symbols: every atom is a product over modes.
pub fn separable_trig_matrix(f: &Symbol, rules: &[ModeRule], basis: &Basis, h: f64, order: usize) -> Result<CMatrix> {
    let SymbolKind::Trig(atoms) = &f.kind else {
        return Err(Error::Unsupported("separable route needs a trig symbol".into()));
    };
    let cap = table_cap(basis);
    let k = cap as usize + 1;
    let tables = [
        mode_table(ModeRule::Weyl, order, cap, h)?,
        mode_table(ModeRule::AntiWick, order, cap, h)?,
    ];
    let pick = |r: ModeRule| match r {
        ModeRule::Weyl => &tables[0],
        ModeRule::AntiWick => &tables[1],
    };
    let mut total = CMatrix::zeros(basis.len(), basis.len());
    for atom in atoms {
        let per: Vec<CMatrix> = rules
            .iter()
            .enumerate()
            .map(|(j, &r)| {
                let t = pick(r);
                let vals: Vec<Complex64> = t
                    .coords
                    .iter()
                    .map(|&(x, xi)| c(0.0, -(atom.y[j] * x + atom.eta[j] * xi)).exp())
                    .collect();
                let row = CMatrix::from_row_slice(1, vals.len(), &vals) * &t.table;
                CMatrix::from_fn(k, k, |a, b| row[(0, a * k + b)])
            })
            .collect();
        total += crate::fock::tensor_compress(basis, &per) * atom.c;
    }
    Ok(total)
}

/// Order schedule for the adaptive loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraturePolicy {
    pub start: usize,
    pub max: usize,
    /// Absolute tolerance on the entrywise change between successive orders.
    pub tol: f64,
}

impl Default for QuadraturePolicy {
    fn default() -> Self {
        QuadraturePolicy {
            start: 24,
            max: 96,
            tol: 1e-9,
        }
    }
}

impl QuadraturePolicy {
    fn next(&self, n: usize) -> usize {
        (n + n / 2 + 1) & !1
    }

    /// Smallest order the tables need to integrate the polynomial part exactly.
    pub fn floor_for(&self, cap: u32) -> usize {
        self.start.max(cap as usize + 4)
    }
}

#[derive(Debug, Clone)]
pub struct AdaptiveMatrix {
    pub matrix: CMatrix,
    pub order: usize,
    pub change: f64,
    pub converged: bool,
}

pub fn adaptive_matrix<F>(policy: &QuadraturePolicy, cap: u32, mut eval: F) -> Result<AdaptiveMatrix>
where
    F: FnMut(usize) -> Result<CMatrix>,
{
    let mut n = policy.floor_for(cap);
    let mut prev = eval(n)?;
    let mut change = f64::INFINITY;
    loop {
        let next_n = policy.next(n);
        if next_n > policy.max {
            return Ok(AdaptiveMatrix {
                matrix: prev,
                order: n,
                change,
                converged: false,
            });
        }
        let next = eval(next_n)?;
        change = max_abs_diff(&prev, &next);
        n = next_n;
        prev = next;
        if change <= policy.tol {
            return Ok(AdaptiveMatrix {
                matrix: prev,
                order: n,
                change,
                converged: true,
            });
        }
    }
}

/// Monte Carlo anti-Wick matrix: X ~ μ^Φ (each coordinate N(0, h)).
#[derive(Debug, Clone)]
pub struct MonteCarloMatrix {
    pub matrix: CMatrix,
    /// Largest entrywise standard error.
    pub stderr: f64,
    pub samples: usize,
}

pub const MC_CHUNK: usize = 4096;

pub fn monte_carlo_anti_wick(f: &Symbol, basis: &Basis, h: f64, samples: usize, seed: u64) -> Result<MonteCarloMatrix> {
    let n = f.n_modes();
    let dim = basis.len();
    if samples < 2 {
        return Err(Error::InvalidArgument("need at least two samples".into()));
    }
    let chunks = samples.div_ceil(MC_CHUNK);
    let inv_fact: Vec<f64> = (0..=table_cap(basis)).map(|k| 1.0 / factorial(k).unwrap().sqrt()).collect();
    let partial: Vec<(CMatrix, CMatrix)> = (0..chunks)
        .into_par_iter()
        .map(|ch| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ch as u64);
            let mut sum = CMatrix::zeros(dim, dim);
            let mut sq = CMatrix::zeros(dim, dim);
            let mut v = vec![0.0; 2 * n];
            let mut e = vec![c(0.0, 0.0); dim];
            let count = MC_CHUNK.min(samples - ch * MC_CHUNK);
            for _ in 0..count {
                for x in v.iter_mut() {
                    let g: f64 = StandardNormal.sample(&mut rng);
                    *x = g * h.sqrt();
                }
                let fx = f.eval(&v);
                let z: Vec<Complex64> = (0..n).map(|j| c(v[j], -v[n + j]) / (2.0 * h).sqrt()).collect();
                for (i, d) in basis.iter().enumerate() {
                    let mut p = c(1.0, 0.0);
                    for (j, &a) in d.iter().enumerate() {
                        p *= z[j].powu(a) * inv_fact[a as usize];
                    }
                    e[i] = p;
                }
                for b in 0..dim {
                    for a in 0..dim {
                        let val = fx * e[b] * e[a].conj();
                        sum[(a, b)] += val;
                        sq[(a, b)] += c(val.norm_sqr(), 0.0);
                    }
                }
            }
            (sum, sq)
        })
        .collect();
    let mut sum = CMatrix::zeros(dim, dim);
    let mut sq = CMatrix::zeros(dim, dim);
    for (s, q) in partial {
        sum += s;
        sq += q;
    }
    let ns = samples as f64;
    let mean = sum / c(ns, 0.0);
    let mut stderr: f64 = 0.0;
    for i in 0..dim * dim {
        let var = (sq[i].re / ns - mean[i].norm_sqr()).max(0.0);
        stderr = stderr.max((var / (ns - 1.0)).sqrt());
    }
    Ok(MonteCarloMatrix {
        matrix: mean,
        stderr,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{ModeSet, Truncation};
    use crate::quantize::generating::exact_weyl;
    use crate::quantize::symbol::{heat_smooth, GaussTerm, TrigAtom};
    use nalgebra::DMatrix;

    #[test]
    fn laguerre_values() {
        // L_2^{(1)}(x) = (x² − 6x + 6)/2
        let x = 0.7;
        assert!((laguerre(2, 1.0, x) - (x * x - 6.0 * x + 6.0) / 2.0).abs() < 1e-14);
        assert!((laguerre(1, 0.0, x) - (1.0 - x)).abs() < 1e-15);
    }

    #[test]
    fn unit_symbol_gives_identity_both_rules() {
        let modes = ModeSet::range(1);
        let b = Truncation::boxed(modes.clone(), 10).basis();
        let one = Symbol::constant(modes, c(1.0, 0.0));
        for r in [ModeRule::Weyl, ModeRule::AntiWick] {
            let m = quadrature_matrix(&one, &[r], &b, 0.6, 16).unwrap();
            assert!(max_abs_diff(&m, &CMatrix::identity(b.len(), b.len())) < 1e-12);
        }
    }

    #[test]
    fn weyl_quadrature_matches_generating_function() {
        let modes = ModeSet::range(1);
        let b = Truncation::boxed(modes.clone(), 10).basis();
        let f = Symbol::gauss(
            modes,
            vec![GaussTerm {
                coeff: 1.0,
                form: DMatrix::from_row_slice(2, 2, &[0.9, 0.3, 0.3, 0.5]),
            }],
        )
        .unwrap();
        let h = 0.5;
        let q = quadrature_matrix(&f, &[ModeRule::Weyl], &b, h, 48).unwrap();
        let e = exact_weyl(&f, &b, h).unwrap();
        assert!(max_abs_diff(&q, &e) < 1e-10);
    }

    #[test]
    fn anti_wick_is_weyl_of_smoothed_two_modes() {
        let modes = ModeSet::range(2);
        let b = Truncation::new(modes.clone(), 4, 4).basis();
        let f = Symbol::trig(
            modes.clone(),
            vec![
                TrigAtom::new(vec![0.5, -0.3], vec![0.2, 0.7], c(0.6, 0.0)),
                TrigAtom::new(vec![-0.5, 0.3], vec![-0.2, -0.7], c(0.6, 0.0)),
            ],
        )
        .unwrap();
        let h = 0.7;
        let aw = quadrature_matrix(&f, &[ModeRule::AntiWick, ModeRule::AntiWick], &b, h, 20).unwrap();
        let sep = separable_trig_matrix(&f, &[ModeRule::AntiWick, ModeRule::AntiWick], &b, h, 20).unwrap();
        let w = exact_weyl(&heat_smooth(&f, &modes, h).unwrap(), &b, h).unwrap();
        assert!(max_abs_diff(&aw, &w) < 1e-9);
        assert!(max_abs_diff(&sep, &w) < 1e-9);
    }

    #[test]
    fn anti_wick_of_x_squared_diagonal() {
        // diagonal ∫x²|ŵ_n|² dμ^Φ = h(n + 1)
        let modes = ModeSet::range(1);
        let b = Truncation::boxed(modes.clone(), 6).basis();
        let f = Symbol::closed_form(modes, std::sync::Arc::new(|v: &[f64]| c(v[0] * v[0], 0.0)), None, true);
        let h = 1.0;
        let m = quadrature_matrix(&f, &[ModeRule::AntiWick], &b, h, 16).unwrap();
        for n in 0..b.len() {
            assert!((m[(n, n)].re - h * (n as f64 + 1.0)).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn monte_carlo_is_thread_count_independent_and_close() {
        let modes = ModeSet::range(1);
        let b = Truncation::boxed(modes.clone(), 2).basis();
        let f = Symbol::gauss(modes, vec![GaussTerm { coeff: 1.0, form: DMatrix::identity(2, 2) }]).unwrap();
        let h = 0.5;
        let mc = monte_carlo_anti_wick(&f, &b, h, 20000, 7).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let mc1 = pool.install(|| monte_carlo_anti_wick(&f, &b, h, 20000, 7).unwrap());
        assert_eq!(mc.matrix, mc1.matrix);
        let q = quadrature_matrix(&f, &[ModeRule::AntiWick], &b, h, 24).unwrap();
        assert!(max_abs_diff(&mc.matrix, &q) < 5.0 * mc.stderr);
    }
}
