//! Gaussian measures μ^K (variance h/2) and μ^Φ (variance h) on finite mode
//! sets, seeded sampling, Monte Carlo integration and the weight-sequence
//! diagnostics.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::error::{invalid, Error, Result};
use crate::index::ModeSet;
use crate::linalg::c;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightRule {
    /// b_j = (1 + |j|)^γ over lattice sites.
    PowerLaw { gamma: f64 },
    Explicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSequence {
    pub rule: WeightRule,
    pub values: Vec<f64>,
}

impl WeightSequence {
    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&b| !(b > 0.0) || !b.is_finite()) {
            return invalid("weights must be positive and finite");
        }
        Ok(WeightSequence {
            rule: WeightRule::Explicit,
            values,
        })
    }

    /// Power law over the given lattice norms |j|.
    pub fn power_law(gamma: f64, norms: &[f64]) -> Result<Self> {
        if !(gamma > 0.0) {
            return invalid("power-law exponent must be positive");
        }
        Ok(WeightSequence {
            rule: WeightRule::PowerLaw { gamma },
            values: norms.iter().map(|&r| (1.0 + r).powf(gamma)).collect(),
        })
    }

    /// Power law on ℤ listed as 0, 1, −1, 2, −2, …, `count` sites.
    pub fn power_law_z1(gamma: f64, count: usize) -> Result<Self> {
        let norms: Vec<f64> = (0..count).map(|i| i.div_ceil(2) as f64).collect();
        WeightSequence::power_law(gamma, &norms)
    }
}

/// ∫_{εb}^∞ e^{−x²/2} dx.
pub fn tail_integral(eps: f64, b: f64) -> f64 {
    (std::f64::consts::PI / 2.0).sqrt() * erfc(eps * b / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SummabilityVerdict {
    LikelySummable,
    NotSummable,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct SummabilityReport {
    pub terms: Vec<f64>,
    pub partial_sums: Vec<f64>,
    /// Heuristic only: a finite horizon cannot decide summability.
    pub verdict: SummabilityVerdict,
}

pub fn tail_summability_report(w: &WeightSequence, eps: f64, horizon: usize) -> Result<SummabilityReport> {
    if !(eps > 0.0) || horizon == 0 {
        return invalid("need ε > 0 and a horizon of at least one term");
    }
    if w.values.len() < horizon {
        return invalid("weight sequence is shorter than the horizon");
    }
    let terms: Vec<f64> = w.values[..horizon].iter().map(|&b| tail_integral(eps, b)).collect();
    let mut partial_sums = Vec::with_capacity(horizon);
    let mut s = 0.0;
    for t in &terms {
        s += t;
        partial_sums.push(s);
    }
    let q = (horizon / 4).max(1);
    let head: f64 = terms[..q].iter().sum::<f64>() / q as f64;
    let tail: f64 = terms[horizon - q..].iter().sum::<f64>() / q as f64;
    let verdict = if horizon < 8 {
        SummabilityVerdict::Inconclusive
    } else if tail * horizon as f64 <= 1e-6 * s {
        SummabilityVerdict::LikelySummable
    } else if tail >= 0.5 * head {
        SummabilityVerdict::NotSummable
    } else {
        SummabilityVerdict::Inconclusive
    };
    Ok(SummabilityReport {
        terms,
        partial_sums,
        verdict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureKind {
    /// μ^K: coordinates u_j with variance h/2.
    Configuration,
    /// μ^Φ: coordinates (x_j, ξ_j) with variance h.
    Phase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMeasureSpec {
    pub modes: ModeSet,
    pub h: f64,
    pub kind: MeasureKind,
}

impl GaussianMeasureSpec {
    pub fn new(modes: ModeSet, h: f64, kind: MeasureKind) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return invalid("h must be positive");
        }
        Ok(GaussianMeasureSpec { modes, h, kind })
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            MeasureKind::Configuration => self.modes.len(),
            MeasureKind::Phase => 2 * self.modes.len(),
        }
    }

    pub fn variance(&self) -> f64 {
        match self.kind {
            MeasureKind::Configuration => self.h / 2.0,
            MeasureKind::Phase => self.h,
        }
    }

    /// Density with respect to Lebesgue measure.
    pub fn density(&self, x: &[f64]) -> f64 {
        let v = self.variance();
        let r2: f64 = x.iter().map(|t| t * t).sum();
        (2.0 * std::f64::consts::PI * v).powf(-(x.len() as f64) / 2.0) * (-r2 / (2.0 * v)).exp()
    }

    /// Spec over the union of two disjoint mode sets.
    pub fn product(&self, other: &GaussianMeasureSpec) -> Result<Self> {
        if self.kind != other.kind || self.h != other.h {
            return invalid("factors must share kind and h");
        }
        if !self.modes.intersection(&other.modes).is_empty() {
            return invalid("factors must live on disjoint modes");
        }
        GaussianMeasureSpec::new(self.modes.union(&other.modes), self.h, self.kind)
    }

    /// Coordinates of the modes in `sub` within a sample of this spec.
    pub fn marginal_coordinates(&self, sub: &ModeSet) -> Result<Vec<usize>> {
        if !sub.is_subset(&self.modes) {
            return invalid("marginal modes must be a subset");
        }
        let n = self.modes.len();
        let pos: Vec<usize> = sub.ids().iter().map(|&j| self.modes.position(j).unwrap()).collect();
        Ok(match self.kind {
            MeasureKind::Configuration => pos,
            MeasureKind::Phase => pos.iter().copied().chain(pos.iter().map(|p| n + p)).collect(),
        })
    }
}

/// (master seed, stream id); chunk k of a stream draws from ChaCha stream
/// id·2³² + k.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u32,
}

pub const SAMPLE_CHUNK: usize = 4096;

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u32) -> Self {
        RngStream { master_seed, stream_id }
    }

    pub fn chunk_rng(&self, chunk: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(((self.stream_id as u64) << 32) | chunk as u64);
        rng
    }
}

fn chunked<T: Send>(n: usize, f: impl Fn(usize, usize) -> T + Sync) -> Vec<T> {
    (0..n.div_ceil(SAMPLE_CHUNK))
        .into_par_iter()
        .map(|ch| f(ch, SAMPLE_CHUNK.min(n - ch * SAMPLE_CHUNK)))
        .collect()
}

/// n i.i.d. points, each of length `spec.dim()`.
pub fn sample(spec: &GaussianMeasureSpec, rng: RngStream, n: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return invalid("need at least one sample");
    }
    let sd = spec.variance().sqrt();
    let d = spec.dim();
    let parts = chunked(n, |ch, count| {
        let mut r = rng.chunk_rng(ch);
        (0..count)
            .map(|_| {
                (0..d)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut r);
                        sd * z
                    })
                    .collect::<Vec<f64>>()
            })
            .collect::<Vec<_>>()
    });
    Ok(parts.into_iter().flatten().collect())
}

/// ℓ_a(x) = Σ a_j x_j.
pub fn ell_a(a: &[Complex64], x: &[f64]) -> Complex64 {
    a.iter().zip(x).map(|(aj, xj)| aj * xj).sum()
}

/// E_a(x) = e^{ℓ_a(x)}.
pub fn exp_ell(a: &[Complex64], x: &[f64]) -> Complex64 {
    ell_a(a, x).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: Complex64,
    pub stderr: f64,
    pub samples: usize,
}

impl McEstimate {
    /// |mean − target| ≤ k·stderr (with a floor for exact integrands).
    pub fn within(&self, target: Complex64, k: f64) -> bool {
        (self.mean - target).norm() <= k * self.stderr + 1e-12 * target.norm().max(1.0)
    }
}

pub fn mc_integrate<F>(f: F, spec: &GaussianMeasureSpec, rng: RngStream, n: usize) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    if n < 2 {
        return invalid("need at least two samples");
    }
    let sd = spec.variance().sqrt();
    let d = spec.dim();
    let parts = chunked(n, |ch, count| -> Result<(Complex64, f64)> {
        let mut r = rng.chunk_rng(ch);
        let mut x = vec![0.0; d];
        let (mut s, mut s2) = (c(0.0, 0.0), 0.0);
        for _ in 0..count {
            for v in x.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut r);
                *v = sd * z;
            }
            let y = f(&x);
            if !y.re.is_finite() || !y.im.is_finite() {
                return Err(Error::NonFinite {
                    what: "Monte Carlo integrand".into(),
                    at: format!("{x:?}"),
                });
            }
            s += y;
            s2 += y.norm_sqr();
        }
        Ok((s, s2))
    });
    let (mut s, mut s2) = (c(0.0, 0.0), 0.0);
    for p in parts {
        let (a, b) = p?;
        s += a;
        s2 += b;
    }
    let nf = n as f64;
    let mean = s / nf;
    let var = (s2 / nf - mean.norm_sqr()).max(0.0) * nf / (nf - 1.0);
    Ok(McEstimate {
        mean,
        stderr: (var / nf).sqrt(),
        samples: n,
    })
}

/// Medians of Σ_{k<N} u_k² under μ^K over `samples` draws, for each N.
pub fn cameron_martin_divergence_probe(h: f64, n_list: &[usize], rng: RngStream, samples: usize) -> Result<Vec<(usize, f64)>> {
    if !(h > 0.0) {
        return invalid("h must be positive");
    }
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return invalid("N list must be positive and strictly increasing");
    }
    let nmax = *n_list.last().unwrap();
    let spec = GaussianMeasureSpec::new(ModeSet::range(nmax as u32), h, MeasureKind::Configuration)?;
    let pts = sample(&spec, rng, samples)?;
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut sums: Vec<f64> = pts.iter().map(|p| p[..n].iter().map(|x| x * x).sum()).collect();
        out.push((n, median(&mut sums)));
    }
    Ok(out)
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Two-sample Kolmogorov–Smirnov statistic and its 1% critical value.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> (f64, f64) {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.partial_cmp(y).unwrap());
    b.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let (n, m) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let v = a[i].min(b[j]);
        while i < n && a[i] <= v {
            i += 1;
        }
        while j < m && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let crit = 1.628 * ((n + m) as f64 / (n * m) as f64).sqrt();
    (d, crit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_integral_values() {
        assert!((tail_integral(2.0, 1.0) - 0.0570_1).abs() < 5e-5);
        // ∫_0^∞ = √(π/2)
        assert!((tail_integral(1e-300, 1.0) - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn power_law_report() {
        let w = WeightSequence::power_law_z1(1.0, 101).unwrap();
        let r = tail_summability_report(&w, 1.0, 101).unwrap();
        assert_eq!(r.verdict, SummabilityVerdict::LikelySummable);
        // site j = 10 sits at list positions 19 and 20
        let bound = std::f64::consts::SQRT_2 * (-121.0f64 / 4.0).exp();
        assert!(r.terms[19] < bound && r.terms[20] < bound);
        let flat = WeightSequence::explicit(vec![1.0; 50]).unwrap();
        let r = tail_summability_report(&flat, 1.0, 50).unwrap();
        assert_eq!(r.verdict, SummabilityVerdict::NotSummable);
        assert!((r.terms[0] - tail_integral(1.0, 1.0)).abs() < 1e-15);
    }

    #[test]
    fn reproducible_streams() {
        let spec = GaussianMeasureSpec::new(ModeSet::range(3), 1.0, MeasureKind::Phase).unwrap();
        let a = sample(&spec, RngStream::new(5, 1), 5000).unwrap();
        let b = sample(&spec, RngStream::new(5, 1), 5000).unwrap();
        let c2 = sample(&spec, RngStream::new(5, 2), 5000).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c2);
    }

    #[test]
    fn variances_within_three_sigma() {
        for (kind, want) in [(MeasureKind::Configuration, 0.5), (MeasureKind::Phase, 1.0)] {
            let spec = GaussianMeasureSpec::new(ModeSet::range(2), 1.0, kind).unwrap();
            let est = mc_integrate(|x| c(x[0] * x[0], 0.0), &spec, RngStream::new(11, 0), 100_000).unwrap();
            assert!(est.within(c(want, 0.0), 3.0), "{est:?}");
            let cov = mc_integrate(|x| c(x[0] * x[1], 0.0), &spec, RngStream::new(11, 1), 100_000).unwrap();
            assert!(cov.within(c(0.0, 0.0), 3.0));
        }
    }

    #[test]
    fn constant_integrand_is_exact() {
        let spec = GaussianMeasureSpec::new(ModeSet::range(1), 0.3, MeasureKind::Phase).unwrap();
        let est = mc_integrate(|_| c(1.0, 0.0), &spec, RngStream::new(0, 0), 100).unwrap();
        assert_eq!(est.mean, c(1.0, 0.0));
        assert!(est.stderr < 1e-15);
    }

    #[test]
    fn non_finite_integrand_reports_point() {
        let spec = GaussianMeasureSpec::new(ModeSet::range(1), 1.0, MeasureKind::Configuration).unwrap();
        let r = mc_integrate(|_| c(f64::NAN, 0.0), &spec, RngStream::new(0, 0), 10);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn gaussian_functional_norms() {
        let h = 1.0;
        let a = [c(0.3, 0.2), c(-0.1, 0.4), c(0.2, 0.0)];
        let spec = GaussianMeasureSpec::new(ModeSet::range(3), h, MeasureKind::Configuration).unwrap();
        let a2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let re2: f64 = a.iter().map(|z| z.re * z.re).sum();
        let l = mc_integrate(|x| c(ell_a(&a, x).norm_sqr(), 0.0), &spec, RngStream::new(3, 0), 100_000).unwrap();
        assert!(l.within(c(h / 2.0 * a2, 0.0), 3.0));
        let e = mc_integrate(|x| c(exp_ell(&a, x).norm_sqr(), 0.0), &spec, RngStream::new(3, 1), 100_000).unwrap();
        assert!(e.within(c((h * re2).exp(), 0.0), 3.0));
        assert_eq!(ell_a(&[c(0.0, 0.0), c(1.0, 0.0)], &[5.0, 7.0]), c(7.0, 0.0));
    }

    #[test]
    fn divergence_probe_growth() {
        let m = cameron_martin_divergence_probe(1.0, &[10, 40], RngStream::new(1, 0), 10_000).unwrap();
        // median of χ²₁₀ is ≈ 9.342, scaled by h/2
        assert!((m[0].1 - 4.67).abs() < 0.15, "{m:?}");
        let f = m[1].1 / m[0].1;
        assert!((3.0..=5.0).contains(&f));
        assert!(cameron_martin_divergence_probe(0.0, &[10], RngStream::new(1, 0), 10).is_err());
    }

    #[test]
    fn factorization_by_ks() {
        let e1 = ModeSet::new(vec![0]).unwrap();
        let e2 = ModeSet::new(vec![1]).unwrap();
        let s1 = GaussianMeasureSpec::new(e1.clone(), 1.0, MeasureKind::Phase).unwrap();
        let s2 = GaussianMeasureSpec::new(e2, 1.0, MeasureKind::Phase).unwrap();
        let joint = s1.product(&s2).unwrap();
        let pj = sample(&joint, RngStream::new(9, 0), 10_000).unwrap();
        let p1 = sample(&s1, RngStream::new(9, 1), 10_000).unwrap();
        let coords = joint.marginal_coordinates(&e1).unwrap();
        for (k, &ci) in coords.iter().enumerate() {
            let a: Vec<f64> = pj.iter().map(|p| p[ci]).collect();
            let b: Vec<f64> = p1.iter().map(|p| p[k]).collect();
            let (d, crit) = ks_two_sample(&a, &b);
            assert!(d < crit, "{d} {crit}");
        }
    }

    #[test]
    fn density_normalization_one_dim() {
        let spec = GaussianMeasureSpec::new(ModeSet::range(1), 0.8, MeasureKind::Configuration).unwrap();
        let rule = crate::hermite::gauss_hermite_rule(20).unwrap();
        // ∫ ρ(u) du with u = t·√(2v)
        let v = spec.variance();
        let s = (2.0 * v).sqrt();
        let total: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&t, &w)| w * (t * t).exp() * spec.density(&[s * t]) * s)
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
