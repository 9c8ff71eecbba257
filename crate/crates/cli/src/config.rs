//! Scenario files: one JSON document per experiment.

use std::path::Path;

use fockweyl::bounds::{trig_cert, SymbolClassCert};
use fockweyl::linalg::c;
use fockweyl::quantize::{GaussTerm, Symbol, TrigAtom};
use fockweyl::symbols::{
    cosine_atoms, lattice_gaussian, mean_field_family, LatticeGaussian, LatticeNorm, LatticeWindow, MeanFieldOptions,
    Potential,
};
use fockweyl::{ModeSet, Truncation};
use nalgebra::DMatrix;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    Quantize,
    VerifyBound,
    Convergence,
    BargmannSelftest,
    MeasureMc,
    ConstantsSelftest,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Quantize => "quantize",
            Scenario::VerifyBound => "verify-bound",
            Scenario::Convergence => "convergence",
            Scenario::BargmannSelftest => "bargmann-selftest",
            Scenario::MeasureMc => "measure-mc",
            Scenario::ConstantsSelftest => "constants-selftest",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: Scenario,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Output,
    pub symbol: Option<SymbolSpec>,
    pub quantization: Option<QuantSpec>,
    pub certificate: Option<CertSpec>,
    /// verify-bound: run the built-in battery instead of `symbol`.
    #[serde(default)]
    pub battery: bool,
    /// verify-bound: step sizes to sweep (default 0.25 and 1).
    pub h_values: Option<Vec<f64>>,
    /// measure-mc: samples per Monte Carlo estimate.
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    pub dir: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub y: Vec<f64>,
    pub eta: Vec<f64>,
    /// [re, im]
    pub c: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    Trig { atoms: Vec<AtomSpec> },
    Cosine { y: Vec<f64>, eta: Vec<f64>, amp: f64 },
    Gauss { form: Vec<Vec<f64>>, #[serde(default = "one")] coeff: f64 },
    LatticeGaussian {
        /// Sites of ℤ^d; defaults to the line {0..len(g)−1}.
        sites: Option<Vec<Vec<i64>>>,
        g: Vec<f64>,
        lambda: f64,
        #[serde(default)]
        norm: NormSpec,
    },
    MeanField {
        n: usize,
        potential: PotentialSpec,
        #[serde(default = "yes")]
        include_diagonal: bool,
    },
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpec {
    #[default]
    Sup,
    L1,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Cosine { amp: f64, freq: f64 },
    Bump { amp: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantizer {
    #[default]
    Weyl,
    AntiWick,
    Hybrid,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantSpec {
    pub h: f64,
    pub cap: u32,
    /// Total-degree cap; defaults to `cap`.
    pub total_cap: Option<u32>,
    #[serde(default)]
    pub quantizer: Quantizer,
    /// Weyl modes of a hybrid quantization.
    #[serde(default)]
    pub weyl_modes: Vec<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertSpec {
    pub m: Option<f64>,
    pub eps: Option<Vec<f64>>,
    #[serde(default = "two")]
    pub order: u32,
}

fn two() -> u32 {
    2
}

/// A configuration problem; maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl From<fockweyl::Error> for ConfigError {
    fn from(e: fockweyl::Error) -> Self {
        ConfigError(e.to_string())
    }
}

pub fn load(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

/// A symbol resolved from its spec, with the certificate it comes with.
pub struct Resolved {
    pub symbol: Symbol,
    pub cert: Option<SymbolClassCert>,
    pub lattice: Option<LatticeGaussian>,
}

impl SymbolSpec {
    pub fn resolve(&self, order: u32, seed: u64) -> Result<Resolved, ConfigError> {
        let plain = |symbol, cert| Resolved { symbol, cert, lattice: None };
        Ok(match self {
            SymbolSpec::Trig { atoms } => {
                let n = atoms.first().map(|a| a.y.len()).ok_or_else(|| ConfigError("a trig symbol needs atoms".into()))?;
                let atoms: Vec<TrigAtom> = atoms.iter().map(|a| TrigAtom::new(a.y.clone(), a.eta.clone(), c(a.c[0], a.c[1]))).collect();
                let modes = ModeSet::range(n as u32);
                let cert = trig_cert(&modes, &atoms, order)?;
                plain(Symbol::trig(modes, atoms)?, Some(cert))
            }
            SymbolSpec::Cosine { y, eta, amp } => {
                let modes = ModeSet::range(y.len() as u32);
                let atoms = cosine_atoms(y.clone(), eta.clone(), *amp);
                let cert = trig_cert(&modes, &atoms, order)?;
                plain(Symbol::trig(modes, atoms)?, Some(cert))
            }
            SymbolSpec::Gauss { form, coeff } => {
                let d = form.len();
                if d == 0 || d % 2 != 0 || form.iter().any(|r| r.len() != d) {
                    return Err(ConfigError("gauss form must be a square matrix of even size".into()));
                }
                let a = DMatrix::from_fn(d, d, |i, j| form[i][j]);
                plain(Symbol::gauss(ModeSet::range((d / 2) as u32), vec![GaussTerm { coeff: *coeff, form: a }])?, None)
            }
            SymbolSpec::LatticeGaussian { sites, g, lambda, norm } => {
                let window = match sites {
                    Some(s) => LatticeWindow::new(s.first().map_or(0, |x| x.len()), s.clone())?,
                    None => LatticeWindow::line(0, g.len() as i64 - 1)?,
                };
                let norm = match norm {
                    NormSpec::Sup => LatticeNorm::Sup,
                    NormSpec::L1 => LatticeNorm::L1,
                };
                let lg = lattice_gaussian(&window, g, *lambda, norm)?;
                let (cert, _) = lg.fitted_cert(order, seed)?;
                Resolved {
                    symbol: lg.symbol.clone(),
                    cert: Some(cert),
                    lattice: Some(lg),
                }
            }
            SymbolSpec::MeanField { n, potential, include_diagonal } => {
                let v = match *potential {
                    PotentialSpec::Zero => Potential::Zero,
                    PotentialSpec::Cosine { amp, freq } => Potential::Cosine { amp, freq },
                    PotentialSpec::Bump { amp, width } => Potential::Bump { amp, width },
                };
                // C₁ is fitted on windows of one and two sites
                let mut sizes = vec![1, 2];
                if *n > 2 {
                    sizes.push(*n);
                }
                let fam = mean_field_family(&sizes, v, MeanFieldOptions { include_diagonal: *include_diagonal })?;
                let m = fam
                    .members
                    .into_iter()
                    .find(|m| m.symbol.n_modes() == *n)
                    .ok_or_else(|| ConfigError(format!("no mean-field member with {n} sites")))?;
                let cert = if order == 4 { m.cert } else { SymbolClassCert::new(1.0, m.cert.modes.clone(), m.cert.eps.clone(), 2)? };
                plain(m.symbol, Some(cert))
            }
        })
    }
}

impl QuantSpec {
    pub fn truncation(&self, modes: ModeSet) -> Result<Truncation, ConfigError> {
        if !(self.h > 0.0 && self.h <= 1.0) {
            return Err(ConfigError(format!("h must lie in (0, 1], got {}", self.h)));
        }
        let total = self.total_cap.unwrap_or(self.cap);
        if total > self.cap * modes.len() as u32 {
            return Err(ConfigError("total_cap exceeds cap × modes".into()));
        }
        Ok(Truncation::new(modes, self.cap, total))
    }
}

/// Certificate from the config, overriding the one the symbol brings.
pub fn certificate(spec: Option<&CertSpec>, resolved: &Resolved) -> Result<SymbolClassCert, ConfigError> {
    let order = spec.map_or(2, |s| s.order);
    match (spec, &resolved.cert) {
        (Some(CertSpec { m: Some(m), eps: Some(eps), .. }), _) => Ok(SymbolClassCert::new(*m, resolved.symbol.modes.clone(), eps.clone(), order)?),
        (Some(CertSpec { m: None, eps: None, .. }) | None, Some(c)) => Ok(c.clone()),
        (_, None) => Err(ConfigError("this symbol needs a certificate with m and eps".into())),
        _ => Err(ConfigError("certificate needs both m and eps".into())),
    }
}

impl Config {
    pub fn cert_order(&self) -> u32 {
        self.certificate.as_ref().map_or(2, |c| c.order)
    }

    /// Checks that don't need any computation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let need_symbol = matches!(self.scenario, Scenario::Quantize) || (self.scenario == Scenario::VerifyBound && !self.battery);
        if need_symbol && self.symbol.is_none() {
            return Err(ConfigError(format!("scenario {} needs a symbol", self.scenario.name())));
        }
        if matches!(self.scenario, Scenario::Quantize | Scenario::Convergence) && self.quantization.is_none() {
            return Err(ConfigError(format!("scenario {} needs a quantization block", self.scenario.name())));
        }
        if matches!(self.scenario, Scenario::MeasureMc | Scenario::BargmannSelftest) && self.seed.is_none() {
            return Err(ConfigError("Monte Carlo and randomized scenarios need a seed".into()));
        }
        if let Some(q) = &self.quantization {
            if !(q.h > 0.0 && q.h <= 1.0) {
                return Err(ConfigError(format!("h must lie in (0, 1], got {}", q.h)));
            }
        }
        if let Some(hs) = &self.h_values {
            if hs.is_empty() || hs.iter().any(|h| !(*h > 0.0 && *h <= 1.0)) {
                return Err(ConfigError("h_values must be nonempty and lie in (0, 1]".into()));
            }
        }
        if let Some(c) = &self.certificate {
            if c.order != 2 && c.order != 4 {
                return Err(ConfigError("certificate order must be 2 or 4".into()));
            }
        }
        if self.samples == Some(0) || self.samples == Some(1) {
            return Err(ConfigError("samples must be at least 2".into()));
        }
        if self.scenario == Scenario::Convergence {
            if let Some(s) = &self.symbol {
                if !matches!(s, SymbolSpec::LatticeGaussian { .. }) {
                    return Err(ConfigError("convergence runs on a lattice_gaussian symbol".into()));
                }
            }
        }
        Ok(())
    }
}
