use std::collections::BTreeMap;

use fockweyl::bounds::{cv_bound, operator_norm_lower, constant_integrals};
use fockweyl::linalg::hermitian_deficit;
use fockweyl::quantize::{anti_wick_matrix, hybrid_matrix, weyl_matrix, AntiWickRoute, HybridRoute, QuantizationConfig, WeylBackend};
use fockweyl::suites::{
    bargmann_suite, bound_rows, convergence_rows, convergence_setup, covariance_suite, measure_suite_with, BoundKind, Check,
    SuiteReport,
};
use fockweyl::symbols::bound_battery;
use fockweyl::{Error, ModeSet, Truncation};

use crate::config::{certificate, Config, ConfigError, Quantizer, Scenario};

/// Rows of the CSV file; every value is written as text already.
#[derive(Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone)]
pub enum Cell {
    Text(String),
    Int(u64),
    Num(f64),
    Bool(bool),
}

impl Cell {
    /// Numbers carry 17 significant digits so that they read back exactly.
    pub fn render(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => format!("{x:.16e}"),
            Cell::Bool(b) => b.to_string(),
        }
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub csv: Table,
    /// Short table shown by the report command.
    pub report: Table,
    pub values: BTreeMap<String, f64>,
    pub quadrature_orders: Vec<usize>,
    pub mc_samples: Vec<usize>,
}

/// Why a scenario stopped early.
#[derive(Debug)]
pub enum Failure {
    Config(ConfigError),
    Numerical(Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonConvergence { .. } | Error::PadInsufficient { .. } | Error::NonFinite { .. } | Error::Overflow(_) => Failure::Numerical(e),
            other => Failure::Config(ConfigError(other.to_string())),
        }
    }
}

type Run = Result<Outcome, Failure>;

pub fn run(cfg: &Config, seed: u64) -> Run {
    match cfg.scenario {
        Scenario::Quantize => quantize(cfg, seed),
        Scenario::VerifyBound => verify_bound(cfg, seed),
        Scenario::Convergence => convergence(cfg, seed),
        Scenario::BargmannSelftest => suites(&[bargmann_suite(seed)?, covariance_suite(seed)?]),
        Scenario::MeasureMc => {
            let samples = cfg.samples.unwrap_or(100_000);
            let mut out = suites(&[measure_suite_with(seed, samples)?])?;
            out.mc_samples = vec![samples, samples];
            Ok(out)
        }
        Scenario::ConstantsSelftest => constants(),
    }
}

fn suites(reports: &[SuiteReport]) -> Run {
    let mut out = Outcome {
        csv: Table {
            columns: vec!["suite", "check", "value", "threshold", "passed"],
            rows: vec![],
        },
        ..Outcome::default()
    };
    for r in reports {
        for c in &r.checks {
            out.csv.rows.push(vec![Cell::Text(r.name.into()), Cell::Text(c.name.clone()), Cell::Num(c.value), Cell::Num(c.threshold), Cell::Bool(c.passed)]);
            out.checks.push(Check { name: format!("{}: {}", r.name, c.name), ..c.clone() });
        }
    }
    Ok(out)
}

fn constants() -> Run {
    let r = constant_integrals();
    let mut out = Outcome {
        csv: Table {
            columns: vec!["quantity", "value"],
            rows: vec![],
        },
        ..Outcome::default()
    };
    let put = |name: &str, v: f64, out: &mut Outcome| {
        out.csv.rows.push(vec![Cell::Text(name.into()), Cell::Num(v)]);
        out.values.insert(name.into(), v);
    };
    put("schur_constant", r.schur, &mut out);
    for (k, p) in r.p_integrals.iter().enumerate() {
        put(&format!("p{k}_integral"), *p, &mut out);
    }
    put("c", r.c, &mut out);
    out.checks.push(Check::below("schur constant vs sqrt(pi/2)", r.schur_error, 1e-10));
    for (k, p) in r.p_integrals.iter().enumerate() {
        out.checks.push(Check::at_most(format!("p{k} integral <= sqrt(C)"), *p, r.c.sqrt()));
    }
    Ok(out)
}

fn quantize(cfg: &Config, seed: u64) -> Run {
    let spec = cfg.symbol.as_ref().ok_or_else(|| ConfigError("missing symbol".into()))?;
    let q = cfg.quantization.as_ref().ok_or_else(|| ConfigError("missing quantization".into()))?;
    let resolved = spec.resolve(cfg.cert_order(), seed)?;
    let f = &resolved.symbol;
    let mut qc = QuantizationConfig::new(q.h, q.truncation(f.modes.clone())?)?;
    qc.seed = seed;
    let m = match q.quantizer {
        Quantizer::Weyl => weyl_matrix(f, &qc, WeylBackend::Auto)?,
        Quantizer::AntiWick => anti_wick_matrix(f, &qc, AntiWickRoute::Auto)?,
        Quantizer::Hybrid => {
            let e = ModeSet::new(q.weyl_modes.clone())?;
            if !e.is_subset(&f.modes) {
                return Err(ConfigError(format!("weyl_modes {:?} are not modes of the symbol", q.weyl_modes)).into());
            }
            hybrid_matrix(f, &e, &qc, HybridRoute::Auto)?
        }
    };
    let a = m.matrix();
    let basis = qc.basis();
    let mut out = Outcome {
        csv: Table {
            columns: vec!["row", "col", "alpha", "beta", "re", "im"],
            rows: vec![],
        },
        report: Table {
            columns: vec!["quantity", "value"],
            rows: vec![],
        },
        ..Outcome::default()
    };
    let label = |d: &[u32]| d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            let z = a[(i, j)];
            out.csv.rows.push(vec![Cell::Int(i as u64), Cell::Int(j as u64), Cell::Text(label(basis.dense(i))), Cell::Text(label(basis.dense(j))), Cell::Num(z.re), Cell::Num(z.im)]);
        }
    }
    let norm = operator_norm_lower(a, 1e-10, 20_000)?;
    if !norm.converged {
        return Err(Error::NonConvergence { what: "power iteration".into(), detail: format!("{} iterations", norm.iterations) }.into());
    }
    out.values.insert("norm_lower".into(), norm.value);
    out.values.insert("dimension".into(), a.nrows() as f64);
    if f.is_real() {
        let d = hermitian_deficit(a);
        out.values.insert("hermitian_deficit".into(), d);
        out.checks.push(Check::below("real symbol gives a Hermitian matrix", d, 1e-8));
    }
    if let Some(cert) = &resolved.cert {
        let scope = match q.quantizer {
            Quantizer::Weyl => f.modes.clone(),
            Quantizer::AntiWick => ModeSet::empty(),
            Quantizer::Hybrid => ModeSet::new(q.weyl_modes.clone())?,
        };
        let bound = cv_bound(cert, q.h, &scope)?;
        out.values.insert("bound".into(), bound);
        out.checks.push(Check::at_most("norm estimate <= product bound", norm.value, bound));
    }
    out.checks.push(Check::holds(format!("matrix obtained by {}", m.diag.method), m.diag.converged));
    out.quadrature_orders.extend(m.diag.order);
    out.mc_samples.extend(m.diag.mc_samples);
    for (k, v) in &out.values {
        out.report.rows.push(vec![Cell::Text(k.clone()), Cell::Num(*v)]);
    }
    Ok(out)
}

fn verify_bound(cfg: &Config, seed: u64) -> Run {
    let hs = cfg.h_values.clone().unwrap_or_else(|| vec![0.25, 1.0]);
    let cap = cfg.quantization.as_ref().map_or(12, |q| q.cap);
    let order = cfg.cert_order();
    let battery = if cfg.battery {
        bound_battery(order)?
    } else {
        let spec = cfg.symbol.as_ref().ok_or_else(|| ConfigError("missing symbol".into()))?;
        let resolved = spec.resolve(order, seed)?;
        let cert = certificate(cfg.certificate.as_ref(), &resolved)?;
        if resolved.symbol.n_modes() > 2 {
            return Err(ConfigError("verify-bound supports symbols on one or two modes".into()).into());
        }
        vec![fockweyl::symbols::CertifiedSymbol { name: resolved.symbol.label.clone(), symbol: resolved.symbol, cert }]
    };
    let mut rows = Vec::new();
    for s in &battery {
        for &h in &hs {
            rows.extend(bound_rows(s, h, cap)?);
        }
    }
    let ids = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut out = Outcome {
        csv: Table {
            columns: vec!["symbol", "kind", "h", "cap", "lambda", "lambda_prime", "estimate", "bound", "ratio", "converged"],
            rows: vec![],
        },
        report: Table {
            columns: vec!["symbol", "h", "norm", "bound", "slack"],
            rows: vec![],
        },
        ..Outcome::default()
    };
    for r in &rows {
        out.csv.rows.push(vec![
            Cell::Text(r.symbol.clone()),
            Cell::Text(r.kind.as_str().into()),
            Cell::Num(r.h),
            Cell::Int(r.cap as u64),
            Cell::Text(ids(&r.lambda)),
            Cell::Text(ids(&r.lambda2)),
            Cell::Num(r.estimate),
            Cell::Num(r.bound),
            Cell::Num(r.ratio()),
            Cell::Bool(r.converged),
        ]);
        if r.kind == BoundKind::Weyl {
            out.report.rows.push(vec![Cell::Text(r.symbol.clone()), Cell::Num(r.h), Cell::Num(r.estimate), Cell::Num(r.bound), Cell::Num(r.bound - r.estimate)]);
        }
    }
    for kind in [BoundKind::Weyl, BoundKind::Hybrid, BoundKind::Difference] {
        let of: Vec<_> = rows.iter().filter(|r| r.kind == kind).collect();
        let violations = of.iter().filter(|r| !r.holds()).count();
        let worst = of.iter().map(|r| r.ratio()).fold(0.0, f64::max);
        out.values.insert(format!("worst_ratio_{}", kind.as_str()), worst);
        out.checks.push(Check::at_most(format!("{} bound violations", kind.as_str()), violations as f64, 0.0));
    }
    out.values.insert("symbols".into(), battery.len() as f64);
    Ok(out)
}

fn convergence(cfg: &Config, seed: u64) -> Run {
    let q = cfg.quantization.as_ref().ok_or_else(|| ConfigError("missing quantization".into()))?;
    let (lg, cert) = match &cfg.symbol {
        Some(spec) => {
            let r = spec.resolve(cfg.cert_order(), seed)?;
            let cert = certificate(cfg.certificate.as_ref(), &r)?;
            (r.lattice.ok_or_else(|| ConfigError("convergence needs a lattice_gaussian symbol".into()))?, cert)
        }
        None => convergence_setup(0.3)?,
    };
    let t: Truncation = q.truncation(lg.symbol.modes.clone())?;
    let rows = convergence_rows(&lg, &cert, q.h, t)?;
    let mut out = Outcome {
        csv: Table {
            columns: vec!["n", "est_norm_diff", "diff_bound", "ratio"],
            rows: vec![],
        },
        report: Table {
            columns: vec!["n", "est_norm_diff", "diff_bound", "ratio"],
            rows: vec![],
        },
        ..Outcome::default()
    };
    for r in &rows {
        let row = vec![Cell::Int(r.n as u64), Cell::Num(r.est_norm_diff), Cell::Num(r.diff_bound), Cell::Num(r.ratio())];
        out.csv.rows.push(row.clone());
        out.report.rows.push(row);
    }
    out.checks.push(Check::holds("differences decrease along the nested sets", rows.windows(2).all(|w| w[1].est_norm_diff < w[0].est_norm_diff)));
    out.checks.push(Check::at_most("difference / bound", rows.iter().map(|r| r.ratio()).fold(0.0, f64::max), 1.0));
    out.values.insert("c_fit".into(), cert.eps[0] / lg.g[0]);
    Ok(out)
}
