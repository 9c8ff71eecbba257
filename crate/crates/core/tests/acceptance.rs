//! Runs every acceptance criterion and prints one line per criterion.

use std::process::ExitCode;

use fockweyl::suites::{
    bargmann_suite, bound_suite, constants_suite, convergence_suite, covariance_suite, hermite_suite, kernel_decay_suite,
    measure_suite, quantizer_suite, SuiteReport, DEFAULT_SEED,
};

fn main() -> ExitCode {
    let seed = DEFAULT_SEED;
    let runs: Vec<(u32, Box<dyn Fn() -> fockweyl::Result<SuiteReport>>)> = vec![
        (1, Box::new(constants_suite)),
        (2, Box::new(hermite_suite)),
        (3, Box::new(move || bargmann_suite(seed))),
        (4, Box::new(move || covariance_suite(seed))),
        (5, Box::new(quantizer_suite)),
        (6, Box::new(|| {
            let (r, rows) = bound_suite()?;
            for row in rows.iter().filter(|r| r.kind == fockweyl::suites::BoundKind::Weyl) {
                println!("    tightness {:<28} h={:<5} {:.4e}", row.symbol, row.h, row.ratio());
            }
            Ok(r)
        })),
        (7, Box::new(|| {
            let (r, rows) = convergence_suite()?;
            for row in &rows {
                println!("    n={} diff={:.6e} bound={:.6e}", row.n, row.est_norm_diff, row.diff_bound);
            }
            Ok(r)
        })),
        (8, Box::new(move || measure_suite(seed))),
        (9, Box::new(move || kernel_decay_suite(seed))),
    ];
    let mut failed = 0;
    for (id, run) in runs {
        match run() {
            Ok(r) => {
                println!("{}", r.line());
                for c in r.failures() {
                    println!("    failed: {} = {:.6e} (threshold {:.3e})", c.name, c.value, c.threshold);
                }
                if !r.within_budget() {
                    println!("    over budget");
                }
                if !r.passed() {
                    failed += 1;
                }
            }
            Err(e) => {
                println!("FAIL [{id}] error: {e}");
                failed += 1;
            }
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
