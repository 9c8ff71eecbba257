mod config;
mod output;
mod scenarios;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fockweyl::suites::{bargmann_suite, constants_suite, hermite_suite, DEFAULT_SEED};

use crate::output::Summary;
use crate::scenarios::Failure;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

/// Output directory override.
const OUT_ENV: &str = "FOCKWEYL_OUT";

#[derive(Parser)]
#[command(name = "fockweyl", version, about = "Truncated Fock-space experiments for Weyl-type quantizations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario described by a JSON config file.
    Run {
        config: PathBuf,
        /// Output directory (else $FOCKWEYL_OUT, the config's output.dir, or ./fockweyl-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cap on worker threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Hermite, constants and Bargmann suites with built-in defaults.
    Selftest {
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print a summary.json as a table.
    Report { summary: PathBuf },
}

fn set_threads(n: Option<usize>) -> Result<(), String> {
    if let Some(n) = n {
        if n == 0 {
            return Err("--threads must be at least 1".into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn out_dir(flag: Option<PathBuf>, cfg: &config::Config) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("fockweyl-out"))
}

fn run(path: &Path, out: Option<PathBuf>, threads: Option<usize>, seed: Option<u64>) -> u8 {
    let mut cfg = match config::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{e}");
            return EXIT_CONFIG;
        }
    };
    if seed.is_some() {
        cfg.seed = seed;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("{e}");
        return EXIT_CONFIG;
    }
    if let Err(e) = set_threads(threads) {
        eprintln!("configuration error: {e}");
        return EXIT_CONFIG;
    }
    let seed = cfg.seed.unwrap_or(0);
    let dir = out_dir(out, &cfg);
    let name = cfg.scenario.name();
    match scenarios::run(&cfg, seed) {
        Ok(outcome) => {
            let summary = Summary::new(name, seed, &outcome);
            if let Err(e) = output::write_csv(&dir, &outcome.csv).and_then(|_| output::write_json(&dir, &summary)) {
                eprintln!("cannot write results to {}: {e}", dir.display());
                return EXIT_CONFIG;
            }
            print!("{}", output::render(&summary));
            if summary.status == "pass" {
                0
            } else {
                EXIT_FAIL
            }
        }
        Err(Failure::Config(e)) => {
            eprintln!("{e}");
            EXIT_CONFIG
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e}");
            let summary = Summary::failed(name, seed, e.to_string());
            if let Err(e) = output::write_json(&dir, &summary) {
                eprintln!("cannot write summary to {}: {e}", dir.display());
            }
            EXIT_NUMERICAL
        }
    }
}

fn selftest(threads: Option<usize>) -> u8 {
    if let Err(e) = set_threads(threads) {
        eprintln!("configuration error: {e}");
        return EXIT_CONFIG;
    }
    let mut code = 0;
    for r in [constants_suite(), hermite_suite(), bargmann_suite(DEFAULT_SEED)] {
        match r {
            Ok(r) => {
                println!("{}", r.line());
                for c in r.failures() {
                    println!("    failed: {} = {:e} (threshold {:e})", c.name, c.value, c.threshold);
                }
                if !r.passed() {
                    code = code.max(EXIT_FAIL);
                }
            }
            Err(e) => {
                println!("FAIL error: {e}");
                code = EXIT_NUMERICAL;
            }
        }
    }
    code
}

fn report(path: &Path) -> u8 {
    let parsed = std::fs::read_to_string(path)
        .map_err(|e| e.to_string())
        .and_then(|t| serde_json::from_str::<Summary>(&t).map_err(|e| e.to_string()));
    match parsed {
        Ok(s) => {
            print!("{}", output::render(&s));
            0
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            EXIT_CONFIG
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    ExitCode::from(match cli.command {
        Command::Run { config, out, threads, seed } => run(&config, out, threads, seed),
        Command::Selftest { threads } => selftest(threads),
        Command::Report { summary } => report(&summary),
    })
}
