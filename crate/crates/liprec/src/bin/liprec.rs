use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use liprec::format::{load_problem, show_float, write_atomic};
use liprec::parallel;
use liprec::selftest::{run_suite, CriterionResult, SuiteConfig};
use liprec::tasks::run_problem;
use liprec::CliError;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "liprec",
    version,
    about = "Lipschitz signal recovery experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one problem file and write its report.
    Run {
        problem: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override a problem field, e.g. `epsilon=0.1` or `signals.count=200`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Also write the assertions as CSV.
        #[arg(long, value_name = "PATH")]
        trace: Option<PathBuf>,
    },
    /// Run the bundled acceptance suite.
    Selftest {
        /// Only criteria of this task (or with this number).
        #[arg(long)]
        filter: Option<String>,
        /// Write the suite results as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, hide = true)]
        corrupt_tolerance: bool,
    },
}

const EXIT_INPUT: u8 = 1;
const EXIT_ASSERTION: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let pool = parallel::pool();
    let result = pool.install(|| match cli.command {
        Command::Run {
            problem,
            out,
            overrides,
            trace,
        } => run(&problem, &out, &overrides, trace.as_deref()),
        Command::Selftest {
            filter,
            out,
            corrupt_tolerance,
        } => selftest(filter.as_deref(), out.as_deref(), corrupt_tolerance),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_ASSERTION),
        Err(e) => {
            eprintln!("{}: {e}", e.kind());
            ExitCode::from(EXIT_INPUT)
        }
    }
}

fn run(
    problem: &std::path::Path,
    out: &std::path::Path,
    overrides: &[String],
    trace: Option<&std::path::Path>,
) -> Result<bool, CliError> {
    let problem = load_problem(problem, overrides)?;
    let report = run_problem(&problem)?;
    write_atomic(out, &report.to_json())?;
    if let Some(path) = trace {
        let mut csv = String::from("name,passed,observed,bound\n");
        for a in &report.assertions {
            csv.push_str(&format!(
                "{},{},{:?},{:?}\n",
                a.name, a.passed, a.observed, a.bound
            ));
        }
        write_atomic(path, &csv)?;
    }
    for a in &report.assertions {
        let verdict = if a.passed { "pass" } else { "FAIL" };
        println!(
            "{verdict:4} {:<32} observed {:<24} bound {}",
            a.name,
            show_float(a.observed),
            show_float(a.bound)
        );
    }
    Ok(report.passed())
}

#[derive(Serialize)]
struct SuiteReport<'a> {
    passed: bool,
    results: &'a [CriterionResult],
    runtime_ms: f64,
    version: &'static str,
}

fn selftest(
    filter: Option<&str>,
    out: Option<&std::path::Path>,
    corrupt: bool,
) -> Result<bool, CliError> {
    let cfg = if corrupt {
        SuiteConfig::corrupted()
    } else {
        SuiteConfig::default()
    };
    let start = Instant::now();
    let results = run_suite(filter, &cfg);
    if results.is_empty() {
        return Err(CliError::problem(format!(
            "no criterion matches filter `{}`",
            filter.unwrap_or_default()
        )));
    }
    for r in &results {
        println!("{}", r.line());
    }
    let passed = results.iter().all(|r| r.passed);
    let failed = results.iter().filter(|r| !r.passed).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if let Some(path) = out {
        let report = SuiteReport {
            passed,
            results: &results,
            runtime_ms: start.elapsed().as_secs_f64() * 1e3,
            version: env!("CARGO_PKG_VERSION"),
        };
        let mut json = serde_json::to_string_pretty(&report).map_err(CliError::Json)?;
        json.push('\n');
        write_atomic(path, &json)?;
    }
    Ok(passed)
}
