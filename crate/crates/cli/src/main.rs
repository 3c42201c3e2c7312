use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fisher_hydro_cli::config::TestId;
use fisher_hydro_cli::{render, run, run_all, verdict_code, RunAllArgs, RunArgs};

#[derive(Parser)]
#[command(name = "fisher-hydro", version, about = "Falsification suites for Fisher-regularised hydrodynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Residual scan over the quantum-potential coefficient.
    ScanAlpha(RunArgs),
    /// Stationary-state closure, coefficient offsets and momentum balance.
    Continuity(RunArgs),
    /// Entropy production of diffusive flows.
    DgEntropy(RunArgs),
    /// Circulation quantisation around vortices.
    Circulation(RunArgs),
    /// Euler-Lagrange fields of competing regularisers.
    FisherEl(RunArgs),
    /// Conjugation round trips with and without diffusion.
    TimeReversal(RunArgs),
    /// Galilei algebra of the hydrodynamic generators.
    Galilei(RunArgs),
    /// Rigidity of the polar map among power-law complexifiers.
    Complexifier(RunArgs),
    /// Superposition defect under a non-Fisher nonlinearity.
    Superposition(RunArgs),
    /// Every suite, with optional per-test configs from a directory.
    RunAll(RunAllArgs),
}

fn single(test: TestId, args: &RunArgs) -> i32 {
    let outcome = args.settings(test).and_then(|s| run(&s));
    match outcome {
        Ok(v) => {
            print!("{}", render(&v));
            verdict_code(&v)
        }
        Err(e) => {
            eprintln!("fisher-hydro {test}: {e}");
            e.exit_code()
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (test, args) = match &cli.command {
        Command::ScanAlpha(a) => (TestId::ScanAlpha, a),
        Command::Continuity(a) => (TestId::Continuity, a),
        Command::DgEntropy(a) => (TestId::DgEntropy, a),
        Command::Circulation(a) => (TestId::Circulation, a),
        Command::FisherEl(a) => (TestId::FisherEl, a),
        Command::TimeReversal(a) => (TestId::TimeReversal, a),
        Command::Galilei(a) => (TestId::Galilei, a),
        Command::Complexifier(a) => (TestId::Complexifier, a),
        Command::Superposition(a) => (TestId::Superposition, a),
        Command::RunAll(a) => {
            let code = match run_all(&a.dir, a.out.as_deref()) {
                Ok(summary) => {
                    for t in &summary.tests {
                        let status = if t.pass { "PASS" } else { "FAIL" };
                        println!("{status} {} ({:.1} s)", t.test, t.runtime_seconds);
                    }
                    summary.exit_code()
                }
                Err(e) => {
                    eprintln!("fisher-hydro run-all: {e}");
                    e.exit_code()
                }
            };
            return ExitCode::from(code as u8);
        }
    };
    ExitCode::from(single(test, args) as u8)
}
