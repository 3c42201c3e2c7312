//! Runner for the fisher-hydro suites: configuration, verdicts and artefacts.

// `!(x > 0.0)` rejects NaN along with non-positive values; index loops read
// closer to the stencils than iterator chains.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod error;
pub mod oracles;
pub mod suites;
pub mod verdict;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{RunConfig, Settings, TestId};
use crate::error::CliError;
use crate::verdict::{Cell, Table, Verdict, SCHEMA_VERSION};

/// Environment variable sizing the `run-all` worker pool.
pub const WORKERS_ENV: &str = "FISHER_HYDRO_WORKERS";

/// Exit code when a falsifier fires.
pub const EXIT_FALSIFIED: i32 = 1;

/// Flags shared by every test subcommand; they override the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML or JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Artefact directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also run the refined grid where the test has one.
    #[arg(long)]
    pub refine: bool,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub alpha_min: Option<f64>,
    #[arg(long)]
    pub alpha_max: Option<f64>,
    #[arg(long)]
    pub alpha_steps: Option<usize>,
    #[arg(long)]
    pub alpha_factor: Option<f64>,
    #[arg(long)]
    pub boost: Option<f64>,
    #[arg(long)]
    pub diffusion: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub mask_eps: Option<f64>,
}

impl RunArgs {
    fn flags(&self) -> RunConfig {
        RunConfig {
            n: self.n,
            dt: self.dt,
            alpha_min: self.alpha_min,
            alpha_max: self.alpha_max,
            alpha_steps: self.alpha_steps,
            alpha_factor: self.alpha_factor,
            boost: self.boost,
            diffusion: self.diffusion,
            beta: self.beta,
            mask_eps: self.mask_eps,
            refine: self.refine.then_some(true),
            out: self.out.clone(),
            ..RunConfig::default()
        }
    }

    /// Config file (if any) overlaid with the command-line flags.
    pub fn settings(&self, test: TestId) -> Result<Settings, CliError> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig { test: Some(test), ..RunConfig::default() },
        };
        Settings::resolve(test, &base.overlay(&self.flags()))
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunAllArgs {
    /// Directory holding optional `<test>.toml` or `<test>.json` files.
    pub dir: PathBuf,
    /// Artefact directory; defaults to `<dir>/results`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Run one suite and write `<out>/<test>.json` plus its CSV tables.
pub fn run(settings: &Settings) -> Result<Verdict, CliError> {
    let start = Instant::now();
    let (report, grid) = suites::run_suite(settings)?;
    let verdict = Verdict {
        schema_version: SCHEMA_VERSION,
        test: settings.test,
        pass: report.checks.iter().all(|c| c.pass),
        checks: report.checks,
        advisories: report.advisories,
        measured: report.measured,
        runtime_seconds: start.elapsed().as_secs_f64(),
        grid,
        effective_config: settings.to_config(),
        timestamp: chrono::Utc::now().to_rfc3339(),
    };
    fs::create_dir_all(&settings.out)?;
    let json = serde_json::to_string_pretty(&verdict)?;
    fs::write(settings.out.join(format!("{}.json", settings.test)), json + "\n")?;
    for table in &report.tables {
        table.write(&settings.out)?;
    }
    Ok(verdict)
}

/// Exit code of a finished verdict.
pub fn verdict_code(v: &Verdict) -> i32 {
    if v.pass {
        0
    } else {
        EXIT_FALSIFIED
    }
}

/// Human-readable lines for a verdict.
pub fn render(v: &Verdict) -> String {
    let mut out = format!("{} {}\n", if v.pass { "PASS" } else { "FAIL" }, v.test);
    for c in &v.checks {
        out += &format!(
            "  {} {}/{}: {:.6e} {:?} {:.3e}\n",
            if c.pass { "ok  " } else { "FAIL" },
            c.group,
            c.name,
            c.measured,
            c.op,
            c.threshold
        );
    }
    for c in &v.advisories {
        out += &format!(
            "  {} {}/{}: {:.6e} {:?} {:.3e} (advisory)\n",
            if c.pass { "ok  " } else { "warn" },
            c.group,
            c.name,
            c.measured,
            c.op,
            c.threshold
        );
    }
    out
}

/// One line of the `run-all` summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub test: TestId,
    pub pass: bool,
    pub exit_code: i32,
    pub failed_checks: Vec<String>,
    pub error: Option<String>,
    pub runtime_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub pass: bool,
    pub tests: Vec<SummaryRow>,
}

impl Summary {
    /// 0 when everything passed, otherwise the largest per-test code.
    pub fn exit_code(&self) -> i32 {
        self.tests.iter().map(|t| t.exit_code).max().unwrap_or(0)
    }
}

fn config_for(dir: &Path, test: TestId) -> Result<RunConfig, CliError> {
    for ext in ["toml", "json"] {
        let path = dir.join(format!("{test}.{ext}"));
        if path.is_file() {
            return RunConfig::load(&path);
        }
    }
    Ok(RunConfig { test: Some(test), ..RunConfig::default() })
}

fn worker_count() -> Result<usize, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{WORKERS_ENV} must be a non-negative integer, got {v:?}"))),
        Err(_) => Ok(0),
    }
}

/// Run every suite in a worker pool and write `summary.json` and `summary.csv`.
pub fn run_all(dir: &Path, out: Option<&Path>) -> Result<Summary, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Io(format!("config directory {} does not exist", dir.display())));
    }
    let out = out.map_or_else(|| dir.join("results"), Path::to_path_buf);
    fs::create_dir_all(&out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count()?)
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    let tests: Vec<SummaryRow> = pool.install(|| {
        TestId::ALL
            .par_iter()
            .map(|&test| {
                let start = Instant::now();
                let outcome = config_for(dir, test)
                    .and_then(|cfg| Settings::resolve(test, &RunConfig { out: Some(out.clone()), ..cfg }))
                    .and_then(|s| run(&s));
                let runtime_seconds = start.elapsed().as_secs_f64();
                match outcome {
                    Ok(v) => SummaryRow {
                        test,
                        pass: v.pass,
                        exit_code: verdict_code(&v),
                        failed_checks: v.failed_checks().map(|c| format!("{}/{}", c.group, c.name)).collect(),
                        error: None,
                        runtime_seconds,
                    },
                    Err(e) => {
                        log::error!("{test}: {e}");
                        SummaryRow {
                            test,
                            pass: false,
                            exit_code: e.exit_code(),
                            failed_checks: Vec::new(),
                            error: Some(e.to_string()),
                            runtime_seconds,
                        }
                    }
                }
            })
            .collect()
    });
    let summary = Summary { schema_version: SCHEMA_VERSION, pass: tests.iter().all(|t| t.pass), tests };
    fs::write(out.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    let mut table = Table::new("summary", &["test[label]", "pass[bool]", "exit_code[1]", "failed_checks[label]"]);
    for t in &summary.tests {
        table.push(vec![
            Cell::Text(t.test.to_string()),
            Cell::Text(t.pass.to_string()),
            Cell::Int(t.exit_code as i64),
            Cell::Text(t.failed_checks.join(";")),
        ]);
    }
    table.write(&out)?;
    Ok(summary)
}
