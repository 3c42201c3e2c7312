//! Acceptance run: the oracle suite first, then one line per criterion.

use std::collections::BTreeMap;
use std::process::ExitCode;

use fisher_hydro_cli::config::{RunConfig, Settings, TestId};
use fisher_hydro_cli::oracles::run_oracles;
use fisher_hydro_cli::run;
use fisher_hydro_cli::verdict::{Check, Verdict};

struct Criterion {
    id: u32,
    title: &'static str,
    test: TestId,
    groups: &'static [&'static str],
    /// Checks allowed to fail, with the reason recorded in the decision log.
    known_failures: &'static [&'static str],
}

const CRITERIA: &[Criterion] = &[
    Criterion { id: 1, title: "alpha scan minimum", test: TestId::ScanAlpha, groups: &["table1", "refined"], known_failures: &[] },
    Criterion { id: 2, title: "boost invariance", test: TestId::ScanAlpha, groups: &["boost"], known_failures: &[] },
    Criterion { id: 3, title: "eigenstate floor", test: TestId::Continuity, groups: &["eigenstate"], known_failures: &[] },
    Criterion {
        id: 4,
        title: "superposition curve",
        test: TestId::Superposition,
        groups: &["superposition"],
        known_failures: &["monotone_in_beta"],
    },
    Criterion {
        id: 5,
        title: "entropy barrier",
        test: TestId::DgEntropy,
        groups: &["entropy_rate", "reversible", "dg_identity"],
        known_failures: &[],
    },
    Criterion { id: 6, title: "Bargmann closure", test: TestId::Galilei, groups: &["free_closure"], known_failures: &[] },
    Criterion {
        id: 7,
        title: "Fisher EL necessity",
        test: TestId::FisherEl,
        groups: &["necessity", "excited_scan"],
        known_failures: &[],
    },
    Criterion { id: 8, title: "complexifier rigidity", test: TestId::Complexifier, groups: &["rigidity"], known_failures: &[] },
    Criterion {
        id: 9,
        title: "time reversal",
        test: TestId::TimeReversal,
        groups: &["reversible", "diffusive"],
        known_failures: &[],
    },
    Criterion { id: 10, title: "circulation", test: TestId::Circulation, groups: &["quantisation"], known_failures: &[] },
];

fn describe(c: &Check) -> String {
    format!("{}/{} = {:.4e} ({:?} {:.3e})", c.group, c.name, c.measured, c.op, c.threshold)
}

fn main() -> ExitCode {
    let out = tempfile::tempdir().expect("temporary artefact directory");
    let mut hard_failures = 0;

    match run_oracles() {
        Ok(report) => {
            let failed: Vec<_> = report.checks.iter().filter(|c| !c.pass).collect();
            if failed.is_empty() {
                println!("PASS criterion 11: oracle suite ({} checks)", report.checks.len());
            } else {
                hard_failures += 1;
                println!("FAIL criterion 11: oracle suite");
                for c in failed {
                    println!("    {}", describe(c));
                }
            }
        }
        Err(e) => {
            hard_failures += 1;
            println!("FAIL criterion 11: oracle suite aborted: {e}");
        }
    }

    let mut verdicts: BTreeMap<TestId, Result<Verdict, String>> = BTreeMap::new();
    for crit in CRITERIA {
        let verdict = verdicts.entry(crit.test).or_insert_with(|| {
            let cfg = RunConfig {
                test: Some(crit.test),
                refine: Some(crit.test == TestId::ScanAlpha),
                out: Some(out.path().to_path_buf()),
                ..RunConfig::default()
            };
            Settings::resolve(crit.test, &cfg).and_then(|s| run(&s)).map_err(|e| e.to_string())
        });
        let label = format!("criterion {}: {}", crit.id, crit.title);
        let v = match verdict {
            Ok(v) => v,
            Err(e) => {
                hard_failures += 1;
                println!("FAIL {label}: {} aborted: {e}", crit.test);
                continue;
            }
        };
        let checks: Vec<&Check> = crit.groups.iter().flat_map(|g| v.group(g)).collect();
        if checks.is_empty() {
            hard_failures += 1;
            println!("FAIL {label}: no checks recorded");
            continue;
        }
        let failed: Vec<&Check> = checks.iter().copied().filter(|c| !c.pass).collect();
        if failed.is_empty() {
            println!("PASS {label} ({} checks)", checks.len());
        } else if failed.iter().all(|c| crit.known_failures.contains(&c.name.as_str())) {
            println!("FAIL {label} (known deviation, see decision log)");
        } else {
            hard_failures += 1;
            println!("FAIL {label}");
        }
        for c in failed {
            println!("    {}", describe(c));
        }
    }

    if hard_failures == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{hard_failures} criteria failed");
        ExitCode::FAILURE
    }
}
