//! Runs the shipped acceptance config and prints one verdict per criterion.

use std::process::ExitCode;
use std::time::Instant;

use choimetric::harness::{acceptance_config, run_all, ExperimentRecord};

struct Criterion {
    id: usize,
    title: &'static str,
    prefixes: &'static [&'static str],
    /// Minimum row counts per prefix, so a shrunken config cannot pass.
    min_rows: &'static [(&'static str, usize)],
}

const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "CP characterization agrees with the k-positivity oracle; transpose witness -1",
        prefixes: &["cp-"],
        min_rows: &[("cp-characterization", 200), ("cp-transpose-witness", 1)],
    },
    Criterion {
        id: 2,
        title: "Choi density equals the transposed Choi matrix; state iff Tr F(1) = 1",
        prefixes: &["embedding"],
        min_rows: &[("embedding-choi", 100), ("embedding-state", 100)],
    },
    Criterion {
        id: 3,
        title: "flip identity on channel pairs",
        prefixes: &["flip"],
        min_rows: &[("flip", 50)],
    },
    Criterion {
        id: 4,
        title: "trace adjoints and multiplier adjoints",
        prefixes: &["adjoints"],
        min_rows: &[("adjoints", 1), ("adjoints-multiplier/", 1)],
    },
    Criterion {
        id: 5,
        title: "Kasparov products and seminorm domination",
        prefixes: &["kasparov", "seminorm-domination"],
        min_rows: &[
            ("kasparov/even-even", 1),
            ("kasparov/odd-odd", 1),
            ("kasparov/even-odd", 1),
            ("kasparov/odd-even", 1),
            ("kasparov-toy", 1),
            ("seminorm-domination", 500),
        ],
    },
    Criterion {
        id: 6,
        title: "stability under amplification, with hypothesis audit",
        prefixes: &["stability"],
        min_rows: &[
            ("stability/Z2", 25),
            ("stability/Z3", 25),
            ("stability-audit-1/", 50),
            ("stability-audit-2/", 50),
        ],
    },
    Criterion {
        id: 7,
        title: "chaining inequality for multipliers",
        prefixes: &["chaining"],
        min_rows: &[
            ("chaining/Z2", 100),
            ("chaining/Z3", 100),
            ("chaining/Z4", 100),
            ("chaining/S3", 100),
        ],
    },
    Criterion {
        id: 8,
        title: "multiplier contraction of the length seminorm",
        prefixes: &["contraction"],
        min_rows: &[
            ("contraction/Z2", 500),
            ("contraction/Z3", 500),
            ("contraction/Z4", 500),
            ("contraction/S3", 500),
        ],
    },
    Criterion {
        id: 9,
        title: "MK solver against closed forms, search oracle and the Wasserstein dual",
        prefixes: &["mk-", "duality"],
        min_rows: &[
            ("mk-two-point", 3),
            ("mk-grid", 1),
            ("duality", 50),
            ("duality-infinite", 1),
        ],
    },
    Criterion {
        id: 10,
        title: "symmetry and triangle inequality of mk and Delta",
        prefixes: &["metric-axioms"],
        min_rows: &[
            ("metric-axioms-mk-symmetry", 1),
            ("metric-axioms-mk-triangle", 1),
            ("metric-axioms-delta-symmetry", 1),
            ("metric-axioms-delta-triangle", 1),
        ],
    },
];

fn matches(label: &str, prefix: &str) -> bool {
    // `duality` must not swallow `duality-infinite` when counting.
    if prefix.ends_with('/') || prefix.ends_with('-') {
        label.starts_with(prefix)
    } else {
        label == prefix || label.starts_with(&format!("{prefix}/"))
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let records = match run_all(&acceptance_config()) {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL acceptance config did not run: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut all = true;
    for c in CRITERIA {
        let rows: Vec<&ExperimentRecord> = records
            .iter()
            .filter(|r| c.prefixes.iter().any(|p| r.experiment.starts_with(p)))
            .collect();
        let failed: Vec<&&ExperimentRecord> = rows.iter().filter(|r| !r.pass).collect();
        let short: Vec<String> = c
            .min_rows
            .iter()
            .filter_map(|&(p, n)| {
                let k = rows.iter().filter(|r| matches(&r.experiment, p)).count();
                (k < n).then(|| format!("{p}: {k} < {n}"))
            })
            .collect();
        let min_slack = rows.iter().map(|r| r.slack).fold(f64::INFINITY, f64::min);
        let ok = !rows.is_empty() && failed.is_empty() && short.is_empty();
        all &= ok;
        println!(
            "{} criterion {}: {} ({} rows, {} failed, min slack {:.3e})",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            rows.len(),
            failed.len(),
            min_slack
        );
        for s in &short {
            println!("    too few rows for {s}");
        }
        for r in failed.iter().take(5) {
            println!(
                "    {} trial {} seed {}: lhs {} rhs {} slack {} [{}]",
                r.experiment, r.trial, r.seed, r.lhs, r.rhs, r.slack, r.status
            );
        }
    }
    println!(
        "acceptance finished in {:.1} s",
        start.elapsed().as_secs_f64()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
