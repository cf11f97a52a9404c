mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::criteria::{self, Outcome};

fn rule_battery() -> Outcome {
    let failed: Vec<String> =
        common::rules::CASES.iter().filter_map(|(name, case)| case().err().map(|e| format!("{name}: {e}"))).collect();
    if failed.is_empty() {
        Ok(format!("{} rules", common::rules::CASES.len()))
    } else {
        Err(failed.join("; "))
    }
}

type Criterion = (&'static str, fn() -> Outcome);

const CRITERIA: &[Criterion] = &[
    ("operational rules", rule_battery),
    ("church booleans", criteria::church_booleans),
    ("bool is bridge-discrete", criteria::bridge_discrete_bool),
    ("weak excluded middle refuted", criteria::wlem_refutation),
    ("bridge function extensionality", criteria::bridge_funext),
    ("coherence under dimension substitution", criteria::coherence),
    ("canonicity", criteria::canonicity),
    ("negative programs rejected", criteria::negative_suite),
    ("subject reduction and determinism", criteria::subject_reduction),
    ("restriction and forall", criteria::restriction_tables),
];

fn main() -> ExitCode {
    let mut failures = 0;
    for (i, (name, run)) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let result = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let ms = start.elapsed().as_millis();
        match result {
            Ok(msg) => println!("criterion {}: PASS {name}: {msg} ({ms} ms)", i + 1),
            Err(msg) => {
                failures += 1;
                println!("criterion {}: FAIL {name}: {msg} ({ms} ms)", i + 1)
            }
        }
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
