//! Runs every reproduction script and prints one line per criterion.
//! Uses its own harness so the lines are always shown.

use std::process::ExitCode;

use presslab::repro::{presets_dir, run_all_repro};

fn main() -> ExitCode {
    let outcomes = match run_all_repro(&presets_dir()) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("acceptance: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut failed = Vec::new();
    for o in &outcomes {
        println!("[{}] criterion {:>2} {}: {}", if o.passed { "PASS" } else { "FAIL" }, o.id, o.name, o.detail);
        if !o.passed {
            failed.push(o.id);
        }
    }
    if outcomes.len() != 12 {
        eprintln!("expected 12 criteria, got {}", outcomes.len());
        return ExitCode::FAILURE;
    }
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria passed", outcomes.len(), outcomes.len());
        ExitCode::SUCCESS
    } else {
        eprintln!("acceptance: failed criteria {failed:?}");
        ExitCode::FAILURE
    }
}
