//! Reference-value acceptance run at paper-fidelity solver settings.
//!
//! Prints one PASS/FAIL line per criterion and exits non-zero if any failed.
//! Set `LINER_ACCEPTANCE_CACHE` to a CSV path to keep the k_R table between runs.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use liner_core::config::LinerConfig;
use liner_core::validation::Validation;

fn main() -> ExitCode {
    let cache = std::env::var_os("LINER_ACCEPTANCE_CACHE").map(PathBuf::from);
    let start = Instant::now();
    let v = match Validation::prepare(LinerConfig::dc006star(), true, cache.as_deref(), false) {
        Ok(v) => v,
        Err(e) => {
            println!("acceptance: k_R table could not be prepared: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!(
        "acceptance: k_R table with {} rows ({} solved, {} reused) in {:.0?}, S = {}",
        v.kr.len(),
        v.fill.solved,
        v.fill.reused,
        start.elapsed(),
        v.settings.s_list_label()
    );
    let mut failed = Vec::new();
    for id in 1..=16 {
        let t = Instant::now();
        let c = v.run(id);
        println!("{} [{:.1?}]", c.line(), t.elapsed());
        if !c.passed {
            failed.push(id);
        }
    }
    println!("acceptance: {} of 16 criteria passed; failed: {failed:?}", 16 - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
