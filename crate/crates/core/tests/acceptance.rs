//! One line per acceptance criterion, at the full parameter sizes.
//!
//! Set `MATHIEU_ACCEPTANCE_PROFILE=quick` for the reduced sizes. Runs
//! without the libtest harness so the lines always show.

use std::process::ExitCode;

use mathieu_core::verify::{run_check, CheckKind, Mutation, Profile, CHECK_IDS};

const SEED: u64 = 20240607;

fn main() -> ExitCode {
    let profile = match std::env::var("MATHIEU_ACCEPTANCE_PROFILE").as_deref() {
        Ok("quick") => Profile::Quick,
        _ => Profile::Full,
    };
    println!("acceptance: profile {profile:?}, seed {SEED}");
    let mut failed = Vec::new();
    for id in CHECK_IDS {
        let line = match run_check(id, profile, SEED, Mutation::None) {
            Ok(r) => {
                let tag = match (r.passed, r.kind) {
                    (true, _) => "PASS",
                    (false, CheckKind::Hard) => "FAIL",
                    (false, CheckKind::Statistical) => "MISS",
                };
                if !r.passed {
                    failed.push(id);
                }
                format!(
                    "[{tag}] criterion {:>2} {:<32} metric {:<12.4e} tol {:<10.3e} {:>7.2}s  {}",
                    r.id, r.name, r.metric, r.tolerance, r.seconds, r.detail
                )
            }
            Err(e) => {
                failed.push(id);
                format!("[FAIL] criterion {id:>2} error: {e}")
            }
        };
        println!("{line}");
    }
    if failed.is_empty() {
        println!("acceptance: 12/12 passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {failed:?}");
        ExitCode::FAILURE
    }
}
