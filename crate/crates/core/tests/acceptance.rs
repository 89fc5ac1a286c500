//! Release gate: runs every verification criterion at full scale and prints
//! one pass/fail line per criterion.
//!
//! Scale can be lowered for quick iteration with
//! `VORTEXPIN_ACCEPT_SCALE=desk cargo test --test acceptance -- --nocapture`.

use vortexpin::acceptance::{run_all, Scale};

#[test]
fn acceptance_criteria() {
    let scale = std::env::var("VORTEXPIN_ACCEPT_SCALE")
        .ok()
        .and_then(|s| Scale::parse(&s))
        .unwrap_or(Scale::Full);
    let outcomes = run_all(scale);
    let mut failed = Vec::new();
    for c in &outcomes {
        let status = if c.passed { "PASS" } else { "FAIL" };
        println!("[{status}] criterion {:2} ({:.1} s): {} — {}", c.index, c.seconds, c.name, c.details);
        if !c.passed {
            failed.push(c.index);
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
