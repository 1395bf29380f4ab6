//! End-to-end acceptance gate: runs the built-in verification suite and
//! prints one pass/fail line per criterion. Run with --nocapture to see the
//! lines even on success.

use twpa::checks::run_all;

#[test]
fn acceptance_criteria() {
    let outcomes = run_all();
    let mut all_ok = true;
    for (i, o) in outcomes.iter().enumerate() {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {:2} [{status}] {}: {}", i + 1, o.name, o.detail);
        all_ok &= o.passed;
    }
    assert!(all_ok, "one or more acceptance criteria failed");
}
