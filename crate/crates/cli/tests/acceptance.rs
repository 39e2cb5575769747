//! Criteria 1 to 13 at their stated tolerances, one line each.

use std::io::Write;

use logconc_cli::acceptance::{run_acceptance, ACCEPTANCE_SEED};

#[test]
fn acceptance_suite() {
    let rep = run_acceptance(ACCEPTANCE_SEED).expect("suite runs");
    // Straight to the stdout handle so the lines survive output capture.
    let mut out = std::io::stdout().lock();
    writeln!(out).unwrap();
    for c in &rep.checks {
        writeln!(out, "{} ... {} ({})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail).unwrap();
    }
    for (label, secs) in rep.runtimes() {
        writeln!(out, "  {label}: {secs:.1}s").unwrap();
    }
    drop(out);
    assert_eq!(rep.checks.len(), 13);
    let failed: Vec<&str> = rep.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
