//! One PASS/FAIL line per end-to-end criterion. Run with
//! `cargo test --release --test acceptance -- --nocapture` to see the lines.

use psilab::suite::{SuiteOptions, CRITERIA};

#[test]
fn acceptance_criteria() {
    let opts = SuiteOptions::default();
    let mut failed = Vec::new();
    for criterion in CRITERIA {
        let result = criterion(&opts).expect("criterion ran");
        println!("{}", result.line());
        if !result.passed {
            failed.push(result.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn tampered_c_log_fails_downstream() {
    let opts = SuiteOptions { c_log_override: Some(0.9), ..Default::default() };
    let c1 = psilab::suite::criterion_constants(&opts).unwrap();
    println!("{}", c1.line());
    assert!(!c1.passed);
}
