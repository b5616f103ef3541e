//! Runs every end-to-end criterion and prints one line per criterion.
//!
//! `cargo run --release --example acceptance_suite`

use psilab::suite::{paper_suite, SuiteOptions};

fn main() -> psilab::Result<()> {
    let report = paper_suite(&SuiteOptions::default())?;
    for c in &report.criteria {
        println!("{}", c.line());
    }

    let tampered = SuiteOptions { c_log_override: Some(0.9), ..Default::default() };
    let c1 = psilab::suite::criterion_constants(&tampered)?;
    println!("\nwith C_log forced to 0.9:\n{}", c1.line());
    std::process::exit(if report.all_passed { 0 } else { 1 });
}
