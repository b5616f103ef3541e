//! Harnack constants `H_ψ` and curvature constants `C_ψ` for the built-in ψ.
//!
//! `cargo run --example constants`

use psilab::constants::{c_log_one_dimensional, constants_report, constants_table, DEFAULT_TOL};
use psilab::PsiSpec;

fn main() -> psilab::Result<()> {
    print!("{}", constants_table(DEFAULT_TOL)?);

    for sel in ["log", "sqrt", "power:0.25", "power:0.75"] {
        let r = constants_report(&PsiSpec::parse(sel)?, DEFAULT_TOL)?;
        let h = r.harnack.value().map_or("inf".into(), |h| format!("{h:.6}"));
        println!("{sel:>11}: H = {h}, C = {:.6} at {:?}", r.c_psi.value, r.c_psi.minimizer);
    }

    let (c, z) = c_log_one_dimensional(DEFAULT_TOL);
    println!("diagonal oracle for C_log: {c:.10} at x = y = {:.6}", z.sqrt());
    Ok(())
}
