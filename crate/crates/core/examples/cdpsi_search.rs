//! Randomized multistart search for CDψ(d,0) counterexamples, and the
//! empirical best dimension compared with the exact classical one.
//!
//! `cargo run --release --example cdpsi_search`

use psilab::cd_verifier::{cd_corollary_check, cdpsi_best_dimension, cdpsi_check, CdPsiVerdict};
use psilab::constants::{c_psi, DEFAULT_TOL};
use psilab::{Graph, PsiSpec};

fn main() -> psilab::Result<()> {
    let psi = PsiSpec::log();
    let c = c_psi(&psi, DEFAULT_TOL).value;
    let g = Graph::cycle(6)?;

    for d in [2.0 / c, 0.1] {
        match cdpsi_check(&g, &psi, d, 2_000, 0)?.verdict {
            CdPsiVerdict::Violated { vertex, margin, witness } => {
                println!("d = {d:.4}: violated at {vertex}, margin {margin:.3e}, f = {:?}", witness.values)
            }
            CdPsiVerdict::NoCounterexampleFound { budget } => {
                println!("d = {d:.4}: no counterexample in {budget} samples per vertex")
            }
        }
    }

    let best = cdpsi_best_dimension(&Graph::hypercube(3)?, &psi, 2_000, 0)?;
    println!("Q3 empirical CDψ dimension {:?}, bound 3/C_log = {:.5}", best.graph_value, 3.0 / c);

    let rep = cd_corollary_check(&g, &psi, 2_000, 0, 0.05)?;
    for row in &rep.rows {
        println!("C6 vertex {}: exact {:?} ≤ mapped {:?}", row.vertex, row.exact, row.mapped);
    }
    Ok(())
}
