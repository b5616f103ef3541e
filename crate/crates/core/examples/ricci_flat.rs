//! Ricci-flat certificates for Cayley graphs of abelian groups, and the
//! dimension `D/C_ψ` they imply.
//!
//! `cargo run --example ricci_flat`

use psilab::graph::cayley_abelian;
use psilab::ricci_flat::{
    eta_permutation_check, is_ricci_flat, ricci_flat_cdpsi_dimension, DEFAULT_NODE_LIMIT,
};
use psilab::{Graph, PsiSpec};

fn main() -> psilab::Result<()> {
    let graphs = [
        ("Z5 ± {1}", cayley_abelian(&[5], &[vec![1]])?),
        ("Z8 ± {1, 3}", cayley_abelian(&[8], &[vec![1], vec![3]])?),
        ("Z3 × Z4", cayley_abelian(&[3, 4], &[vec![1, 0], vec![0, 1]])?),
        ("Q3", Graph::hypercube(3)?),
        ("P3", Graph::path(3)?),
        ("star", Graph::star(3)?),
    ];
    for (name, g) in &graphs {
        let cert = is_ricci_flat(g, DEFAULT_NODE_LIMIT);
        let perm_ok = cert
            .per_vertex
            .iter()
            .filter_map(|o| o.maps())
            .all(|m| eta_permutation_check(g, m, 10, 0).holds);
        print!("{name:>12}: ricci_flat = {}, D = {:?}, nodes = {}", cert.ricci_flat, cert.degree, cert.total_nodes);
        if let Some(d) = cert.degree {
            let dim = ricci_flat_cdpsi_dimension(d, &PsiSpec::log())?;
            print!(", permutations ok = {perm_ok}, CDlog dimension {dim:.4}");
        }
        println!();
    }
    Ok(())
}
