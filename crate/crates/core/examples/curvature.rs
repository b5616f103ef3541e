//! Exact Bakry-Émery dimension `d_min(x)` such that CD(d,0) holds at `x`.
//!
//! `cargo run --example curvature`

use psilab::gamma::{graph_cd_dimension, CdDimension};
use psilab::Graph;

fn main() -> psilab::Result<()> {
    for name in ["k2", "cycle6", "torus3x3", "hypercube3", "complete4", "path3", "star3"] {
        let g = Graph::named(name)?;
        let (per_vertex, graph_value) = graph_cd_dimension(&g);
        let cells: Vec<String> = per_vertex
            .iter()
            .map(|d| match d {
                CdDimension::Finite { d_min } => format!("{d_min:.4}"),
                CdDimension::NegativeForm { .. } => "neg".into(),
                CdDimension::OutsideRange { .. } => "inf".into(),
            })
            .collect();
        println!("{name:>11}: graph {graph_value:?}, per vertex [{}]", cells.join(", "));
    }
    Ok(())
}
