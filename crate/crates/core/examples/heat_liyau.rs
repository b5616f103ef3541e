//! Heat flow on C12 with a spike as initial data, then the Li-Yau estimate
//! `−Δ^ψ u ≤ d/(2t)` with `d = 2/C_log`, and its semigroup form.
//!
//! `cargo run --example heat_liyau`

use psilab::constants::{c_psi, DEFAULT_TOL};
use psilab::heat::{default_time_grid, liyau_check, semigroup_inequality_check, solve_heat};
use psilab::{Graph, PsiSpec};

fn main() -> psilab::Result<()> {
    let g = Graph::cycle(12)?;
    let mut f0 = vec![1e-3; 12];
    f0[0] = 10.0;

    let u = solve_heat(&g, &f0, &[0.0, 0.1, 1.0, 10.0])?;
    for (t, row) in u.times.iter().zip(&u.values) {
        println!("t = {t:>5}: u(0) = {:.5}, u(6) = {:.5}, mass = {:.5}", row[0], row[6], row.iter().sum::<f64>());
    }

    let psi = PsiSpec::log();
    let d = 2.0 / c_psi(&psi, DEFAULT_TOL).value;
    let times = default_time_grid();
    let ly = liyau_check(&g, &psi, &f0, d, &times)?;
    println!("\nLi-Yau with d = {d:.4}: holds = {}, worst {:?}", ly.holds, ly.worst);
    let sg = semigroup_inequality_check(&g, &psi, &f0, &times, d)?;
    println!("semigroup form:          holds = {}, worst {:?}", sg.holds, sg.worst);

    let too_small = liyau_check(&g, &psi, &f0, 0.2, &times)?;
    println!("Li-Yau with d = 0.2:     holds = {}, worst {:?}", too_small.holds, too_small.worst);
    Ok(())
}
