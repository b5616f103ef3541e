//! Gradient estimate ⇒ Harnack inequality along a heat solution on the 3×3
//! torus, and the Ricci-flat Harnack bound against the earlier one.
//!
//! `cargo run --example harnack`

use psilab::constants::{c_psi, harnack_constant, DEFAULT_TOL};
use psilab::harnack::{
    gradient_estimate_check, harnack_check, prior_harnack_bound, ricci_flat_harnack_bound,
    Coefficients,
};
use psilab::heat::{default_time_grid, solve_heat};
use psilab::{Graph, PsiSpec};

fn main() -> psilab::Result<()> {
    let g = Graph::torus(3, 3)?;
    let psi = PsiSpec::log();
    let c = c_psi(&psi, DEFAULT_TOL).value;
    let h = harnack_constant(&psi, DEFAULT_TOL)?.value().expect("H_log is finite");

    let f0: Vec<f64> = (0..9).map(|i| 1.0 + (i * i % 7) as f64).collect();
    let u = solve_heat(&g, &f0, &default_time_grid())?;
    let coeffs = Coefficients::from_liyau(&psi, 4.0 / c)?;
    let grad = gradient_estimate_check(&g, &psi, &u, coeffs)?;
    println!("gradient estimate holds = {}, worst {:?}", grad.holds, grad.worst);
    let rep = harnack_check(&g, &u, coeffs, h)?;
    println!("Harnack: {} pairs, {} violations, tightest {:?}", rep.pairs_checked, rep.violations, rep.tightest);
    println!("{}", rep.slack_csv().lines().take(4).collect::<Vec<_>>().join("\n"));

    for dist in [1, 2] {
        let ours = ricci_flat_harnack_bound(4, &psi, dist, 1.0, 2.0)?;
        let prior = prior_harnack_bound(4, dist, 1.0, 2.0)?;
        println!(
            "D = 4, dist {dist}: log coefficient {:.4} (= {:.4}·D), bound {:.4} vs earlier {:.4}",
            ours.log_coefficient,
            ours.log_coefficient / 4.0,
            ours.bound,
            prior
        );
    }
    Ok(())
}
