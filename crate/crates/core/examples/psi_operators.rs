//! ψ-Laplacian, ψ-gradient and ψ-curvature operators of a positive function,
//! next to the classical Γ-calculus.
//!
//! `cargo run --example psi_operators`

use psilab::gamma::{gamma, gamma2, laplacian};
use psilab::psi_ops::{gamma2_psi, gamma_psi, limit_probe, omega_psi, psi_laplacian};
use psilab::{Graph, PsiSpec};

fn main() -> psilab::Result<()> {
    let g = Graph::cycle(6)?;
    let f = [1.0, 2.0, 0.5, 1.5, 3.0, 0.8];

    println!("Δf   = {:?}", laplacian(&g, &f).as_ref());
    println!("Γf   = {:?}", gamma(&g, &f, &f).as_ref());
    println!("Γ₂f  = {:?}", gamma2(&g, &f, &f).as_ref());

    for psi in [PsiSpec::log(), PsiSpec::sqrt()] {
        println!("\npsi = {psi}");
        println!("  Δ^ψ f  = {:?}", psi_laplacian(&g, &psi, &f)?.as_ref());
        println!("  Γ^ψ f  = {:?}", gamma_psi(&g, &psi, &f)?.as_ref());
        println!("  Ω^ψ f  = {:?}", omega_psi(&g, &psi, &f)?.as_ref());
        println!("  Γ₂^ψ f = {:?}", gamma2_psi(&g, &psi, &f)?.as_ref());
    }

    // For f = 1 + εh the ψ-operators approach ψ'(1)Δh, −ψ''(1)Γh, −ψ''(1)Γ₂h.
    let h = [0.3, -0.1, 0.7, -0.4, 0.2, 0.0];
    let psi = PsiSpec::log();
    for eps in [1e-2, 1e-3] {
        let p = limit_probe(&g, &psi, &h, eps)?;
        println!("\nε = {eps}: Γ₂ probe {:?}", p.gamma2.as_ref());
    }
    println!("limit      {:?}", gamma2(&g, &h, &h).as_ref());
    Ok(())
}
