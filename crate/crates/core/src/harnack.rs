//! Harnack inequalities from ψ-gradient estimates, in log form.
//!
//! If `D₁Γ^ψ(u) − ∂_t log u ≤ D₂/t + D₃` along a positive heat solution, then
//!
//! ```text
//! log u(x₁,T₁) − log u(x₂,T₂) ≤ D₂ log(T₂/T₁) + D₃(T₂−T₁) + H_ψ d(x₁,x₂)²/(D₁(T₂−T₁)).
//! ```
//!
//! The distance enters squared. The squared form is the one the argument
//! actually produces (it optimizes a path of length `d` over `d` time slices).

use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{c_psi, harnack_constant, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::gamma::laplacian;
use crate::graph::Graph;
use crate::heat::{HeatSolution, MARGIN_TOL};
use crate::psi::PsiSpec;
use crate::psi_ops::{gamma_psi, validate_positive};

/// Gradient-estimate coefficients `D₁, D₂, D₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coefficients {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl Coefficients {
    pub fn new(d1: f64, d2: f64, d3: f64) -> Result<Self> {
        if !(d1 > 0.0 && d1.is_finite()) || !d2.is_finite() || !d3.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "need D1 > 0 and finite D2, D3 (got {d1}, {d2}, {d3})"
            )));
        }
        Ok(Coefficients { d1, d2, d3 })
    }

    /// Coefficients equivalent to `−Δ^ψu ≤ d/(2t)`: since
    /// `−Δ^ψu = Γ^ψ(u) − ψ'(1)∂_t log u`, divide by `ψ'(1)`.
    pub fn from_liyau(psi: &PsiSpec, d: f64) -> Result<Self> {
        let slope = psi.d1(1.0);
        if slope <= 0.0 {
            return Err(Error::InvalidPsi(format!("{psi} needs psi'(1) > 0")));
        }
        Self::new(1.0 / slope, d / (2.0 * slope), 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HarnackParams {
    pub coefficients: Coefficients,
    pub h_psi: f64,
    pub distance: usize,
    pub t1: f64,
    pub t2: f64,
}

impl HarnackParams {
    pub fn new(
        coefficients: Coefficients,
        h_psi: f64,
        distance: Option<usize>,
        t1: f64,
        t2: f64,
    ) -> Result<Self> {
        let distance = distance.ok_or_else(|| {
            Error::InvalidParameter("vertices lie in different components".into())
        })?;
        if !(t1 > 0.0 && t2 > t1 && t2.is_finite()) {
            return Err(Error::InvalidParameter(format!("need 0 < T1 < T2, got {t1}, {t2}")));
        }
        if !(h_psi >= 0.0 && h_psi.is_finite()) {
            return Err(Error::InvalidParameter(format!("H_psi must be finite, got {h_psi}")));
        }
        Ok(HarnackParams {
            coefficients,
            h_psi,
            distance,
            t1,
            t2,
        })
    }
}

/// Upper bound on `log u(x₁,T₁) − log u(x₂,T₂)`.
pub fn harnack_bound(p: &HarnackParams) -> f64 {
    let Coefficients { d1, d2, d3 } = p.coefficients;
    let gap = p.t2 - p.t1;
    let dist = p.distance as f64;
    d2 * (p.t2 / p.t1).ln() + d3 * gap + p.h_psi * dist * dist / (d1 * gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientWitness {
    pub vertex: usize,
    pub time: f64,
    /// `D₁Γ^ψ(u) − Δu/u − D₂/t − D₃`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientEstimateReport {
    pub coefficients: Coefficients,
    pub worst: Option<GradientWitness>,
    pub holds: bool,
}

/// Checks the gradient estimate at every vertex and every grid time `t > 0`,
/// using `∂_t log u = Δu/u`.
pub fn gradient_estimate_check(
    g: &Graph,
    psi: &PsiSpec,
    u: &HeatSolution,
    c: Coefficients,
) -> Result<GradientEstimateReport> {
    let mut worst: Option<GradientWitness> = None;
    for (k, &t) in u.times.iter().enumerate() {
        if t <= 0.0 {
            continue;
        }
        let ut = &u.values[k];
        let gp = gamma_psi(g, psi, ut)?;
        let lu = laplacian(g, ut);
        for v in g.vertices() {
            let margin = c.d1 * gp[v] - lu[v] / ut[v] - c.d2 / t - c.d3;
            if worst.is_none_or(|w| margin > w.margin) {
                worst = Some(GradientWitness { vertex: v, time: t, margin });
            }
        }
    }
    Ok(GradientEstimateReport {
        coefficients: c,
        holds: worst.is_none_or(|w| w.margin <= MARGIN_TOL),
        worst,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairSlack {
    pub x1: usize,
    pub x2: usize,
    pub t1: f64,
    pub t2: f64,
    /// Bound minus `log u(x₁,T₁) − log u(x₂,T₂)`.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarnackReport {
    pub coefficients: Coefficients,
    pub h_psi: f64,
    pub pairs_checked: u64,
    pub violations: u64,
    pub tightest: Option<PairSlack>,
    /// Tightest time pair for each ordered vertex pair.
    pub per_pair: Vec<PairSlack>,
    pub holds: bool,
}

impl HarnackReport {
    pub fn slack_csv(&self) -> String {
        let mut out = String::from("x1,x2,t1,t2,slack\n");
        for p in &self.per_pair {
            out += &format!("{},{},{:.11e},{:.11e},{:.11e}\n", p.x1, p.x2, p.t1, p.t2, p.slack);
        }
        out
    }
}

/// Compares `log u(x₁,T₁) − log u(x₂,T₂)` against [`harnack_bound`] for all
/// vertex pairs and all grid times `0 < T₁ < T₂`.
pub fn harnack_check(g: &Graph, u: &HeatSolution, c: Coefficients, h_psi: f64) -> Result<HarnackReport> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let dist = g.distance_matrix();
    let times: Vec<(f64, Vec<f64>)> = u
        .times
        .iter()
        .zip(&u.values)
        .filter(|(t, _)| **t > 0.0)
        .map(|(&t, col)| (t, col.iter().map(|x| x.ln()).collect()))
        .collect();
    let n = g.vertex_count();
    let per_source: Vec<(Vec<PairSlack>, u64, u64)> = (0..n)
        .into_par_iter()
        .map(|x1| {
            let mut rows = Vec::with_capacity(n);
            let (mut checked, mut violations) = (0u64, 0u64);
            for x2 in 0..n {
                let mut tight: Option<PairSlack> = None;
                for (a, (t1, l1)) in times.iter().enumerate() {
                    for (t2, l2) in &times[a + 1..] {
                        let p = HarnackParams::new(c, h_psi, dist[x1][x2], *t1, *t2)?;
                        let slack = harnack_bound(&p) - (l1[x1] - l2[x2]);
                        checked += 1;
                        if slack < -MARGIN_TOL {
                            violations += 1;
                        }
                        if tight.is_none_or(|s| slack < s.slack) {
                            tight = Some(PairSlack { x1, x2, t1: *t1, t2: *t2, slack });
                        }
                    }
                }
                rows.extend(tight);
            }
            Ok((rows, checked, violations))
        })
        .collect::<Result<_>>()?;
    let mut per_pair = Vec::new();
    let (mut pairs_checked, mut violations) = (0, 0);
    for (rows, c, v) in per_source {
        per_pair.extend(rows);
        pairs_checked += c;
        violations += v;
    }
    let tightest = per_pair.iter().copied().min_by(|a, b| a.slack.total_cmp(&b.slack));
    Ok(HarnackReport {
        coefficients: c,
        h_psi,
        pairs_checked,
        violations,
        tightest,
        per_pair,
        holds: violations == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeWitness {
    pub v: usize,
    pub w: usize,
    /// `log(f(w)/f(v)) − √H_ψ·√Γ^ψ(f)(v)`.
    pub margin: f64,
}

/// Checks `log(f(w)/f(v)) ≤ √H_ψ √Γ^ψ(f)(v)` on every ordered edge.
pub fn edge_estimate_check(g: &Graph, psi: &PsiSpec, f: &[f64], h_psi: f64) -> Result<Option<EdgeWitness>> {
    validate_positive(g, f)?;
    let gp = gamma_psi(g, psi, f)?;
    let root_h = h_psi.sqrt();
    let mut worst: Option<EdgeWitness> = None;
    for v in g.vertices() {
        let rhs = root_h * gp[v].max(0.0).sqrt();
        for &w in g.neighbors(v) {
            let margin = (f[w] / f[v]).ln() - rhs;
            if worst.is_none_or(|x| margin > x.margin) {
                worst = Some(EdgeWitness { v, w, margin });
            }
        }
    }
    Ok(worst)
}

/// `log u(x,T₁)/u(y,T₂) ≤ D/(2C_ψ)·log(T₂/T₁) + H_ψ d²/(T₂−T₁)` on a
/// D-Ricci-flat graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RicciFlatHarnack {
    pub degree: usize,
    pub c_psi: f64,
    pub h_psi: f64,
    /// `D/(2C_ψ)`.
    pub log_coefficient: f64,
    pub bound: f64,
}

pub fn ricci_flat_harnack_bound_with(
    degree: usize,
    c: f64,
    h_psi: f64,
    distance: usize,
    t1: f64,
    t2: f64,
) -> Result<RicciFlatHarnack> {
    if c <= 1e-9 {
        return Err(Error::DegenerateConstant(c));
    }
    let log_coefficient = degree as f64 / (2.0 * c);
    let p = HarnackParams::new(Coefficients::new(1.0, log_coefficient, 0.0)?, h_psi, Some(distance), t1, t2)?;
    Ok(RicciFlatHarnack {
        degree,
        c_psi: c,
        h_psi,
        log_coefficient,
        bound: harnack_bound(&p),
    })
}

/// Same bound with `C_ψ` and `H_ψ` computed numerically.
pub fn ricci_flat_harnack_bound(
    degree: usize,
    psi: &PsiSpec,
    distance: usize,
    t1: f64,
    t2: f64,
) -> Result<RicciFlatHarnack> {
    let h = harnack_constant(psi, DEFAULT_TOL)?
        .value()
        .ok_or_else(|| Error::InvalidPsi(format!("H_psi is infinite for {psi}")))?;
    ricci_flat_harnack_bound_with(degree, c_psi(psi, DEFAULT_TOL).value, h, distance, t1, t2)
}

/// The earlier bound `D log(T₂/T₁) + 4d²/(T₂−T₁)` for comparison.
pub fn prior_harnack_bound(degree: usize, distance: usize, t1: f64, t2: f64) -> Result<f64> {
    let p = HarnackParams::new(Coefficients::new(1.0, degree as f64, 0.0)?, 4.0, Some(distance), t1, t2)?;
    Ok(harnack_bound(&p))
}
