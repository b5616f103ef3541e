//! Sampling-based falsification of CDψ(d,0), `Γ₂^ψ(f) ≥ (1/d)(Δ^ψ f)²`, and
//! an empirical estimate of the best `d`.
//!
//! No finite certificate exists for general ψ, so a clean report means "no
//! counterexample within the budget", never "holds". At a vertex `x` both
//! sides only see `ball(x, 2)` and are invariant under `f ↦ rf`, so sampling
//! `f` on that ball with `f(x) = 1` loses nothing.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamma::cd_dimension;
use crate::graph::Graph;
use crate::psi::{PsiSpec, DOMAIN_MAX};
use crate::psi_ops::psi_pair_at;

/// Margin below which a sample counts as a violation.
pub const VIOLATION_TOL: f64 = 1e-9;
/// `Γ₂^ψ` above this makes the ratio `(Δ^ψ f)²/Γ₂^ψ(f)` well defined.
pub const GAMMA2_FLOOR: f64 = 1e-12;
const SIGMAS: [f64; 3] = [0.25, 1.0, 3.0];
const STEP_START: f64 = 0.5;
const STEP_END: f64 = 1e-4;
const MAX_PASSES: usize = 200;

/// `|log f|` stays below half the log of the domain window, so every ratio
/// `f(w)/f(v)` on the ball stays inside it.
fn log_clamp() -> f64 {
    0.5 * DOMAIN_MAX.ln()
}

/// The ratio used for the best-dimension estimate. A sample with vanishing or
/// negative `Γ₂^ψ` but nonzero `Δ^ψ` (or with clearly negative `Γ₂^ψ`) rules
/// out every finite `d` and counts as `+∞`.
pub fn cd_ratio(lpsi: f64, g2: f64) -> Option<f64> {
    let num = lpsi * lpsi;
    if g2 > GAMMA2_FLOOR {
        Some(num / g2)
    } else if g2 < -VIOLATION_TOL || num > GAMMA2_FLOOR {
        Some(f64::INFINITY)
    } else {
        None
    }
}

/// A positive function given on `ball(x, 2)`; it is 1 everywhere else.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalFunction {
    /// Serialized as a vertex → value map.
    #[serde(serialize_with = "as_vertex_map")]
    pub values: Vec<(usize, f64)>,
}

fn as_vertex_map<S: serde::Serializer>(values: &[(usize, f64)], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(values.iter().map(|(v, x)| (v.to_string(), x)))
}

impl LocalFunction {
    pub fn to_full(&self, n: usize) -> Vec<f64> {
        let mut f = vec![1.0; n];
        for &(v, x) in &self.values {
            f[v] = x;
        }
        f
    }
}

/// `(Δ^ψ f(x), Γ₂^ψ(f)(x))` for a witness, recomputed from scratch.
pub fn evaluate_at(g: &Graph, psi: &PsiSpec, x: usize, f: &LocalFunction) -> (f64, f64) {
    psi_pair_at(g, psi, &f.to_full(g.vertex_count()), x)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginWitness {
    /// `Γ₂^ψ(f)(x) − (1/d)(Δ^ψ f(x))²`.
    pub margin: f64,
    pub f: LocalFunction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexSearch {
    pub vertex: usize,
    /// Largest `(Δ^ψ f(x))²/Γ₂^ψ(f)(x)` seen; `None` if no admissible sample.
    pub best_ratio: Option<f64>,
    pub ratio_witness: Option<LocalFunction>,
    /// Smallest margin for the requested `d`, if one was given.
    pub worst_margin: Option<MarginWitness>,
    pub evaluations: u64,
}

struct VertexSearcher<'a> {
    g: &'a Graph,
    psi: &'a PsiSpec,
    x: usize,
    coords: Vec<usize>,
    d: Option<f64>,
    work: Vec<f64>,
    best_ratio: Option<f64>,
    ratio_witness: Option<Vec<f64>>,
    worst_margin: Option<(f64, Vec<f64>)>,
    evaluations: u64,
}

impl VertexSearcher<'_> {
    /// Log-values on `coords` → ratio; also updates the running records.
    fn evaluate(&mut self, logs: &[f64]) -> Option<f64> {
        for (&v, &l) in self.coords.iter().zip(logs) {
            self.work[v] = l.exp();
        }
        let (lpsi, g2) = psi_pair_at(self.g, self.psi, &self.work, self.x);
        self.evaluations += 1;
        if let Some(d) = self.d {
            let margin = g2 - lpsi * lpsi / d;
            if self.worst_margin.as_ref().is_none_or(|(m, _)| margin < *m) {
                self.worst_margin = Some((margin, logs.to_vec()));
            }
        }
        let ratio = cd_ratio(lpsi, g2);
        if let Some(r) = ratio {
            if self.best_ratio.is_none_or(|b| r > b) {
                self.best_ratio = Some(r);
                self.ratio_witness = Some(logs.to_vec());
            }
        }
        ratio
    }

    /// Coordinate search with multiplicative steps `e^{±h}`; the first
    /// improving coordinate in ball order wins.
    fn refine(&mut self, mut logs: Vec<f64>, mut current: f64) {
        let clamp = log_clamp();
        let mut h = STEP_START;
        while h >= STEP_END && current.is_finite() {
            for _ in 0..MAX_PASSES {
                let mut improved = false;
                for c in 0..logs.len() {
                    if self.coords[c] == self.x {
                        continue;
                    }
                    for sign in [1.0, -1.0] {
                        let old = logs[c];
                        logs[c] = (old + sign * h).clamp(-clamp, clamp);
                        match self.evaluate(&logs) {
                            Some(r) if r > current => {
                                current = r;
                                improved = true;
                                break;
                            }
                            _ => logs[c] = old,
                        }
                    }
                }
                if !improved || !current.is_finite() {
                    break;
                }
            }
            h *= 0.5;
        }
    }

    fn local(&self, logs: &[f64]) -> LocalFunction {
        LocalFunction {
            values: self.coords.iter().zip(logs).map(|(&v, &l)| (v, l.exp())).collect(),
        }
    }
}

fn search_vertex(
    g: &Graph,
    psi: &PsiSpec,
    x: usize,
    d: Option<f64>,
    budget: u64,
    seed: u64,
) -> VertexSearch {
    let coords: Vec<usize> = g.ball(x, 2).as_slice().to_vec();
    let mut s = VertexSearcher {
        g,
        psi,
        x,
        coords,
        d,
        work: vec![1.0; g.vertex_count()],
        best_ratio: None,
        ratio_witness: None,
        worst_margin: None,
        evaluations: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(x as u64);
    let clamp = log_clamp();
    let normals: Vec<Normal<f64>> = SIGMAS.iter().map(|&s| Normal::new(0.0, s).expect("valid sigma")).collect();
    let mut raw_record = f64::NEG_INFINITY;
    for k in 0..budget {
        let dist = &normals[(k % SIGMAS.len() as u64) as usize];
        let logs: Vec<f64> = s
            .coords
            .iter()
            .map(|&v| if v == x { 0.0 } else { dist.sample(&mut rng).clamp(-clamp, clamp) })
            .collect();
        if let Some(r) = s.evaluate(&logs) {
            if r > raw_record {
                raw_record = r;
                s.refine(logs, r);
            }
        }
    }
    VertexSearch {
        vertex: x,
        best_ratio: s.best_ratio,
        ratio_witness: s.ratio_witness.as_deref().map(|l| s.local(l)),
        worst_margin: s
            .worst_margin
            .as_ref()
            .map(|(m, l)| MarginWitness { margin: *m, f: s.local(l) }),
        evaluations: s.evaluations,
    }
}

fn search_all(g: &Graph, psi: &PsiSpec, d: Option<f64>, budget: u64, seed: u64) -> Result<Vec<VertexSearch>> {
    if budget == 0 {
        return Err(Error::InvalidParameter("sample budget must be positive".into()));
    }
    psi.require_concave()?;
    Ok(g.vertices()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&x| search_vertex(g, psi, x, d, budget, seed))
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CdPsiVerdict {
    Violated { vertex: usize, margin: f64, witness: LocalFunction },
    NoCounterexampleFound { budget: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdPsiReport {
    pub psi: String,
    pub d: f64,
    pub budget: u64,
    pub seed: u64,
    pub per_vertex: Vec<VertexSearch>,
    pub verdict: CdPsiVerdict,
}

impl CdPsiReport {
    pub fn violated(&self) -> bool {
        matches!(self.verdict, CdPsiVerdict::Violated { .. })
    }
}

/// Searches every vertex for `f` with `Γ₂^ψ(f)(x) − (1/d)(Δ^ψ f(x))² < −1e-9`.
pub fn cdpsi_check(g: &Graph, psi: &PsiSpec, d: f64, budget: u64, seed: u64) -> Result<CdPsiReport> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter(format!("dimension must be positive, got {d}")));
    }
    let per_vertex = search_all(g, psi, Some(d), budget, seed)?;
    let worst = per_vertex
        .iter()
        .filter_map(|s| s.worst_margin.as_ref().map(|m| (s.vertex, m)))
        .min_by(|a, b| a.1.margin.total_cmp(&b.1.margin));
    let verdict = match worst {
        Some((vertex, m)) if m.margin < -VIOLATION_TOL => CdPsiVerdict::Violated {
            vertex,
            margin: m.margin,
            witness: m.f.clone(),
        },
        _ => CdPsiVerdict::NoCounterexampleFound { budget },
    };
    Ok(CdPsiReport {
        psi: psi.name().to_string(),
        d,
        budget,
        seed,
        per_vertex,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestDimension {
    pub psi: String,
    pub budget: u64,
    pub seed: u64,
    pub per_vertex: Vec<VertexSearch>,
    /// Max over vertices; `+∞` if some sample rules out every `d`.
    pub graph_value: Option<f64>,
}

/// Empirical `sup (Δ^ψ f(x))²/Γ₂^ψ(f)(x)` per vertex. Never decreases when the
/// budget grows with the same seed.
pub fn cdpsi_best_dimension(g: &Graph, psi: &PsiSpec, budget: u64, seed: u64) -> Result<BestDimension> {
    let per_vertex = search_all(g, psi, None, budget, seed)?;
    let graph_value = per_vertex
        .iter()
        .filter_map(|s| s.best_ratio)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    Ok(BestDimension {
        psi: psi.name().to_string(),
        budget,
        seed,
        per_vertex,
        graph_value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryRow {
    pub vertex: usize,
    /// Exact classical CD(d,0) constant; `None` if CD fails at this vertex.
    pub exact: Option<f64>,
    pub empirical: Option<f64>,
    /// `−ψ''(1)/ψ'(1)² · empirical`.
    pub mapped: Option<f64>,
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorollaryReport {
    pub psi: String,
    pub factor: f64,
    pub slack: f64,
    pub rows: Vec<CorollaryRow>,
    pub consistent: bool,
}

/// Checks that CDψ(d,0) evidence maps to a classical CD(−ψ''(1)/ψ'(1)²·d, 0)
/// that the exact constant respects: `exact ≤ factor·empirical + slack`.
pub fn cd_corollary_check(
    g: &Graph,
    psi: &PsiSpec,
    budget: u64,
    seed: u64,
    slack: f64,
) -> Result<CorollaryReport> {
    let slope = psi.d1(1.0);
    if slope == 0.0 {
        return Err(Error::InvalidPsi(format!("{psi} has psi'(1) = 0")));
    }
    let factor = -psi.d2(1.0) / (slope * slope);
    let best = cdpsi_best_dimension(g, psi, budget, seed)?;
    let rows: Vec<CorollaryRow> = best
        .per_vertex
        .iter()
        .map(|s| {
            let exact = cd_dimension(g, s.vertex).value();
            let mapped = s.best_ratio.map(|r| factor * r);
            let consistent = match (exact, mapped) {
                (Some(e), Some(m)) => e <= m + slack,
                (_, Some(m)) => m.is_infinite(),
                (Some(e), None) => e <= slack,
                (None, None) => false,
            };
            CorollaryRow {
                vertex: s.vertex,
                exact,
                empirical: s.best_ratio,
                mapped,
                consistent,
            }
        })
        .collect();
    Ok(CorollaryReport {
        psi: psi.name().to_string(),
        factor,
        slack,
        consistent: rows.iter().all(|r| r.consistent),
        rows,
    })
}
