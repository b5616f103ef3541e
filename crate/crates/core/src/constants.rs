//! The Harnack constant `H_ψ = sup_{x>1} (log x)²/ψ̄(x)` and the Ricci-flat
//! constant `C_ψ = inf_{x,y>0} ψ̃(x,y)/(ψ(x)+ψ(y)−2ψ(1))²`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::psi::{psi_bar, psi_tilde, PsiSpec};

/// Default relative tolerance for the refinement stages.
pub const DEFAULT_TOL: f64 = 1e-10;

const H_GRID_MIN: f64 = 1e-6;
const H_GRID_MAX: f64 = 50.0;
const H_GRID_POINTS: usize = 4000;

const C_BOX: f64 = 30.0;
const C_GRID_STEP: f64 = 0.25;
const C_SEEDS: usize = 20;
/// Points with `|ψ(x)+ψ(y)−2ψ(1)|` below this are excluded from the ratio.
pub const DENOMINATOR_EXCLUSION: f64 = 1e-9;
/// Radius at which excluded points are replaced by nearby admissible probes.
pub const EXCLUSION_PROBE_RADIUS: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HarnackConstant {
    Finite {
        value: f64,
        /// Sampled lower bound and the reported value.
        bracket: (f64, f64),
        /// `None` when the supremum is the limit `x → 1⁺`.
        maximizer_x: Option<f64>,
        boundary_limit: f64,
    },
    Infinite {
        reason: String,
    },
}

impl HarnackConstant {
    pub fn value(&self) -> Option<f64> {
        match self {
            HarnackConstant::Finite { value, .. } => Some(*value),
            HarnackConstant::Infinite { .. } => None,
        }
    }
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a) > tol * (a.abs() + b.abs()).max(1e-300) {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, a, b)
    } else {
        (d, a, b)
    }
}

/// `H_ψ` via `x = e^s` on a geometric grid in `s`, golden-section refinement
/// and the boundary limit `2/ψ̄''(1) = −2/ψ''(1)`.
pub fn harnack_constant(psi: &PsiSpec, tol: f64) -> Result<HarnackConstant> {
    psi.require_concave()?;
    let bar = psi_bar(psi);
    let curvature = -psi.d2(1.0);
    if curvature <= 0.0 {
        return Ok(HarnackConstant::Infinite {
            reason: "psi''(1) = 0".into(),
        });
    }
    let boundary_limit = 2.0 / curvature;
    let ratio = |s: f64| s * s / bar.at_log(s);

    let ratio_grid = (H_GRID_MAX / H_GRID_MIN).ln() / (H_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..H_GRID_POINTS)
        .map(|k| H_GRID_MIN * (ratio_grid * k as f64).exp())
        .collect();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (k, &s) in grid.iter().enumerate() {
        let b = bar.at_log(s);
        if b <= 0.0 {
            return Ok(HarnackConstant::Infinite {
                reason: format!("psi-bar vanishes at x = {:e}", s.exp()),
            });
        }
        let r = s * s / b;
        if r > best.1 {
            best = (k, r);
        }
    }
    let (k, grid_max) = best;
    if k == 0 || grid_max <= boundary_limit {
        return Ok(HarnackConstant::Finite {
            value: boundary_limit.max(grid_max),
            bracket: (grid_max.min(boundary_limit), boundary_limit.max(grid_max)),
            maximizer_x: None,
            boundary_limit,
        });
    }
    let lo = grid[k - 1];
    let hi = grid[(k + 1).min(grid.len() - 1)];
    let (s_best, a, b) = golden_section_max(ratio, lo, hi, tol.max(1e-15));
    let value = ratio(s_best).max(grid_max);
    Ok(HarnackConstant::Finite {
        value,
        bracket: (ratio(a).min(ratio(b)), value),
        maximizer_x: Some(s_best.exp()),
        boundary_limit,
    })
}

/// A point of the C_ψ search in log coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CPsiPoint {
    pub x: f64,
    pub y: f64,
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CPsiEstimate {
    pub value: f64,
    /// Reported value and the smallest neighbouring value at the final step.
    pub bracket: (f64, f64),
    pub minimizer: CPsiPoint,
    /// Infimum restricted to the diagonal `x = y`.
    pub diagonal_value: Option<f64>,
    /// Infimum restricted to `y = 1/x`, where ψ̃ vanishes.
    pub anti_diagonal_value: Option<f64>,
    /// Smallest ratio seen anywhere during the search.
    pub min_sampled_ratio: f64,
}

impl CPsiEstimate {
    pub fn is_degenerate(&self) -> bool {
        self.value <= 1e-9
    }
}

fn point(psi: &PsiSpec, s: f64, t: f64) -> Option<CPsiPoint> {
    let (x, y) = (s.exp(), t.exp());
    let denominator = psi.value(x) + psi.value(y) - 2.0 * psi.value(1.0);
    let denominator = denominator * denominator;
    if denominator.sqrt() < DENOMINATOR_EXCLUSION || !denominator.is_finite() {
        return None;
    }
    let numerator = psi_tilde_snapped(psi, x, y);
    let ratio = numerator / denominator;
    ratio.is_finite().then_some(CPsiPoint {
        x,
        y,
        numerator,
        denominator,
        ratio,
    })
}

/// `ψ̃(x,y)`, set to exactly zero when it is below its own rounding error.
/// Near `y = 1/x` the denominator is tiny too, and the search would otherwise
/// chase rounding noise in the numerator.
fn psi_tilde_snapped(psi: &PsiSpec, x: f64, y: f64) -> f64 {
    let value = psi_tilde(psi, x, y);
    let scale = (psi.d1(x).abs() + psi.d1(y).abs()) * (1.0 + x * y)
        + x * (psi.value(y).abs() + psi.value(1.0 / x).abs())
        + y * (psi.value(x).abs() + psi.value(1.0 / y).abs());
    if value.abs() <= 8.0 * f64::EPSILON * scale {
        0.0
    } else {
        value
    }
}

/// Evaluates `(s,t)`, or, if excluded, the best admissible probe at radius
/// [`EXCLUSION_PROBE_RADIUS`].
fn point_or_probe(psi: &PsiSpec, s: f64, t: f64) -> Option<(f64, f64, CPsiPoint)> {
    if let Some(p) = point(psi, s, t) {
        return Some((s, t, p));
    }
    let r = EXCLUSION_PROBE_RADIUS;
    [(r, 0.0), (-r, 0.0), (0.0, r), (0.0, -r), (r, r), (-r, -r)]
        .into_iter()
        .filter_map(|(ds, dt)| point(psi, s + ds, t + dt).map(|p| (s + ds, t + dt, p)))
        .min_by(|a, b| a.2.ratio.total_cmp(&b.2.ratio))
}

const DIRECTIONS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (-1.0, 0.0),
    (0.0, 1.0),
    (0.0, -1.0),
    (1.0, 1.0),
    (-1.0, -1.0),
    (1.0, -1.0),
    (-1.0, 1.0),
];

/// Compass search; returns the final point, the final step's best neighbour
/// ratio, and the smallest ratio seen.
fn compass_search(psi: &PsiSpec, s0: f64, t0: f64, p0: CPsiPoint, tol: f64) -> (CPsiPoint, f64, f64) {
    let (mut s, mut t, mut best) = (s0, t0, p0);
    let mut step = C_GRID_STEP;
    let mut neighbour = f64::INFINITY;
    let mut seen = p0.ratio;
    let min_step = tol.max(1e-14);
    while step >= min_step {
        let mut moved = false;
        neighbour = f64::INFINITY;
        for (ds, dt) in DIRECTIONS {
            let (ns, nt) = (s + ds * step, t + dt * step);
            if ns.abs() > C_BOX || nt.abs() > C_BOX {
                continue;
            }
            if let Some(p) = point(psi, ns, nt) {
                seen = seen.min(p.ratio);
                neighbour = neighbour.min(p.ratio);
                if p.ratio < best.ratio {
                    best = p;
                    s = ns;
                    t = nt;
                    moved = true;
                    break;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (best, neighbour, seen)
}

fn line_infimum(f: impl Fn(f64) -> Option<f64> + Sync, tol: f64) -> Option<f64> {
    let n = 4801;
    let h = 2.0 * C_BOX / (n - 1) as f64;
    let samples: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .filter_map(|k| {
            let a = -C_BOX + h * k as f64;
            f(a).map(|r| (a, r))
        })
        .collect();
    let &(a0, r0) = samples.iter().min_by(|x, y| x.1.total_cmp(&y.1))?;
    let (a, lo, hi) = golden_section_max(
        |a| f(a).map_or(f64::NEG_INFINITY, |r| -r),
        a0 - h,
        a0 + h,
        tol.max(1e-15),
    );
    let _ = (lo, hi);
    Some(f(a).map_or(r0, |r| r.min(r0)))
}

/// `C_ψ` by a coarse log-coordinate grid on `[−30, 30]²`, compass search from
/// the 20 best cells, plus explicit scans of both diagonals.
pub fn c_psi(psi: &PsiSpec, tol: f64) -> CPsiEstimate {
    let n = (2.0 * C_BOX / C_GRID_STEP) as usize + 1;
    let coord = |k: usize| -C_BOX + C_GRID_STEP * k as f64;
    let mut cells: Vec<(f64, f64, CPsiPoint)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            (0..n).filter_map(move |j| point_or_probe(psi, coord(i), coord(j)))
        })
        .collect();
    let mut min_sampled = cells.iter().map(|c| c.2.ratio).fold(f64::INFINITY, f64::min);
    cells.sort_by(|a, b| a.2.ratio.total_cmp(&b.2.ratio));

    let diagonal_value = line_infimum(|a| point(psi, a, a).map(|p| p.ratio), tol);
    let anti_diagonal_value = line_infimum(|a| point(psi, a, -a).map(|p| p.ratio), tol);

    // seeds: best grid cells plus the best anti-diagonal sample
    let mut seeds: Vec<(f64, f64, CPsiPoint)> = cells.iter().take(C_SEEDS).copied().collect();
    let anti = (0..4801)
        .map(|k| -C_BOX + 2.0 * C_BOX * k as f64 / 4800.0)
        .filter_map(|a| point(psi, a, -a).map(|p| (a, -a, p)))
        .min_by(|x, y| x.2.ratio.total_cmp(&y.2.ratio));
    seeds.extend(anti);

    let results: Vec<(CPsiPoint, f64, f64)> = seeds
        .par_iter()
        .map(|&(s, t, p)| compass_search(psi, s, t, p, tol))
        .collect();
    let (minimizer, neighbour, _) = results
        .iter()
        .copied()
        .min_by(|a, b| a.0.ratio.total_cmp(&b.0.ratio))
        .expect("grid has admissible points");
    for r in &results {
        min_sampled = min_sampled.min(r.2);
    }
    let mut value = minimizer.ratio;
    let mut best = minimizer;
    if let Some(a) = anti_diagonal_value {
        if a < value {
            value = a;
            best = CPsiPoint { ratio: a, ..best };
        }
    }
    if let Some(d) = diagonal_value {
        value = value.min(d);
    }
    min_sampled = min_sampled.min(value);
    CPsiEstimate {
        value,
        bracket: (value, neighbour.max(value)),
        minimizer: best,
        diagonal_value,
        anti_diagonal_value,
        min_sampled_ratio: min_sampled,
    }
}

/// `2√z (1/z − 1 + log z)/(log z)²`, the C_log objective on the diagonal
/// `x = y = √z`; equals 1 at `z = 1`.
pub fn c_log_diagonal(z: f64) -> f64 {
    let s = z.ln();
    if s.abs() < 1e-3 {
        // e^{-s} − 1 + s = s²/2 − s³/6 + s⁴/24 − s⁵/120 + …
        let series = 0.5 - s / 6.0 + s * s / 24.0 - s * s * s / 120.0;
        2.0 * (0.5 * s).exp() * series
    } else {
        2.0 * (0.5 * s).exp() * ((-s).exp_m1() + s) / (s * s)
    }
}

/// One-dimensional minimum of [`c_log_diagonal`] over `z ∈ [1e-6, 1e6]`.
pub fn c_log_one_dimensional(tol: f64) -> (f64, f64) {
    let lo = (1e-6f64).ln();
    let hi = (1e6f64).ln();
    let n = 20001;
    let h = (hi - lo) / (n - 1) as f64;
    let k = (0..n)
        .min_by(|&a, &b| {
            c_log_diagonal((lo + h * a as f64).exp())
                .total_cmp(&c_log_diagonal((lo + h * b as f64).exp()))
        })
        .expect("nonempty grid");
    let s0 = lo + h * k as f64;
    let (s, _, _) = golden_section_max(|s| -c_log_diagonal(s.exp()), s0 - h, s0 + h, tol.max(1e-15));
    let z = s.exp();
    (c_log_diagonal(z), z)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub psi: String,
    pub harnack: HarnackConstant,
    pub c_psi: CPsiEstimate,
}

pub fn constants_report(psi: &PsiSpec, tol: f64) -> Result<ConstantsReport> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be in (0,1), got {tol}")));
    }
    Ok(ConstantsReport {
        psi: psi.name().to_string(),
        harnack: harnack_constant(psi, tol)?,
        c_psi: c_psi(psi, tol),
    })
}

/// One row per reference psi: `psi,H_psi,C_psi` with 12 significant digits.
pub fn constants_table(tol: f64) -> Result<String> {
    let mut out = String::from("psi,H_psi,C_psi\n");
    let fmt = |v: Option<f64>| v.map_or("inf".to_string(), |v| format!("{v:.11e}"));
    for psi in [PsiSpec::log(), PsiSpec::sqrt()] {
        let h = harnack_constant(&psi, tol)?.value();
        let c = c_psi(&psi, tol).value.max(0.0);
        out += &format!("{},{},{}\n", psi.name(), fmt(h), fmt(Some(c)));
    }
    Ok(out)
}
