//! Ricci-flat structures: maps `η_1, …, η_D` on `N(v) = {v} ∪ neighbors(v)`
//! with
//!
//! * (r1) `η_i(w) ∼ w`,
//! * (r2) `η_i(w) ≠ η_j(w)` for `i ≠ j`,
//! * (r3) `⋃_k η_k(η_i(v)) = ⋃_k η_i(η_k(v))`.
//!
//! Every vertex of `N(v)` has degree `D`, so (r1) and (r2) make each `η(w)` a
//! bijection onto `neighbors(w)`, and (r3) says that `{η_i(η_k(v)) : k}` is
//! exactly `neighbors(η_i(v))`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::constants::{c_psi, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::psi::PsiSpec;

/// Default backtracking budget per vertex.
pub const DEFAULT_NODE_LIMIT: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EtaMaps {
    pub center: usize,
    /// `N(v)` with `v` first, then neighbors ascending.
    pub domain: Vec<usize>,
    /// `maps[i][k] = η_i(domain[k])`.
    pub maps: Vec<Vec<usize>>,
}

impl EtaMaps {
    pub fn degree(&self) -> usize {
        self.maps.len()
    }

    /// `η_i(w)` for `w ∈ N(v)`.
    pub fn eta(&self, i: usize, w: usize) -> Option<usize> {
        let k = self.domain.iter().position(|&x| x == w)?;
        self.maps.get(i)?.get(k).copied()
    }

    /// Builds maps from closures `η_i(w)`, e.g. group translations.
    pub fn from_fn(g: &Graph, center: usize, degree: usize, eta: impl Fn(usize, usize) -> usize) -> Self {
        let domain = g.closed_neighborhood(center);
        let maps = (0..degree)
            .map(|i| domain.iter().map(|&w| eta(i, w)).collect())
            .collect();
        EtaMaps { center, domain, maps }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "snake_case")]
pub enum Violation {
    Degree { vertex: usize, degree: usize, expected: usize },
    Shape { detail: String },
    R1 { i: usize, w: usize, image: usize },
    R2 { i: usize, j: usize, w: usize },
    R3 { i: usize, missing: Vec<usize>, extra: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RicciFlatVerdict {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

fn degree_violations(g: &Graph, v: usize) -> Vec<Violation> {
    let expected = g.degree(v);
    g.neighbors(v)
        .iter()
        .filter(|&&w| g.degree(w) != expected)
        .map(|&w| Violation::Degree {
            vertex: w,
            degree: g.degree(w),
            expected,
        })
        .collect()
}

/// Exhaustive check of (r1)–(r3) for the maps at `maps.center`.
pub fn verify_ricci_flat(g: &Graph, maps: &EtaMaps) -> RicciFlatVerdict {
    let v = maps.center;
    let mut violations = degree_violations(g, v);
    if !violations.is_empty() {
        return RicciFlatVerdict { valid: false, violations };
    }
    let d = g.degree(v);
    if maps.domain != g.closed_neighborhood(v) || maps.maps.len() != d
        || maps.maps.iter().any(|m| m.len() != maps.domain.len())
    {
        violations.push(Violation::Shape {
            detail: format!("expected {d} maps on the {} vertices of N({v})", d + 1),
        });
        return RicciFlatVerdict { valid: false, violations };
    }
    for (k, &w) in maps.domain.iter().enumerate() {
        for i in 0..d {
            let image = maps.maps[i][k];
            if image >= g.vertex_count() || !g.is_adjacent(w, image) {
                violations.push(Violation::R1 { i, w, image });
            }
            for j in i + 1..d {
                if maps.maps[j][k] == image {
                    violations.push(Violation::R2 { i, j, w });
                }
            }
        }
    }
    let eta = |i: usize, w: usize| maps.eta(i, w);
    for i in 0..d {
        let ui = maps.maps[i][0];
        let left: Vec<usize> = match (0..d).map(|k| eta(k, ui)).collect::<Option<Vec<_>>>() {
            Some(l) => l,
            None => continue, // η_i(v) outside N(v) is already an r1 violation
        };
        let right: Vec<usize> = (0..d)
            .filter_map(|k| eta(i, maps.maps[k][0]))
            .collect();
        let missing: Vec<usize> = left.iter().filter(|x| !right.contains(x)).copied().collect();
        let extra: Vec<usize> = right.iter().filter(|x| !left.contains(x)).copied().collect();
        if !missing.is_empty() || !extra.is_empty() {
            violations.push(Violation::R3 { i, missing, extra });
        }
    }
    RicciFlatVerdict {
        valid: violations.is_empty(),
        violations,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum SearchOutcome {
    Found { maps: EtaMaps, nodes: u64 },
    /// Some vertex of `N(v)` has a degree different from `deg(v)`.
    DegreeMismatch { vertex: usize, degree: usize, expected: usize },
    NoneFound { nodes: u64 },
    Exhausted { nodes: u64 },
}

impl SearchOutcome {
    pub fn maps(&self) -> Option<&EtaMaps> {
        match self {
            SearchOutcome::Found { maps, .. } => Some(maps),
            _ => None,
        }
    }

    fn nodes(&self) -> u64 {
        match self {
            SearchOutcome::Found { nodes, .. }
            | SearchOutcome::NoneFound { nodes }
            | SearchOutcome::Exhausted { nodes } => *nodes,
            SearchOutcome::DegreeMismatch { .. } => 0,
        }
    }
}

struct Search<'a> {
    g: &'a Graph,
    nbrs: &'a [usize],
    d: usize,
    /// `grid[k][i] = η_i(u_k)` with `u_k` the k-th neighbor of the center.
    grid: Vec<Vec<usize>>,
    nodes: u64,
    limit: u64,
}

impl Search<'_> {
    /// Fills cell `(k, i)`; candidates are common neighbors of `u_k` and
    /// `u_i`, unique along the row (r2 at `u_k`) and the column (r3 for i).
    fn fill(&mut self, cell: usize) -> Option<bool> {
        if cell == self.d * self.d {
            return Some(true);
        }
        let (k, i) = (cell / self.d, cell % self.d);
        let (uk, ui) = (self.nbrs[k], self.nbrs[i]);
        for &c in self.g.neighbors(uk) {
            if !self.g.is_adjacent(ui, c) {
                continue;
            }
            if self.grid[k][..i].contains(&c) || (0..k).any(|r| self.grid[r][i] == c) {
                continue;
            }
            self.nodes += 1;
            if self.nodes > self.limit {
                return None;
            }
            self.grid[k][i] = c;
            if self.fill(cell + 1)? {
                return Some(true);
            }
        }
        Some(false)
    }
}

/// Backtracking search for a Ricci-flat structure at `v`.
///
/// `η_i(v)` is fixed to the i-th neighbor of `v`: relabelling the indices of
/// a valid structure gives another valid structure, so this loses nothing.
/// Candidates are tried in ascending order, so the result is deterministic.
pub fn find_ricci_flat_structure(g: &Graph, v: usize, node_limit: u64) -> SearchOutcome {
    if let Some(Violation::Degree { vertex, degree, expected }) = degree_violations(g, v).into_iter().next() {
        return SearchOutcome::DegreeMismatch { vertex, degree, expected };
    }
    let nbrs = g.neighbors(v);
    let d = nbrs.len();
    let mut search = Search {
        g,
        nbrs,
        d,
        grid: vec![vec![usize::MAX; d]; d],
        nodes: 0,
        limit: node_limit,
    };
    match search.fill(0) {
        None => SearchOutcome::Exhausted { nodes: search.nodes },
        Some(false) => SearchOutcome::NoneFound { nodes: search.nodes },
        Some(true) => {
            let maps = EtaMaps::from_fn(g, v, d, |i, w| {
                if w == v {
                    nbrs[i]
                } else {
                    let k = nbrs.iter().position(|&u| u == w).expect("w is a neighbor");
                    search.grid[k][i]
                }
            });
            debug_assert!(verify_ricci_flat(g, &maps).valid);
            SearchOutcome::Found { maps, nodes: search.nodes }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RicciFlatCertificate {
    pub ricci_flat: bool,
    /// Common degree `D` when every vertex succeeded.
    pub degree: Option<usize>,
    pub per_vertex: Vec<SearchOutcome>,
    pub total_nodes: u64,
    /// True if some vertex hit the node limit; the verdict is then unknown.
    pub exhausted: bool,
}

pub fn is_ricci_flat(g: &Graph, node_limit: u64) -> RicciFlatCertificate {
    let per_vertex: Vec<SearchOutcome> = g
        .vertices()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&v| find_ricci_flat_structure(g, v, node_limit))
        .collect();
    let total_nodes = per_vertex.iter().map(SearchOutcome::nodes).sum();
    let exhausted = per_vertex.iter().any(|o| matches!(o, SearchOutcome::Exhausted { .. }));
    let degrees: Option<Vec<usize>> = per_vertex
        .iter()
        .map(|o| o.maps().map(EtaMaps::degree))
        .collect();
    let degree = degrees.and_then(|ds| {
        let first = ds[0];
        ds.iter().all(|&d| d == first).then_some(first)
    });
    RicciFlatCertificate {
        ricci_flat: degree.is_some(),
        degree,
        per_vertex,
        total_nodes,
        exhausted,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PermutationCheck {
    /// `j(i)`: the unique index with `η_i(η_j(v)) = v`.
    pub permutation: Option<Vec<usize>>,
    /// Largest `|Σ_k f(η_kη_i v) − Σ_k f(η_iη_k v)|` over sampled f and all i.
    pub sum_residual: f64,
    /// Both index unions are free of repeats.
    pub disjoint_unions: bool,
    pub holds: bool,
}

/// Checks the inverse-index permutation and the symmetric-sum identity of a
/// valid structure on `samples` random functions.
pub fn eta_permutation_check(g: &Graph, maps: &EtaMaps, samples: usize, seed: u64) -> PermutationCheck {
    let d = maps.degree();
    let v = maps.center;
    let u: Vec<usize> = maps.maps.iter().map(|m| m[0]).collect();
    let inverse: Option<Vec<usize>> = (0..d)
        .map(|i| {
            let js: Vec<usize> = (0..d).filter(|&j| maps.eta(i, u[j]) == Some(v)).collect();
            (js.len() == 1).then(|| js[0])
        })
        .collect();
    let permutation = inverse.filter(|p| {
        let mut seen = vec![false; d];
        p.iter().all(|&j| !std::mem::replace(&mut seen[j], true))
    });

    let mut disjoint_unions = true;
    let mut unions = Vec::with_capacity(d);
    for i in 0..d {
        let left: Option<Vec<usize>> = (0..d).map(|k| maps.eta(k, u[i])).collect();
        let right: Option<Vec<usize>> = (0..d).map(|k| maps.eta(i, u[k])).collect();
        match (left, right) {
            (Some(l), Some(r)) => {
                for side in [&l, &r] {
                    let mut s = side.clone();
                    s.sort_unstable();
                    s.dedup();
                    disjoint_unions &= s.len() == side.len();
                }
                unions.push((l, r));
            }
            _ => disjoint_unions = false,
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum_residual: f64 = if unions.len() == d { 0.0 } else { f64::INFINITY };
    for _ in 0..samples {
        let f: Vec<f64> = (0..g.vertex_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        for (l, r) in &unions {
            let a: f64 = l.iter().map(|&x| f[x]).sum();
            let b: f64 = r.iter().map(|&x| f[x]).sum();
            sum_residual = sum_residual.max((a - b).abs());
        }
    }
    PermutationCheck {
        holds: permutation.is_some() && disjoint_unions && sum_residual <= 1e-12,
        permutation,
        sum_residual,
        disjoint_unions,
    }
}

/// `d = D / C` for a precomputed `C`.
pub fn cdpsi_dimension_from_constant(degree: usize, c: f64) -> Result<f64> {
    if c <= 1e-9 {
        return Err(Error::DegenerateConstant(c));
    }
    Ok(degree as f64 / c)
}

/// `d = D / C_ψ`, the CDψ(d,0) dimension of a D-Ricci-flat graph.
pub fn ricci_flat_cdpsi_dimension(degree: usize, psi: &PsiSpec) -> Result<f64> {
    cdpsi_dimension_from_constant(degree, c_psi(psi, DEFAULT_TOL).value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shift_maps(n: usize, v: usize) -> (Graph, EtaMaps) {
        let g = Graph::cycle(n).unwrap();
        let maps = EtaMaps::from_fn(&g, v, 2, |i, w| if i == 0 { (w + n - 1) % n } else { (w + 1) % n });
        (g, maps)
    }

    #[test]
    fn shifts_on_cycle_are_valid() {
        for v in 0..5 {
            let (g, maps) = shift_maps(5, v);
            let verdict = verify_ricci_flat(&g, &maps);
            assert!(verdict.valid, "{verdict:?}");
            assert!(eta_permutation_check(&g, &maps, 20, 0).holds);
        }
    }

    #[test]
    fn forced_duplicate_is_r2() {
        let (g, mut maps) = shift_maps(5, 0);
        maps.maps[1][1] = maps.maps[0][1];
        let verdict = verify_ricci_flat(&g, &maps);
        assert!(!verdict.valid);
        assert!(verdict.violations.iter().any(|v| matches!(v, Violation::R2 { i: 0, j: 1, .. })));
    }

    #[test]
    fn broken_r3_and_r1_are_listed() {
        let (g, mut maps) = shift_maps(7, 0);
        // swap the two maps at neighbor 6 only
        maps.maps[0][2] = 0;
        maps.maps[1][2] = 5;
        let verdict = verify_ricci_flat(&g, &maps);
        assert!(verdict.violations.iter().any(|v| matches!(v, Violation::R3 { .. })));
        let (g, mut maps) = shift_maps(7, 0);
        maps.maps[0][0] = 3;
        let verdict = verify_ricci_flat(&g, &maps);
        assert!(verdict.violations.iter().any(|v| matches!(v, Violation::R1 { i: 0, w: 0, image: 3 })));
    }

    #[test]
    fn star_fails_degree_condition() {
        let g = Graph::star(3).unwrap();
        let maps = EtaMaps::from_fn(&g, 0, 3, |i, _| i + 1);
        let verdict = verify_ricci_flat(&g, &maps);
        assert!(matches!(verdict.violations[0], Violation::Degree { expected: 3, degree: 1, .. }));
        assert!(matches!(
            find_ricci_flat_structure(&g, 0, DEFAULT_NODE_LIMIT),
            SearchOutcome::DegreeMismatch { .. }
        ));
        assert!(!is_ricci_flat(&g, DEFAULT_NODE_LIMIT).ricci_flat);
    }

    #[test]
    fn search_finds_cycles_torus_and_cube() {
        for (g, d) in [
            (Graph::cycle(4).unwrap(), 2),
            (Graph::cycle(5).unwrap(), 2),
            (Graph::cycle(12).unwrap(), 2),
            (Graph::torus(3, 3).unwrap(), 4),
            (Graph::hypercube(3).unwrap(), 3),
        ] {
            let cert = is_ricci_flat(&g, DEFAULT_NODE_LIMIT);
            assert!(cert.ricci_flat && cert.degree == Some(d));
            for o in &cert.per_vertex {
                let maps = o.maps().unwrap();
                assert!(verify_ricci_flat(&g, maps).valid);
                assert!(eta_permutation_check(&g, maps, 10, 1).holds);
            }
        }
    }

    #[test]
    fn search_is_deterministic_and_respects_budget() {
        let g = Graph::torus(3, 3).unwrap();
        let a = find_ricci_flat_structure(&g, 4, DEFAULT_NODE_LIMIT);
        let b = find_ricci_flat_structure(&g, 4, DEFAULT_NODE_LIMIT);
        assert_eq!(a, b);
        assert!(matches!(find_ricci_flat_structure(&g, 4, 2), SearchOutcome::Exhausted { .. }));
    }

    #[test]
    fn rejects_non_ricci_flat_graphs() {
        assert!(!is_ricci_flat(&Graph::path(3).unwrap(), DEFAULT_NODE_LIMIT).ricci_flat);
        // K4 and the triangular prism are Cayley graphs of Z2² and Z3×Z2
        let k4 = Graph::complete(4).unwrap();
        assert_eq!(is_ricci_flat(&k4, DEFAULT_NODE_LIMIT).degree, Some(3));
        let prism = Graph::from_edge_list(
            6,
            &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (0, 3), (1, 4), (2, 5)],
        )
        .unwrap();
        assert_eq!(is_ricci_flat(&prism, DEFAULT_NODE_LIMIT).degree, Some(3));
        // C5 with a chord is not regular
        let chord = Graph::from_edge_list(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
        assert!(!is_ricci_flat(&chord, DEFAULT_NODE_LIMIT).ricci_flat);
    }

    #[test]
    fn dimension_from_constants() {
        let d = ricci_flat_cdpsi_dimension(2, &PsiSpec::log()).unwrap();
        assert!((d - 2.0 / 0.7951229668).abs() < 1e-6);
        assert!(cdpsi_dimension_from_constant(2, 0.5).unwrap() <= 4.0);
        assert!(matches!(
            ricci_flat_cdpsi_dimension(3, &PsiSpec::sqrt()),
            Err(Error::DegenerateConstant(_))
        ));
    }
}
