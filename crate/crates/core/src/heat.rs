//! Heat semigroup `P_t = e^{tΔ}` and the checks that ride on heat solutions:
//! the Γ₂^ψ representation identity, ψ-Li-Yau and its semigroup form.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamma::{check_len, laplacian, VertexFunction};
use crate::graph::Graph;
use crate::psi::{log_grid, psi_bar, PsiSpec};
use crate::psi_ops::{gamma2_psi, omega_psi, psi_laplacian, validate_positive};

/// Tolerance on every Li-Yau style margin.
pub const MARGIN_TOL: f64 = 1e-9;

/// 40 log-spaced times on `[1e-2, 10]`.
pub fn default_time_grid() -> Vec<f64> {
    log_grid(1e-2, 10.0, 40)
}

/// `Δ = U Λ Uᵀ` with eigenvalues in ascending order (all ≤ 0).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
}

pub fn laplacian_matrix(g: &Graph) -> DMatrix<f64> {
    let n = g.vertex_count();
    let mut m = DMatrix::zeros(n, n);
    for v in g.vertices() {
        m[(v, v)] = -(g.degree(v) as f64);
        for &w in g.neighbors(v) {
            m[(v, w)] = 1.0;
        }
    }
    m
}

impl SpectralDecomposition {
    pub fn new(g: &Graph) -> Self {
        let eig = SymmetricEigen::new(laplacian_matrix(g));
        let n = g.vertex_count();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        SpectralDecomposition {
            eigenvalues,
            eigenvectors,
        }
    }

    /// `max |Δ − UΛUᵀ|`.
    pub fn reconstruction_error(&self, g: &Graph) -> f64 {
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(self.eigenvalues.clone()));
        let r = &self.eigenvectors * lambda * self.eigenvectors.transpose();
        (r - laplacian_matrix(g)).amax()
    }

    /// `P_t f` for `t ≥ 0`.
    pub fn apply(&self, f: &[f64], t: f64) -> Result<VertexFunction> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
        }
        if f.len() != self.eigenvalues.len() {
            return Err(Error::LengthMismatch {
                expected: self.eigenvalues.len(),
                got: f.len(),
            });
        }
        if t == 0.0 {
            return VertexFunction::new(f.to_vec());
        }
        let u = &self.eigenvectors;
        let mut coeffs = u.tr_mul(&DVector::from_column_slice(f));
        for (c, &l) in coeffs.iter_mut().zip(&self.eigenvalues) {
            *c *= (l * t).exp();
        }
        VertexFunction::new((u * coeffs).as_slice().to_vec())
    }
}

pub fn heat_semigroup(g: &Graph, f: &[f64], t: f64) -> Result<VertexFunction> {
    check_len(g, f)?;
    SpectralDecomposition::new(g).apply(f, t)
}

/// `u(·, t) = P_t f0` sampled on a time grid.
#[derive(Debug, Clone, Serialize)]
pub struct HeatSolution {
    pub initial: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[k]` is `u(·, times[k])`.
    pub values: Vec<Vec<f64>>,
}

fn check_grid(times: &[f64], strictly_positive: bool) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParameter("empty time grid".into()));
    }
    let lower_ok = |t: f64| if strictly_positive { t > 0.0 } else { t >= 0.0 };
    if !times.iter().all(|&t| t.is_finite() && lower_ok(t)) {
        let bound = if strictly_positive { "positive" } else { "nonnegative" };
        return Err(Error::InvalidParameter(format!("times must be {bound}")));
    }
    if times.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("times must be strictly increasing".into()));
    }
    Ok(())
}

pub fn solve_heat(g: &Graph, f0: &[f64], times: &[f64]) -> Result<HeatSolution> {
    validate_positive(g, f0)?;
    check_grid(times, false)?;
    let spec = SpectralDecomposition::new(g);
    solve_with(&spec, f0, times)
}

fn solve_with(spec: &SpectralDecomposition, f0: &[f64], times: &[f64]) -> Result<HeatSolution> {
    let values = times
        .iter()
        .map(|&t| {
            let u = spec.apply(f0, t)?;
            if let Some(vertex) = u.iter().position(|&x| x <= 0.0) {
                return Err(Error::NotPositive {
                    vertex,
                    value: u[vertex],
                });
            }
            Ok(u.into_vec())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HeatSolution {
        initial: f0.to_vec(),
        times: times.to_vec(),
        values,
    })
}

/// Residuals of `𝓛(−uΔ^ψu) = 2uΓ₂^ψ(u)` and, for concave ψ, of
/// `𝓛(uΓ^ψu) = 2uΓ₂^ψ(u)`, with `𝓛 = Δ − ∂_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KeyIdentityResidual {
    pub time: f64,
    pub residual: f64,
    pub gradient_form_residual: Option<f64>,
}

/// Time derivatives come from `∂_t u = Δu` and `∂_t Δ^ψu = Ω^ψu`.
pub fn key_identity_residual(
    g: &Graph,
    psi: &PsiSpec,
    u: &HeatSolution,
    t_index: usize,
) -> Result<KeyIdentityResidual> {
    let ut = u.values.get(t_index).ok_or_else(|| {
        Error::InvalidParameter(format!("time index {t_index} outside grid of {}", u.times.len()))
    })?;
    let n = ut.len();
    let lu = laplacian(g, ut);
    let lpsi = psi_laplacian(g, psi, ut)?;
    let omega = omega_psi(g, psi, ut)?;
    let g2 = gamma2_psi(g, psi, ut)?;
    let target: Vec<f64> = (0..n).map(|v| 2.0 * ut[v] * g2[v]).collect();

    let w: Vec<f64> = (0..n).map(|v| -ut[v] * lpsi[v]).collect();
    let dw: Vec<f64> = (0..n).map(|v| -lu[v] * lpsi[v] - ut[v] * omega[v]).collect();
    let lw = laplacian(g, &w);
    let residual = (0..n)
        .map(|v| (lw[v] - dw[v] - target[v]).abs())
        .fold(0.0, f64::max);

    let gradient_form_residual = if psi.claims_concave() {
        let bar = psi_bar(psi);
        let gp = psi_laplacian(g, &bar, ut)?;
        let omega_bar = omega_psi(g, &bar, ut)?;
        let w: Vec<f64> = (0..n).map(|v| ut[v] * gp[v]).collect();
        let dw: Vec<f64> = (0..n).map(|v| lu[v] * gp[v] + ut[v] * omega_bar[v]).collect();
        let lw = laplacian(g, &w);
        Some(
            (0..n)
                .map(|v| (lw[v] - dw[v] - target[v]).abs())
                .fold(0.0, f64::max),
        )
    } else {
        None
    };
    Ok(KeyIdentityResidual {
        time: u.times[t_index],
        residual,
        gradient_form_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Witness {
    pub vertex: usize,
    pub time: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiYauReport {
    pub psi: String,
    pub d: f64,
    /// Largest `−Δ^ψu(x,t) − d/(2t)` over the grid.
    pub worst: Witness,
    pub holds: bool,
}

/// Checks `−Δ^ψ u(x,t) ≤ d/(2t)` for `u = P_t f0` on every grid point.
pub fn liyau_check(
    g: &Graph,
    psi: &PsiSpec,
    f0: &[f64],
    d: f64,
    times: &[f64],
) -> Result<LiYauReport> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    if !(d >= 0.0 && d.is_finite()) {
        return Err(Error::InvalidParameter(format!("dimension must be nonnegative, got {d}")));
    }
    validate_positive(g, f0)?;
    check_grid(times, true)?;
    let spec = SpectralDecomposition::new(g);
    liyau_with(&spec, g, psi, f0, d, times)
}

pub(crate) fn liyau_with(
    spec: &SpectralDecomposition,
    g: &Graph,
    psi: &PsiSpec,
    f0: &[f64],
    d: f64,
    times: &[f64],
) -> Result<LiYauReport> {
    let per_time = times
        .par_iter()
        .map(|&t| {
            let u = spec.apply(f0, t)?;
            let lpsi = psi_laplacian(g, psi, &u)?;
            let bound = d / (2.0 * t);
            Ok(lpsi
                .iter()
                .enumerate()
                .map(|(vertex, &l)| Witness {
                    vertex,
                    time: t,
                    margin: -l - bound,
                })
                .fold(None, |acc: Option<Witness>, w| match acc {
                    Some(a) if a.margin >= w.margin => Some(a),
                    _ => Some(w),
                })
                .expect("graph has vertices"))
        })
        .collect::<Result<Vec<_>>>()?;
    let worst = per_time
        .into_iter()
        .reduce(|a, b| if a.margin >= b.margin { a } else { b })
        .expect("grid is nonempty");
    Ok(LiYauReport {
        psi: psi.name().to_string(),
        d,
        worst,
        holds: worst.margin <= MARGIN_TOL,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupReport {
    pub psi: String,
    pub n: f64,
    /// Smallest `LHS − RHS` over vertices and times.
    pub worst: Witness,
    pub holds: bool,
}

/// `P_t f·Δ^ψP_t f − P_t(fΔ^ψf)(1 + (2t/n)Δ^ψP_t f)` at every vertex.
pub fn semigroup_margins(
    spec: &SpectralDecomposition,
    g: &Graph,
    psi: &PsiSpec,
    f: &[f64],
    t: f64,
    n: f64,
) -> Result<Vec<f64>> {
    let ptf = spec.apply(f, t)?;
    let lpt = psi_laplacian(g, psi, &ptf)?;
    let lf = psi_laplacian(g, psi, f)?;
    let weighted: Vec<f64> = f.iter().zip(lf.iter()).map(|(a, b)| a * b).collect();
    let pw = spec.apply(&weighted, t)?;
    Ok((0..f.len())
        .map(|v| ptf[v] * lpt[v] - pw[v] * (1.0 + 2.0 * t / n * lpt[v]))
        .collect())
}

/// Semigroup form of ψ-Li-Yau on a set of times.
pub fn semigroup_inequality_check(
    g: &Graph,
    psi: &PsiSpec,
    f: &[f64],
    times: &[f64],
    n: f64,
) -> Result<SemigroupReport> {
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InvalidParameter(format!("dimension must be positive, got {n}")));
    }
    validate_positive(g, f)?;
    check_grid(times, false)?;
    let spec = SpectralDecomposition::new(g);
    semigroup_with(&spec, g, psi, f, times, n)
}

pub(crate) fn semigroup_with(
    spec: &SpectralDecomposition,
    g: &Graph,
    psi: &PsiSpec,
    f: &[f64],
    times: &[f64],
    n: f64,
) -> Result<SemigroupReport> {
    let mut worst: Option<Witness> = None;
    for &t in times {
        for (vertex, margin) in semigroup_margins(spec, g, psi, f, t, n)?.into_iter().enumerate() {
            if worst.is_none_or(|w| margin < w.margin) {
                worst = Some(Witness { vertex, time: t, margin });
            }
        }
    }
    let worst = worst.expect("grid and graph are nonempty");
    Ok(SemigroupReport {
        psi: psi.name().to_string(),
        n,
        worst,
        holds: worst.margin >= -MARGIN_TOL,
    })
}

/// Time derivative at `t = 0` of the semigroup margin:
/// `2f·[Γ₂^ψ(f) − (1/n)(Δ^ψf)²]`. Negative somewhere exactly when CDψ(n,0)
/// fails for `f`, so a small-time violation of the semigroup form is
/// detectable from this probe.
pub fn semigroup_derivative_at_zero(
    g: &Graph,
    psi: &PsiSpec,
    f: &[f64],
    n: f64,
) -> Result<VertexFunction> {
    let lpsi = psi_laplacian(g, psi, f)?;
    let g2 = gamma2_psi(g, psi, f)?;
    VertexFunction::new(
        (0..f.len())
            .map(|v| 2.0 * f[v] * (g2[v] - lpsi[v] * lpsi[v] / n))
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::laplacian;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Graph {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < 0.4 {
                    edges.push((i, j));
                }
            }
        }
        Graph::from_edge_list(n, &edges).unwrap()
    }

    fn random_positive(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random_range(-2.0f64..2.0).exp()).collect()
    }

    fn power_series(g: &Graph, f: &[f64], t: f64) -> Vec<f64> {
        let mut term = f.to_vec();
        let mut sum = f.to_vec();
        for k in 1..60 {
            let l = laplacian(g, &term);
            term = l.iter().map(|x| x * t / k as f64).collect();
            for (s, x) in sum.iter_mut().zip(&term) {
                *s += x;
            }
        }
        sum
    }

    #[test]
    fn spectral_decomposition_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let n = rng.random_range(1..=12);
            let g = random_graph(&mut rng, n);
            let s = SpectralDecomposition::new(&g);
            assert!(s.reconstruction_error(&g) < 1e-9);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
            assert!(s.eigenvalues.last().unwrap().abs() < 1e-9);
            assert!(s.eigenvalues.iter().all(|&l| l <= 1e-9));
        }
    }

    #[test]
    fn heat_semigroup_examples() {
        let k2 = Graph::complete(2).unwrap();
        for t in [0.0, 0.1, 1.0, 7.5] {
            let u = heat_semigroup(&k2, &[0.0, 1.0], t).unwrap();
            let e = (-2.0 * t).exp();
            assert!((u[0] - 0.5 * (1.0 - e)).abs() < 1e-14);
            assert!((u[1] - 0.5 * (1.0 + e)).abs() < 1e-14);
        }
        let c = Graph::cycle(7).unwrap();
        let f = [1.0, 2.0, 3.0, 0.5, 0.1, 4.0, 2.0];
        assert_eq!(&*heat_semigroup(&c, &f, 0.0).unwrap(), &f);
        let u = heat_semigroup(&c, &[3.0; 7], 2.0).unwrap();
        assert!(u.iter().all(|x| (x - 3.0).abs() < 1e-12));
        assert!(heat_semigroup(&c, &f, -1.0).is_err());
    }

    #[test]
    fn spectral_matches_power_series_and_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let n = rng.random_range(2..=12);
            let g = random_graph(&mut rng, n);
            let s = SpectralDecomposition::new(&g);
            let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let h: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            for t in [0.01, 0.1, 0.5] {
                let a = s.apply(&f, t).unwrap();
                let b = power_series(&g, &f, t);
                for v in 0..n {
                    assert!((a[v] - b[v]).abs() < 1e-9);
                }
                let mix: Vec<f64> = (0..n).map(|v| 2.0 * f[v] - 3.0 * h[v]).collect();
                let pm = s.apply(&mix, t).unwrap();
                let ph = s.apply(&h, t).unwrap();
                for v in 0..n {
                    assert!((pm[v] - 2.0 * a[v] + 3.0 * ph[v]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn solution_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Graph::cycle(8).unwrap();
        let f0 = random_positive(&mut rng, 8);
        let times = [0.0, 0.2, 0.7, 3.0];
        let u = solve_heat(&g, &f0, &times).unwrap();
        assert_eq!(u.values[0], f0);
        let mass: f64 = f0.iter().sum();
        for col in &u.values {
            assert!((col.iter().sum::<f64>() - mass).abs() < 1e-9);
            assert!(col.iter().all(|&x| x > 0.0));
        }
        let s = SpectralDecomposition::new(&g);
        let restarted = s.apply(&u.values[1], 0.5).unwrap();
        for v in 0..8 {
            assert!((restarted[v] - u.values[2][v]).abs() < 1e-9);
        }
        let ones = solve_heat(&g, &[1.0; 8], &times).unwrap();
        assert!(ones.values.iter().flatten().all(|x| (x - 1.0).abs() < 1e-12));
        assert!(solve_heat(&g, &[0.0; 8], &times).is_err());
        assert!(solve_heat(&g, &f0, &[0.5, 0.1]).is_err());
    }

    #[test]
    fn heat_equation_holds_by_finite_differences() {
        let g = Graph::cycle(6).unwrap();
        let f0 = [1.0, 2.0, 0.5, 3.0, 1.0, 0.7];
        let s = SpectralDecomposition::new(&g);
        let t = 0.4;
        let h = 1e-5;
        let up = s.apply(&f0, t + h).unwrap();
        let um = s.apply(&f0, t - h).unwrap();
        let u = s.apply(&f0, t).unwrap();
        let lu = laplacian(&g, &u);
        for v in 0..6 {
            assert!(((up[v] - um[v]) / (2.0 * h) - lu[v]).abs() < 1e-8);
        }
    }

    #[test]
    fn key_identity_examples() {
        let c6 = Graph::cycle(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f0 = random_positive(&mut rng, 6);
        let u = solve_heat(&c6, &f0, &[0.3]).unwrap();
        let r = key_identity_residual(&c6, &PsiSpec::log(), &u, 0).unwrap();
        assert!(r.residual < 1e-8 && r.gradient_form_residual.unwrap() < 1e-8);

        let k2 = Graph::complete(2).unwrap();
        let u = solve_heat(&k2, &[1.0, 4.0], &[0.1]).unwrap();
        let r = key_identity_residual(&k2, &PsiSpec::sqrt(), &u, 0).unwrap();
        assert!(r.residual < 1e-10 && r.gradient_form_residual.unwrap() < 1e-10);

        let u = solve_heat(&c6, &[2.0; 6], &[0.0, 1.0]).unwrap();
        for k in 0..2 {
            assert!(key_identity_residual(&c6, &PsiSpec::sqrt(), &u, k).unwrap().residual < 1e-14);
        }
        assert!(key_identity_residual(&c6, &PsiSpec::sqrt(), &u, 5).is_err());
    }

    /// Cross-check the analytic time derivative against a centered difference.
    #[test]
    fn key_identity_by_finite_differences() {
        let g = Graph::cycle(5).unwrap();
        let f0 = [1.0, 3.0, 0.4, 2.0, 1.5];
        let s = SpectralDecomposition::new(&g);
        let psi = PsiSpec::sqrt();
        let w_at = |t: f64| {
            let u = s.apply(&f0, t).unwrap();
            let l = psi_laplacian(&g, &psi, &u).unwrap();
            (0..5).map(|v| -u[v] * l[v]).collect::<Vec<f64>>()
        };
        let t = 0.25;
        let h = 1e-5;
        let (wp, wm, w) = (w_at(t + h), w_at(t - h), w_at(t));
        let lw = laplacian(&g, &w);
        let u = s.apply(&f0, t).unwrap();
        let g2 = gamma2_psi(&g, &psi, &u).unwrap();
        for v in 0..5 {
            let heat_op = lw[v] - (wp[v] - wm[v]) / (2.0 * h);
            assert!((heat_op - 2.0 * u[v] * g2[v]).abs() < 1e-7);
        }
    }

    #[test]
    fn key_identity_random_suite() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let n = rng.random_range(2..=12);
            let g = random_graph(&mut rng, n);
            let f0 = random_positive(&mut rng, n);
            let u = solve_heat(&g, &f0, &[0.0, 0.05, 0.5, 2.0]).unwrap();
            for psi in [PsiSpec::log(), PsiSpec::sqrt(), PsiSpec::power(0.5).unwrap()] {
                for k in 0..4 {
                    let r = key_identity_residual(&g, &psi, &u, k).unwrap();
                    assert!(r.residual < 1e-8, "{}", r.residual);
                    assert!(r.gradient_form_residual.unwrap() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn liyau_examples() {
        let g = Graph::cycle(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let f0 = random_positive(&mut rng, 6);
        let times = default_time_grid();
        assert_eq!(times.len(), 40);
        let big = liyau_check(&g, &PsiSpec::log(), &f0, 1e6, &times).unwrap();
        assert!(big.holds);
        let zero = liyau_check(&g, &PsiSpec::log(), &f0, 0.0, &times).unwrap();
        assert!(!zero.holds && zero.worst.margin > 0.0);
        // monotone in d
        let mid = liyau_check(&g, &PsiSpec::log(), &f0, 3.0, &times).unwrap();
        assert!(mid.worst.margin >= big.worst.margin);
        let disconnected = Graph::from_edge_list(3, &[(0, 1)]).unwrap();
        assert!(matches!(
            liyau_check(&disconnected, &PsiSpec::log(), &[1.0; 3], 1.0, &times),
            Err(Error::Disconnected)
        ));
        assert!(liyau_check(&g, &PsiSpec::log(), &f0, 1.0, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn semigroup_examples() {
        let g = Graph::cycle(6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_positive(&mut rng, 6);
        let r = semigroup_inequality_check(&g, &PsiSpec::log(), &f, &[0.0], 2.5).unwrap();
        assert_eq!(r.worst.margin.abs(), 0.0);
        let r = semigroup_inequality_check(&g, &PsiSpec::log(), &[2.0; 6], &[0.0, 1.0], 2.5).unwrap();
        assert!(r.worst.margin.abs() < 1e-12);
    }

    #[test]
    fn derivative_probe_matches_finite_difference() {
        let g = Graph::cycle(5).unwrap();
        let f = [1.0, 2.0, 0.5, 1.5, 3.0];
        let psi = PsiSpec::log();
        let s = SpectralDecomposition::new(&g);
        let n = 0.7;
        let h = 1e-6;
        let m = semigroup_margins(&s, &g, &psi, &f, h, n).unwrap();
        let d = semigroup_derivative_at_zero(&g, &psi, &f, n).unwrap();
        for v in 0..5 {
            assert!((m[v] / h - d[v]).abs() < 1e-4 * (1.0 + d[v].abs()));
        }
    }
}
