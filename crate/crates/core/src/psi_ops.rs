//! The nonlinear operators Δ^ψ, Ω^ψ, Γ^ψ, Γ₂^ψ and the small-perturbation
//! probes that connect them to Δ, Γ, Γ₂.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gamma::{check_len, laplacian, laplacian_at, VertexFunction};
use crate::graph::Graph;
use crate::psi::{in_domain, psi_bar, PsiSpec};

/// Operator output tagged with the ψ that produced it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiOperatorResult {
    pub values: VertexFunction,
    pub psi_name: String,
    /// `ψ(1)` is always subtracted inside the sum, so the representation is
    /// valid whether or not `ψ(1) = 0`.
    pub psi_one_subtracted: bool,
}

/// Rejects nonpositive or non-finite values and edge ratios outside the
/// ψ domain window.
pub fn validate_positive(g: &Graph, f: &[f64]) -> Result<()> {
    check_len(g, f)?;
    for (vertex, &value) in f.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NotFinite { vertex });
        }
        if value <= 0.0 {
            return Err(Error::NotPositive { vertex, value });
        }
    }
    for (v, w) in g.edges() {
        for (from, to) in [(v, w), (w, v)] {
            let ratio = f[to] / f[from];
            if !in_domain(ratio) {
                return Err(Error::DomainWindow { from, to, ratio });
            }
        }
    }
    Ok(())
}

fn psi_laplacian_at(g: &Graph, psi: &PsiSpec, f: &[f64], v: usize, psi_one: f64) -> f64 {
    g.neighbors(v)
        .iter()
        .map(|&w| psi.value(f[w] / f[v]) - psi_one)
        .sum()
}

fn psi_laplacian_unchecked(g: &Graph, psi: &PsiSpec, f: &[f64]) -> Vec<f64> {
    let psi_one = psi.value(1.0);
    g.vertices()
        .map(|v| psi_laplacian_at(g, psi, f, v, psi_one))
        .collect()
}

/// `Δ^ψ f(v) = Σ_{w∼v} [ψ(f(w)/f(v)) − ψ(1)]`.
pub fn psi_laplacian(g: &Graph, psi: &PsiSpec, f: &[f64]) -> Result<VertexFunction> {
    validate_positive(g, f)?;
    VertexFunction::new(psi_laplacian_unchecked(g, psi, f))
}

fn omega_unchecked(g: &Graph, psi: &PsiSpec, f: &[f64], lf: &[f64]) -> Vec<f64> {
    g.vertices()
        .map(|v| {
            let base = lf[v] / f[v];
            g.neighbors(v)
                .iter()
                .map(|&w| {
                    let r = f[w] / f[v];
                    psi.d1(r) * r * (lf[w] / f[w] - base)
                })
                .sum()
        })
        .collect()
}

/// `Ω^ψ f(v) = Σ_{w∼v} ψ'(f(w)/f(v))·(f(w)/f(v))·[Δf(w)/f(w) − Δf(v)/f(v)]`,
/// the time derivative of `Δ^ψ u` along the heat flow.
pub fn omega_psi(g: &Graph, psi: &PsiSpec, f: &[f64]) -> Result<VertexFunction> {
    validate_positive(g, f)?;
    let lf = laplacian(g, f);
    VertexFunction::new(omega_unchecked(g, psi, f, &lf))
}

/// `Γ₂^ψ(f) = ½[Ω^ψ f + Δf·Δ^ψf/f − Δ(f·Δ^ψf)/f]`.
pub fn gamma2_psi(g: &Graph, psi: &PsiSpec, f: &[f64]) -> Result<VertexFunction> {
    validate_positive(g, f)?;
    let lf = laplacian(g, f);
    let lpsi = psi_laplacian_unchecked(g, psi, f);
    let omega = omega_unchecked(g, psi, f, &lf);
    let weighted: Vec<f64> = f.iter().zip(&lpsi).map(|(a, b)| a * b).collect();
    let lw = laplacian(g, &weighted);
    VertexFunction::new(
        g.vertices()
            .map(|v| 0.5 * (omega[v] + lf[v] * lpsi[v] / f[v] - lw[v] / f[v]))
            .collect(),
    )
}

/// `Γ^ψ(f) = Δ^{ψ̄} f`. Nonnegative for concave ψ.
pub fn gamma_psi(g: &Graph, psi: &PsiSpec, f: &[f64]) -> Result<VertexFunction> {
    psi.require_concave()?;
    psi_laplacian(g, &psi_bar(psi), f)
}

/// `max_v |−Δ^ψf − Γ^ψ(f) + ψ'(1)Δf/f|`.
pub fn gradient_representation_residual(g: &Graph, psi: &PsiSpec, f: &[f64]) -> Result<f64> {
    let lpsi = psi_laplacian(g, psi, f)?;
    let gpsi = gamma_psi(g, psi, f)?;
    let lf = laplacian(g, f);
    let slope = psi.d1(1.0);
    Ok(g.vertices()
        .map(|v| (-lpsi[v] - gpsi[v] + slope * lf[v] / f[v]).abs())
        .fold(0.0, f64::max))
}

/// The three rescaled operators at `1 + εf`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitProbe {
    /// `(1/ε) Δ^ψ(1+εf)`, tends to `ψ'(1)Δf`.
    pub laplacian: VertexFunction,
    /// `(1/ε²) Γ^ψ(1+εf)`, tends to `−ψ''(1)Γ(f)`.
    pub gamma: VertexFunction,
    /// `(1/ε²) Γ₂^ψ(1+εf)`, tends to `−ψ''(1)Γ₂(f)`.
    pub gamma2: VertexFunction,
}

pub fn limit_probe(g: &Graph, psi: &PsiSpec, f: &[f64], eps: f64) -> Result<LimitProbe> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    check_len(g, f)?;
    let shifted: Vec<f64> = f.iter().map(|x| 1.0 + eps * x).collect();
    let scale = |v: VertexFunction, s: f64| {
        VertexFunction::from_fn(v.len(), |i| v[i] / s)
    };
    Ok(LimitProbe {
        laplacian: scale(psi_laplacian(g, psi, &shifted)?, eps),
        gamma: scale(gamma_psi(g, psi, &shifted)?, eps * eps),
        gamma2: scale(gamma2_psi(g, psi, &shifted)?, eps * eps),
    })
}

/// `Δ^ψ f(x)` and `Γ₂^ψ(f)(x)` at a single vertex, touching only `ball(x, 2)`.
///
/// The caller guarantees positivity and the ratio window on that ball.
pub fn psi_pair_at(g: &Graph, psi: &PsiSpec, f: &[f64], x: usize) -> (f64, f64) {
    let psi_one = psi.value(1.0);
    let lf_x = laplacian_at(g, f, x);
    let lpsi_x = psi_laplacian_at(g, psi, f, x, psi_one);
    let base = lf_x / f[x];
    let mut omega = 0.0;
    let mut lap_weighted = 0.0;
    let weighted_x = f[x] * lpsi_x;
    for &w in g.neighbors(x) {
        let r = f[w] / f[x];
        let lf_w = laplacian_at(g, f, w);
        omega += psi.d1(r) * r * (lf_w / f[w] - base);
        lap_weighted += f[w] * psi_laplacian_at(g, psi, f, w, psi_one) - weighted_x;
    }
    let g2 = 0.5 * (omega + lf_x * lpsi_x / f[x] - lap_weighted / f[x]);
    (lpsi_x, g2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::{gamma, gamma2};
    use crate::psi::Basis;
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

    fn psis() -> Vec<PsiSpec> {
        vec![PsiSpec::log(), PsiSpec::sqrt(), PsiSpec::power(0.5).unwrap()]
    }

    /// Definition route: Δ applied to the whole function `ψ(f/f(v))`, then read at v.
    fn psi_laplacian_by_definition(g: &Graph, psi: &PsiSpec, f: &[f64]) -> Vec<f64> {
        g.vertices()
            .map(|v| {
                let h: Vec<f64> = f.iter().map(|&y| psi.value(y / f[v])).collect();
                laplacian(g, &h)[v]
            })
            .collect()
    }

    fn omega_by_definition(g: &Graph, psi: &PsiSpec, f: &[f64]) -> Vec<f64> {
        let lf = laplacian(g, f);
        g.vertices()
            .map(|v| {
                let h: Vec<f64> = (0..f.len())
                    .map(|y| {
                        let r = f[y] / f[v];
                        psi.d1(r) * r * (lf[y] / f[y] - lf[v] / f[v])
                    })
                    .collect();
                laplacian(g, &h)[v]
            })
            .collect()
    }

    fn gamma2_psi_by_terms(g: &Graph, psi: &PsiSpec, f: &[f64]) -> Vec<f64> {
        let omega = omega_by_definition(g, psi, f);
        let lpsi = psi_laplacian_by_definition(g, psi, f);
        let lf = laplacian(g, f);
        let fl: Vec<f64> = f.iter().zip(&lpsi).map(|(a, b)| a * b).collect();
        let lfl = laplacian(g, &fl);
        let first = omega;
        let second: Vec<f64> = (0..f.len()).map(|v| lf[v] * lpsi[v] / f[v]).collect();
        let third: Vec<f64> = (0..f.len()).map(|v| lfl[v] / f[v]).collect();
        (0..f.len()).map(|v| 0.5 * (first[v] + second[v] - third[v])).collect()
    }

    #[test]
    fn psi_laplacian_examples() {
        let k2 = Graph::complete(2).unwrap();
        let v = psi_laplacian(&k2, &PsiSpec::sqrt(), &[1.0, 4.0]).unwrap();
        assert!((v[0] - 1.0).abs() < 1e-15 && (v[1] + 0.5).abs() < 1e-15);
        let c = Graph::cycle(6).unwrap();
        for psi in psis() {
            assert!(psi_laplacian(&c, &psi, &[2.5; 6]).unwrap().max_abs() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_positive(&mut rng, 6);
        let logf: Vec<f64> = f.iter().map(|x| x.ln()).collect();
        let a = psi_laplacian(&c, &PsiSpec::log(), &f).unwrap();
        let b = laplacian(&c, &logf);
        for v in 0..6 {
            assert!((a[v] - b[v]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let k2 = Graph::complete(2).unwrap();
        let psi = PsiSpec::log();
        assert!(matches!(
            psi_laplacian(&k2, &psi, &[1.0, 0.0]),
            Err(Error::NotPositive { vertex: 1, .. })
        ));
        assert!(matches!(
            psi_laplacian(&k2, &psi, &[1.0, 1e9]),
            Err(Error::DomainWindow { from: 0, to: 1, .. })
        ));
        assert!(matches!(
            psi_laplacian(&k2, &psi, &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        let convex = PsiSpec::basis("square", Basis::Square);
        assert!(matches!(gamma_psi(&k2, &convex, &[1.0, 2.0]), Err(Error::NotConcave(_))));
        assert!(limit_probe(&k2, &psi, &[0.0, -200.0], 1e-2).is_err());
    }

    #[test]
    fn agrees_with_definition_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let n = rng.random_range(2..=10);
            let g = random_graph(&mut rng, n);
            let f = random_positive(&mut rng, n);
            for psi in psis().into_iter().chain([PsiSpec::sqrt().plus_constant(3.0)]) {
                let a = psi_laplacian(&g, &psi, &f).unwrap();
                let b = psi_laplacian_by_definition(&g, &psi, &f);
                let o = omega_psi(&g, &psi, &f).unwrap();
                let ob = omega_by_definition(&g, &psi, &f);
                let g2 = gamma2_psi(&g, &psi, &f).unwrap();
                let g2b = gamma2_psi_by_terms(&g, &psi, &f);
                for v in 0..n {
                    assert!((a[v] - b[v]).abs() < 1e-11);
                    assert!((o[v] - ob[v]).abs() < 1e-10);
                    assert!((g2[v] - g2b[v]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn omega_log_shortcut_and_eigenvector() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_graph(&mut rng, 9);
        let f = random_positive(&mut rng, 9);
        let lf = laplacian(&g, &f);
        let q: Vec<f64> = (0..9).map(|v| lf[v] / f[v]).collect();
        let lq = laplacian(&g, &q);
        let o = omega_psi(&g, &PsiSpec::log(), &f).unwrap();
        for v in 0..9 {
            assert!((o[v] - lq[v]).abs() < 1e-12);
        }
        // on a regular graph the constant is the Perron eigenvector
        let c = Graph::cycle(5).unwrap();
        assert!(omega_psi(&c, &PsiSpec::sqrt(), &[0.7; 5]).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn gamma2_psi_c4_example_and_constants() {
        let c4 = Graph::cycle(4).unwrap();
        let f = [1.0, 2.0, 1.0, 2.0];
        let a = gamma2_psi(&c4, &PsiSpec::log(), &f).unwrap();
        let b = gamma2_psi_by_terms(&c4, &PsiSpec::log(), &f);
        for v in 0..4 {
            assert!((a[v] - b[v]).abs() < 1e-12);
        }
        for psi in psis() {
            assert!(gamma2_psi(&c4, &psi, &[3.0; 4]).unwrap().max_abs() < 1e-15);
            assert!(gamma_psi(&c4, &psi, &[3.0; 4]).unwrap().max_abs() < 1e-15);
        }
    }

    #[test]
    fn scaling_invariance_and_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = rng.random_range(2..=10);
            let g = random_graph(&mut rng, n);
            let f = random_positive(&mut rng, n);
            let r = rng.random_range(0.1..10.0);
            let rf: Vec<f64> = f.iter().map(|x| r * x).collect();
            for psi in psis() {
                let pairs = [
                    (psi_laplacian(&g, &psi, &f).unwrap(), psi_laplacian(&g, &psi, &rf).unwrap()),
                    (gamma_psi(&g, &psi, &f).unwrap(), gamma_psi(&g, &psi, &rf).unwrap()),
                    (gamma2_psi(&g, &psi, &f).unwrap(), gamma2_psi(&g, &psi, &rf).unwrap()),
                ];
                for (a, b) in pairs {
                    for v in 0..n {
                        assert!((a[v] - b[v]).abs() < 1e-10);
                    }
                }
            }
            let (a, b) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let phi = PsiSpec::log();
            let psi = PsiSpec::sqrt();
            let mix = PsiSpec::combine(a, &phi, b, &psi);
            let lm = psi_laplacian(&g, &mix, &rf).unwrap();
            let lp = psi_laplacian(&g, &phi, &f).unwrap();
            let lq = psi_laplacian(&g, &psi, &f).unwrap();
            for v in 0..n {
                assert!((lm[v] - a * lp[v] - b * lq[v]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_representation() {
        let k2 = Graph::complete(2).unwrap();
        assert!(gradient_representation_residual(&k2, &PsiSpec::sqrt(), &[1.0, 4.0]).unwrap() < 1e-12);
        let c6 = Graph::cycle(6).unwrap();
        assert!(gradient_representation_residual(&c6, &PsiSpec::log(), &[2.0; 6]).unwrap() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..30 {
            let f = random_positive(&mut rng, 6);
            for psi in psis() {
                assert!(gradient_representation_residual(&c6, &psi, &f).unwrap() < 1e-10);
                assert!(gamma_psi(&c6, &psi, &f).unwrap().iter().all(|&x| x >= -1e-12));
            }
        }
        let affine = PsiSpec::affine_function(2.0, -1.0);
        let f = random_positive(&mut rng, 6);
        assert!(gamma_psi(&c6, &affine, &f).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn local_pair_matches_global() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let n = rng.random_range(2..=10);
            let g = random_graph(&mut rng, n);
            let f = random_positive(&mut rng, n);
            for psi in psis() {
                let l = psi_laplacian(&g, &psi, &f).unwrap();
                let g2 = gamma2_psi(&g, &psi, &f).unwrap();
                for x in 0..n {
                    let (a, b) = psi_pair_at(&g, &psi, &f, x);
                    assert!((a - l[x]).abs() < 1e-12);
                    assert!((b - g2[x]).abs() < 1e-10 * (1.0 + b.abs()));
                }
            }
        }
    }

    #[test]
    fn gamma2_psi_is_local() {
        let g = Graph::cycle(10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_positive(&mut rng, 10);
        let mut h = f.clone();
        for x in &mut h[3..8] {
            *x *= rng.random_range(0.2..5.0);
        }
        for psi in psis() {
            let a = gamma2_psi(&g, &psi, &f).unwrap()[0];
            let b = gamma2_psi(&g, &psi, &h).unwrap()[0];
            assert!((a - b).abs() < 1e-12);
        }
    }

    /// Error ratios under ε-halving for the three probes.
    fn richardson(g: &Graph, psi: &PsiSpec, f: &[f64]) -> [f64; 3] {
        let d1 = psi.d1(1.0);
        let k = -psi.d2(1.0);
        let lf = laplacian(g, f);
        let gf = gamma(g, f, f);
        let g2f = gamma2(g, f, f);
        let err = |eps: f64| {
            let p = limit_probe(g, psi, f, eps).unwrap();
            let e = |a: &[f64], b: &[f64], s: f64| {
                a.iter().zip(b).map(|(x, y)| (x - s * y).abs()).fold(0.0, f64::max)
            };
            [e(&p.laplacian, &lf, d1), e(&p.gamma, &gf, k), e(&p.gamma2, &g2f, k)]
        };
        let a = err(1e-2);
        let b = err(5e-3);
        let c = err(2.5e-3);
        let mut worst = [0.0f64; 3];
        for i in 0..3 {
            let r1 = b[i] / a[i];
            let r2 = c[i] / b[i];
            worst[i] = if (r1 - 0.5).abs() > (r2 - 0.5).abs() { r1 } else { r2 };
        }
        worst
    }

    #[test]
    fn limit_probe_converges_first_order() {
        let c5 = Graph::cycle(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        for psi in [PsiSpec::log(), PsiSpec::power(0.5).unwrap()] {
            for r in richardson(&c5, &psi, &f) {
                assert!((0.3..=0.7).contains(&r), "ratio {r}");
            }
        }
        let zero = limit_probe(&c5, &PsiSpec::log(), &[0.0; 5], 1e-3).unwrap();
        assert_eq!(zero.laplacian.max_abs() + zero.gamma.max_abs() + zero.gamma2.max_abs(), 0.0);
    }
}
