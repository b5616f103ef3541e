//! End-to-end checks on built-in graphs, one function per criterion. The CLI
//! `paper-suite` command and the `acceptance` test target both run these.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::cd_verifier::{cd_corollary_check, cdpsi_check, evaluate_at, CdPsiVerdict};
use crate::constants::{c_log_one_dimensional, c_psi, harnack_constant, DEFAULT_TOL};
use crate::error::Result;
use crate::gamma::{gamma, gamma2, laplacian};
use crate::graph::Graph;
use crate::harnack::{
    edge_estimate_check, gradient_estimate_check, harnack_check, prior_harnack_bound,
    ricci_flat_harnack_bound_with, Coefficients,
};
use crate::heat::{
    default_time_grid, key_identity_residual, liyau_with, semigroup_with, solve_heat,
    SpectralDecomposition,
};
use crate::psi::PsiSpec;
use crate::psi_ops::{gamma2_psi, gamma_psi, gradient_representation_residual, limit_probe, psi_laplacian};
use crate::ricci_flat::{eta_permutation_check, is_ricci_flat, DEFAULT_NODE_LIMIT};

/// Tolerances and sizes, one constant per requirement.
pub mod limits {
    pub const H_LOG: f64 = 2.0;
    pub const H_SQRT: f64 = 8.0;
    pub const H_TOL: f64 = 1e-6;
    pub const C_SQRT_MAX: f64 = 1e-9;
    pub const C_LOG_TARGET: f64 = 0.795;
    pub const C_LOG_TOL: f64 = 5e-3;
    pub const C_LOG_ORACLE_TOL: f64 = 5e-3;
    pub const IDENTITY_INSTANCES: usize = 200;
    pub const IDENTITY_MAX_N: usize = 12;
    pub const CHAIN_RULE_TOL: f64 = 1e-10;
    pub const GRADIENT_REPR_TOL: f64 = 1e-10;
    pub const KEY_IDENTITY_TOL: f64 = 1e-8;
    pub const INVARIANCE_TOL: f64 = 1e-10;
    pub const LIMIT_INSTANCES: usize = 50;
    pub const LIMIT_EPS: [f64; 3] = [1e-2, 5e-3, 2.5e-3];
    pub const RICHARDSON_WINDOW: (f64, f64) = (0.3, 0.7);
    pub const CDPSI_BUDGET: u64 = 10_000;
    pub const CDPSI_SMALL_D: f64 = 0.1;
    pub const WITNESS_TOL: f64 = 1e-8;
    pub const LIYAU_INITIAL_DATA: usize = 50;
    pub const HARNACK_INITIAL_DATA: usize = 10;
    pub const EDGE_ESTIMATE_TOL: f64 = 1e-9;
    pub const LOG_COEFFICIENT: f64 = 0.629;
    pub const LOG_COEFFICIENT_TOL: f64 = 0.004;
    pub const IMPROVEMENT_FACTOR: f64 = 1.59;
    pub const IMPROVEMENT_TOL: f64 = 0.01;
    pub const COROLLARY_SLACK: f64 = 0.05;
    /// Runtime targets in seconds, criteria 1 through 8.
    pub const RUNTIME_S: [f64; 8] = [10.0, 30.0, 20.0, 30.0, 90.0, 60.0, 60.0, 20.0];
}

#[derive(Debug, Clone, Default)]
pub struct SuiteOptions {
    pub seed: u64,
    /// Replaces the computed `C_log` everywhere it is used downstream.
    pub c_log_override: Option<f64>,
    /// Skip runtime targets (e.g. in unoptimized builds).
    pub ignore_runtime: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub seconds: f64,
    pub runtime_target: f64,
    pub measured: serde_json::Value,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] criterion {} {}: {} ({:.2}s, target {:.0}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.measured,
            self.seconds,
            self.runtime_target
        )
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub c_log: f64,
    pub criteria: Vec<CriterionResult>,
    pub all_passed: bool,
}

fn finish(
    id: usize,
    name: &str,
    opts: &SuiteOptions,
    start: Instant,
    passed: bool,
    measured: serde_json::Value,
) -> CriterionResult {
    let seconds = start.elapsed().as_secs_f64();
    let runtime_target = limits::RUNTIME_S[id - 1];
    CriterionResult {
        id,
        name: name.to_string(),
        passed: passed && (opts.ignore_runtime || seconds <= runtime_target),
        seconds,
        runtime_target,
        measured,
    }
}

/// `C_log` as used downstream: the override if given, else the 2-D optimum.
pub fn c_log(opts: &SuiteOptions) -> f64 {
    opts.c_log_override
        .unwrap_or_else(|| c_psi(&PsiSpec::log(), DEFAULT_TOL).value)
}

fn psi_family() -> [PsiSpec; 3] {
    [PsiSpec::log(), PsiSpec::sqrt(), PsiSpec::power(0.5).expect("valid exponent")]
}

fn positive_data(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-spread..spread).exp()).collect()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn criterion_constants(opts: &SuiteOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let h_log = harnack_constant(&PsiSpec::log(), DEFAULT_TOL)?.value().unwrap_or(f64::INFINITY);
    let h_sqrt = harnack_constant(&PsiSpec::sqrt(), DEFAULT_TOL)?.value().unwrap_or(f64::INFINITY);
    let c_sqrt = c_psi(&PsiSpec::sqrt(), DEFAULT_TOL).value;
    let c_log_value = c_log(opts);
    let (oracle, _) = c_log_one_dimensional(DEFAULT_TOL);
    let passed = (h_log - limits::H_LOG).abs() <= limits::H_TOL
        && (h_sqrt - limits::H_SQRT).abs() <= limits::H_TOL
        && c_sqrt <= limits::C_SQRT_MAX
        && (0.5..=1.0).contains(&c_log_value)
        && (c_log_value - limits::C_LOG_TARGET).abs() <= limits::C_LOG_TOL
        && (c_log_value - oracle).abs() <= limits::C_LOG_ORACLE_TOL;
    Ok(finish(1, "constants", opts, start, passed, json!({
        "H_log": h_log, "H_sqrt": h_sqrt, "C_sqrt": c_sqrt,
        "C_log": c_log_value, "C_log_1d_oracle": oracle,
    })))
}

pub fn criterion_identities(opts: &SuiteOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let family = psi_family();
    let (mut chain, mut grad, mut key, mut scaling, mut linear) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for k in 0..limits::IDENTITY_INSTANCES {
        let n = rng.random_range(2..=limits::IDENTITY_MAX_N);
        let p = rng.random_range(0.2..0.8);
        let g = Graph::random_gnp(n, p, false, &mut rng)?;
        let psi = &family[k % family.len()];
        let f = positive_data(&mut rng, n, 2.0);

        let root: Vec<f64> = f.iter().map(|x| x.sqrt()).collect();
        let lr = laplacian(&g, &root);
        let lf = laplacian(&g, &f);
        let gr = gamma(&g, &root, &root);
        for v in 0..n {
            chain = chain.max((2.0 * root[v] * lr[v] - lf[v] + 2.0 * gr[v]).abs());
        }
        grad = grad.max(gradient_representation_residual(&g, psi, &f)?);

        let t = rng.random_range(0.01..2.0);
        let u = solve_heat(&g, &f, &[0.0, t])?;
        for idx in 0..2 {
            let r = key_identity_residual(&g, psi, &u, idx)?;
            key = key.max(r.residual).max(r.gradient_form_residual.unwrap_or(0.0));
        }

        let r = rng.random_range(0.1..10.0);
        let rf: Vec<f64> = f.iter().map(|x| r * x).collect();
        scaling = scaling
            .max(max_abs_diff(&psi_laplacian(&g, psi, &f)?, &psi_laplacian(&g, psi, &rf)?))
            .max(max_abs_diff(&gamma_psi(&g, psi, &f)?, &gamma_psi(&g, psi, &rf)?))
            .max(max_abs_diff(&gamma2_psi(&g, psi, &f)?, &gamma2_psi(&g, psi, &rf)?));

        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let other = &family[(k + 1) % family.len()];
        let mix = PsiSpec::combine(a, psi, b, other);
        let lm = psi_laplacian(&g, &mix, &f)?;
        let lp = psi_laplacian(&g, psi, &f)?;
        let lo = psi_laplacian(&g, other, &f)?;
        for v in 0..n {
            linear = linear.max((lm[v] - a * lp[v] - b * lo[v]).abs());
        }
    }
    let passed = chain <= limits::CHAIN_RULE_TOL
        && grad <= limits::GRADIENT_REPR_TOL
        && key <= limits::KEY_IDENTITY_TOL
        && scaling <= limits::INVARIANCE_TOL
        && linear <= limits::INVARIANCE_TOL;
    Ok(finish(2, "identity suite", opts, start, passed, json!({
        "instances": limits::IDENTITY_INSTANCES,
        "chain_rule": chain, "gradient_representation": grad, "key_identity": key,
        "scaling": scaling, "linearity": linear,
    })))
}

pub fn criterion_limits(opts: &SuiteOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(3));
    let family = psi_family();
    let (lo, hi) = limits::RICHARDSON_WINDOW;
    let mut worst = [0.5f64; 3];
    let mut failures = 0usize;
    for k in 0..limits::LIMIT_INSTANCES {
        let n = rng.random_range(3..=10);
        let g = Graph::random_gnp(n, 0.5, true, &mut rng)?;
        let psi = &family[k % family.len()];
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (slope, curv) = (psi.d1(1.0), -psi.d2(1.0));
        let targets = [
            laplacian(&g, &f).iter().map(|x| slope * x).collect::<Vec<_>>(),
            gamma(&g, &f, &f).iter().map(|x| curv * x).collect(),
            gamma2(&g, &f, &f).iter().map(|x| curv * x).collect(),
        ];
        let errors: Vec<[f64; 3]> = limits::LIMIT_EPS
            .iter()
            .map(|&eps| {
                let p = limit_probe(&g, psi, &f, eps)?;
                Ok([
                    max_abs_diff(&p.laplacian, &targets[0]),
                    max_abs_diff(&p.gamma, &targets[1]),
                    max_abs_diff(&p.gamma2, &targets[2]),
                ])
            })
            .collect::<Result<_>>()?;
        for probe in 0..3 {
            for w in errors.windows(2) {
                let ratio = w[1][probe] / w[0][probe];
                if !(lo..=hi).contains(&ratio) {
                    failures += 1;
                }
                if (ratio - 0.5).abs() > (worst[probe] - 0.5).abs() || ratio.is_nan() {
                    worst[probe] = ratio;
                }
            }
        }
    }
    Ok(finish(3, "limit theorem", opts, start, failures == 0, json!({
        "instances": limits::LIMIT_INSTANCES,
        "worst_ratio": {"laplacian": worst[0], "gamma": worst[1], "gamma2": worst[2]},
        "ratios_outside_window": failures,
    })))
}

pub fn criterion_ricci_flat(opts: &SuiteOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut measured = serde_json::Map::new();
    let mut passed = true;
    for (name, expected) in [
        ("k2", Some(1)),
        ("cycle4", Some(2)),
        ("cycle5", Some(2)),
        ("cycle6", Some(2)),
        ("cycle12", Some(2)),
        ("torus3x3", Some(4)),
        ("hypercube3", Some(3)),
        ("path3", None),
        ("star3", None),
    ] {
        let g = Graph::named(name)?;
        let cert = is_ricci_flat(&g, DEFAULT_NODE_LIMIT);
        let permutations_ok = cert
            .per_vertex
            .iter()
            .filter_map(|o| o.maps())
            .all(|m| eta_permutation_check(&g, m, 10, opts.seed).holds);
        let ok = cert.degree == expected && !cert.exhausted && permutations_ok;
        passed &= ok;
        measured.insert(name.into(), json!({"degree": cert.degree, "ok": ok}));
    }
    Ok(finish(4, "Ricci-flat certification", opts, start, passed, measured.into()))
}

pub fn criterion_cdpsi(opts: &SuiteOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let c = c_log(opts);
    let psi = PsiSpec::log();
    let mut measured = serde_json::Map::new();
    let mut passed = true;
    for (name, degree) in [("cycle6", 2), ("cycle12", 2), ("torus3x3", 4), ("hypercube3", 3)] {
        let g = Graph::named(name)?;
        let d = degree as f64 / c;
        let r = cdpsi_check(&g, &psi, d, limits::CDPSI_BUDGET, opts.seed)?;
        let worst = r
            .per_vertex
            .iter()
            .filter_map(|s| s.worst_margin.as_ref().map(|m| m.margin))
            .fold(f64::INFINITY, f64::min);
        passed &= !r.violated();
        measured.insert(name.into(), json!({"d": d, "violated": r.violated(), "worst_margin": worst}));
    }
    let g = Graph::cycle(6)?;
    let small = cdpsi_check(&g, &psi, limits::CDPSI_SMALL_D, limits::CDPSI_BUDGET, opts.seed)?;
    let again = cdpsi_check(&g, &psi, limits::CDPSI_SMALL_D, limits::CDPSI_BUDGET, opts.seed)?;
    let witness_ok = match &small.verdict {
        CdPsiVerdict::Violated { vertex, margin, witness } => {
            let (l, g2) = evaluate_at(&g, &psi, *vertex, witness);
            let recomputed = g2 - l * l / limits::CDPSI_SMALL_D;
            measured.insert("cycle6_small_d".into(), json!({"vertex": vertex, "margin": margin, "recomputed": recomputed}));
            (recomputed - margin).abs() <= limits::WITNESS_TOL && again == small
        }
        CdPsiVerdict::NoCounterexampleFound { .. } => false,
    };
    passed &= witness_ok;
    Ok(finish(5, "CDpsi on Ricci-flat graphs", opts, start, passed, measured.into()))
}

pub fn criterion_liyau(opts: &SuiteOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let c = c_log(opts);
    let psi = PsiSpec::log();
    let times = default_time_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(6));
    let mut measured = serde_json::Map::new();
    let mut passed = true;
    for name in ["cycle6", "cycle12"] {
        let g = Graph::named(name)?;
        let spec = SpectralDecomposition::new(&g);
        let d = 2.0 / c;
        let (mut liyau_worst, mut semigroup_worst) = (f64::NEG_INFINITY, f64::INFINITY);
        let (mut liyau_fail, mut semigroup_fail) = (0, 0);
        for _ in 0..limits::LIYAU_INITIAL_DATA {
            let f0 = positive_data(&mut rng, g.vertex_count(), 2.0);
            let ly = liyau_with(&spec, &g, &psi, &f0, d, &times)?;
            let sg = semigroup_with(&spec, &g, &psi, &f0, &times, d)?;
            liyau_worst = liyau_worst.max(ly.worst.margin);
            semigroup_worst = semigroup_worst.min(sg.worst.margin);
            liyau_fail += usize::from(!ly.holds);
            semigroup_fail += usize::from(!sg.holds);
        }
        passed &= liyau_fail == 0 && semigroup_fail == 0;
        measured.insert(name.into(), json!({
            "d": d, "liyau_max_margin": liyau_worst, "liyau_failures": liyau_fail,
            "semigroup_min_margin": semigroup_worst, "semigroup_failures": semigroup_fail,
        }));
    }
    Ok(finish(6, "Li-Yau and semigroup form", opts, start, passed, measured.into()))
}

pub fn criterion_harnack(opts: &SuiteOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let c = c_log(opts);
    let psi = PsiSpec::log();
    let h_log = harnack_constant(&psi, DEFAULT_TOL)?.value().unwrap_or(f64::INFINITY);
    let times = default_time_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(7));
    let (mut estimate_held, mut implication_failures, mut violated_pairs) = (0, 0, 0u64);
    let mut tightest = f64::INFINITY;
    for (name, degree) in [("cycle6", 2), ("cycle12", 2), ("torus3x3", 4), ("hypercube3", 3)] {
        let g = Graph::named(name)?;
        let coeffs = Coefficients::from_liyau(&psi, degree as f64 / c)?;
        for _ in 0..limits::HARNACK_INITIAL_DATA {
            let f0 = positive_data(&mut rng, g.vertex_count(), 2.0);
            let u = solve_heat(&g, &f0, &times)?;
            if gradient_estimate_check(&g, &psi, &u, coeffs)?.holds {
                estimate_held += 1;
                let r = harnack_check(&g, &u, coeffs, h_log)?;
                violated_pairs += r.violations;
                implication_failures += usize::from(!r.holds);
                if let Some(t) = r.tightest {
                    tightest = tightest.min(t.slack);
                }
            }
        }
    }

    let mut edge_worst = f64::NEG_INFINITY;
    for (k, p) in psi_family().iter().enumerate() {
        let h = harnack_constant(p, DEFAULT_TOL)?.value().unwrap_or(f64::INFINITY);
        for _ in 0..20 {
            let n = rng.random_range(2..=12);
            let g = Graph::random_gnp(n, 0.5, false, &mut rng)?;
            let f = positive_data(&mut rng, n, 1.0 + k as f64);
            if let Some(w) = edge_estimate_check(&g, p, &f, h)? {
                edge_worst = edge_worst.max(w.margin);
            }
        }
    }

    let degree = 4;
    let rf = ricci_flat_harnack_bound_with(degree, c, h_log, 2, 1.0, 3.0)?;
    let per_degree = rf.log_coefficient / degree as f64;
    let improvement = degree as f64 / rf.log_coefficient;
    let beats_prior = rf.bound < prior_harnack_bound(degree, 2, 1.0, 3.0)?;
    let passed = implication_failures == 0
        && estimate_held > 0
        && edge_worst <= limits::EDGE_ESTIMATE_TOL
        && (per_degree - limits::LOG_COEFFICIENT).abs() <= limits::LOG_COEFFICIENT_TOL
        && (improvement - limits::IMPROVEMENT_FACTOR).abs() <= limits::IMPROVEMENT_TOL
        && beats_prior;
    Ok(finish(7, "Harnack", opts, start, passed, json!({
        "instances_with_gradient_estimate": estimate_held,
        "implication_failures": implication_failures,
        "violated_pairs": violated_pairs,
        "tightest_slack": tightest,
        "edge_estimate_max_margin": edge_worst,
        "log_coefficient_per_degree": per_degree,
        "improvement_factor": improvement,
    })))
}

pub fn criterion_corollary(opts: &SuiteOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let g = Graph::cycle(6)?;
    let rep = cd_corollary_check(&g, &PsiSpec::log(), limits::CDPSI_BUDGET, opts.seed, limits::COROLLARY_SLACK)?;
    let rows: Vec<_> = rep
        .rows
        .iter()
        .map(|r| json!({"vertex": r.vertex, "exact": r.exact, "mapped": r.mapped}))
        .collect();
    Ok(finish(8, "CD corollary", opts, start, rep.consistent, json!({"factor": rep.factor, "rows": rows})))
}

pub type CriterionFn = fn(&SuiteOptions) -> Result<CriterionResult>;

pub const CRITERIA: [CriterionFn; 8] = [
    criterion_constants,
    criterion_identities,
    criterion_limits,
    criterion_ricci_flat,
    criterion_cdpsi,
    criterion_liyau,
    criterion_harnack,
    criterion_corollary,
];

pub fn paper_suite(opts: &SuiteOptions) -> Result<SuiteReport> {
    let criteria = CRITERIA.iter().map(|f| f(opts)).collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        seed: opts.seed,
        c_log: c_log(opts),
        all_passed: criteria.iter().all(|c| c.passed),
        criteria,
    })
}
