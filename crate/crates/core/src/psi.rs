//! Parameter functions ψ on (0, ∞), their concavity defect ψ̄ and the
//! two-point function ψ̃.
//!
//! A [`PsiSpec`] is a finite linear combination of analytic basis functions
//! plus a constant. That keeps derivatives exact and makes the family closed
//! under the affine combinations `aφ + bψ` that the ψ-Laplacian is linear in.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Lower end of the evaluation window for ratios `f(w)/f(v)`.
pub const DOMAIN_MIN: f64 = 1e-8;
/// Upper end of the evaluation window for ratios `f(w)/f(v)`.
pub const DOMAIN_MAX: f64 = 1e8;

pub fn in_domain(x: f64) -> bool {
    (DOMAIN_MIN..=DOMAIN_MAX).contains(&x)
}

/// Analytic building blocks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Basis {
    /// `ln x`
    Log,
    /// `√x`
    Sqrt,
    /// `(x^a − 1)/a`, `a ≠ 0`
    Power(f64),
    /// `x`
    Linear,
    /// `x²`
    Square,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Concave,
    Affine,
    Convex,
}

impl Basis {
    fn value(self, x: f64) -> f64 {
        match self {
            Basis::Log => x.ln(),
            Basis::Sqrt => x.sqrt(),
            Basis::Power(a) => (x.powf(a) - 1.0) / a,
            Basis::Linear => x,
            Basis::Square => x * x,
        }
    }

    fn d1(self, x: f64) -> f64 {
        match self {
            Basis::Log => 1.0 / x,
            Basis::Sqrt => 0.5 / x.sqrt(),
            Basis::Power(a) => x.powf(a - 1.0),
            Basis::Linear => 1.0,
            Basis::Square => 2.0 * x,
        }
    }

    fn d2(self, x: f64) -> f64 {
        match self {
            Basis::Log => -1.0 / (x * x),
            Basis::Sqrt => -0.25 / (x * x.sqrt()),
            Basis::Power(a) => (a - 1.0) * x.powf(a - 2.0),
            Basis::Linear => 0.0,
            Basis::Square => 2.0,
        }
    }

    /// `b(e^s) − b(1)` without cancellation for small `s`.
    fn log_increment(self, s: f64) -> f64 {
        match self {
            Basis::Log => s,
            Basis::Sqrt => (0.5 * s).exp_m1(),
            Basis::Power(a) => (a * s).exp_m1() / a,
            Basis::Linear => s.exp_m1(),
            Basis::Square => (2.0 * s).exp_m1(),
        }
    }

    fn shape(self) -> Shape {
        match self {
            Basis::Log | Basis::Sqrt => Shape::Concave,
            Basis::Power(a) if a < 1.0 => Shape::Concave,
            Basis::Power(a) if a > 1.0 => Shape::Convex,
            Basis::Power(_) | Basis::Linear => Shape::Affine,
            Basis::Square => Shape::Convex,
        }
    }
}

/// A parameter function `ψ(x) = c + Σ aₖ bₖ(x)` with exact derivatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiSpec {
    name: String,
    terms: Vec<(f64, Basis)>,
    constant: f64,
    claims_concave: bool,
}

impl fmt::Display for PsiSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl PsiSpec {
    fn from_terms(name: String, terms: Vec<(f64, Basis)>, constant: f64) -> Self {
        let claims_concave = terms.iter().all(|&(c, b)| match b.shape() {
            Shape::Affine => true,
            Shape::Concave => c >= 0.0,
            Shape::Convex => c <= 0.0,
        });
        PsiSpec {
            name,
            terms,
            constant,
            claims_concave,
        }
    }

    pub fn log() -> Self {
        Self::from_terms("log".into(), vec![(1.0, Basis::Log)], 0.0)
    }

    pub fn sqrt() -> Self {
        Self::from_terms("sqrt".into(), vec![(1.0, Basis::Sqrt)], 0.0)
    }

    /// `ψ_a(x) = (x^a − 1)/a` for `0 < a < 1`.
    pub fn power(a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::InvalidPsi(format!("power:{a}")));
        }
        Ok(Self::from_terms(format!("power:{a}"), vec![(1.0, Basis::Power(a))], 0.0))
    }

    /// Any single basis function, including non-concave ones.
    pub fn basis(name: &str, b: Basis) -> Self {
        Self::from_terms(name.into(), vec![(1.0, b)], 0.0)
    }

    /// `x ↦ slope·x + intercept`.
    pub fn affine_function(slope: f64, intercept: f64) -> Self {
        Self::from_terms(
            format!("{slope}*x+{intercept}"),
            vec![(slope, Basis::Linear)],
            intercept,
        )
    }

    /// Parses the CLI selector grammar `log | sqrt | power:a`.
    pub fn parse(selector: &str) -> Result<Self> {
        match selector.trim() {
            "log" => Ok(Self::log()),
            "sqrt" => Ok(Self::sqrt()),
            s => {
                let a = s
                    .strip_prefix("power:")
                    .and_then(|a| a.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidPsi(s.into()))?;
                Self::power(a)
            }
        }
    }

    /// `a·φ + b·ψ`.
    pub fn combine(a: f64, phi: &PsiSpec, b: f64, psi: &PsiSpec) -> Self {
        let mut terms: Vec<(f64, Basis)> = Vec::new();
        let scaled = phi
            .terms
            .iter()
            .map(|&(c, t)| (a * c, t))
            .chain(psi.terms.iter().map(|&(c, t)| (b * c, t)));
        for (c, basis) in scaled {
            match terms.iter_mut().find(|(_, t)| *t == basis) {
                Some(slot) => slot.0 += c,
                None => terms.push((c, basis)),
            }
        }
        terms.retain(|&(c, _)| c != 0.0);
        Self::from_terms(
            format!("{a}*({phi})+{b}*({psi})"),
            terms,
            a * phi.constant + b * psi.constant,
        )
    }

    pub fn scaled(&self, a: f64) -> Self {
        let zero = Self::from_terms(String::new(), Vec::new(), 0.0);
        let mut out = Self::combine(a, self, 0.0, &zero);
        out.name = format!("{a}*({})", self.name);
        out
    }

    pub fn plus_constant(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.constant += c;
        out.name = format!("({})+{c}", self.name);
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn claims_concave(&self) -> bool {
        self.claims_concave
    }

    pub fn value(&self, x: f64) -> f64 {
        self.constant + self.terms.iter().map(|&(c, b)| c * b.value(x)).sum::<f64>()
    }

    pub fn d1(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, b)| c * b.d1(x)).sum()
    }

    pub fn d2(&self, x: f64) -> f64 {
        self.terms.iter().map(|&(c, b)| c * b.d2(x)).sum()
    }

    /// `ψ(e^s) − ψ(1)`, accurate for small `|s|`.
    pub fn log_increment(&self, s: f64) -> f64 {
        self.terms.iter().map(|&(c, b)| c * b.log_increment(s)).sum()
    }

    /// Value with the evaluation window enforced.
    pub fn checked_value(&self, x: f64) -> Result<f64> {
        if in_domain(x) {
            Ok(self.value(x))
        } else {
            Err(Error::InvalidParameter(format!(
                "{x:e} outside psi domain window [1e-8, 1e8]"
            )))
        }
    }

    /// True when the combination contains no non-affine basis function.
    pub fn is_affine(&self) -> bool {
        self.terms.iter().all(|&(c, b)| c == 0.0 || b.shape() == Shape::Affine)
    }

    pub fn require_concave(&self) -> Result<()> {
        if self.claims_concave {
            Ok(())
        } else {
            Err(Error::NotConcave(self.name.clone()))
        }
    }
}

/// The concavity defect `ψ̄(x) = ψ'(1)(x − 1) − (ψ(x) − ψ(1))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiBar(PsiSpec);

impl std::ops::Deref for PsiBar {
    type Target = PsiSpec;
    fn deref(&self) -> &PsiSpec {
        &self.0
    }
}

impl PsiBar {
    pub fn into_inner(self) -> PsiSpec {
        self.0
    }

    /// `ψ̄(e^s)` via `ψ'(1)·expm1(s) − (ψ(e^s) − ψ(1))`.
    pub fn at_log(&self, s: f64) -> f64 {
        self.0.log_increment(s)
    }
}

pub fn psi_bar(psi: &PsiSpec) -> PsiBar {
    let slope = psi.d1(1.0);
    let linear = PsiSpec::affine_function(slope, psi.value(1.0) - slope);
    let mut bar = PsiSpec::combine(1.0, &linear, -1.0, psi);
    bar.name = format!("bar({})", psi.name);
    PsiBar(bar)
}

/// `ψ̃(x,y) = [ψ'(x) + ψ'(y)](1 − xy) + x[ψ(y) − ψ(1/x)] + y[ψ(x) − ψ(1/y)]`.
pub fn psi_tilde(psi: &PsiSpec, x: f64, y: f64) -> f64 {
    (psi.d1(x) + psi.d1(y)) * (1.0 - x * y)
        + x * (psi.value(y) - psi.value(1.0 / x))
        + y * (psi.value(x) - psi.value(1.0 / y))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ConcavityViolation {
    /// `ψ((x+y)/2) < (ψ(x)+ψ(y))/2 − tol`
    Midpoint { x: f64, y: f64, defect: f64 },
    /// `ψ''(x) > 1e-12`
    SecondDerivative { x: f64, d2: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcavityReport {
    pub concave: bool,
    pub violations: Vec<ConcavityViolation>,
}

/// Log-spaced grid of `count` points over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1).max(1) as f64).exp())
        .collect()
}

/// Midpoint-concavity screen on all grid pairs plus a second-derivative sign
/// check. The midpoint tolerance is `1e-12` scaled by the magnitude of the
/// values compared.
pub fn check_concavity(psi: &PsiSpec, grid: &[f64]) -> ConcavityReport {
    const TOL: f64 = 1e-12;
    let mut violations = Vec::new();
    for (i, &x) in grid.iter().enumerate() {
        let d2 = psi.d2(x);
        if d2 > TOL {
            violations.push(ConcavityViolation::SecondDerivative { x, d2 });
        }
        for &y in &grid[i + 1..] {
            let (px, py) = (psi.value(x), psi.value(y));
            let mid = psi.value(0.5 * (x + y));
            let defect = mid - 0.5 * (px + py);
            if defect < -TOL * (1.0 + px.abs() + py.abs()) {
                violations.push(ConcavityViolation::Midpoint { x, y, defect });
            }
        }
    }
    ConcavityReport {
        concave: violations.is_empty(),
        violations,
    }
}
