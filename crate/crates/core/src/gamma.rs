//! Classical Bakry–Émery calculus on graphs: Δ, Γ, Γ₂ and the optimal
//! CD(d,0) dimension at a vertex.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// A real function on the vertices of a graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexFunction(Vec<f64>);

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(vertex) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NotFinite { vertex });
        }
        Ok(VertexFunction(values))
    }

    pub fn for_graph(g: &Graph, values: Vec<f64>) -> Result<Self> {
        check_len(g, &values)?;
        Self::new(values)
    }

    pub fn constant(n: usize, c: f64) -> Self {
        VertexFunction(vec![c; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> f64) -> Self {
        VertexFunction((0..n).map(f).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Deref for VertexFunction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<VertexFunction> for Vec<f64> {
    fn from(f: VertexFunction) -> Self {
        f.0
    }
}

/// A strictly positive function on the vertices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveVertexFunction(Vec<f64>);

impl PositiveVertexFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (vertex, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NotFinite { vertex });
            }
            if value <= 0.0 {
                return Err(Error::NotPositive { vertex, value });
            }
        }
        Ok(PositiveVertexFunction(values))
    }

    pub fn for_graph(g: &Graph, values: Vec<f64>) -> Result<Self> {
        check_len(g, &values)?;
        Self::new(values)
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn scaled(&self, r: f64) -> Result<Self> {
        Self::new(self.0.iter().map(|v| v * r).collect())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for PositiveVertexFunction {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<VertexFunction> for PositiveVertexFunction {
    type Error = Error;
    fn try_from(f: VertexFunction) -> Result<Self> {
        Self::new(f.0)
    }
}

pub(crate) fn check_len(g: &Graph, f: &[f64]) -> Result<()> {
    if f.len() == g.vertex_count() {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            expected: g.vertex_count(),
            got: f.len(),
        })
    }
}

fn assert_len(g: &Graph, f: &[f64]) {
    assert_eq!(
        f.len(),
        g.vertex_count(),
        "vertex function length does not match graph"
    );
}

/// `Δf(v) = Σ_{w∼v} (f(w) − f(v))` at a single vertex.
pub fn laplacian_at(g: &Graph, f: &[f64], v: usize) -> f64 {
    g.neighbors(v).iter().map(|&w| f[w] - f[v]).sum()
}

pub fn laplacian(g: &Graph, f: &[f64]) -> VertexFunction {
    assert_len(g, f);
    VertexFunction(g.vertices().map(|v| laplacian_at(g, f, v)).collect())
}

fn product(f: &[f64], h: &[f64]) -> Vec<f64> {
    f.iter().zip(h).map(|(a, b)| a * b).collect()
}

/// `Γ(f,h) = ½[Δ(fh) − fΔh − hΔf]`.
pub fn gamma(g: &Graph, f: &[f64], h: &[f64]) -> VertexFunction {
    assert_len(g, f);
    assert_len(g, h);
    let lfh = laplacian(g, &product(f, h));
    let lf = laplacian(g, f);
    let lh = laplacian(g, h);
    VertexFunction(
        g.vertices()
            .map(|v| 0.5 * (lfh[v] - f[v] * lh[v] - h[v] * lf[v]))
            .collect(),
    )
}

/// `Γ₂(f,h) = ½[ΔΓ(f,h) − Γ(f,Δh) − Γ(h,Δf)]`.
pub fn gamma2(g: &Graph, f: &[f64], h: &[f64]) -> VertexFunction {
    let lf = laplacian(g, f);
    let lh = laplacian(g, h);
    let dg = laplacian(g, &gamma(g, f, h));
    let a = gamma(g, f, &lh);
    let b = gamma(g, h, &lf);
    VertexFunction(
        g.vertices()
            .map(|v| 0.5 * (dg[v] - a[v] - b[v]))
            .collect(),
    )
}

/// Exact quadratic representation of `f ↦ Γ₂(f)(x)` and the linear functional
/// `f ↦ Δf(x)` in the coordinates of `ball(x, 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalQuadraticForm {
    pub center: usize,
    pub coords: Vec<usize>,
    pub matrix: DMatrix<f64>,
    pub linear: DVector<f64>,
}

impl LocalQuadraticForm {
    fn restrict(&self, f: &[f64]) -> DVector<f64> {
        DVector::from_iterator(self.coords.len(), self.coords.iter().map(|&w| f[w]))
    }

    /// `Γ₂(f)(x)` evaluated through the form.
    pub fn quadratic(&self, f: &[f64]) -> f64 {
        let r = self.restrict(f);
        r.dot(&(&self.matrix * &r))
    }

    /// `Δf(x)` evaluated through the form.
    pub fn linear_value(&self, f: &[f64]) -> f64 {
        self.linear.dot(&self.restrict(f))
    }
}

/// Assembles the Γ₂ form at `x` by polarization over indicator functions.
pub fn gamma2_form(g: &Graph, x: usize) -> LocalQuadraticForm {
    let coords: Vec<usize> = g.ball(x, 2).as_slice().to_vec();
    let n = g.vertex_count();
    let m = coords.len();
    let indicator = |ids: &[usize]| {
        let mut f = vec![0.0; n];
        for &i in ids {
            f[i] += 1.0;
        }
        f
    };
    let quad = |f: &[f64]| gamma2(g, f, f)[x];

    let diag: Vec<f64> = coords.iter().map(|&a| quad(&indicator(&[a]))).collect();
    let mut matrix = DMatrix::zeros(m, m);
    for i in 0..m {
        matrix[(i, i)] = diag[i];
        for j in i + 1..m {
            let both = quad(&indicator(&[coords[i], coords[j]]));
            let q = 0.5 * (both - diag[i] - diag[j]);
            matrix[(i, j)] = q;
            matrix[(j, i)] = q;
        }
    }
    let linear = DVector::from_iterator(
        m,
        coords.iter().map(|&a| laplacian_at(g, &indicator(&[a]), x)),
    );
    LocalQuadraticForm {
        center: x,
        coords,
        matrix,
        linear,
    }
}

/// Eigenvalue cutoff (relative to the largest eigenvalue magnitude) that
/// governs every CD(d,0) verdict.
pub const CD_EIGEN_CUTOFF: f64 = 1e-10;
/// Allowed component of the Δ functional outside the range of the Γ₂ form.
pub const CD_RANGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CdDimension {
    /// Smallest `d` with `Γ₂(f)(x) ≥ (Δf(x))²/d` for all `f`. Zero means the
    /// right side vanishes identically, so every `d > 0` works.
    Finite { d_min: f64 },
    /// The Γ₂ form has a negative direction: no `d` works.
    NegativeForm { min_eigenvalue: f64 },
    /// Δ reaches a direction where Γ₂ vanishes: no `d` works.
    OutsideRange { residual: f64 },
}

impl CdDimension {
    pub fn value(&self) -> Option<f64> {
        match *self {
            CdDimension::Finite { d_min } => Some(d_min),
            _ => None,
        }
    }
}

/// Optimal CD(d,0) constant at `x`: `vᵀQ⁺v` where `Q` is the Γ₂ form and `v`
/// the Δ functional.
pub fn cd_dimension(g: &Graph, x: usize) -> CdDimension {
    let form = gamma2_form(g, x);
    cd_dimension_of_form(&form)
}

pub fn cd_dimension_of_form(form: &LocalQuadraticForm) -> CdDimension {
    let eig = SymmetricEigen::new(form.matrix.clone());
    let scale = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let cutoff = CD_EIGEN_CUTOFF * scale.max(1.0);
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eigenvalue < -cutoff {
        return CdDimension::NegativeForm { min_eigenvalue };
    }
    let v = &form.linear;
    let mut d_min = 0.0;
    let mut projected = DVector::zeros(v.len());
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let u = eig.eigenvectors.column(k);
            let c = u.dot(v);
            d_min += c * c / lambda;
            projected += u * c;
        }
    }
    let residual = (v - projected).norm();
    if residual > CD_RANGE_TOL {
        return CdDimension::OutsideRange { residual };
    }
    CdDimension::Finite { d_min }
}

/// Graph-level CD(d,0) constant: the worst vertex, or the first failing one.
pub fn graph_cd_dimension(g: &Graph) -> (Vec<CdDimension>, Option<f64>) {
    let per_vertex: Vec<CdDimension> = g.vertices().map(|x| cd_dimension(g, x)).collect();
    let overall = per_vertex
        .iter()
        .try_fold(0.0f64, |acc, d| d.value().map(|v| acc.max(v)));
    (per_vertex, overall)
}
