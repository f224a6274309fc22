//! Vector fields given by Lie-algebra coefficient maps, `V(x) = ξ(x)·x`.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{flatten, unflatten, Point, Space};
use crate::error::{Error, Result};
use crate::jet::{Jet, Scalar};
use crate::kernels::AlgebraElement;

/// Closed-form catalog coefficient maps.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldFamily {
    /// `ξ(x) ≡ ξ`; flow `exp(tξ)·x`.
    Constant(DMatrix<f64>),
    /// On `S²`: `hat(a + ε·(x₂², sin x₃, x₁x₂))`.
    SphereNonlinear { axis: [f64; 3], epsilon: f64 },
    /// On `SO(3)`: `hat(c + ε·(Y₁₂, Y₂₃², Y₃₁))`.
    GroupNonlinear { axis: [f64; 3], epsilon: f64 },
    /// On `S²`: `hat(a + ε·(x₁⁵|x₁|, x₂x₃, sin x₁))`, only `C⁵`.
    SphereLimited { axis: [f64; 3], epsilon: f64 },
}

fn hat3_generic<T: Scalar>(w: [T; 3]) -> Vec<T> {
    let z = T::constant(0.0);
    let [a, b, c] = w;
    vec![
        z.clone(),
        -c.clone(),
        b.clone(),
        c,
        z.clone(),
        -a.clone(),
        -b,
        a,
        z,
    ]
}

impl FieldFamily {
    fn eval<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        match self {
            FieldFamily::Constant(xi) => flatten(xi).into_iter().map(T::constant).collect(),
            FieldFamily::SphereNonlinear { axis, epsilon } => {
                let e = *epsilon;
                hat3_generic([
                    T::constant(axis[0]) + (x[1].clone() * x[1].clone()).scale(e),
                    T::constant(axis[1]) + x[2].sin().scale(e),
                    T::constant(axis[2]) + (x[0].clone() * x[1].clone()).scale(e),
                ])
            }
            FieldFamily::GroupNonlinear { axis, epsilon } => {
                let e = *epsilon;
                hat3_generic([
                    T::constant(axis[0]) + x[1].scale(e),
                    T::constant(axis[1]) + (x[5].clone() * x[5].clone()).scale(e),
                    T::constant(axis[2]) + x[6].scale(e),
                ])
            }
            FieldFamily::SphereLimited { axis, epsilon } => {
                let e = *epsilon;
                hat3_generic([
                    T::constant(axis[0]) + (x[0].powi(5) * x[0].abs()).scale(e),
                    T::constant(axis[1]) + (x[1].clone() * x[2].clone()).scale(e),
                    T::constant(axis[2]) + x[0].sin().scale(e),
                ])
            }
        }
    }
}

/// Expression tree of coefficient maps.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldExpr {
    Family(FieldFamily),
    /// `X ▷ Y`: coefficient `x ↦ Dξ_Y(x)[V_X(x)]`.
    PostLie(Arc<FieldExpr>, Arc<FieldExpr>),
    Combination(Vec<(f64, Arc<FieldExpr>)>),
    /// Pointwise matrix commutator `[ξ_X(x), ξ_Y(x)]`.
    PointwiseBracket(Arc<FieldExpr>, Arc<FieldExpr>),
    /// `Ad_g ξ(g⁻¹·x)`, the push-forward of the field by `Λ_g`.
    Transformed {
        g: DMatrix<f64>,
        inner: Arc<FieldExpr>,
    },
}

fn matmul<T: Scalar>(a: &[T], b: &[T], n: usize, k: usize, m: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let mut acc = a[i * k].clone() * b[j].clone();
            for l in 1..k {
                acc = acc + a[i * k + l].clone() * b[l * m + j].clone();
            }
            out.push(acc);
        }
    }
    out
}

fn const_matmul<T: Scalar>(a: &DMatrix<f64>, b: &[T], m: usize) -> Vec<T> {
    let (n, k) = a.shape();
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let mut acc = b[j].scale(a[(i, 0)]);
            for l in 1..k {
                acc = acc + b[l * m + j].scale(a[(i, l)]);
            }
            out.push(acc);
        }
    }
    out
}

fn matmul_const<T: Scalar>(a: &[T], b: &DMatrix<f64>, n: usize) -> Vec<T> {
    let (k, m) = b.shape();
    let mut out = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            let mut acc = a[i * k].scale(b[(0, j)]);
            for l in 1..k {
                acc = acc + a[i * k + l].scale(b[(l, j)]);
            }
            out.push(acc);
        }
    }
    out
}

impl FieldExpr {
    /// Coefficient at `x` (flattened ambient coordinates) for a model with group
    /// dimension `n`, where `x` involves jet variables `ε_0..ε_{depth-1}`.
    pub(crate) fn coeff_jet(&self, x: &[Jet], n: usize, cols: usize, depth: usize) -> Vec<Jet> {
        match self {
            FieldExpr::Family(f) => f.eval(x),
            FieldExpr::PostLie(a, b) => {
                let dir = a.vector_jet(x, n, cols, depth);
                let seeded: Vec<Jet> = x
                    .iter()
                    .zip(dir.iter())
                    .map(|(xi, di)| Jet::seed(xi, di, depth))
                    .collect();
                b.coeff_jet(&seeded, n, cols, depth + 1)
                    .into_iter()
                    .map(|c| c.extract(depth))
                    .collect()
            }
            FieldExpr::Combination(terms) => {
                let mut acc = vec![Jet::constant(0.0); n * n];
                for (w, t) in terms {
                    let c = t.coeff_jet(x, n, cols, depth);
                    for (a, ci) in acc.iter_mut().zip(c) {
                        *a = &*a + &ci.scale(*w);
                    }
                }
                acc
            }
            FieldExpr::PointwiseBracket(a, b) => {
                let ca = a.coeff_jet(x, n, cols, depth);
                let cb = b.coeff_jet(x, n, cols, depth);
                let ab = matmul(&ca, &cb, n, n, n);
                let ba = matmul(&cb, &ca, n, n, n);
                ab.into_iter().zip(ba).map(|(p, q)| p - q).collect()
            }
            FieldExpr::Transformed { g, inner } => {
                let gt = g.transpose();
                let xs = const_matmul(&gt, x, cols);
                let c = inner.coeff_jet(&xs, n, cols, depth);
                let gc = const_matmul(g, &c, n);
                matmul_const(&gc, &gt, n)
            }
        }
    }

    pub(crate) fn coeff_f64(&self, x: &[f64], n: usize, cols: usize) -> Vec<f64> {
        match self {
            FieldExpr::Family(f) => f.eval(x),
            FieldExpr::PostLie(..) => {
                let xj: Vec<Jet> = x.iter().map(|v| Jet::constant(*v)).collect();
                self.coeff_jet(&xj, n, cols, 0)
                    .into_iter()
                    .map(|c| c.real())
                    .collect()
            }
            FieldExpr::Combination(terms) => {
                let mut acc = vec![0.0; n * n];
                for (w, t) in terms {
                    for (a, c) in acc.iter_mut().zip(t.coeff_f64(x, n, cols)) {
                        *a += w * c;
                    }
                }
                acc
            }
            FieldExpr::PointwiseBracket(a, b) => {
                let ca = a.coeff_f64(x, n, cols);
                let cb = b.coeff_f64(x, n, cols);
                let ab = matmul(&ca, &cb, n, n, n);
                let ba = matmul(&cb, &ca, n, n, n);
                ab.into_iter().zip(ba).map(|(p, q)| p - q).collect()
            }
            FieldExpr::Transformed { g, inner } => {
                let gt = g.transpose();
                let xs = const_matmul(&gt, x, cols);
                let c = inner.coeff_f64(&xs, n, cols);
                let gc = const_matmul(g, &c, n);
                matmul_const(&gc, &gt, n)
            }
        }
    }

    /// `V(x) = ξ(x)·x` in flattened ambient coordinates.
    pub(crate) fn vector_jet(&self, x: &[Jet], n: usize, cols: usize, depth: usize) -> Vec<Jet> {
        let c = self.coeff_jet(x, n, cols, depth);
        matmul(&c, x, n, n, cols)
    }
}

/// A vector field on a homogeneous model, represented by its coefficient map
/// `ξ: M → so(n)` so that `V(x) = ξ(x)·x`.
///
/// All derivative queries are answered exactly (to rounding) by forward-mode
/// differentiation of the coefficient map; see [`crate::jet`].
#[derive(Clone, Debug)]
pub struct CoefficientField {
    space: Space,
    expr: Arc<FieldExpr>,
    regularity: u32,
    name: String,
}

/// Regularity tag carried by smooth catalog fields; bounded by how deep the
/// jet machinery is asked to nest.
pub const SMOOTH_REGULARITY: u32 = 8;

impl CoefficientField {
    pub fn new(space: Space, expr: FieldExpr, regularity: u32, name: impl Into<String>) -> Self {
        CoefficientField {
            space,
            expr: Arc::new(expr),
            regularity,
            name: name.into(),
        }
    }

    pub fn constant(space: Space, xi: &AlgebraElement) -> Self {
        CoefficientField::new(
            space,
            FieldExpr::Family(FieldFamily::Constant(xi.0.clone())),
            SMOOTH_REGULARITY,
            "constant",
        )
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn expr(&self) -> &Arc<FieldExpr> {
        &self.expr
    }

    pub fn regularity(&self) -> u32 {
        self.regularity
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_regularity(mut self, r: u32) -> Self {
        self.regularity = r;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// `Some(ξ)` if the coefficient map is a constant catalog field.
    pub fn constant_coefficient(&self) -> Option<AlgebraElement> {
        match &*self.expr {
            FieldExpr::Family(FieldFamily::Constant(xi)) => Some(AlgebraElement(xi.clone())),
            _ => None,
        }
    }

    fn dims(&self) -> (usize, usize) {
        let (n, cols) = self.space.ambient_shape();
        (n, cols)
    }

    pub fn coeff(&self, x: &Point) -> AlgebraElement {
        let (n, cols) = self.dims();
        let c = self.expr.coeff_f64(&x.flat(), n, cols);
        AlgebraElement(unflatten(&c, n, n))
    }

    /// Coefficient as a flat row-major buffer; hot path for integrators.
    pub(crate) fn coeff_matrix(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, cols) = self.dims();
        let c = self.expr.coeff_f64(&flatten(x), n, cols);
        unflatten(&c, n, n)
    }

    /// Tangent vector `ξ(x)·x` in ambient coordinates.
    pub fn vector(&self, x: &Point) -> DMatrix<f64> {
        self.coeff(x).0 * x.coords()
    }

    /// Exact directional derivative `Dξ(x)[v]` of the coefficient map.
    pub fn coeff_dirderiv(&self, x: &Point, v: &DMatrix<f64>) -> AlgebraElement {
        let (n, cols) = self.dims();
        let seeded = seed_point(x, v);
        let c = self.expr.coeff_jet(&seeded, n, cols, 1);
        let d: Vec<f64> = c.into_iter().map(|j| j.extract(0).real()).collect();
        AlgebraElement(unflatten(&d, n, n))
    }

    /// Ambient directional derivative `D(ξ(·)·(·))(x)[v]`.
    pub(crate) fn vector_dirderiv(&self, x: &Point, v: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, cols) = self.dims();
        let seeded = seed_point(x, v);
        let w = self.expr.vector_jet(&seeded, n, cols, 1);
        let d: Vec<f64> = w.into_iter().map(|j| j.extract(0).real()).collect();
        unflatten(&d, n, cols)
    }

    /// `Σ wᵢ Xᵢ`; all fields must share a model.
    pub fn linear_combination(terms: &[(f64, &CoefficientField)]) -> Result<CoefficientField> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Domain("empty linear combination".into()))?;
        let space = first.1.space;
        if terms.iter().any(|(_, f)| f.space != space) {
            return Err(Error::Domain("linear combination across models".into()));
        }
        let regularity = terms.iter().map(|(_, f)| f.regularity).min().unwrap_or(0);
        let name = terms
            .iter()
            .map(|(w, f)| format!("{w}*{}", f.name))
            .collect::<Vec<_>>()
            .join(" + ");
        Ok(CoefficientField {
            space,
            expr: Arc::new(FieldExpr::Combination(
                terms.iter().map(|(w, f)| (*w, f.expr.clone())).collect(),
            )),
            regularity,
            name,
        })
    }

    /// Pointwise commutator of coefficients, `x ↦ [ξ_X(x), ξ_Y(x)]`.
    pub fn pointwise_bracket(x: &CoefficientField, y: &CoefficientField) -> CoefficientField {
        CoefficientField {
            space: x.space,
            expr: Arc::new(FieldExpr::PointwiseBracket(x.expr.clone(), y.expr.clone())),
            regularity: x.regularity.min(y.regularity),
            name: format!("[{}, {}]", x.name, y.name),
        }
    }

    /// Push-forward by `Λ_g`: coefficient `Ad_g ξ(g⁻¹·x)`, so that the flow of
    /// the result through `g·x₀` is `g` applied to the flow through `x₀`.
    pub fn transformed(&self, g: &crate::kernels::GroupElement) -> CoefficientField {
        CoefficientField {
            space: self.space,
            expr: Arc::new(FieldExpr::Transformed {
                g: g.0.clone(),
                inner: self.expr.clone(),
            }),
            regularity: self.regularity,
            name: format!("Λ_g*{}", self.name),
        }
    }

    pub(crate) fn from_parts(space: Space, expr: Arc<FieldExpr>, regularity: u32, name: String) -> Self {
        CoefficientField {
            space,
            expr,
            regularity,
            name,
        }
    }
}

/// Jets `x + ε_0·v` for every ambient coordinate.
pub(crate) fn seed_point(x: &Point, v: &DMatrix<f64>) -> Vec<Jet> {
    x.flat()
        .into_iter()
        .zip(flatten(v))
        .map(|(a, b)| Jet::seed(&Jet::constant(a), &Jet::constant(b), 0))
        .collect()
}
