//! Homogeneous models `S^{n-1} = SO(n)/SO(n-1)` and `SO(n)` acting on itself,
//! with the left action, invariant geodesic distance, minimizing geodesics,
//! lifts to the group, and Levi-Civita covariant derivatives.

mod catalog;
mod field;
mod scalar;

pub(crate) use catalog::exp_map;
pub use catalog::{sample_field, sample_nearby, sample_point, test_suite, FieldParams, FAMILY_IDS};
pub use field::{CoefficientField, FieldExpr, FieldFamily};
pub use scalar::{ScalarFamily, ScalarField};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::kernels::{self, max_rotation_angle, rotation_angles, so_basis, GroupElement};

/// Which homogeneous model a point lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    /// Unit sphere in `ℝⁿ` under `SO(n)`; base point `eₙ`.
    Sphere(usize),
    /// `SO(n)` acting on itself by left multiplication; base point `I`.
    Group(usize),
}

impl Space {
    /// `n` of the acting group `SO(n)`.
    pub fn group_dim(&self) -> usize {
        match *self {
            Space::Sphere(n) | Space::Group(n) => n,
        }
    }

    /// Shape of the ambient coordinate matrix.
    pub fn ambient_shape(&self) -> (usize, usize) {
        match *self {
            Space::Sphere(n) => (n, 1),
            Space::Group(n) => (n, n),
        }
    }

    pub fn ambient_len(&self) -> usize {
        let (r, c) = self.ambient_shape();
        r * c
    }

    /// Dimension of the manifold.
    pub fn dim(&self) -> usize {
        match *self {
            Space::Sphere(n) => n - 1,
            Space::Group(n) => n * (n - 1) / 2,
        }
    }

    pub fn base_point(&self) -> Point {
        let coords = match *self {
            Space::Sphere(n) => {
                let mut v = DMatrix::zeros(n, 1);
                v[(n - 1, 0)] = 1.0;
                v
            }
            Space::Group(n) => DMatrix::identity(n, n),
        };
        Point {
            space: *self,
            coords,
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Space::Sphere(n) => format!("sphere(S^{})", n - 1),
            Space::Group(n) => format!("group(SO({n}))"),
        }
    }
}

/// A point of a homogeneous model, stored in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    space: Space,
    coords: DMatrix<f64>,
}

impl Point {
    /// Validates the manifold invariant (unit norm / orthogonality) to `1e-12`.
    pub fn new(space: Space, coords: DMatrix<f64>) -> Result<Self> {
        if coords.shape() != space.ambient_shape() {
            return Err(Error::Domain(format!(
                "point shape {:?} does not match {}",
                coords.shape(),
                space.name()
            )));
        }
        let p = Point { space, coords };
        let defect = p.invariant_defect();
        if !(defect <= 1e-12) {
            return Err(Error::Domain(format!(
                "point violates manifold invariant by {defect:e}"
            )));
        }
        Ok(p)
    }

    /// Unit vector `x/‖x‖` on `S^{n-1}`.
    pub fn sphere(x: &[f64]) -> Result<Self> {
        let v = DMatrix::from_column_slice(x.len(), 1, x);
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Domain("cannot normalize zero vector".into()));
        }
        Point::new(Space::Sphere(x.len()), v / norm)
    }

    pub fn group(r: &GroupElement) -> Result<Self> {
        Point::new(Space::Group(r.dim()), r.0.clone())
    }

    pub(crate) fn from_raw(space: Space, coords: DMatrix<f64>) -> Self {
        Point { space, coords }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    /// Ambient coordinates flattened row-major.
    pub fn flat(&self) -> Vec<f64> {
        flatten(&self.coords)
    }

    pub fn flat_jets(&self) -> Vec<Jet> {
        self.flat().into_iter().map(Jet::constant).collect()
    }

    /// Sphere: `|‖x‖ − 1|`; group: `‖xᵀx − I‖_F` (plus a penalty if `det < 0`).
    pub fn invariant_defect(&self) -> f64 {
        match self.space {
            Space::Sphere(_) => (self.coords.norm() - 1.0).abs(),
            Space::Group(n) => {
                let d = (self.coords.transpose() * &self.coords
                    - DMatrix::<f64>::identity(n, n))
                .norm();
                if self.coords.determinant() > 0.0 {
                    d
                } else {
                    d + 2.0
                }
            }
        }
    }
}

pub(crate) fn flatten(m: &DMatrix<f64>) -> Vec<f64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

pub(crate) fn unflatten(v: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, v)
}

/// Left action `Λ(g, x) = g·x`.
pub fn act(g: &GroupElement, x: &Point) -> Result<Point> {
    let n = x.space.group_dim();
    if g.dim() != n {
        return Err(Error::Domain(format!(
            "action of SO({}) on {}",
            g.dim(),
            x.space.name()
        )));
    }
    Ok(Point {
        space: x.space,
        coords: &g.0 * &x.coords,
    })
}

fn same_space(x: &Point, y: &Point) -> Result<()> {
    if x.space == y.space {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "points live in {} and {}",
            x.space.name(),
            y.space.name()
        )))
    }
}

/// Invariant geodesic distance.
///
/// Sphere: the great-circle angle, evaluated as `2·atan2(‖x−y‖, ‖x+y‖)`
/// which equals `arccos⟨x,y⟩` but keeps full relative precision for nearby
/// points. Group: `‖log(xᵀy)‖_F`, switching to the eigenvalue formula
/// `(Σ_j arccos(λ_j)²)^{1/2}` over the symmetric part when the relative
/// rotation is at angle π.
pub fn geodesic_distance(x: &Point, y: &Point) -> Result<f64> {
    same_space(x, y)?;
    Ok(match x.space {
        Space::Sphere(_) => {
            let diff = (&x.coords - &y.coords).norm();
            let sum = (&x.coords + &y.coords).norm();
            2.0 * diff.atan2(sum)
        }
        Space::Group(_) => {
            let rel = x.coords.transpose() * &y.coords;
            group_distance_from_relative(&rel)
        }
    })
}

pub(crate) fn group_distance_from_relative(rel: &DMatrix<f64>) -> f64 {
    let angle = max_rotation_angle(rel);
    if std::f64::consts::PI - angle < kernels::LOG_BRANCH_MARGIN {
        rotation_angles(rel).iter().map(|a| a * a).sum::<f64>().sqrt()
    } else {
        match kernels::logm(rel) {
            Ok(l) => l.norm(),
            Err(_) => rotation_angles(rel).iter().map(|a| a * a).sum::<f64>().sqrt(),
        }
    }
}

/// Point at parameter `s ∈ [0, 1]` on the minimizing geodesic from `x` to `y`.
pub fn geodesic_point(x: &Point, y: &Point, s: f64) -> Result<Point> {
    same_space(x, y)?;
    match x.space {
        Space::Sphere(_) => {
            let theta = geodesic_distance(x, y)?;
            if std::f64::consts::PI - theta < kernels::LOG_BRANCH_MARGIN {
                return Err(Error::NonUniqueGeodesic);
            }
            if theta < 1e-300 {
                return Ok(x.clone());
            }
            let st = theta.sin();
            let a = ((1.0 - s) * theta).sin() / st;
            let b = (s * theta).sin() / st;
            let mut c = &x.coords * a + &y.coords * b;
            let norm = c.norm();
            c /= norm;
            Ok(Point::from_raw(x.space, c))
        }
        Space::Group(_) => {
            let rel = GroupElement(x.coords.transpose() * &y.coords);
            let l = kernels::mat_log(&rel).map_err(|e| match e {
                Error::LogBranch { .. } => Error::NonUniqueGeodesic,
                other => other,
            })?;
            let step = kernels::expm(&(&l.0 * s));
            Ok(Point::from_raw(x.space, &x.coords * step))
        }
    }
}

/// Deterministic `g` with `act(g, o) = x`.
///
/// Sphere: the Householder reflection exchanging `−eₙ` and `x`, composed with
/// `diag(1, …, 1, −1)` so that `g ∈ SO(n)`; this is smooth away from `x = −eₙ`
/// and returns `I` at `o`. Group: `g = x`.
pub fn lift_to_group(x: &Point) -> GroupElement {
    match x.space {
        Space::Sphere(n) => {
            let xv = x.coords.column(0).into_owned();
            let mut v = xv.clone();
            v[n - 1] += 1.0;
            let vv = v.dot(&v);
            if vv < 1e-24 {
                // x = −eₙ
                let mut d = DMatrix::<f64>::identity(n, n);
                d[(0, 0)] = -1.0;
                d[(n - 1, n - 1)] = -1.0;
                return GroupElement(d);
            }
            let mut h = DMatrix::<f64>::identity(n, n) - (&v * v.transpose()) * (2.0 / vv);
            for i in 0..n {
                h[(i, n - 1)] = -h[(i, n - 1)];
            }
            GroupElement(h)
        }
        Space::Group(_) => GroupElement(x.coords.clone()),
    }
}

/// Discrete lift of a sampled curve: each lift is post-multiplied by the
/// stabilizer element minimizing the jump `‖g_{k+1} − g_k‖_F`.
pub fn lift_curve(curve: &[Point]) -> Vec<GroupElement> {
    let mut out: Vec<GroupElement> = Vec::with_capacity(curve.len());
    for x in curve {
        let g = lift_to_group(x);
        let g = match (x.space, out.last()) {
            (Space::Sphere(n), Some(prev)) if n > 1 => align_in_stabilizer(&g, prev, n),
            _ => g,
        };
        out.push(g);
    }
    out
}

/// `g·blockdiag(Q, 1)` with `Q ∈ SO(n−1)` maximizing `tr(prevᵀ g Q)`.
fn align_in_stabilizer(g: &GroupElement, prev: &GroupElement, n: usize) -> GroupElement {
    let m = n - 1;
    let a = prev.0.transpose() * &g.0;
    let a11 = a.view((0, 0), (m, m)).into_owned();
    // maximize tr(A11 Q): A11 = UΣVᵀ → Q = V D Uᵀ
    let svd = a11.svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return g.clone(),
    };
    let v = vt.transpose();
    let mut d = DMatrix::<f64>::identity(m, m);
    if (&v * u.transpose()).determinant() < 0.0 {
        d[(m - 1, m - 1)] = -1.0;
    }
    let q = v * d * u.transpose();
    let mut h = DMatrix::<f64>::identity(n, n);
    h.view_mut((0, 0), (m, m)).copy_from(&q);
    GroupElement(&g.0 * h)
}

/// Orthonormal basis of `T_xM` as ambient matrices.
pub fn tangent_basis(x: &Point) -> Vec<DMatrix<f64>> {
    match x.space {
        Space::Sphere(n) => {
            let g = lift_to_group(x);
            (0..n - 1).map(|j| g.0.columns(j, 1).into_owned()).collect()
        }
        Space::Group(n) => so_basis(n).into_iter().map(|e| e.0 * &x.coords).collect(),
    }
}

/// Matrix of `Y ↦ ∇_Y V` at `x` in the basis of [`tangent_basis`].
///
/// Both models carry the metric induced from the Frobenius inner product on
/// their ambient space, so the Levi-Civita derivative is the tangential part
/// of the ambient directional derivative of `V(x) = ξ(x)·x`.
pub fn covariant_derivative_operator(v: &CoefficientField, x: &Point) -> Result<DMatrix<f64>> {
    if v.regularity() < 1 {
        return Err(Error::Regularity {
            needed: 1,
            available: v.regularity(),
        });
    }
    let basis = tangent_basis(x);
    let k = basis.len();
    let mut m = DMatrix::zeros(k, k);
    for (b, bb) in basis.iter().enumerate() {
        let dv = v.vector_dirderiv(x, bb);
        for (a, ba) in basis.iter().enumerate() {
            m[(a, b)] = ba.dot(&dv);
        }
    }
    Ok(m)
}
