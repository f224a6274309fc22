//! Deterministic test-problem catalog.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::field::SMOOTH_REGULARITY;
use super::{CoefficientField, FieldExpr, FieldFamily, Point, ScalarFamily, ScalarField, Space};
use crate::error::{Error, Result};
use crate::kernels::{self, expm};

/// Family ids understood by [`sample_field`].
pub const FAMILY_IDS: &[&str] = &["constant", "sphere-nonlinear", "group-nonlinear", "sphere-c5"];

/// Parameters of catalog fields; `axis` is `a` (or `c`), `epsilon` the
/// nonlinearity strength. Constant fields on `SO(n)`/`S^{n-1}` with `n ≠ 3`
/// use the first `n(n−1)/2` entries of `axis` in the [`kernels::so_basis`]
/// order, padded with zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldParams {
    pub axis: [f64; 3],
    pub epsilon: f64,
}

impl Default for FieldParams {
    fn default() -> Self {
        FieldParams {
            axis: [0.4, -0.7, 1.1],
            epsilon: 0.8,
        }
    }
}

/// Catalog field by id.
pub fn sample_field(space: Space, family: &str, params: &FieldParams) -> Result<CoefficientField> {
    let a = params.axis;
    let eps = params.epsilon;
    let n = space.group_dim();
    let need = |ok: bool, what: &str| -> Result<()> {
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("family `{family}` requires {what}")))
        }
    };
    let (fam, reg) = match family {
        "constant" => {
            let xi = if n == 3 {
                kernels::hat3(a).0
            } else {
                let mut m = DMatrix::zeros(n, n);
                for (k, e) in kernels::so_basis(n).iter().enumerate().take(3) {
                    m += &e.0 * a[k];
                }
                m
            };
            (FieldFamily::Constant(xi), SMOOTH_REGULARITY)
        }
        "sphere-nonlinear" => {
            need(space == Space::Sphere(3), "the 2-sphere")?;
            (
                FieldFamily::SphereNonlinear {
                    axis: a,
                    epsilon: eps,
                },
                SMOOTH_REGULARITY,
            )
        }
        "group-nonlinear" => {
            need(space == Space::Group(3), "SO(3)")?;
            (
                FieldFamily::GroupNonlinear {
                    axis: a,
                    epsilon: eps,
                },
                SMOOTH_REGULARITY,
            )
        }
        "sphere-c5" => {
            need(space == Space::Sphere(3), "the 2-sphere")?;
            (
                FieldFamily::SphereLimited {
                    axis: a,
                    epsilon: eps,
                },
                5,
            )
        }
        other => return Err(Error::UnknownFamily(other.to_string())),
    };
    Ok(CoefficientField::new(space, FieldExpr::Family(fam), reg, family))
}

/// Deterministic pseudo-random point.
pub fn sample_point(space: Space, seed: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match space {
        Space::Sphere(n) => loop {
            let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            if let Ok(p) = Point::sphere(&v) {
                return p;
            }
        },
        Space::Group(n) => {
            let mut m = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    let v: f64 = StandardNormal.sample(&mut rng);
                    m[(i, j)] = v;
                    m[(j, i)] = -v;
                }
            }
            Point::from_raw(space, expm(&m))
        }
    }
}

/// Deterministic point at geodesic distance `radius` from `x` in a random
/// direction.
pub fn sample_nearby(x: &Point, radius: f64, seed: u64) -> Point {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let basis = super::tangent_basis(x);
    let coeffs: Vec<f64> = (0..basis.len())
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt().max(1e-300);
    let mut dir = DMatrix::zeros(basis[0].nrows(), basis[0].ncols());
    for (c, b) in coeffs.iter().zip(&basis) {
        dir += b * (c / norm);
    }
    exp_map(x, &(dir * radius))
}

/// Riemannian exponential at `x` of an ambient tangent vector.
pub(crate) fn exp_map(x: &Point, v: &DMatrix<f64>) -> Point {
    match x.space() {
        Space::Sphere(_) => {
            let t = v.norm();
            if t == 0.0 {
                return x.clone();
            }
            let mut c = x.coords() * t.cos() + v * (t.sin() / t);
            let norm = c.norm();
            c /= norm;
            Point::from_raw(x.space(), c)
        }
        Space::Group(_) => {
            // v = η·x with η skew
            let eta = v * x.coords().transpose();
            let eta = (&eta - eta.transpose()) * 0.5;
            Point::from_raw(x.space(), expm(&eta) * x.coords())
        }
    }
}

/// At least five non-constant smooth test functions per model.
pub fn test_suite(space: Space) -> Vec<ScalarField> {
    let len = space.ambient_len();
    let idx = |k: usize| k % len;
    let fams = match space {
        Space::Sphere(_) => vec![
            ScalarFamily::Coordinate(idx(0)),
            ScalarFamily::Product(idx(1), idx(2)),
            ScalarFamily::SinAffine {
                i: idx(0),
                j: idx(1),
                a: 1.0,
                b: 2.0,
            },
            ScalarFamily::Exp { i: idx(2), c: 1.0 },
            ScalarFamily::Cubic {
                i: idx(0),
                j: idx(1),
                k: idx(2),
            },
        ],
        Space::Group(_) => vec![
            ScalarFamily::Coordinate(idx(0)),
            ScalarFamily::Product(idx(1), idx(3)),
            ScalarFamily::SinAffine {
                i: idx(2),
                j: idx(4),
                a: 1.0,
                b: -1.5,
            },
            ScalarFamily::Exp { i: idx(8), c: 0.7 },
            ScalarFamily::Cubic {
                i: idx(5),
                j: idx(1),
                k: idx(7),
            },
        ],
    };
    fams.into_iter()
        .enumerate()
        .map(|(k, f)| ScalarField::new(space, f, format!("f{k}")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_point_is_deterministic() {
        for space in [Space::Sphere(3), Space::Group(3), Space::Sphere(5)] {
            let a = sample_point(space, 42);
            let b = sample_point(space, 42);
            assert_eq!(a.flat(), b.flat());
            assert!(a.invariant_defect() < 1e-12);
        }
    }

    #[test]
    fn unknown_family_is_error() {
        assert_eq!(
            sample_field(Space::Sphere(3), "nope", &FieldParams::default()).unwrap_err(),
            Error::UnknownFamily("nope".into())
        );
        assert!(sample_field(Space::Group(3), "sphere-nonlinear", &FieldParams::default()).is_err());
    }

    #[test]
    fn zero_epsilon_reduces_to_constant() {
        let p = FieldParams {
            axis: [0.2, 0.5, -0.3],
            epsilon: 0.0,
        };
        let b = sample_field(Space::Sphere(3), "sphere-nonlinear", &p).unwrap();
        let a = sample_field(Space::Sphere(3), "constant", &p).unwrap();
        for seed in 0..10 {
            let x = sample_point(Space::Sphere(3), seed);
            assert_eq!(a.coeff(&x), b.coeff(&x));
        }
    }

    #[test]
    fn nearby_points_sit_at_requested_distance() {
        for space in [Space::Sphere(3), Space::Group(3)] {
            let x = sample_point(space, 5);
            let y = sample_nearby(&x, 0.05, 3);
            let d = super::super::geodesic_distance(&x, &y).unwrap();
            assert!((d - 0.05).abs() < 1e-12);
        }
    }
}
