//! Smooth test functions `f: M → ℝ` written against ambient coordinates.

use std::sync::Arc;

use nalgebra::DMatrix;

use super::{field::seed_point, unflatten, Point, Space};
use crate::analysis::ComparisonFamily;
use crate::jet::{Jet, Scalar};

#[derive(Clone, Debug)]
pub enum ScalarFamily {
    Constant(f64),
    /// `x_i` (flattened row-major ambient index).
    Coordinate(usize),
    /// `x_i·x_j`.
    Product(usize, usize),
    /// `sin(a·x_i + b·x_j)`.
    SinAffine { i: usize, j: usize, a: f64, b: f64 },
    /// `exp(c·x_i)`.
    Exp { i: usize, c: f64 },
    /// `x_i² − x_j·x_k + x_k³`.
    Cubic { i: usize, j: usize, k: usize },
    /// Member `index` of a comparison family.
    Comparison {
        family: Arc<ComparisonFamily>,
        index: usize,
    },
    /// `f ∘ Λ_{g⁻¹}`.
    Shifted { g: DMatrix<f64>, inner: Arc<ScalarField> },
}

/// A scalar test function together with its exact derivatives (via jets).
#[derive(Clone, Debug)]
pub struct ScalarField {
    space: Space,
    family: ScalarFamily,
    name: String,
}

impl ScalarField {
    pub fn new(space: Space, family: ScalarFamily, name: impl Into<String>) -> Self {
        ScalarField {
            space,
            family,
            name: name.into(),
        }
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> &ScalarFamily {
        &self.family
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.family, ScalarFamily::Constant(_))
    }

    /// `f ∘ Λ_{g⁻¹}`.
    pub fn shifted(self: &Arc<Self>, g: &crate::kernels::GroupElement) -> ScalarField {
        ScalarField {
            space: self.space,
            family: ScalarFamily::Shifted {
                g: g.0.clone(),
                inner: self.clone(),
            },
            name: format!("{}∘Λ_g⁻¹", self.name),
        }
    }

    pub(crate) fn eval<T: Scalar>(&self, x: &[T]) -> T {
        match &self.family {
            ScalarFamily::Constant(c) => T::constant(*c),
            ScalarFamily::Coordinate(i) => x[*i].clone(),
            ScalarFamily::Product(i, j) => x[*i].clone() * x[*j].clone(),
            ScalarFamily::SinAffine { i, j, a, b } => (x[*i].scale(*a) + x[*j].scale(*b)).sin(),
            ScalarFamily::Exp { i, c } => x[*i].scale(*c).exp(),
            ScalarFamily::Cubic { i, j, k } => {
                x[*i].clone() * x[*i].clone() - x[*j].clone() * x[*k].clone() + x[*k].powi(3)
            }
            ScalarFamily::Comparison { family, index } => family.member_value(*index, x),
            ScalarFamily::Shifted { g, inner } => {
                let (rows, cols) = self.space.ambient_shape();
                // gᵀ·x, row-major
                let mut y = Vec::with_capacity(rows * cols);
                for i in 0..rows {
                    for j in 0..cols {
                        let mut acc = x[j].scale(g[(0, i)]);
                        for l in 1..rows {
                            acc = acc + x[l * cols + j].scale(g[(l, i)]);
                        }
                        y.push(acc);
                    }
                }
                inner.eval(&y)
            }
        }
    }

    pub fn value(&self, x: &Point) -> f64 {
        self.eval(&x.flat())
    }

    pub(crate) fn value_jet(&self, x: &[Jet]) -> Jet {
        self.eval(x)
    }

    /// Exact ambient gradient (same shape as the point's coordinates).
    pub fn gradient(&self, x: &Point) -> DMatrix<f64> {
        let (rows, cols) = self.space.ambient_shape();
        let flat = x.flat();
        let mut g = vec![0.0; flat.len()];
        for (k, gk) in g.iter_mut().enumerate() {
            let mut e = vec![0.0; flat.len()];
            e[k] = 1.0;
            let seeded = seed_point(x, &unflatten(&e, rows, cols));
            *gk = self.eval(&seeded).extract(0).real();
        }
        unflatten(&g, rows, cols)
    }

    /// Directional derivative along an ambient vector.
    pub fn dirderiv(&self, x: &Point, v: &DMatrix<f64>) -> f64 {
        self.eval(&seed_point(x, v)).extract(0).real()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{flatten, sample_point, test_suite};

    #[test]
    fn gradient_matches_central_difference() {
        for space in [Space::Sphere(3), Space::Group(3)] {
            let x = sample_point(space, 21);
            for f in test_suite(space) {
                let g = f.gradient(&x);
                let (rows, cols) = space.ambient_shape();
                let s = 1e-5;
                for k in 0..rows * cols {
                    let mut e = vec![0.0; rows * cols];
                    e[k] = 1.0;
                    let e = unflatten(&e, rows, cols);
                    let xp = Point::from_raw(space, x.coords() + &e * s);
                    let xm = Point::from_raw(space, x.coords() - &e * s);
                    let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * s);
                    assert!((fd - flatten(&g)[k]).abs() < 1e-8, "{}", f.name());
                }
            }
        }
    }
}
