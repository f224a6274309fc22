//! Smooth comparison functions that dominate the distance to the base point.
//!
//! In a chart `φ` at `o` with `φ(o) = 0`, the sign sums
//! `P_α(y) = Σ_i (−1)^{α_i} y_i` satisfy `max_α P_α(y) = ‖y‖₁`. Multiplying by
//! a bi-Lipschitz constant `L` and a cutoff `ξ` gives `2^{dim M}` smooth
//! functions, each vanishing at `o`, such that one of them is at least
//! `d(x, o)` on the `ε`-ball.
//!
//! # Charts and cutoff
//!
//! * Sphere `S^{n−1}` at `o = eₙ`: `φ(x) = (x₁, …, x_{n−1})`, the orthogonal
//!   projection onto `T_oM`. On the northern hemisphere `‖φ(x)‖ = sin d(x, o)`,
//!   so the cutoff is `1` for `‖φ‖ ≤ sin ε` and `0` for `‖φ‖ ≥ sin 2ε`.
//!   This needs `ε ≤ π/4`.
//! * Group `SO(n)` at `I`: `φ_k(x) = ⟨E_k, (x − xᵀ)/2⟩_F` in the orthonormal
//!   basis of [`so_basis`]. Here `‖φ(x)‖ ≤ d(x, I)`, and if the symmetric part
//!   of `x` is positive definite then `‖φ(x)‖ ≥ (2/π)·d(x, I)`. The cutoff is
//!   `1` for `‖φ‖ ≤ ε` and `0` for `‖φ‖ ≥ 4ε/π`, which needs `ε < π/(2√2)`.
//!
//! The cutoff is `1 − S(s)` with `s = (‖φ‖² − r₁²)/(r₂² − r₁²)` and `S` the
//! degree-17 smoothstep whose first eight derivatives vanish at both ends, so
//! members are `C⁸` like the smooth catalog fields. Points outside the chart
//! (southern hemisphere, or an indefinite symmetric part) lie where the
//! cutoff already vanishes, and members are `0` there.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::kernels::so_basis;
use crate::space::{geodesic_distance, sample_nearby, Point, Space};

/// Smoothness order of the cutoff.
pub const CUTOFF_SMOOTHNESS: u32 = 8;
/// Inflation applied to the sampled bi-Lipschitz ratio.
pub const LIPSCHITZ_INFLATION: f64 = 1.05;
const LIPSCHITZ_SAMPLES: u64 = 4000;

/// `P_α(y) = Σ_i (−1)^{α_i} y_i`, where bit `i` of `alpha` is `α_i`.
pub fn p_alpha(alpha: usize, y: &[f64]) -> f64 {
    y.iter()
        .enumerate()
        .map(|(i, v)| if alpha >> i & 1 == 1 { -v } else { *v })
        .sum()
}

/// `max_α P_α(y)` over all `2^{len}` sign patterns.
pub fn max_p_alpha(y: &[f64]) -> f64 {
    (0..1usize << y.len())
        .map(|a| p_alpha(a, y))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn p_alpha_generic<T: Scalar>(alpha: usize, y: &[T]) -> T {
    let mut acc = T::constant(0.0);
    for (i, v) in y.iter().enumerate() {
        acc = if alpha >> i & 1 == 1 {
            acc - v.clone()
        } else {
            acc + v.clone()
        };
    }
    acc
}

/// Coefficients of `S(s) = s^{N+1} Σ_k c_k s^k`.
fn smoothstep_coeffs(n: u32) -> Vec<f64> {
    let binom = |a: u32, b: u32| -> f64 {
        (0..b).fold(1.0, |acc, i| acc * (a - i) as f64 / (i + 1) as f64)
    };
    (0..=n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * binom(n + k, k) * binom(2 * n + 1, n - k)
        })
        .collect()
}

/// The family `f_α = L·ξ·(P_α ∘ φ)`.
#[derive(Clone, Debug)]
pub struct ComparisonFamily {
    space: Space,
    epsilon: f64,
    r_inner: f64,
    r_outer: f64,
    lipschitz: f64,
    smoothstep: Vec<f64>,
    basis: Vec<DMatrix<f64>>,
}

impl ComparisonFamily {
    pub fn space(&self) -> Space {
        self.space
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Estimated bi-Lipschitz constant, already inflated.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Chart radii `(r₁, r₂)` where the cutoff leaves `1` and reaches `0`.
    pub fn cutoff_radii(&self) -> (f64, f64) {
        (self.r_inner, self.r_outer)
    }

    /// Number of members, `2^{dim M}`.
    pub fn len(&self) -> usize {
        1 << self.space.dim()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn chart_generic<T: Scalar>(&self, x: &[T]) -> Vec<T> {
        match self.space {
            Space::Sphere(n) => x[..n - 1].to_vec(),
            Space::Group(n) => self
                .basis
                .iter()
                .map(|e| {
                    let mut acc = T::constant(0.0);
                    for a in 0..n {
                        for b in 0..n {
                            let w = e[(a, b)];
                            if w != 0.0 {
                                let skew = (x[a * n + b].clone() - x[b * n + a].clone()).scale(0.5);
                                acc = acc + skew.scale(w);
                            }
                        }
                    }
                    acc
                })
                .collect(),
        }
    }

    fn in_chart(&self, x: &[f64]) -> bool {
        match self.space {
            Space::Sphere(n) => x[n - 1] > 0.0,
            Space::Group(n) => {
                let m = DMatrix::from_row_slice(n, n, x);
                let sym = (&m + m.transpose()) * 0.5;
                sym.cholesky().is_some()
            }
        }
    }

    /// Chart coordinates `φ(x)`.
    pub fn chart(&self, x: &Point) -> Vec<f64> {
        self.chart_generic(&x.flat())
    }

    /// Cutoff `ξ(x)`.
    pub fn cutoff(&self, x: &Point) -> f64 {
        let flat = x.flat();
        self.cutoff_generic(&flat, &self.chart_generic(&flat))
    }

    fn cutoff_generic<T: Scalar>(&self, x: &[T], phi: &[T]) -> T {
        let real: Vec<f64> = x.iter().map(|v| v.value()).collect();
        if !self.in_chart(&real) {
            return T::constant(0.0);
        }
        let mut r2 = T::constant(0.0);
        for p in phi {
            r2 = r2 + p.clone() * p.clone();
        }
        let (a, b) = (self.r_inner * self.r_inner, self.r_outer * self.r_outer);
        let s = (r2 - T::constant(a)).scale(1.0 / (b - a));
        let sv = s.value();
        if sv <= 0.0 {
            return T::constant(1.0);
        }
        if sv >= 1.0 {
            return T::constant(0.0);
        }
        let mut poly = T::constant(0.0);
        for c in self.smoothstep.iter().rev() {
            poly = poly * s.clone() + T::constant(*c);
        }
        T::constant(1.0) - poly * s.powi(CUTOFF_SMOOTHNESS + 1)
    }

    /// Member `index` evaluated on flattened ambient coordinates.
    pub(crate) fn member_value<T: Scalar>(&self, index: usize, x: &[T]) -> T {
        let phi = self.chart_generic(x);
        let cut = self.cutoff_generic(x, &phi);
        if cut.value() == 0.0 {
            return T::constant(0.0);
        }
        (cut * p_alpha_generic(index, &phi)).scale(self.lipschitz)
    }

    /// `f_index(x)`.
    pub fn member(&self, index: usize, x: &Point) -> f64 {
        self.member_value(index, &x.flat())
    }

    /// `max_n f_n(x)`.
    pub fn max_member(&self, x: &Point) -> f64 {
        let flat = x.flat();
        (0..self.len())
            .map(|i| self.member_value(i, &flat))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Builds the comparison family at the base point of `space`.
pub fn comparison_family(space: Space, epsilon: f64) -> Result<ComparisonFamily> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::ChartDomain(format!("radius {epsilon} must be positive")));
    }
    let (r_inner, r_outer, basis) = match space {
        Space::Sphere(n) => {
            if n < 2 {
                return Err(Error::ChartDomain("sphere needs n ≥ 2".into()));
            }
            if epsilon > std::f64::consts::FRAC_PI_4 {
                return Err(Error::ChartDomain(format!(
                    "radius {epsilon} exceeds π/4 on the sphere"
                )));
            }
            (epsilon.sin(), (2.0 * epsilon).sin(), Vec::new())
        }
        Space::Group(n) => {
            let limit = std::f64::consts::PI / (2.0 * std::f64::consts::SQRT_2);
            if epsilon >= limit {
                return Err(Error::ChartDomain(format!(
                    "radius {epsilon} must stay below π/(2√2) on the group"
                )));
            }
            let basis: Vec<DMatrix<f64>> = so_basis(n).into_iter().map(|e| e.0).collect();
            (epsilon, 4.0 * epsilon / std::f64::consts::PI, basis)
        }
    };
    let mut fam = ComparisonFamily {
        space,
        epsilon,
        r_inner,
        r_outer,
        lipschitz: 1.0,
        smoothstep: smoothstep_coeffs(CUTOFF_SMOOTHNESS),
        basis,
    };
    fam.lipschitz = LIPSCHITZ_INFLATION * sampled_lipschitz(&fam)?;
    Ok(fam)
}

/// Points in the closed `ε`-ball at `o`: a deterministic random cloud plus
/// one point at radius `ε` along each chart axis (both signs).
pub fn ball_samples(space: Space, epsilon: f64, count: u64, seed: u64) -> Vec<Point> {
    let o = space.base_point();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = Uniform::new_inclusive(0.0, 1.0).expect("valid range");
    let dim = space.dim() as f64;
    let mut out: Vec<Point> = (0..count)
        .map(|k| {
            let u: f64 = unit.sample(&mut rng);
            sample_nearby(&o, epsilon * u.powf(1.0 / dim), seed.wrapping_add(k))
        })
        .collect();
    for b in crate::space::tangent_basis(&o) {
        for sign in [1.0, -1.0] {
            out.push(crate::space::exp_map(&o, &(&b * (sign * epsilon))));
        }
    }
    out
}

fn sampled_lipschitz(fam: &ComparisonFamily) -> Result<f64> {
    let o = fam.space.base_point();
    let pts = ball_samples(fam.space, fam.epsilon, LIPSCHITZ_SAMPLES, 0x5eed);
    let phis: Vec<Vec<f64>> = pts.iter().map(|p| fam.chart(p)).collect();
    let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let phi_o = fam.chart(&o);
    let mut best: f64 = 1.0;
    for (i, p) in pts.iter().enumerate() {
        let den = l1(&phis[i], &phi_o);
        if den > 0.0 {
            best = best.max(geodesic_distance(p, &o)? / den);
        }
        let j = (i + 1) % pts.len();
        let den = l1(&phis[i], &phis[j]);
        if den > 0.0 {
            best = best.max(geodesic_distance(p, &pts[j])? / den);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{ScalarFamily, ScalarField};
    use std::sync::Arc;

    #[test]
    fn sign_selection() {
        assert_eq!(max_p_alpha(&[1.0, -2.0]), 3.0);
        assert_eq!(p_alpha(0, &[1.0, -2.0]), -1.0);
        assert_eq!(p_alpha(0b10, &[1.0, -2.0]), 3.0);
    }

    #[test]
    fn smoothstep_is_a_step() {
        let c = smoothstep_coeffs(CUTOFF_SMOOTHNESS);
        let eval = |s: f64| c.iter().rev().fold(0.0, |acc, k| acc * s + k) * s.powi(9);
        assert!((eval(1.0) - 1.0).abs() < 1e-9);
        assert!((eval(0.5) - 0.5).abs() < 1e-12);
        assert_eq!(eval(0.0), 0.0);
    }

    #[test]
    fn members_vanish_at_base_point() {
        for space in [Space::Sphere(3), Space::Group(3), Space::Sphere(4)] {
            let fam = comparison_family(space, 0.3).unwrap();
            assert_eq!(fam.len(), 1 << space.dim());
            let o = space.base_point();
            for i in 0..fam.len() {
                assert_eq!(fam.member(i, &o), 0.0);
            }
        }
    }

    #[test]
    fn radius_guard() {
        assert!(matches!(
            comparison_family(Space::Sphere(3), 1.0),
            Err(Error::ChartDomain(_))
        ));
        assert!(comparison_family(Space::Group(3), 1.2).is_err());
    }

    #[test]
    fn domination_on_ball() {
        for space in [Space::Sphere(3), Space::Group(3)] {
            let fam = comparison_family(space, 0.3).unwrap();
            let o = space.base_point();
            for x in ball_samples(space, 0.3, 300, 77) {
                assert!(fam.max_member(&x) >= geodesic_distance(&x, &o).unwrap());
            }
        }
    }

    #[test]
    fn cutoff_is_compactly_supported() {
        let fam = comparison_family(Space::Sphere(3), 0.3).unwrap();
        let o = Space::Sphere(3).base_point();
        let far = sample_nearby(&o, 0.61, 1);
        assert_eq!(fam.cutoff(&far), 0.0);
        let near = sample_nearby(&o, 0.29, 1);
        assert_eq!(fam.cutoff(&near), 1.0);
        let south = Point::sphere(&[0.0, 0.1, -1.0]).unwrap();
        assert_eq!(fam.max_member(&south), 0.0);
    }

    #[test]
    fn members_are_differentiable_test_functions() {
        let fam = Arc::new(comparison_family(Space::Sphere(3), 0.3).unwrap());
        let f = ScalarField::new(
            Space::Sphere(3),
            ScalarFamily::Comparison { family: fam.clone(), index: 1 },
            "f1",
        );
        let o = Space::Sphere(3).base_point();
        // in the cutoff transition band
        let x = sample_nearby(&o, 0.45, 4);
        let v = DMatrix::from_column_slice(3, 1, &[0.3, -0.5, 0.0]);
        let s = 1e-6;
        let g = f.gradient(&x);
        let fp = fam.member_value(1, (x.coords() + &v * s).as_slice());
        let fm = fam.member_value(1, (x.coords() - &v * s).as_slice());
        let fd = (fp - fm) / (2.0 * s);
        assert!((g.dot(&v) - fd).abs() < 1e-6);
    }
}
