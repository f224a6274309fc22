//! Forward-mode differentiation over multilinear jets.
//!
//! A [`Jet`] is a truncated polynomial in nilpotent infinitesimals
//! `ε_0, ε_1, …` with `ε_k² = 0`. Its coefficients are indexed by subsets of
//! the infinitesimals (as bitmasks), so a jet in `m` variables carries `2^m`
//! coefficients. Seeding a point with `x + ε_m·v` and reading back the
//! coefficient of `ε_m` yields the exact directional derivative along `v`;
//! nesting this gives mixed higher derivatives without finite differences.
//!
//! Catalog fields and test functions are written once against [`Scalar`] and
//! evaluated either on plain `f64` (integrators) or on jets (derivatives).

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

/// Arithmetic needed by catalog formulas.
pub trait Scalar:
    Clone
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
{
    fn constant(c: f64) -> Self;
    /// Real part.
    fn value(&self) -> f64;
    fn scale(&self, c: f64) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn abs(&self) -> Self;
    fn to_jet(&self) -> Jet;
    fn from_jet(j: Jet) -> Self;

    fn powi(&self, k: u32) -> Self {
        let mut acc = Self::constant(1.0);
        for _ in 0..k {
            acc = acc * self.clone();
        }
        acc
    }
}

impl Scalar for f64 {
    fn constant(c: f64) -> Self {
        c
    }
    fn value(&self) -> f64 {
        *self
    }
    fn scale(&self, c: f64) -> Self {
        self * c
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn exp(&self) -> Self {
        f64::exp(*self)
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn to_jet(&self) -> Jet {
        Jet::constant(*self)
    }
    fn from_jet(j: Jet) -> Self {
        j.real()
    }
    fn powi(&self, k: u32) -> Self {
        f64::powi(*self, k as i32)
    }
}

/// Multilinear jet; see the module docs.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(c: f64) -> Self {
        Jet { coeffs: vec![c] }
    }

    pub fn real(&self) -> f64 {
        self.coeffs[0]
    }

    /// Number of coefficients (a power of two).
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Coefficient of the monomial `Π_{k ∈ mask} ε_k`.
    pub fn coeff(&self, mask: usize) -> f64 {
        self.coeffs.get(mask).copied().unwrap_or(0.0)
    }

    /// `base + ε_var · dir`. Both inputs must only involve `ε_0..ε_{var-1}`.
    pub fn seed(base: &Jet, dir: &Jet, var: usize) -> Jet {
        let half = 1usize << var;
        debug_assert!(base.len() <= half && dir.len() <= half);
        let mut coeffs = vec![0.0; 2 * half];
        coeffs[..base.len()].copy_from_slice(&base.coeffs);
        coeffs[half..half + dir.len()].copy_from_slice(&dir.coeffs);
        Jet { coeffs }
    }

    /// Coefficient of `ε_var` as a jet in `ε_0..ε_{var-1}`.
    pub fn extract(&self, var: usize) -> Jet {
        let half = 1usize << var;
        if self.len() <= half {
            return Jet::constant(0.0);
        }
        debug_assert!(self.len() == 2 * half, "jet carries variables beyond ε_{var}");
        Jet {
            coeffs: self.coeffs[half..].to_vec(),
        }
    }

    /// Drops every infinitesimal coefficient of index `>= vars`.
    pub fn truncate(&self, vars: usize) -> Jet {
        let n = (1usize << vars).min(self.len());
        Jet {
            coeffs: self.coeffs[..n].to_vec(),
        }
    }

    fn padded(&self, len: usize) -> std::borrow::Cow<'_, [f64]> {
        if self.len() == len {
            std::borrow::Cow::Borrowed(&self.coeffs)
        } else {
            let mut v = self.coeffs.clone();
            v.resize(len, 0.0);
            std::borrow::Cow::Owned(v)
        }
    }

    /// `Σ_k c_k δ^k / k!` where `δ = self − real(self)` and `c_k` are the
    /// derivatives of a scalar function at the real part.
    fn compose(&self, derivs: impl Fn(usize) -> f64) -> Jet {
        let vars = self.len().trailing_zeros() as usize;
        let mut delta = self.clone();
        delta.coeffs[0] = 0.0;
        let mut out = Jet {
            coeffs: vec![0.0; self.len()],
        };
        out.coeffs[0] = derivs(0);
        let mut power = Jet::constant(1.0);
        let mut fact = 1.0;
        for k in 1..=vars {
            power = &power * &delta;
            fact *= k as f64;
            let c = derivs(k) / fact;
            let p = power.padded(out.len());
            for (o, pi) in out.coeffs.iter_mut().zip(p.iter()) {
                *o += c * pi;
            }
        }
        out
    }
}

impl<'a> Add<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn add(self, rhs: &'a Jet) -> Jet {
        let len = self.len().max(rhs.len());
        let a = self.padded(len);
        let b = rhs.padded(len);
        Jet {
            coeffs: a.iter().zip(b.iter()).map(|(x, y)| x + y).collect(),
        }
    }
}

impl<'a> Sub<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn sub(self, rhs: &'a Jet) -> Jet {
        let len = self.len().max(rhs.len());
        let a = self.padded(len);
        let b = rhs.padded(len);
        Jet {
            coeffs: a.iter().zip(b.iter()).map(|(x, y)| x - y).collect(),
        }
    }
}

impl<'a> Mul<&'a Jet> for &'a Jet {
    type Output = Jet;
    fn mul(self, rhs: &'a Jet) -> Jet {
        if self.len() == 1 {
            return rhs.scale(self.coeffs[0]);
        }
        if rhs.len() == 1 {
            return self.scale(rhs.coeffs[0]);
        }
        let len = self.len().max(rhs.len());
        let a = self.padded(len);
        let b = rhs.padded(len);
        let mut c = vec![0.0; len];
        for (s, cs) in c.iter_mut().enumerate() {
            // Sum over all submasks of s.
            let mut sub = s;
            let mut acc = 0.0;
            loop {
                acc += a[sub] * b[s ^ sub];
                if sub == 0 {
                    break;
                }
                sub = (sub - 1) & s;
            }
            *cs = acc;
        }
        Jet { coeffs: c }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        &self + &rhs
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        &self - &rhs
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        &self * &rhs
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Scalar for Jet {
    fn constant(c: f64) -> Self {
        Jet::constant(c)
    }
    fn value(&self) -> f64 {
        self.real()
    }
    fn scale(&self, c: f64) -> Self {
        Jet {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }
    fn sin(&self) -> Self {
        let (s, c) = self.real().sin_cos();
        self.compose(|k| match k % 4 {
            0 => s,
            1 => c,
            2 => -s,
            _ => -c,
        })
    }
    fn cos(&self) -> Self {
        let (s, c) = self.real().sin_cos();
        self.compose(|k| match k % 4 {
            0 => c,
            1 => -s,
            2 => -c,
            _ => s,
        })
    }
    fn exp(&self) -> Self {
        let e = self.real().exp();
        self.compose(|_| e)
    }
    fn abs(&self) -> Self {
        if self.real() < 0.0 {
            self.scale(-1.0)
        } else {
            self.clone()
        }
    }
    fn to_jet(&self) -> Jet {
        self.clone()
    }
    fn from_jet(j: Jet) -> Self {
        j
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(x: f64, var: usize) -> Jet {
        Jet::seed(&Jet::constant(x), &Jet::constant(1.0), var)
    }

    #[test]
    fn product_rule() {
        let x = var(3.0, 0);
        let y = x.clone() * x.clone() * x;
        assert_eq!(y.real(), 27.0);
        assert_eq!(y.extract(0).real(), 27.0);
    }

    #[test]
    fn nested_second_derivative_of_sin() {
        // d²/dx² sin(x) at x = 0.7 via two nested seeds along the same direction.
        let x0 = 0.7;
        let inner = var(x0, 0);
        let outer = Jet::seed(&inner, &Jet::constant(1.0), 1);
        let y = outer.sin();
        let d2 = y.extract(1).extract(0).real();
        assert!((d2 + x0.sin()).abs() < 1e-15);
    }

    #[test]
    fn exp_third_mixed() {
        let a = var(0.2, 0);
        let b = Jet::seed(&a, &Jet::constant(1.0), 1);
        let c = Jet::seed(&b, &Jet::constant(1.0), 2);
        let y = c.exp();
        let d3 = y.extract(2).extract(1).extract(0).real();
        assert!((d3 - 0.2f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn constants_broadcast() {
        let x = var(2.0, 1);
        let y = Jet::constant(3.0) * x.clone() + Jet::constant(1.0);
        assert_eq!(y.real(), 7.0);
        assert_eq!(y.extract(1).real(), 3.0);
    }
}
