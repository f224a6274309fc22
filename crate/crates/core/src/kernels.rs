//! Dense small-matrix kernels: exponential, principal logarithm, commutators,
//! truncated `dexp⁻¹`, and operator norms.
//!
//! All routines are pure and sized for `n ≤ 6`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Element of `so(n)` (or a general square matrix when used as a raw kernel input).
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement(pub DMatrix<f64>);

/// Element of `SO(n)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement(pub DMatrix<f64>);

impl AlgebraElement {
    pub fn zeros(n: usize) -> Self {
        AlgebraElement(DMatrix::zeros(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scaled(&self, c: f64) -> Self {
        AlgebraElement(&self.0 * c)
    }

    /// `‖A + Aᵀ‖_F`, zero for exact skew matrices.
    pub fn skew_defect(&self) -> f64 {
        (&self.0 + self.0.transpose()).norm()
    }
}

impl std::ops::Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement(&self.0 - &rhs.0)
    }
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        GroupElement(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// Inverse of an orthogonal matrix.
    pub fn inverse(&self) -> Self {
        GroupElement(self.0.transpose())
    }

    pub fn compose(&self, other: &GroupElement) -> Self {
        GroupElement(&self.0 * &other.0)
    }

    /// `‖RᵀR − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        (self.0.transpose() * &self.0 - DMatrix::<f64>::identity(n, n)).norm()
    }
}

/// `hat: ℝ³ → so(3)`, `hat(a)·x = a × x`.
pub fn hat3(a: [f64; 3]) -> AlgebraElement {
    AlgebraElement(DMatrix::from_row_slice(
        3,
        3,
        &[0.0, -a[2], a[1], a[2], 0.0, -a[0], -a[1], a[0], 0.0],
    ))
}

/// Inverse of [`hat3`] on the skew part.
pub fn vee3(a: &AlgebraElement) -> [f64; 3] {
    let m = &a.0;
    [
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    ]
}

/// Frobenius-orthonormal basis of `so(n)`: `(e_i e_jᵀ − e_j e_iᵀ)/√2`, `i < j`, lexicographic.
pub fn so_basis(n: usize) -> Vec<AlgebraElement> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut m = DMatrix::zeros(n, n);
            m[(i, j)] = s;
            m[(j, i)] = -s;
            out.push(AlgebraElement(m));
        }
    }
    out
}

fn check_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what}: non-finite entries")))
    }
}

fn check_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{what}: expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Taylor degree used on the scaled matrix; with `‖X‖₁ ≤ 1/2` the remainder
/// is below `0.5^19/19! ≈ 1.6e-23`.
const EXP_TAYLOR_DEGREE: usize = 18;

/// Matrix exponential by scaling and squaring on a Taylor kernel.
pub fn mat_exp(a: &AlgebraElement) -> Result<GroupElement> {
    check_square(&a.0, "mat_exp")?;
    check_finite(&a.0, "mat_exp")?;
    Ok(GroupElement(expm(&a.0)))
}

pub(crate) fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm1 = a.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    let mut s = 0u32;
    if norm1 > 0.5 {
        s = (norm1 / 0.5).log2().ceil() as u32;
    }
    let x = a / 2f64.powi(s as i32);
    // Horner evaluation of Σ X^k/k!.
    let id = DMatrix::<f64>::identity(n, n);
    let mut acc = id.clone();
    for k in (1..=EXP_TAYLOR_DEGREE).rev() {
        acc = &id + (&x * acc) / (k as f64);
    }
    for _ in 0..s {
        acc = &acc * &acc;
    }
    acc
}

/// Angles closer than this to π are rejected by [`mat_log`].
pub const LOG_BRANCH_MARGIN: f64 = 1e-8;

/// Largest rotation angle of an orthogonal matrix, read off the smallest
/// eigenvalue of its symmetric part (`cos θ_max`).
pub fn max_rotation_angle(r: &DMatrix<f64>) -> f64 {
    let sym = (r + r.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    lo.clamp(-1.0, 1.0).acos()
}

/// Rotation angles of an orthogonal matrix, one per eigenvalue of the
/// symmetric part (each plane contributes its angle twice, fixed axes zero).
pub fn rotation_angles(r: &DMatrix<f64>) -> Vec<f64> {
    let sym = (r + r.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .map(|l| l.clamp(-1.0, 1.0).acos())
        .collect()
}

/// Principal matrix logarithm by inverse scaling and squaring.
///
/// Square roots (Denman–Beavers) are taken until `‖R − I‖_F ≤ 1/4`, then
/// `log R = 2 atanh((R − I)(R + I)⁻¹)` is summed as a Gregory series.
pub fn mat_log(r: &GroupElement) -> Result<AlgebraElement> {
    check_square(&r.0, "mat_log")?;
    check_finite(&r.0, "mat_log")?;
    let angle = max_rotation_angle(&r.0);
    if std::f64::consts::PI - angle < LOG_BRANCH_MARGIN {
        return Err(Error::LogBranch {
            angle,
            margin: LOG_BRANCH_MARGIN,
        });
    }
    logm(&r.0)
}

pub(crate) fn logm(r: &DMatrix<f64>) -> Result<AlgebraElement> {
    let n = r.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let mut y = r.clone();
    let mut squarings = 0u32;
    while (&y - &id).norm() > 0.25 {
        y = sqrtm(&y)?;
        squarings += 1;
        if squarings > 60 {
            return Err(Error::Domain("mat_log: square-root iteration stalled".into()));
        }
    }
    let num = &y - &id;
    let den = (&y + &id)
        .try_inverse()
        .ok_or_else(|| Error::Domain("mat_log: singular R + I".into()))?;
    let z = num * den;
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut acc = z.clone();
    for k in 1..40 {
        term = &term * &z2;
        let contrib = &term / (2 * k + 1) as f64;
        let size = contrib.norm();
        acc += contrib;
        if size < 1e-18 * acc.norm().max(1e-300) {
            break;
        }
    }
    Ok(AlgebraElement(acc * 2.0 * 2f64.powi(squarings as i32)))
}

fn sqrtm(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::<f64>::identity(n, n);
    for _ in 0..100 {
        let yi = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("mat_log: singular iterate in square root".into()))?;
        let zi = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Domain("mat_log: singular iterate in square root".into()))?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * y.norm() {
            return Ok(y);
        }
    }
    Ok(y)
}

/// `[A, B] = AB − BA`.
pub fn commutator(a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
    if a.0.shape() != b.0.shape() || !a.0.is_square() {
        return Err(Error::Domain(format!(
            "commutator: shapes {:?} and {:?}",
            a.0.shape(),
            b.0.shape()
        )));
    }
    Ok(AlgebraElement(bracket(&a.0, &b.0)))
}

pub(crate) fn bracket(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a * b - b * a
}

/// Bernoulli numbers `B_0..=B_q` with the `B_1 = −1/2` convention.
pub fn bernoulli_numbers(q: usize) -> Vec<f64> {
    // Σ_{k=0}^{m} C(m+1, k) B_k = 0 for m ≥ 1.
    let mut b = vec![0.0; q + 1];
    b[0] = 1.0;
    for m in 1..=q {
        let mut binom = 1.0; // C(m+1, 0)
        let mut acc = 0.0;
        for (k, bk) in b.iter().enumerate().take(m) {
            acc += binom * bk;
            binom = binom * (m + 1 - k) as f64 / (k + 1) as f64;
        }
        // binom is now C(m+1, m) = m + 1
        b[m] = -acc / binom;
    }
    b
}

/// Truncated inverse differential of the exponential,
/// `Σ_{k=0}^{q} (B_k/k!) ad_u^k(v)`.
pub fn dexpinv(u: &AlgebraElement, v: &AlgebraElement, q: usize) -> Result<AlgebraElement> {
    if u.0.shape() != v.0.shape() {
        return Err(Error::Domain("dexpinv: shape mismatch".into()));
    }
    check_finite(&u.0, "dexpinv")?;
    check_finite(&v.0, "dexpinv")?;
    Ok(AlgebraElement(dexpinv_raw(&u.0, &v.0, q)))
}

pub(crate) fn dexpinv_raw(u: &DMatrix<f64>, v: &DMatrix<f64>, q: usize) -> DMatrix<f64> {
    let b = bernoulli_numbers(q);
    let mut term = v.clone();
    let mut acc = v.clone();
    let mut fact = 1.0;
    for (k, bk) in b.iter().enumerate().skip(1) {
        term = bracket(u, &term);
        fact *= k as f64;
        if *bk != 0.0 {
            acc += &term * (bk / fact);
        }
    }
    acc
}

/// `dexp_u(w) = Σ_{k≥0} ad_u^k(w)/(k+1)!`, summed to `terms` terms.
pub fn dexp_series(u: &AlgebraElement, w: &AlgebraElement, terms: usize) -> AlgebraElement {
    let mut term = w.0.clone();
    let mut acc = w.0.clone();
    let mut fact = 1.0;
    for k in 1..terms {
        term = bracket(&u.0, &term);
        fact *= (k + 1) as f64;
        acc += &term / fact;
    }
    AlgebraElement(acc)
}

/// Largest singular value.
pub fn operator_norm(l: &DMatrix<f64>) -> f64 {
    if l.is_empty() {
        return 0.0;
    }
    l.singular_values().iter().cloned().fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_skew(rng: &mut ChaCha8Rng, n: usize, norm: f64) -> AlgebraElement {
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v: f64 = rng.random_range(-1.0..1.0);
                m[(i, j)] = v;
                m[(j, i)] = -v;
            }
        }
        let scale = norm * rng.random_range(0.05..1.0) / m.norm();
        AlgebraElement(m * scale)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let e = mat_exp(&AlgebraElement::zeros(4)).unwrap();
        assert_eq!(e.0, DMatrix::identity(4, 4));
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = mat_exp(&hat3([0.0, 0.0, FRAC_PI_2])).unwrap();
        let e1 = nalgebra::DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        let y = &r.0 * e1;
        assert!((y[0]).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15 && y[2].abs() < 1e-15);
    }

    #[test]
    fn exp_group_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let a = random_skew(&mut rng, 3, 2.0);
            let p = mat_exp(&a).unwrap().0 * mat_exp(&a.scaled(-1.0)).unwrap().0;
            assert!((p - DMatrix::identity(3, 3)).norm() < 1e-13);
        }
    }

    #[test]
    fn exp_is_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for n in 2..=6 {
            for _ in 0..20 {
                let a = random_skew(&mut rng, n, 3.0);
                let r = mat_exp(&a).unwrap();
                assert!(r.orthogonality_defect() < 1e-12);
                assert!(r.0.determinant() > 0.0);
            }
        }
    }

    #[test]
    fn exp_rejects_nan() {
        let mut a = AlgebraElement::zeros(3);
        a.0[(0, 1)] = f64::NAN;
        assert!(matches!(mat_exp(&a), Err(Error::Domain(_))));
    }

    #[test]
    fn log_of_identity() {
        let l = mat_log(&GroupElement::identity(3)).unwrap();
        assert!(l.norm() < 1e-300);
    }

    #[test]
    fn log_exp_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for n in [2, 3, 4, 5] {
            for _ in 0..50 {
                let a = random_skew(&mut rng, n, 1.0);
                let l = mat_log(&mat_exp(&a).unwrap()).unwrap();
                assert!((&l.0 - &a.0).norm() < 1e-12, "n={n}");
            }
        }
    }

    #[test]
    fn log_roundtrip_large_angles() {
        let a = hat3([0.0, 0.3, 3.0]);
        let l = mat_log(&mat_exp(&a).unwrap()).unwrap();
        assert!((l.0 - a.0).norm() < 1e-11);
    }

    #[test]
    fn log_rejects_half_turn() {
        let r = mat_exp(&hat3([PI, 0.0, 0.0])).unwrap();
        assert!(matches!(mat_log(&r), Err(Error::LogBranch { .. })));
    }

    #[test]
    fn bernoulli_values() {
        let b = bernoulli_numbers(8);
        let expect = [1.0, -0.5, 1.0 / 6.0, 0.0, -1.0 / 30.0, 0.0, 1.0 / 42.0, 0.0, -1.0 / 30.0];
        for (x, y) in b.iter().zip(expect) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn dexpinv_zero_u() {
        let v = hat3([0.1, 0.2, 0.3]);
        let r = dexpinv(&AlgebraElement::zeros(3), &v, 5).unwrap();
        assert_eq!(r, v);
    }

    #[test]
    fn dexpinv_q2_closed_form() {
        let u = hat3([0.3, -0.2, 0.5]);
        let v = hat3([-0.4, 0.1, 0.7]);
        let r = dexpinv(&u, &v, 2).unwrap();
        let uv = bracket(&u.0, &v.0);
        let uuv = bracket(&u.0, &uv);
        let expect = &v.0 - &uv * 0.5 + &uuv / 12.0;
        assert!((r.0 - expect).norm() < 1e-15);
    }

    #[test]
    fn dexpinv_parallel_arguments() {
        let u = hat3([0.3, -0.2, 0.5]);
        let v = u.scaled(-1.7);
        for q in 0..6 {
            let r = dexpinv(&u, &v, q).unwrap();
            assert!((r.0 - &v.0).norm() < 1e-15);
        }
    }

    #[test]
    fn dexp_series_matches_finite_difference() {
        // d/ds exp(u + s w)|₀ · exp(−u) = dexp_u(w).
        let u = hat3([0.4, -0.3, 0.6]);
        let w = hat3([0.2, 0.5, -0.1]);
        let s = 1e-5;
        let fwd = expm(&(&u.0 + &w.0 * s));
        let bwd = expm(&(&u.0 - &w.0 * s));
        let fd = (fwd - bwd) / (2.0 * s) * expm(&(-&u.0));
        let series = dexp_series(&u, &w, 30);
        assert!((fd - series.0).norm() < 1e-9);
    }

    #[test]
    fn commutator_identities() {
        let a = hat3([1.0, 2.0, 3.0]);
        assert!(commutator(&a, &a).unwrap().norm() == 0.0);
        let b = AlgebraElement(DMatrix::zeros(2, 2));
        assert!(commutator(&a, &b).is_err());
    }

    #[test]
    fn jacobi_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..50 {
            let a = random_skew(&mut rng, 4, 1.0).0;
            let b = random_skew(&mut rng, 4, 1.0).0;
            let c = random_skew(&mut rng, 4, 1.0).0;
            let j = bracket(&a, &bracket(&b, &c))
                + bracket(&b, &bracket(&c, &a))
                + bracket(&c, &bracket(&a, &b));
            assert!(j.norm() < 1e-13);
        }
    }

    #[test]
    fn operator_norms() {
        assert!((operator_norm(&DMatrix::identity(3, 3)) - 1.0).abs() < 1e-15);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&[3.0, -4.0]));
        assert!((operator_norm(&d) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn so_basis_is_orthonormal() {
        let b = so_basis(4);
        assert_eq!(b.len(), 6);
        for (i, x) in b.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                let ip = x.0.dot(&y.0);
                assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }
}
