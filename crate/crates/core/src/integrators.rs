//! Intrinsic Lie group integrators on homogeneous models and a refinement-
//! controlled reference flow.
//!
//! Every method advances by left-multiplying with products of exact matrix
//! exponentials, so iterates never leave the manifold.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{dexpinv_raw, expm};
use crate::space::{geodesic_distance, CoefficientField, Point};

/// Explicit Runge–Kutta coefficients.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ButcherTableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub order: u32,
}

impl ButcherTableau {
    /// Checks shape, explicitness, `c_i = Σ_j a_ij` and `Σ b_i = 1` to `1e-14`.
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>, order: u32) -> Result<Self> {
        let s = b.len();
        if a.len() != s || c.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::Domain("tableau shape mismatch".into()));
        }
        for (i, row) in a.iter().enumerate() {
            if row[i..].iter().any(|x| *x != 0.0) {
                return Err(Error::Domain("tableau is not explicit".into()));
            }
            if (row.iter().sum::<f64>() - c[i]).abs() > 1e-14 {
                return Err(Error::Domain(format!("row sum {i} differs from c")));
            }
        }
        if (b.iter().sum::<f64>() - 1.0).abs() > 1e-14 {
            return Err(Error::Domain("weights do not sum to one".into()));
        }
        Ok(ButcherTableau { a, b, c, order })
    }

    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn classical_rk4() -> Self {
        ButcherTableau::new(
            vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            vec![0.0, 0.5, 0.5, 1.0],
            4,
        )
        .expect("classical RK4 tableau is valid")
    }

    pub fn explicit_euler() -> Self {
        ButcherTableau::new(vec![vec![0.0]], vec![1.0], vec![0.0], 1).expect("valid")
    }

    pub fn heun() -> Self {
        ButcherTableau::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            vec![0.5, 0.5],
            vec![0.0, 1.0],
            2,
        )
        .expect("valid")
    }
}

/// Commutator-free scheme: every stage and the update are products of
/// exponentials of linear combinations of stage coefficients. Each inner list
/// of weights is one exponential, listed in the order they are applied.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CfScheme {
    pub stages: Vec<Vec<Vec<f64>>>,
    pub update: Vec<Vec<f64>>,
    pub order: u32,
}

impl CfScheme {
    /// Fourth-order scheme with nodes `(0, ½, ½, 1)` and a two-exponential update.
    pub fn cf4() -> Self {
        CfScheme {
            stages: vec![
                vec![],
                vec![vec![0.5, 0.0, 0.0, 0.0]],
                vec![vec![0.0, 0.5, 0.0, 0.0]],
                vec![vec![0.5, 0.0, 0.0, 0.0], vec![-0.5, 0.0, 1.0, 0.0]],
            ],
            update: vec![
                vec![0.25, 1.0 / 6.0, 1.0 / 6.0, -1.0 / 12.0],
                vec![-1.0 / 12.0, 1.0 / 6.0, 1.0 / 6.0, 0.25],
            ],
            order: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MethodKind {
    LieEuler,
    Rkmk { tableau: ButcherTableau, q: usize },
    CommutatorFree(CfScheme),
}

/// A method together with its claimed order and CLI id.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodSpec {
    pub id: String,
    pub kind: MethodKind,
    pub order: u32,
}

/// Method ids accepted by [`MethodSpec::from_id`].
pub const METHOD_IDS: &[&str] = &["lie-euler", "rkmk4", "cf4"];

impl MethodSpec {
    pub fn lie_euler() -> Self {
        MethodSpec {
            id: "lie-euler".into(),
            kind: MethodKind::LieEuler,
            order: 1,
        }
    }

    /// Classical RK4 tableau with `dexp⁻¹` truncated after the `B₂` term.
    pub fn rkmk4() -> Self {
        MethodSpec::rkmk("rkmk4", ButcherTableau::classical_rk4(), 2).expect("valid")
    }

    pub fn cf4() -> Self {
        MethodSpec {
            id: "cf4".into(),
            kind: MethodKind::CommutatorFree(CfScheme::cf4()),
            order: 4,
        }
    }

    /// RKMK from any explicit tableau; the truncation must satisfy `q ≥ p − 2`.
    pub fn rkmk(id: &str, tableau: ButcherTableau, q: usize) -> Result<Self> {
        let p = tableau.order as usize;
        if q + 2 < p {
            return Err(Error::Domain(format!(
                "dexpinv truncation q={q} too low for order {p}"
            )));
        }
        Ok(MethodSpec {
            id: id.into(),
            order: tableau.order,
            kind: MethodKind::Rkmk { tableau, q },
        })
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "lie-euler" => Ok(MethodSpec::lie_euler()),
            "rkmk4" => Ok(MethodSpec::rkmk4()),
            "cf4" => Ok(MethodSpec::cf4()),
            other => Err(Error::Config(format!(
                "unknown method `{other}` (expected one of {METHOD_IDS:?})"
            ))),
        }
    }
}

fn check_space(v: &CoefficientField, x: &Point) -> Result<()> {
    if v.space() != x.space() {
        return Err(Error::Domain("field and point live in different models".into()));
    }
    Ok(())
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain("non-finite step size".into()))
    }
}

/// One Runge–Kutta–Munthe-Kaas step.
///
/// Stages `u_i = h Σ_j a_ij k_j`, `k_i = dexp⁻¹_{u_i}(ξ(exp(u_i)·x))` truncated
/// at `q`, update `exp(h Σ b_i k_i)·x`.
pub fn rkmk_step(
    v: &CoefficientField,
    x: &Point,
    h: f64,
    tableau: &ButcherTableau,
    q: usize,
) -> Result<Point> {
    check_space(v, x)?;
    check_h(h)?;
    let n = x.space().group_dim();
    let s = tableau.stages();
    let mut ks: Vec<DMatrix<f64>> = Vec::with_capacity(s);
    for i in 0..s {
        let mut u = DMatrix::<f64>::zeros(n, n);
        for (j, k) in ks.iter().enumerate() {
            let a = tableau.a[i][j];
            if a != 0.0 {
                u += k * (h * a);
            }
        }
        let xi = if u.iter().all(|e| *e == 0.0) {
            v.coeff_matrix(x.coords())
        } else {
            let y = expm(&u) * x.coords();
            let c = v.coeff_matrix(&y);
            dexpinv_raw(&u, &c, q)
        };
        ks.push(xi);
    }
    let mut w = DMatrix::<f64>::zeros(n, n);
    for (b, k) in tableau.b.iter().zip(&ks) {
        w += k * (h * b);
    }
    Ok(Point::from_raw(x.space(), expm(&w) * x.coords()))
}

/// One commutator-free step.
pub fn commutator_free_step(v: &CoefficientField, x: &Point, h: f64, scheme: &CfScheme) -> Result<Point> {
    check_space(v, x)?;
    check_h(h)?;
    let n = x.space().group_dim();
    let combine = |weights: &[f64], fs: &[DMatrix<f64>]| {
        let mut m = DMatrix::<f64>::zeros(n, n);
        for (w, f) in weights.iter().zip(fs) {
            if *w != 0.0 {
                m += f * (h * w);
            }
        }
        m
    };
    let apply = |exps: &[Vec<f64>], fs: &[DMatrix<f64>]| {
        let mut y = x.coords().clone();
        for wts in exps {
            y = expm(&combine(wts, fs)) * y;
        }
        y
    };
    let mut fs: Vec<DMatrix<f64>> = Vec::with_capacity(scheme.stages.len());
    for stage in &scheme.stages {
        let y = apply(stage, &fs);
        fs.push(v.coeff_matrix(&y));
    }
    Ok(Point::from_raw(x.space(), apply(&scheme.update, &fs)))
}

/// One step of the given method.
pub fn step(spec: &MethodSpec, v: &CoefficientField, x: &Point, h: f64) -> Result<Point> {
    match &spec.kind {
        MethodKind::LieEuler => {
            check_space(v, x)?;
            check_h(h)?;
            let c = v.coeff_matrix(x.coords());
            Ok(Point::from_raw(x.space(), expm(&(c * h)) * x.coords()))
        }
        MethodKind::Rkmk { tableau, q } => rkmk_step(v, x, h, tableau, *q),
        MethodKind::CommutatorFree(s) => commutator_free_step(v, x, h, s),
    }
}

/// Discrete solution on a time grid.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    pub method: String,
}

impl Trajectory {
    pub fn last(&self) -> &Point {
        self.points.last().expect("trajectory is never empty")
    }

    /// Largest manifold-invariant defect along the trajectory.
    pub fn max_invariant_defect(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.invariant_defect())
            .fold(0.0, f64::max)
    }
}

/// Uniform grid `t₀ + i·T/n`, `i = 0..=n`.
pub fn uniform_grid(t0: f64, t_end: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|i| {
            if i == n {
                t_end
            } else {
                t0 + (t_end - t0) * i as f64 / n as f64
            }
        })
        .collect()
}

/// `ŷ_{i+1} = step(ŷ_i, t_{i+1} − t_i)` along a strictly increasing grid.
pub fn integrate(spec: &MethodSpec, v: &CoefficientField, x0: &Point, grid: &[f64]) -> Result<Trajectory> {
    if grid.is_empty() {
        return Err(Error::Domain("empty time grid".into()));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain("time grid must be strictly increasing".into()));
    }
    let mut points = Vec::with_capacity(grid.len());
    points.push(x0.clone());
    for w in grid.windows(2) {
        let next = step(spec, v, points.last().expect("nonempty"), w[1] - w[0])?;
        points.push(next);
    }
    Ok(Trajectory {
        times: grid.to_vec(),
        points,
        method: spec.id.clone(),
    })
}

/// Smallest tolerance accepted by [`reference_flow`].
pub const MIN_REFERENCE_TOL: f64 = 1e-13;
/// Reference tolerance used throughout the harness.
pub const REFERENCE_TOL: f64 = 1e-12;
/// Largest substep the reference solver starts from.
const REFERENCE_MAX_SUBSTEP: f64 = 1.0 / 64.0;
const REFERENCE_MAX_SUBSTEPS: usize = 1 << 20;

/// Exact flow `φ_t(x₀)` to within `tol` in the geodesic distance.
///
/// Constant coefficient maps use the closed form `exp(tξ)·x₀`. Otherwise RKMK4
/// (with a longer `dexp⁻¹` expansion) is run on successively halved substeps
/// until two consecutive refinements differ by less than `tol/4`; the finer
/// solution is returned.
pub fn reference_flow(v: &CoefficientField, x0: &Point, t: f64, tol: f64) -> Result<Point> {
    check_space(v, x0)?;
    if !(tol >= MIN_REFERENCE_TOL) {
        return Err(Error::Domain(format!(
            "reference tolerance {tol:e} below {MIN_REFERENCE_TOL:e}"
        )));
    }
    if t == 0.0 {
        return Ok(x0.clone());
    }
    if let Some(xi) = v.constant_coefficient() {
        return Ok(Point::from_raw(x0.space(), expm(&(xi.0 * t)) * x0.coords()));
    }
    let tableau = ButcherTableau::classical_rk4();
    let run = |n: usize| -> Result<Point> {
        let h = t / n as f64;
        let mut y = x0.clone();
        for _ in 0..n {
            y = rkmk_step(v, &y, h, &tableau, 4)?;
        }
        Ok(y)
    };
    let mut n = ((t.abs() / REFERENCE_MAX_SUBSTEP).ceil() as usize).max(1);
    let mut coarse = run(n)?;
    let mut last = f64::INFINITY;
    while 2 * n <= REFERENCE_MAX_SUBSTEPS {
        n *= 2;
        let fine = run(n)?;
        last = geodesic_distance(&coarse, &fine)?;
        if last < tol / 4.0 {
            return Ok(fine);
        }
        coarse = fine;
    }
    Err(Error::Convergence { tol, last })
}

/// Reference flow sampled on a grid (segment by segment).
pub fn reference_trajectory(v: &CoefficientField, x0: &Point, grid: &[f64], tol: f64) -> Result<Vec<Point>> {
    let mut out = Vec::with_capacity(grid.len());
    out.push(x0.clone());
    for w in grid.windows(2) {
        let next = reference_flow(v, out.last().expect("nonempty"), w[1] - w[0], tol)?;
        out.push(next);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::hat3;
    use crate::space::{act, sample_field, sample_point, FieldParams, Space};

    fn methods() -> Vec<MethodSpec> {
        vec![MethodSpec::lie_euler(), MethodSpec::rkmk4(), MethodSpec::cf4()]
    }

    #[test]
    fn tableau_validation() {
        assert!(ButcherTableau::new(vec![vec![0.0]], vec![0.9], vec![0.0], 1).is_err());
        assert!(ButcherTableau::new(vec![vec![0.0, 0.0], vec![0.5, 0.0]], vec![0.5, 0.5], vec![0.0, 1.0], 2).is_err());
        assert!(ButcherTableau::new(vec![vec![1.0]], vec![1.0], vec![1.0], 1).is_err());
    }

    #[test]
    fn zero_step_is_identity() {
        let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 2);
        for m in methods() {
            assert_eq!(step(&m, &v, &x, 0.0).unwrap(), x);
        }
    }

    #[test]
    fn constant_field_is_integrated_exactly() {
        let xi = hat3([0.4, -0.7, 1.1]);
        for space in [Space::Sphere(3), Space::Group(3)] {
            let v = crate::space::CoefficientField::constant(space, &xi);
            let x = sample_point(space, 3);
            for m in methods() {
                for h in [0.01, 0.3, 1.0, 2.0] {
                    let y = step(&m, &v, &x, h).unwrap();
                    let exact = act(&crate::kernels::mat_exp(&xi.scaled(h)).unwrap(), &x).unwrap();
                    assert!(geodesic_distance(&y, &exact).unwrap() < 1e-13, "{} h={h}", m.id);
                }
            }
        }
    }

    #[test]
    fn grid_must_increase() {
        let v = sample_field(Space::Sphere(3), "constant", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 2);
        assert!(integrate(&MethodSpec::rkmk4(), &v, &x, &[0.0, 0.5, 0.5]).is_err());
        assert!(integrate(&MethodSpec::rkmk4(), &v, &x, &[]).is_err());
    }

    #[test]
    fn single_step_grid_matches_step() {
        let v = sample_field(Space::Group(3), "group-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Group(3), 4);
        for m in methods() {
            let tr = integrate(&m, &v, &x, &[0.0, 0.25]).unwrap();
            assert_eq!(tr.points[1], step(&m, &v, &x, 0.25).unwrap());
        }
    }

    #[test]
    fn integration_is_deterministic() {
        let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 4);
        let g = uniform_grid(0.0, 1.0, 37);
        let a = integrate(&MethodSpec::cf4(), &v, &x, &g).unwrap();
        let b = integrate(&MethodSpec::cf4(), &v, &x, &g).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert_eq!(p.flat(), q.flat());
        }
    }

    #[test]
    fn trajectories_stay_on_manifold() {
        for (space, fam) in [(Space::Sphere(3), "sphere-nonlinear"), (Space::Group(3), "group-nonlinear")] {
            let v = sample_field(space, fam, &FieldParams::default()).unwrap();
            let x = sample_point(space, 6);
            for m in methods() {
                let tr = integrate(&m, &v, &x, &uniform_grid(0.0, 2.0, 200)).unwrap();
                assert!(tr.max_invariant_defect() < 1e-10, "{}", m.id);
            }
        }
    }

    #[test]
    fn lie_euler_coarse_sanity() {
        let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 1);
        let tr = integrate(&MethodSpec::lie_euler(), &v, &x, &uniform_grid(0.0, 1.0, 1024)).unwrap();
        let r = reference_flow(&v, &x, 1.0, REFERENCE_TOL).unwrap();
        assert!(geodesic_distance(tr.last(), &r).unwrap() < 1e-2);
    }

    #[test]
    fn reference_flow_basics() {
        let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 1);
        assert_eq!(reference_flow(&v, &x, 0.0, 1e-12).unwrap(), x);
        assert!(reference_flow(&v, &x, 0.5, 1e-15).is_err());
    }

    #[test]
    fn reference_matches_closed_form_for_constant_coefficients() {
        // A nonconstant expression that is constant in value exercises the
        // iterative path against the closed form.
        let xi = hat3([0.4, -0.7, 1.1]);
        let c = crate::space::CoefficientField::constant(Space::Sphere(3), &xi);
        let disguised = crate::space::CoefficientField::linear_combination(&[(0.5, &c), (0.5, &c)]).unwrap();
        let x = sample_point(Space::Sphere(3), 3);
        let a = reference_flow(&disguised, &x, 1.3, 1e-12).unwrap();
        let b = reference_flow(&c, &x, 1.3, 1e-12).unwrap();
        assert!(geodesic_distance(&a, &b).unwrap() < 1e-12);
    }

    #[test]
    fn equivariance_under_left_action() {
        let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 7);
        let g = crate::space::lift_to_group(&sample_point(Space::Sphere(3), 99));
        let vg = v.transformed(&g);
        let gx = act(&g, &x).unwrap();
        for m in methods() {
            let grid = uniform_grid(0.0, 1.0, 16);
            let a = integrate(&m, &v, &x, &grid).unwrap();
            let b = integrate(&m, &vg, &gx, &grid).unwrap();
            for (p, q) in a.points.iter().zip(&b.points) {
                assert!(geodesic_distance(&act(&g, p).unwrap(), q).unwrap() < 1e-11);
            }
        }
    }
}
