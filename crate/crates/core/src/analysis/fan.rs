//! Lady Windermere's fan: global error as a sum of transported local errors.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrators::{integrate, reference_trajectory, MethodSpec, REFERENCE_TOL};
use crate::kernels::operator_norm;
use crate::space::{covariant_derivative_operator, geodesic_distance, CoefficientField, Point};

/// Relative slack of the per-step transport check.
pub const TRANSPORT_SLACK: f64 = 0.02;
/// Relative slack of the triangle-inequality check.
pub const TRIANGLE_SLACK: f64 = 1e-9;
/// Relative slack of the closing bound.
pub const CLOSING_SLACK: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FanStep {
    pub t: f64,
    /// `T_i = T − t_i`.
    pub remaining: f64,
    pub h: f64,
    /// `e_i = d(ŷ_i, φ_{h_i}(ŷ_{i−1}))`.
    pub local: f64,
    /// `E_i = d(φ_{T_i}(ŷ_i), φ_{T_{i−1}}(ŷ_{i−1}))`.
    pub transported: f64,
    /// `e^{C_T T_i}·e_i`.
    pub transport_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FanReport {
    pub method: String,
    pub order: u32,
    pub t_end: f64,
    pub steps: Vec<FanStep>,
    pub c_t: f64,
    pub global_error: f64,
    pub sum_transported: f64,
    /// `max_i e_i / h_i^{p+1}`.
    pub local_constant: f64,
    /// `(max_i e_i/h_i^{p+1})·C_T⁻¹(e^{C_T T} − 1)·h^p`.
    pub closing_bound: f64,
    pub check_transport: bool,
    pub check_triangle: bool,
    pub check_closing: bool,
}

impl FanReport {
    pub fn pass(&self) -> bool {
        self.check_transport && self.check_triangle && self.check_closing
    }
}

/// `(e^{cT} − 1)/c`, continuous at `c = 0`.
pub fn growth_factor(c: f64, t: f64) -> f64 {
    if c * t < 1e-8 {
        t * (1.0 + 0.5 * c * t)
    } else {
        (c * t).exp_m1() / c
    }
}

/// Decomposes the global error of `spec` on `grid` (ending at `T`).
///
/// Every `ŷ_i` is flowed exactly along the remaining grid; the first
/// segment gives `φ_{h_{i+1}}(ŷ_i)` for the local errors, the endpoint gives
/// the fan point `φ_{T_i}(ŷ_i)`, and all visited points enter `C_T`.
pub fn windermere_decomposition(
    spec: &MethodSpec,
    v: &CoefficientField,
    x0: &Point,
    grid: &[f64],
) -> Result<FanReport> {
    if grid.len() < 2 {
        return Err(Error::Domain("fan needs at least one step".into()));
    }
    let traj = integrate(spec, v, x0, grid)?;
    let n = grid.len() - 1;
    let t_end = grid[n];
    let t0 = grid[0];
    let tails: Vec<(Vec<Point>, f64)> = (0..=n)
        .into_par_iter()
        .map(|i| {
            let local_grid: Vec<f64> = grid[i..].iter().map(|t| t - grid[i]).collect();
            let path = reference_trajectory(v, &traj.points[i], &local_grid, REFERENCE_TOL)?;
            let mut c: f64 = 0.0;
            for y in &path {
                c = c.max(operator_norm(&covariant_derivative_operator(v, y)?));
            }
            Ok((path, c))
        })
        .collect::<Result<_>>()?;
    let c_t = tails.iter().map(|t| t.1).fold(0.0, f64::max);
    let fan_point = |i: usize| tails[i].0.last().expect("nonempty");
    let p = spec.order;
    let mut steps = Vec::with_capacity(n);
    for i in 1..=n {
        let h = grid[i] - grid[i - 1];
        let remaining = t_end - grid[i];
        let local = geodesic_distance(&traj.points[i], &tails[i - 1].0[1])?;
        let transported = geodesic_distance(fan_point(i), fan_point(i - 1))?;
        steps.push(FanStep {
            t: grid[i],
            remaining,
            h,
            local,
            transported,
            transport_bound: (c_t * remaining).exp() * local,
        });
    }
    let global_error = geodesic_distance(fan_point(0), traj.last())?;
    let sum_transported: f64 = steps.iter().map(|s| s.transported).sum();
    let local_constant = steps
        .iter()
        .map(|s| s.local / s.h.powi(p as i32 + 1))
        .fold(0.0, f64::max);
    let hmax = steps.iter().map(|s| s.h).fold(0.0, f64::max);
    let closing_bound = local_constant * growth_factor(c_t, t_end - t0) * hmax.powi(p as i32);
    let check_transport = steps
        .iter()
        .all(|s| s.transported <= s.transport_bound * (1.0 + TRANSPORT_SLACK));
    let check_triangle = global_error <= sum_transported * (1.0 + TRIANGLE_SLACK);
    let check_closing = sum_transported <= closing_bound * (1.0 + CLOSING_SLACK);
    Ok(FanReport {
        method: spec.id.clone(),
        order: p,
        t_end,
        steps,
        c_t,
        global_error,
        sum_transported,
        local_constant,
        closing_bound,
        check_transport,
        check_triangle,
        check_closing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::uniform_grid;
    use crate::kernels::hat3;
    use crate::space::{sample_field, sample_point, FieldParams, Space};

    #[test]
    fn single_leaf() {
        let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 2);
        let r = windermere_decomposition(&MethodSpec::lie_euler(), &v, &x, &[0.0, 0.1]).unwrap();
        assert_eq!(r.steps.len(), 1);
        assert_eq!(r.steps[0].local, r.steps[0].transported);
        assert_eq!(r.global_error, r.steps[0].local);
        assert!(r.pass());
    }

    #[test]
    fn constant_field_has_no_local_error() {
        let v = CoefficientField::constant(Space::Group(3), &hat3([0.4, -0.7, 1.1]));
        let x = sample_point(Space::Group(3), 2);
        let r = windermere_decomposition(&MethodSpec::rkmk4(), &v, &x, &uniform_grid(0.0, 1.0, 8)).unwrap();
        assert!(r.steps.iter().all(|s| s.local <= 1e-12));
    }

    #[test]
    fn lie_euler_fan_closes() {
        let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 2);
        let r = windermere_decomposition(&MethodSpec::lie_euler(), &v, &x, &uniform_grid(0.0, 1.0, 64)).unwrap();
        assert!(r.check_transport && r.check_triangle && r.check_closing, "{r:?}");
    }

    #[test]
    fn growth_factor_limit() {
        assert_eq!(growth_factor(0.0, 2.0), 2.0);
        assert!((growth_factor(1.0, 1.0) - (1f64.exp() - 1.0)).abs() < 1e-15);
    }
}
