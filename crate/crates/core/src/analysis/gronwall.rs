//! Sampled Gronwall constants and the exponential separation bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrators::{reference_trajectory, uniform_grid, REFERENCE_TOL};
use crate::kernels::operator_norm;
use crate::space::{covariant_derivative_operator, geodesic_distance, geodesic_point, CoefficientField, Point};

/// Inflation applied to a sampled `C_T` before it is used in a bound.
pub const GRONWALL_INFLATION: f64 = 1.02;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GronwallReport {
    /// `max ‖∇V‖` over the sampled flow tube.
    pub c_t: f64,
    /// Samples along the initial geodesic.
    pub s_samples: usize,
    /// Intervals of the `t`-grid on `[0, T]`.
    pub t_intervals: usize,
    pub t_end: f64,
    pub initial_distance: f64,
    /// `max_t d(φ_t p₀, φ_t q₀) / (d(p₀, q₀)·e^{C_T t})` with the raw `C_T`.
    pub max_ratio_raw: f64,
    /// Same ratio with `C_T` inflated by [`GRONWALL_INFLATION`].
    pub max_ratio: f64,
}

/// Outcome of [`gronwall_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GronwallCheck {
    pub report: GronwallReport,
    pub pass: bool,
}

/// `C_T` over the tube swept by the minimizing geodesic from `p₀` to `q₀`.
///
/// The geodesic is sampled at `resolution + 1` points, each is flowed on a
/// `resolution`-interval grid over `[0, T]`, and `C_T` is the largest
/// operator norm of the covariant derivative seen. The two end samples are
/// `p₀` and `q₀` themselves, so the separation ratios come for free.
pub fn gronwall_constant(
    v: &CoefficientField,
    p0: &Point,
    q0: &Point,
    t_end: f64,
    resolution: usize,
) -> Result<GronwallReport> {
    if resolution == 0 {
        return Err(Error::Domain("resolution must be positive".into()));
    }
    if !(t_end >= 0.0) {
        return Err(Error::Domain(format!("horizon {t_end} must be nonnegative")));
    }
    let grid = if t_end == 0.0 {
        vec![0.0]
    } else {
        uniform_grid(0.0, t_end, resolution)
    };
    let samples: Vec<Point> = (0..=resolution)
        .map(|k| {
            if k == 0 {
                Ok(p0.clone())
            } else if k == resolution {
                Ok(q0.clone())
            } else {
                geodesic_point(p0, q0, k as f64 / resolution as f64)
            }
        })
        .collect::<Result<_>>()?;
    let tubes: Vec<(Vec<Point>, f64)> = samples
        .par_iter()
        .map(|s| {
            let path = reference_trajectory(v, s, &grid, REFERENCE_TOL)?;
            let mut c: f64 = 0.0;
            for y in &path {
                c = c.max(operator_norm(&covariant_derivative_operator(v, y)?));
            }
            Ok((path, c))
        })
        .collect::<Result<_>>()?;
    let c_t = tubes.iter().map(|t| t.1).fold(0.0, f64::max);
    let d0 = geodesic_distance(p0, q0)?;
    let p_path = &tubes[0].0;
    let q_path = &tubes[resolution].0;
    let mut raw: f64 = 0.0;
    let mut inflated: f64 = 0.0;
    if d0 > 0.0 {
        for ((t, p), q) in grid.iter().zip(p_path).zip(q_path) {
            let d = geodesic_distance(p, q)?;
            raw = raw.max(d / (d0 * (c_t * t).exp()));
            inflated = inflated.max(d / (d0 * (GRONWALL_INFLATION * c_t * t).exp()));
        }
    }
    Ok(GronwallReport {
        c_t,
        s_samples: resolution + 1,
        t_intervals: grid.len() - 1,
        t_end,
        initial_distance: d0,
        max_ratio_raw: raw,
        max_ratio: inflated,
    })
}

/// Verifies `d(φ_t p₀, φ_t q₀) ≤ d(p₀, q₀)·e^{1.02·C_T·t}` on the grid.
pub fn gronwall_check(
    v: &CoefficientField,
    p0: &Point,
    q0: &Point,
    t_end: f64,
    resolution: usize,
) -> Result<GronwallCheck> {
    let report = gronwall_constant(v, p0, q0, t_end, resolution)?;
    let pass = report.max_ratio <= 1.0;
    Ok(GronwallCheck { report, pass })
}
