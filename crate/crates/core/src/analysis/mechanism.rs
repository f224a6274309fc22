//! The comparison-function argument behind the local metric estimate, run
//! on a time grid.
//!
//! For `t ∈ [0, h]` the exact solution `y(t)` is lifted to `ỹ(t) ∈ G`, the
//! numerical one-step value `ŷ(t)` is shifted to `Λ_{ỹ(t)⁻¹} ŷ(t)` near `o`,
//! and the comparison family is evaluated there:
//! `ω_n(t, ŷ(t)) = f_n(Λ_{ỹ(t)⁻¹} ŷ(t))`.

use rayon::prelude::*;
use serde::Serialize;

use super::comparison::ComparisonFamily;
use crate::error::{Error, Result};
use crate::integrators::{reference_trajectory, step, MethodSpec, REFERENCE_TOL};
use crate::space::{act, geodesic_distance, lift_curve, CoefficientField, Point};

/// Intervals of the `t`-grid on `[0, h]`.
pub const MECHANISM_GRID: usize = 16;
/// Tolerance of the invariance check (i).
pub const INVARIANCE_TOL: f64 = 1e-10;
/// Absolute slack of the domination check (ii); distances this small are
/// round-off in the one-step values.
pub const ROUNDING_SLACK: f64 = 1e-14;
/// Largest allowed spread of the check (iii) ratio or of `κ` along a ladder.
pub const SPREAD_LIMIT: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismSample {
    pub t: f64,
    /// `d(ŷ(t), y(t))`.
    pub distance: f64,
    /// `d(Λ_{ỹ(t)⁻¹} ŷ(t), o)`.
    pub shifted_distance: f64,
    /// `max_n ω_n(t, ŷ(t))`.
    pub omega_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismReport {
    pub method: String,
    pub h: f64,
    pub epsilon: f64,
    pub samples: Vec<MechanismSample>,
    /// (i) at every grid point.
    pub invariance: bool,
    pub max_invariance_defect: f64,
    /// (ii) at every grid point.
    pub domination: bool,
    /// `sup_t max_n ω_n(t, ŷ(t)) / h^{p+1}`.
    pub ratio: f64,
}

impl MechanismReport {
    pub fn pass(&self) -> bool {
        self.invariance && self.domination && self.ratio.is_finite()
    }
}

/// Runs checks (i) and (ii) on the `t`-grid of `[0, h]` and reports the
/// ratio used by check (iii).
pub fn mechanism_check(
    spec: &MethodSpec,
    v: &CoefficientField,
    x0: &Point,
    h: f64,
    family: &ComparisonFamily,
) -> Result<MechanismReport> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step {h} must be positive")));
    }
    if family.space() != x0.space() {
        return Err(Error::Domain("comparison family lives in another model".into()));
    }
    let grid: Vec<f64> = (0..=MECHANISM_GRID)
        .map(|k| h * k as f64 / MECHANISM_GRID as f64)
        .collect();
    let exact = reference_trajectory(v, x0, &grid, REFERENCE_TOL)?;
    let approx: Vec<Point> = grid
        .iter()
        .map(|&t| step(spec, v, x0, t))
        .collect::<Result<_>>()?;
    let lifts = lift_curve(&exact);
    let o = x0.space().base_point();
    let mut samples = Vec::with_capacity(grid.len());
    for (k, &t) in grid.iter().enumerate() {
        let distance = geodesic_distance(&approx[k], &exact[k])?;
        if distance >= family.epsilon() {
            return Err(Error::BallViolated(format!(
                "d(ŷ, y) = {distance:e} at t = {t} leaves the {}-ball; use a smaller h",
                family.epsilon()
            )));
        }
        let shifted = act(&lifts[k].inverse(), &approx[k])?;
        samples.push(MechanismSample {
            t,
            distance,
            shifted_distance: geodesic_distance(&shifted, &o)?,
            omega_max: family.max_member(&shifted),
        });
    }
    let max_invariance_defect = samples
        .iter()
        .map(|s| (s.distance - s.shifted_distance).abs())
        .fold(0.0, f64::max);
    let domination = samples.iter().all(|s| s.omega_max + ROUNDING_SLACK >= s.distance);
    let sup = samples.iter().map(|s| s.omega_max).fold(0.0, f64::max);
    Ok(MechanismReport {
        method: spec.id.clone(),
        h,
        epsilon: family.epsilon(),
        samples,
        invariance: max_invariance_defect <= INVARIANCE_TOL,
        max_invariance_defect,
        domination,
        ratio: sup / h.powi(spec.order as i32 + 1),
    })
}

/// Check (iii) over a ladder of step sizes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MechanismLadder {
    pub reports: Vec<MechanismReport>,
    /// `max ratio / min ratio` over the ladder.
    pub spread: f64,
    pub bounded: bool,
}

impl MechanismLadder {
    pub fn pass(&self) -> bool {
        self.bounded && self.reports.iter().all(|r| r.pass())
    }
}

pub fn mechanism_ladder(
    spec: &MethodSpec,
    v: &CoefficientField,
    x0: &Point,
    steps: &[f64],
    family: &ComparisonFamily,
) -> Result<MechanismLadder> {
    let reports: Vec<MechanismReport> = steps
        .par_iter()
        .map(|&h| mechanism_check(spec, v, x0, h, family))
        .collect::<Result<_>>()?;
    let spread = spread(reports.iter().map(|r| r.ratio));
    Ok(MechanismLadder {
        bounded: spread < SPREAD_LIMIT,
        reports,
        spread,
    })
}

fn spread(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r), hi.max(r)));
    if lo > 0.0 {
        hi / lo
    } else if hi == 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Metric error against the comparison family used as test functions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparabilityRow {
    pub h: f64,
    pub err_metric: f64,
    /// `max_n |ω_n(h, ŷ(h)) − ω_n(h, y(h))|`; the second term is `0`.
    pub err_family_max: f64,
    /// `err_metric / err_family_max`.
    pub kappa: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparabilityReport {
    pub rows: Vec<ComparabilityRow>,
    /// The single constant: the largest per-row ratio.
    pub kappa: f64,
    pub spread: f64,
    pub pass: bool,
}

/// `err_metric ≤ κ·max_n |ω_n(ŷ) − ω_n(y)|` along a ladder with one `κ`.
pub fn comparability(
    spec: &MethodSpec,
    v: &CoefficientField,
    x0: &Point,
    steps: &[f64],
    family: &ComparisonFamily,
) -> Result<ComparabilityReport> {
    let rows: Vec<ComparabilityRow> = steps
        .par_iter()
        .map(|&h| {
            let r = mechanism_check(spec, v, x0, h, family)?;
            let last = r.samples.last().expect("grid is nonempty");
            let kappa = if last.omega_max > 0.0 {
                last.distance / last.omega_max
            } else if last.distance == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            Ok(ComparabilityRow {
                h,
                err_metric: last.distance,
                err_family_max: last.omega_max,
                kappa,
            })
        })
        .collect::<Result<_>>()?;
    let kappa = rows.iter().map(|r| r.kappa).fold(0.0, f64::max);
    let nonzero: Vec<f64> = rows.iter().filter(|r| r.err_metric > 0.0).map(|r| r.kappa).collect();
    let spread = spread(nonzero.into_iter());
    let pass = kappa.is_finite()
        && spread < SPREAD_LIMIT
        && rows.iter().all(|r| r.err_metric <= kappa * r.err_family_max);
    Ok(ComparabilityReport {
        rows,
        kappa,
        spread,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::comparison::comparison_family;
    use crate::analysis::tables::dyadic_steps;
    use crate::kernels::hat3;
    use crate::space::{sample_field, sample_point, FieldParams, Space};

    #[test]
    fn exact_method_gives_zero_chain() {
        let v = CoefficientField::constant(Space::Sphere(3), &hat3([0.1, 0.5, -0.3]));
        let x = sample_point(Space::Sphere(3), 4);
        let fam = comparison_family(Space::Sphere(3), 0.3).unwrap();
        let r = mechanism_check(&MethodSpec::rkmk4(), &v, &x, 0.25, &fam).unwrap();
        assert!(r.pass(), "{r:?}");
        assert!(r.samples.iter().all(|s| s.omega_max >= 0.0 && s.distance < 1e-14));
    }

    #[test]
    fn rkmk4_on_sphere() {
        let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 4);
        let fam = comparison_family(Space::Sphere(3), 0.3).unwrap();
        let r = mechanism_check(&MethodSpec::rkmk4(), &v, &x, 0.5f64.powi(5), &fam).unwrap();
        assert!(r.invariance && r.domination, "{r:?}");
    }

    #[test]
    fn ball_violation_is_reported() {
        let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 4);
        let fam = comparison_family(Space::Sphere(3), 0.01).unwrap();
        let r = mechanism_check(&MethodSpec::lie_euler(), &v, &x, 1.0, &fam);
        assert!(matches!(r, Err(Error::BallViolated(_))));
    }

    #[test]
    fn kappa_is_stable() {
        let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 4);
        let fam = comparison_family(Space::Sphere(3), 0.3).unwrap();
        let r = comparability(&MethodSpec::lie_euler(), &v, &x, &dyadic_steps(4..9), &fam).unwrap();
        assert!(r.pass, "{r:?}");
        assert!(r.kappa <= 1.0);
    }
}
