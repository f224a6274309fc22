//! One-step and global error ladders and empirical order fits.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrators::{integrate, reference_flow, step, uniform_grid, MethodSpec, REFERENCE_TOL};
use crate::space::{geodesic_distance, CoefficientField, Point, ScalarField};

/// Rows below this are treated as round-off and left out of slope fits.
pub const FP_FLOOR: f64 = 1e-13;
/// Fewest ladder rows a slope fit accepts.
pub const MIN_FIT_ROWS: usize = 4;

/// `(err_metric, err_testfn)` for one step of size `h`.
pub fn local_errors(
    spec: &MethodSpec,
    v: &CoefficientField,
    x0: &Point,
    h: f64,
    suite: &[ScalarField],
) -> Result<(f64, Vec<f64>)> {
    if !(h > 0.0) {
        return Err(Error::Domain(format!("step {h} must be positive")));
    }
    let exact = reference_flow(v, x0, h, REFERENCE_TOL)?;
    let approx = step(spec, v, x0, h)?;
    let metric = geodesic_distance(&exact, &approx)?;
    let testfn = suite
        .iter()
        .map(|f| (f.value(&approx) - f.value(&exact)).abs())
        .collect();
    Ok((metric, testfn))
}

/// `d(φ_T(x₀), ŷ_n)` on the uniform `n`-step grid.
pub fn global_error(spec: &MethodSpec, v: &CoefficientField, x0: &Point, t_end: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("at least one step is needed".into()));
    }
    if t_end == 0.0 {
        return Ok(0.0);
    }
    let exact = reference_flow(v, x0, t_end, REFERENCE_TOL)?;
    let traj = integrate(spec, v, x0, &uniform_grid(0.0, t_end, n))?;
    geodesic_distance(&exact, traj.last())
}

/// One ladder row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub h: f64,
    pub err_metric: f64,
    pub err_testfn_max: f64,
    /// Extra diagnostics, named by [`ErrorTable::aux_names`].
    pub aux: Vec<f64>,
}

/// Error ladder sorted by strictly decreasing `h`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorTable {
    pub problem: String,
    pub method: String,
    pub aux_names: Vec<String>,
    pub rows: Vec<ErrorRow>,
}

impl ErrorTable {
    /// Sorts by decreasing `h` and validates the invariants.
    pub fn new(problem: impl Into<String>, method: impl Into<String>, aux_names: Vec<String>, mut rows: Vec<ErrorRow>) -> Result<Self> {
        rows.sort_by(|a, b| b.h.total_cmp(&a.h));
        if rows.windows(2).any(|w| w[0].h == w[1].h) {
            return Err(Error::Domain("duplicate step size in ladder".into()));
        }
        for r in &rows {
            if !(r.h > 0.0) || !(r.err_metric >= 0.0) || !(r.err_testfn_max >= 0.0) {
                return Err(Error::Domain(format!("invalid ladder row at h = {}", r.h)));
            }
            if r.aux.len() != aux_names.len() {
                return Err(Error::Domain("aux column count mismatch".into()));
            }
        }
        Ok(ErrorTable {
            problem: problem.into(),
            method: method.into(),
            aux_names,
            rows,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Values of a column, in row order.
    pub fn column(&self, column: &Column) -> Result<Vec<f64>> {
        match column {
            Column::Metric => Ok(self.rows.iter().map(|r| r.err_metric).collect()),
            Column::TestFnMax => Ok(self.rows.iter().map(|r| r.err_testfn_max).collect()),
            Column::Aux(name) => {
                let k = self
                    .aux_names
                    .iter()
                    .position(|n| n == name)
                    .ok_or_else(|| Error::Domain(format!("no column `{name}`")))?;
                Ok(self.rows.iter().map(|r| r.aux[k]).collect())
            }
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["h".to_string(), "err_metric".to_string(), "err_testfn_max".to_string()];
        h.extend(self.aux_names.iter().cloned());
        h
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Column {
    Metric,
    TestFnMax,
    Aux(String),
}

impl Column {
    pub fn name(&self) -> &str {
        match self {
            Column::Metric => "err_metric",
            Column::TestFnMax => "err_testfn_max",
            Column::Aux(n) => n,
        }
    }
}

/// Local error ladder; the aux columns are the individual test-function errors.
pub fn local_error_table(
    spec: &MethodSpec,
    v: &CoefficientField,
    x0: &Point,
    steps: &[f64],
    suite: &[ScalarField],
) -> Result<ErrorTable> {
    let rows: Vec<ErrorRow> = steps
        .par_iter()
        .map(|&h| {
            let (metric, testfn) = local_errors(spec, v, x0, h, suite)?;
            Ok(ErrorRow {
                h,
                err_metric: metric,
                err_testfn_max: testfn.iter().copied().fold(0.0, f64::max),
                aux: testfn,
            })
        })
        .collect::<Result<_>>()?;
    let names = suite.iter().map(|f| format!("err_{}", f.name())).collect();
    ErrorTable::new(v.name(), &spec.id, names, rows)
}

/// Global error ladder over step counts; `h = T/n`. The aux column holds `n`.
///
/// The test-function column is `max_j |f_j(ŷ_n) − f_j(φ_T(x₀))|` over `suite`.
pub fn global_error_table(
    spec: &MethodSpec,
    v: &CoefficientField,
    x0: &Point,
    t_end: f64,
    counts: &[usize],
    suite: &[ScalarField],
) -> Result<ErrorTable> {
    if !(t_end > 0.0) {
        return Err(Error::Domain("global ladders need T > 0".into()));
    }
    let exact = reference_flow(v, x0, t_end, REFERENCE_TOL)?;
    let rows: Vec<ErrorRow> = counts
        .par_iter()
        .map(|&n| {
            if n == 0 {
                return Err(Error::Domain("at least one step is needed".into()));
            }
            let traj = integrate(spec, v, x0, &uniform_grid(0.0, t_end, n))?;
            let end = traj.last();
            let testfn = suite
                .iter()
                .map(|f| (f.value(end) - f.value(&exact)).abs())
                .fold(0.0, f64::max);
            Ok(ErrorRow {
                h: t_end / n as f64,
                err_metric: geodesic_distance(&exact, end)?,
                err_testfn_max: testfn,
                aux: vec![n as f64],
            })
        })
        .collect::<Result<_>>()?;
    ErrorTable::new(v.name(), &spec.id, vec!["n".into()], rows)
}

/// Least-squares fit of `log err = slope·log h + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeReport {
    pub method: String,
    pub column: String,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in `ln` units.
    pub residual: f64,
    /// `(largest h, smallest h)` among retained rows.
    pub window: (f64, f64),
    pub points: usize,
    pub expected_min: Option<f64>,
    pub expected_max: Option<f64>,
    pub pass: bool,
}

impl SlopeReport {
    /// Judges the slope against `[lo, hi]`; `hi = None` means one-sided.
    pub fn judge(mut self, lo: f64, hi: Option<f64>) -> Self {
        self.expected_min = Some(lo);
        self.expected_max = hi;
        self.pass = self.slope >= lo && hi.is_none_or(|h| self.slope <= h);
        self
    }

    /// `expected ± tol`.
    pub fn judge_band(self, expected: f64, tol: f64) -> Self {
        self.judge(expected - tol, Some(expected + tol))
    }
}

/// Fit over `(h, err)` pairs, excluding rows below [`FP_FLOOR`].
pub fn fit_slope(points: &[(f64, f64)]) -> Result<(f64, f64, f64, (f64, f64), usize)> {
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, e)| *h > 0.0 && e.is_finite() && *e >= FP_FLOOR)
        .map(|(h, e)| (h.ln(), e.ln()))
        .collect();
    if kept.len() < MIN_FIT_ROWS {
        return Err(Error::InsufficientData(format!(
            "{} usable ladder rows, need {MIN_FIT_ROWS}",
            kept.len()
        )));
    }
    let m = kept.len() as f64;
    let mx = kept.iter().map(|p| p.0).sum::<f64>() / m;
    let my = kept.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all retained rows share one h".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = kept
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum();
    let hmax = kept.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).exp();
    let hmin = kept.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).exp();
    Ok((slope, intercept, (rss / m).sqrt(), (hmax, hmin), kept.len()))
}

/// Empirical order of one column.
pub fn convergence_slope(table: &ErrorTable, column: &Column) -> Result<SlopeReport> {
    let values = table.column(column)?;
    let pts: Vec<(f64, f64)> = table.rows.iter().map(|r| r.h).zip(values).collect();
    let (slope, intercept, residual, window, points) = fit_slope(&pts)?;
    Ok(SlopeReport {
        method: table.method.clone(),
        column: column.name().to_string(),
        slope,
        intercept,
        residual,
        window,
        points,
        expected_min: None,
        expected_max: None,
        pass: true,
    })
}

/// `2^{−k}` for each `k`.
pub fn dyadic_steps(exponents: impl IntoIterator<Item = u32>) -> Vec<f64> {
    exponents.into_iter().map(|k| 0.5f64.powi(k as i32)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::hat3;
    use crate::space::{sample_field, sample_point, test_suite, FieldParams, ScalarFamily, Space};

    fn table(rows: Vec<(f64, f64)>) -> ErrorTable {
        ErrorTable::new(
            "p",
            "m",
            vec![],
            rows.into_iter()
                .map(|(h, e)| ErrorRow {
                    h,
                    err_metric: e,
                    err_testfn_max: e,
                    aux: vec![],
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_power_law() {
        let t = table(dyadic_steps(2..9).into_iter().map(|h| (h, 3.0 * h.powi(5))).collect());
        let s = convergence_slope(&t, &Column::Metric).unwrap();
        assert!((s.slope - 5.0).abs() < 1e-12);
        assert!((s.intercept - 3f64.ln()).abs() < 1e-10);
        assert!(s.clone().judge_band(5.0, 0.25).pass);
        assert!(!s.judge_band(4.0, 0.25).pass);
    }

    #[test]
    fn two_rows_is_an_error() {
        let t = table(vec![(0.5, 1e-3), (0.25, 1e-4)]);
        assert!(matches!(
            convergence_slope(&t, &Column::Metric),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn floor_rows_are_dropped() {
        let mut rows: Vec<(f64, f64)> = dyadic_steps(1..6).into_iter().map(|h| (h, h * h)).collect();
        rows.push((1e-4, 1e-16));
        rows.push((1e-5, 0.0));
        let s = convergence_slope(&table(rows), &Column::Metric).unwrap();
        assert_eq!(s.points, 5);
        assert!((s.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rows_are_sorted_descending() {
        let t = table(vec![(0.1, 1.0), (0.4, 2.0), (0.2, 1.5)]);
        let hs: Vec<f64> = t.rows.iter().map(|r| r.h).collect();
        assert_eq!(hs, vec![0.4, 0.2, 0.1]);
        assert!(ErrorTable::new("p", "m", vec![], vec![
            ErrorRow { h: 0.1, err_metric: 1.0, err_testfn_max: 1.0, aux: vec![] },
            ErrorRow { h: 0.1, err_metric: 1.0, err_testfn_max: 1.0, aux: vec![] },
        ]).is_err());
    }

    #[test]
    fn constant_field_local_errors_vanish() {
        let v = CoefficientField::constant(Space::Sphere(3), &hat3([0.4, -0.7, 1.1]));
        let x = sample_point(Space::Sphere(3), 1);
        let mut suite = test_suite(Space::Sphere(3));
        suite.push(ScalarField::new(Space::Sphere(3), ScalarFamily::Constant(2.0), "c"));
        for m in [MethodSpec::rkmk4(), MethodSpec::cf4()] {
            let (metric, testfn) = local_errors(&m, &v, &x, 0.25, &suite).unwrap();
            assert!(metric <= 1e-12);
            assert_eq!(*testfn.last().unwrap(), 0.0);
        }
    }

    #[test]
    fn global_error_at_zero_time() {
        let v = sample_field(Space::Sphere(3), "sphere-nonlinear", &FieldParams::default()).unwrap();
        let x = sample_point(Space::Sphere(3), 1);
        assert_eq!(global_error(&MethodSpec::rkmk4(), &v, &x, 0.0, 4).unwrap(), 0.0);
        assert!(local_errors(&MethodSpec::rkmk4(), &v, &x, 0.0, &[]).is_err());
    }
}
