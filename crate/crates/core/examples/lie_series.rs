//! Truncated Lie series of a test function against the exact flow, with
//! the sampled remainder estimate.
//!
//! ```bash
//! cargo run -p homflow --example lie_series
//! ```

use homflow::integrators::{reference_flow, REFERENCE_TOL};
use homflow::lie_butcher::lie_series_partial_sum;
use homflow::space::{sample_field, sample_point, test_suite, FieldParams, Space};

fn main() -> homflow::Result<()> {
    let space = Space::Sphere(3);
    let v = sample_field(space, "sphere-nonlinear", &FieldParams::default())?;
    let x = sample_point(space, 3);
    let f = &test_suite(space)[0];
    println!("{:>8} {:>3} {:>12} {:>12}", "h", "p", "defect", "probe");
    for h in [0.2, 0.1, 0.05] {
        let exact = f.value(&reference_flow(&v, &x, h, REFERENCE_TOL)?);
        for p in 1..=3 {
            let s = lie_series_partial_sum(&v, f, &x, h, p)?;
            println!("{h:>8} {p:>3} {:>12.3e} {:>12.3e}", (exact - s.value).abs(), s.remainder_bound_probe);
        }
    }
    Ok(())
}
