//! Global error at `T = 1` on `S²` as the number of steps doubles.
//!
//! ```bash
//! cargo run -p homflow --example global_order
//! ```

use homflow::analysis::{convergence_slope, global_error_table, Column};
use homflow::integrators::MethodSpec;
use homflow::space::{sample_field, sample_point, test_suite, FieldParams, Space};

fn main() -> homflow::Result<()> {
    let space = Space::Sphere(3);
    let v = sample_field(space, "sphere-nonlinear", &FieldParams::default())?;
    let x0 = sample_point(space, 11);
    let counts: Vec<usize> = (3..=8).map(|k| 1 << k).collect();

    for spec in [MethodSpec::lie_euler(), MethodSpec::rkmk4(), MethodSpec::cf4()] {
        let t = global_error_table(&spec, &v, &x0, 1.0, &counts, &test_suite(space))?;
        let s = convergence_slope(&t, &Column::Metric)?;
        println!("{:>9}: slope {:.3}, finest error {:.2e}", spec.id, s.slope, t.rows.last().unwrap().err_metric);
    }
    Ok(())
}
