//! One-step error ladder on `SO(3)`, written as CSV to stdout, plus the
//! fitted slopes.
//!
//! ```bash
//! cargo run -p homflow --example local_order
//! ```

use homflow::analysis::{convergence_slope, dyadic_steps, local_error_table, Column};
use homflow::integrators::MethodSpec;
use homflow::space::{sample_field, sample_point, test_suite, FieldParams, Space};

fn main() -> homflow::Result<()> {
    let space = Space::Group(3);
    let v = sample_field(space, "group-nonlinear", &FieldParams::default())?;
    let x0 = sample_point(space, 11);
    let suite = test_suite(space);
    let steps = dyadic_steps(3..=9);

    for spec in [MethodSpec::lie_euler(), MethodSpec::rkmk4(), MethodSpec::cf4()] {
        let table = local_error_table(&spec, &v, &x0, &steps, &suite)?;
        println!("# {}", spec.id);
        println!("{}", table.header()[..3].join(","));
        for r in &table.rows {
            println!("{:e},{:e},{:e}", r.h, r.err_metric, r.err_testfn_max);
        }
        let s = convergence_slope(&table, &Column::Metric)?.judge_band(spec.order as f64 + 1.0, 0.25);
        println!("# slope {:.3} (expected {}) {}\n", s.slope, spec.order + 1, if s.pass { "ok" } else { "off" });
    }
    Ok(())
}
