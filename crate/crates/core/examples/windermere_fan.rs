//! The global error split into local errors transported by the exact flow.
//!
//! ```bash
//! cargo run -p homflow --example windermere_fan
//! ```

use homflow::analysis::windermere_decomposition;
use homflow::integrators::{uniform_grid, MethodSpec};
use homflow::space::{sample_field, sample_point, FieldParams, Space};

fn main() -> homflow::Result<()> {
    let space = Space::Sphere(3);
    let v = sample_field(space, "sphere-nonlinear", &FieldParams::default())?;
    let x0 = sample_point(space, 11);
    let r = windermere_decomposition(&MethodSpec::lie_euler(), &v, &x0, &uniform_grid(0.0, 1.0, 16))?;

    println!("{:>6} {:>11} {:>11} {:>11}", "t", "e_i", "E_i", "bound");
    for s in &r.steps {
        println!("{:>6.4} {:>11.3e} {:>11.3e} {:>11.3e}", s.t, s.local, s.transported, s.transport_bound);
    }
    println!("global error {:.3e} <= sum E_i {:.3e} <= closing {:.3e}", r.global_error, r.sum_transported, r.closing_bound);
    println!("checks: {}", if r.pass() { "pass" } else { "fail" });
    Ok(())
}
